"""Dense-core checks: marginals, entropies, fidelity, purification."""

import numpy as np
import pytest

from eopkit.errors import DomainError, RegionError
from eopkit.qdense import (
    EPS_EIG,
    DensityOperator,
    PartySpec,
    PureState,
    canonical_purification,
    conditional_mutual_information,
    entropy,
    entropy_of_region,
    fidelity,
    haar_random_pure,
    log_negativity,
    markov_gap,
    mutual_information,
    partial_trace,
    permute_parties,
    reflected_entropy,
    relative_entropy,
    tensor,
)

from conftest import LOG2, basis_state, bell_state, ghz_state, qubits, random_mixed


# ---------------------------------------------------------------------------
# partial trace
# ---------------------------------------------------------------------------

def test_partial_trace_bell_is_maximally_mixed(bell):
    rho_a = partial_trace(bell.density(), "A")
    assert np.allclose(rho_a.matrix, np.eye(2) / 2, atol=1e-12)


def test_partial_trace_product_state():
    spec = qubits("A", "B")
    psi = basis_state(spec, 0b01)  # |0>_A |1>_B
    rho_b = partial_trace(psi.density(), "B")
    assert np.allclose(rho_b.matrix, np.diag([0.0, 1.0]), atol=1e-12)


def test_partial_trace_ghz_marginal(ghz3):
    rho_ab = partial_trace(ghz3, ("A", "B"))
    expect = np.zeros((4, 4))
    expect[0, 0] = expect[3, 3] = 0.5
    assert np.allclose(rho_ab.matrix, expect, atol=1e-12)
    assert abs(np.trace(rho_ab.matrix) - 1) < 1e-12


def test_partial_trace_unknown_label(bell):
    with pytest.raises(RegionError):
        partial_trace(bell.density(), "Z")


def test_partial_trace_pure_and_dense_paths_agree():
    spec = PartySpec([("A", 2), ("B", 3), ("C", 2)])
    psi = haar_random_pure(spec, 7)
    for keep in ["A", ("A", "C"), ("B",)]:
        assert np.allclose(partial_trace(psi, keep).matrix,
                           partial_trace(psi.density(), keep).matrix, atol=1e-10)


# ---------------------------------------------------------------------------
# entropy
# ---------------------------------------------------------------------------

def test_entropy_pure_is_zero(bell):
    assert entropy(bell.density()) < 1e-12


def test_entropy_maximally_mixed_qubit():
    rho = DensityOperator(np.eye(2) / 2, qubits("A"))
    assert abs(entropy(rho) - LOG2) < 1e-12


def test_entropy_spectrum_07_03():
    rho = DensityOperator(np.diag([0.7, 0.3]), qubits("A"))
    expect = -(0.7 * np.log(0.7) + 0.3 * np.log(0.3))
    assert abs(entropy(rho) - expect) < 1e-12


def test_entropy_rejects_bad_spectrum():
    mat = np.diag([1.5, -0.5])
    with pytest.raises(DomainError):
        entropy(DensityOperator(mat, qubits("A")))


def test_purity_consistency():
    # S(X) == S(complement X) for pure states
    spec = PartySpec([("A", 2), ("B", 3), ("C", 4)])
    for seed in range(5):
        psi = haar_random_pure(spec, seed)
        s_a = entropy(partial_trace(psi, "A"))
        s_bc = entropy(partial_trace(psi, ("B", "C")))
        assert abs(s_a - s_bc) < 1e-9
        assert abs(entropy_of_region(psi, "A") - s_a) < 1e-10


# ---------------------------------------------------------------------------
# mutual information / CMI
# ---------------------------------------------------------------------------

def test_mutual_information_bell(bell):
    assert abs(mutual_information(bell.density(), "A", "B") - 2 * LOG2) < 1e-12


def test_mutual_information_product():
    rho = tensor(random_mixed(qubits("A"), 3), random_mixed(qubits("B"), 4))
    assert abs(mutual_information(rho, "A", "B")) < 1e-10


def test_mutual_information_ghz_marginal(ghz3):
    rho_ab = partial_trace(ghz3, ("A", "B"))
    assert abs(mutual_information(rho_ab, "A", "B") - LOG2) < 1e-12


def test_mutual_information_overlap_rejected(bell):
    with pytest.raises(RegionError):
        mutual_information(bell.density(), "A", ("A", "B"))


def test_cmi_product_zero():
    rho = tensor(tensor(random_mixed(qubits("A"), 5), random_mixed(qubits("B"), 6)),
                 random_mixed(qubits("C"), 7))
    assert abs(conditional_mutual_information(rho, "A", "C", "B")) < 1e-9


def test_cmi_ghz_family():
    # pure GHZ3 is NOT a Markov chain: I(A:C|B) = log 2 exactly
    ghz3 = ghz_state(3)
    assert abs(conditional_mutual_information(ghz3, "A", "C", "B") - LOG2) < 1e-9
    # ... but its canonical-purification relative (GHZ4) and the classical
    # correlated mixture both are: I(A:C|B) = 0
    ghz4 = ghz_state(4)
    assert abs(conditional_mutual_information(ghz4, "A", "C", "B")) < 1e-9
    mix = np.zeros((8, 8))
    mix[0, 0] = mix[7, 7] = 0.5
    rho = DensityOperator(mix, qubits("A", "B", "C"))
    assert abs(conditional_mutual_information(rho, "A", "C", "B")) < 1e-9


def test_strong_subadditivity_sample():
    spec = qubits("A", "B", "C", "D")
    for seed in range(40):
        psi = haar_random_pure(spec, 100 + seed)
        assert conditional_mutual_information(psi, "A", "C", "B") >= -1e-9


# ---------------------------------------------------------------------------
# relative entropy
# ---------------------------------------------------------------------------

def test_relative_entropy_self_zero():
    rho = random_mixed(qubits("A", "B"), 11)
    assert abs(relative_entropy(rho, rho)) < 1e-10


def test_relative_entropy_equals_mi():
    rho = random_mixed(qubits("A", "B"), 12)
    prod = tensor(partial_trace(rho, "A"), partial_trace(rho, "B"))
    d = relative_entropy(rho, prod)
    assert abs(d - mutual_information(rho, "A", "B")) < 1e-8


def test_relative_entropy_support_violation_is_inf():
    sigma = basis_state(qubits("A"), 0).density()
    rho = DensityOperator(np.eye(2) / 2, qubits("A"))
    assert relative_entropy(rho, sigma) == float("inf")


def test_relative_entropy_pure_vs_full_rank():
    for seed in range(10):
        rho = haar_random_pure(qubits("A", "B"), 200 + seed).density()
        sigma = random_mixed(qubits("A", "B"), 300 + seed)
        d = relative_entropy(rho, sigma)
        assert np.isfinite(d) and d >= -1e-10


# ---------------------------------------------------------------------------
# fidelity
# ---------------------------------------------------------------------------

def test_fidelity_self_is_one():
    rho = random_mixed(qubits("A", "B"), 21)
    assert abs(fidelity(rho, rho) - 1) < 1e-9


def test_fidelity_orthogonal_pure():
    a = basis_state(qubits("A"), 0).density()
    b = basis_state(qubits("A"), 1).density()
    assert fidelity(a, b) < 1e-8


def test_fidelity_pure_vs_mixed_closed_form():
    rho = basis_state(qubits("A"), 0).density()
    sigma = DensityOperator(np.eye(2) / 2, qubits("A"))
    assert abs(fidelity(rho, sigma) - 1 / np.sqrt(2)) < 1e-12


def test_fidelity_symmetric():
    rho = random_mixed(qubits("A"), 22)
    sigma = random_mixed(qubits("A"), 23)
    assert abs(fidelity(rho, sigma) - fidelity(sigma, rho)) < 1e-10


# ---------------------------------------------------------------------------
# log negativity
# ---------------------------------------------------------------------------

def test_log_negativity_bell(bell):
    assert abs(log_negativity(bell.density(), "A", "B") - LOG2) < 1e-12


def test_log_negativity_product_zero():
    rho = tensor(random_mixed(qubits("A"), 31), random_mixed(qubits("B"), 32))
    assert log_negativity(rho, "A", "B") < 1e-10


def test_log_negativity_ghz_marginal_separable(ghz3):
    rho_ab = partial_trace(ghz3, ("A", "B"))
    assert log_negativity(rho_ab, "A", "B") < 1e-12


# ---------------------------------------------------------------------------
# canonical purification, reflected entropy
# ---------------------------------------------------------------------------

def test_purification_of_pure_state():
    psi = haar_random_pure(qubits("A"), 41)
    purif = canonical_purification(psi.density())
    assert purif.spec.labels == ("A", "A~")
    mirror = partial_trace(purif, "A~")
    assert entropy(mirror) < 1e-9  # mirror marginal pure


def test_purification_maximally_mixed_gives_bell():
    rho = DensityOperator(np.eye(2) / 2, qubits("A"))
    purif = canonical_purification(rho)
    target = np.array([1, 0, 0, 1]) / np.sqrt(2)
    assert abs(abs(np.vdot(target, purif.amplitudes)) - 1) < 1e-12


def test_purification_ghz_marginal_is_ghz4(ghz3):
    rho_ab = partial_trace(ghz3, ("A", "B"))
    purif = canonical_purification(rho_ab)
    assert purif.spec.labels == ("A", "B", "A~", "B~")
    target = np.zeros(16)
    target[0] = target[15] = 1 / np.sqrt(2)
    assert abs(abs(np.vdot(target, purif.amplitudes)) - 1) < 1e-10


def test_purification_round_trip():
    spec = PartySpec([("A", 2), ("B", 3)])
    rho = random_mixed(spec, 42)
    purif = canonical_purification(rho)
    back = partial_trace(purif, ("A", "B"))
    assert np.abs(back.matrix - rho.matrix).max() < 1e-10


def test_reflected_entropy_product_zero():
    rho = tensor(random_mixed(qubits("A"), 51), random_mixed(qubits("B"), 52))
    assert abs(reflected_entropy(rho, "A", "B")) < 1e-8
    assert abs(markov_gap(rho, "A", "B")) < 1e-8


def test_reflected_entropy_bell(bell):
    assert abs(reflected_entropy(bell.density(), "A", "B") - 2 * LOG2) < 1e-10
    assert abs(markov_gap(bell.density(), "A", "B")) < 1e-9


def test_reflected_entropy_ghz_marginal(ghz3):
    rho_ab = partial_trace(ghz3, ("A", "B"))
    assert abs(reflected_entropy(rho_ab, "A", "B") - LOG2) < 1e-10
    assert abs(markov_gap(rho_ab, "A", "B")) < 1e-9


def test_reflected_entropy_sandwich():
    for seed in range(8):
        rho = random_mixed(qubits("A", "B"), 600 + seed, purifier_dim=3)
        s_r = reflected_entropy(rho, "A", "B")
        mi = mutual_information(rho, "A", "B")
        s_min = min(entropy(partial_trace(rho, "A")), entropy(partial_trace(rho, "B")))
        assert mi - 1e-9 <= s_r <= 2 * s_min + 1e-9
        assert markov_gap(rho, "A", "B") >= -1e-9


# ---------------------------------------------------------------------------
# haar sampling
# ---------------------------------------------------------------------------

def test_haar_dim_one():
    psi = haar_random_pure(PartySpec([("A", 1)]), 0)
    assert abs(abs(psi.amplitudes[0]) - 1) < 1e-12


def test_haar_deterministic():
    spec = qubits("A", "B")
    a = haar_random_pure(spec, 99)
    b = haar_random_pure(spec, 99)
    assert np.array_equal(a.amplitudes, b.amplitudes)


def test_haar_mean_entropy_matches_average_oracle():
    # direct average of S(A) over 2+2 qubit Haar states: 664789/720720 nats
    target = 0.9223956598956599
    spec = PartySpec([("A", 4), ("B", 4)])
    vals = [entropy_of_region(haar_random_pure(spec, 50_000 + i), "A")
            for i in range(4000)]
    sem = np.std(vals) / np.sqrt(len(vals))
    assert abs(np.mean(vals) - target) < 3 * sem


# ---------------------------------------------------------------------------
# assembly helpers
# ---------------------------------------------------------------------------

def test_permute_parties_round_trip():
    spec = PartySpec([("A", 2), ("B", 3), ("C", 2)])
    psi = haar_random_pure(spec, 61)
    flipped = permute_parties(psi, ("C", "A", "B"))
    assert flipped.spec.labels == ("C", "A", "B")
    back = permute_parties(flipped, ("A", "B", "C"))
    assert np.allclose(back.amplitudes, psi.amplitudes)
    rho = psi.density()
    rho_p = permute_parties(rho, ("C", "A", "B"))
    assert abs(entropy(partial_trace(rho_p, "A")) - entropy(partial_trace(rho, "A"))) < 1e-12


def test_density_operator_validation():
    with pytest.raises(DomainError):
        DensityOperator(np.array([[0.5, 0.3], [0.1, 0.5]]), qubits("A"))  # not hermitian
    with pytest.raises(DomainError):
        DensityOperator(np.eye(2), qubits("A"))  # trace 2


def test_pure_state_validation():
    with pytest.raises(DomainError):
        PureState(np.array([1.0, 1.0]), qubits("A"))  # unnormalized
