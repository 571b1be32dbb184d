"""Purification-optimizer checks: closed forms, bounds, gradient, determinism."""

import numpy as np
import pytest

from eopkit.eop import (
    AncillaPartition,
    EopResult,
    OptimizerConfig,
    bipartite_marginal,
    eop_bipartite,
    gap_bipartite,
    generalized_eop,
    generalized_gap,
    params_from_unitary,
    purified_state,
    unitary_from_params,
    verify_monotonicity,
    verify_polygamy,
    _ordered_factorizations,
    _problem_from_density,
)
from eopkit.errors import CapacityError, ConfigError, DomainError, RegionError
from eopkit.qdense import (
    DensityOperator,
    PartySpec,
    entropy,
    entropy_of_region,
    mutual_information,
    partial_trace,
    tensor,
)

from conftest import (
    LOG2,
    bell_state,
    ghz_state,
    gsd_state,
    qubits,
    random_mixed,
    random_pure,
    shannon,
    w_state,
)


def _haar(rng, d):
    z = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    q, r = np.linalg.qr(z)
    return q * (np.diagonal(r) / np.abs(np.diagonal(r)))


# ---------------------------------------------------------------------------
# parametrization and factorizations
# ---------------------------------------------------------------------------

def test_unitary_params_round_trip():
    rng = np.random.default_rng(11)
    for d in (1, 2, 4):
        u = _haar(rng, d)
        p = params_from_unitary(u)
        assert p.shape == (d * d,) and p.dtype == float
        v = unitary_from_params(p, d)
        assert np.allclose(v, u, atol=1e-10)
        assert np.allclose(v.conj().T @ v, np.eye(d), atol=1e-12)


def test_unitary_params_permutation_round_trip():
    # permutation matrices have eigenvalue -1: the log branch must still close
    swap = np.eye(4)[[1, 0, 3, 2]].astype(complex)
    v = unitary_from_params(params_from_unitary(swap), 4)
    assert np.allclose(v, swap, atol=1e-10)


def test_unitary_params_length_check():
    with pytest.raises(DomainError):
        unitary_from_params(np.zeros(5), 2)


def test_ordered_factorizations():
    facs = _ordered_factorizations(8, 3)
    assert len(facs) == len(set(facs)) == 10
    assert all(int(np.prod(f)) == 8 for f in facs)
    assert (2, 2, 2) in facs and (8, 1, 1) in facs
    assert _ordered_factorizations(1, 2) == [(1, 1)]


def test_ancilla_partition_validation():
    assert AncillaPartition((2, 2)).total_dim == 4
    with pytest.raises(DomainError):
        AncillaPartition((2, 0))


def test_config_validation():
    with pytest.raises(ConfigError):
        OptimizerConfig(restarts=0)
    with pytest.raises(ConfigError):
        OptimizerConfig(grad_tol=0.0)


# ---------------------------------------------------------------------------
# bipartite closed forms
# ---------------------------------------------------------------------------

def test_eop_pure_state_is_marginal_entropy():
    res = eop_bipartite(bell_state().density())
    assert abs(res.value - LOG2) < 1e-9
    assert res.best_partition.factor_dims == (1, 1)
    assert res.converged


def test_eop_product_state_is_zero():
    rho_a = random_mixed(PartySpec([("A", 2)]), seed=3)
    rho_b = random_mixed(PartySpec([("B", 2)]), seed=4)
    res = eop_bipartite(tensor(rho_a, rho_b))
    assert res.value <= 1e-6
    assert res.lower_bound <= res.value <= res.upper_bound + 1e-9


def test_eop_ghz_marginal_closed_form():
    rho = partial_trace(ghz_state(3), ["A", "B"])
    res = eop_bipartite(rho)
    assert abs(res.value - LOG2) < 1e-4


def test_gap_bell_is_zero():
    assert abs(gap_bipartite(bell_state().density())) < 1e-9


def test_gap_ghz_marginal_is_log2():
    rho = partial_trace(ghz_state(3), ["A", "B"])
    assert abs(gap_bipartite(rho) - LOG2) < 2e-4


def test_gap_w_marginal_strictly_positive():
    rho = partial_trace(w_state(), ["A", "B"])
    cfg = OptimizerConfig(restarts=32, ancilla_dim=4, seed=5)
    g = gap_bipartite(rho, cfg)
    assert g > 0.05

    # cross-check against a dense grid of random purifier rotations
    problem = _problem_from_density(rho, cfg)
    rng = np.random.default_rng(99)
    grid = min(
        problem.objective(_haar(rng, 4), dims)
        for dims in ((2, 2), (4, 1), (1, 4))
        for _ in range(70)
    )
    mutual = sum(problem.block_entropies) - problem.alpha_entropy
    assert grid - mutual > 0.05  # even the grid's best leaves a positive gap
    res = eop_bipartite(rho, cfg)
    assert 2.0 * res.value <= grid + 1e-6  # the optimizer beats random search


def test_eop_rejects_wrong_party_count():
    rho = random_mixed(qubits("A", "B", "C"), seed=1)
    with pytest.raises(DomainError):
        eop_bipartite(rho)


def test_gap_is_never_meaningfully_negative():
    for seed in range(5):
        rho = random_mixed(qubits("A", "B"), seed=100 + seed, purifier_dim=2)
        assert gap_bipartite(rho, OptimizerConfig(restarts=2, seed=seed)) >= -1e-6


# ---------------------------------------------------------------------------
# sandwich bounds and trace behaviour
# ---------------------------------------------------------------------------

def test_bounds_sandwich_every_result():
    for seed in range(8):
        spec = PartySpec([("A", 2), ("B", 3)])
        rho = random_mixed(spec, seed=200 + seed, purifier_dim=3)
        res = eop_bipartite(rho, OptimizerConfig(restarts=2, seed=seed))
        s_a = entropy(partial_trace(rho, "A"))
        s_b = entropy(partial_trace(rho, "B"))
        half_mi = 0.5 * mutual_information(rho, "A", "B")
        assert res.lower_bound - 1e-9 <= res.value <= res.upper_bound + 1e-9
        assert half_mi - 1e-9 <= res.value <= min(s_a, s_b) + 1e-9
        assert abs(res.lower_bound - half_mi) < 1e-9


def test_trace_is_non_increasing():
    rho = partial_trace(w_state(), ["A", "B"])
    res = eop_bipartite(rho, OptimizerConfig(restarts=4, ancilla_dim=4, seed=2))
    diffs = np.diff(res.trace)
    assert np.all(diffs <= 1e-12)
    assert res.iterations == len(res.trace) - 1


def test_capacity_errors():
    rho = partial_trace(ghz_state(3), ["A", "B"])  # rank 2
    with pytest.raises(CapacityError):
        eop_bipartite(rho, OptimizerConfig(ancilla_dim=1))
    with pytest.raises(CapacityError):
        eop_bipartite(rho, OptimizerConfig(ancilla_cap=1))


# ---------------------------------------------------------------------------
# generalized form
# ---------------------------------------------------------------------------

def test_generalized_matches_bipartite_on_two_blocks():
    psi = random_pure(qubits("A", "B", "C"), seed=7)
    cfg = OptimizerConfig(restarts=4, seed=7)
    gen = generalized_eop(psi, [["A"], ["B"]], cfg)
    bip = eop_bipartite(bipartite_marginal(psi, "A", "B"), cfg)
    assert abs(gen.value - bip.value) < 1e-6


def test_generalized_ghz4_three_blocks():
    res = generalized_eop(ghz_state(4), ["A", "B", "C"])
    assert abs(res.value - 1.5 * LOG2) < 1e-3


def test_generalized_gsd_closed_form():
    probs = (0.5, 0.3, 0.2)
    psi = gsd_state(probs, 4)
    res = generalized_eop(psi, ["A", "B", "C"])
    assert abs(res.value - 1.5 * shannon(probs)) < 2e-3


def test_generalized_pure_on_alpha():
    probs = (0.5, 0.3, 0.2)
    psi = gsd_state(probs, 3)
    res = generalized_eop(psi, ["A", "B", "C"])  # no purifier at all
    assert abs(res.value - 1.5 * shannon(probs)) < 1e-9
    assert res.best_partition.total_dim == 1


def test_generalized_block_validation():
    psi = ghz_state(3)
    with pytest.raises(RegionError):
        generalized_eop(psi, [["A", "B"], ["B"]])
    with pytest.raises(RegionError):
        generalized_eop(psi, [["A"], ["Z"]])
    with pytest.raises(DomainError):
        generalized_eop(psi, [["A", "B"]])


def test_generalized_multiparty_blocks():
    psi = ghz_state(4)
    res = generalized_eop(psi, [["A", "B"], ["C"]])
    assert res.lower_bound - 1e-9 <= res.value <= res.upper_bound + 1e-9


# ---------------------------------------------------------------------------
# gap reports
# ---------------------------------------------------------------------------

def test_gap_two_producible_pair_of_bells():
    # A entangled only with P1, B only with P2: the gap must close exactly
    psi = tensor(bell_state("A", "P1"), bell_state("B", "P2"))
    rep = generalized_gap(psi, [["A"], ["B"]])
    assert -1e-6 <= rep.gap <= 1e-5
    assert abs(rep.gap - rep.cmi_gap) < 1e-8
    assert all(t >= -1e-6 for t in rep.cmi_terms)


def test_gap_ghz_chain_half_log2():
    for n_alpha in (2, 3):
        psi = ghz_state(n_alpha + 1)
        alpha = [[chr(ord("A") + i)] for i in range(n_alpha)]
        rep = generalized_gap(psi, alpha)
        assert abs(rep.gap - 0.5 * LOG2) < 1e-3


def test_gap_bipartite_convention():
    psi = ghz_state(3)
    rep = generalized_gap(psi, [["A"], ["B"]])
    g_pair = gap_bipartite(bipartite_marginal(psi, "A", "B"))
    assert abs(rep.gap - 0.5 * g_pair) < 1e-6


def test_gap_report_cmi_consistency_random():
    for seed in range(4):
        psi = random_pure(qubits("A", "B", "C", "D"), seed=300 + seed)
        rep = generalized_gap(psi, [["A"], ["B"]],
                              OptimizerConfig(restarts=2, seed=seed))
        assert rep.gap >= -1e-6
        assert abs(rep.gap - rep.cmi_gap) < 1e-8
        assert all(t >= -1e-6 for t in rep.cmi_terms)
        assert abs(rep.gap - (rep.result.value
                              - 0.5 * (rep.entropy_sum - rep.alpha_entropy))) < 1e-12


# ---------------------------------------------------------------------------
# gradient, determinism, refinement
# ---------------------------------------------------------------------------

def test_gradient_matches_central_differences():
    step = 1e-5
    for trial in range(20):
        rng = np.random.default_rng(500 + trial)
        rho = random_mixed(qubits("A", "B"), seed=500 + trial, purifier_dim=4)
        problem = _problem_from_density(rho, OptimizerConfig(ancilla_dim=4))
        dims = (2, 2)
        u0 = _haar(rng, 4)
        _, grad = problem.objective_and_grad(u0, dims)
        w = grad.conj()  # d f / d U
        x = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        xi = x - x.conj().T  # tangent direction: anti-Hermitian generator
        analytic = 2.0 * float(np.real(np.sum(w * (xi @ u0))))
        expm = lambda t: _expm_antiherm(t, xi)
        fd = (problem.objective(expm(step) @ u0, dims)
              - problem.objective(expm(-step) @ u0, dims)) / (2 * step)
        assert abs(fd - analytic) <= 1e-6 * max(1.0, abs(analytic))


def _expm_antiherm(t, xi):
    s, z = np.linalg.eigh(1j * xi)
    return (z * np.exp(-1j * t * s)) @ z.conj().T


def test_seed_determinism():
    rho = partial_trace(w_state(), ["A", "B"])
    cfg = OptimizerConfig(restarts=6, ancilla_dim=4, seed=42)
    r1 = eop_bipartite(rho, cfg)
    r2 = eop_bipartite(rho, OptimizerConfig(restarts=6, ancilla_dim=4, seed=42))
    assert r1.value == r2.value
    assert np.array_equal(r1.unitary_params, r2.unitary_params)
    assert r1.trace == r2.trace
    assert r1.best_partition == r2.best_partition


def test_warm_start_makes_refinement_monotone():
    rho = partial_trace(w_state(), ["A", "B"])
    coarse = eop_bipartite(rho, OptimizerConfig(restarts=2, seed=1))
    fine = eop_bipartite(rho, OptimizerConfig(
        restarts=2, seed=1, ancilla_dim=4,
        warm_start=(coarse.best_partition.factor_dims, coarse.unitary()),
    ))
    assert fine.value <= coarse.value + 1e-9


# ---------------------------------------------------------------------------
# purified state reconstruction
# ---------------------------------------------------------------------------

def test_purified_state_reproduces_optimum():
    psi = random_pure(qubits("A", "B", "C"), seed=12)
    cfg = OptimizerConfig(restarts=2, seed=12)
    res = generalized_eop(psi, [["A"], ["B"]], cfg)
    out = purified_state(psi, [["A"], ["B"]], res)
    assert out.spec.labels == ("A", "B", "A~", "B~")
    assert abs(np.linalg.norm(out.amplitudes) - 1.0) < 1e-9
    # the alpha marginal is untouched by the purifier rotation
    want = partial_trace(psi, ["A", "B"]).matrix
    got = partial_trace(out, ["A", "B"]).matrix
    assert np.allclose(got, want, atol=1e-10)
    # and each S(A_i R_i) matches the recorded term entropies
    for lab, s_want in zip(("A", "B"), res.term_entropies):
        assert abs(entropy_of_region(out, [lab, lab + "~"]) - s_want) < 1e-8


def test_purified_state_rejects_mismatched_result():
    psi = random_pure(qubits("A", "B", "C"), seed=12)
    res = generalized_eop(psi, [["A"], ["B"]], OptimizerConfig(restarts=1))
    with pytest.raises(DomainError):
        purified_state(psi, [["A"], ["B"], ["C"]], res)


def test_bipartite_marginal_merges_blocks():
    rho = bipartite_marginal(ghz_state(3), "A", ["B", "C"])
    assert rho.spec.labels == ("A", "B+C")
    assert rho.spec.dims == (2, 4)
    assert abs(entropy(partial_trace(rho, "A")) - LOG2) < 1e-12


# ---------------------------------------------------------------------------
# inequality verifiers
# ---------------------------------------------------------------------------

def test_polygamy_ghz3():
    rep = verify_polygamy(ghz_state(3))
    assert abs(rep.slack - LOG2) < 5e-3
    assert not rep.flagged
    assert abs(rep.e_a_bc - LOG2) < 1e-9


def test_polygamy_random_states():
    for seed in range(3):
        psi = random_pure(qubits("A", "B", "C"), seed=600 + seed)
        rep = verify_polygamy(psi, OptimizerConfig(restarts=2, seed=seed))
        assert not rep.flagged


def test_monotonicity_discard():
    for seed in range(3):
        rho = random_mixed(qubits("A", "B", "C"), seed=700 + seed, purifier_dim=2)
        rep = verify_monotonicity(rho, "C", OptimizerConfig(restarts=2, seed=seed))
        assert not rep.flagged
    with pytest.raises(RegionError):
        verify_monotonicity(random_mixed(qubits("A", "B"), seed=1), "A")
