"""Shared state builders for the test suite."""

import numpy as np
import pytest

from eopkit.qdense import PartySpec, PureState, DensityOperator, partial_trace

LOG2 = np.log(2.0)


def qubits(*labels):
    return PartySpec([(lab, 2) for lab in labels])


def basis_state(spec, index):
    amp = np.zeros(spec.total_dim, dtype=complex)
    amp[index] = 1.0
    return PureState(amp, spec)


def bell_state(label_a="A", label_b="B"):
    amp = np.array([1, 0, 0, 1], dtype=complex) / np.sqrt(2)
    return PureState(amp, qubits(label_a, label_b))


def ghz_state(n, labels=None):
    labels = labels or [chr(ord("A") + i) for i in range(n)]
    spec = qubits(*labels)
    amp = np.zeros(2 ** n, dtype=complex)
    amp[0] = amp[-1] = 1 / np.sqrt(2)
    return PureState(amp, spec)


def w_state(labels=("A", "B", "C")):
    spec = qubits(*labels)
    amp = np.zeros(8, dtype=complex)
    for k in range(3):
        amp[1 << (2 - k)] = 1 / np.sqrt(3)
    return PureState(amp, spec)


def random_mixed(spec, seed, purifier_dim=None):
    """Random full-rank-ish mixed state via a traced-out Haar purification."""
    from eopkit.qdense import haar_random_pure
    d = spec.total_dim
    purifier_dim = purifier_dim or d
    big = PartySpec(list(spec.parties) + [("_env", purifier_dim)])
    psi = haar_random_pure(big, seed)
    return partial_trace(psi, spec.labels)


def random_pure(spec, seed):
    from eopkit.qdense import haar_random_pure
    return haar_random_pure(spec, seed)


def gsd_state(probs, n, labels=None):
    """n-party Schmidt-diagonal state sum_k sqrt(p_k) |k,k,..,k>."""
    probs = np.asarray(probs, dtype=float)
    level = probs.size
    labels = labels or [chr(ord("A") + i) for i in range(n)]
    spec = PartySpec([(lab, level) for lab in labels])
    amp = np.zeros(level ** n, dtype=complex)
    stride = (level ** n - 1) // (level - 1)
    for k in range(level):
        amp[k * stride] = np.sqrt(probs[k])
    return PureState(amp, spec)


def shannon(probs):
    p = np.asarray(probs, dtype=float)
    p = p[p > 0]
    return float(-np.sum(p * np.log(p)))


def merge_parties(state, groups):
    """Regroup fine-grained labels into named composite parties of a PureState.

    groups is a list of (new_label, [old_labels...]); every old label must
    appear exactly once across the groups.
    """
    from eopkit.qdense import permute_parties
    order = [lab for _, labs in groups for lab in labs]
    arranged = permute_parties(state, order)
    parties = []
    for name, labs in groups:
        d = 1
        for lab in labs:
            d *= arranged.spec.dims[arranged.spec.index(lab)]
        parties.append((name, d))
    return PureState(arranged.amplitudes, PartySpec(parties))


def triangle_wiring():
    """Three 2-qubit parties joined pairwise by Bell pairs."""
    from eopkit.qdense import tensor
    psi = tensor(tensor(bell_state("a2", "b1"), bell_state("b2", "c1")),
                 bell_state("c2", "a1"))
    return merge_parties(psi, [("A", ["a1", "a2"]), ("B", ["b1", "b2"]),
                               ("C", ["c1", "c2"])])


def polygon_wiring(k):
    """k 2-qubit parties joined in a ring of Bell pairs."""
    from eopkit.qdense import tensor
    psi = None
    for i in range(k):
        link = bell_state(f"p{i}r", f"p{(i + 1) % k}l")
        psi = link if psi is None else tensor(psi, link)
    return merge_parties(psi, [(f"P{i}", [f"p{i}l", f"p{i}r"])
                               for i in range(k)])


def general_wiring():
    """Four parties tied by Bell pairs A-C, A-D, B-D plus a lone qubit on C."""
    from eopkit.qdense import tensor
    psi = tensor(tensor(bell_state("a1", "c1"), bell_state("a2", "d1")),
                 bell_state("b1", "d2"))
    psi = tensor(psi, basis_state(qubits("c2"), 0))
    return merge_parties(psi, [("A", ["a1", "a2"]), ("B", ["b1"]),
                               ("C", ["c1", "c2"]), ("D", ["d1", "d2"])])


def parity_state():
    """Even-parity three-qubit mixture purified into a 4-level recorder.

    The ABC marginal has zero mutual information between every pair of
    qubits yet carries one bit of tripartite correlation, which no product
    of at-most-two-party factors can reproduce.
    """
    amp = np.zeros((2, 2, 2, 4), dtype=complex)
    for idx, (a, b, c) in enumerate([(0, 0, 0), (0, 1, 1), (1, 0, 1), (1, 1, 0)]):
        amp[a, b, c, idx] = 0.5
    spec = PartySpec([("A", 2), ("B", 2), ("C", 2), ("D", 4)])
    return PureState(amp.reshape(-1), spec)


@pytest.fixture
def bell():
    return bell_state()


@pytest.fixture
def ghz3():
    return ghz_state(3)


@pytest.fixture
def ghz4():
    return ghz_state(4)
