"""Dense linear-algebra core: labeled states, marginals, and entropic functionals.

Every quantity is reported in nats.  Parties are named; a "region" is a label
or sequence of labels drawn from a state's :class:`PartySpec`.  All functions
are pure and safe to call concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence, Union

import numpy as np

from .errors import DomainError, RegionError

#: eigenvalues below this are treated as zero (inside logs and support tests)
EPS_EIG = 1e-12

#: suffix appended to a party label to name its mirror in the canonical purification
MIRROR_SUFFIX = "~"

RegionLike = Union[str, Sequence[str]]


# ---------------------------------------------------------------------------
# domain types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PartySpec:
    """Ordered, named parties with local dimensions.

    Parameters
    ----------
    parties : sequence of (label, dim)
        Labels must be unique non-empty strings, dims positive integers.
    """

    parties: tuple

    def __init__(self, parties):
        parties = tuple((str(lab), int(dim)) for lab, dim in parties)
        labels = [lab for lab, _ in parties]
        if len(set(labels)) != len(labels):
            raise RegionError(f"duplicate party labels in {labels}")
        if not all(dim >= 1 for _, dim in parties):
            raise DomainError("party dimensions must be >= 1")
        object.__setattr__(self, "parties", parties)

    @property
    def labels(self):
        return tuple(lab for lab, _ in self.parties)

    @property
    def dims(self):
        return tuple(dim for _, dim in self.parties)

    @property
    def total_dim(self):
        return int(np.prod(self.dims, dtype=np.int64)) if self.parties else 1

    def dim(self, label):
        return self.dims[self.index(label)]

    def index(self, label):
        try:
            return self.labels.index(label)
        except ValueError:
            raise RegionError(f"unknown party label {label!r}; have {self.labels}") from None

    def positions(self, region: RegionLike):
        """Positions of the region's labels, in spec order."""
        labels = normalize_region(region)
        pos = sorted(self.index(lab) for lab in labels)
        return tuple(pos)

    def restrict(self, region: RegionLike) -> "PartySpec":
        pos = self.positions(region)
        return PartySpec([self.parties[i] for i in pos])

    def region_dim(self, region: RegionLike) -> int:
        pos = self.positions(region)
        return int(np.prod([self.dims[i] for i in pos], dtype=np.int64)) if pos else 1


def normalize_region(region: RegionLike):
    """Normalize a region argument (single label or sequence) to a label tuple."""
    if isinstance(region, str):
        return (region,)
    labels = tuple(str(lab) for lab in region)
    if len(set(labels)) != len(labels):
        raise RegionError(f"region repeats labels: {labels}")
    return labels


def _check_disjoint(*regions):
    seen = set()
    for region in regions:
        labels = set(normalize_region(region))
        if labels & seen:
            raise RegionError(f"regions overlap on {sorted(labels & seen)}")
        seen |= labels


@dataclass(frozen=True)
class PureState:
    """A normalized state vector tagged with a :class:`PartySpec`.

    Amplitudes are row-major over the parties in spec order.
    """

    amplitudes: np.ndarray
    spec: PartySpec

    def __init__(self, amplitudes, spec):
        amp = np.asarray(amplitudes, dtype=np.complex128).reshape(-1).copy()
        if amp.size != spec.total_dim:
            raise DomainError(
                f"amplitude length {amp.size} != total dimension {spec.total_dim}")
        norm = np.linalg.norm(amp)
        if abs(norm - 1.0) > 1e-9:
            raise DomainError(f"state vector norm {norm} is not 1")
        amp.flags.writeable = False
        object.__setattr__(self, "amplitudes", amp)
        object.__setattr__(self, "spec", spec)

    def tensor_view(self):
        """The amplitude array reshaped to one axis per party."""
        return self.amplitudes.reshape(self.spec.dims or (1,))

    def density(self) -> "DensityOperator":
        return DensityOperator(np.outer(self.amplitudes, self.amplitudes.conj()), self.spec)


@dataclass(frozen=True)
class DensityOperator:
    """A density matrix tagged with a :class:`PartySpec`.

    Hermiticity and unit trace are enforced at construction (1e-10); positivity
    is checked where spectra are actually taken.
    """

    matrix: np.ndarray
    spec: PartySpec

    def __init__(self, matrix, spec):
        mat = np.asarray(matrix, dtype=np.complex128).copy()
        d = spec.total_dim
        if mat.shape != (d, d):
            raise DomainError(f"matrix shape {mat.shape} != ({d}, {d})")
        if np.abs(mat - mat.conj().T).max() > 1e-10:
            raise DomainError("matrix is not Hermitian within 1e-10")
        tr = np.trace(mat).real
        if abs(tr - 1.0) > 1e-10:
            raise DomainError(f"trace {tr} is not 1 within 1e-10")
        mat.flags.writeable = False
        object.__setattr__(self, "matrix", mat)
        object.__setattr__(self, "spec", spec)


# ---------------------------------------------------------------------------
# internal spectral helpers
# ---------------------------------------------------------------------------

def _eigvalsh_checked(mat, what="operator"):
    w = np.linalg.eigvalsh(mat)
    if w.min() < -1e-8:
        raise DomainError(f"{what} has negative eigenvalue {w.min():g}")
    return w


def _entropy_from_probs(p):
    p = np.asarray(p, dtype=float)
    p = p[p > EPS_EIG]
    if p.size == 0:
        return 0.0
    return float(-(p * np.log(p)).sum())


def _sqrtm_psd(mat):
    w, v = np.linalg.eigh(mat)
    w = np.clip(w, 0.0, None)
    return (v * np.sqrt(w)) @ v.conj().T


# ---------------------------------------------------------------------------
# marginals
# ---------------------------------------------------------------------------

def partial_trace(state, keep: RegionLike) -> DensityOperator:
    """Trace out everything but ``keep``.

    Parameters
    ----------
    state : DensityOperator or PureState
    keep : region
        Labels to retain; the result's parties keep their spec order.

    Returns
    -------
    DensityOperator on the retained parties.
    """
    spec = state.spec
    keep_pos = spec.positions(keep)
    if isinstance(state, PureState):
        return _pure_marginal(state, keep_pos)
    dims = spec.dims
    k = len(dims)
    ket = list(range(k))
    # traced axes share the same index letter between ket and bra
    bra = [ket[i] if i not in keep_pos else i + k for i in range(k)]
    out = [i for i in keep_pos] + [i + k for i in keep_pos]
    t = state.matrix.reshape(dims + dims)
    reduced = np.einsum(t, ket + bra, out)
    d_keep = spec.region_dim(keep)
    return DensityOperator(reduced.reshape(d_keep, d_keep), spec.restrict(keep))


def _pure_marginal(psi: PureState, keep_pos) -> DensityOperator:
    spec = psi.spec
    dims = spec.dims
    rest = [i for i in range(len(dims)) if i not in keep_pos]
    t = psi.tensor_view().transpose(list(keep_pos) + rest)
    d_keep = int(np.prod([dims[i] for i in keep_pos], dtype=np.int64)) if keep_pos else 1
    m = t.reshape(d_keep, -1)
    rho = m @ m.conj().T
    # enforce exact hermiticity against accumulated roundoff
    rho = 0.5 * (rho + rho.conj().T)
    sub = PartySpec([spec.parties[i] for i in keep_pos])
    return DensityOperator(rho / np.trace(rho).real, sub)


def entropy_of_region(psi: PureState, region: RegionLike) -> float:
    """Entanglement entropy of ``region`` in a pure state, via singular values."""
    spec = psi.spec
    pos = spec.positions(region)
    rest = [i for i in range(len(spec.dims)) if i not in pos]
    d_reg = int(np.prod([spec.dims[i] for i in pos], dtype=np.int64)) if pos else 1
    m = psi.tensor_view().transpose(list(pos) + rest).reshape(d_reg, -1)
    s = np.linalg.svd(m, compute_uv=False)
    return _entropy_from_probs(s * s)


# ---------------------------------------------------------------------------
# entropic functionals
# ---------------------------------------------------------------------------

def entropy(state: DensityOperator) -> float:
    """Von Neumann entropy in nats.

    Eigenvalues below ``EPS_EIG`` are dropped; a spectrum below -1e-8 raises
    :class:`DomainError`.
    """
    w = _eigvalsh_checked(state.matrix, "density operator")
    return _entropy_from_probs(w)


def mutual_information(state, A: RegionLike, B: RegionLike) -> float:
    """I(A:B) = S(A) + S(B) - S(AB)."""
    _check_disjoint(A, B)
    a = normalize_region(A)
    b = normalize_region(B)
    s_a = entropy(partial_trace(state, a))
    s_b = entropy(partial_trace(state, b))
    s_ab = entropy(partial_trace(state, a + b))
    return s_a + s_b - s_ab


def conditional_mutual_information(state, A: RegionLike, C: RegionLike,
                                   B: RegionLike) -> float:
    """I(A:C|B) = S(AB) + S(CB) - S(B) - S(ACB).

    Non-negative by strong subadditivity (up to numerical tolerance).
    """
    _check_disjoint(A, C, B)
    a, c, b = normalize_region(A), normalize_region(C), normalize_region(B)
    if isinstance(state, PureState):
        s = lambda labs: entropy_of_region(state, labs) if labs else 0.0
    else:
        s = lambda labs: entropy(partial_trace(state, labs)) if labs else 0.0
    return s(a + b) + s(c + b) - s(b) - s(a + c + b)


def relative_entropy(rho: DensityOperator, sigma: DensityOperator) -> float:
    """D(rho || sigma) in nats; +inf when supp(rho) leaves supp(sigma).

    Parameters
    ----------
    rho, sigma : DensityOperator
        Must share the same PartySpec layout (labels and dims).

    Returns
    -------
    float (possibly ``inf``)
    """
    if rho.spec.parties != sigma.spec.parties:
        raise DomainError("relative_entropy requires matching party specs")
    w_s, v_s = np.linalg.eigh(sigma.matrix)
    r_in_s = v_s.conj().T @ rho.matrix @ v_s
    outside = w_s <= EPS_EIG
    if outside.any():
        leak = float(np.real(np.diag(r_in_s)[outside]).sum())
        if leak > 1e-10:
            return float("inf")
    w_r = _eigvalsh_checked(rho.matrix, "rho")
    tr_rho_log_rho = float((w_r[w_r > EPS_EIG] * np.log(w_r[w_r > EPS_EIG])).sum())
    inside = ~outside
    tr_rho_log_sigma = float(
        (np.real(np.diag(r_in_s)[inside]) * np.log(w_s[inside])).sum())
    return tr_rho_log_rho - tr_rho_log_sigma


def fidelity(rho: DensityOperator, sigma: DensityOperator) -> float:
    """Fidelity F = || sqrt(rho) sqrt(sigma) ||_1 (not squared), in [0, 1]."""
    if rho.spec.parties != sigma.spec.parties:
        raise DomainError("fidelity requires matching party specs")
    sr = _sqrtm_psd(rho.matrix)
    w = np.linalg.eigvalsh(sr @ sigma.matrix @ sr)
    w = np.clip(w, 0.0, None)
    return float(np.sqrt(w).sum())


def log_negativity(state, A: RegionLike, B: RegionLike) -> float:
    """E_N(A:B) = log || rho^{T_B} ||_1 of the marginal on A u B.

    The state is reduced to A u B first if it carries more parties.
    """
    _check_disjoint(A, B)
    a, b = normalize_region(A), normalize_region(B)
    marg = partial_trace(state, a + b)
    pos_a = marg.spec.positions(a)
    d_a = marg.spec.region_dim(a)
    d_b = marg.spec.region_dim(b)
    # move A axes in front of B axes on both sides, then transpose the B side
    dims = marg.spec.dims
    k = len(dims)
    pos_b = [i for i in range(k) if i not in pos_a]
    perm = list(pos_a) + pos_b
    t = marg.matrix.reshape(dims + dims)
    t = t.transpose(perm + [p + k for p in perm]).reshape(d_a, d_b, d_a, d_b)
    pt = t.transpose(0, 3, 2, 1).reshape(d_a * d_b, d_a * d_b)
    w = np.linalg.eigvalsh(pt)
    return max(float(np.log(np.abs(w).sum())), 0.0)


# ---------------------------------------------------------------------------
# canonical purification and derived quantities
# ---------------------------------------------------------------------------

def mirror_label(label: str) -> str:
    return label + MIRROR_SUFFIX


def canonical_purification(rho: DensityOperator) -> PureState:
    """The purification |sqrt(rho)> with mirror parties appended.

    The amplitude tensor is the matrix square root of ``rho`` with its row
    index on the original parties and its column index on mirror copies
    (labels suffixed with ``~``, same dims, appended after the originals in
    spec order); the pairing uses the computational basis.  Tracing out the
    mirrors returns ``rho``.
    """
    spec = rho.spec
    mirrors = [(mirror_label(lab), dim) for lab, dim in spec.parties]
    clash = set(spec.labels) & {lab for lab, _ in mirrors}
    if clash:
        raise RegionError(f"labels {sorted(clash)} collide with mirror names")
    amp = _sqrtm_psd(rho.matrix).reshape(-1)
    amp = amp / np.linalg.norm(amp)
    return PureState(amp, PartySpec(list(spec.parties) + mirrors))


def reflected_entropy(rho_AB: DensityOperator, A: RegionLike, B: RegionLike) -> float:
    """S_R(A:B) = S(A, mirror(A)) of the canonical purification.

    ``rho_AB`` must live on exactly A u B.
    """
    _check_disjoint(A, B)
    a, b = normalize_region(A), normalize_region(B)
    if set(a) | set(b) != set(rho_AB.spec.labels):
        raise RegionError("reflected_entropy needs a state on exactly A u B")
    purif = canonical_purification(rho_AB)
    region = a + tuple(mirror_label(lab) for lab in a)
    return entropy_of_region(purif, region)


def markov_gap(rho_AB: DensityOperator, A: RegionLike, B: RegionLike) -> float:
    """h(A:B) = S_R(A:B) - I(A:B) >= 0."""
    return reflected_entropy(rho_AB, A, B) - mutual_information(rho_AB, A, B)


# ---------------------------------------------------------------------------
# sampling and assembly helpers
# ---------------------------------------------------------------------------

def haar_random_pure(spec: PartySpec, seed) -> PureState:
    """A Haar-random pure state on ``spec``, deterministic per seed."""
    rng = np.random.default_rng(seed)
    d = spec.total_dim
    v = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return PureState(v / np.linalg.norm(v), spec)


def tensor(a, b):
    """Tensor product of two PureStates or two DensityOperators (specs concatenate)."""
    spec = PartySpec(list(a.spec.parties) + list(b.spec.parties))
    if isinstance(a, PureState) and isinstance(b, PureState):
        return PureState(np.kron(a.amplitudes, b.amplitudes), spec)
    if isinstance(a, DensityOperator) and isinstance(b, DensityOperator):
        return DensityOperator(np.kron(a.matrix, b.matrix), spec)
    raise TypeError("tensor() wants two PureStates or two DensityOperators")


def permute_parties(state, new_order: Sequence[str]):
    """Reorder a state's parties to ``new_order`` (a permutation of its labels)."""
    spec = state.spec
    order = [spec.index(lab) for lab in normalize_region(new_order)]
    if sorted(order) != list(range(len(spec.dims))):
        raise RegionError("new_order must be a permutation of all labels")
    new_spec = PartySpec([spec.parties[i] for i in order])
    if isinstance(state, PureState):
        amp = state.tensor_view().transpose(order).reshape(-1)
        return PureState(amp, new_spec)
    k = len(spec.dims)
    t = state.matrix.reshape(spec.dims + spec.dims)
    t = t.transpose(order + [i + k for i in order])
    d = spec.total_dim
    return DensityOperator(t.reshape(d, d), new_spec)
