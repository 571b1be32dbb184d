"""Entanglement of purification by Riemannian descent on the purifier unitary.

Given a state on named blocks A_1..A_n, we purify it, embed the purifier into
``C^D`` (D a power of two up to the configured cap), and factor ``C^D`` into
ancillas ``R_1 x .. x R_n`` in every ordered way.  For each factorization the
objective ``sum_i S(A_i R_i)`` is minimized over a D x D unitary rotating the
purifier, by gradient descent on the unitary group with an Armijo line
search.  The reported value ``(1/2) min sum_i S(A_i R_i)`` is always an upper
bound on the true minimum; the lower bound ``(1/2)(sum_i S(A_i) - S(rho))``
and the trivial-split upper bound come along exactly.

All entropies are in nats.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg

from .errors import CapacityError, ConfigError, DomainError, RegionError
from .qdense import (
    DensityOperator,
    PartySpec,
    PureState,
    EPS_EIG,
    mirror_label,
    normalize_region,
    partial_trace,
    permute_parties,
)

ARMIJO_C1 = 1e-4
MIN_STEP = 1e-12
TIE_TOL = 1e-12


@dataclass(frozen=True)
class AncillaPartition:
    """Ordered ancilla factor dims (r_1, ..., r_n); factor i belongs to A_i."""

    factor_dims: Tuple[int, ...]

    def __post_init__(self):
        if not self.factor_dims or any(r < 1 for r in self.factor_dims):
            raise DomainError("factor dims must be positive")

    @property
    def total_dim(self) -> int:
        return int(np.prod(self.factor_dims, dtype=np.int64))


@dataclass(eq=False)
class OptimizerConfig:
    """Search-budget knobs for the purification optimizer.

    ancilla_dim forces the embedded purifier dimension (default: smallest
    power of two holding the reduced rank, capped at ancilla_cap).
    warm_start is an optional (factor_dims, unitary) pair injected as a start
    into every compatible factorization — used to make refinement monotone.
    """

    restarts: int = 8
    max_iters: int = 300
    grad_tol: float = 1e-9
    ancilla_cap: int = 64
    seed: int = 0
    ancilla_dim: Optional[int] = None
    perm_starts: int = 24
    polish_starts: int = 3
    warm_start: Optional[Tuple[Tuple[int, ...], np.ndarray]] = None

    def __post_init__(self):
        if self.restarts < 1:
            raise ConfigError("restarts must be >= 1")
        if self.max_iters < 1 or self.grad_tol <= 0 or self.ancilla_cap < 1:
            raise ConfigError("bad optimizer limits")
        if self.ancilla_dim is not None and self.ancilla_dim < 1:
            raise ConfigError("ancilla_dim must be positive")


@dataclass(eq=False)
class EopResult:
    """Best found purification value with exact two-sided bounds.

    value = (1/2) * best objective; lower_bound <= true E_p <= value and
    value <= upper_bound (trivial splits are always searched).
    unitary_params is the real parameter vector of the optimal purifier
    unitary (Hermitian generator packing); trace is the accepted-objective
    history of the winning run.
    """

    value: float
    lower_bound: float
    upper_bound: float
    best_partition: AncillaPartition
    unitary_params: np.ndarray
    trace: Tuple[float, ...]
    converged: bool
    iterations: int
    term_entropies: Tuple[float, ...]

    def unitary(self) -> np.ndarray:
        return unitary_from_params(self.unitary_params, self.best_partition.total_dim)


@dataclass(eq=False)
class GapReport:
    """Gap estimate plus its telescoped-CMI cross-check at the same point."""

    gap: float
    cmi_gap: float
    cmi_terms: Tuple[float, ...]
    entropy_sum: float
    alpha_entropy: float
    result: EopResult


@dataclass(frozen=True)
class PolygamyReport:
    e_ab: float
    e_ac: float
    e_a_bc: float
    slack: float
    flagged: bool


@dataclass(frozen=True)
class MonotonicityReport:
    before: float
    after: float
    slack: float
    flagged: bool


# ---------------------------------------------------------------------------
# unitary parametrization
# ---------------------------------------------------------------------------

def params_from_unitary(u: np.ndarray) -> np.ndarray:
    """Real vector (length D^2) generating u = exp(iH) for Hermitian H."""
    d = u.shape[0]
    a = scipy.linalg.logm(u)
    h = (a - a.conj().T) / 2j
    h = (h + h.conj().T) / 2
    iu = np.triu_indices(d, 1)
    off = h[iu]
    return np.concatenate([np.real(np.diag(h)), off.real, off.imag])


def unitary_from_params(params: np.ndarray, d: int) -> np.ndarray:
    params = np.asarray(params, dtype=float)
    if params.size != d * d:
        raise DomainError(f"expected {d * d} parameters, got {params.size}")
    m = d * (d - 1) // 2
    h = np.zeros((d, d), dtype=complex)
    h[np.diag_indices(d)] = params[:d]
    iu = np.triu_indices(d, 1)
    h[iu] = params[d:d + m] + 1j * params[d + m:]
    h = h + np.triu(h, 1).conj().T
    w, v = np.linalg.eigh(h)
    return (v * np.exp(1j * w)) @ v.conj().T


def _ordered_factorizations(total: int, k: int) -> List[Tuple[int, ...]]:
    if k == 1:
        return [(total,)]
    out = []
    for d in range(1, total + 1):
        if total % d == 0:
            for rest in _ordered_factorizations(total // d, k - 1):
                out.append((d,) + rest)
    return out


# ---------------------------------------------------------------------------
# problem setup
# ---------------------------------------------------------------------------

def _entropy_of_front(tensor: np.ndarray, front: Sequence[int]) -> float:
    """Entropy of the marginal on the given axes of a pure amplitude tensor."""
    k = tensor.ndim
    rest = [ax for ax in range(k) if ax not in front]
    mat = tensor.transpose(list(front) + rest).reshape(
        int(np.prod([tensor.shape[ax] for ax in front], dtype=np.int64)) if front else 1, -1
    )
    s = np.linalg.svd(mat, compute_uv=False)
    p = s ** 2
    p = p[p > EPS_EIG]
    return float(-np.sum(p * np.log(p)))


class _Problem:
    """Purification geometry shared by every branch of one minimization."""

    def __init__(self, m: np.ndarray, block_dims: Sequence[int],
                 block_labels: Sequence[str], cfg: OptimizerConfig):
        self.block_dims = tuple(int(d) for d in block_dims)
        self.block_labels = tuple(block_labels)
        self.n = len(self.block_dims)
        self.cfg = cfg

        # compress the purifier onto the support of its reduced state
        rho_p = m.conj().T @ m
        w, f = np.linalg.eigh(rho_p)
        keep = w > EPS_EIG
        rank = int(np.count_nonzero(keep))
        rank = max(rank, 1)
        cols = f[:, keep] if np.any(keep) else f[:, -1:]
        t0 = m @ cols

        if cfg.ancilla_dim is not None:
            if cfg.ancilla_dim < rank:
                raise CapacityError(
                    f"ancilla_dim {cfg.ancilla_dim} below reduced rank {rank}")
            d_emb = cfg.ancilla_dim
        else:
            d_emb = 1 << (rank - 1).bit_length()
            d_emb = min(d_emb, cfg.ancilla_cap)
        if rank > cfg.ancilla_cap:
            raise CapacityError(
                f"reduced rank {rank} exceeds ancilla_cap {cfg.ancilla_cap}")
        d_emb = max(d_emb, rank)

        self.rank = rank
        self.d_emb = d_emb
        self.t = np.zeros((t0.shape[0], d_emb), dtype=complex)
        self.t[:, :t0.shape[1]] = t0

        # exact entropies of the input configuration
        full = self.t.reshape(self.block_dims + (d_emb,))
        self.block_entropies = tuple(
            _entropy_of_front(full, [i]) for i in range(self.n)
        )
        self.alpha_entropy = _entropy_of_front(full, list(range(self.n)))
        self.co_block_entropies = tuple(
            _entropy_of_front(full, [j for j in range(self.n) if j != i])
            for i in range(self.n)
        )
        self.lower_bound = 0.5 * (sum(self.block_entropies) - self.alpha_entropy)
        self.trivial_objectives = tuple(
            sum(self.block_entropies[j] for j in range(self.n) if j != i)
            + self.co_block_entropies[i]
            for i in range(self.n)
        )
        self.upper_bound = 0.5 * min(self.trivial_objectives)

    # -- objective machinery ------------------------------------------------

    def _shaped(self, u: np.ndarray, dims: Tuple[int, ...]) -> np.ndarray:
        return (self.t @ u.T).reshape(self.block_dims + dims)

    def objective(self, u: np.ndarray, dims: Tuple[int, ...]) -> float:
        psi = self._shaped(u, dims)
        total = 0.0
        for i in range(self.n):
            mat = np.moveaxis(psi, (i, self.n + i), (0, 1)).reshape(
                self.block_dims[i] * dims[i], -1)
            s = np.linalg.svd(mat, compute_uv=False)
            p = s ** 2
            p = p[p > EPS_EIG]
            total += float(-np.sum(p * np.log(p)))
        return total

    def term_entropies(self, u: np.ndarray, dims: Tuple[int, ...]) -> Tuple[float, ...]:
        psi = self._shaped(u, dims)
        out = []
        for i in range(self.n):
            out.append(_entropy_of_front(psi, [i, self.n + i]))
        return tuple(out)

    def objective_and_grad(self, u: np.ndarray, dims: Tuple[int, ...]):
        """Objective and its Euclidean gradient d f / d conj(U)."""
        psi = self._shaped(u, dims)
        total = 0.0
        chi = np.zeros_like(psi)
        for i in range(self.n):
            moved = np.moveaxis(psi, (i, self.n + i), (0, 1))
            shape = moved.shape
            mat = moved.reshape(self.block_dims[i] * dims[i], -1)
            uu, s, vh = np.linalg.svd(mat, full_matrices=False)
            p = np.maximum(s ** 2, EPS_EIG)
            total += float(-np.sum(np.where(s ** 2 > EPS_EIG,
                                            s ** 2 * np.log(p), 0.0)))
            # (log sigma + 1) applied to the A_i R_i side of psi
            lpsi = (uu * ((np.log(p) + 1.0) * s)) @ vh
            chi += np.moveaxis(lpsi.reshape(shape), (0, 1), (i, self.n + i))
        chi_mat = chi.reshape(self.t.shape[0], -1)
        w = -(chi_mat.conj().T @ self.t)  # d f / d U
        return total, w.conj()

    # -- descent ------------------------------------------------------------

    def descend(self, u0: np.ndarray, dims: Tuple[int, ...]):
        """Armijo-backtracked Riemannian descent from u0; returns
        (objective, u, trace, iterations, converged)."""
        cfg = self.cfg
        u = u0
        f, g = self.objective_and_grad(u, dims)
        trace = [f]
        eta = 1.0
        converged = False
        for _ in range(cfg.max_iters):
            w = g.conj()  # d f / d U
            a = u @ w.T
            omega = a.conj().T - a
            gnorm2 = float(np.real(np.sum(omega * omega.conj())))
            if math.sqrt(gnorm2) <= cfg.grad_tol:
                converged = True
                break
            s, z = np.linalg.eigh(1j * omega)
            eta = min(eta * 2.0, 4.0)
            accepted = False
            while eta >= MIN_STEP:
                step = (z * np.exp(1j * eta * s)) @ z.conj().T
                u_new = step @ u
                f_new = self.objective(u_new, dims)
                if f_new <= f - ARMIJO_C1 * eta * gnorm2:
                    accepted = True
                    break
                eta *= 0.5
            if not accepted:
                converged = True  # no descent step representable
                break
            u = u_new
            f, g = self.objective_and_grad(u, dims)
            trace.append(f)
        return f, u, trace, len(trace) - 1, converged

    def _starts(self, dims: Tuple[int, ...], branch_idx: int):
        """Deterministic list of starting unitaries for one factorization."""
        d = self.d_emb
        cfg = self.cfg
        eye = np.eye(d, dtype=complex)
        perms: List[np.ndarray] = [eye]
        if d <= 5:
            for perm in itertools.permutations(range(d)):
                if perm != tuple(range(d)):
                    perms.append(eye[list(perm)])
        else:
            rng = np.random.default_rng((cfg.seed, branch_idx, 3))
            for _ in range(cfg.perm_starts):
                perms.append(eye[rng.permutation(d)])
        scored = sorted(
            ((self.objective(p, dims), k) for k, p in enumerate(perms)),
            key=lambda t: (t[0], t[1]),
        )
        polish = [perms[k] for _, k in scored[: max(1, cfg.polish_starts)]]

        if cfg.warm_start is not None:
            prev_dims, prev_u = cfg.warm_start
            embedded = _embed_start(prev_dims, np.asarray(prev_u), dims)
            if embedded is not None:
                polish.insert(0, embedded)

        for k in range(cfg.restarts):
            rng = np.random.default_rng((cfg.seed, branch_idx, 7, k))
            z = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
            q, r = np.linalg.qr(z)
            polish.append(q * (np.diagonal(r) / np.abs(np.diagonal(r))))
        return polish

    def minimize(self):
        """Search every ordered factorization; return the best configuration."""
        n, d = self.n, self.d_emb
        best = None  # (objective, partition, u, trace, iters, converged)
        for branch_idx, dims in enumerate(_ordered_factorizations(d, n)):
            if sum(1 for r in dims if r > 1) <= 1:
                # ancilla sits wholly on one party: objective is U-invariant
                owner = next((i for i, r in enumerate(dims) if r > 1), 0)
                f = self.trivial_objectives[owner]
                cand = (f, dims, np.eye(d, dtype=complex), [f], 0, True)
                if best is None or cand[0] < best[0] - TIE_TOL:
                    best = cand
                continue
            for u0 in self._starts(dims, branch_idx):
                f, u, trace, iters, conv = self.descend(u0, dims)
                cand = (f, dims, u, trace, iters, conv)
                if best is None or cand[0] < best[0] - TIE_TOL:
                    best = cand
        assert best is not None
        return best


def _embed_start(prev_dims: Sequence[int], prev_u: np.ndarray,
                 dims: Tuple[int, ...]) -> Optional[np.ndarray]:
    """Embed a smaller factorization's unitary into a componentwise-larger one."""
    if len(prev_dims) != len(dims) or any(p > r for p, r in zip(prev_dims, dims)):
        return None
    d_prev = int(np.prod(prev_dims, dtype=np.int64))
    d = int(np.prod(dims, dtype=np.int64))
    if prev_u.shape != (d_prev, d_prev):
        return None
    if d_prev == d:
        return prev_u.astype(complex)
    v = np.zeros((d, d_prev), dtype=complex)
    for flat_prev, idx in enumerate(np.ndindex(*prev_dims)):
        v[int(np.ravel_multi_index(idx, dims)), flat_prev] = 1.0
    c = v @ prev_u
    w, vec = np.linalg.eigh(np.eye(d) - c @ c.conj().T)
    comp = vec[:, w > 0.5]
    return np.hstack([c, comp])


# ---------------------------------------------------------------------------
# public entry points
# ---------------------------------------------------------------------------

def _blocks_of(psi: PureState, alpha) -> Tuple[List[Tuple[str, ...]], List[str]]:
    blocks = [tuple(normalize_region(a)) for a in alpha]
    if len(blocks) < 2:
        raise DomainError("need at least two blocks")
    seen: set = set()
    for b in blocks:
        if not b:
            raise RegionError("empty block")
        for lab in b:
            psi.spec.index(lab)
            if lab in seen:
                raise RegionError(f"blocks overlap on {lab!r}")
            seen.add(lab)
    purifier = [lab for lab in psi.spec.labels if lab not in seen]
    return blocks, purifier


def _problem_from_pure(psi: PureState, alpha, cfg: OptimizerConfig) -> _Problem:
    blocks, purifier = _blocks_of(psi, alpha)
    order = [lab for b in blocks for lab in b] + purifier
    arranged = permute_parties(psi, order)
    dims = arranged.spec.dims
    block_dims = []
    pos = 0
    for b in blocks:
        block_dims.append(int(np.prod(dims[pos:pos + len(b)], dtype=np.int64)))
        pos += len(b)
    d_p = int(np.prod(dims[pos:], dtype=np.int64)) if pos < len(dims) else 1
    m = arranged.amplitudes.reshape(-1, d_p)
    labels = ["+".join(b) for b in blocks]
    return _Problem(m, block_dims, labels, cfg)


def _problem_from_density(rho: DensityOperator, cfg: OptimizerConfig) -> _Problem:
    if len(rho.spec.parties) != 2:
        raise DomainError("eop_bipartite needs a state on exactly two parties")
    w, f = np.linalg.eigh(rho.matrix)
    keep = w > EPS_EIG
    if not np.any(keep):
        raise DomainError("state has no support")
    m = f[:, keep] * np.sqrt(w[keep])
    return _Problem(m, rho.spec.dims, rho.spec.labels, cfg)


def _result_from(problem: _Problem) -> EopResult:
    f, dims, u, trace, iters, conv = problem.minimize()
    return EopResult(
        value=f / 2.0,
        lower_bound=problem.lower_bound,
        upper_bound=problem.upper_bound,
        best_partition=AncillaPartition(tuple(dims)),
        unitary_params=params_from_unitary(u),
        trace=tuple(trace),
        converged=conv,
        iterations=iters,
        term_entropies=problem.term_entropies(u, tuple(dims)),
    )


def eop_bipartite(rho: DensityOperator, cfg: Optional[OptimizerConfig] = None) -> EopResult:
    """Entanglement of purification of a two-party state (upper-bound search)."""
    cfg = cfg or OptimizerConfig()
    return _result_from(_problem_from_density(rho, cfg))


def gap_bipartite(rho: DensityOperator, cfg: Optional[OptimizerConfig] = None) -> float:
    """g(A:B) = 2 E_p(A:B) - I(A:B), from the optimizer's upper bound."""
    cfg = cfg or OptimizerConfig()
    problem = _problem_from_density(rho, cfg)
    result = _result_from(problem)
    mutual = sum(problem.block_entropies) - problem.alpha_entropy
    return 2.0 * result.value - mutual


def generalized_eop(psi: PureState, alpha,
                    cfg: Optional[OptimizerConfig] = None) -> EopResult:
    """E_p(A_1,..,A_n) = (1/2) min over purifier splits of sum_i S(A_i R_i)."""
    cfg = cfg or OptimizerConfig()
    return _result_from(_problem_from_pure(psi, alpha, cfg))


def generalized_gap(psi: PureState, alpha,
                    cfg: Optional[OptimizerConfig] = None) -> GapReport:
    """Gap of the generalized E_p plus the telescoped-CMI form of the same
    quantity at the same configuration (they agree identically; the report
    carries both as a numerical cross-check)."""
    cfg = cfg or OptimizerConfig()
    problem = _problem_from_pure(psi, alpha, cfg)
    result = _result_from(problem)
    dims = result.best_partition.factor_dims
    u = result.unitary()
    psi_opt = problem._shaped(u, dims)
    n = problem.n

    entropy_sum = sum(problem.block_entropies)
    gap = result.value - 0.5 * (entropy_sum - problem.alpha_entropy)

    # I(R_i : everything else | A_i) with ancillas conditioned in spec order:
    # S(A_i R_i) + S(R_1..R_i) - S(A_i) - S(R_1..R_{i-1}); the sum telescopes
    # to twice the gap.
    cmi_terms = []
    for i in range(n):
        s_ar = result.term_entropies[i]
        s_pre = _entropy_of_front(psi_opt, list(range(n, n + i))) if i else 0.0
        s_cur = _entropy_of_front(psi_opt, list(range(n, n + i + 1)))
        cmi_terms.append(s_ar + s_cur - problem.block_entropies[i] - s_pre)
    cmi_gap = 0.5 * sum(cmi_terms)

    return GapReport(
        gap=gap,
        cmi_gap=cmi_gap,
        cmi_terms=tuple(cmi_terms),
        entropy_sum=entropy_sum,
        alpha_entropy=problem.alpha_entropy,
        result=result,
    )


def purified_state(psi: PureState, alpha, result: EopResult) -> PureState:
    """Reconstruct the optimizer's purification as an explicit pure state.

    Parties come out as the blocks of alpha (multi-party blocks merged under
    a '+'-joined label) followed by one mirror-labeled ancilla per block with
    the partition's factor dims.
    """
    cfg = OptimizerConfig(ancilla_dim=result.best_partition.total_dim)
    problem = _problem_from_pure(psi, alpha, cfg)
    dims = result.best_partition.factor_dims
    if len(dims) != problem.n:
        raise DomainError("partition size does not match the block count")
    u = result.unitary()
    amp = problem._shaped(u, dims).reshape(-1)
    parties = [
        (lab, d) for lab, d in zip(problem.block_labels, problem.block_dims)
    ] + [
        (mirror_label(lab), r) for lab, r in zip(problem.block_labels, dims)
    ]
    return PureState(amp, PartySpec(parties))


def bipartite_marginal(state, a, b) -> DensityOperator:
    """Reduced state on a u b, regrouped as two merged parties."""
    a = normalize_region(a)
    b = normalize_region(b)
    marg = partial_trace(state, a + b)
    marg = permute_parties(marg, a + b)
    spec = PartySpec([
        ("+".join(a), marg.spec.region_dim(a)),
        ("+".join(b), marg.spec.region_dim(b)),
    ])
    return DensityOperator(marg.matrix, spec)


def verify_polygamy(psi: PureState, cfg: Optional[OptimizerConfig] = None,
                    tol: float = 5e-3) -> PolygamyReport:
    """E_p(A:B) + E_p(A:C) >= E_p(A:BC) on a tripartite pure state.

    A violation beyond tol can only come from the first two searches missing
    their minima (the inequality holds for the true values), so it is flagged
    as an optimizer failure.
    """
    cfg = cfg or OptimizerConfig()
    labs = psi.spec.labels
    if len(labs) != 3:
        raise DomainError("verify_polygamy needs exactly three parties")
    a, b, c = labs
    e_ab = eop_bipartite(bipartite_marginal(psi, [a], [b]), cfg).value
    e_ac = eop_bipartite(bipartite_marginal(psi, [a], [c]), cfg).value
    e_a_bc = eop_bipartite(bipartite_marginal(psi, [a], [b, c]), cfg).value
    slack = e_ab + e_ac - e_a_bc
    return PolygamyReport(e_ab, e_ac, e_a_bc, slack, flagged=slack < -tol)


def verify_monotonicity(rho, discard, cfg: Optional[OptimizerConfig] = None,
                        tol: float = 5e-3) -> MonotonicityReport:
    """E_p never increases when part of the second party is discarded.

    The first party is held fixed; `discard` names the parties traced out of
    the rest. Negative slack beyond tol is flagged as an optimizer failure.
    """
    cfg = cfg or OptimizerConfig()
    discard = normalize_region(discard)
    labs = rho.spec.labels
    if labs[0] in discard:
        raise RegionError("cannot discard the distinguished first party")
    for lab in discard:
        rho.spec.index(lab)
    kept = [lab for lab in labs[1:] if lab not in discard]
    if not kept:
        raise RegionError("discarding would leave a single-party state")
    before = eop_bipartite(bipartite_marginal(rho, [labs[0]], list(labs[1:])), cfg).value
    after = eop_bipartite(bipartite_marginal(rho, [labs[0]], kept), cfg).value
    slack = before - after
    return MonotonicityReport(before, after, slack, flagged=slack < -tol)
