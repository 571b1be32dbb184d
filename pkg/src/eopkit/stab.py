"""Stabilizer states as bit-packed tableaux.

A tableau row packs one Pauli generator into a single int with two bits per
qubit, interleaved: bit ``2q`` is the X component on qubit ``q`` and bit
``2q + 1`` the Z component, so the 2-bit pair value reads I=0, X=1, Z=2, Y=3.
Phases are one sign bit per generator (the operator is ``(-1)**phase`` times
the tensor product of the letters).

Group elements are manipulated in the normal form ``i**e * X^x Z^z`` so that
signs of products stay exact; see ``_mul``.  Entropies follow the usual
subgroup-dimension counting and are returned in nats to match the dense layer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple

import numpy as np

from . import gf2
from .errors import CapacityError, DomainError, ParseError, RegionError
from .qdense import PartySpec, PureState

LN2 = math.log(2.0)

DENSE_QUBIT_CAP = 14

_CODE_TO_LETTER = {0: "I", 1: "X", 2: "Z", 3: "Y"}
_LETTER_TO_CODE = {"I": 0, "X": 1, "Z": 2, "Y": 3}


def _even_mask(n: int) -> int:
    """Bits 0, 2, 4, ... up to width 2n (the X-component positions)."""
    return ((1 << (2 * n)) - 1) // 3


def _sip(v: int, w: int, em: int) -> int:
    """Symplectic inner product of two packed Pauli rows (0 or 1)."""
    a = (v >> 1) & w & em
    b = (w >> 1) & v & em
    return (a.bit_count() + b.bit_count()) & 1


def _transvect(k: int, v: int, em: int) -> int:
    """Symplectic transvection Z_k(v) = v + <k, v> k."""
    return v ^ k if _sip(k, v, em) else v


def _ny(row: int, em: int) -> int:
    """Number of Y letters in a row (X and Z bits both set)."""
    return (row & (row >> 1) & em).bit_count()


def _mul(row1: int, e1: int, row2: int, e2: int, em: int) -> Tuple[int, int]:
    """Product of i**e1 X^x1 Z^z1 and i**e2 X^x2 Z^z2 in the same normal form.

    Moving Z^z1 through X^x2 costs (-1) per overlapping qubit.
    """
    cross = ((row1 >> 1) & em) & (row2 & em)
    e = (e1 + e2 + 2 * cross.bit_count()) % 4
    return row1 ^ row2, e


def _normal_phase(row: int, phase: int, em: int) -> int:
    """i-exponent of (-1)**phase * (tensor of letters) written as i**e X^x Z^z."""
    return (2 * phase + _ny(row, em)) % 4


@dataclass(frozen=True)
class StabilizerTableau:
    """Generating set of an n-qubit stabilizer group.

    rows
        One packed Pauli per generator (see module docstring for the bit
        layout).  Rows must be independent and pairwise commuting.
    phases
        Sign bits; generator k is ``(-1)**phases[k]`` times its letters.
    """

    n: int
    rows: Tuple[int, ...]
    phases: Tuple[int, ...]

    def __post_init__(self) -> None:
        n = self.n
        if n < 1:
            raise DomainError("tableau needs at least one qubit")
        if len(self.rows) != n or len(self.phases) != n:
            raise DomainError(
                f"expected {n} generators and phases, got "
                f"{len(self.rows)} rows / {len(self.phases)} phases"
            )
        top = 1 << (2 * n)
        em = _even_mask(n)
        for r in self.rows:
            if not 0 < r < top:
                raise DomainError("generator rows must be nonzero packed Paulis")
        if any(p not in (0, 1) for p in self.phases):
            raise DomainError("phases must be 0/1 sign bits")
        for i in range(n):
            for j in range(i + 1, n):
                if _sip(self.rows[i], self.rows[j], em):
                    raise DomainError(f"generators {i} and {j} anticommute")
        if gf2.rank(self.rows, 2 * n) != n:
            raise DomainError("generators are not independent")

    def generator_string(self, k: int) -> str:
        row = self.rows[k]
        letters = "".join(
            _CODE_TO_LETTER[(row >> (2 * q)) & 3] for q in range(self.n)
        )
        return ("-" if self.phases[k] else "+") + letters


def from_strings(lines: Sequence[str]) -> StabilizerTableau:
    """Build a tableau from strings like "+XXZ", "-IZY" (sign optional)."""
    if not lines:
        raise ParseError("no generators given")
    rows: List[int] = []
    phases: List[int] = []
    n = None
    for k, raw in enumerate(lines):
        row, phase, width = _parse_generator(raw, k + 1)
        if n is None:
            n = width
        elif width != n:
            raise ParseError(
                f"generator has {width} letters, expected {n}", line=k + 1
            )
        rows.append(row)
        phases.append(phase)
    assert n is not None
    if len(rows) != n:
        raise ParseError(f"expected {n} generators for {n} qubits, got {len(rows)}")
    return StabilizerTableau(n, tuple(rows), tuple(phases))


def _parse_generator(raw: str, line_no: int) -> Tuple[int, int, int]:
    text = raw.strip()
    if not text:
        raise ParseError("empty generator line", line=line_no)
    phase = 0
    if text[0] in "+-":
        phase = 1 if text[0] == "-" else 0
        text = text[1:]
    if not text:
        raise ParseError("sign without letters", line=line_no)
    row = 0
    for q, ch in enumerate(text):
        code = _LETTER_TO_CODE.get(ch.upper())
        if code is None:
            raise ParseError(f"invalid Pauli letter {ch!r}", line=line_no, offset=q)
        row |= code << (2 * q)
    return row, phase, len(text)


def parse_tableau(text: str) -> StabilizerTableau:
    """Parse the on-disk tableau format: a ``n=<qubits>`` header then one
    signed Pauli string per line.  Blank lines and ``#`` comments are skipped.
    """
    n = None
    gen_lines: List[Tuple[int, str]] = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if n is None:
            if not line.startswith("n="):
                raise ParseError("expected 'n=<qubits>' header", line=line_no)
            try:
                n = int(line[2:])
            except ValueError:
                raise ParseError(f"bad qubit count {line[2:]!r}", line=line_no) from None
            if n < 1:
                raise ParseError("qubit count must be positive", line=line_no)
            continue
        gen_lines.append((line_no, line))
    if n is None:
        raise ParseError("missing 'n=<qubits>' header")
    if len(gen_lines) != n:
        raise ParseError(f"expected {n} generators, found {len(gen_lines)}")
    rows: List[int] = []
    phases: List[int] = []
    for line_no, line in gen_lines:
        row, phase, width = _parse_generator(line, line_no)
        if width != n:
            raise ParseError(f"generator has {width} letters, expected {n}", line=line_no)
        rows.append(row)
        phases.append(phase)
    return StabilizerTableau(n, tuple(rows), tuple(phases))


def format_tableau(tab: StabilizerTableau) -> str:
    lines = [f"n={tab.n}"]
    lines.extend(tab.generator_string(k) for k in range(tab.n))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# uniform sampling
# ---------------------------------------------------------------------------

def _rand_bits(rng: np.random.Generator, nbits: int, nonzero: bool = False) -> int:
    """Uniform nbits-wide int from raw generator bytes (rejecting 0 if asked)."""
    nbytes = (nbits + 7) // 8
    mask = (1 << nbits) - 1
    while True:
        v = int.from_bytes(rng.bytes(nbytes), "little") & mask
        if v or not nonzero:
            return v


def _find_transvection(x: int, y: int, n: int, em: int) -> Tuple[int, int]:
    """Two transvections mapping x to y: Z_out1(Z_out0(x)) = y.

    This is the standard case split: a single transvection works when the
    rows anticommute; otherwise route through an intermediate z chosen to
    anticommute with both.
    """
    if x == y:
        return 0, 0
    if _sip(x, y, em):
        return x ^ y, 0
    z = 0
    for q in range(n):
        px = (x >> (2 * q)) & 3
        py = (y >> (2 * q)) & 3
        if px and py:
            pz = px ^ py
            if pz == 0:
                pz = 2
                if (px & 1) != (px >> 1):
                    pz |= 1
            z = pz << (2 * q)
            return x ^ z, y ^ z
    for q in range(n):
        px = (x >> (2 * q)) & 3
        py = (y >> (2 * q)) & 3
        if px and not py:
            if px == 3:
                pz = 2
            else:
                pz = ((px & 1) << 1) | (px >> 1)
            z |= pz << (2 * q)
            break
    for q in range(n):
        px = (x >> (2 * q)) & 3
        py = (y >> (2 * q)) & 3
        if py and not px:
            if py == 3:
                pz = 2
            else:
                pz = ((py & 1) << 1) | (py >> 1)
            z |= pz << (2 * q)
            break
    return x ^ z, y ^ z


def random_stabilizer(n: int, seed=None) -> StabilizerTableau:
    """Uniformly random n-qubit stabilizer state.

    Builds a uniformly random symplectic basis one qubit at a time: at level
    m the image of the first basis vector is a fresh uniform nonzero row and
    the partner row is decoded from uniform bits, both mapped into place by
    transvections; the previous level's basis is embedded two bits higher.
    Sign bits are drawn uniformly at the end.  Deterministic for a fixed
    seed.
    """
    if n < 1:
        raise DomainError("need at least one qubit")
    rng = np.random.default_rng(seed)
    rows: List[int] = []
    for m in range(1, n + 1):
        em = _even_mask(m)
        rows = [1, 2] + [r << 2 for r in rows]
        f1 = _rand_bits(rng, 2 * m, nonzero=True)
        bits = _rand_bits(rng, 2 * m - 1)
        t0, t1 = _find_transvection(1, f1, m, em)
        eprime = 1 | ((bits >> 1) << 2)
        h0 = _transvect(t1, _transvect(t0, eprime, em), em)
        if bits & 1:
            f1 = 0
        for k in (t0, t1, h0, f1):
            if k:
                rows = [_transvect(k, r, em) for r in rows]
    gens = tuple(rows[2 * q + 1] for q in range(n))
    phases = tuple(int(b) for b in rng.integers(0, 2, size=n))
    return StabilizerTableau(n, gens, phases)


# ---------------------------------------------------------------------------
# regions, entropies, canonical counts
# ---------------------------------------------------------------------------

def _check_qubits(n: int, region: Iterable[int]) -> Set[int]:
    idx = set()
    for q in region:
        q = int(q)
        if not 0 <= q < n:
            raise RegionError(f"qubit {q} out of range for {n}-qubit tableau")
        if q in idx:
            raise RegionError(f"qubit {q} listed twice")
        idx.add(q)
    return idx


def _region_mask(qubits: Iterable[int]) -> int:
    mask = 0
    for q in qubits:
        mask |= 3 << (2 * q)
    return mask


def _subgroup_dim(tab: StabilizerTableau, inside: Set[int]) -> int:
    """log2 of the number of stabilizer elements supported inside `inside`."""
    outside = set(range(tab.n)) - inside
    mask = _region_mask(outside)
    return tab.n - gf2.rank([r & mask for r in tab.rows], 2 * tab.n)


def region_entropy(tab: StabilizerTableau, region: Iterable[int]) -> float:
    """Entanglement entropy (nats) of a set of qubits."""
    idx = _check_qubits(tab.n, region)
    return (len(idx) - _subgroup_dim(tab, idx)) * LN2


@dataclass(frozen=True)
class TripartiteCounts:
    """Invariant decomposition of a pure stabilizer state over three blocks.

    ``locals`` counts unentangled qubits per block, ``e_*`` the Bell pairs
    between blocks, and ``g`` the three-way GHZ components.  All are exact
    integers; the blocks' qubits satisfy
    ``sum(locals) + 2*(e_ab + e_ac + e_bc) + 3*g == n``.
    """

    locals: Tuple[int, int, int]
    e_ab: int
    e_ac: int
    e_bc: int
    g: int


def tripartite_counts(
    tab: StabilizerTableau,
    a: Iterable[int],
    b: Iterable[int],
    c: Iterable[int],
) -> TripartiteCounts:
    """Exact local / Bell / GHZ counts for the blocks (a, b, c).

    The blocks must partition all qubits (c may be empty).  Bell counts come
    from the rank of the symplectic form on one block's restriction of the
    cross-subgroup; the GHZ count is then fixed by subgroup dimensions.
    """
    sa = _check_qubits(tab.n, a)
    sb = _check_qubits(tab.n, b)
    sc = _check_qubits(tab.n, c)
    if sa & sb or sa & sc or sb & sc:
        raise RegionError("blocks overlap")
    if sa | sb | sc != set(range(tab.n)):
        raise RegionError("blocks must cover every qubit")
    if not sa or not sb:
        raise RegionError("blocks a and b must be nonempty")

    dims = {
        "a": _subgroup_dim(tab, sa),
        "b": _subgroup_dim(tab, sb),
        "c": _subgroup_dim(tab, sc),
        "ab": _subgroup_dim(tab, sa | sb),
        "ac": _subgroup_dim(tab, sa | sc),
        "bc": _subgroup_dim(tab, sb | sc),
    }

    def bell_count(left: Set[int], right: Set[int]) -> int:
        # elements supported on left|right, Gram of the symplectic form on
        # the right restriction; half its rank is the Bell-pair count
        other = set(range(tab.n)) - left - right
        combos = gf2.kernel_basis(
            [r & _region_mask(other) for r in tab.rows], 2 * tab.n
        )
        elems = []
        for combo in combos:
            h = 0
            for j in range(tab.n):
                if (combo >> j) & 1:
                    h ^= tab.rows[j]
            elems.append(h & _region_mask(right))
        em = _even_mask(tab.n)
        gram = []
        for hi in elems:
            lam = 0
            for j, hj in enumerate(elems):
                lam |= _sip(hi, hj, em) << j
            gram.append(lam)
        r2 = gf2.rank(gram, len(elems))
        assert r2 % 2 == 0
        return r2 // 2

    e_ab = bell_count(sa, sb)
    e_ac = bell_count(sa, sc) if sc else 0
    e_bc = bell_count(sb, sc) if sc else 0

    g = dims["ab"] - dims["a"] - dims["b"] - 2 * e_ab
    # the same count must come out of the other two pairings
    assert g == dims["ac"] - dims["a"] - dims["c"] - 2 * e_ac
    assert g == dims["bc"] - dims["b"] - dims["c"] - 2 * e_bc
    assert g >= 0

    loc = (dims["a"], dims["b"], dims["c"])
    assert sum(loc) + 2 * (e_ab + e_ac + e_bc) + 3 * g == tab.n
    return TripartiteCounts(loc, e_ab, e_ac, e_bc, g)


def pairwise_counts(
    tab: StabilizerTableau, parts: Sequence[Iterable[int]]
) -> Dict[Tuple[int, int], TripartiteCounts]:
    """Tripartite counts for every pair of parties against the rest.

    ``parts`` must partition the qubits into at least two parties; entry
    (i, j) of the result treats party i as block a, party j as block b and
    everything else as block c.
    """
    sets = [frozenset(_check_qubits(tab.n, p)) for p in parts]
    if len(sets) < 2:
        raise RegionError("need at least two parties")
    seen: Set[int] = set()
    for s in sets:
        if s & seen:
            raise RegionError("parties overlap")
        seen |= s
    if seen != set(range(tab.n)):
        raise RegionError("parties must cover every qubit")
    out = {}
    for i in range(len(sets)):
        for j in range(i + 1, len(sets)):
            rest = set(range(tab.n)) - sets[i] - sets[j]
            out[(i, j)] = tripartite_counts(tab, sets[i], sets[j], rest)
    return out


# ---------------------------------------------------------------------------
# dense conversion
# ---------------------------------------------------------------------------

def _index_masks(row: int, n: int) -> Tuple[int, int]:
    """Tableau-row X/Z bits as masks over state indices (qubit 0 leftmost)."""
    xm = zm = 0
    for q in range(n):
        if (row >> (2 * q)) & 1:
            xm |= 1 << (n - 1 - q)
        if (row >> (2 * q + 1)) & 1:
            zm |= 1 << (n - 1 - q)
    return xm, zm


def _apply_pauli(row: int, phase: int, v: np.ndarray, n: int) -> np.ndarray:
    em = _even_mask(n)
    xm, zm = _index_masks(row, n)
    coef = 1j ** _normal_phase(row, phase, em)
    idx = np.arange(v.shape[0])
    par = np.zeros(v.shape[0], dtype=np.int64)
    b = zm
    while b:
        low = b & -b
        par ^= (idx >> low.bit_length() - 1) & 1
        b ^= low
    out = np.empty_like(v)
    out[idx ^ xm] = coef * (1 - 2 * par) * v
    return out


def to_dense(tab: StabilizerTableau, labels: Optional[Sequence[str]] = None) -> PureState:
    """Explicit state vector of the stabilizer state, one qubit per party.

    Finds a computational basis state in the support by solving the sign
    constraints of the Z-type subgroup, then symmetrizes with each
    generator's projector.  Limited to DENSE_QUBIT_CAP qubits.
    """
    n = tab.n
    if n > DENSE_QUBIT_CAP:
        raise CapacityError(
            f"dense conversion is limited to {DENSE_QUBIT_CAP} qubits, got {n}"
        )
    if labels is None:
        labels = [f"q{q}" for q in range(n)]
    elif len(labels) != n:
        raise DomainError(f"expected {n} labels, got {len(labels)}")
    em = _even_mask(n)
    xcol_mask = em

    # Z-type subgroup: combinations of generators with vanishing X part.
    combos = gf2.kernel_basis([r & xcol_mask for r in tab.rows], 2 * n)
    zrows: List[int] = []
    signs: List[int] = []
    for combo in combos:
        row, e = 0, 0
        for j in range(n):
            if (combo >> j) & 1:
                row, e = _mul(row, e, tab.rows[j], _normal_phase(tab.rows[j], tab.phases[j], em), em)
        assert row & xcol_mask == 0 and e % 2 == 0
        zq = 0
        for q in range(n):
            if (row >> (2 * q + 1)) & 1:
                zq |= 1 << q
        zrows.append(zq)
        signs.append((e >> 1) & 1)

    x0 = gf2.solve(zrows, signs, n)
    if x0 is None:
        raise DomainError("inconsistent sign constraints; tableau is not a state")
    idx0 = 0
    for q in range(n):
        if (x0 >> q) & 1:
            idx0 |= 1 << (n - 1 - q)

    v = np.zeros(1 << n, dtype=complex)
    v[idx0] = 1.0
    for row, phase in zip(tab.rows, tab.phases):
        v = v + _apply_pauli(row, phase, v, n)
    norm = np.linalg.norm(v)
    assert norm > 1e-9
    spec = PartySpec(tuple((lab, 2) for lab in labels))
    return PureState(v / norm, spec)


# ---------------------------------------------------------------------------
# canonical keys and exhaustive enumeration
# ---------------------------------------------------------------------------

def canonical_state_key(tab: StabilizerTableau) -> Tuple:
    """Hashable key identifying the stabilizer *state* (not the generators).

    Phase-tracked reduced row echelon form of the group: two tableaux get
    the same key exactly when they generate the same signed group.
    """
    em = _even_mask(tab.n)
    elems = [
        [tab.rows[k], _normal_phase(tab.rows[k], tab.phases[k], em)]
        for k in range(tab.n)
    ]
    pivot_rows: List[int] = []
    rank = 0
    for col in range(2 * tab.n):
        bit = 1 << col
        pivot = None
        for i in range(rank, tab.n):
            if elems[i][0] & bit:
                pivot = i
                break
        if pivot is None:
            continue
        elems[rank], elems[pivot] = elems[pivot], elems[rank]
        for i in range(tab.n):
            if i != rank and (elems[i][0] & bit):
                row, e = _mul(elems[i][0], elems[i][1], elems[rank][0], elems[rank][1], em)
                elems[i][0], elems[i][1] = row, e
        pivot_rows.append(rank)
        rank += 1
    assert rank == tab.n
    return (tab.n,) + tuple((elems[i][0], elems[i][1]) for i in range(tab.n))


def enumerate_stabilizer_states(n: int) -> List[StabilizerTableau]:
    """Every n-qubit stabilizer state, one tableau each (n <= 2 only)."""
    if n == 1:
        return [
            StabilizerTableau(1, (row,), (phase,))
            for row in (1, 2, 3)
            for phase in (0, 1)
        ]
    if n == 2:
        em = _even_mask(2)
        groups = {}
        for g1 in range(1, 16):
            for g2 in range(g1 + 1, 16):
                if _sip(g1, g2, em):
                    continue
                key = frozenset((g1, g2, g1 ^ g2))
                groups.setdefault(key, (g1, g2))
        assert len(groups) == 15
        tabs = []
        for g1, g2 in groups.values():
            for p1 in (0, 1):
                for p2 in (0, 1):
                    tabs.append(StabilizerTableau(2, (g1, g2), (p1, p2)))
        return tabs
    raise CapacityError("exhaustive enumeration is only supported for n <= 2")
