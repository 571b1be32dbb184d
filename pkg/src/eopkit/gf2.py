"""Bit-packed GF(2) linear algebra.

Rows are Python ints (arbitrary precision); bit ``j`` of a row is the entry in
column ``j``.  Elimination is XOR on whole rows, which keeps everything
bit-parallel regardless of width.
"""

from __future__ import annotations

from typing import List, Optional, Sequence, Tuple


def rank(rows: Sequence[int], n_cols: int) -> int:
    """Rank over GF(2) of the matrix whose rows are the given bit-ints."""
    work = [r for r in rows if r]
    rnk = 0
    for col in range(n_cols):
        bit = 1 << col
        pivot = None
        for i in range(rnk, len(work)):
            if work[i] & bit:
                pivot = i
                break
        if pivot is None:
            continue
        work[rnk], work[pivot] = work[pivot], work[rnk]
        for i in range(len(work)):
            if i != rnk and (work[i] & bit):
                work[i] ^= work[rnk]
        rnk += 1
        if rnk == len(work):
            break
    return rnk


def kernel_basis(rows: Sequence[int], n_cols: int) -> List[int]:
    """Basis of {c : XOR of rows selected by bits of c is zero}.

    Returns coefficient vectors over the *rows* (bit ``i`` of a result selects
    ``rows[i]``), spanning the left null space.
    """
    m = len(rows)
    # augment each row with an identity tag above the data columns
    work = [(rows[i] & ((1 << n_cols) - 1)) | (1 << (n_cols + i)) for i in range(m)]
    rnk = 0
    for col in range(n_cols):
        bit = 1 << col
        pivot = None
        for i in range(rnk, m):
            if work[i] & bit:
                pivot = i
                break
        if pivot is None:
            continue
        work[rnk], work[pivot] = work[pivot], work[rnk]
        for i in range(m):
            if i != rnk and (work[i] & bit):
                work[i] ^= work[rnk]
        rnk += 1
    data_mask = (1 << n_cols) - 1
    out = []
    for i in range(rnk, m):
        assert work[i] & data_mask == 0
        out.append(work[i] >> n_cols)
    return out


def solve(rows: Sequence[int], rhs: Sequence[int], n_cols: int) -> Optional[int]:
    """One solution x (bit-int over columns) of ``rows[i] . x = rhs[i]``, or None.

    The dot product is the GF(2) inner product (parity of the AND).
    """
    m = len(rows)
    # augmented column sits at bit n_cols
    work = [(rows[i] & ((1 << n_cols) - 1)) | ((rhs[i] & 1) << n_cols) for i in range(m)]
    pivots: List[Tuple[int, int]] = []  # (work row index, column)
    rnk = 0
    for col in range(n_cols):
        bit = 1 << col
        pivot = None
        for i in range(rnk, m):
            if work[i] & bit:
                pivot = i
                break
        if pivot is None:
            continue
        work[rnk], work[pivot] = work[pivot], work[rnk]
        for i in range(m):
            if i != rnk and (work[i] & bit):
                work[i] ^= work[rnk]
        pivots.append((rnk, col))
        rnk += 1
    aug_bit = 1 << n_cols
    for i in range(rnk, m):
        if work[i] & aug_bit:
            return None  # inconsistent
    x = 0
    for row_idx, col in pivots:
        if work[row_idx] & aug_bit:
            x |= 1 << col
    return x
