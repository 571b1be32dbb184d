"""Random-stabilizer scans: pairwise witnesses versus subsystem entropy.

The scan draws uniform stabilizer states on N qubits split into parties by
a fixed ratio, then asks how often the smallest party A looks entangled
through *pairwise* eyes — a positive Bell count toward some single other
party X, or a positive tripartition gap g(A:X) — versus how often its
subsystem entropy S_A is positive at all.  Summing the pairwise rates gives
a union bound on P(S_A > 0) that genuinely multipartite entanglement is
free to violate, and at larger N it does: S_A is almost surely maximal
while every pairwise witness goes quiet.

All checks here are diagnostics that report, never assert; the interesting
regime is exactly the one where the naive bound fails.
"""

from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import CapacityError, ConfigError
from .stab import LN2, random_stabilizer, region_entropy, to_dense, tripartite_counts
from .structure import gsd_detect

CSV_COLUMNS = (
    "N", "party_sizes", "pair", "P_EN_pos", "SE_EN", "P_g_pos", "SE_g",
    "P_SA_pos", "mean_SA", "bound_pair", "bound_page",
)


@dataclass(frozen=True)
class ScanConfig:
    """Scan settings.

    n_list
        Qubit counts to scan; each must be divisible by sum(ratios).
    ratios
        Relative party sizes; the first entry is the probe party A.
    samples
        Stabilizer states drawn per qubit count.
    seed
        Base seed; sample idx at size N uses (seed, N, idx), so results
        are reproducible and independent of execution order.
    out
        Optional CSV destination.
    threads
        Worker threads for sampling.  Results are bit-identical for any
        value because reduction order is fixed by sample index.
    """

    n_list: Tuple[int, ...] = (10, 20, 30)
    ratios: Tuple[int, ...] = (1, 3, 3, 3)
    samples: int = 2000
    seed: int = 0
    out: Optional[str] = None
    threads: int = 1

    def __post_init__(self):
        if self.samples < 1:
            raise ConfigError("samples must be positive")
        if self.threads < 1:
            raise ConfigError("threads must be positive")
        if len(self.ratios) < 2 or any(r < 1 for r in self.ratios):
            raise ConfigError("ratios need at least two positive entries")
        total = sum(self.ratios)
        for n in self.n_list:
            if n % total != 0:
                raise ConfigError(
                    f"N={n} is not divisible by the ratio total {total}")


@dataclass(frozen=True)
class ScanRow:
    """One (N, pair) line of scan output.

    The first eleven fields mirror the CSV columns; mean_SA, bound_page and
    the gap-derived rates are in nats.  samples and se_mean_sa ride along
    for in-process reports but are not part of the CSV schema.
    """

    N: int
    party_sizes: Tuple[int, ...]
    pair: str
    P_EN_pos: float
    SE_EN: float
    P_g_pos: float
    SE_g: float
    P_SA_pos: float
    mean_SA: float
    bound_pair: float
    bound_page: float
    samples: int = 0
    se_mean_sa: float = 0.0


@dataclass(frozen=True)
class UnionBoundCheck:
    """P(S_A>0) against the summed pairwise witness rates at one N.

    holds allows four total standard errors of slack; tension marks the
    regime where the bound is not just violated but dramatically so.
    """

    N: int
    lhs: float
    rhs: float
    se_total: float
    holds: bool
    tension: bool


@dataclass(frozen=True)
class PageBoundCheck:
    """mean S_A against the random-subsystem expectation at one N."""

    N: int
    n_a: int
    mean_sa: float
    se_mean: float
    bound: float
    upper: float
    holds: bool


def _party_regions(n: int, ratios: Sequence[int]) -> List[List[int]]:
    unit = n // sum(ratios)
    regions, start = [], 0
    for r in ratios:
        regions.append(list(range(start, start + r * unit)))
        start += r * unit
    return regions


def _rate(hits: int, m: int) -> Tuple[float, float]:
    p = hits / m
    return p, math.sqrt(p * (1.0 - p) / m)


def run_scan(cfg: ScanConfig) -> List[ScanRow]:
    """Execute the scan; one row per (N, other-party) pair.

    Writes cfg.out as CSV when set.  Per-sample work is seeded by sample
    index, so the returned floats do not depend on cfg.threads.
    """
    rows: List[ScanRow] = []
    for n in cfg.n_list:
        regions = _party_regions(n, cfg.ratios)
        sizes = tuple(len(r) for r in regions)
        a = regions[0]
        others = regions[1:]
        rests = [sorted(set(range(n)) - set(a) - set(x)) for x in others]

        def one(idx: int):
            tab = random_stabilizer(n, seed=(cfg.seed, n, idx))
            sa = region_entropy(tab, a)
            flags = []
            for x, rest in zip(others, rests):
                c = tripartite_counts(tab, a, x, rest)
                flags.append((c.e_ab > 0, c.g > 0))
            return sa, flags

        if cfg.threads > 1:
            with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
                results = list(pool.map(one, range(cfg.samples)))
        else:
            results = [one(i) for i in range(cfg.samples)]

        m = cfg.samples
        sa_vals = np.array([r[0] for r in results])
        p_sa, _ = _rate(int(np.count_nonzero(sa_vals > 1e-12)), m)
        mean_sa = float(sa_vals.mean())
        se_mean = float(sa_vals.std(ddof=1) / math.sqrt(m)) if m > 1 else 0.0
        n_a = sizes[0]
        lo, hi = min(n_a, n - n_a), max(n_a, n - n_a)
        bound_page = lo * LN2 - 2.0 ** (lo - hi)

        for j, x in enumerate(others):
            n_x = sizes[j + 1]
            p_en, se_en = _rate(sum(r[1][j][0] for r in results), m)
            p_g, se_g = _rate(sum(r[1][j][1] for r in results), m)
            rows.append(ScanRow(
                N=n,
                party_sizes=sizes,
                pair=f"A:{chr(ord('A') + j + 1)}",
                P_EN_pos=p_en,
                SE_EN=se_en,
                P_g_pos=p_g,
                SE_g=se_g,
                P_SA_pos=p_sa,
                mean_SA=mean_sa,
                bound_pair=2.0 ** ((n_a + n_x) - (n - n_a - n_x)),
                bound_page=bound_page,
                samples=m,
                se_mean_sa=se_mean,
            ))
    if cfg.out:
        write_scan_csv(rows, cfg.out)
    return rows


def write_scan_csv(rows: Sequence[ScanRow], path: str) -> str:
    """Write rows in the canonical column order; floats go through repr."""
    parent = os.path.dirname(os.path.abspath(path))
    os.makedirs(parent, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for row in rows:
            writer.writerow([
                row.N,
                ":".join(str(s) for s in row.party_sizes),
                row.pair,
                repr(row.P_EN_pos), repr(row.SE_EN),
                repr(row.P_g_pos), repr(row.SE_g),
                repr(row.P_SA_pos), repr(row.mean_SA),
                repr(row.bound_pair), repr(row.bound_page),
            ])
    return path


def read_scan_csv(path: str) -> List[ScanRow]:
    """Inverse of write_scan_csv (the two off-schema fields come back zero)."""
    rows: List[ScanRow] = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader))
        if header != CSV_COLUMNS:
            raise ConfigError(f"unexpected scan CSV header: {header!r}")
        for rec in reader:
            rows.append(ScanRow(
                N=int(rec[0]),
                party_sizes=tuple(int(s) for s in rec[1].split(":")),
                pair=rec[2],
                P_EN_pos=float(rec[3]), SE_EN=float(rec[4]),
                P_g_pos=float(rec[5]), SE_g=float(rec[6]),
                P_SA_pos=float(rec[7]), mean_SA=float(rec[8]),
                bound_pair=float(rec[9]), bound_page=float(rec[10]),
            ))
    return rows


def _by_n(rows: Sequence[ScanRow]) -> Dict[int, List[ScanRow]]:
    grouped: Dict[int, List[ScanRow]] = {}
    for row in rows:
        grouped.setdefault(row.N, []).append(row)
    return grouped


def union_bound_report(rows: Sequence[ScanRow]) -> List[UnionBoundCheck]:
    """Compare P(S_A>0) with the summed pairwise witness rates per N.

    This reports rather than asserts: the whole point of the scan is that
    the union bound fails once the probe party's entanglement is spread
    over many partners.
    """
    report = []
    for n, group in sorted(_by_n(rows).items()):
        lhs = group[0].P_SA_pos
        rhs = sum(r.P_EN_pos + r.P_g_pos for r in group)
        var = sum(r.SE_EN ** 2 + r.SE_g ** 2 for r in group)
        m = group[0].samples
        if m > 0:
            var += lhs * (1.0 - lhs) / m
        se_total = math.sqrt(var)
        report.append(UnionBoundCheck(
            N=n, lhs=lhs, rhs=rhs, se_total=se_total,
            holds=lhs <= rhs + 4.0 * se_total,
            tension=(rhs < 0.1 and lhs >= 0.99),
        ))
    return report


def page_bound_report(rows: Sequence[ScanRow]) -> List[PageBoundCheck]:
    """Check mean S_A against the random-subsystem expectation per N.

    A uniformly random pure state on N qubits gives a small subsystem of
    n_a qubits nearly maximal entropy; stabilizer sampling concentrates the
    same way, so the mean should clear the bound (minus three standard
    errors) while never exceeding n_a * ln 2.
    """
    report = []
    for n, group in sorted(_by_n(rows).items()):
        row = group[0]
        n_a = row.party_sizes[0]
        upper = n_a * LN2
        above = row.mean_SA >= row.bound_page - 3.0 * row.se_mean_sa
        below = row.mean_SA <= upper + 1e-12
        report.append(PageBoundCheck(
            N=n, n_a=n_a, mean_sa=row.mean_SA, se_mean=row.se_mean_sa,
            bound=row.bound_page, upper=upper, holds=above and below,
        ))
    return report


def gsd_prevalence(n_list: Sequence[int], samples: int, seed: int = 0) -> Dict[int, float]:
    """Fraction of uniform stabilizer states with a Schmidt-diagonal form.

    Works on dense vectors, so qubit counts are capped by the dense
    converter.  The fraction shrinks quickly with N: the form requires
    every party to hold an orthonormal branch frame, which generic
    stabilizer states lose as soon as entanglement spreads.
    """
    out: Dict[int, float] = {}
    for n in n_list:
        if n > 12:
            raise CapacityError(f"prevalence probe is dense-only, N={n} > 12")
        hits = 0
        for idx in range(samples):
            tab = random_stabilizer(n, seed=(seed, n, idx))
            if gsd_detect(to_dense(tab)) is not None:
                hits += 1
        out[n] = hits / samples
    return out
