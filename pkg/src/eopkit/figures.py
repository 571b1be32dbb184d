"""Matplotlib renderings of scan output (headless backend)."""

import os
from typing import List, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .experiments import ScanRow, page_bound_report, union_bound_report


def render_scan_figures(rows: Sequence[ScanRow], outdir: str,
                        prefix: str = "scan") -> List[str]:
    """Render the union-bound and entropy summaries as PNGs.

    Returns the written paths: ``<prefix>_union.png`` compares P(S_A>0)
    with the summed pairwise witness rates, ``<prefix>_entropy.png`` puts
    the mean subsystem entropy next to its expected floor and ceiling.
    """
    os.makedirs(outdir, exist_ok=True)
    union = union_bound_report(rows)
    page = page_bound_report(rows)
    ns = [c.N for c in union]
    paths = []

    fig, ax = plt.subplots(figsize=(5.4, 3.6))
    lhs = [c.lhs for c in union]
    rhs = [c.rhs for c in union]
    err = [4.0 * c.se_total for c in union]
    ax.plot(ns, lhs, "o-", label=r"$\hat P(S_A > 0)$")
    ax.errorbar(ns, rhs, yerr=err, fmt="s--", capsize=3,
                label=r"$\sum_X [\hat P(E_N > 0) + \hat P(g > 0)]$")
    for c in union:
        if c.tension:
            ax.annotate("bound fails", (c.N, c.rhs), textcoords="offset points",
                        xytext=(0, 12), ha="center", fontsize=8)
    ax.set_xlabel("total qubits N")
    ax.set_ylabel("rate")
    ax.set_ylim(-0.05, 1.1)
    ax.legend(loc="center left", fontsize=8)
    ax.set_title("pairwise witnesses vs subsystem entropy")
    fig.tight_layout()
    path = os.path.join(outdir, f"{prefix}_union.png")
    fig.savefig(path, dpi=150)
    plt.close(fig)
    paths.append(path)

    fig, ax = plt.subplots(figsize=(5.4, 3.6))
    means = [c.mean_sa for c in page]
    errs = [3.0 * c.se_mean for c in page]
    ax.errorbar(ns, means, yerr=errs, fmt="o-", capsize=3,
                label=r"mean $S_A$")
    ax.plot(ns, [c.bound for c in page], "k--", label="random-state floor")
    ax.plot(ns, [c.upper for c in page], "k:", label=r"$n_A \ln 2$ ceiling")
    ax.set_xlabel("total qubits N")
    ax.set_ylabel("entropy (nats)")
    ax.legend(fontsize=8)
    ax.set_title("probe-party entropy concentrates at the top")
    fig.tight_layout()
    path = os.path.join(outdir, f"{prefix}_entropy.png")
    fig.savefig(path, dpi=150)
    plt.close(fig)
    paths.append(path)
    return paths
