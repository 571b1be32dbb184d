"""Command-line front end.

Subcommands
-----------
analyze
    Entropies, correlation measures, and (for tableaus) exact pair counts.
eop
    Optimize the multipartite purification cost over a block split and
    report the gap; the JSON result can seed ``recover --from-eop``.
recover
    Run the block-local recovery map at the optimizer's purification and
    compare -2 log F against the gap estimate.
certify
    2-producibility verdict for a dense state or tableau.
scan
    Random-stabilizer scan with CSV output and optional figures.

Exit codes: 0 when every reported check passes, 1 when some check is
false, 2 for usage, parse, or version problems.  JSON documents carry
``schema_version`` 1; files written without --out land in $EOPKIT_OUTDIR.
"""

from __future__ import annotations

import argparse
import csv as csv_mod
import io as io_mod
import json
import logging
import math
import os
import sys
from dataclasses import asdict
from typing import List, Optional

import numpy as np

from . import __version__
from .errors import (
    CapacityError,
    ConfigError,
    DomainError,
    ParseError,
    RegionError,
    VersionError,
)
from .qdense import (
    DensityOperator,
    PureState,
    conditional_mutual_information,
    entropy,
    entropy_of_region,
    fidelity,
    log_negativity,
    markov_gap,
    mirror_label,
    mutual_information,
    partial_trace,
    reflected_entropy,
)
from .stab import StabilizerTableau, pairwise_counts, region_entropy
from .eop import (
    AncillaPartition,
    EopResult,
    OptimizerConfig,
    eop_bipartite,
    generalized_gap,
    purified_state,
)
from .recovery import local_petz_recover, rotated_locc_recover
from .structure import VERDICT_CERTIFIED, certify_2producible, certify_tableau
from .experiments import (
    ScanConfig,
    page_bound_report,
    run_scan,
    union_bound_report,
)
from .io import load_any, state_fingerprint

SCHEMA_VERSION = 1
BOUND_SLACK = 1e-6

log = logging.getLogger("eopkit")


# ---------------------------------------------------------------------------
# plumbing
# ---------------------------------------------------------------------------

def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    return obj


def _flatten(doc, prefix=""):
    for key, val in doc.items():
        name = f"{prefix}{key}"
        if isinstance(val, dict):
            yield from _flatten(val, name + ".")
        elif isinstance(val, list):
            yield name, json.dumps(val)
        elif isinstance(val, float):
            yield name, repr(val)
        else:
            yield name, val


def _render(fmt: str, doc: dict) -> str:
    doc = _jsonable(doc)
    if fmt == "json":
        return json.dumps(doc, indent=2) + "\n"
    buf = io_mod.StringIO()
    writer = csv_mod.writer(buf)
    writer.writerow(["key", "value"])
    for key, val in _flatten(doc):
        writer.writerow([key, val])
    return buf.getvalue()


def _out_path(args, default_name: Optional[str]) -> Optional[str]:
    outdir = os.environ.get("EOPKIT_OUTDIR")
    if args.out:
        if outdir and not os.path.isabs(args.out):
            return os.path.join(outdir, args.out)
        return args.out
    if outdir and default_name:
        return os.path.join(outdir, default_name)
    return None


def _emit(args, doc: dict, default_name: Optional[str]) -> None:
    text = _render(args.format, doc)
    path = _out_path(args, default_name)
    if path:
        parent = os.path.dirname(os.path.abspath(path))
        os.makedirs(parent, exist_ok=True)
        with open(path, "w") as fh:
            fh.write(text)
        log.info("wrote %s", path)
    sys.stdout.write(text)


def _parse_blocks(text: Optional[str], labels) -> List[List[str]]:
    if text is None:
        return [[lab] for lab in labels]
    blocks = []
    for chunk in text.split("|"):
        block = [lab.strip() for lab in chunk.split(",") if lab.strip()]
        if not block:
            raise ConfigError(f"empty block in {text!r}")
        blocks.append(block)
    return blocks


def _parse_parts(text: str) -> List[List[int]]:
    parts = []
    for chunk in text.split("|"):
        try:
            part = [int(tok) for tok in chunk.split(",") if tok.strip()]
        except ValueError:
            raise ConfigError(f"parts must be qubit indices, got {chunk!r}") from None
        parts.append(part)
    return parts


def _load_dense(path: str):
    obj = load_any(path)
    if isinstance(obj, StabilizerTableau):
        raise DomainError("this command needs a dense state file, got a tableau")
    return obj


def _opt_config(args) -> OptimizerConfig:
    kw = {"seed": args.seed}
    if getattr(args, "restarts", None) is not None:
        kw["restarts"] = args.restarts
    return OptimizerConfig(**kw)


# ---------------------------------------------------------------------------
# analyze
# ---------------------------------------------------------------------------

def _analyze_dense(state, fingerprint: str, with_cmi: bool) -> dict:
    labels = state.spec.labels
    pure = isinstance(state, PureState)
    if pure:
        ent = {lab: entropy_of_region(state, [lab]) for lab in labels}
    else:
        ent = {lab: entropy(partial_trace(state, [lab])) for lab in labels}
    doc = {
        "schema_version": SCHEMA_VERSION,
        "kind": "pure" if pure else "density",
        "state_fingerprint": fingerprint,
        "parties": [{"label": lab, "dim": dim} for lab, dim in state.spec.parties],
        "entropies": ent,
    }
    if not pure:
        doc["total_entropy"] = entropy(state)
    if len(labels) < 2:
        return doc
    pairs = {}
    for i, a in enumerate(labels):
        for b in labels[i + 1:]:
            rho_ab = partial_trace(state, [a, b])
            pairs[f"{a}:{b}"] = {
                "mutual_information": mutual_information(state, [a], [b]),
                "log_negativity": log_negativity(rho_ab, [a], [b]),
                "reflected_entropy": reflected_entropy(rho_ab, [a], [b]),
                "markov_gap": markov_gap(rho_ab, [a], [b]),
            }
    doc["pairs"] = pairs
    if with_cmi and len(labels) >= 3:
        cmi = {}
        for i, a in enumerate(labels):
            for b in labels[i + 1:]:
                rest = [lab for lab in labels if lab not in (a, b)]
                cmi[f"{a}:{b}|rest"] = conditional_mutual_information(
                    state, [a], [b], rest)
        doc["conditional_mutual_information"] = cmi
    return doc


def _analyze_tableau(tab: StabilizerTableau, fingerprint: str,
                     parts: Optional[List[List[int]]]) -> dict:
    if parts is None:
        parts = [[q] for q in range(tab.n)]
    counts = pairwise_counts(tab, parts)
    pairs = {}
    for (i, j), c in sorted(counts.items()):
        pairs[f"{i}:{j}"] = {
            "locals": list(c.locals),
            "e_ab": c.e_ab, "e_ac": c.e_ac, "e_bc": c.e_bc, "g": c.g,
        }
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "tableau",
        "state_fingerprint": fingerprint,
        "qubits": tab.n,
        "parts": [sorted(p) for p in parts],
        "region_entropies": {str(i): region_entropy(tab, p)
                             for i, p in enumerate(parts)},
        "pairs": pairs,
    }


def cmd_analyze(args) -> int:
    obj = load_any(args.state)
    fp = state_fingerprint(args.state)
    if isinstance(obj, StabilizerTableau):
        parts = _parse_parts(args.partition) if args.partition else None
        doc = _analyze_tableau(obj, fp, parts)
    else:
        if args.partition:
            raise ConfigError("--partition only applies to tableau input")
        doc = _analyze_dense(obj, fp, args.cmi)
    _emit(args, doc, f"analyze.{args.format}")
    return 0


# ---------------------------------------------------------------------------
# eop
# ---------------------------------------------------------------------------

def cmd_eop(args) -> int:
    obj = _load_dense(args.state)
    cfg = _opt_config(args)
    fp = state_fingerprint(args.state)
    if isinstance(obj, DensityOperator):
        res = eop_bipartite(obj, cfg)
        a, b = obj.spec.labels
        gap = 2.0 * res.value - mutual_information(obj, [a], [b])
        doc = {
            "schema_version": SCHEMA_VERSION,
            "state_fingerprint": fp,
            "blocks": [[a], [b]],
            "value": res.value,
            "lower_bound": res.lower_bound,
            "upper_bound": res.upper_bound,
            "gap": gap,
            "best_partition": list(res.best_partition.factor_dims),
            "unitary_params": res.unitary_params,
            "term_entropies": list(res.term_entropies),
            "trace": list(res.trace),
            "converged": res.converged,
            "iterations": res.iterations,
            "seed": args.seed,
        }
        ok = res.converged
    else:
        blocks = _parse_blocks(args.blocks, obj.spec.labels)
        rep = generalized_gap(obj, blocks, cfg)
        res = rep.result
        doc = {
            "schema_version": SCHEMA_VERSION,
            "state_fingerprint": fp,
            "blocks": blocks,
            "value": res.value,
            "lower_bound": res.lower_bound,
            "upper_bound": res.upper_bound,
            "gap": rep.gap,
            "cmi_gap": rep.cmi_gap,
            "cmi_terms": list(rep.cmi_terms),
            "entropy_sum": rep.entropy_sum,
            "alpha_entropy": rep.alpha_entropy,
            "best_partition": list(res.best_partition.factor_dims),
            "unitary_params": res.unitary_params,
            "term_entropies": list(res.term_entropies),
            "trace": list(res.trace),
            "converged": res.converged,
            "iterations": res.iterations,
            "seed": args.seed,
        }
        ok = res.converged and abs(rep.gap - rep.cmi_gap) <= 1e-6
    doc["check_passed"] = ok
    _emit(args, doc, f"eop.{args.format}")
    return 0 if ok else 1


# ---------------------------------------------------------------------------
# recover
# ---------------------------------------------------------------------------

def _result_from_doc(doc) -> EopResult:
    return EopResult(
        value=float(doc["value"]),
        lower_bound=float(doc["lower_bound"]),
        upper_bound=float(doc["upper_bound"]),
        best_partition=AncillaPartition(tuple(int(d) for d in doc["best_partition"])),
        unitary_params=np.asarray(doc["unitary_params"], dtype=float),
        trace=tuple(float(x) for x in doc.get("trace", ())),
        converged=bool(doc["converged"]),
        iterations=int(doc["iterations"]),
        term_entropies=tuple(float(x) for x in doc["term_entropies"]),
    )


def cmd_recover(args) -> int:
    psi = _load_dense(args.state)
    if not isinstance(psi, PureState):
        raise DomainError("recovery starts from a pure state file")
    fp = state_fingerprint(args.state)
    cfg = _opt_config(args)
    if args.from_eop:
        with open(args.from_eop) as fh:
            try:
                doc = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid JSON: {exc.msg}",
                                 line=exc.lineno, offset=exc.colno) from None
        if doc.get("schema_version") != SCHEMA_VERSION:
            raise VersionError(
                f"eop report schema {doc.get('schema_version')!r} is not {SCHEMA_VERSION}")
        if doc.get("state_fingerprint") != fp:
            raise VersionError(
                "eop report was computed from a different state file")
        blocks = [list(b) for b in doc["blocks"]]
        result = _result_from_doc(doc)
        gap = float(doc["gap"])
    else:
        if args.blocks is None:
            raise ConfigError("recover needs --blocks or --from-eop")
        blocks = _parse_blocks(args.blocks, psi.spec.labels)
        rep = generalized_gap(psi, blocks, cfg)
        result, gap = rep.result, rep.gap

    pur = purified_state(psi, blocks, result)
    merged = ["+".join(b) for b in blocks]
    alpha = [[lab] for lab in merged]
    ancillas = [[mirror_label(lab)] for lab in merged]
    recover_fn = rotated_locc_recover if args.mode == "rotated" else local_petz_recover
    rec = recover_fn(pur, alpha, ancillas)
    fid = fidelity(rec, pur.density())
    m2lf = -2.0 * math.log(max(fid, 1e-300))
    g_est = 2.0 * gap
    ok = m2lf <= g_est + BOUND_SLACK
    out = {
        "schema_version": SCHEMA_VERSION,
        "state_fingerprint": fp,
        "mode": args.mode,
        "blocks": blocks,
        "fidelity": fid,
        "minus_two_log_F": m2lf,
        "g_estimate": g_est,
        "bound_satisfied": ok,
    }
    _emit(args, out, f"recover.{args.format}")
    return 0 if ok else 1


# ---------------------------------------------------------------------------
# certify
# ---------------------------------------------------------------------------

def cmd_certify(args) -> int:
    obj = load_any(args.state)
    fp = state_fingerprint(args.state)
    if isinstance(obj, StabilizerTableau):
        if args.parts is None:
            raise ConfigError("--parts is required for tableau input")
        cert = certify_tableau(obj, _parse_parts(args.parts),
                               threshold=args.threshold)
    else:
        if not isinstance(obj, PureState):
            raise DomainError("certification needs a pure state or tableau")
        cert = certify_2producible(obj, _opt_config(args),
                                   threshold=args.threshold)
    doc = {
        "schema_version": SCHEMA_VERSION,
        "state_fingerprint": fp,
        "verdict": cert.verdict,
        "chain": [list(c) for c in cert.chain],
        "gaps": list(cert.gaps),
        "lower_bounds": list(cert.lower_bounds),
        "q_values": list(cert.q_values),
        "threshold": cert.threshold,
        "entropy_refuted": cert.entropy_refuted,
    }
    _emit(args, doc, f"certify.{args.format}")
    return 0 if cert.verdict == VERDICT_CERTIFIED else 1


# ---------------------------------------------------------------------------
# scan
# ---------------------------------------------------------------------------

def cmd_scan(args) -> int:
    n_list = tuple(int(tok) for tok in args.n_list.split(","))
    ratios = tuple(int(tok) for tok in args.ratios.split(":"))
    csv_path = args.out or os.path.join(
        os.environ.get("EOPKIT_OUTDIR", "."), "scan.csv")
    cfg = ScanConfig(n_list=n_list, ratios=ratios, samples=args.samples,
                     seed=args.seed, out=csv_path, threads=args.threads)
    log.info("scanning N in %s with %d samples each", n_list, args.samples)
    rows = run_scan(cfg)
    union = union_bound_report(rows)
    page = page_bound_report(rows)
    doc = {
        "schema_version": SCHEMA_VERSION,
        "csv": csv_path,
        "samples": args.samples,
        "union_bound": [asdict(c) for c in union],
        "page_bound": [asdict(c) for c in page],
    }
    if args.figures:
        from .figures import render_scan_figures
        stem = os.path.splitext(os.path.basename(csv_path))[0]
        doc["figures"] = render_scan_figures(
            rows, os.path.dirname(os.path.abspath(csv_path)), prefix=stem)
    text = _render(args.format, doc)
    sys.stdout.write(text)
    return 0 if all(c.holds for c in page) else 1


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0,
                        help="optimizer / sampler seed (default 0)")
    common.add_argument("--out", default=None,
                        help="output path (default: $EOPKIT_OUTDIR when set)")
    common.add_argument("--format", choices=("json", "csv"), default="json",
                        help="report format (default json)")
    common.add_argument("--log-level", default="warning",
                        choices=("debug", "info", "warning", "error"))
    common.add_argument("--threads", type=int, default=1,
                        help="worker threads; results never depend on this")

    parser = argparse.ArgumentParser(
        prog="eopkit",
        description="purification-cost gaps, recovery bounds, and certificates")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", parents=[common],
                       help="entropies and correlation measures")
    p.add_argument("state", help="state JSON or tableau text file")
    p.add_argument("--cmi", action="store_true",
                   help="include every pairwise I(A:B|rest) (dense input)")
    p.add_argument("--partition", default=None,
                   help="qubit groups for tableau input, e.g. '0,1|2|3' "
                        "(default: one party per qubit)")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("eop", parents=[common],
                       help="optimize the purification cost over blocks")
    p.add_argument("state")
    p.add_argument("--blocks", default=None,
                   help="block split like 'A|B,C' (default: one block per party)")
    p.add_argument("--restarts", type=int, default=None)
    p.set_defaults(func=cmd_eop)

    p = sub.add_parser("recover", parents=[common],
                       help="block-local recovery at the optimal purification")
    p.add_argument("state")
    p.add_argument("--blocks", default=None)
    p.add_argument("--from-eop", dest="from_eop", default=None,
                   help="reuse a saved eop JSON report")
    p.add_argument("--mode", choices=("local", "rotated"), default="local")
    p.add_argument("--restarts", type=int, default=None)
    p.set_defaults(func=cmd_recover)

    p = sub.add_parser("certify", parents=[common],
                       help="2-producibility verdict")
    p.add_argument("state")
    p.add_argument("--parts", default=None,
                   help="tableau qubit grouping like '0,4|1|2|3'")
    p.add_argument("--threshold", type=float, default=1e-4)
    p.add_argument("--restarts", type=int, default=None)
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("scan", parents=[common],
                       help="random-stabilizer scan")
    p.add_argument("--n-list", default="10,20,30")
    p.add_argument("--ratios", default="1:3:3:3")
    p.add_argument("--samples", type=int, default=2000)
    p.add_argument("--figures", action="store_true",
                   help="render PNG figures next to the CSV")
    p.set_defaults(func=cmd_scan)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = _build_parser().parse_args(argv)
    logging.basicConfig(level=getattr(logging, args.log_level.upper()),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ParseError, VersionError, ConfigError, DomainError, RegionError,
            CapacityError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
