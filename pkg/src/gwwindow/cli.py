"""Command-line entry point: exact tables, Monte Carlo estimators,
limit-process functionals, inequality checks, and the acceptance suite.

Exit codes: 0 success, 1 invalid configuration, 2 acceptance failure.
Every JSON artifact carries {schema_version, config_hash, seed} so a rerun
with the same configuration is byte-comparable.
"""
from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import math
import os
import sys

import numpy as np

from . import bounds, exact, limit, simulate, verify
from .laws import DEFAULT_SEED, RngStream, law_from_spec, validate

SCHEMA_VERSION = "1.0"


def _resolve_law(text: str):
    """A law argument is a family name, an inline JSON object, or a path."""
    if text in ("binary", "geometric", "stable", "zipf"):
        return law_from_spec({"family": text})
    return law_from_spec(text)


def _config_hash(args: argparse.Namespace) -> str:
    skip = {"out", "func"}
    payload = {k: v for k, v in sorted(vars(args).items()) if k not in skip}
    blob = json.dumps(payload, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def _emit_json(args, payload: dict) -> None:
    doc = {"schema_version": SCHEMA_VERSION, "config_hash": _config_hash(args),
           "seed": getattr(args, "seed", DEFAULT_SEED), **payload}
    text = json.dumps(doc, indent=2, default=_jsonable) + "\n"
    _write(args, text)


def _jsonable(obj):
    if dataclasses.is_dataclass(obj):
        return dataclasses.asdict(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not serializable: {type(obj)}")


def _emit_csv(args, header: list[str], rows) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(repr(v) if isinstance(v, float) else str(v)
                              for v in row))
    _write(args, "\n".join(lines) + "\n")


def _write(args, text: str) -> None:
    out = getattr(args, "out", None)
    if out:
        with open(out, "w", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _estimator_payload(r: simulate.EstimatorResult) -> dict:
    return {"estimate": r.estimate, "std_error": r.std_error,
            "n_samples": r.n_samples, "censor_lo": r.censor_lo,
            "censor_hi": r.censor_hi, "stream": r.seed}


# ---------------------------------------------------------------------------
# Subcommand handlers


def _cmd_law(args):
    law = _resolve_law(args.law)
    if args.action == "describe":
        _emit_json(args, {"law": law.spec(),
                          "mean_offspring": law.mean_offspring(),
                          "variance_factor": law.variance_factor(),
                          "head_support": len(law.head_probs)})
        return 0
    report = validate(law)
    payload = {"law": report.law_spec, "passed": report.passed,
               "checks": [dataclasses.asdict(c) for c in report.checks],
               "flags": report.flags}
    _emit_json(args, payload)
    return 0 if report.passed else 1


def _cmd_exact(args):
    law = _resolve_law(args.law) if args.table != "constants" else None
    if args.table in ("q", "d", "a"):
        it = exact.extinction_iterates(law, args.n)
        rows = [(k, float(it.f0_values[k]), float(it.Q_values[k]),
                 float(it.d_values[k]) if k >= 1 else "",
                 float(it.a_values[k]))
                for k in range(args.n + 1)]
        _emit_csv(args, ["n", "f_n0", "Q", "d", "a"], rows)
    elif args.table == "total-pmf":
        series = exact.total_progeny_pmf(law, args.n)
        _emit_csv(args, ["n", "pmf"],
                  [(k, float(series.coeffs[k])) for k in range(args.n + 1)])
    else:
        _emit_json(args, {"alpha": args.alpha, "y": args.y,
                          **exact.tail_constants(args.alpha, args.y)})
    return 0


def _cmd_simulate(args):
    law = _resolve_law(args.law)
    stream = RngStream(seed=args.seed)
    if args.mode == "em":
        r = simulate.estimate_mean_window_max(law, args.m, args.j,
                                              args.samples, stream,
                                              workers=args.workers)
        _emit_json(args, {"quantity": "mean_window_max", "m": args.m,
                          "j": args.j, **_estimator_payload(r)})
    elif args.mode == "tail":
        j = None if args.j == 0 else args.j
        r = simulate.estimate_window_tail(law, j, args.n, args.samples,
                                          stream, gen_cap=args.gen_cap,
                                          workers=args.workers)
        _emit_json(args, {"quantity": "window_tail", "j": args.j, "n": args.n,
                          "gen_cap": args.gen_cap, **_estimator_payload(r)})
    else:
        paths = simulate.conditioned_paths(law, args.n, args.samples, stream,
                                           workers=args.workers)
        if args.dump_paths:
            rows = [(i, *map(int, row)) for i, row in enumerate(paths)]
            _emit_csv(args, ["path", *("z%d" % k for k in range(args.n + 1))],
                      rows)
        else:
            finals = paths[:, -1]
            _emit_json(args, {"quantity": "conditioned_paths", "n": args.n,
                              "n_paths": len(paths),
                              "mean_final": float(finals.mean()),
                              "max_final": int(finals.max())})
    return 0


def _cmd_limit(args):
    law = _resolve_law(args.law)
    stream = RngStream(seed=args.seed)
    if args.functional == "vstar":
        if args.method == "csbp":
            r = limit.csbp_alpha1_vstar(args.T, args.dt, args.paths, stream)
        else:
            r = limit.estimate_peak_mean(law, args.T, args.n_scale,
                                         args.paths, stream,
                                         workers=args.workers)
        _emit_json(args, {"quantity": "peak_mean", "T": args.T,
                          "method": args.method, **_estimator_payload(r)})
    elif args.functional == "phi":
        r = limit.estimate_phi(law, args.eta, args.n_scale, args.paths,
                               stream, workers=args.workers)
        _emit_json(args, {"quantity": "phi", "eta": args.eta,
                          **_estimator_payload(r)})
    else:
        p = limit.estimate_psi(law, args.y, args.T_cutoff, args.n_scale,
                               args.paths, stream, workers=args.workers)
        _emit_json(args, {"quantity": "psi", "y": args.y,
                          "estimate": p.estimate, "std_error": p.std_error,
                          "term1": p.term1, "term2": p.term2,
                          "term3": p.term3, "cutoff_bias": p.cutoff_bias,
                          "n_paths": p.n_paths, "stream": p.seed})
    return 0


def _cmd_bounds(args):
    law = _resolve_law(args.law)
    reports = bounds.check_grid(law, RngStream(seed=args.seed),
                                n_samples=args.samples)
    rows = []
    for r in reports:
        rows.append((r.bound_name, r.parameters.get("m"), r.parameters.get("k"),
                     float(r.rhs_value) if math.isfinite(r.rhs_value) else "inf",
                     float(r.mc_lhs.estimate) if r.mc_lhs else "",
                     float(r.mc_lhs.std_error) if r.mc_lhs else "",
                     r.verdict, r.note))
    _emit_csv(args, ["bound", "m", "k", "rhs", "mc_lhs", "mc_se",
                     "verdict", "note"], rows)
    return 0


def _cmd_verify(args):
    suite = None if args.suite == "all" else args.suite
    results = verify.run_suite(suite, seed=args.seed, workers=args.workers)
    payload = {"suite": args.suite,
               "passed": all(r.passed for r in results),
               "criteria": [dataclasses.asdict(r) for r in results]}
    _emit_json(args, payload)
    return 0 if payload["passed"] else 2


# ---------------------------------------------------------------------------
# Parser


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="gwwindow",
        description="Critical branching processes: moving-window maximal "
                    "progeny, exact recursions, and scaling-limit checks.")
    default_workers = int(os.environ.get("GW_WINDOW_WORKERS", "1"))
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, law=True):
        if law:
            p.add_argument("--law", default="binary",
                           help="family name, inline JSON, or path to a "
                                "JSON law spec")
        p.add_argument("--seed", type=int, default=DEFAULT_SEED)
        p.add_argument("--workers", type=int, default=default_workers)
        p.add_argument("--out", help="output file (default: stdout)")

    p = sub.add_parser("law", help="validate or describe an offspring law")
    p.add_argument("action", choices=["validate", "describe"])
    common(p)
    p.set_defaults(func=_cmd_law)

    p = sub.add_parser("exact", help="deterministic tables and constants")
    p.add_argument("table", choices=["q", "d", "a", "total-pmf", "constants"])
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--y", type=float, default=1.0)
    common(p)
    p.set_defaults(func=_cmd_exact)

    p = sub.add_parser("simulate", help="Monte Carlo estimators")
    p.add_argument("mode", choices=["em", "tail", "paths"])
    p.add_argument("--m", type=int, default=1000)
    p.add_argument("--j", type=int, default=1,
                   help="window length; 0 means the un-windowed total")
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--samples", type=int, default=10**4)
    p.add_argument("--gen-cap", type=int, default=simulate.DEFAULT_GEN_CAP)
    p.add_argument("--dump-paths", action="store_true")
    common(p)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("limit", help="scaling-limit functionals")
    p.add_argument("functional", choices=["vstar", "phi", "psi"])
    p.add_argument("--T", type=float, default=1.0)
    p.add_argument("--eta", type=float, default=1.0)
    p.add_argument("--y", type=float, default=1.0)
    p.add_argument("--T-cutoff", type=float, default=16.0)
    p.add_argument("--n-scale", type=int, default=1000)
    p.add_argument("--paths", type=int, default=2000)
    p.add_argument("--dt", type=float, default=0.01)
    p.add_argument("--method", choices=["gw", "csbp"], default="gw")
    common(p)
    p.set_defaults(func=_cmd_limit)

    p = sub.add_parser("bounds", help="tail-inequality checks")
    p.add_argument("action", choices=["check"])
    p.add_argument("--samples", type=int, default=10**5)
    common(p)
    p.set_defaults(func=_cmd_bounds)

    p = sub.add_parser("verify", help="run the acceptance suite")
    p.add_argument("--suite", choices=[*verify.SUITES, "all"], default="all")
    common(p, law=False)
    p.set_defaults(func=_cmd_verify)

    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, json.JSONDecodeError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
