"""Command-line front end: ``meyer-ns {verify-basis, verify-estimates, solve}``.

Every subcommand writes ``report.json`` plus plot-ready CSV tables into
``--out`` and exits 0 iff every check in the run passed.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from .config import ConfigError, load_config
from .solver import PRESETS
from .suites import ALL_ESTIMATES, run_solve, verify_basis, verify_estimates

EXIT_USAGE = 2


def _clean(obj):
    """Make a report JSON-safe: numpy scalars to Python, tuples to lists."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def write_json(path: Path, report: dict) -> None:
    path.write_text(json.dumps(_clean(report), sort_keys=True, indent=2) + "\n")


def write_csv(path: Path, header: list[str], rows) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in r])


def _basis_tables(out: Path, report: dict) -> None:
    write_csv(out / "checks.csv", ["check", "value", "tolerance", "passed"],
              ([r["check"], r["value"], r["tolerance"], r["passed"]] for r in report["rows"]))


def _estimate_tables(out: Path, report: dict) -> None:
    rows = []
    for r in report["rows"]:
        if "C" in r:
            rows.append([r["estimate"], "decay", r["C"], r["C_fine"], r["drift"], r["passed"]])
        elif r["estimate"] == "embedding":
            for case in r["cases"]:
                vals = [x["constant"] for x in case["runs"]]
                rows.append([f"embedding(p={case['p']:g},m={case['m']:g})", "ratio",
                             min(vals), max(vals), case["spread"], case["passed"]])
        else:
            a, b = (x["constant"] for x in r["runs"])
            rows.append([r["estimate"], "ratio", a, b, r["spread"], r["passed"]])
    write_csv(out / "estimates.csv",
              ["estimate", "kind", "constant", "constant_fine", "drift_or_spread", "passed"], rows)


def _solve_tables(out: Path, report: dict, state) -> None:
    incs = state.increments
    write_csv(out / "increments.csv", ["iteration", "increment", "ratio"],
              ([i + 1, v, state.ratios[i - 1] if i > 0 else ""] for i, v in enumerate(incs)))
    rows = []
    if state.report is not None:
        for j, v in sorted(state.report.A0.items()):
            rows.append(["A0", j, "", v])
        for (j, jp), v in sorted(state.report.Am.items()):
            rows.append(["Am", j, jp, v])
    write_csv(out / "blocks.csv", ["block", "shell", "level", "value"], rows)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="key = value file overriding the defaults")
    common.add_argument("--seed", type=int, help="random seed")
    common.add_argument("--resolution", type=int, metavar="M", help="points per axis")
    common.add_argument("--out", metavar="DIR", default="out", help="report directory (default: out)")

    ap = argparse.ArgumentParser(prog="meyer-ns", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    sub.add_parser("verify-basis", parents=[common], help="certify the periodic Meyer basis")
    est = sub.add_parser("verify-estimates", parents=[common], help="fit and certify the kernel estimates")
    est.add_argument("--estimate", action="append", choices=ALL_ESTIMATES, metavar="ID",
                     help=f"estimate id, repeatable (default: all of {', '.join(ALL_ESTIMATES)})")
    sol = sub.add_parser("solve", parents=[common], help="Picard iteration for the mild solution")
    sol.add_argument("--preset", choices=PRESETS, help="initial data preset")
    sol.add_argument("--scale", type=float, help="Besov norm of the initial data")
    sol.add_argument("--lambda", dest="lam", type=int, choices=(2, 4),
                     help="also run the scaling check with this factor")
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    overrides = {"seed": args.seed, "M": args.resolution}
    if args.command == "solve":
        overrides.update(preset=args.preset, scale=args.scale, lam=args.lam)
    try:
        cfg = load_config(args.config, **overrides)
    except ConfigError as exc:
        print(f"meyer-ns: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"meyer-ns: cannot read config: {exc}", file=sys.stderr)
        return EXIT_USAGE
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    if args.command == "verify-basis":
        report = verify_basis(cfg)
        _basis_tables(out, report)
    elif args.command == "verify-estimates":
        report = verify_estimates(cfg, args.estimate)
        _estimate_tables(out, report)
    else:
        report, state = run_solve(cfg)
        _solve_tables(out, report, state)
    report["config"] = cfg.to_dict()
    write_json(out / "report.json", report)
    print(f"{args.command}: {'PASS' if report['passed'] else 'FAIL'} ({out / 'report.json'})")
    return 0 if report["passed"] else 1


if __name__ == "__main__":
    sys.exit(main())
