"""Fitted decay constants of every kernel estimate across resolutions.

    python scripts/resolution_study.py --resolutions 32 64 128 --out constants.csv
"""
import argparse
import csv

from meyer_ns.kernels import ESTIMATES, certify


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--resolutions", type=int, nargs="+", default=[32, 64, 128])
    ap.add_argument("--estimate", action="append", choices=ESTIMATES)
    ap.add_argument("--count", type=int, default=100)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default="resolution_study.csv")
    args = ap.parse_args()

    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["estimate", "M", "C", "c", "N", "C_at_2M", "drift", "certified"])
        for est in args.estimate or ESTIMATES:
            for M in args.resolutions:
                r = certify(est, M, args.count, args.seed)
                w.writerow([est, M, repr(r.fit.C), repr(r.fit.c), r.fit.N,
                            repr(r.fit_fine.C), repr(r.drift), r.certified])
                print(f"{est} M={M}: C={r.fit.C:.4g} drift={r.drift:.3f}")


if __name__ == "__main__":
    main()
