"""Picard behaviour against the size of the initial data.

Writes one CSV row per scale: first increment, largest contraction ratio,
iterations and final status.  Useful for locating the smallness threshold.

    python scripts/smallness_sweep.py --resolution 64 --out sweep.csv
"""
import argparse
import csv
import warnings

import numpy as np

from meyer_ns.solver import PRESETS, SolverConfig, picard_solve, preset_field
from meyer_ns.spectral import FrequencyLattice


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--preset", choices=PRESETS, default="single-atom")
    ap.add_argument("--resolution", type=int, default=64)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--scales", type=float, nargs="+",
                    default=list(np.logspace(-4, 1, 11)))
    ap.add_argument("--out", default="smallness_sweep.csv")
    args = ap.parse_args()

    lat = FrequencyLattice(2, args.resolution)
    cfg = SolverConfig(samples_per_shell=4, max_iter=12)
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["scale", "first_increment", "max_ratio", "iterations", "status"])
        for s in args.scales:
            a = preset_field(args.preset, lat, s, args.seed)
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                st = picard_solve(a, cfg, with_residual=False)
            w.writerow([repr(s), repr(st.increments[0]), repr(max(st.ratios, default=0.0)),
                        st.iterations, st.status])
            print(f"scale {s:.2e}: {st.status} after {st.iterations} iterations")


if __name__ == "__main__":
    main()
