#!/usr/bin/env python3
"""Calibration experiment: measured test behavior on information-free data.

Runs the type-1 pass-rate sweep over draw counts and the competitor
correlation sweep, printing both tables and optionally writing them as
JSON. The type-1 table includes the 1/(k+1) exchangeable-candidate rate
alongside the nominal 2^-k level so the two references can be compared
directly against the measurement.
"""

import argparse
import json
from pathlib import Path

from htboost import calibrate_correlation, calibrate_type1


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=100, help="rows per type-1 trial")
    ap.add_argument("--trials", type=int, default=2000)
    ap.add_argument("--k", default="1,2,3,4,5,6")
    ap.add_argument("--rho", type=float, default=0.0)
    ap.add_argument("--c", type=int, default=10000, help="correlation sample size")
    ap.add_argument("--reps", type=int, default=100)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", type=Path, help="optional JSON output path")
    args = ap.parse_args()

    ks = [int(v) for v in args.k.split(",")]
    type1 = calibrate_type1(args.n, ks, args.rho, args.trials, args.seed)
    print(f"type-1 pass rates (n={args.n}, rho={args.rho}, {args.trials} trials)")
    print(f"{'k':>3} {'nominal 2^-k':>13} {'1/(k+1)':>9} {'measured':>9} {'3*se':>7}")
    for row in type1:
        k = row["k_draws"]
        print(
            f"{k:>3} {row['alpha']:>13.4f} {1/(k+1):>9.4f} "
            f"{row['pass_rate']:>9.4f} {3*row['std_err']:>7.4f}"
        )

    corr = calibrate_correlation(args.c, [0.0, 0.1, 0.25, 0.5, 0.75, 0.9, 1.0], args.reps, args.seed)
    print(f"\ncompetitor correlation (c={args.c}, {args.reps} reps)")
    print(f"{'rho':>5} {'mean':>8} {'std':>8}")
    for row in corr:
        print(f"{row['rho']:>5.2f} {row['mean_corr']:>8.4f} {row['std_corr']:>8.4f}")

    if args.out:
        args.out.parent.mkdir(parents=True, exist_ok=True)
        args.out.write_text(json.dumps({"type1": type1, "correlation": corr}, indent=1))
        print(f"\nwrote {args.out}")


if __name__ == "__main__":
    main()
