#!/usr/bin/env python3
"""Rebuild the benchmark tables as CSV files.

Usage:
    python scripts/reproduce_tables.py [--reps 10000] [--seed 0] [--out-dir out]

Writes table1_multi.csv, table1_single.csv and table2.csv.  The surplus table
at 1e4 replications takes a few minutes over the full grid; pass --cells to
restrict it.
"""

import argparse
import pathlib
import sys

from scenopt.cuboid_bench import TABLE_EPS, TABLE_N, run_table1, run_table2


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--reps", type=int, default=10_000)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--theta", type=float, default=1e-6)
    parser.add_argument("--out-dir", default="out")
    parser.add_argument(
        "--cells", default="all",
        help="'all' or comma-separated 'epspercent:n' pairs, e.g. '1:2,10:10'",
    )
    args = parser.parse_args()

    out = pathlib.Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    multi, single = run_table1(args.theta)
    header = "eps_percent," + ",".join(str(n) for n in TABLE_N)
    for name, table in (("table1_multi.csv", multi), ("table1_single.csv", single)):
        lines = [header]
        for r, eps in enumerate(TABLE_EPS):
            lines.append(f"{eps * 100:g}," + ",".join(str(int(v)) for v in table[r]))
        (out / name).write_text("\n".join(lines) + "\n")
        print(out / name)

    if args.cells == "all":
        eps_list, n_list = TABLE_EPS, TABLE_N
    else:
        eps_list, n_list = [], []
        for piece in args.cells.split(","):
            eps_text, n_text = piece.split(":")
            eps = float(eps_text) / 100.0
            if eps not in eps_list:
                eps_list.append(eps)
            if int(n_text) not in n_list:
                n_list.append(int(n_text))
    surplus = run_table2(
        n_list=tuple(n_list), eps_list=tuple(eps_list),
        replications=args.reps, seed=args.seed, theta_total=args.theta,
    )
    lines = ["eps_percent,n,mean_surplus,stderr,replications"]
    for eps in eps_list:
        for n in n_list:
            mean, stderr = surplus[(eps, n)]
            lines.append(f"{eps * 100:g},{n},{mean:.6f},{stderr:.6f},{args.reps}")
    (out / "table2.csv").write_text("\n".join(lines) + "\n")
    print(out / "table2.csv")
    return 0


if __name__ == "__main__":
    sys.exit(main())
