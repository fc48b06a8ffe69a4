#!/usr/bin/env python3
"""Regenerate the embedded quantile tables for the two limit laws.

Simulates the standardized process W(t) - t**2 once at the default
resolution (T=3, h=5e-4, 2*10**5 replications) and writes both tables
into the package data directory.  Takes a couple of minutes.
"""

import argparse
import pathlib
import time

from splitset.limit_process import (
    CHERNOFF_ARGMAX,
    MAXQ1,
    DEFAULT_SEED,
    ProcessSpec,
    format_table,
    generate_tables,
)

TABLE_DIR = pathlib.Path(__file__).resolve().parents[1] / "src" / "splitset" / "_tables"


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--reps", type=int, default=200_000)
    parser.add_argument("--T", type=float, default=3.0)
    parser.add_argument("--h", type=float, default=5e-4)
    parser.add_argument("--seed", type=int, default=DEFAULT_SEED)
    parser.add_argument("--outdir", type=pathlib.Path, default=TABLE_DIR)
    args = parser.parse_args()

    spec = ProcessSpec(half_width=args.T, step=args.h,
                       replications=args.reps, seed=args.seed)
    start = time.time()
    argmax_table, max_table = generate_tables(spec)
    print("simulated %d replications in %.1f s" % (args.reps, time.time() - start))

    args.outdir.mkdir(parents=True, exist_ok=True)
    for dist, table in ((CHERNOFF_ARGMAX, argmax_table), (MAXQ1, max_table)):
        path = args.outdir / (dist + ".tsv")
        path.write_text(format_table(table), encoding="utf-8")
        print("wrote", path)


if __name__ == "__main__":
    main()
