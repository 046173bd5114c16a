#!/usr/bin/env python3
"""Outcome frequencies of the imitation game across initial fractions.

Sweeps x0 over a grid for a coordination game (interior unstable point at
1/2) and prints the per-x0 outcome mix; the flip around the interior point
is the path-dependence signature.  Writes basin_map.csv under --out.
"""

import argparse
import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from attractorlab.abm import AbmConfig, GameMatrix, basin_experiment  # noqa: E402


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=5000)
    ap.add_argument("--rounds", type=int, default=40)
    ap.add_argument("--replicates", type=int, default=30)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--out", default="runs/basin")
    args = ap.parse_args()

    x0_grid = [round(0.1 * k, 1) for k in range(11)]
    template = AbmConfig(
        n=args.n, x0=0.5, game=GameMatrix(r=1, sg=0, t=0, pu=1),
        rounds=args.rounds, rng_seed=args.seed,
    )
    counts = basin_experiment(template, x0_grid, args.replicates)

    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, "basin_map.csv")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("x0,agi_first,dci_first,undecided\n")
        for x0 in x0_grid:
            row = counts[x0]
            fh.write(f"{x0!r},{row['agi_first']},{row['dci_first']},{row['undecided']}\n")
            print(f"x0={x0:.1f}: {row}")
    print(f"wrote {path}")


if __name__ == "__main__":
    main()
