#!/usr/bin/env python3
"""Map the bistable family: fixed-point sweep plus quasi-static loops.

Writes bifurcation.csv and hysteresis.csv for a bistable (theta=1) and a
monostable (theta=-1) run under --out, then prints the jump locations and
loop areas next to the closed-form fold prediction.
"""

import argparse
import json
import math
import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from attractorlab.harness import load_config, run_scenario  # noqa: E402


def scenario(kind, out, theta, step):
    params = {"theta": theta, "lambda_lo": -0.6, "lambda_hi": 0.6, "step": step}
    return {
        "kind": kind,
        "master_seed": 0,
        "replicates": 1,
        "output_dir": out,
        "params": params,
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="runs/hysteresis")
    ap.add_argument("--step", type=float, default=1e-3)
    args = ap.parse_args()

    fold = 2.0 / (3.0 * math.sqrt(3.0))
    print(f"closed-form folds for theta=1: lambda = +/-{fold:.6f}")

    for theta, label in ((1.0, "bistable"), (-1.0, "monostable")):
        out = os.path.join(args.out, label)
        run_scenario(load_config(json.dumps(scenario("bifurcation", out, theta, args.step))))
        traces, summary, _ = run_scenario(
            load_config(json.dumps(scenario("hysteresis", out, theta, args.step)))
        )
        loop = traces[0]
        print(
            f"theta={theta:+.0f}: jumps_up={list(loop.jumps_up)} "
            f"jumps_down={list(loop.jumps_down)} loop_area={loop.loop_area:.4f}"
        )
        print(f"  wrote {out}/bifurcation.csv and {out}/hysteresis.csv")


if __name__ == "__main__":
    main()
