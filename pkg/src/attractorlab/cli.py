"""Command-line front end.

``run`` executes a JSON scenario file; the shortcut subcommands
(``replicator``, ``bifurcate``, ``hysteresis``, ``netgrowth``, ``abm``,
``basin``) synthesize the equivalent config from flags and go through the
same loader, so flag runs and file runs with equal values emit identical
bytes.  ``report`` pretty-prints a run directory's summary.csv.

Exit codes: 0 success, 1 usage or config error, 2 runtime failure.
Diagnostics go to stderr; data files never contain log lines.  The env var
``ATTRACTORLAB_SEED`` overrides the config's master seed, and an explicit
``--seed`` flag overrides both.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys

from .harness import ConfigError, load_config, run_scenario

SEED_ENV = "ATTRACTORLAB_SEED"


def _err(message: str) -> None:
    print(f"attractorlab: {message}", file=sys.stderr)


def _info(args, message: str) -> None:
    if not getattr(args, "quiet", False):
        print(message, file=sys.stderr)


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors; the contract reserves 2 for runtime
    def error(self, message):
        self.print_usage(sys.stderr)
        _err(message)
        raise SystemExit(1)


def _add_common(sub, seeded=True):
    sub.add_argument("--out", default="out", help="output directory (default: out)")
    sub.add_argument("--jobs", type=int, default=1, help="max parallel replicates")
    sub.add_argument("--quiet", action="store_true", help="suppress status lines")
    if seeded:
        sub.add_argument("--seed", type=int, default=None, help="master seed (wins over env)")
        sub.add_argument("--replicates", type=int, default=1)


def _parse_pair(text: str, flag: str) -> tuple[int, int]:
    parts = text.split(",")
    if len(parts) != 2:
        raise ConfigError(f"{flag} expects two comma-separated integers, got {text!r}")
    try:
        return int(parts[0]), int(parts[1])
    except ValueError:
        raise ConfigError(f"{flag} expects integers, got {text!r}") from None


def _parse_game(text: str) -> dict:
    parts = text.split(",")
    if len(parts) != 4:
        raise ConfigError(f"--game expects 'r,sg,t,pu', got {text!r}")
    try:
        r, sg, t, pu = (float(p) for p in parts)
    except ValueError:
        raise ConfigError(f"--game expects numbers, got {text!r}") from None
    return {"r": r, "sg": sg, "t": t, "pu": pu}


def _parse_topology(text: str) -> dict:
    if text == "well_mixed":
        return {"kind": "well_mixed"}
    if text.startswith("ring:"):
        try:
            return {"kind": "ring_lattice", "k": int(text[5:])}
        except ValueError:
            raise ConfigError(f"--topology ring expects 'ring:K', got {text!r}") from None
    if text.startswith("file:"):
        return {"kind": "imported", "path": text[5:]}
    raise ConfigError(f"unknown topology {text!r}; use well_mixed, ring:K or file:PATH")


def _parse_update(text: str) -> dict:
    if text == "proportional_imitation":
        return {"kind": "proportional_imitation"}
    if text.startswith("fermi:"):
        try:
            return {"kind": "fermi", "beta": float(text[6:])}
        except ValueError:
            raise ConfigError(f"--update fermi expects 'fermi:BETA', got {text!r}") from None
    raise ConfigError(f"unknown update rule {text!r}")


def _resolve_seed(flag_value, fallback: int) -> int:
    if flag_value is not None:
        return flag_value
    env = os.environ.get(SEED_ENV)
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise ConfigError(f"{SEED_ENV} must be an integer, got {env!r}") from None
    return fallback


def _execute(args, doc: dict) -> int:
    config = load_config(json.dumps(doc))
    _info(args, f"running {config.kind} ({config.replicates} replicate(s)) -> {config.output_dir}")
    _, summary, manifest = run_scenario(config, jobs=max(1, args.jobs))
    for name in manifest.files:
        _info(args, f"wrote {os.path.join(config.output_dir, name)}")
    return 0


def _cmd_run(args) -> int:
    try:
        with open(args.config, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {args.config!r}: {exc}") from None
    config = load_config(text)
    doc = {
        "kind": config.kind,
        "master_seed": _resolve_seed(args.seed, config.master_seed),
        "replicates": config.replicates,
        "output_dir": args.out if args.out is not None else config.output_dir,
        "params": config.params,
    }
    return _execute(args, doc)


def _shortcut_doc(args, kind: str, params: dict, replicates=None) -> dict:
    return {
        "kind": kind,
        "master_seed": _resolve_seed(args.seed, 0),
        "replicates": replicates if replicates is not None else args.replicates,
        "output_dir": args.out,
        "params": params,
    }


def _cmd_replicator(args) -> int:
    params = {"x0": args.x0, "t_end": args.t_end, "dt": args.dt}
    if args.game is not None:
        if args.pc is not None or args.pd is not None:
            raise ConfigError("give either --pc/--pd or --game, not both")
        params["game"] = _parse_game(args.game)
    else:
        if args.pc is None or args.pd is None:
            raise ConfigError("constant payoffs need both --pc and --pd")
        params["p_c"] = args.pc
        params["p_d"] = args.pd
    return _execute(args, _shortcut_doc(args, "replicator", params))


def _cmd_bifurcate(args) -> int:
    params = {
        "theta": args.theta,
        "lambda_lo": args.lambda_lo,
        "lambda_hi": args.lambda_hi,
        "step": args.step,
        "grid_n": args.grid_n,
    }
    return _execute(args, _shortcut_doc(args, "bifurcation", params, replicates=1))


def _cmd_hysteresis(args) -> int:
    params = {
        "theta": args.theta,
        "lambda_lo": args.lambda_lo,
        "lambda_hi": args.lambda_hi,
        "step": args.step,
        "relax_t": args.relax_t,
        "relax_dt": args.relax_dt,
        "jump_tol": args.jump_tol,
    }
    return _execute(args, _shortcut_doc(args, "hysteresis", params, replicates=1))


def _cmd_netgrowth(args) -> int:
    seed_agi, seed_dci = _parse_pair(args.seeds, "--seeds")
    params = {
        "n_nodes": args.nodes,
        "m": args.m,
        "seed_agi": seed_agi,
        "seed_dci": seed_dci,
        "mode": args.mode,
        "dci_boost": args.boost,
        "tau": args.tau,
    }
    return _execute(args, _shortcut_doc(args, "netgrowth", params))


def _abm_params(args) -> dict:
    return {
        "n": args.n,
        "game": _parse_game(args.game),
        "rounds": args.rounds,
        "topology": _parse_topology(args.topology),
        "update": _parse_update(args.update),
        "noise": args.noise,
        "s_c": args.sc,
        "s_d": args.sd,
    }


def _cmd_abm(args) -> int:
    params = _abm_params(args)
    params["x0"] = args.x0
    return _execute(args, _shortcut_doc(args, "abm", params))


def _cmd_basin(args) -> int:
    params = _abm_params(args)
    try:
        params["x0_list"] = [float(v) for v in args.x0_list.split(",") if v != ""]
    except ValueError:
        raise ConfigError(f"--x0-list expects comma-separated numbers, got {args.x0_list!r}") from None
    return _execute(args, _shortcut_doc(args, "basin", params))


def _cmd_report(args) -> int:
    path = os.path.join(args.dir, "summary.csv")
    if not os.path.exists(path):
        raise ConfigError(f"no summary at {path!r}")
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ConfigError(f"empty summary at {path!r}")
    widths = [max(len(row[i]) for row in rows) for i in range(len(rows[0]))]
    for row in rows:
        print("  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip())
    return 0


def _add_abm_flags(sub):
    sub.add_argument("--n", type=int, required=True, help="number of agents")
    sub.add_argument("--game", required=True, help="payoffs 'r,sg,t,pu'")
    sub.add_argument("--rounds", type=int, required=True)
    sub.add_argument("--topology", default="well_mixed", help="well_mixed | ring:K | file:PATH")
    sub.add_argument("--update", default="proportional_imitation",
                     help="proportional_imitation | fermi:BETA")
    sub.add_argument("--noise", type=float, default=0.0)
    sub.add_argument("--sc", type=float, default=0.1, help="competitive-outcome threshold")
    sub.add_argument("--sd", type=float, default=0.9, help="cooperative-outcome threshold")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="attractorlab",
                     description="Deterministic path-dependence simulations.")
    subs = parser.add_subparsers(dest="subcommand", required=True)

    sub = subs.add_parser("run", parents=[], help="run a JSON scenario file")
    sub.add_argument("--config", required=True, help="scenario JSON path")
    sub.add_argument("--seed", type=int, default=None)
    sub.add_argument("--out", default=None, help="override the config's output_dir")
    sub.add_argument("--jobs", type=int, default=1)
    sub.add_argument("--quiet", action="store_true")
    sub.set_defaults(func=_cmd_run)

    sub = subs.add_parser("replicator", help="integrate the strategy-share flow")
    sub.add_argument("--x0", type=float, required=True)
    sub.add_argument("--t-end", type=float, required=True, dest="t_end")
    sub.add_argument("--dt", type=float, default=1e-3)
    sub.add_argument("--pc", type=float, default=None)
    sub.add_argument("--pd", type=float, default=None)
    sub.add_argument("--game", default=None, help="payoffs 'r,sg,t,pu'")
    _add_common(sub)
    sub.set_defaults(func=_cmd_replicator)

    sub = subs.add_parser("bifurcate", help="fixed-point sweep of the bistable family")
    sub.add_argument("--theta", type=float, required=True)
    sub.add_argument("--lambda-lo", type=float, required=True, dest="lambda_lo")
    sub.add_argument("--lambda-hi", type=float, required=True, dest="lambda_hi")
    sub.add_argument("--step", type=float, required=True)
    sub.add_argument("--grid-n", type=int, default=1024, dest="grid_n")
    sub.add_argument("--seed", type=int, default=None)
    _add_common(sub, seeded=False)
    sub.set_defaults(func=_cmd_bifurcate, replicates=1)

    sub = subs.add_parser("hysteresis", help="quasi-static up/down sweep")
    sub.add_argument("--theta", type=float, required=True)
    sub.add_argument("--lambda-lo", type=float, required=True, dest="lambda_lo")
    sub.add_argument("--lambda-hi", type=float, required=True, dest="lambda_hi")
    sub.add_argument("--step", type=float, required=True)
    sub.add_argument("--relax-t", type=float, default=50.0, dest="relax_t")
    sub.add_argument("--relax-dt", type=float, default=1e-2, dest="relax_dt")
    sub.add_argument("--jump-tol", type=float, default=0.5, dest="jump_tol")
    sub.add_argument("--seed", type=int, default=None)
    _add_common(sub, seeded=False)
    sub.set_defaults(func=_cmd_hysteresis, replicates=1)

    sub = subs.add_parser("netgrowth", help="two-camp growing network")
    sub.add_argument("--seeds", required=True, help="initial nodes 'AGI,DCI'")
    sub.add_argument("--nodes", type=int, required=True, help="arrivals to simulate")
    sub.add_argument("--m", type=int, default=1, help="edges per arrival (degree_pa)")
    sub.add_argument("--mode", default="urn", choices=["urn", "degree_pa"])
    sub.add_argument("--boost", type=float, default=1.0, help="DCI attachment weight")
    sub.add_argument("--tau", type=float, default=0.9, help="lock-in share threshold")
    _add_common(sub)
    sub.set_defaults(func=_cmd_netgrowth)

    sub = subs.add_parser("abm", help="imitation-game population run")
    _add_abm_flags(sub)
    sub.add_argument("--x0", type=float, required=True)
    _add_common(sub)
    sub.set_defaults(func=_cmd_abm)

    sub = subs.add_parser("basin", help="outcome frequencies across initial fractions")
    _add_abm_flags(sub)
    sub.add_argument("--x0-list", required=True, dest="x0_list",
                     help="comma-separated initial fractions")
    _add_common(sub)
    sub.set_defaults(func=_cmd_basin)

    sub = subs.add_parser("report", help="print a run's summary.csv as a table")
    sub.add_argument("dir", help="run directory")
    sub.set_defaults(func=_cmd_report, quiet=True)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # --help exits 0, usage errors exit 1
        code = exc.code if exc.code is not None else 0
        return 0 if code == 0 else 1
    try:
        return args.func(args)
    except ConfigError as exc:
        _err(str(exc))
        return 1
    except Exception as exc:  # runtime failure
        _err(f"{type(exc).__name__}: {exc}")
        return 2


if __name__ == "__main__":
    sys.exit(main())
