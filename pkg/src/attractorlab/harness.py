"""Scenario configs, seeded replication, aggregation and persistence.

A scenario is a JSON document with required keys ``kind``, ``master_seed``
and ``replicates``, an optional ``output_dir`` (default ``out``) and a
``params`` block holding exactly the target model's parameters.  Unknown
keys are rejected so experiment typos fail loudly, and defaults are filled
in at load time so a loaded config is fully explicit.

Replicate ``i`` draws from the stream seeded by ``mix64(master_seed, i)``;
the ``basin`` kind consumes one stream per (replicate, x0) cell, indexed
flat.  Given (config, master_seed), every emitted data byte is reproducible;
wall-clock timestamps live only in the manifest.

Outputs are small CSV files (diff-able, golden-testable) plus a
``manifest.json`` carrying the config echo, per-replicate seeds and sha256
digests of every emitted file.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from datetime import datetime, timezone
from itertools import repeat

from . import __version__, abm, dynamics, netgrowth
from .rng import mix64

KINDS = ("replicator", "bifurcation", "hysteresis", "netgrowth", "abm", "basin")

_TOP_KEYS = {"kind", "master_seed", "replicates", "output_dir", "params"}
_MAX_SEED = (1 << 64) - 1


class ConfigError(ValueError):
    """Malformed or invalid scenario configuration."""


@dataclass(frozen=True)
class SummaryStats:
    mean: float
    std: float
    min: float
    max: float
    ci95: float
    n: int


@dataclass(frozen=True)
class RunManifest:
    config: dict
    version: str
    started: str
    finished: str
    replicate_seeds: tuple[int, ...]
    files: dict[str, str]


@dataclass(frozen=True)
class ScenarioConfig:
    kind: str
    master_seed: int
    replicates: int
    output_dir: str
    params: dict


# ---------------------------------------------------------------------------
# Config loading
# ---------------------------------------------------------------------------

def _as_int(value, field: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"field {field!r} must be an integer, got {value!r}")
    return value


def _as_float(value, field: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"field {field!r} must be a number, got {value!r}")
    return float(value)


def _as_str(value, field: str) -> str:
    if not isinstance(value, str):
        raise ConfigError(f"field {field!r} must be a string, got {value!r}")
    return value


_REQUIRED = object()


def _take(raw: dict, spec: dict, where: str) -> dict:
    unknown = set(raw) - set(spec)
    if unknown:
        raise ConfigError(f"unknown {where} key(s): {sorted(unknown)}")
    out = {}
    for key, (cast, default) in spec.items():
        if key in raw:
            out[key] = cast(raw[key], key)
        elif default is _REQUIRED:
            raise ConfigError(f"missing required {where} key {key!r}")
        else:
            out[key] = default
    return out


def _norm_game(raw, field: str) -> dict:
    if not isinstance(raw, dict):
        raise ConfigError(f"field {field!r} must be an object with keys r, sg, t, pu")
    spec = {k: (_as_float, _REQUIRED) for k in ("r", "sg", "t", "pu")}
    return _take(raw, spec, field)


def _norm_topology(raw, field: str) -> dict:
    if not isinstance(raw, dict) or "kind" not in raw:
        raise ConfigError(f"field {field!r} must be an object with a 'kind'")
    kind = raw["kind"]
    if kind == "well_mixed":
        return _take(raw, {"kind": (_as_str, _REQUIRED)}, field)
    if kind == "ring_lattice":
        return _take(raw, {"kind": (_as_str, _REQUIRED), "k": (_as_int, _REQUIRED)}, field)
    if kind == "imported":
        return _take(raw, {"kind": (_as_str, _REQUIRED), "path": (_as_str, _REQUIRED)}, field)
    raise ConfigError(f"unknown topology kind {kind!r}")


def _norm_update(raw, field: str) -> dict:
    if not isinstance(raw, dict) or "kind" not in raw:
        raise ConfigError(f"field {field!r} must be an object with a 'kind'")
    kind = raw["kind"]
    if kind == "proportional_imitation":
        return _take(raw, {"kind": (_as_str, _REQUIRED)}, field)
    if kind == "fermi":
        return _take(raw, {"kind": (_as_str, _REQUIRED), "beta": (_as_float, _REQUIRED)}, field)
    raise ConfigError(f"unknown update kind {kind!r}")


def _norm_x0_list(raw, field: str) -> list:
    if not isinstance(raw, list) or not raw:
        raise ConfigError(f"field {field!r} must be a non-empty list of numbers")
    return [_as_float(v, field) for v in raw]


def _normalize_params(kind: str, raw: dict) -> dict:
    if not isinstance(raw, dict):
        raise ConfigError("'params' must be an object")
    if kind == "replicator":
        spec = {
            "x0": (_as_float, _REQUIRED),
            "t_end": (_as_float, _REQUIRED),
            "dt": (_as_float, dynamics.DEFAULT_DT),
            "p_c": (_as_float, None),
            "p_d": (_as_float, None),
            "game": (_norm_game, None),
        }
        params = _take(raw, spec, "replicator params")
        has_const = params["p_c"] is not None or params["p_d"] is not None
        if has_const and params["game"] is not None:
            raise ConfigError("give either p_c/p_d or game, not both")
        if params["game"] is None:
            if params["p_c"] is None or params["p_d"] is None:
                raise ConfigError("constant payoffs need both p_c and p_d")
            del params["game"]
        else:
            del params["p_c"], params["p_d"]
        return params
    if kind == "bifurcation":
        spec = {
            "theta": (_as_float, _REQUIRED),
            "lambda_lo": (_as_float, _REQUIRED),
            "lambda_hi": (_as_float, _REQUIRED),
            "step": (_as_float, _REQUIRED),
            "grid_n": (_as_int, dynamics.DEFAULT_GRID_N),
        }
        return _take(raw, spec, "bifurcation params")
    if kind == "hysteresis":
        spec = {
            "theta": (_as_float, _REQUIRED),
            "lambda_lo": (_as_float, _REQUIRED),
            "lambda_hi": (_as_float, _REQUIRED),
            "step": (_as_float, _REQUIRED),
            "relax_t": (_as_float, dynamics.DEFAULT_RELAX_T),
            "relax_dt": (_as_float, dynamics.DEFAULT_RELAX_DT),
            "jump_tol": (_as_float, dynamics.DEFAULT_JUMP_TOL),
        }
        return _take(raw, spec, "hysteresis params")
    if kind == "netgrowth":
        spec = {
            "n_nodes": (_as_int, _REQUIRED),
            "m": (_as_int, 1),
            "seed_agi": (_as_int, 1),
            "seed_dci": (_as_int, 1),
            "mode": (_as_str, netgrowth.MODE_URN),
            "dci_boost": (_as_float, 1.0),
            "tau": (_as_float, netgrowth.DEFAULT_TAU),
        }
        return _take(raw, spec, "netgrowth params")
    if kind in ("abm", "basin"):
        spec = {
            "n": (_as_int, _REQUIRED),
            "game": (_norm_game, _REQUIRED),
            "rounds": (_as_int, _REQUIRED),
            "topology": (_norm_topology, {"kind": "well_mixed"}),
            "update": (_norm_update, {"kind": "proportional_imitation"}),
            "noise": (_as_float, 0.0),
            "s_c": (_as_float, abm.DEFAULT_S_C),
            "s_d": (_as_float, abm.DEFAULT_S_D),
        }
        if kind == "abm":
            spec["x0"] = (_as_float, _REQUIRED)
        else:
            spec["x0_list"] = (_norm_x0_list, _REQUIRED)
        return _take(raw, spec, f"{kind} params")
    raise ConfigError(f"unknown scenario kind {kind!r}")


def load_config(text: str) -> ScenarioConfig:
    """Parse and fully validate a JSON scenario; defaults are filled in."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"config parse error at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from None
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(raw) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown top-level key(s): {sorted(unknown)}")
    for key in ("kind", "master_seed", "replicates"):
        if key not in raw:
            raise ConfigError(f"missing required key {key!r}")
    kind = _as_str(raw["kind"], "kind")
    if kind not in KINDS:
        raise ConfigError(f"unknown scenario kind {kind!r}; expected one of {KINDS}")
    master_seed = _as_int(raw["master_seed"], "master_seed")
    if not 0 <= master_seed <= _MAX_SEED:
        raise ConfigError("master_seed must be a 64-bit unsigned integer")
    replicates = _as_int(raw["replicates"], "replicates")
    if replicates < 1:
        raise ConfigError(f"replicates must be >= 1, got {replicates}")
    if kind in ("bifurcation", "hysteresis") and replicates != 1:
        raise ConfigError(f"{kind} scenarios are deterministic; use replicates=1")
    output_dir = _as_str(raw.get("output_dir", "out"), "output_dir")
    params = _normalize_params(kind, raw.get("params", {}))
    config = ScenarioConfig(kind, master_seed, replicates, output_dir, params)
    _check_buildable(config)
    return config


def serialize_config(config: ScenarioConfig) -> str:
    doc = {
        "kind": config.kind,
        "master_seed": config.master_seed,
        "replicates": config.replicates,
        "output_dir": config.output_dir,
        "params": config.params,
    }
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


# ---------------------------------------------------------------------------
# Builders: params dict -> module objects
# ---------------------------------------------------------------------------

def _build_payoffs(params: dict) -> dynamics.PayoffSpec:
    if "game" in params:
        return dynamics.PayoffSpec.from_game(abm.GameMatrix(**params["game"]))
    return dynamics.PayoffSpec.constant(params["p_c"], params["p_d"])


def _build_ode_spec(params: dict) -> dynamics.OdeSpec:
    spec = dynamics.OdeSpec(
        rhs=dynamics.ReplicatorRhs(_build_payoffs(params)),
        x0=params["x0"],
        dt=params["dt"],
        t_end=params["t_end"],
    )
    spec.validate()
    return spec


def _build_growth_config(params: dict, seed: int) -> netgrowth.GrowthConfig:
    cfg = netgrowth.GrowthConfig(
        n_nodes=params["n_nodes"],
        m=params["m"],
        seed_agi=params["seed_agi"],
        seed_dci=params["seed_dci"],
        mode=params["mode"],
        dci_boost=params["dci_boost"],
        tau=params["tau"],
        rng_seed=seed,
    )
    cfg.validate()
    return cfg


def _build_topology(params: dict) -> abm.Topology:
    topo = params["topology"]
    if topo["kind"] == "well_mixed":
        return abm.WellMixed()
    if topo["kind"] == "ring_lattice":
        return abm.RingLattice(topo["k"])
    try:
        with open(topo["path"], encoding="utf-8") as fh:
            edges = abm.load_edge_list(fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read topology file {topo['path']!r}: {exc}") from None
    return abm.Imported(edges)


def _build_abm_config(params: dict, seed: int, x0: float | None = None) -> abm.AbmConfig:
    update = params["update"]
    rule = (
        abm.Fermi(update["beta"])
        if update["kind"] == "fermi"
        else abm.ProportionalImitation()
    )
    cfg = abm.AbmConfig(
        n=params["n"],
        x0=params["x0"] if x0 is None else x0,
        game=abm.GameMatrix(**params["game"]),
        topology=_build_topology(params),
        update=rule,
        noise=params["noise"],
        rounds=params["rounds"],
        rng_seed=seed,
    )
    cfg.validate()
    if not 0.0 <= params["s_c"] < params["s_d"] <= 1.0:
        raise ConfigError("thresholds must satisfy 0 <= s_c < s_d <= 1")
    return cfg


def _check_buildable(config: ScenarioConfig) -> None:
    kind, params = config.kind, config.params
    try:
        if kind == "replicator":
            _build_ode_spec(params)
        elif kind == "bifurcation":
            if params["step"] <= 0 or params["lambda_lo"] >= params["lambda_hi"]:
                raise ConfigError("need step > 0 and lambda_lo < lambda_hi")
            if params["grid_n"] < 2:
                raise ConfigError("grid_n must be >= 2")
        elif kind == "hysteresis":
            if params["step"] <= 0 or params["lambda_lo"] > params["lambda_hi"]:
                raise ConfigError("need step > 0 and lambda_lo <= lambda_hi")
            if params["relax_t"] <= 0 or params["relax_dt"] <= 0 or params["jump_tol"] <= 0:
                raise ConfigError("relax_t, relax_dt and jump_tol must be > 0")
        elif kind == "netgrowth":
            _build_growth_config(params, 0)
        elif kind == "abm":
            _build_abm_config(params, 0)
        elif kind == "basin":
            for x0 in params["x0_list"]:
                if not 0.0 <= x0 <= 1.0:
                    raise ConfigError(f"x0_list entries must lie in [0, 1], got {x0}")
            _build_abm_config(params, 0, x0=params["x0_list"][0])
    except (ValueError, TypeError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"invalid {kind} params: {exc}") from None


# ---------------------------------------------------------------------------
# Replication
# ---------------------------------------------------------------------------

def _run_replicate(kind: str, params: dict, master_seed: int, index: int):
    """One replicate's raw result; top-level so process pools can pickle it."""
    if kind == "replicator":
        return dynamics.integrate(_build_ode_spec(params))
    if kind == "bifurcation":
        return dynamics.sweep_bifurcation(
            params["theta"], params["lambda_lo"], params["lambda_hi"],
            params["step"], params["grid_n"],
        )
    if kind == "hysteresis":
        return dynamics.hysteresis_loop(
            params["theta"], params["lambda_lo"], params["lambda_hi"], params["step"],
            relax_t=params["relax_t"], relax_dt=params["relax_dt"],
            jump_tol=params["jump_tol"],
        )
    if kind == "netgrowth":
        return netgrowth.grow(_build_growth_config(params, mix64(master_seed, index)))
    if kind == "abm":
        cfg = _build_abm_config(params, mix64(master_seed, index))
        return abm.run(cfg, params["s_c"], params["s_d"])
    if kind == "basin":
        x0_list = params["x0_list"]
        outcomes = {}
        for i, x0 in enumerate(x0_list):
            seed = mix64(master_seed, index * len(x0_list) + i)
            cfg = _build_abm_config(params, seed, x0=float(x0))
            outcomes[float(x0)] = abm.run(cfg, params["s_c"], params["s_d"]).outcome
        return outcomes
    raise ConfigError(f"unknown scenario kind {kind!r}")


def _metrics(kind: str, params: dict, results: list) -> dict[str, list[float]]:
    if kind == "replicator":
        return {"final_x": [float(t.states[-1]) for t in results]}
    if kind == "bifurcation":
        counts = [report.stable_count() for _, report in results[0]]
        return {
            "max_stable_roots": [float(max(counts))],
            "min_stable_roots": [float(min(counts))],
        }
    if kind == "hysteresis":
        rep = results[0]
        return {
            "loop_area": [rep.loop_area],
            "jumps_up": [float(len(rep.jumps_up))],
            "jumps_down": [float(len(rep.jumps_down))],
        }
    if kind == "netgrowth":
        finals = [float(t.shares[-1]) for t in results]
        return {
            "final_agi_share": finals,
            "agi_lockin": [1.0 if t.locked_in == netgrowth.LOCKED_AGI else 0.0 for t in results],
            "dci_lockin": [1.0 if t.locked_in == netgrowth.LOCKED_DCI else 0.0 for t in results],
        }
    if kind == "abm":
        return {
            "final_coop_fraction": [float(t.coop_fraction[-1]) for t in results],
            "outcome_agi_first": [1.0 if t.outcome == abm.OUTCOME_AGI else 0.0 for t in results],
            "outcome_dci_first": [1.0 if t.outcome == abm.OUTCOME_DCI else 0.0 for t in results],
            "outcome_undecided": [1.0 if t.outcome == abm.OUTCOME_UNDECIDED else 0.0 for t in results],
        }
    # basin: indicator series per (outcome, x0) cell
    out: dict[str, list[float]] = {}
    for x0 in params["x0_list"]:
        for outcome in (abm.OUTCOME_AGI, abm.OUTCOME_DCI, abm.OUTCOME_UNDECIDED):
            name = f"{outcome}[x0={float(x0)!r}]"
            out[name] = [1.0 if row[float(x0)] == outcome else 0.0 for row in results]
    return out


def aggregate(values) -> SummaryStats:
    """Mean/std/min/max with a 95% normal CI halfwidth; exact summation so
    the result is independent of accumulation order."""
    vals = [float(v) for v in values]
    if not vals:
        raise ValueError("cannot aggregate an empty metric series")
    n = len(vals)
    mean = math.fsum(vals) / n
    if n > 1:
        var = math.fsum((v - mean) ** 2 for v in vals) / (n - 1)
        std = math.sqrt(var)
    else:
        std = 0.0
    ci95 = 1.96 * std / math.sqrt(n)
    return SummaryStats(mean, std, min(vals), max(vals), ci95, n)


# ---------------------------------------------------------------------------
# Persistence
# ---------------------------------------------------------------------------

def _fmt(x: float) -> str:
    return repr(float(x))


def _write_csv(path: str, header: str, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(header + "\n")
        for row in rows:
            fh.write(",".join(row) + "\n")


def write_outputs(traces, out_dir: str) -> list[str]:
    """Emit one CSV per trace (schema by trace type); returns paths written.

    Basin frequency tables have no trace file, they only feed summary.csv.
    """
    os.makedirs(out_dir, exist_ok=True)
    paths: list[str] = []

    def emit(name, header, rows):
        path = os.path.join(out_dir, name)
        _write_csv(path, header, rows)
        paths.append(path)

    for i, item in enumerate(traces):
        if isinstance(item, dynamics.Trajectory):
            rows = ((_fmt(t), _fmt(x)) for t, x in zip(item.times, item.states))
            emit(f"trajectory_{i:04d}.csv", "t,x", rows)
        elif isinstance(item, netgrowth.GrowthTrace):
            rows = ((str(s + 1), _fmt(v)) for s, v in enumerate(item.shares))
            emit(f"shares_{i:04d}.csv", "step,agi_share", rows)
        elif isinstance(item, abm.AbmTrace):
            rows = ((str(r), _fmt(v)) for r, v in enumerate(item.coop_fraction))
            emit(f"abm_{i:04d}.csv", "round,coop_fraction", rows)
        elif isinstance(item, dynamics.HysteresisReport):
            rows = [("up", _fmt(lam), _fmt(s)) for lam, s in item.up_branch]
            rows += [("down", _fmt(lam), _fmt(s)) for lam, s in item.down_branch]
            emit("hysteresis.csv", "sweep,lambda,state", rows)
        elif isinstance(item, list):  # bifurcation sweep
            rows = [
                (_fmt(lam), _fmt(root.location), root.stability)
                for lam, report in item
                for root in report.roots
            ]
            emit("bifurcation.csv", "lambda,root,stability", rows)
        elif isinstance(item, dict):  # basin outcome row
            continue
        else:
            raise TypeError(f"no output schema for {type(item).__name__}")
    return paths


def _sha256(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def run_scenario(config: ScenarioConfig, jobs: int = 1) -> tuple[list, dict[str, SummaryStats], RunManifest]:
    """Run all replicates, write data files then the manifest.

    Partial outputs are removed when anything fails mid-run.  Results are
    gathered in replicate order regardless of ``jobs``, so parallel runs
    emit the same bytes as serial ones.
    """
    started = datetime.now(timezone.utc).isoformat()
    kind, params = config.kind, config.params
    n_rep = config.replicates

    if kind == "basin":
        n_streams = n_rep * len(params["x0_list"])
    else:
        n_streams = n_rep
    seeds = tuple(mix64(config.master_seed, i) for i in range(n_streams))

    if jobs > 1 and n_rep > 1:
        with ProcessPoolExecutor(max_workers=min(jobs, n_rep)) as pool:
            results = list(
                pool.map(_run_replicate, repeat(kind), repeat(params),
                         repeat(config.master_seed), range(n_rep), chunksize=1)
            )
    else:
        results = [_run_replicate(kind, params, config.master_seed, i) for i in range(n_rep)]

    summary = {name: aggregate(series) for name, series in _metrics(kind, params, results).items()}

    written: list[str] = []
    try:
        written.extend(write_outputs(results, config.output_dir))
        summary_path = os.path.join(config.output_dir, "summary.csv")
        _write_csv(
            summary_path,
            "metric,mean,std,min,max,ci95,n",
            (
                (name, _fmt(s.mean), _fmt(s.std), _fmt(s.min), _fmt(s.max), _fmt(s.ci95), str(s.n))
                for name, s in summary.items()
            ),
        )
        written.append(summary_path)

        manifest = RunManifest(
            config=json.loads(serialize_config(config)),
            version=__version__,
            started=started,
            finished=datetime.now(timezone.utc).isoformat(),
            replicate_seeds=seeds,
            files={os.path.basename(p): _sha256(p) for p in written},
        )
        manifest_path = os.path.join(config.output_dir, "manifest.json")
        with open(manifest_path, "w", encoding="utf-8", newline="") as fh:
            json.dump(
                {
                    "config": manifest.config,
                    "version": manifest.version,
                    "started": manifest.started,
                    "finished": manifest.finished,
                    "replicate_seeds": list(manifest.replicate_seeds),
                    "files": manifest.files,
                },
                fh,
                indent=2,
                sort_keys=True,
            )
            fh.write("\n")
    except BaseException:
        for path in written:
            try:
                os.unlink(path)
            except OSError:
                pass
        raise
    return results, summary, manifest
