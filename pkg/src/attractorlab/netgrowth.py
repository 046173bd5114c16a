"""Two-camp growing network: arrivals pick the AGI or DCI camp with
probability proportional to camp weight, so early advantages self-reinforce.

Camp choice follows ``P(AGI) = k_agi / (k_agi + boost * k_dci)`` where the
camp weights are node counts in ``urn`` mode (one implicit edge per node,
the minimal reading, and an exact Polya urn: the AGI share is a martingale
with a random limit) or degree sums in ``degree_pa`` mode, where each
arrival then wires ``m`` edges to in-camp endpoints drawn proportionally to
degree (with replacement, so parallel edges may occur).

``dci_boost`` is the intervention lever: a multiplicative weight on the DCI
camp, with 1 the plain attachment rule.  ``intervention_cost`` searches for
the smallest boost that drags the mean final DCI share up to a target.

Seed nodes in ``degree_pa`` mode are wired as a ring (three or more nodes),
a single edge (two) or left bare (one); a camp whose degree sum is still 0
weighs in with its node count and resolves endpoints uniformly until it
gains real degree (bootstrap convention).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .rng import make_generator, mix64

MODE_URN = "urn"
MODE_DEGREE_PA = "degree_pa"

LOCKED_AGI = "agi"
LOCKED_DCI = "dci"

DEFAULT_TAU = 0.9
DEFAULT_COST_REPLICATES = 200
MAX_BOOST = 1024.0


@dataclass(frozen=True)
class CampDegrees:
    """Total degree held by each camp's nodes."""

    k_agi: int
    k_dci: int

    def __post_init__(self):
        if self.k_agi < 0 or self.k_dci < 0:
            raise ValueError("camp degrees must be non-negative")


@dataclass(frozen=True)
class GrowthConfig:
    n_nodes: int
    m: int = 1
    seed_agi: int = 1
    seed_dci: int = 1
    mode: str = MODE_URN
    dci_boost: float = 1.0
    tau: float = DEFAULT_TAU
    rng_seed: int = 0

    def validate(self) -> None:
        if self.n_nodes < 1:
            raise ValueError(f"n_nodes must be >= 1, got {self.n_nodes}")
        if self.m < 1:
            raise ValueError(f"m must be >= 1, got {self.m}")
        if self.seed_agi < 1 or self.seed_dci < 1:
            raise ValueError("both camps need at least one seed node")
        if self.mode not in (MODE_URN, MODE_DEGREE_PA):
            raise ValueError(f"unknown growth mode {self.mode!r}")
        if not (self.dci_boost >= 0.0 and math.isfinite(self.dci_boost)):
            raise ValueError(f"dci_boost must be finite and >= 0, got {self.dci_boost}")
        if not 0.5 < self.tau <= 1.0:
            raise ValueError(f"tau must lie in (0.5, 1], got {self.tau}")
        if self.rng_seed < 0:
            raise ValueError("rng_seed must be a non-negative 64-bit integer")


@dataclass
class GrowthTrace:
    shares: np.ndarray  # AGI node share after each arrival
    final_degrees: CampDegrees
    locked_in: str | None


@dataclass(frozen=True)
class LockInEstimate:
    tau: float
    p_agi_lockin: float
    p_dci_lockin: float
    ci_halfwidth: float


def attach_probability(k: CampDegrees, dci_boost: float = 1.0) -> float:
    """P(next arrival joins the AGI camp) = k_agi / (k_agi + boost * k_dci)."""
    denom = k.k_agi + dci_boost * k.k_dci
    if denom <= 0.0:
        raise ZeroDivisionError("attachment weights sum to zero")
    return k.k_agi / denom


def _lockin_label(final_share: float, tau: float) -> str | None:
    if final_share >= tau:
        return LOCKED_AGI
    if final_share <= 1.0 - tau:
        return LOCKED_DCI
    return None


def _grow_urn(config: GrowthConfig, rng: np.random.Generator) -> GrowthTrace:
    n = config.n_nodes
    boost = config.dci_boost
    us = rng.random(n).tolist()
    a = float(config.seed_agi)
    d = float(config.seed_dci)
    agi_counts = []
    for u in us:
        if u * (a + boost * d) < a:
            a += 1.0
        else:
            d += 1.0
        agi_counts.append(a)
    totals = config.seed_agi + config.seed_dci + np.arange(1, n + 1, dtype=float)
    shares = np.asarray(agi_counts) / totals
    degrees = CampDegrees(int(a), int(d))
    return GrowthTrace(shares, degrees, _lockin_label(float(shares[-1]), config.tau))


def _seed_wiring(ids: list[int]) -> list[int]:
    """Founding wiring of one camp as a repeated-endpoint list (2 entries
    per edge): ring for >= 3 nodes, single edge for 2, nothing for 1."""
    k = len(ids)
    if k == 1:
        return []
    if k == 2:
        return [ids[0], ids[1]]
    rep: list[int] = []
    for i in range(k):
        rep.append(ids[i])
        rep.append(ids[(i + 1) % k])
    return rep


def _grow_degree_pa(config: GrowthConfig, rng: np.random.Generator) -> GrowthTrace:
    n = config.n_nodes
    m = config.m
    boost = config.dci_boost
    sa, sd = config.seed_agi, config.seed_dci

    agi_nodes = list(range(sa))
    dci_nodes = list(range(sa, sa + sd))
    rep_agi = _seed_wiring(agi_nodes)
    rep_dci = _seed_wiring(dci_nodes)

    us_choice = rng.random(n).tolist()
    us_edge = rng.random(n * m).tolist()

    n_agi = sa
    agi_counts = []
    for i in range(n):
        w_agi = float(len(rep_agi)) if rep_agi else float(len(agi_nodes))
        w_dci = float(len(rep_dci)) if rep_dci else float(len(dci_nodes))
        join_agi = us_choice[i] * (w_agi + boost * w_dci) < w_agi
        nodes, rep = (agi_nodes, rep_agi) if join_agi else (dci_nodes, rep_dci)

        new_id = sa + sd + i
        for j in range(m):
            u = us_edge[i * m + j]
            if rep:
                endpoint = rep[int(u * len(rep))]
            else:
                endpoint = nodes[int(u * len(nodes))]
            rep.append(endpoint)
            rep.append(new_id)
        nodes.append(new_id)
        if join_agi:
            n_agi += 1
        agi_counts.append(n_agi)

    totals = sa + sd + np.arange(1, n + 1, dtype=float)
    shares = np.asarray(agi_counts, dtype=float) / totals
    degrees = CampDegrees(len(rep_agi), len(rep_dci))
    return GrowthTrace(shares, degrees, _lockin_label(float(shares[-1]), config.tau))


def grow(config: GrowthConfig) -> GrowthTrace:
    """Simulate ``config.n_nodes`` arrivals; deterministic given rng_seed.

    The trace records the AGI node share after every arrival and the final
    camp weights (node counts in urn mode, degree sums in degree_pa mode).
    """
    config.validate()
    rng = make_generator(config.rng_seed)
    if config.mode == MODE_URN:
        return _grow_urn(config, rng)
    return _grow_degree_pa(config, rng)


def _final_shares(config: GrowthConfig, replicates: int) -> np.ndarray:
    out = np.empty(replicates)
    for i in range(replicates):
        trace = grow(replace(config, rng_seed=mix64(config.rng_seed, i)))
        out[i] = trace.shares[-1]
    return out


def estimate_lockin(config: GrowthConfig, replicates: int, tau: float) -> LockInEstimate:
    """Lock-in frequencies over independently seeded growths.

    Lock-in to AGI counts final shares >= tau, to DCI shares <= 1 - tau.
    The reported halfwidth is the larger of the two proportions' 95% normal
    approximations.
    """
    if replicates < 1:
        raise ValueError(f"replicates must be >= 1, got {replicates}")
    if not 0.5 < tau <= 1.0:
        raise ValueError(f"tau must lie in (0.5, 1], got {tau}")
    finals = _final_shares(config, replicates)
    p_agi = float(np.mean(finals >= tau))
    p_dci = float(np.mean(finals <= 1.0 - tau))
    se = max(
        math.sqrt(p_agi * (1.0 - p_agi) / replicates),
        math.sqrt(p_dci * (1.0 - p_dci) / replicates),
    )
    return LockInEstimate(tau, p_agi, p_dci, 1.96 * se)


def intervention_cost(
    base: GrowthConfig,
    target_dci_share: float,
    horizon: int,
    replicates: int = DEFAULT_COST_REPLICATES,
    log2_tol: float = 0.05,
) -> float:
    """Minimal dci_boost in [1, 1024] whose mean final DCI share reaches the
    target at the horizon, or +inf when 1024 is not enough.

    Bisection runs on log2(boost) down to ``log2_tol``; every boost is
    evaluated on the same replicate streams (common random numbers), so the
    probed mean is a deterministic, effectively monotone function of boost.
    """
    base.validate()
    if not 0.0 < target_dci_share < 1.0:
        raise ValueError(f"target share must lie in (0, 1), got {target_dci_share}")
    if not 1 <= horizon <= base.n_nodes:
        raise ValueError(f"horizon must lie in [1, n_nodes], got {horizon}")
    if replicates < 1:
        raise ValueError(f"replicates must be >= 1, got {replicates}")

    probe = replace(base, n_nodes=horizon)

    def mean_dci(boost: float) -> float:
        finals = _final_shares(replace(probe, dci_boost=boost), replicates)
        return float(np.mean(1.0 - finals))

    if mean_dci(1.0) >= target_dci_share:
        return 1.0
    if mean_dci(MAX_BOOST) < target_dci_share:
        return math.inf

    lo, hi = 0.0, math.log2(MAX_BOOST)  # lo fails, hi passes
    while hi - lo > log2_tol:
        mid = 0.5 * (lo + hi)
        if mean_dci(2.0 ** mid) >= target_dci_share:
            hi = mid
        else:
            lo = mid
    return 2.0 ** hi
