"""Evolutionary imitation game between a cooperative and a competitive camp.

Agents hold one of two strategies, cooperate (labelled ``dci``-aligned) or
defect (``agi``-aligned), and sit on an interaction topology.  Each round is
synchronous: every agent samples one random neighbor, compares payoffs, and
adopts the neighbor's strategy with a probability set by the update rule.
Proportional imitation is the default because its well-mixed expected motion
per round equals one step of the replicator flow
``dx/dt = x (1 - x) (P_C - P_D)`` of size ``1 / span(game)``; the Fermi rule
is provided for robustness checks.

All randomness flows through a Philox generator seeded per run, so a config
determines its trace exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .rng import make_generator, mix64

COOPERATE = True
DEFECT = False

OUTCOME_AGI = "agi_first"
OUTCOME_DCI = "dci_first"
OUTCOME_UNDECIDED = "undecided"

DEFAULT_S_C = 0.1
DEFAULT_S_D = 0.9


class IsolatedAgentError(ValueError):
    """An imported topology contains a degree-0 node."""


@dataclass(frozen=True)
class GameMatrix:
    """2x2 payoff matrix: row player cooperates (r, sg) or defects (t, pu)."""

    r: float   # C meets C
    sg: float  # C meets D
    t: float   # D meets C
    pu: float  # D meets D

    def __post_init__(self):
        for name in ("r", "sg", "t", "pu"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"game matrix entry {name} must be finite")

    def payoff(self, mine: bool, other: bool) -> float:
        if mine:
            return self.r if other else self.sg
        return self.t if other else self.pu

    def span(self) -> float:
        """Largest minus smallest matrix entry (payoff normalization)."""
        entries = (self.r, self.sg, self.t, self.pu)
        return max(entries) - min(entries)


@dataclass(frozen=True)
class WellMixed:
    """Every agent interacts with all others."""


@dataclass(frozen=True)
class RingLattice:
    """Ring of n agents, each linked to its k nearest neighbors (k even)."""

    k: int


@dataclass(frozen=True)
class Imported:
    """Simple undirected graph given as an edge tuple."""

    edges: tuple[tuple[int, int], ...]


Topology = WellMixed | RingLattice | Imported


@dataclass(frozen=True)
class ProportionalImitation:
    """Adopt with probability max(0, payoff gap) / span(game)."""


@dataclass(frozen=True)
class Fermi:
    """Adopt with logistic probability 1 / (1 + exp(-beta * payoff gap))."""

    beta: float

    def __post_init__(self):
        if not (self.beta >= 0.0 and math.isfinite(self.beta)):
            raise ValueError(f"fermi beta must be finite and >= 0, got {self.beta}")


UpdateRule = ProportionalImitation | Fermi


@dataclass(frozen=True)
class AbmConfig:
    n: int
    x0: float
    game: GameMatrix
    topology: Topology = field(default_factory=WellMixed)
    update: UpdateRule = field(default_factory=ProportionalImitation)
    noise: float = 0.0
    rounds: int = 0
    rng_seed: int = 0

    def validate(self) -> None:
        if self.n < 2:
            raise ValueError(f"need at least 2 agents, got n={self.n}")
        if not 0.0 <= self.x0 <= 1.0:
            raise ValueError(f"x0 must lie in [0, 1], got {self.x0}")
        if not 0.0 <= self.noise <= 1.0:
            raise ValueError(f"noise must lie in [0, 1], got {self.noise}")
        if self.rounds < 0:
            raise ValueError(f"rounds must be >= 0, got {self.rounds}")
        if self.rng_seed < 0:
            raise ValueError("rng_seed must be a non-negative 64-bit integer")
        if isinstance(self.topology, RingLattice):
            k = self.topology.k
            if k < 2 or k % 2 != 0:
                raise ValueError(f"ring lattice degree must be even and >= 2, got {k}")
            if k >= self.n:
                raise ValueError(f"ring lattice degree k={k} must be < n={self.n}")
        if isinstance(self.topology, Imported):
            _check_edges(self.topology.edges, self.n)


@dataclass
class Population:
    """Strategy vector plus the topology it interacts on."""

    strategies: np.ndarray  # bool, True = cooperate
    topology: Topology

    @property
    def n(self) -> int:
        return int(self.strategies.size)

    def coop_fraction(self) -> float:
        return float(self.strategies.sum()) / self.strategies.size


@dataclass
class AbmTrace:
    coop_fraction: np.ndarray  # length rounds + 1
    outcome: str


# ---------------------------------------------------------------------------
# Topology helpers
# ---------------------------------------------------------------------------

def load_edge_list(text: str) -> tuple[tuple[int, int], ...]:
    """Parse the edge-list interchange format: one ``u v`` pair per line.

    Node ids are 0-based integers, edges undirected; duplicates (in either
    orientation) and self-loops are rejected.
    """
    edges: list[tuple[int, int]] = []
    seen: set[tuple[int, int]] = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ValueError(f"edge list line {lineno}: expected 'u v', got {raw!r}")
        try:
            u, v = int(parts[0]), int(parts[1])
        except ValueError:
            raise ValueError(f"edge list line {lineno}: non-integer node id in {raw!r}") from None
        if u < 0 or v < 0:
            raise ValueError(f"edge list line {lineno}: node ids must be >= 0")
        if u == v:
            raise ValueError(f"edge list line {lineno}: self-loop {u}")
        key = (min(u, v), max(u, v))
        if key in seen:
            raise ValueError(f"edge list line {lineno}: duplicate edge {key}")
        seen.add(key)
        edges.append(key)
    return tuple(edges)


def _check_edges(edges: tuple[tuple[int, int], ...], n: int) -> None:
    seen = set()
    for u, v in edges:
        if u == v:
            raise ValueError(f"self-loop at node {u}")
        if not (0 <= u < n and 0 <= v < n):
            raise ValueError(f"edge ({u}, {v}) outside node range [0, {n})")
        key = (min(u, v), max(u, v))
        if key in seen:
            raise ValueError(f"duplicate edge {key}")
        seen.add(key)


class _Adjacency:
    """CSR-style neighbor arrays for an imported graph."""

    def __init__(self, edges: tuple[tuple[int, int], ...], n: int):
        degree = np.zeros(n, dtype=np.int64)
        for u, v in edges:
            degree[u] += 1
            degree[v] += 1
        self.degree = degree
        self.indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(degree, out=self.indptr[1:])
        self.indices = np.zeros(max(1, int(self.indptr[-1])), dtype=np.int64)
        cursor = self.indptr[:-1].copy()
        for u, v in edges:
            self.indices[cursor[u]] = v
            cursor[u] += 1
            self.indices[cursor[v]] = u
            cursor[v] += 1
        # sorted neighbor order keeps sampling reproducible across builds
        for i in range(n):
            lo, hi = self.indptr[i], self.indptr[i + 1]
            self.indices[lo:hi] = np.sort(self.indices[lo:hi])

    def neighbors(self, i: int) -> np.ndarray:
        return self.indices[self.indptr[i]:self.indptr[i + 1]]


_ADJ_CACHE: dict[tuple[tuple[tuple[int, int], ...], int], _Adjacency] = {}


def _adjacency(topology: Imported, n: int) -> _Adjacency:
    key = (topology.edges, n)
    adj = _ADJ_CACHE.get(key)
    if adj is None:
        adj = _Adjacency(topology.edges, n)
        _ADJ_CACHE[key] = adj
    return adj


def _ring_offsets(k: int) -> np.ndarray:
    half = k // 2
    return np.array([o for o in range(-half, half + 1) if o != 0], dtype=np.int64)


# ---------------------------------------------------------------------------
# Payoffs
# ---------------------------------------------------------------------------

def payoff_of(agent: int, population: Population, game: GameMatrix) -> float:
    """Mean game payoff of ``agent`` against its interaction neighbors.

    Well-mixed populations play against the strategy mix excluding self.
    """
    strat = population.strategies
    n = population.n
    topo = population.topology
    mine = bool(strat[agent])
    if isinstance(topo, WellMixed):
        if n < 2:
            raise IsolatedAgentError("well-mixed payoff needs at least 2 agents")
        nc = int(strat.sum()) - (1 if mine else 0)
        nd = (n - 1) - nc
        return (nc * game.payoff(mine, True) + nd * game.payoff(mine, False)) / (n - 1)
    if isinstance(topo, RingLattice):
        offsets = _ring_offsets(topo.k)
        total = 0.0
        for o in offsets:
            total += game.payoff(mine, bool(strat[(agent + int(o)) % n]))
        return total / topo.k
    adj = _adjacency(topo, n)
    nbrs = adj.neighbors(agent)
    if nbrs.size == 0:
        raise IsolatedAgentError(f"agent {agent} has no neighbors in the imported graph")
    total = 0.0
    for j in nbrs:
        total += game.payoff(mine, bool(strat[int(j)]))
    return total / nbrs.size


def adoption_probability(update: UpdateRule, payoff_gap: float, payoff_span: float) -> float:
    """Probability of copying a sampled neighbor, given the payoff gap.

    With a degenerate game (span 0) proportional imitation never switches.
    """
    if isinstance(update, ProportionalImitation):
        if payoff_span <= 0.0:
            return 0.0
        return max(0.0, payoff_gap / payoff_span)
    z = min(700.0, max(-700.0, update.beta * payoff_gap))
    return 1.0 / (1.0 + math.exp(-z))


def _payoff_vectors(pop: Population, game: GameMatrix) -> tuple[np.ndarray, np.ndarray | None, np.ndarray | None]:
    """Per-agent payoff, plus (pi_C, pi_D) scalars in the well-mixed case."""
    strat = pop.strategies
    n = pop.n
    if isinstance(pop.topology, WellMixed):
        nc = int(strat.sum())
        pi_c = ((nc - 1) * game.r + (n - nc) * game.sg) / (n - 1)
        pi_d = (nc * game.t + (n - nc - 1) * game.pu) / (n - 1)
        return np.where(strat, pi_c, pi_d), None, None
    if isinstance(pop.topology, RingLattice):
        k = pop.topology.k
        coop = strat.astype(np.int64)
        ncn = np.zeros(n, dtype=np.int64)
        for o in _ring_offsets(k):
            ncn += np.roll(coop, -int(o))
        pi_if_c = (game.r * ncn + game.sg * (k - ncn)) / k
        pi_if_d = (game.t * ncn + game.pu * (k - ncn)) / k
        return np.where(strat, pi_if_c, pi_if_d), pi_if_c, pi_if_d
    adj = _adjacency(pop.topology, n)
    if int(adj.degree.min()) == 0:
        bad = int(np.argmin(adj.degree))
        raise IsolatedAgentError(f"agent {bad} has no neighbors in the imported graph")
    coop = strat.astype(np.float64)
    ncn = np.add.reduceat(coop[adj.indices], adj.indptr[:-1])
    deg = adj.degree.astype(np.float64)
    pi_if_c = (game.r * ncn + game.sg * (deg - ncn)) / deg
    pi_if_d = (game.t * ncn + game.pu * (deg - ncn)) / deg
    return np.where(strat, pi_if_c, pi_if_d), pi_if_c, pi_if_d


# ---------------------------------------------------------------------------
# Dynamics
# ---------------------------------------------------------------------------

def step(population: Population, config: AbmConfig, rng: np.random.Generator) -> Population:
    """One synchronous round: sample a neighbor, maybe imitate, then mutate.

    Draw order is fixed: neighbor draws, adoption draws, then (only when
    noise > 0) mutation draws.  In the well-mixed case the sampled
    neighbor's strategy is drawn directly from the self-excluded mix, which
    matches sampling a uniform other agent.
    """
    strat = population.strategies
    n = population.n
    game = config.game
    pi, pi_if_c, pi_if_d = _payoff_vectors(population, game)

    if isinstance(population.topology, WellMixed):
        nc = int(strat.sum())
        p_nbr_c = np.where(strat, (nc - 1) / (n - 1), nc / (n - 1))
        nbr_strat = rng.random(n) < p_nbr_c
        pi_c = ((nc - 1) * game.r + (n - nc) * game.sg) / (n - 1)
        pi_d = (nc * game.t + (n - nc - 1) * game.pu) / (n - 1)
        pi_nbr = np.where(nbr_strat, pi_c, pi_d)
    else:
        if isinstance(population.topology, RingLattice):
            offsets = _ring_offsets(population.topology.k)
            picks = rng.integers(0, offsets.size, size=n)
            nbr_idx = (np.arange(n) + offsets[picks]) % n
        else:
            adj = _adjacency(population.topology, n)
            u = rng.random(n)
            picks = (u * adj.degree).astype(np.int64)
            nbr_idx = adj.indices[adj.indptr[:-1] + picks]
        nbr_strat = strat[nbr_idx]
        pi_nbr = pi[nbr_idx]

    gap = pi_nbr - pi
    if isinstance(config.update, ProportionalImitation):
        span = game.span()
        prob = np.maximum(0.0, gap) / span if span > 0.0 else np.zeros(n)
    else:
        z = np.clip(config.update.beta * gap, -700.0, 700.0)
        prob = 1.0 / (1.0 + np.exp(-z))

    adopt = rng.random(n) < prob
    new = np.where(adopt, nbr_strat, strat)
    if config.noise > 0.0:
        flips = rng.random(n) < config.noise
        new = new ^ flips
    return Population(new, population.topology)


def attractor_classify(final_x: float, s_c: float, s_d: float) -> str:
    """Label a final cooperator fraction by the threshold pair (s_c, s_d)."""
    if not (0.0 <= s_c < s_d <= 1.0):
        raise ValueError(f"need 0 <= s_c < s_d <= 1, got s_c={s_c}, s_d={s_d}")
    if final_x <= s_c:
        return OUTCOME_AGI
    if final_x >= s_d:
        return OUTCOME_DCI
    return OUTCOME_UNDECIDED


def run(config: AbmConfig, s_c: float = DEFAULT_S_C, s_d: float = DEFAULT_S_D) -> AbmTrace:
    """Simulate ``config.rounds`` rounds and classify the final fraction.

    Exactly ``round(x0 * n)`` cooperators are placed by a seeded shuffle, so
    the first trace entry is the realized initial fraction.
    """
    config.validate()
    rng = make_generator(config.rng_seed)
    n = config.n
    k = round(config.x0 * n)
    order = rng.permutation(n)
    strat = np.zeros(n, dtype=bool)
    strat[order[:k]] = True
    pop = Population(strat, config.topology)

    fractions = np.empty(config.rounds + 1)
    fractions[0] = k / n
    for r in range(1, config.rounds + 1):
        pop = step(pop, config, rng)
        fractions[r] = pop.coop_fraction()
    return AbmTrace(fractions, attractor_classify(float(fractions[-1]), s_c, s_d))


def mean_field_time_step(game: GameMatrix) -> float:
    """Replicator time advanced by one proportional-imitation round.

    The expected per-round change of the cooperator fraction is
    ``x (1 - x) (P_C - P_D) / span``, one explicit step of size 1/span.
    """
    span = game.span()
    if span <= 0.0:
        raise ValueError("degenerate game: payoff span is 0")
    return 1.0 / span


def basin_experiment(
    template: AbmConfig,
    x0_list: list[float],
    replicates: int,
    s_c: float = DEFAULT_S_C,
    s_d: float = DEFAULT_S_D,
) -> dict[float, dict[str, int]]:
    """Outcome counts per initial fraction over seeded replicates.

    Cell (replicate r, x0 index i) uses the stream derived from
    ``(template.rng_seed, r * len(x0_list) + i)``, so results are
    independent of evaluation order.
    """
    if not x0_list:
        raise ValueError("x0_list must be non-empty")
    if replicates < 1:
        raise ValueError(f"replicates must be >= 1, got {replicates}")
    counts = {
        float(x0): {OUTCOME_AGI: 0, OUTCOME_DCI: 0, OUTCOME_UNDECIDED: 0}
        for x0 in x0_list
    }
    for r in range(replicates):
        for i, x0 in enumerate(x0_list):
            seed = mix64(template.rng_seed, r * len(x0_list) + i)
            cfg = replace(template, x0=float(x0), rng_seed=seed)
            trace = run(cfg, s_c, s_d)
            counts[float(x0)][trace.outcome] += 1
    return counts
