"""Layered concept graphs with fitness bookkeeping.

A :class:`ConceptGraph` is a stack of layers.  Layer 1 holds concept nodes
and pairwise edges between them; layer N (N >= 2) holds edges whose members
are edge ids of layer N - 1, so each level groups the structure below it.
:func:`lift` adds a layer from an explicit grouping and :func:`project`
drops the top layer, leaving clique annotations over the underlying nodes
as provenance.

Four graph operations cover use:

* :func:`store` / :func:`remove` - encode and retract nodes or edges,
* :func:`recall` - exact-id or payload-pattern lookup,
* :func:`reason_s1` - spreading activation (decaying breadth-first flood),
* :func:`reason_s2` - deterministic iterative-deepening path search.

Minds pair a graph with a fitness triple (current, target, projected) and
an append-only transform log.  The regulatory operations (adapt, bridge,
decompose, stability and fitness tracking) carry minimal deterministic
reference semantics; the fitness functional is a seam (default: edge
density of layer 1) so richer policies can slot in.

All operations are functional: inputs are never mutated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fnmatch import fnmatchcase
from typing import Callable, Iterable, Sequence


class GraphError(ValueError):
    """Base class for concept-graph contract violations."""


class DuplicateIdError(GraphError):
    pass


class DanglingMemberError(GraphError):
    pass


class UnknownIdError(GraphError):
    pass


class OverlapError(GraphError):
    pass


class UnsupportedActionError(GraphError):
    pass


class InsufficientHistoryError(GraphError):
    pass


@dataclass(frozen=True)
class Node:
    """A concept; id is assigned at store time when left as None."""

    payload: str | None = None
    id: str | None = None


@dataclass(frozen=True)
class Edge:
    """A relation in some layer; order-1 members are node ids (exactly two),
    higher-order members are edge ids of the layer below."""

    order: int
    members: frozenset[str]
    id: str | None = None


@dataclass(frozen=True)
class CliqueAnnotation:
    """Projection residue: the node set a dropped top edge used to span."""

    nodes: frozenset[str]
    provenance: str
    source_order: int


@dataclass(frozen=True)
class ConceptGraph:
    nodes: dict[str, str | None]
    layers: tuple[dict[str, frozenset[str]], ...]
    annotations: tuple[CliqueAnnotation, ...] = ()

    @property
    def order(self) -> int:
        return len(self.layers)

    @classmethod
    def empty(cls) -> "ConceptGraph":
        return cls(nodes={}, layers=({},))


def same_structure(a: ConceptGraph, b: ConceptGraph) -> bool:
    """Layer-stack equality: nodes, edges and order; annotations ignored."""
    return a.nodes == b.nodes and a.layers == b.layers


def _check_id(item_id: str) -> None:
    if not item_id or any(ch.isspace() for ch in item_id):
        raise GraphError(f"ids must be non-empty and whitespace-free, got {item_id!r}")


def _check_payload(payload: str | None) -> None:
    if payload is None:
        return
    if payload == "" or "\n" in payload or "\r" in payload:
        raise GraphError("payloads must be non-empty, single-line strings")


def validate_graph(graph: ConceptGraph) -> None:
    """Full validator: id hygiene plus layer soundness (every edge's
    members exist in the layer below, no empty edges, order-1 arity 2)."""
    if not graph.layers:
        raise GraphError("a graph has at least the order-1 layer")
    for node_id, payload in graph.nodes.items():
        _check_id(node_id)
        _check_payload(payload)
    for depth, layer in enumerate(graph.layers, start=1):
        below = graph.nodes.keys() if depth == 1 else graph.layers[depth - 2].keys()
        for edge_id, members in layer.items():
            _check_id(edge_id)
            if not members:
                raise GraphError(f"edge {edge_id} is empty")
            if depth == 1 and len(members) != 2:
                raise GraphError(f"order-1 edge {edge_id} must have exactly 2 members")
            for m in members:
                if m not in below:
                    raise DanglingMemberError(
                        f"edge {edge_id} (order {depth}) references missing {m!r}"
                    )


def _all_edge_ids(graph: ConceptGraph) -> dict[str, int]:
    out = {}
    for depth, layer in enumerate(graph.layers, start=1):
        for edge_id in layer:
            out[edge_id] = depth
    return out


def _fresh_node_id(graph: ConceptGraph) -> str:
    k = len(graph.nodes)
    while f"n{k}" in graph.nodes:
        k += 1
    return f"n{k}"


def _fresh_edge_id(graph: ConceptGraph, order: int) -> str:
    layer = graph.layers[order - 1]
    k = len(layer)
    while f"e{order}_{k}" in layer:
        k += 1
    return f"e{order}_{k}"


# ---------------------------------------------------------------------------
# Storage and recall
# ---------------------------------------------------------------------------

def store(graph: ConceptGraph, item: Node | Edge) -> tuple[ConceptGraph, str]:
    """Add a node or edge, returning the new graph and the assigned id.

    Edge members must already exist in the layer below, and the target
    layer itself must exist (``lift`` is the operation that adds layers).
    """
    if isinstance(item, Node):
        _check_payload(item.payload)
        node_id = item.id if item.id is not None else _fresh_node_id(graph)
        _check_id(node_id)
        if node_id in graph.nodes:
            raise DuplicateIdError(f"node id {node_id!r} already stored")
        nodes = dict(graph.nodes)
        nodes[node_id] = item.payload
        return ConceptGraph(nodes, graph.layers, graph.annotations), node_id

    if not isinstance(item, Edge):
        raise GraphError(f"cannot store {type(item).__name__}")
    order = item.order
    if not 1 <= order <= graph.order:
        raise GraphError(
            f"edge order {order} outside this graph's layers (1..{graph.order}); "
            "use lift to add a layer"
        )
    members = frozenset(item.members)
    if not members:
        raise GraphError("edges need at least one member")
    if order == 1 and len(members) != 2:
        raise GraphError("order-1 edges connect exactly 2 distinct nodes")
    below = graph.nodes.keys() if order == 1 else graph.layers[order - 2].keys()
    for m in members:
        if m not in below:
            raise DanglingMemberError(f"edge member {m!r} not present in layer below")
    edge_id = item.id if item.id is not None else _fresh_edge_id(graph, order)
    _check_id(edge_id)
    if edge_id in graph.layers[order - 1]:
        raise DuplicateIdError(f"edge id {edge_id!r} already stored in layer {order}")
    layers = list(graph.layers)
    layer = dict(layers[order - 1])
    layer[edge_id] = members
    layers[order - 1] = layer
    return ConceptGraph(graph.nodes, tuple(layers), graph.annotations), edge_id


def remove(graph: ConceptGraph, item_id: str) -> ConceptGraph:
    """Retract a node or edge; refuses while anything still references it."""
    if item_id in graph.nodes:
        for edge_id, members in graph.layers[0].items():
            if item_id in members:
                raise GraphError(f"node {item_id!r} is still used by edge {edge_id!r}")
        nodes = dict(graph.nodes)
        del nodes[item_id]
        return ConceptGraph(nodes, graph.layers, graph.annotations)

    depth = _all_edge_ids(graph).get(item_id)
    if depth is None:
        raise UnknownIdError(f"no item with id {item_id!r}")
    if depth < graph.order:
        for edge_id, members in graph.layers[depth].items():
            if item_id in members:
                raise GraphError(f"edge {item_id!r} is still used by edge {edge_id!r}")
    layers = list(graph.layers)
    layer = dict(layers[depth - 1])
    del layer[item_id]
    layers[depth - 1] = layer
    return ConceptGraph(graph.nodes, tuple(layers), graph.annotations)


def recall(graph: ConceptGraph, key: str) -> list[Node | Edge]:
    """Exact-id lookup, else payload glob match over nodes, in id order.

    An empty result is a value, not an error.
    """
    if key in graph.nodes:
        return [Node(payload=graph.nodes[key], id=key)]
    for depth, layer in enumerate(graph.layers, start=1):
        if key in layer:
            return [Edge(order=depth, members=layer[key], id=key)]
    hits = []
    for node_id in sorted(graph.nodes):
        payload = graph.nodes[node_id]
        if payload is not None and fnmatchcase(payload, key):
            hits.append(Node(payload=payload, id=node_id))
    return hits


# ---------------------------------------------------------------------------
# Reasoning
# ---------------------------------------------------------------------------

def _adjacency(graph: ConceptGraph) -> dict[str, list[str]]:
    adj: dict[str, list[str]] = {node_id: [] for node_id in graph.nodes}
    for members in graph.layers[0].values():
        a, b = sorted(members)
        adj[a].append(b)
        adj[b].append(a)
    for node_id in adj:
        adj[node_id] = sorted(set(adj[node_id]))
    return adj


def reason_s1(
    graph: ConceptGraph, cue: str, budget: int, decay: float
) -> dict[str, float]:
    """Spreading activation from ``cue``: activation decay**hops along
    layer-1 edges, max over paths, nodes beyond ``budget`` hops omitted.

    Since decay lies in (0, 1], the max over paths is decay to the
    shortest-path distance.
    """
    if cue not in graph.nodes:
        raise UnknownIdError(f"unknown cue {cue!r}")
    if budget < 0:
        raise GraphError(f"budget must be >= 0, got {budget}")
    if not 0.0 < decay <= 1.0:
        raise GraphError(f"decay must lie in (0, 1], got {decay}")
    adj = _adjacency(graph)
    dist = {cue: 0}
    frontier = [cue]
    for hop in range(1, budget + 1):
        nxt = []
        for node in frontier:
            for nbr in adj[node]:
                if nbr not in dist:
                    dist[nbr] = hop
                    nxt.append(nbr)
        frontier = nxt
        if not frontier:
            break
    return {node: decay ** d for node, d in dist.items()}


@dataclass(frozen=True)
class ProblemSpec:
    goal: str
    premises: frozenset[str]
    max_depth: int = 1

    def __post_init__(self):
        if self.max_depth < 1:
            raise GraphError(f"max_depth must be >= 1, got {self.max_depth}")

    def check_ids(self, graph: ConceptGraph) -> None:
        missing = [x for x in [self.goal, *self.premises] if x not in graph.nodes]
        if missing:
            raise UnknownIdError(f"problem references missing nodes {sorted(missing)}")


def reason_s2(graph: ConceptGraph, problem: ProblemSpec) -> tuple[str, ...] | None:
    """Shortest layer-1 path from any premise to the goal within max_depth.

    Deterministic iterative-deepening search, ties broken by lexicographic
    id order (premises and neighbor expansions are explored sorted).
    Returns the node sequence, an empty tuple when the goal is already a
    premise, or None when no path exists within the depth bound.
    """
    problem.check_ids(graph)
    if problem.goal in problem.premises:
        return ()
    adj = _adjacency(graph)

    # breadth-first distance as an admissible floor for the deepening loop
    dist = {p: 0 for p in problem.premises}
    frontier = sorted(problem.premises)
    d = 0
    while frontier and problem.goal not in dist:
        d += 1
        if d > problem.max_depth:
            return None
        nxt = []
        for node in frontier:
            for nbr in adj[node]:
                if nbr not in dist:
                    dist[nbr] = d
                    nxt.append(nbr)
        frontier = nxt
    if problem.goal not in dist:
        return None

    def dfs(node: str, path: list[str], limit: int) -> tuple[str, ...] | None:
        if node == problem.goal:
            return tuple(path)
        if limit == 0:
            return None
        for nbr in adj[node]:
            if nbr in path:
                continue
            path.append(nbr)
            found = dfs(nbr, path, limit - 1)
            if found is not None:
                return found
            path.pop()
        return None

    for depth in range(dist[problem.goal], problem.max_depth + 1):
        for start in sorted(problem.premises):
            found = dfs(start, [start], depth)
            if found is not None:
                return found
    return None


# ---------------------------------------------------------------------------
# Layer navigation
# ---------------------------------------------------------------------------

def lift(graph: ConceptGraph, grouping: Sequence[Iterable[str]]) -> ConceptGraph:
    """Add a layer whose edges are exactly the given groups of current
    top-layer edge ids.  An empty grouping adds an empty (valid) layer."""
    top = graph.layers[-1]
    new_order = graph.order + 1
    layer: dict[str, frozenset[str]] = {}
    for i, group in enumerate(grouping):
        members = frozenset(group)
        if not members:
            raise GraphError(f"group {i} is empty")
        for m in members:
            if m not in top:
                raise UnknownIdError(
                    f"group {i} references {m!r}, not an order-{graph.order} edge"
                )
        layer[f"e{new_order}_{i}"] = members
    return ConceptGraph(graph.nodes, graph.layers + (layer,), graph.annotations)


def _underlying_nodes(graph: ConceptGraph, depth: int, members: frozenset[str]) -> frozenset[str]:
    if depth == 1:
        return frozenset(members)
    out: set[str] = set()
    below = graph.layers[depth - 2]
    for m in members:
        out |= _underlying_nodes(graph, depth - 1, below[m])
    return frozenset(out)


def project(graph: ConceptGraph) -> ConceptGraph:
    """Drop the top layer, recording each dropped edge as a clique
    annotation over its underlying nodes (provenance kept by edge id)."""
    if graph.order < 2:
        raise GraphError("projection needs a graph of order >= 2")
    top = graph.layers[-1]
    notes = list(graph.annotations)
    for edge_id in sorted(top):
        nodes = _underlying_nodes(graph, graph.order, top[edge_id])
        notes.append(CliqueAnnotation(nodes, edge_id, graph.order))
    return ConceptGraph(graph.nodes, graph.layers[:-1], tuple(notes))


# ---------------------------------------------------------------------------
# Fitness space
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FitnessTriple:
    f_c: float  # current
    f_t: float  # target
    f_p: float  # projected

    def __post_init__(self):
        for name in ("f_c", "f_t", "f_p"):
            if not math.isfinite(getattr(self, name)):
                raise GraphError(f"fitness component {name} must be finite")


@dataclass(frozen=True)
class EnvSignal:
    pressure: float
    affected: frozenset[str]

    def __post_init__(self):
        if not math.isfinite(self.pressure):
            raise GraphError("pressure must be finite")


@dataclass(frozen=True)
class AgentMind:
    graph: ConceptGraph
    fitness: FitnessTriple
    transform_log: tuple[str, ...] = ()


FitnessFunctional = Callable[[ConceptGraph], float]


def connectivity_ratio(graph: ConceptGraph) -> float:
    """Default fitness functional: layer-1 edge density
    ``2 |edges| / (|nodes| (|nodes| - 1))``, 0 below two nodes."""
    n = len(graph.nodes)
    if n < 2:
        return 0.0
    return 2.0 * len(graph.layers[0]) / (n * (n - 1))


def new_mind(
    graph: ConceptGraph | None = None,
    target_fitness: float = 0.5,
    functional: FitnessFunctional = connectivity_ratio,
) -> AgentMind:
    g = graph if graph is not None else ConceptGraph.empty()
    f_c = functional(g)
    return AgentMind(g, FitnessTriple(f_c, target_fitness, f_c))


Action = tuple  # ("noop",) | ("store", item) | ("remove", id)
#               | ("adapt", EnvSignal) | ("bridge", ids_a, ids_b)


def _first_unlinked_pair(graph: ConceptGraph, ids: list[str]) -> tuple[str, str] | None:
    linked = set(map(frozenset, graph.layers[0].values()))
    for i, a in enumerate(ids):
        for b in ids[i + 1:]:
            if frozenset((a, b)) not in linked:
                return a, b
    return None


def _adapt_graph(graph: ConceptGraph, env: EnvSignal) -> tuple[ConceptGraph, str]:
    missing = [x for x in env.affected if x not in graph.nodes]
    if missing:
        raise UnknownIdError(f"signal references missing nodes {sorted(missing)}")
    ids = sorted(env.affected)
    if env.pressure > 0.0:
        pair = _first_unlinked_pair(graph, ids)
        if pair is None:
            return graph, "noop"
        new, edge_id = store(graph, Edge(order=1, members=frozenset(pair)))
        return new, f"added {edge_id}"
    if env.pressure < 0.0:
        # pinned edges (referenced by a higher layer) are skipped
        pinned = set()
        if graph.order >= 2:
            for members in graph.layers[1].values():
                pinned |= members
        incident = sorted(
            eid
            for eid, members in graph.layers[0].items()
            if members & env.affected and eid not in pinned
        )
        if not incident:
            return graph, "noop"
        return remove(graph, incident[0]), f"removed {incident[0]}"
    return graph, "noop"


def _apply_action(graph: ConceptGraph, action: Action) -> ConceptGraph:
    if not action or not isinstance(action, tuple):
        raise UnsupportedActionError(f"malformed action {action!r}")
    kind = action[0]
    if kind == "noop":
        return graph
    if kind == "store":
        return store(graph, action[1])[0]
    if kind == "remove":
        return remove(graph, action[1])
    if kind == "adapt":
        return _adapt_graph(graph, action[1])[0]
    if kind == "bridge":
        a, b = frozenset(action[1]), frozenset(action[2])
        _check_bridge_sets(graph, a, b)
        pair = (min(a), min(b))
        if frozenset(pair) in set(map(frozenset, graph.layers[0].values())):
            return graph
        return store(graph, Edge(order=1, members=frozenset(pair)))[0]
    raise UnsupportedActionError(f"unsupported action {kind!r}")


def fitness_eval(
    mind: AgentMind,
    action: Action,
    functional: FitnessFunctional = connectivity_ratio,
) -> FitnessTriple:
    """(current, target, projected) fitness; the projection applies the
    action to a scratch copy, so the mind itself is untouched."""
    f_c = functional(mind.graph)
    f_p = functional(_apply_action(mind.graph, action))
    return FitnessTriple(f_c, mind.fitness.f_t, f_p)


def sustainable(triple: FitnessTriple, eps: float) -> bool:
    """Projected fitness within eps of target (closed tolerance)."""
    if not eps > 0.0:
        raise GraphError(f"eps must be > 0, got {eps}")
    return abs(triple.f_p - triple.f_t) <= eps


def adapt(
    mind: AgentMind,
    env: EnvSignal,
    functional: FitnessFunctional = connectivity_ratio,
) -> AgentMind:
    """Structural response to fitness pressure (reference policy).

    Positive pressure links the first lexicographic unlinked pair of
    affected nodes; negative pressure removes the lowest-id layer-1 edge
    incident to them; no applicable change is a logged no-op.
    """
    graph, note = _adapt_graph(mind.graph, env)
    f_c = functional(graph)
    log = mind.transform_log + (f"adapt({env.pressure:+g}): {note}",)
    return AgentMind(graph, FitnessTriple(f_c, mind.fitness.f_t, f_c), log)


def stability_score(mind: AgentMind) -> float:
    """1 for a connected (or <= 1 node) layer-1 graph, falling toward 0
    with fragmentation: ``1 - (components - 1) / max(1, nodes - 1)``."""
    graph = mind.graph
    n = len(graph.nodes)
    if n <= 1:
        return 1.0
    comps = len(_components(graph))
    return 1.0 - (comps - 1) / max(1, n - 1)


def _check_bridge_sets(graph: ConceptGraph, a: frozenset[str], b: frozenset[str]) -> None:
    if not a or not b:
        raise GraphError("bridge domains must be non-empty")
    if a & b:
        raise OverlapError(f"bridge domains overlap on {sorted(a & b)}")
    missing = [x for x in (a | b) if x not in graph.nodes]
    if missing:
        raise UnknownIdError(f"bridge references missing nodes {sorted(missing)}")


def bridge(
    mind: AgentMind,
    domain_a: Iterable[str],
    domain_b: Iterable[str],
    functional: FitnessFunctional = connectivity_ratio,
) -> AgentMind:
    """Link the lowest-id nodes of two disjoint domains (no-op when the
    edge already exists); logged either way."""
    a, b = frozenset(domain_a), frozenset(domain_b)
    _check_bridge_sets(mind.graph, a, b)
    pair = (min(a), min(b))
    if frozenset(pair) in set(map(frozenset, mind.graph.layers[0].values())):
        graph, note = mind.graph, "noop"
    else:
        graph, edge_id = store(mind.graph, Edge(order=1, members=frozenset(pair)))
        note = f"added {edge_id}"
    f_c = functional(graph)
    log = mind.transform_log + (f"bridge({pair[0]},{pair[1]}): {note}",)
    return AgentMind(graph, FitnessTriple(f_c, mind.fitness.f_t, f_c), log)


def _components(graph: ConceptGraph) -> list[set[str]]:
    adj = _adjacency(graph)
    seen: set[str] = set()
    comps = []
    for start in sorted(graph.nodes):
        if start in seen:
            continue
        comp = {start}
        stack = [start]
        while stack:
            node = stack.pop()
            for nbr in adj[node]:
                if nbr not in comp:
                    comp.add(nbr)
                    stack.append(nbr)
        seen |= comp
        comps.append(comp)
    return comps


def decompose(graph: ConceptGraph, problem: ProblemSpec) -> list[ProblemSpec]:
    """Split a problem by layer-1 connected components of its premises;
    sub-problems keep the goal and depth bound, ordered by each
    component's smallest node id."""
    problem.check_ids(graph)
    if not problem.premises:
        return []
    comps = sorted(_components(graph), key=min)
    out = []
    for comp in comps:
        inside = problem.premises & comp
        if inside:
            out.append(ProblemSpec(problem.goal, frozenset(inside), problem.max_depth))
    return out


def fitness_track(history: Sequence[FitnessTriple], window: int) -> float:
    """Change of current fitness across the trailing window."""
    if window < 2:
        raise GraphError(f"window must be >= 2, got {window}")
    if len(history) < window:
        raise InsufficientHistoryError(
            f"history of {len(history)} shorter than window {window}"
        )
    return history[-1].f_c - history[-window].f_c


# ---------------------------------------------------------------------------
# Interchange format
# ---------------------------------------------------------------------------

def serialize_graph(graph: ConceptGraph) -> str:
    """Line format ``node <id> [payload]`` / ``edge <order> <id> <member>+``
    with nodes first, layers ascending, ids and members sorted.

    Re-serialization of a parsed dump is byte-stable.  Empty top layers
    have no line representation and are dropped on a round trip.
    """
    validate_graph(graph)
    lines = []
    for node_id in sorted(graph.nodes):
        payload = graph.nodes[node_id]
        lines.append(f"node {node_id}" if payload is None else f"node {node_id} {payload}")
    for depth, layer in enumerate(graph.layers, start=1):
        for edge_id in sorted(layer):
            members = " ".join(sorted(layer[edge_id]))
            lines.append(f"edge {depth} {edge_id} {members}")
    return "".join(line + "\n" for line in lines)


def parse_graph(text: str) -> ConceptGraph:
    """Inverse of :func:`serialize_graph`; blank lines are ignored and
    malformed lines are reported with their line number."""
    nodes: dict[str, str | None] = {}
    edges_by_order: dict[int, dict[str, frozenset[str]]] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        if not raw.strip():
            continue
        if raw.startswith("node "):
            rest = raw[5:]
            sep = rest.find(" ")
            node_id, payload = (rest, None) if sep == -1 else (rest[:sep], rest[sep + 1:])
            if node_id in nodes:
                raise DuplicateIdError(f"line {lineno}: duplicate node id {node_id!r}")
            nodes[node_id] = payload
        elif raw.startswith("edge "):
            parts = raw.split()
            if len(parts) < 4:
                raise GraphError(f"line {lineno}: expected 'edge <order> <id> <member>+'")
            try:
                order = int(parts[1])
            except ValueError:
                raise GraphError(f"line {lineno}: bad order {parts[1]!r}") from None
            if order < 1:
                raise GraphError(f"line {lineno}: order must be >= 1")
            edge_id, members = parts[2], frozenset(parts[3:])
            layer = edges_by_order.setdefault(order, {})
            if edge_id in layer:
                raise DuplicateIdError(f"line {lineno}: duplicate edge id {edge_id!r}")
            layer[edge_id] = members
        else:
            raise GraphError(f"line {lineno}: unknown record {raw.split()[0]!r}")
    top = max(edges_by_order) if edges_by_order else 1
    layers = tuple(edges_by_order.get(depth, {}) for depth in range(1, top + 1))
    graph = ConceptGraph(nodes, layers)
    validate_graph(graph)
    return graph
