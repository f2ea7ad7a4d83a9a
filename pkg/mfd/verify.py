"""
Independent checks: decomposition verification, an exhaustive minimum for
tiny networks, and a greedy widest-walk baseline.
"""

from __future__ import annotations

import heapq
import logging
import math
from collections import Counter
from enum import Enum
from typing import Optional

import networkx as nx
from pydantic import BaseModel

import config
from errors import NotAPseudoFlowError
from formulations import walk_from_selection
from graph import reachable_from_source, selection_from_nodes, touched_nodes, violating_components
from models import (
    Cardinality,
    Decomposition,
    DecompositionElement,
    EdgeSelection,
    ElementKind,
    FlowNetwork,
    ProblemKind,
    VariantSpec,
)

logger = logging.getLogger(__name__)


# ── Decomposition verification ────────────────────────────────────────────

def _edge_label(network: FlowNetwork, e: int) -> str:
    edge = network.edges[e]
    return f"({edge.tail},{edge.head})"


def _structure_problems(
    network: FlowNetwork, variant: VariantSpec, el: DecompositionElement, where: str
) -> list[str]:
    s, t = network.source, network.sink
    nodes = el.nodes
    problems: list[str] = []

    if variant.problem is ProblemKind.PATHS_OR_CYCLES:
        if el.kind is ElementKind.CYCLE:
            if len(nodes) < 3 or nodes[0] != nodes[-1]:
                problems.append(f"{where}: cycle must start and end at the same node")
            elif len(set(nodes[:-1])) != len(nodes) - 1:
                problems.append(f"{where}: cycle repeats a node")
            return problems
        if el.kind is not ElementKind.PATH:
            return [f"{where}: kind '{el.kind.value}' is not a path or cycle"]
        if len(set(nodes)) != len(nodes):
            problems.append(f"{where}: path repeats a node")

    if not nodes or nodes[0] != s or nodes[-1] != t:
        problems.append(f"{where}: does not run from s={s} to t={t}")

    if variant.is_trails:
        for e, count in el.multiplicity.multiplicity.items():
            if count > 1:
                problems.append(f"{where}: edge repeated {_edge_label(network, e)} in a trail")

    if variant.problem is not ProblemKind.PATHS_OR_CYCLES:
        try:
            stuck = violating_components(network, el.multiplicity)
        except NotAPseudoFlowError as exc:
            problems.append(f"{where}: {exc}")
        else:
            for comp in stuck:
                problems.append(f"{where}: nodes {sorted(comp.component_nodes)} cannot reach t")
        unreachable = touched_nodes(network, el.multiplicity) - reachable_from_source(network, el.multiplicity)
        if unreachable:
            problems.append(f"{where}: nodes {sorted(unreachable)} unreachable from s")
    return problems


def verify_decomposition(
    network: FlowNetwork,
    decomposition: Decomposition,
    variant: Optional[VariantSpec] = None,
    k: Optional[int] = None,
) -> list[str]:
    """
    Every problem with *decomposition* as a decomposition of *network*; an
    empty list means it is valid.

    Checks exact superposition on every edge, the shape of each element for
    the variant, and, when *k* is given, the element count (exactly k under
    exactly-k cardinality).
    """
    variant = variant or decomposition.variant
    m = network.edge_count
    problems: list[str] = []
    totals: Counter[int] = Counter()

    for idx, el in enumerate(decomposition.elements, start=1):
        where = f"element {idx}"
        if el.weight < 1:
            problems.append(f"{where}: weight {el.weight} < 1")
        unknown = [e for e in el.multiplicity.multiplicity if not 0 <= e < m]
        if unknown:
            problems.append(f"{where}: unknown edge ids {sorted(unknown)}")
            continue
        try:
            traced = selection_from_nodes(network, el.nodes)
        except KeyError as exc:
            problems.append(f"{where}: {exc.args[0]}")
            continue
        if {e: c for e, c in traced.multiplicity.items() if c} != {
            e: c for e, c in el.multiplicity.multiplicity.items() if c
        }:
            problems.append(f"{where}: node sequence disagrees with its edge multiplicities")
        problems.extend(_structure_problems(network, variant, el, where))
        for e in el.multiplicity.support():
            totals[e] += el.weight * el.multiplicity.get(e)

    for e, edge in enumerate(network.edges):
        if totals[e] != edge.flow:
            problems.append(f"edge {_edge_label(network, e)}: {totals[e]} != {edge.flow}")

    if k is not None and decomposition.size > k:
        problems.append(f"decomposition has {decomposition.size} elements, more than k={k}")
    elif k is not None and variant.cardinality is Cardinality.EXACTLY_K and decomposition.size < k:
        problems.append(f"decomposition has {decomposition.size} elements, exactly k={k} required")
    return problems


# ── Exhaustive minimum ────────────────────────────────────────────────────

class OracleStatus(str, Enum):
    FOUND = "found"
    INFEASIBLE = "infeasible"
    TOO_LARGE = "too_large"


class OracleResult(BaseModel):
    status: OracleStatus
    k_star: Optional[int] = None


Usage = tuple[int, ...]


def _walk_usages(network: FlowNetwork, caps: Usage, must_use: int) -> list[Usage]:
    """Edge-usage vectors of all s-t walks within *caps* that use edge *must_use*."""
    s, t = network.source, network.sink
    out = network.out_edges()
    found: set[Usage] = set()
    seen: set[tuple[int, Usage]] = set()
    stack = [(s, (0,) * len(caps))]
    while stack:
        state = stack.pop()
        if state in seen:
            continue
        seen.add(state)
        v, usage = state
        if v == t:
            if usage[must_use]:
                found.add(usage)
            continue
        for e in out[v]:
            if usage[e] < caps[e]:
                nxt = list(usage)
                nxt[e] += 1
                stack.append((network.edges[e].head, tuple(nxt)))
    return sorted(found, reverse=True)


def _cycle_usages(network: FlowNetwork, caps: Usage, e0: int) -> list[Usage]:
    """Simple cycles through edge *e0* using only edges with capacity."""
    out = network.out_edges()
    first = network.edges[e0]
    found: list[Usage] = []

    def extend(v: int, visited: set[int], used: list[int]) -> None:
        for e in out[v]:
            if caps[e] < 1:
                continue
            head = network.edges[e].head
            if head == first.tail:
                usage = [0] * len(caps)
                for u in used + [e]:
                    usage[u] = 1
                found.append(tuple(usage))
            elif head not in visited:
                extend(head, visited | {head}, used + [e])

    if caps[e0] >= 1:
        extend(first.head, {first.tail, first.head}, [e0])
    return found


def _element_usages(network: FlowNetwork, problem: ProblemKind, caps: Usage, e0: int) -> list[Usage]:
    if problem is ProblemKind.WALKS:
        return _walk_usages(network, caps, e0)
    trails = _walk_usages(network, tuple(min(c, 1) for c in caps), e0)
    if problem is not ProblemKind.PATHS_OR_CYCLES:
        return trails
    # a trail is a simple path iff no node is left twice
    out = network.out_edges()
    paths = [u for u in trails if all(sum(u[e] for e in out[v]) <= 1 for v in network.nodes())]
    return paths + _cycle_usages(network, caps, e0)


def brute_force_min(
    network: FlowNetwork,
    variant: VariantSpec,
    max_nodes: int = config.ORACLE_MAX_NODES,
    max_edges: int = config.ORACLE_MAX_EDGES,
    max_flow: int = config.ORACLE_MAX_FLOW,
) -> OracleResult:
    """
    Exact minimum decomposition size by exhaustive search, for tiny networks.

    Iterative deepening on the size r: the first edge still carrying
    residual flow must belong to some element, so only elements through it
    are tried, with every weight from its residual down to 1.
    """
    if network.node_count > max_nodes or network.edge_count > max_edges or network.max_flow > max_flow:
        return OracleResult(status=OracleStatus.TOO_LARGE)

    problem = variant.problem
    s_out = network.out_edges()[network.source]
    t_in = network.in_edges()[network.sink]
    failed: dict[Usage, int] = {}

    def solvable(res: Usage, r: int) -> bool:
        if not any(res):
            return True
        if r == 0 or failed.get(res, 0) >= r:
            return False
        # each path, trail or walk takes one s-edge and one t-edge
        if sum(1 for e in s_out if res[e]) > r or sum(1 for e in t_in if res[e]) > r:
            failed[res] = max(failed.get(res, 0), r)
            return False
        e0 = next(e for e, f in enumerate(res) if f)
        for w in range(res[e0], 0, -1):
            caps = tuple(f // w for f in res)
            for usage in _element_usages(network, problem, caps, e0):
                if solvable(tuple(f - w * u for f, u in zip(res, usage)), r - 1):
                    return True
        failed[res] = max(failed.get(res, 0), r)
        return False

    flows = tuple(e.flow for e in network.edges)
    for r in range(1, network.edge_count + 1):
        if solvable(flows, r):
            return OracleResult(status=OracleStatus.FOUND, k_star=r)
    return OracleResult(status=OracleStatus.INFEASIBLE)


# ── Greedy widest walks ───────────────────────────────────────────────────

def _widest_path(network: FlowNetwork, residual: list[int]) -> Optional[tuple[list[int], int]]:
    """Maximum-bottleneck s-t path over edges with residual flow, as edge ids."""
    s, t = network.source, network.sink
    out = network.out_edges()
    width: dict[int, float] = {s: math.inf}
    pred: dict[int, int] = {}
    done: set[int] = set()
    heap: list[tuple[float, int]] = [(-math.inf, s)]
    while heap:
        neg, v = heapq.heappop(heap)
        if v in done:
            continue
        done.add(v)
        if v == t:
            break
        for e in out[v]:
            if residual[e] <= 0:
                continue
            head = network.edges[e].head
            cand = min(-neg, residual[e])
            if cand > width.get(head, 0):
                width[head] = cand
                pred[head] = e
                heapq.heappush(heap, (-cand, head))
    if t not in pred:
        return None
    path: list[int] = []
    v = t
    while v != s:
        e = pred[v]
        path.append(e)
        v = network.edges[e].tail
    return path[::-1], int(width[t])


def _decomposable_into_walks(network: FlowNetwork, residual: list[int]) -> bool:
    left = EdgeSelection(multiplicity={e: f for e, f in enumerate(residual) if f > 0})
    return touched_nodes(network, left) <= reachable_from_source(network, left)


def _absorb_cycles(network: FlowNetwork, residual: list[int], usage: Counter[int], weight: int) -> Counter[int]:
    """Add cycles through nodes of the walk while every cycle edge keeps ``weight`` to spare."""
    usage = Counter(usage)
    while True:
        spare = {e: residual[e] - weight * usage[e] for e in range(network.edge_count)}
        g = nx.DiGraph()
        for e, left in spare.items():
            if left >= weight:
                edge = network.edges[e]
                g.add_edge(edge.tail, edge.head, id=e)
        on_walk = sorted({network.edges[e].tail for e in usage if usage[e]})
        cycle = None
        for v in on_walk:
            if v not in g:
                continue
            for _, u, data in g.out_edges(v, data=True):
                if nx.has_path(g, u, v):
                    back = nx.shortest_path(g, u, v)
                    cycle = [data["id"]] + [g.edges[a, b]["id"] for a, b in zip(back, back[1:])]
                    break
            if cycle:
                break
        if not cycle:
            return usage
        for e in cycle:
            usage[e] += 1


def _unit_walk(network: FlowNetwork, residual: list[int]) -> Counter[int]:
    """One s-t walk of weight 1 cut from an Eulerian circuit closed by return edges t->s."""
    s, t = network.source, network.sink
    g = nx.MultiDiGraph()
    for e, f in enumerate(residual):
        edge = network.edges[e]
        for copy in range(f):
            g.add_edge(edge.tail, edge.head, key=(e, copy))
    for copy in range(sum(residual[e] for e in network.out_edges()[s])):
        g.add_edge(t, s, key=("return", copy))
    usage: Counter[int] = Counter()
    for _, _, key in nx.eulerian_circuit(g, source=s, keys=True):
        if key[0] == "return":
            break
        usage[key[0]] += 1
    return usage


def greedy_width_baseline(network: FlowNetwork) -> Decomposition:
    """
    Walk decomposition by repeatedly taking the widest s-t path in the
    residual, extended by cycles that still fit its bottleneck weight.

    A candidate that would leave flow unreachable from s is rejected; the
    last resort is a weight-1 walk, which always keeps the residual
    decomposable.
    """
    variant = VariantSpec(problem=ProblemKind.WALKS)
    residual = [e.flow for e in network.edges]
    elements: list[DecompositionElement] = []

    while any(residual):
        chosen: Optional[tuple[Counter[int], int]] = None
        widest = _widest_path(network, residual)
        if widest is not None:
            path, weight = widest
            plain = Counter(path)
            for usage in (_absorb_cycles(network, residual, plain, weight), plain):
                after = [f - weight * usage[e] for e, f in enumerate(residual)]
                if _decomposable_into_walks(network, after):
                    chosen = (usage, weight)
                    break
        if chosen is None:
            chosen = (_unit_walk(network, residual), 1)

        usage, weight = chosen
        for e, count in usage.items():
            residual[e] -= weight * count
        selection = EdgeSelection(multiplicity=dict(usage))
        elements.append(
            DecompositionElement(
                kind=ElementKind.WALK,
                nodes=walk_from_selection(network, selection),
                multiplicity=selection,
                weight=weight,
            )
        )

    logger.debug("Greedy baseline on %s: %d walk(s)", network.name, len(elements))
    return Decomposition(elements=tuple(elements), variant=variant)
