"""
Flow-network parsing, validation and connectivity utilities.

Graph file format: one or more instances, each a ``# <name>`` line, a line
holding the node count ``n``, then one ``<tail> <head> <flow>`` line per
edge (single spaces, LF line endings, node ids in ``[0, n)``).
"""

from __future__ import annotations

import logging
import random
from collections import Counter
from collections.abc import Iterable, Iterator

import networkx as nx

import config
from errors import GraphSyntaxError, NetworkValidationError, NotAPseudoFlowError
from models import (
    CertificateVerdict,
    Decomposition,
    DecompositionElement,
    Edge,
    EdgeSelection,
    ElementKind,
    FlowNetwork,
    GeneratedInstance,
    ProblemKind,
    SccCertificate,
    VariantSpec,
)

logger = logging.getLogger(__name__)


# ── Parsing & serialization ───────────────────────────────────────────────

def split_instance_blocks(text: str) -> list[tuple[int, list[str]]]:
    """
    Split *text* into ``(first_line_number, lines)`` blocks, one per ``#`` header.

    Blank lines are dropped. Content before the first header is returned as
    its own block so the parser can report it.
    """
    blocks: list[tuple[int, list[str]]] = []
    for lineno, raw in enumerate(text.split("\n"), start=1):
        line = raw.rstrip("\r")
        if not line.strip():
            continue
        if line.startswith("#") or not blocks:
            blocks.append((lineno, []))
        blocks[-1][1].append(line)
    return blocks


def _parse_int(token: str, lineno: int, column: int, what: str) -> int:
    try:
        return int(token)
    except ValueError:
        raise GraphSyntaxError(lineno, column, f"expected integer {what}, got '{token}'") from None


def parse_block(first_line: int, lines: list[str]) -> FlowNetwork:
    """Parse and validate a single instance block."""
    header = lines[0]
    if not header.startswith("#"):
        raise GraphSyntaxError(first_line, 1, "expected '# <name>' header")
    name = header[1:].strip()

    if len(lines) < 2:
        raise GraphSyntaxError(first_line, len(header) + 1, "missing node count line")
    node_count = _parse_int(lines[1].strip(), first_line + 1, 1, "node count")
    if node_count < 1:
        raise GraphSyntaxError(first_line + 1, 1, "node count must be positive")

    edges: list[Edge] = []
    for offset, line in enumerate(lines[2:], start=2):
        lineno = first_line + offset
        tokens = line.split(" ")
        if len(tokens) != 3:
            raise GraphSyntaxError(lineno, 1, f"expected '<tail> <head> <flow>', got '{line}'")
        values = []
        column = 1
        for token, what in zip(tokens, ("tail", "head", "flow")):
            values.append(_parse_int(token, lineno, column, what))
            column += len(token) + 1
        edges.append(Edge(tail=values[0], head=values[1], flow=values[2]))

    network = FlowNetwork(name=name, node_count=node_count, edges=tuple(edges))
    violations = validate(network)
    if violations:
        raise NetworkValidationError(name, violations)
    return network


def parse_graph_file(text: str) -> list[FlowNetwork]:
    """Parse every instance in *text*; the first bad instance raises."""
    networks = [parse_block(first, lines) for first, lines in split_instance_blocks(text)]
    logger.debug("Parsed %d instance(s).", len(networks))
    return networks


def serialize_graph(network: FlowNetwork) -> str:
    lines = [f"# {network.name}", str(network.node_count)]
    lines.extend(f"{e.tail} {e.head} {e.flow}" for e in network.edges)
    return "\n".join(lines) + "\n"


def serialize_graphs(networks: Iterable[FlowNetwork]) -> str:
    return "".join(serialize_graph(n) for n in networks)


# ── Validation ────────────────────────────────────────────────────────────

def validate(network: FlowNetwork) -> list[str]:
    """Every broken flow-network invariant, or an empty list when valid."""
    violations: list[str] = []
    n = network.node_count

    seen: set[tuple[int, int]] = set()
    endpoints_ok = True
    for idx, e in enumerate(network.edges):
        if not (0 <= e.tail < n and 0 <= e.head < n):
            violations.append(f"edge {idx} ({e.tail},{e.head}): node id outside [0, {n})")
            endpoints_ok = False
            continue
        if e.tail == e.head:
            violations.append(f"edge {idx} ({e.tail},{e.head}): self-loop")
        if (e.tail, e.head) in seen:
            violations.append(f"edge {idx} ({e.tail},{e.head}): duplicate edge")
        seen.add((e.tail, e.head))
        if e.flow < 1:
            violations.append(f"edge {idx} ({e.tail},{e.head}): flow {e.flow} < 1")
    if not endpoints_ok:
        return violations

    sources = network.sources()
    sinks = network.sinks()
    if not sources:
        violations.append("no source: every node has an incoming edge")
    elif len(sources) > 1:
        violations.append(f"source not unique: nodes {sources} have in-degree 0")
    if not sinks:
        violations.append("no sink: every node has an outgoing edge")
    elif len(sinks) > 1:
        violations.append(f"sink not unique: nodes {sinks} have out-degree 0")
    if len(sources) == 1 and sources == sinks:
        violations.append(f"node {sources[0]} is both source and sink")

    terminals = set(sources) | set(sinks)
    inflow: Counter[int] = Counter()
    outflow: Counter[int] = Counter()
    for e in network.edges:
        outflow[e.tail] += e.flow
        inflow[e.head] += e.flow
    for v in network.nodes():
        if v in terminals:
            continue
        if inflow[v] != outflow[v]:
            violations.append(f"conservation violated at node {v}: in {inflow[v]} != out {outflow[v]}")

    if not nx.is_weakly_connected(_digraph(network.nodes(), ((e.tail, e.head) for e in network.edges))):
        violations.append("network is not weakly connected")
    return violations


# ── Strong connectivity ───────────────────────────────────────────────────

def _digraph(nodes: Iterable[int], edges: Iterable[tuple[int, int]]) -> nx.DiGraph:
    g = nx.DiGraph()
    g.add_nodes_from(nodes)
    g.add_edges_from(edges)
    return g


def strongly_connected_components(
    nodes: Iterable[int], edges: Iterable[tuple[int, int]]
) -> list[frozenset[int]]:
    """Partition *nodes* into SCCs, ordered by smallest member."""
    comps = nx.strongly_connected_components(_digraph(nodes, edges))
    return sorted((frozenset(c) for c in comps), key=min)


def _check_pseudo_flow(network: FlowNetwork, selection: EdgeSelection) -> None:
    m = network.edge_count
    for edge_id in selection.multiplicity:
        if not 0 <= edge_id < m:
            raise NotAPseudoFlowError(f"unknown edge id {edge_id}")

    balance: Counter[int] = Counter()
    for edge_id in selection.support():
        e = network.edges[edge_id]
        count = selection.get(edge_id)
        balance[e.head] += count
        balance[e.tail] -= count

    s, t = network.source, network.sink
    for v, delta in balance.items():
        if v not in (s, t) and delta != 0:
            raise NotAPseudoFlowError(f"node {v} is unbalanced by {delta}")
    if -balance[s] > 1:
        raise NotAPseudoFlowError(f"{-balance[s]} units leave the source")


def violating_components(network: FlowNetwork, selection: EdgeSelection) -> list[SccCertificate]:
    """
    Every SCC of the selected subgraph, other than ``{t}``, that no selected
    edge leaves. Empty when the selection orders into a single s-t walk.
    """
    _check_pseudo_flow(network, selection)
    chosen = selection.support()
    if not chosen:
        return []

    s, t = network.source, network.sink
    pairs = [(network.edges[e].tail, network.edges[e].head) for e in chosen]
    touched = {v for pair in pairs for v in pair}
    # G' from the selected edges plus (t, s): one SCC iff nothing violates.
    closed = _digraph(touched | {s, t}, pairs + [(t, s)])
    if nx.number_strongly_connected_components(closed) == 1:
        return []

    out = network.out_edges()
    found: list[SccCertificate] = []
    for comp in strongly_connected_components(touched, pairs):
        if comp == {t}:
            continue
        inside = frozenset(e for e in chosen if network.edges[e].tail in comp and network.edges[e].head in comp)
        leaves = any(network.edges[e].tail in comp and network.edges[e].head not in comp for e in chosen)
        if leaves:
            continue
        escape = frozenset(e for v in comp for e in out[v] if e not in inside)
        found.append(
            SccCertificate(
                verdict=CertificateVerdict.VIOLATING_COMPONENT,
                component_nodes=comp,
                component_edges=inside,
                escape_edges=escape,
            )
        )
    return found


def check_walk_connectivity(network: FlowNetwork, selection: EdgeSelection) -> SccCertificate:
    """First violating component of *selection*, or an ``ok`` certificate."""
    found = violating_components(network, selection)
    return found[0] if found else SccCertificate(verdict=CertificateVerdict.OK)


def reachable_from_source(network: FlowNetwork, selection: EdgeSelection) -> set[int]:
    pairs = [(network.edges[e].tail, network.edges[e].head) for e in selection.support()]
    g = _digraph([network.source], pairs)
    return set(nx.descendants(g, network.source)) | {network.source}


def touched_nodes(network: FlowNetwork, selection: EdgeSelection) -> set[int]:
    return {v for e in selection.support() for v in (network.edges[e].tail, network.edges[e].head)}


def selection_from_nodes(network: FlowNetwork, nodes: list[int]) -> EdgeSelection:
    """Edge multiplicities of the node sequence *nodes*; missing edges raise KeyError."""
    index = network.edge_index()
    counts: Counter[int] = Counter()
    for u, v in zip(nodes, nodes[1:]):
        if (u, v) not in index:
            raise KeyError(f"({u},{v}) is not an edge of '{network.name}'")
        counts[index[(u, v)]] += 1
    return EdgeSelection(multiplicity=dict(counts))


# ── Instance generator ────────────────────────────────────────────────────

def _insert_covered(rng: random.Random, seq: list[int], covered: list[int]) -> list[int]:
    """Splice up to two already-covered nodes into the interior of a simple path."""
    extras = [v for v in covered if v not in seq]
    rng.shuffle(extras)
    for v in extras[: rng.randint(0, 2)]:
        seq.insert(rng.randint(1, len(seq) - 1), v)
    return seq


def _loop_positions(rng: random.Random, seq: list[int]) -> tuple[int, int] | None:
    # Positions i < j of interior nodes; s and t never take part in a loop.
    if len(seq) < 4:
        return None
    i = rng.randint(1, len(seq) - 3)
    j = rng.randint(i + 1, len(seq) - 2)
    return i, j


def _element_nodes(
    rng: random.Random,
    problem: ProblemKind,
    chunk: list[int],
    covered: list[int],
    s: int,
    t: int,
    allow_cycle: bool,
) -> tuple[ElementKind, list[int]]:
    if problem is ProblemKind.PATHS_OR_CYCLES and allow_cycle:
        pool = list(dict.fromkeys(chunk + covered))
        if covered and len(pool) >= 2 and rng.random() < 0.5:
            anchor = rng.choice(covered)
            rest = [v for v in chunk if v != anchor]
            if not rest:
                rest = [rng.choice([v for v in covered if v != anchor])]
            rng.shuffle(rest)
            ring = [anchor] + rest
            lowest = ring.index(min(ring))
            ring = ring[lowest:] + ring[:lowest]
            return ElementKind.CYCLE, ring + [ring[0]]

    seq = _insert_covered(rng, [s] + chunk + [t], covered)
    if problem is ProblemKind.PATHS_OR_CYCLES:
        return ElementKind.PATH, seq

    loop = _loop_positions(rng, seq) if rng.random() < 0.5 else None
    if problem is ProblemKind.WALKS:
        if loop:
            i, j = loop
            seq = seq[: j + 1] + seq[i : j + 1] * rng.randint(1, 2) + seq[j + 1 :]
        return ElementKind.WALK, seq

    if loop:
        i, j = loop
        # back edge seq[j]->seq[i], then seq[i]->seq[j+1]: neither is on the path
        seq = seq[: j + 1] + [seq[i]] + seq[j + 1 :]
    return ElementKind.TRAIL, seq


def generate_instance(
    node_count: int,
    element_count: int,
    variant: VariantSpec,
    seed: int,
    max_weight: int | None = None,
    name: str | None = None,
) -> GeneratedInstance:
    """
    Superpose *element_count* random weighted elements of the variant's kind
    on nodes ``0..node_count-1`` (source 0, sink ``node_count-1``).

    Interior nodes are dealt round-robin to the elements so every node is
    used; weights are uniform in ``[1, max_weight]``.
    """
    if node_count < 2:
        raise ValueError("node_count must be at least 2")
    if element_count < 1:
        raise ValueError("element_count must be at least 1")
    max_weight = max_weight or config.GENERATOR_MAX_WEIGHT

    rng = random.Random(seed)
    s, t = 0, node_count - 1
    interior = list(range(1, t))
    rng.shuffle(interior)
    chunks = [interior[i::element_count] for i in range(element_count)]

    covered: list[int] = []
    drafts: list[tuple[ElementKind, list[int], int]] = []
    for idx, chunk in enumerate(chunks):
        kind, seq = _element_nodes(rng, variant.problem, chunk, covered, s, t, allow_cycle=idx > 0)
        drafts.append((kind, seq, rng.randint(1, max_weight)))
        covered.extend(chunk)

    flows: Counter[tuple[int, int]] = Counter()
    for _, seq, weight in drafts:
        for u, v in zip(seq, seq[1:]):
            flows[(u, v)] += weight
    network = FlowNetwork(
        name=name or f"gen-{variant.cli_code}-n{node_count}-k{element_count}-s{seed}",
        node_count=node_count,
        edges=tuple(Edge(tail=u, head=v, flow=f) for (u, v), f in sorted(flows.items())),
    )
    elements = tuple(
        DecompositionElement(
            kind=kind,
            nodes=seq,
            multiplicity=selection_from_nodes(network, seq),
            weight=weight,
        )
        for kind, seq, weight in drafts
    )
    logger.debug("Generated %s with %d edges.", network.name, network.edge_count)
    return GeneratedInstance(network=network, decomposition=Decomposition(elements=elements, variant=variant))
