"""
Integer programs for k-flow decomposition on graphs with cycles.

Four builders share the same core, x_uvi (edge use by element i), w_i
(element weight) and the superposition of weighted uses onto the edge
flows:

  build_fdpc        paths or cycles, sequential positions d_vi and
                    start-of-cycle indicators c_vi
  build_fdt_cg      trails, relaxed; violated strongly connected components
                    are cut off one round at a time by the search driver
  build_walk_reach  trails (binary x) or walks (integer x), reachability
                    from s encoded by d_vi / y_uvi / phi_uvi

Elements are indexed 1..k, edges by their id in the network.
"""

from __future__ import annotations

import logging
from collections.abc import Iterable
from dataclasses import dataclass, field

import networkx as nx

from errors import ExtractionError, ModelError
from models import (
    Cardinality,
    Decomposition,
    DecompositionElement,
    EdgeSelection,
    ElementKind,
    FlowNetwork,
    ProblemKind,
    SccCertificate,
    VariantSpec,
)
from milp.model import Assignment, MilpModel, Term, VarRef

logger = logging.getLogger(__name__)

ComponentKey = frozenset[int]


@dataclass
class ModelHandles:
    """Variable families of one built model, keyed the way the model indexes them."""
    variant: VariantSpec
    k: int
    x: dict[tuple[int, int], VarRef] = field(default_factory=dict)
    w: dict[int, VarRef] = field(default_factory=dict)
    pi: dict[tuple[int, int], VarRef] = field(default_factory=dict)
    c: dict[tuple[int, int], VarRef] = field(default_factory=dict)
    d: dict[tuple[int, int], VarRef] = field(default_factory=dict)
    beta: dict[tuple[ComponentKey, int], VarRef] = field(default_factory=dict)
    y: dict[tuple[int, int], VarRef] = field(default_factory=dict)
    phi: dict[tuple[int, int], VarRef] = field(default_factory=dict)
    zeta: dict[tuple[int, int], VarRef] = field(default_factory=dict)
    phi4: dict[tuple[int, int, int], VarRef] = field(default_factory=dict)
    components: list[SccCertificate] = field(default_factory=list)

    @property
    def elements(self) -> range:
        return range(1, self.k + 1)

    def selection(self, assignment: Assignment, i: int) -> EdgeSelection:
        """Edge multiplicities chosen for element *i*."""
        chosen = {e: assignment[var] for (e, j), var in self.x.items() if j == i and assignment[var] > 0}
        return EdgeSelection(multiplicity=chosen)

    def weight(self, assignment: Assignment, i: int) -> int:
        return assignment[self.w[i]]


# ── Shared pieces ─────────────────────────────────────────────────────────

def _check_k(k: int) -> None:
    if k < 1:
        raise ModelError(f"k must be at least 1, got {k}")


def _declare_core(model: MilpModel, network: FlowNetwork, handles: ModelHandles, binary_x: bool) -> None:
    w_bar = network.max_flow
    for i in handles.elements:
        handles.w[i] = model.add_integer(f"w_{i}", 1, w_bar)
    for e, edge in enumerate(network.edges):
        for i in handles.elements:
            if binary_x:
                handles.x[e, i] = model.add_binary(f"x_{e}_{i}")
            else:
                # x_uvi * w_i <= f_uv and w_i >= 1
                handles.x[e, i] = model.add_integer(f"x_{e}_{i}", 0, edge.flow)


def _add_conservation(
    model: MilpModel,
    network: FlowNetwork,
    handles: ModelHandles,
    weak_source: bool,
    terminals: bool = True,
) -> None:
    """Balance at interior nodes; at s and t (when *terminals*) either the weak or the exact form."""
    s, t = network.source, network.sink
    out, inc = network.out_edges(), network.in_edges()
    exact = terminals and handles.variant.cardinality is Cardinality.EXACTLY_K
    for i in handles.elements:
        for v in network.nodes():
            if v in (s, t):
                continue
            terms = [(1, handles.x[e, i]) for e in inc[v]] + [(-1, handles.x[e, i]) for e in out[v]]
            model.eq(terms, 0, f"balance_v{v}_i{i}")
        from_source = [(1, handles.x[e, i]) for e in out[s]]
        if exact:
            model.eq(from_source, 1, f"source_i{i}")
            model.eq([(1, handles.x[e, i]) for e in inc[t]], 1, f"sink_i{i}")
        elif weak_source:
            model.le(from_source, 1, f"source_i{i}")


def _add_weight_products(model: MilpModel, network: FlowNetwork, handles: ModelHandles) -> None:
    """
    pi_uvi = x_uvi * w_i for binary x, and sum_i pi_uvi = f_uv.

    The upper rows use f_uv; the lower row needs the weight bound w_bar,
    since with x_uvi = 0 it must not cap w_i below w_bar.
    """
    w_bar = network.max_flow
    for e, edge in enumerate(network.edges):
        f = edge.flow
        for i in handles.elements:
            x, w = handles.x[e, i], handles.w[i]
            pi = handles.pi[e, i] = model.add_integer(f"pi_{e}_{i}", 0, f)
            model.le([(1, pi), (-f, x)], 0, f"pi_le_fx_e{e}_i{i}")
            model.le([(1, pi), (-1, w)], 0, f"pi_le_w_e{e}_i{i}")
            model.ge([(1, pi), (-1, w), (-w_bar, x)], -w_bar, f"pi_ge_w_e{e}_i{i}")
        model.eq([(1, handles.pi[e, i]) for i in handles.elements], f, f"superposition_e{e}")


def _add_bit_products(model: MilpModel, network: FlowNetwork, handles: ModelHandles) -> None:
    """
    Superposition for integer x: w_i is expanded into bits zeta_ij and each
    product x_uvi * zeta_ij becomes phi4_uvij, linearized with big-M = f_uv.
    """
    bits = range(network.max_flow.bit_length())
    for i in handles.elements:
        for j in bits:
            handles.zeta[i, j] = model.add_binary(f"zeta_{i}_{j}")
        model.eq(
            [(1, handles.w[i])] + [(-(2**j), handles.zeta[i, j]) for j in bits],
            0,
            f"weight_bits_i{i}",
        )
    for e, edge in enumerate(network.edges):
        f = edge.flow
        for i in handles.elements:
            x = handles.x[e, i]
            for j in bits:
                zeta = handles.zeta[i, j]
                p = handles.phi4[e, i, j] = model.add_integer(f"phi4_{e}_{i}_{j}", 0, f)
                model.le([(1, p), (-f, zeta)], 0, f"phi4_le_fz_e{e}_i{i}_j{j}")
                model.le([(1, p), (-1, x)], 0, f"phi4_le_x_e{e}_i{i}_j{j}")
                model.ge([(1, p), (-1, x), (-f, zeta)], -f, f"phi4_ge_x_e{e}_i{i}_j{j}")
        model.eq(
            [(2**j, handles.phi4[e, i, j]) for i in handles.elements for j in bits],
            f,
            f"superposition_e{e}",
        )


# ── Paths or cycles ───────────────────────────────────────────────────────

def build_fdpc(
    network: FlowNetwork,
    k: int,
    cardinality: Cardinality = Cardinality.AT_MOST_K,
) -> tuple[MilpModel, ModelHandles]:
    """
    Each element is one s-t path or one cycle.

    d_vi in [1, n] are positions along the element; an edge may only step
    back in position when it enters the start-of-cycle node (c_vi = 1).
    At most one of "leaves s" / "has a cycle start" holds per element.
    """
    _check_k(k)
    variant = VariantSpec(problem=ProblemKind.PATHS_OR_CYCLES, cardinality=cardinality)
    model = MilpModel(name=f"{network.name}-fdpc-k{k}")
    handles = ModelHandles(variant=variant, k=k)
    n = network.node_count
    s, t = network.source, network.sink
    out = network.out_edges()

    _declare_core(model, network, handles, binary_x=True)
    # exactness for paths or cycles lives in the path-or-cycle constraint below
    _add_conservation(model, network, handles, weak_source=False, terminals=False)
    for i in handles.elements:
        for v in network.nodes():
            if v not in (s, t) and out[v]:
                model.le([(1, handles.x[e, i]) for e in out[v]], 1, f"one_out_v{v}_i{i}")
    _add_weight_products(model, network, handles)

    for i in handles.elements:
        for v in network.nodes():
            handles.c[v, i] = model.add_binary(f"c_{v}_{i}")
            handles.d[v, i] = model.add_integer(f"d_{v}_{i}", 1, n)
            if v in (s, t):
                model.eq([(1, handles.c[v, i])], 0, f"no_cycle_start_v{v}_i{i}")
            else:
                # a cycle start must lie on the element
                model.le(
                    [(1, handles.c[v, i])] + [(-1, handles.x[e, i]) for e in out[v]],
                    0,
                    f"cycle_start_used_v{v}_i{i}",
                )

    for e, edge in enumerate(network.edges):
        u, v = edge.tail, edge.head
        for i in handles.elements:
            # d_v >= d_u + 1 + (n-1)(x_uvi - 1 - c_vi)
            model.ge(
                [
                    (1, handles.d[v, i]),
                    (-1, handles.d[u, i]),
                    (-(n - 1), handles.x[e, i]),
                    (n - 1, handles.c[v, i]),
                ],
                2 - n,
                f"sequential_e{e}_i{i}",
            )

    for i in handles.elements:
        terms: list[Term] = [(1, handles.x[e, i]) for e in out[s]]
        terms += [(1, handles.c[v, i]) for v in network.nodes()]
        if cardinality is Cardinality.EXACTLY_K:
            model.eq(terms, 1, f"path_or_cycle_i{i}")
        else:
            model.le(terms, 1, f"path_or_cycle_i{i}")

    return model, handles


# ── Trails by constraint generation ───────────────────────────────────────

def build_fdt_cg(
    network: FlowNetwork,
    k: int,
    components: Iterable[SccCertificate] = (),
    cardinality: Cardinality = Cardinality.AT_MOST_K,
) -> tuple[MilpModel, ModelHandles]:
    """
    Trails with binary x and weak conservation, plus, for every component C
    already found violating, "all of E(C) selected implies some escape edge
    selected" for every element (beta_Ci binary, big-M = |C|).
    """
    _check_k(k)
    variant = VariantSpec(problem=ProblemKind.TRAILS_CG, cardinality=cardinality)
    model = MilpModel(name=f"{network.name}-fdt-cg-k{k}")
    handles = ModelHandles(variant=variant, k=k)

    m = network.edge_count
    ordered = sorted(components, key=lambda comp: sorted(comp.component_edges))
    for comp in ordered:
        unknown = [e for e in comp.component_edges | comp.escape_edges if not 0 <= e < m]
        if unknown:
            raise ModelError(f"component references edges {sorted(unknown)} absent from '{network.name}'")
    handles.components = ordered

    _declare_core(model, network, handles, binary_x=True)
    _add_conservation(model, network, handles, weak_source=True)
    _add_weight_products(model, network, handles)

    for idx, comp in enumerate(ordered):
        size = comp.size
        big_m = size
        for i in handles.elements:
            beta = handles.beta[comp.component_edges, i] = model.add_binary(f"beta_{idx}_{i}")
            inside = [(1, handles.x[e, i]) for e in sorted(comp.component_edges)]
            escape = [(1, handles.x[e, i]) for e in sorted(comp.escape_edges)]
            model.ge(inside + [(-big_m, beta)], size - big_m, f"component{idx}_full_i{i}")
            model.le(inside + [(-big_m, beta)], size - 1, f"component{idx}_partial_i{i}")
            model.ge(escape + [(-1, beta)], 0, f"component{idx}_escape_i{i}")

    return model, handles


# ── Trails / walks by reachability ────────────────────────────────────────

def build_walk_reach(
    network: FlowNetwork,
    k: int,
    binary_x: bool,
    cardinality: Cardinality = Cardinality.AT_MOST_K,
) -> tuple[MilpModel, ModelHandles]:
    """
    Every node an element selects must be reachable from s over its own
    selected edges. d_vi in [0, n] is zero exactly on unselected nodes;
    each selected node v != s picks one selected parent edge (y_uvi = 1)
    along which d strictly increases, phi_uvi = y_uvi * (d_vi - d_ui).

    ``binary_x`` gives trails; otherwise x counts edge traversals and the
    weight products go through the power-of-two expansion of w_i.
    """
    _check_k(k)
    problem = ProblemKind.TRAILS_REACH if binary_x else ProblemKind.WALKS
    variant = VariantSpec(problem=problem, cardinality=cardinality)
    model = MilpModel(name=f"{network.name}-{problem.value}-k{k}")
    handles = ModelHandles(variant=variant, k=k)
    n, m = network.node_count, network.edge_count
    s = network.source
    inc = network.in_edges()

    _declare_core(model, network, handles, binary_x=binary_x)
    _add_conservation(model, network, handles, weak_source=True)
    if binary_x:
        _add_weight_products(model, network, handles)
    else:
        _add_bit_products(model, network, handles)

    for i in handles.elements:
        for v in network.nodes():
            handles.d[v, i] = model.add_integer(f"d_{v}_{i}", 0, n)
        model.eq([(1, handles.d[s, i])], 1, f"d_source_i{i}")
        for e in range(m):
            handles.y[e, i] = model.add_binary(f"y_{e}_{i}")
            handles.phi[e, i] = model.add_integer(f"phi_{e}_{i}", -n, n)

    for i in handles.elements:
        for v in network.nodes():
            if v == s:
                continue
            x_in = [(1, handles.x[e, i]) for e in inc[v]]
            y_in = [(1, handles.y[e, i]) for e in inc[v]]
            big_m = m if binary_x else sum(network.edges[e].flow for e in inc[v])
            d = handles.d[v, i]
            model.le([(1, d)] + [(-n, var) for _, var in x_in], 0, f"unselected_d0_v{v}_i{i}")
            model.ge(
                [(1, handles.phi[e, i]) for e in inc[v]] + [(-1, var) for _, var in y_in],
                0,
                f"parent_increase_v{v}_i{i}",
            )
            model.le(x_in + [(-big_m, var) for _, var in y_in], 0, f"selected_has_parent_v{v}_i{i}")
            model.le(y_in, 1, f"one_parent_v{v}_i{i}")

        for e, edge in enumerate(network.edges):
            x, y, phi = handles.x[e, i], handles.y[e, i], handles.phi[e, i]
            d_head, d_tail = handles.d[edge.head, i], handles.d[edge.tail, i]
            model.ge([(1, x), (-1, y)], 0, f"parent_selected_e{e}_i{i}")
            model.le([(1, phi), (-n, y)], 0, f"phi_le_ny_e{e}_i{i}")
            model.ge([(1, phi), (n, y)], 0, f"phi_ge_-ny_e{e}_i{i}")
            model.le([(1, phi), (-1, d_head), (1, d_tail), (n, y)], n, f"phi_le_diff_e{e}_i{i}")
            model.ge([(1, phi), (-1, d_head), (1, d_tail), (-n, y)], -n, f"phi_ge_diff_e{e}_i{i}")

    return model, handles


def model_for(
    network: FlowNetwork,
    k: int,
    variant: VariantSpec,
    components: Iterable[SccCertificate] = (),
) -> tuple[MilpModel, ModelHandles]:
    """Build the model that decides *variant* at *k*."""
    if variant.problem is ProblemKind.PATHS_OR_CYCLES:
        return build_fdpc(network, k, variant.cardinality)
    if variant.problem is ProblemKind.TRAILS_CG:
        return build_fdt_cg(network, k, components, variant.cardinality)
    return build_walk_reach(
        network, k, binary_x=variant.problem is ProblemKind.TRAILS_REACH, cardinality=variant.cardinality
    )


# ── Witness extraction ────────────────────────────────────────────────────

def _trace_path_or_cycle(network: FlowNetwork, selection: EdgeSelection) -> tuple[ElementKind, list[int]]:
    succ: dict[int, int] = {}
    for e in selection.support():
        edge = network.edges[e]
        if edge.tail in succ or selection.get(e) != 1:
            raise ExtractionError(f"element is not a simple path or cycle at node {edge.tail}")
        succ[edge.tail] = edge.head

    s, t = network.source, network.sink
    if s in succ:
        kind, start, stop = ElementKind.PATH, s, t
    else:
        kind, start = ElementKind.CYCLE, min(succ)
        stop = start
    nodes = [start]
    while True:
        nxt = succ.get(nodes[-1])
        if nxt is None:
            raise ExtractionError(f"selected edges stop at node {nodes[-1]}")
        nodes.append(nxt)
        if nxt == stop or len(nodes) > len(succ) + 1:
            break
    if nodes[-1] != stop or len(nodes) - 1 != len(succ):
        raise ExtractionError(f"selected edges do not form a single {kind.value}: {nodes}")
    return kind, nodes


def walk_from_selection(network: FlowNetwork, selection: EdgeSelection) -> list[int]:
    g = nx.MultiDiGraph()
    for e in selection.support():
        edge = network.edges[e]
        g.add_edges_from([(edge.tail, edge.head)] * selection.get(e))
    s = network.source
    if s not in g or not nx.has_eulerian_path(g, source=s):
        raise ExtractionError("selected multigraph has no Eulerian walk from the source")
    return [s] + [v for _, v in nx.eulerian_path(g, source=s)]


def extract_decomposition(assignment: Assignment, handles: ModelHandles, network: FlowNetwork) -> Decomposition:
    """Turn a satisfying assignment into weighted node sequences; empty elements are dropped."""
    elements: list[DecompositionElement] = []
    for i in handles.elements:
        selection = handles.selection(assignment, i)
        if selection.is_empty():
            continue
        if handles.variant.problem is ProblemKind.PATHS_OR_CYCLES:
            kind, nodes = _trace_path_or_cycle(network, selection)
        else:
            kind, nodes = handles.variant.element_kind, walk_from_selection(network, selection)
        elements.append(
            DecompositionElement(
                kind=kind,
                nodes=nodes,
                multiplicity=selection,
                weight=handles.weight(assignment, i),
            )
        )
    return Decomposition(elements=tuple(elements), variant=handles.variant)


# ── Assignment-level checks ───────────────────────────────────────────────

def linearization_violations(assignment: Assignment, handles: ModelHandles, network: FlowNetwork) -> list[str]:
    """Products the linearizations stand for, re-checked on the raw assignment."""
    broken: list[str] = []
    for (e, i), pi in handles.pi.items():
        expected = assignment[handles.x[e, i]] * assignment[handles.w[i]]
        if assignment[pi] != expected:
            broken.append(f"pi_{e}_{i} = {assignment[pi]} != x*w = {expected}")
    if handles.zeta:
        bits = sorted({j for _, j in handles.zeta})
        for i in handles.elements:
            expanded = sum(2**j * assignment[handles.zeta[i, j]] for j in bits)
            if expanded != assignment[handles.w[i]]:
                broken.append(f"w_{i} = {assignment[handles.w[i]]} != bit expansion {expanded}")
        for e, edge in enumerate(network.edges):
            total = sum(2**j * assignment[handles.phi4[e, i, j]] for i in handles.elements for j in bits)
            if total != edge.flow:
                broken.append(f"edge {e}: sum 2^j phi4 = {total} != {edge.flow}")
            for i in handles.elements:
                for j in bits:
                    expected = assignment[handles.x[e, i]] * assignment[handles.zeta[i, j]]
                    if assignment[handles.phi4[e, i, j]] != expected:
                        broken.append(f"phi4_{e}_{i}_{j} != x*zeta")
    elif handles.pi:
        for e, edge in enumerate(network.edges):
            total = sum(assignment[handles.pi[e, i]] for i in handles.elements)
            if total != edge.flow:
                broken.append(f"edge {e}: sum pi = {total} != {edge.flow}")
    return broken


def fdpc_structure_violations(assignment: Assignment, handles: ModelHandles, network: FlowNetwork) -> list[str]:
    """Per element: one selected out-edge per node, and s-edges plus cycle starts at most one."""
    broken: list[str] = []
    s = network.source
    out = network.out_edges()
    for i in handles.elements:
        for v in network.nodes():
            used = sum(assignment[handles.x[e, i]] for e in out[v])
            if used > 1:
                broken.append(f"element {i}: node {v} has {used} selected out-edges")
        starts = sum(assignment[handles.x[e, i]] for e in out[s])
        starts += sum(assignment[handles.c[v, i]] for v in network.nodes())
        if starts > 1:
            broken.append(f"element {i}: {starts} path starts / cycle starts")
    return broken
