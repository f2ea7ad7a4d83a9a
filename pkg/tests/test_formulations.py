import pytest

from errors import ExtractionError, ModelError
from formulations import (
    build_fdpc,
    build_fdt_cg,
    build_walk_reach,
    extract_decomposition,
    fdpc_structure_violations,
    linearization_violations,
    model_for,
    walk_from_selection,
)
from graph import violating_components
from milp.base import SolveStatus
from milp.feasibility import solve_feasibility
from milp.model import Assignment
from models import (
    Cardinality,
    EdgeSelection,
    ElementKind,
    ProblemKind,
    VariantSpec,
)


def cycle_certificate(network):
    [cert] = violating_components(network, EdgeSelection(multiplicity={1: 1, 2: 1, 3: 1}))
    return cert


# ── Model shape ───────────────────────────────────────────────────────────

def test_fdpc_variable_and_constraint_counts(fig2):
    model, handles = build_fdpc(fig2, 2)
    # x, pi, c, d per (edge or node, element) and one weight per element
    assert len(handles.x) == len(handles.pi) == 10
    assert len(handles.c) == len(handles.d) == 10
    assert len(handles.w) == 2
    assert len(model.variables) == 42
    assert len(model.constraints) == 69


def test_fdpc_pins_cycle_start_at_terminals(fig2):
    model, _ = build_fdpc(fig2, 1)
    tags = {c.tag for c in model.constraints}
    assert {"no_cycle_start_v0_i1", "no_cycle_start_v4_i1"} <= tags
    assert "no_cycle_start_v1_i1" not in tags
    assert "cycle_start_used_v1_i1" in tags


def test_fdt_cg_counts_grow_by_one_component(fig2):
    model, handles = build_fdt_cg(fig2, 1)
    assert (len(model.variables), len(model.constraints)) == (11, 24)

    model, handles = build_fdt_cg(fig2, 1, [cycle_certificate(fig2)])
    assert (len(model.variables), len(model.constraints)) == (12, 27)
    assert list(handles.beta) == [(frozenset({1, 2, 3}), 1)]


def test_fdt_cg_rejects_components_from_other_networks(fig2):
    cert = cycle_certificate(fig2).model_copy(update={"escape_edges": frozenset({4, 17})})
    with pytest.raises(ModelError, match="17"):
        build_fdt_cg(fig2, 1, [cert])


def test_walk_reach_counts_binary_and_integer(fig2):
    model, handles = build_walk_reach(fig2, 1, binary_x=True)
    assert (len(model.variables), len(model.constraints)) == (26, 66)
    assert not handles.zeta

    model, handles = build_walk_reach(fig2, 1, binary_x=False)
    # max flow 2 expands into bits 2^0 and 2^1
    assert sorted(handles.zeta) == [(1, 0), (1, 1)]
    assert len(handles.phi4) == 10
    assert not handles.pi
    assert (len(model.variables), len(model.constraints)) == (33, 82)


def test_integer_walk_edge_uses_are_bounded_by_flow(fig2):
    _, handles = build_walk_reach(fig2, 2, binary_x=False)
    assert {handles.x[e, 1].ub for e in range(fig2.edge_count)} == {1, 2}


@pytest.mark.parametrize("k", [0, -3])
def test_non_positive_k_is_rejected(fig2, k):
    with pytest.raises(ModelError):
        build_fdpc(fig2, k)
    with pytest.raises(ModelError):
        build_walk_reach(fig2, k, binary_x=True)


def test_exact_cardinality_forces_every_element_to_be_used(fig2):
    model, _ = build_walk_reach(fig2, 2, binary_x=False, cardinality=Cardinality.EXACTLY_K)
    tags = {c.tag for c in model.constraints}
    assert {"source_i1", "sink_i1", "source_i2", "sink_i2"} <= tags

    model, _ = build_fdpc(fig2, 2, Cardinality.EXACTLY_K)
    assert not any(c.tag.startswith(("source_i", "sink_i")) for c in model.constraints)


def test_model_for_dispatches_on_problem(fig2):
    for code, problem in [
        ("pc", ProblemKind.PATHS_OR_CYCLES),
        ("trail-cg", ProblemKind.TRAILS_CG),
        ("trail-reach", ProblemKind.TRAILS_REACH),
        ("walk", ProblemKind.WALKS),
    ]:
        _, handles = model_for(fig2, 2, VariantSpec.from_cli(code))
        assert handles.variant.problem is problem


# ── Extraction from hand-made assignments ─────────────────────────────────

def _assignment(handles, x_values, weights, **extra):
    values = {var.index: 0 for family in (handles.x, handles.pi, handles.c, handles.d) for var in family.values()}
    for (e, i), v in x_values.items():
        values[handles.x[e, i].index] = v
    for i, w in weights.items():
        values[handles.w[i].index] = w
    for (e, i), var in handles.pi.items():
        values[var.index] = values[handles.x[e, i].index] * weights.get(i, 1)
    for var, v in extra.items():
        values[var] = v
    return Assignment(values)


def test_extract_path_and_cycle(fig2):
    _, handles = build_fdpc(fig2, 3)
    x = {(0, 1): 1, (4, 1): 1, (1, 2): 1, (2, 2): 1, (3, 2): 1}
    assignment = _assignment(handles, x, {1: 1, 2: 2, 3: 1})
    decomposition = extract_decomposition(assignment, handles, fig2)

    assert decomposition.size == 2
    path, cycle = decomposition.elements
    assert (path.kind, path.nodes, path.weight) == (ElementKind.PATH, [0, 1, 4], 1)
    assert (cycle.kind, cycle.nodes, cycle.weight) == (ElementKind.CYCLE, [1, 2, 3, 1], 2)
    assert linearization_violations(assignment, handles, fig2) == []
    assert fdpc_structure_violations(assignment, handles, fig2) == []


def test_extract_rejects_two_out_edges_in_paths_or_cycles(fig2):
    _, handles = build_fdpc(fig2, 1)
    x = {(e, 1): 1 for e in range(5)}
    assignment = _assignment(handles, x, {1: 1})
    with pytest.raises(ExtractionError):
        extract_decomposition(assignment, handles, fig2)
    assert fdpc_structure_violations(assignment, handles, fig2) == ["element 1: node 1 has 2 selected out-edges"]


def test_linearization_check_catches_wrong_products(fig2):
    _, handles = build_fdt_cg(fig2, 1)
    assignment = _assignment(handles, {(0, 1): 1, (4, 1): 1}, {1: 1})
    broken = dict(assignment.values)
    broken[handles.pi[0, 1].index] = 0
    problems = linearization_violations(Assignment(broken), handles, fig2)
    assert "pi_0_1 = 0 != x*w = 1" in problems


def test_walk_from_selection_orders_repeated_edges(fig2):
    selection = EdgeSelection(multiplicity={0: 1, 1: 2, 2: 2, 3: 2, 4: 1})
    assert walk_from_selection(fig2, selection) == [0, 1, 2, 3, 1, 2, 3, 1, 4]


def test_walk_from_selection_rejects_detached_cycles(fig2):
    with pytest.raises(ExtractionError):
        walk_from_selection(fig2, EdgeSelection(multiplicity={1: 1, 2: 1, 3: 1}))


# ── Solved models ─────────────────────────────────────────────────────────

@pytest.mark.parametrize(
    ("code", "k", "expected"),
    [
        ("pc", 1, SolveStatus.INFEASIBLE),
        ("pc", 2, SolveStatus.FEASIBLE),
        ("trail-reach", 5, SolveStatus.INFEASIBLE),
        ("walk", 1, SolveStatus.FEASIBLE),
    ],
)
def test_fig2_fixed_k_verdicts(fig2, code, k, expected):
    pytest.importorskip("ortools")
    model, _ = model_for(fig2, k, VariantSpec.from_cli(code))
    assert solve_feasibility(model, time_limit=30).status is expected


def test_integer_walk_witness_satisfies_bit_identities(fig2):
    pytest.importorskip("ortools")
    model, handles = build_walk_reach(fig2, 1, binary_x=False)
    result = solve_feasibility(model, time_limit=30)
    assert result.status is SolveStatus.FEASIBLE
    assert linearization_violations(result.assignment, handles, fig2) == []

    [walk] = extract_decomposition(result.assignment, handles, fig2).elements
    assert walk.kind is ElementKind.WALK
    assert walk.weight == 1
    assert walk.nodes == [0, 1, 2, 3, 1, 2, 3, 1, 4]


def test_relaxed_trails_admit_a_detached_cycle(fig2):
    pytest.importorskip("ortools")
    model, handles = build_fdt_cg(fig2, 2)
    result = solve_feasibility(model, time_limit=30)
    assert result.status is SolveStatus.FEASIBLE
    found = [
        cert
        for i in handles.elements
        for cert in violating_components(fig2, handles.selection(result.assignment, i))
    ]
    assert [cert.component_nodes for cert in found] == [frozenset({1, 2, 3})]


# ── Hand witnesses against the full paths-or-cycles model ─────────────────

def _fdpc_values(handles, x_values, weights, cycle_starts=(), positions=None):
    """Complete assignment: unlisted x and c are 0, unlisted d are 1."""
    positions = positions or {}
    values = {}
    for (e, i), var in handles.x.items():
        values[var.index] = x_values.get((e, i), 0)
    for i, var in handles.w.items():
        values[var.index] = weights[i]
    for (e, i), var in handles.pi.items():
        values[var.index] = values[handles.x[e, i].index] * weights[i]
    for (v, i), var in handles.c.items():
        values[var.index] = 1 if (v, i) in cycle_starts else 0
    for (v, i), var in handles.d.items():
        values[var.index] = positions.get((v, i), 1)
    return Assignment(values)


def test_heavy_cycle_next_to_light_path_satisfies_fdpc(fig2):
    model, handles = build_fdpc(fig2, 2)
    assignment = _fdpc_values(
        handles,
        {(0, 1): 1, (4, 1): 1, (1, 2): 1, (2, 2): 1, (3, 2): 1},
        {1: 1, 2: 2},
        cycle_starts={(1, 2)},
        positions={(0, 1): 1, (1, 1): 2, (4, 1): 3, (1, 2): 1, (2, 2): 2, (3, 2): 3},
    )
    assert model.violations(assignment) == []
    assert extract_decomposition(assignment, handles, fig2).size == 2


def test_exactly_k_cycle_start_must_lie_on_the_element(chain):
    model, handles = build_fdpc(chain, 2, Cardinality.EXACTLY_K)
    assignment = _fdpc_values(
        handles,
        {(0, 1): 1, (1, 1): 1},
        {1: 1, 2: 1},
        cycle_starts={(1, 2)},
        positions={(0, 1): 1, (1, 1): 2, (2, 1): 3},
    )
    assert model.violations(assignment) == ["cycle_start_used_v1_i2: 1 <= 0 fails"]
