from collections import Counter, deque

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from errors import GraphSyntaxError, NetworkValidationError, NotAPseudoFlowError
from graph import (
    check_walk_connectivity,
    generate_instance,
    parse_graph_file,
    selection_from_nodes,
    serialize_graphs,
    split_instance_blocks,
    strongly_connected_components,
    validate,
    violating_components,
)
from models import CertificateVerdict, Edge, EdgeSelection, ElementKind, FlowNetwork, VariantSpec
from verify import verify_decomposition

FIG2_TEXT = "# fig2\n5\n0 1 1\n1 2 2\n2 3 2\n3 1 2\n1 4 1\n"


def network(n, *edges, name="t"):
    return FlowNetwork(name=name, node_count=n, edges=tuple(Edge(tail=u, head=v, flow=f) for u, v, f in edges))


# ── Parsing ───────────────────────────────────────────────────────────────

def test_parse_fig2(fig2):
    assert fig2.name == "fig2"
    assert fig2.node_count == 5
    assert fig2.edge_count == 5
    assert (fig2.source, fig2.sink) == (0, 4)
    assert fig2.edges[3] == Edge(tail=3, head=1, flow=2)


def test_parse_multiple_instances_and_serialize_back():
    text = FIG2_TEXT + "\n# two\n2\n0 1 3\n"
    nets = parse_graph_file(text)
    assert [n.name for n in nets] == ["fig2", "two"]
    assert serialize_graphs(nets) == FIG2_TEXT + "# two\n2\n0 1 3\n"


def test_split_blocks_reports_first_line_numbers():
    blocks = split_instance_blocks(FIG2_TEXT + "# two\n2\n0 1 3\n")
    assert [first for first, _ in blocks] == [1, 8]
    assert blocks[1][1] == ["# two", "2", "0 1 3"]


def test_syntax_error_carries_line_and_column():
    with pytest.raises(GraphSyntaxError) as exc_info:
        parse_graph_file("# bad\n3\n0 1 1\n1 x 1\n")
    assert exc_info.value.line == 4
    assert exc_info.value.column == 3


def test_missing_header_is_a_syntax_error():
    with pytest.raises(GraphSyntaxError):
        parse_graph_file("3\n0 1 1\n")


def test_wrong_token_count_is_a_syntax_error():
    with pytest.raises(GraphSyntaxError) as exc_info:
        parse_graph_file("# bad\n2\n0 1\n")
    assert exc_info.value.line == 3


def test_invalid_network_raises_with_violations():
    with pytest.raises(NetworkValidationError) as exc_info:
        parse_graph_file("# bad\n3\n0 1 2\n1 2 1\n")
    assert any("conservation violated at node 1" in v for v in exc_info.value.violations)


# ── Validation ────────────────────────────────────────────────────────────

def test_valid_network_has_no_violations(fig2):
    assert validate(fig2) == []


@pytest.mark.parametrize(
    ("net", "fragment"),
    [
        (network(3, (0, 1, 1), (1, 1, 1), (1, 2, 1)), "self-loop"),
        (network(3, (0, 1, 1), (0, 1, 1), (1, 2, 2)), "duplicate edge"),
        (network(2, (0, 1, 0)), "flow 0 < 1"),
        (network(3, (0, 2, 1), (1, 2, 1)), "source not unique"),
        (network(3, (0, 1, 2), (0, 2, 1), (1, 2, 1)), "conservation violated"),
        (network(3, (0, 5, 1)), "outside [0, 3)"),
        (network(5, (0, 1, 1), (2, 3, 1), (3, 2, 1), (1, 4, 1)), "not weakly connected"),
    ],
)
def test_validation_reports_each_broken_invariant(net, fragment):
    assert any(fragment in v for v in validate(net))


def test_no_source_when_every_node_has_in_edges():
    net = network(2, (0, 1, 1), (1, 0, 1))
    problems = validate(net)
    assert any("no source" in p for p in problems)
    assert any("no sink" in p for p in problems)


# ── Strong connectivity ───────────────────────────────────────────────────

def test_scc_partition_is_sorted_by_smallest_member(fig2):
    comps = strongly_connected_components(fig2.nodes(), [(e.tail, e.head) for e in fig2.edges])
    assert comps == [frozenset({0}), frozenset({1, 2, 3}), frozenset({4})]


def _reachable(start, pairs):
    succ = {}
    for u, v in pairs:
        succ.setdefault(u, []).append(v)
    seen, queue = {start}, deque([start])
    while queue:
        for v in succ.get(queue.popleft(), []):
            if v not in seen:
                seen.add(v)
                queue.append(v)
    return seen


@settings(max_examples=80, deadline=None)
@given(
    n=st.integers(min_value=1, max_value=8),
    raw=st.lists(st.tuples(st.integers(0, 7), st.integers(0, 7)), max_size=20),
)
def test_scc_output_is_a_partition_of_mutually_reachable_parts(n, raw):
    pairs = [(u, v) for u, v in raw if u < n and v < n]
    comps = strongly_connected_components(range(n), pairs)
    assert sorted(v for comp in comps for v in comp) == list(range(n))
    reach = {v: _reachable(v, pairs) for v in range(n)}
    for comp in comps:
        for u in comp:
            assert comp <= reach[u]
            # nothing outside the part reaches back
            assert all(u not in reach[w] for w in reach[u] - comp)


def test_isolated_cycle_is_a_violating_component(fig2):
    cycle = EdgeSelection(multiplicity={1: 1, 2: 1, 3: 1})
    [cert] = violating_components(fig2, cycle)
    assert cert.verdict is CertificateVerdict.VIOLATING_COMPONENT
    assert cert.component_nodes == {1, 2, 3}
    assert cert.component_edges == {1, 2, 3}
    assert cert.escape_edges == {4}
    assert cert.size == 3


def test_path_and_trail_selections_are_ok(fig2):
    assert check_walk_connectivity(fig2, EdgeSelection(multiplicity={0: 1, 4: 1})).ok
    assert check_walk_connectivity(fig2, EdgeSelection(multiplicity={0: 1, 1: 1, 2: 1, 3: 1, 4: 1})).ok


def test_walk_multiplicities_are_ok(fig2):
    walk = selection_from_nodes(fig2, [0, 1, 2, 3, 1, 2, 3, 1, 4])
    assert walk.multiplicity == {0: 1, 1: 2, 2: 2, 3: 2, 4: 1}
    assert violating_components(fig2, walk) == []


def test_empty_selection_is_ok(fig2):
    assert check_walk_connectivity(fig2, EdgeSelection()).ok


def test_unbalanced_selection_is_not_a_pseudo_flow(fig2):
    with pytest.raises(NotAPseudoFlowError, match="node 1"):
        violating_components(fig2, EdgeSelection(multiplicity={0: 1}))


def test_unknown_edge_id_is_not_a_pseudo_flow(fig2):
    with pytest.raises(NotAPseudoFlowError, match="unknown edge id 9"):
        violating_components(fig2, EdgeSelection(multiplicity={9: 1}))


def test_selection_from_nodes_rejects_missing_edges(fig2):
    with pytest.raises(KeyError):
        selection_from_nodes(fig2, [0, 2])


# ── Generator ─────────────────────────────────────────────────────────────

def test_generator_is_deterministic():
    variant = VariantSpec.from_cli("walk")
    first = generate_instance(8, 3, variant, seed=11)
    second = generate_instance(8, 3, variant, seed=11)
    assert first.network == second.network
    assert first.network.name == "gen-walk-n8-k3-s11"


def test_generator_respects_max_weight():
    inst = generate_instance(6, 2, VariantSpec.from_cli("pc"), seed=3, max_weight=1)
    assert all(el.weight == 1 for el in inst.decomposition.elements)


def test_generator_rejects_tiny_sizes():
    with pytest.raises(ValueError):
        generate_instance(1, 1, VariantSpec.from_cli("pc"), seed=0)
    with pytest.raises(ValueError):
        generate_instance(4, 0, VariantSpec.from_cli("pc"), seed=0)


@settings(max_examples=60, deadline=None)
@given(
    code=st.sampled_from(["pc", "trail-cg", "trail-reach", "walk"]),
    nodes=st.integers(min_value=2, max_value=12),
    elements=st.integers(min_value=1, max_value=5),
    seed=st.integers(min_value=0, max_value=10_000),
)
def test_generated_instances_are_valid_with_a_verifying_decomposition(code, nodes, elements, seed):
    variant = VariantSpec.from_cli(code)
    inst = generate_instance(nodes, elements, variant, seed)
    assert validate(inst.network) == []
    assert (inst.network.source, inst.network.sink) == (0, nodes - 1)
    assert inst.decomposition.size == elements
    assert verify_decomposition(inst.network, inst.decomposition, variant) == []
    expected = {ElementKind.PATH, ElementKind.CYCLE} if code == "pc" else {variant.element_kind}
    assert {el.kind for el in inst.decomposition.elements} <= expected


def _split_off_circuit(nodes):
    """(rest, circuit): the first closed stretch of *nodes* cut out, or (nodes, None)."""
    first_seen = {}
    for pos, v in enumerate(nodes):
        if v in first_seen:
            start = first_seen[v]
            return nodes[:start] + nodes[pos:], nodes[start : pos + 1]
        first_seen[v] = pos
    return nodes, None


@settings(max_examples=60, deadline=None)
@given(
    code=st.sampled_from(["pc", "trail-cg", "walk"]),
    nodes=st.integers(min_value=3, max_value=12),
    elements=st.integers(min_value=1, max_value=4),
    seed=st.integers(min_value=0, max_value=10_000),
    data=st.data(),
)
def test_connectivity_ok_iff_every_touched_node_is_reachable(code, nodes, elements, seed, data):
    inst = generate_instance(nodes, elements, VariantSpec.from_cli(code), seed)
    net = inst.network
    walks, circuits = [], []
    for el in inst.decomposition.elements:
        rest, circuit = _split_off_circuit(el.nodes)
        walks.append(rest)
        if circuit is not None:
            circuits.append(circuit)

    # at most one unit may leave s, circulations can be added freely
    pieces = []
    walk = data.draw(st.sampled_from([None, *walks]))
    if walk is not None:
        pieces.append(walk)
    if circuits:
        pieces += data.draw(st.lists(st.sampled_from(circuits), max_size=3))

    total: Counter[int] = Counter()
    for seq in pieces:
        total.update(selection_from_nodes(net, seq).multiplicity)
    selection = EdgeSelection(multiplicity=dict(total))

    pairs = [(net.edges[e].tail, net.edges[e].head) for e in selection.support()]
    touched = {v for pair in pairs for v in pair}
    cert = check_walk_connectivity(net, selection)
    assert cert.ok == (touched <= _reachable(net.source, pairs))
