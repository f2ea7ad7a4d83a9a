"""
Corpus checks of the integer programs against the exhaustive oracle.

Run with ``pytest -m slow``; each takes minutes.
"""

import itertools

import pytest

import config
from graph import generate_instance
from models import SearchOutcome, Strategy, VariantSpec
from search import min_k
from verify import OracleStatus, brute_force_min

pytest.importorskip("ortools")

pytestmark = pytest.mark.slow

PC = VariantSpec.from_cli("pc")
TRAIL_CG = VariantSpec.from_cli("trail-cg")
TRAIL_REACH = VariantSpec.from_cli("trail-reach")
WALK = VariantSpec.from_cli("walk")

CORPUS_SIZE = 200


def _within_oracle_limits(network):
    return (
        network.node_count <= config.ORACLE_MAX_NODES
        and network.edge_count <= config.ORACLE_MAX_EDGES
        and network.max_flow <= config.ORACLE_MAX_FLOW
    )


def _small_corpus():
    corpus = []
    codes = itertools.cycle(["pc", "trail-cg", "walk"])
    for seed in itertools.count():
        if len(corpus) == CORPUS_SIZE:
            return corpus
        code = next(codes)
        nodes = 3 + seed % 4
        elements = 1 + seed % 3
        inst = generate_instance(nodes, elements, VariantSpec.from_cli(code), seed, max_weight=3)
        if _within_oracle_limits(inst.network):
            corpus.append(inst.network)


@pytest.fixture(scope="module")
def corpus():
    return _small_corpus()


def _ilp_k(network, variant, strategy=Strategy.DOUBLING):
    report = min_k(network, variant, strategy)
    return report.k_star if report.outcome is SearchOutcome.FOUND else None


def _oracle_k(network, variant):
    result = brute_force_min(network, variant)
    assert result.status is not OracleStatus.TOO_LARGE
    return result.k_star


def test_ilp_matches_oracle(corpus):
    mismatches = []
    for network in corpus:
        for variant in (PC, TRAIL_CG, WALK):
            ilp, oracle = _ilp_k(network, variant), _oracle_k(network, variant)
            if ilp != oracle:
                mismatches.append((network.name, variant.cli_code, ilp, oracle))
    assert mismatches == []


def test_trail_encodings_and_strategies_agree(corpus):
    mismatches = []
    for network in corpus:
        cg = _ilp_k(network, TRAIL_CG)
        reach = _ilp_k(network, TRAIL_REACH)
        linear = _ilp_k(network, TRAIL_CG, Strategy.LINEAR)
        if not cg == reach == linear:
            mismatches.append((network.name, cg, reach, linear))
    assert mismatches == []


def test_walks_never_need_more_elements_than_trails(corpus):
    for network in corpus:
        trails = _ilp_k(network, TRAIL_REACH)
        if trails is not None:
            assert _ilp_k(network, WALK) <= trails


@pytest.mark.parametrize("seed", range(50))
def test_trail_encodings_agree_on_larger_instances(seed):
    code = ("pc", "trail-cg", "walk")[seed % 3]
    inst = generate_instance(8 + seed % 8, 2 + seed % 4, VariantSpec.from_cli(code), seed)
    assert inst.network.node_count <= 15
    assert _ilp_k(inst.network, TRAIL_CG) == _ilp_k(inst.network, TRAIL_REACH)


@pytest.mark.parametrize("variant", [PC, WALK], ids=["pc", "walk"])
def test_linear_and_doubling_agree(corpus, variant):
    mismatches = []
    for network in corpus:
        doubling = _ilp_k(network, variant)
        linear = _ilp_k(network, variant, Strategy.LINEAR)
        if doubling != linear:
            mismatches.append((network.name, doubling, linear))
    assert mismatches == []
