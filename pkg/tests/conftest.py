"""
Shared fixtures.

Puts the flat ``mfd/`` modules on sys.path the same way ``mfd_cli.py``
does, and loads the sample networks from ``data/``.
"""

import os
import sys
from pathlib import Path

import pytest

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, os.path.join(str(ROOT), "mfd"))

from graph import parse_graph_file  # noqa: E402
from models import Edge, FlowNetwork  # noqa: E402

DATA_DIR = ROOT / "data"


def load_network(filename: str) -> FlowNetwork:
    return parse_graph_file((DATA_DIR / filename).read_text(encoding="utf-8"))[0]


@pytest.fixture
def fig2() -> FlowNetwork:
    """s=0, a=1, d=2, c=3, t=4: path s-a-t of flow 1 crossing the cycle a-d-c of flow 2."""
    return load_network("fig2.graph")


@pytest.fixture
def variant_ordering() -> FlowNetwork:
    """Minimum sizes 4 / 3 / 2 for paths-or-cycles / trails / walks."""
    return load_network("variant_ordering.graph")


@pytest.fixture
def five_paths() -> FlowNetwork:
    """Five disjoint s-v-t paths with distinct flows; every variant needs k = 5."""
    return load_network("five_paths.graph")


@pytest.fixture
def single_edge() -> FlowNetwork:
    return FlowNetwork(name="single-edge", node_count=2, edges=(Edge(tail=0, head=1, flow=5),))


@pytest.fixture
def chain() -> FlowNetwork:
    """s=0 -> a=1 -> t=2 carrying one unit."""
    return FlowNetwork(
        name="chain",
        node_count=3,
        edges=(Edge(tail=0, head=1, flow=1), Edge(tail=1, head=2, flow=1)),
    )
