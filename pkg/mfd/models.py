"""
Pydantic data models for flow networks, decompositions and search results.

These models are the contract between the graph layer, the formulations,
the search driver and the CLI, so every layer serializes the same way
regardless of which solver backend produced a witness.
"""

from __future__ import annotations

from enum import Enum
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, NonNegativeInt


# ---------------------------------------------------------------------------
# Enums
# ---------------------------------------------------------------------------

class ProblemKind(str, Enum):
    PATHS_OR_CYCLES = "paths_or_cycles"
    TRAILS_CG = "trails_cg"
    TRAILS_REACH = "trails_reach"
    WALKS = "walks"


class Cardinality(str, Enum):
    AT_MOST_K = "at_most_k"
    EXACTLY_K = "exactly_k"


class ElementKind(str, Enum):
    PATH = "path"
    CYCLE = "cycle"
    TRAIL = "trail"
    WALK = "walk"


class CertificateVerdict(str, Enum):
    OK = "ok"
    VIOLATING_COMPONENT = "violating_component"


class ProbeVerdict(str, Enum):
    FEASIBLE = "feasible"
    INFEASIBLE = "infeasible"
    BUDGET_EXCEEDED = "budget_exceeded"


class Strategy(str, Enum):
    LINEAR = "linear"
    DOUBLING = "doubling"


class SearchOutcome(str, Enum):
    FOUND = "found"
    INFEASIBLE_UP_TO_M = "infeasible_up_to_m"
    BUDGET_EXCEEDED = "budget_exceeded"


# CLI spelling of each problem variant.
_CLI_CODES = {
    "pc": ProblemKind.PATHS_OR_CYCLES,
    "trail-cg": ProblemKind.TRAILS_CG,
    "trail-reach": ProblemKind.TRAILS_REACH,
    "walk": ProblemKind.WALKS,
}


# ---------------------------------------------------------------------------
# Flow networks
# ---------------------------------------------------------------------------

class Edge(BaseModel):
    """One directed edge ``tail -> head`` carrying ``flow`` units."""
    model_config = ConfigDict(frozen=True)

    tail: int
    head: int
    flow: int


class FlowNetwork(BaseModel):
    """
    Directed graph on nodes ``0..node_count-1`` with an integer flow per edge.

    Edge ids are positions in ``edges``. Source and sink are not stored:
    they are the nodes of in-degree 0 and out-degree 0 respectively, and
    ``graph.validate`` checks they are unique.
    """
    model_config = ConfigDict(frozen=True)

    name: str = ""
    node_count: int = Field(ge=1)
    edges: tuple[Edge, ...] = ()

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    @property
    def max_flow(self) -> int:
        return max((e.flow for e in self.edges), default=0)

    def nodes(self) -> range:
        return range(self.node_count)

    def out_edges(self) -> dict[int, list[int]]:
        """Edge ids leaving each node."""
        out: dict[int, list[int]] = {v: [] for v in self.nodes()}
        for idx, e in enumerate(self.edges):
            out.setdefault(e.tail, []).append(idx)
        return out

    def in_edges(self) -> dict[int, list[int]]:
        """Edge ids entering each node."""
        inc: dict[int, list[int]] = {v: [] for v in self.nodes()}
        for idx, e in enumerate(self.edges):
            inc.setdefault(e.head, []).append(idx)
        return inc

    def edge_index(self) -> dict[tuple[int, int], int]:
        return {(e.tail, e.head): idx for idx, e in enumerate(self.edges)}

    def sources(self) -> list[int]:
        heads = {e.head for e in self.edges}
        return [v for v in self.nodes() if v not in heads]

    def sinks(self) -> list[int]:
        tails = {e.tail for e in self.edges}
        return [v for v in self.nodes() if v not in tails]

    @property
    def source(self) -> int:
        found = self.sources()
        if len(found) != 1:
            raise ValueError(f"network '{self.name}' has no unique source: {found}")
        return found[0]

    @property
    def sink(self) -> int:
        found = self.sinks()
        if len(found) != 1:
            raise ValueError(f"network '{self.name}' has no unique sink: {found}")
        return found[0]


class EdgeSelection(BaseModel):
    """How many times each edge id is used; absent ids count as zero."""

    multiplicity: dict[int, NonNegativeInt] = Field(default_factory=dict)

    def get(self, edge_id: int) -> int:
        return self.multiplicity.get(edge_id, 0)

    def support(self) -> list[int]:
        return sorted(e for e, count in self.multiplicity.items() if count > 0)

    def is_empty(self) -> bool:
        return not self.support()


class SccCertificate(BaseModel):
    """
    Outcome of the connectivity check on one element's selected edges.

    For a violating component C: ``component_edges`` is E(C), the selected
    edges inside C, and ``escape_edges`` is every network edge leaving a
    node of C that is not in E(C).
    """
    model_config = ConfigDict(frozen=True)

    verdict: CertificateVerdict
    component_nodes: frozenset[int] = frozenset()
    component_edges: frozenset[int] = frozenset()
    escape_edges: frozenset[int] = frozenset()

    @property
    def ok(self) -> bool:
        return self.verdict is CertificateVerdict.OK

    @property
    def size(self) -> int:
        """|C|, counted in edges."""
        return len(self.component_edges)


# ---------------------------------------------------------------------------
# Problem variants and decompositions
# ---------------------------------------------------------------------------

class VariantSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    problem: ProblemKind
    cardinality: Cardinality = Cardinality.AT_MOST_K

    @classmethod
    def from_cli(cls, code: str, exactly_k: bool = False) -> "VariantSpec":
        try:
            problem = _CLI_CODES[code]
        except KeyError:
            raise ValueError(
                f"Unknown variant '{code}'.  Supported values: {', '.join(_CLI_CODES)}."
            ) from None
        cardinality = Cardinality.EXACTLY_K if exactly_k else Cardinality.AT_MOST_K
        return cls(problem=problem, cardinality=cardinality)

    @property
    def cli_code(self) -> str:
        return next(code for code, problem in _CLI_CODES.items() if problem is self.problem)

    @property
    def is_trails(self) -> bool:
        return self.problem in (ProblemKind.TRAILS_CG, ProblemKind.TRAILS_REACH)

    @property
    def element_kind(self) -> ElementKind:
        """Kind reported for elements of walk-like variants."""
        if self.problem is ProblemKind.WALKS:
            return ElementKind.WALK
        if self.is_trails:
            return ElementKind.TRAIL
        return ElementKind.PATH


class DecompositionElement(BaseModel):
    kind: ElementKind
    nodes: list[int]
    multiplicity: EdgeSelection
    weight: int


class Decomposition(BaseModel):
    model_config = ConfigDict(frozen=True)

    elements: tuple[DecompositionElement, ...] = ()
    variant: VariantSpec

    @property
    def size(self) -> int:
        return len(self.elements)

    @property
    def path_count(self) -> int:
        return sum(1 for el in self.elements if el.kind is ElementKind.PATH)

    @property
    def cycle_count(self) -> int:
        return sum(1 for el in self.elements if el.kind is ElementKind.CYCLE)


class GeneratedInstance(BaseModel):
    """A synthetic network together with the decomposition it was built from."""
    network: FlowNetwork
    decomposition: Decomposition


# ---------------------------------------------------------------------------
# Search results
# ---------------------------------------------------------------------------

class Probe(BaseModel):
    """One fixed-k feasibility check made during a search."""
    k: int
    verdict: ProbeVerdict
    seconds: float
    cg_iterations: int = 0
    components_added: int = 0


class SearchReport(BaseModel):
    variant: VariantSpec
    strategy: Strategy
    upper_bound: int
    probes: list[Probe] = Field(default_factory=list)
    outcome: SearchOutcome = SearchOutcome.BUDGET_EXCEEDED
    k_star: Optional[int] = None
    decomposition: Optional[Decomposition] = None
    total_seconds: float = 0.0

    @property
    def probed_ks(self) -> list[int]:
        return [p.k for p in self.probes]

    @property
    def cg_iterations(self) -> list[int]:
        """Components added per probe, in probe order."""
        return [p.components_added for p in self.probes]


# ---------------------------------------------------------------------------
# CLI JSON records (schema 1)
# ---------------------------------------------------------------------------

SCHEMA_VERSION = 1


class ElementRecord(BaseModel):
    kind: ElementKind
    nodes: list[int]
    weight: int


class InstanceResult(BaseModel):
    """What ``decompose`` writes per instance; ``verify`` reads it back."""
    model_config = ConfigDict(populate_by_name=True)

    schema_version: int = Field(SCHEMA_VERSION, alias="schema")
    instance: str
    variant: str
    k_star: Optional[int | Literal["infeasible"]] = None
    elements: list[ElementRecord] = Field(default_factory=list)
    probes: list[Probe] = Field(default_factory=list)
    cg_iterations: int = 0
    total_seconds: float = 0.0
    error: Optional[str] = None


class ResultFile(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    schema_version: int = Field(SCHEMA_VERSION, alias="schema")
    results: list[InstanceResult] = Field(default_factory=list)
