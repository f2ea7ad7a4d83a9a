"""
Minimization over k and the fixed-k solve, including constraint generation
for the relaxed trail model.
"""

from __future__ import annotations

import logging
import os
import time
from dataclasses import dataclass, field
from typing import Optional

import config
from errors import BackendError, BudgetExceededError, IterationCapError, SoundnessError
from formulations import (
    ModelHandles,
    extract_decomposition,
    fdpc_structure_violations,
    linearization_violations,
    model_for,
)
from graph import violating_components
from milp.base import SolveStatus
from milp.feasibility import solve_feasibility
from milp.lp_format import to_lp
from milp.model import Assignment, MilpModel
from models import (
    Decomposition,
    FlowNetwork,
    Probe,
    ProbeVerdict,
    ProblemKind,
    SccCertificate,
    SearchOutcome,
    SearchReport,
    Strategy,
    VariantSpec,
)
from verify import verify_decomposition

logger = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# Wall-clock budget
# ---------------------------------------------------------------------------

class Budget:
    """Per-probe and total wall-clock limits of one search, in seconds."""

    def __init__(self, probe_timeout: Optional[float] = None, total_timeout: Optional[float] = None) -> None:
        self.probe_timeout = config.PROBE_TIMEOUT if probe_timeout is None else probe_timeout
        self.total_timeout = config.TOTAL_TIMEOUT if total_timeout is None else total_timeout
        self._started = time.monotonic()
        self._probe_started = self._started

    def start_probe(self) -> None:
        self._probe_started = time.monotonic()

    def remaining(self) -> float:
        now = time.monotonic()
        probe_left = self.probe_timeout - (now - self._probe_started)
        total_left = self.total_timeout - (now - self._started)
        return max(0.0, min(probe_left, total_left))

    def exhausted(self) -> bool:
        return self.remaining() <= 0.0

    def elapsed(self) -> float:
        return time.monotonic() - self._started


# ---------------------------------------------------------------------------
# Fixed k
# ---------------------------------------------------------------------------

@dataclass
class FixedKResult:
    k: int
    verdict: ProbeVerdict
    decomposition: Optional[Decomposition] = None
    seconds: float = 0.0
    cg_iterations: int = 0
    components: list[SccCertificate] = field(default_factory=list)
    assignment: Optional[Assignment] = None
    handles: Optional[ModelHandles] = None

    @property
    def feasible(self) -> bool:
        return self.verdict is ProbeVerdict.FEASIBLE


def _check_witness(
    network: FlowNetwork,
    k: int,
    variant: VariantSpec,
    assignment: Assignment,
    handles: ModelHandles,
) -> Decomposition:
    decomposition = extract_decomposition(assignment, handles, network)
    problems = verify_decomposition(network, decomposition, variant, k)
    problems += linearization_violations(assignment, handles, network)
    if variant.problem is ProblemKind.PATHS_OR_CYCLES:
        problems += fdpc_structure_violations(assignment, handles, network)
    if problems:
        raise SoundnessError(problems)
    return decomposition


def _write_lp(lp_dir: str, name: str, model: MilpModel) -> None:
    os.makedirs(lp_dir, exist_ok=True)
    path = os.path.join(lp_dir, f"{name}.lp")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(to_lp(model))
    logger.debug("Wrote %s", path)


def solve_fixed_k(
    network: FlowNetwork,
    k: int,
    variant: VariantSpec,
    budget: Optional[Budget] = None,
    backend: Optional[str] = None,
    lp_dir: Optional[str] = None,
) -> FixedKResult:
    """
    Decide whether *network* has a decomposition of the variant with k elements.

    For ``trails_cg`` the relaxed model is re-solved, each round adding every
    violating component any element selects, until no element violates.
    Feasible witnesses are verified before they are returned.
    """
    budget = budget or Budget()
    budget.start_probe()
    started = time.monotonic()
    components: dict[frozenset[int], SccCertificate] = {}
    rounds = 0

    while True:
        if budget.exhausted():
            return FixedKResult(
                k=k,
                verdict=ProbeVerdict.BUDGET_EXCEEDED,
                seconds=time.monotonic() - started,
                cg_iterations=rounds,
                components=list(components.values()),
            )

        model, handles = model_for(network, k, variant, components.values())
        if lp_dir:
            suffix = f"-r{rounds}" if variant.problem is ProblemKind.TRAILS_CG else ""
            _write_lp(lp_dir, f"{model.name}{suffix}", model)
        result = solve_feasibility(model, budget.remaining(), backend)

        if result.status is not SolveStatus.FEASIBLE:
            verdict = (
                ProbeVerdict.INFEASIBLE
                if result.status is SolveStatus.INFEASIBLE
                else ProbeVerdict.BUDGET_EXCEEDED
            )
            return FixedKResult(
                k=k,
                verdict=verdict,
                seconds=time.monotonic() - started,
                cg_iterations=rounds,
                components=list(components.values()),
            )

        assignment = result.assignment
        if variant.problem is ProblemKind.TRAILS_CG:
            found: dict[frozenset[int], SccCertificate] = {}
            for i in handles.elements:
                for comp in violating_components(network, handles.selection(assignment, i)):
                    if comp.component_edges in components:
                        raise BackendError(
                            f"component {sorted(comp.component_nodes)} violated again after being cut off"
                        )
                    found.setdefault(comp.component_edges, comp)
            if found:
                rounds += 1
                if rounds > config.CG_ITERATION_CAP:
                    raise IterationCapError(config.CG_ITERATION_CAP)
                components.update(found)
                logger.debug(
                    "%s k=%d: round %d added %d component(s), %d total",
                    network.name,
                    k,
                    rounds,
                    len(found),
                    len(components),
                )
                continue

        decomposition = _check_witness(network, k, variant, assignment, handles)
        return FixedKResult(
            k=k,
            verdict=ProbeVerdict.FEASIBLE,
            decomposition=decomposition,
            seconds=time.monotonic() - started,
            cg_iterations=rounds,
            components=list(components.values()),
            assignment=assignment,
            handles=handles,
        )


# ---------------------------------------------------------------------------
# Minimization over k
# ---------------------------------------------------------------------------

def _doubling_schedule_start(m: int) -> list[int]:
    ks, k = [], 1
    while True:
        ks.append(k)
        if k >= m:
            return ks
        k = min(2 * k, m)


def min_k(
    network: FlowNetwork,
    variant: VariantSpec,
    strategy: Strategy = Strategy.DOUBLING,
    budget: Optional[Budget] = None,
    backend: Optional[str] = None,
    lp_dir: Optional[str] = None,
) -> SearchReport:
    """
    Smallest k for which *variant* is feasible, searching k in [1, m].

    ``linear`` probes 1, 2, 3, ...; ``doubling`` probes 1, 2, 4, ... (capped
    at m) up to the first feasible value, then binary-searches below it.
    Raises :class:`BudgetExceededError` carrying the partial report.
    """
    budget = budget or Budget()
    m = network.edge_count
    report = SearchReport(variant=variant, strategy=strategy, upper_bound=m)

    def probe(k: int) -> FixedKResult:
        if budget.total_timeout - budget.elapsed() <= 0:
            report.total_seconds = budget.elapsed()
            raise BudgetExceededError(f"{network.name}: total budget spent before probing k={k}", report, k=k)
        res = solve_fixed_k(network, k, variant, budget, backend, lp_dir)
        report.probes.append(
            Probe(
                k=k,
                verdict=res.verdict,
                seconds=res.seconds,
                cg_iterations=res.cg_iterations,
                components_added=len(res.components),
            )
        )
        logger.info("%s %s k=%d: %s (%.3fs)", network.name, variant.cli_code, k, res.verdict.value, res.seconds)
        if res.verdict is ProbeVerdict.BUDGET_EXCEEDED:
            report.total_seconds = budget.elapsed()
            raise BudgetExceededError(f"{network.name}: budget exceeded at k={k}", report, k=k)
        return res

    best: Optional[FixedKResult] = None
    if strategy is Strategy.LINEAR:
        for k in range(1, m + 1):
            res = probe(k)
            if res.feasible:
                best = res
                break
    else:
        lo = 0
        for k in _doubling_schedule_start(m):
            res = probe(k)
            if res.feasible:
                best = res
                break
            lo = k
        if best is not None:
            hi = best.k
            while hi - lo > 1:
                mid = (lo + hi) // 2
                res = probe(mid)
                if res.feasible:
                    hi, best = mid, res
                else:
                    lo = mid

    report.total_seconds = budget.elapsed()
    if best is None:
        report.outcome = SearchOutcome.INFEASIBLE_UP_TO_M
    else:
        report.outcome = SearchOutcome.FOUND
        report.k_star = best.k
        report.decomposition = best.decomposition
    return report
