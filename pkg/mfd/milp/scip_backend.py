"""
SCIP implementation of the SolverBackend, reached through OR-Tools'
``pywraplp`` wrapper.

SCIP answers in floating point; values are rounded to the nearest integer
here and the exact re-check in ``feasibility`` rejects anything that no
longer satisfies the model after rounding.
"""

from __future__ import annotations

import logging
import time
from typing import Optional

from ortools.linear_solver import pywraplp

from errors import BackendError, BackendUnavailableError
from milp.base import SolveResult, SolverBackend, SolveStatus
from milp.model import Assignment, LinearConstraint, Relation, VarKind, VarRef

logger = logging.getLogger(__name__)


class ScipBackend(SolverBackend):
    name = "scip"

    def __init__(self, threads: int = 1, seed: int = 0) -> None:
        self._solver = pywraplp.Solver.CreateSolver("SCIP")
        if self._solver is None:
            raise BackendUnavailableError("this OR-Tools build ships without SCIP")
        self._solver.SetNumThreads(max(1, threads))
        self._solver.SetSolverSpecificParametersAsString(f"randomization/randomseedshift = {seed}\n")
        self._vars: dict[int, pywraplp.Variable] = {}

    def declare_variable(self, var: VarRef) -> None:
        inf = self._solver.infinity()
        if var.kind is VarKind.BINARY:
            handle = self._solver.BoolVar(var.name)
        elif var.kind is VarKind.FREE_INTEGER:
            handle = self._solver.IntVar(-inf, inf, var.name)
        else:
            handle = self._solver.IntVar(var.lb, var.ub, var.name)
        self._vars[var.index] = handle

    def declare_constraint(self, constraint: LinearConstraint) -> None:
        inf = self._solver.infinity()
        lower, upper = {
            Relation.LE: (-inf, constraint.rhs),
            Relation.GE: (constraint.rhs, inf),
            Relation.EQ: (constraint.rhs, constraint.rhs),
        }[constraint.relation]
        row = self._solver.Constraint(lower, upper, constraint.tag)
        for coef, var in constraint.terms:
            row.SetCoefficient(self._vars[var.index], coef)

    def solve(self, time_limit: Optional[float] = None) -> SolveResult:
        if time_limit is not None:
            self._solver.SetTimeLimit(max(1, int(time_limit * 1000)))

        started = time.perf_counter()
        status = self._solver.Solve()
        elapsed = time.perf_counter() - started
        diagnostics = {"status": status, "nodes": self._solver.nodes()}
        logger.debug("SCIP finished with status %s in %.3fs", status, elapsed)

        if status in (pywraplp.Solver.OPTIMAL, pywraplp.Solver.FEASIBLE):
            values = {idx: int(round(handle.solution_value())) for idx, handle in self._vars.items()}
            return SolveResult(SolveStatus.FEASIBLE, Assignment(values), elapsed, diagnostics)
        if status == pywraplp.Solver.INFEASIBLE:
            return SolveResult(SolveStatus.INFEASIBLE, None, elapsed, diagnostics)
        if status == pywraplp.Solver.NOT_SOLVED:
            return SolveResult(SolveStatus.BUDGET_EXCEEDED, None, elapsed, diagnostics)
        raise BackendError(f"SCIP ended with unusable status {status}")
