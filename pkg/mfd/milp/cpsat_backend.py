"""
OR-Tools CP-SAT implementation of the SolverBackend.

CP-SAT works on exact integers throughout, so every answer it returns is
already integral; the exact re-check in ``feasibility`` still runs.
"""

from __future__ import annotations

import logging
import time
from typing import Optional

from ortools.sat.python import cp_model

from errors import BackendError
from milp.base import SolveResult, SolverBackend, SolveStatus
from milp.model import Assignment, LinearConstraint, Relation, VarKind, VarRef

logger = logging.getLogger(__name__)

# Stand-in domain for free integer variables; CP-SAT needs finite bounds.
FREE_BOUND = 10**9


class CpSatBackend(SolverBackend):
    """Backend built on ``ortools.sat.python.cp_model``."""

    name = "cpsat"

    def __init__(self, threads: int = 1, seed: int = 0) -> None:
        self.threads = threads
        self.seed = seed
        self._model = cp_model.CpModel()
        self._vars: dict[int, cp_model.IntVar] = {}
        self._trivially_infeasible: Optional[str] = None

    def declare_variable(self, var: VarRef) -> None:
        if var.kind is VarKind.BINARY:
            handle = self._model.new_bool_var(var.name)
        elif var.kind is VarKind.FREE_INTEGER:
            handle = self._model.new_int_var(-FREE_BOUND, FREE_BOUND, var.name)
        else:
            handle = self._model.new_int_var(var.lb, var.ub, var.name)
        self._vars[var.index] = handle

    def declare_constraint(self, constraint: LinearConstraint) -> None:
        if not constraint.terms:
            if not constraint.relation.holds(0, constraint.rhs):
                self._trivially_infeasible = constraint.tag
            return
        expr = sum(coef * self._vars[var.index] for coef, var in constraint.terms)
        if constraint.relation is Relation.LE:
            ct = self._model.add(expr <= constraint.rhs)
        elif constraint.relation is Relation.GE:
            ct = self._model.add(expr >= constraint.rhs)
        else:
            ct = self._model.add(expr == constraint.rhs)
        ct.with_name(constraint.tag)

    def solve(self, time_limit: Optional[float] = None) -> SolveResult:
        if self._trivially_infeasible is not None:
            return SolveResult(
                status=SolveStatus.INFEASIBLE,
                diagnostics={"constant_constraint": self._trivially_infeasible},
            )

        solver = cp_model.CpSolver()
        solver.parameters.num_workers = max(1, self.threads)
        solver.parameters.random_seed = self.seed
        if time_limit is not None:
            solver.parameters.max_time_in_seconds = max(time_limit, 0.001)

        started = time.perf_counter()
        status = solver.solve(self._model)
        elapsed = time.perf_counter() - started
        diagnostics = {"status": solver.status_name(status), "wall_time": solver.wall_time}
        logger.debug("CP-SAT finished with %s in %.3fs", diagnostics["status"], elapsed)

        if status in (cp_model.OPTIMAL, cp_model.FEASIBLE):
            values = {idx: int(solver.value(handle)) for idx, handle in self._vars.items()}
            return SolveResult(SolveStatus.FEASIBLE, Assignment(values), elapsed, diagnostics)
        if status == cp_model.INFEASIBLE:
            return SolveResult(SolveStatus.INFEASIBLE, None, elapsed, diagnostics)
        if status == cp_model.UNKNOWN:
            return SolveResult(SolveStatus.BUDGET_EXCEEDED, None, elapsed, diagnostics)
        raise BackendError(f"CP-SAT rejected the model: {diagnostics['status']}")
