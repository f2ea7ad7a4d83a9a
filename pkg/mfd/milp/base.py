"""
Abstract base class defining the solver backend contract.

Every backend (CP-SAT, SCIP, …) implements this interface so the
formulations are completely decoupled from the solving engine. The
surface is three calls: declare a variable, declare a constraint, solve.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Optional

from milp.model import Assignment, LinearConstraint, VarRef


class SolveStatus(str, Enum):
    FEASIBLE = "feasible"
    INFEASIBLE = "infeasible"
    BUDGET_EXCEEDED = "budget_exceeded"


@dataclass
class SolveResult:
    status: SolveStatus
    assignment: Optional[Assignment] = None
    seconds: float = 0.0
    diagnostics: dict[str, Any] = field(default_factory=dict)


class SolverBackend(ABC):
    """One backend instance loads and solves exactly one model."""

    name: str = "abstract"

    @abstractmethod
    def declare_variable(self, var: VarRef) -> None:
        """Create the engine-side counterpart of *var*."""

    @abstractmethod
    def declare_constraint(self, constraint: LinearConstraint) -> None:
        """Add *constraint*; every variable in it was declared before."""

    @abstractmethod
    def solve(self, time_limit: Optional[float] = None) -> SolveResult:
        """Search for any integer point satisfying the declared constraints."""
