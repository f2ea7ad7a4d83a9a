"""
Solver-agnostic integer program.

Models are feasibility checks: variables, linear constraints with exact
integer data, no objective. Backends only ever see a finished model.
"""

from __future__ import annotations

from collections import defaultdict
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

from errors import ModelError


class VarKind(str, Enum):
    BINARY = "binary"
    INTEGER = "integer"
    FREE_INTEGER = "free_integer"


class Relation(str, Enum):
    LE = "<="
    EQ = "="
    GE = ">="

    def holds(self, lhs: int, rhs: int) -> bool:
        if self is Relation.LE:
            return lhs <= rhs
        if self is Relation.GE:
            return lhs >= rhs
        return lhs == rhs


@dataclass(frozen=True, slots=True)
class VarRef:
    """Handle to a declared variable; ``index`` is its position in the model."""
    index: int
    name: str
    kind: VarKind
    lb: Optional[int]
    ub: Optional[int]

    def in_bounds(self, value: int) -> bool:
        if self.lb is not None and value < self.lb:
            return False
        return self.ub is None or value <= self.ub


@dataclass(frozen=True, slots=True)
class LinearConstraint:
    terms: tuple[tuple[int, VarRef], ...]
    relation: Relation
    rhs: int
    tag: str

    def lhs(self, assignment: "Assignment") -> int:
        return sum(coef * assignment[var] for coef, var in self.terms)

    def satisfied_by(self, assignment: "Assignment") -> bool:
        return self.relation.holds(self.lhs(assignment), self.rhs)


@dataclass(frozen=True, slots=True)
class Assignment:
    """Integer value per variable index."""
    values: Mapping[int, int]

    def __getitem__(self, var: VarRef) -> int:
        return self.values[var.index]

    def get(self, var: VarRef, default: int = 0) -> int:
        return self.values.get(var.index, default)


Term = tuple[int, VarRef]


@dataclass
class MilpModel:
    name: str = "model"
    variables: list[VarRef] = field(default_factory=list)
    constraints: list[LinearConstraint] = field(default_factory=list)

    # ------------------------------------------------------------------
    # Construction
    # ------------------------------------------------------------------

    def add_variable(
        self,
        name: str,
        kind: VarKind = VarKind.INTEGER,
        lb: Optional[int] = None,
        ub: Optional[int] = None,
    ) -> VarRef:
        if kind is VarKind.BINARY:
            lb, ub = 0, 1
        elif kind is VarKind.INTEGER:
            if lb is None or ub is None:
                raise ModelError(f"integer variable '{name}' needs both bounds")
            if lb > ub:
                raise ModelError(f"variable '{name}': lower bound {lb} > upper bound {ub}")
        else:
            lb, ub = None, None
        var = VarRef(index=len(self.variables), name=name, kind=kind, lb=lb, ub=ub)
        self.variables.append(var)
        return var

    def add_binary(self, name: str) -> VarRef:
        return self.add_variable(name, VarKind.BINARY)

    def add_integer(self, name: str, lb: int, ub: int) -> VarRef:
        return self.add_variable(name, VarKind.INTEGER, lb, ub)

    def add_constraint(self, terms: Iterable[Term], relation: Relation, rhs: int, tag: str) -> LinearConstraint:
        """Add ``sum(coef * var) <relation> rhs``; repeated variables are merged."""
        merged: dict[int, int] = defaultdict(int)
        owners: dict[int, VarRef] = {}
        for coef, var in terms:
            if var.index >= len(self.variables) or self.variables[var.index] is not var:
                raise ModelError(f"constraint '{tag}' uses variable '{var.name}' from another model")
            merged[var.index] += coef
            owners[var.index] = var
        packed = tuple((coef, owners[idx]) for idx, coef in merged.items() if coef != 0)
        constraint = LinearConstraint(terms=packed, relation=relation, rhs=rhs, tag=tag)
        self.constraints.append(constraint)
        return constraint

    def le(self, terms: Iterable[Term], rhs: int, tag: str) -> LinearConstraint:
        return self.add_constraint(terms, Relation.LE, rhs, tag)

    def ge(self, terms: Iterable[Term], rhs: int, tag: str) -> LinearConstraint:
        return self.add_constraint(terms, Relation.GE, rhs, tag)

    def eq(self, terms: Iterable[Term], rhs: int, tag: str) -> LinearConstraint:
        return self.add_constraint(terms, Relation.EQ, rhs, tag)

    # ------------------------------------------------------------------
    # Exact re-check
    # ------------------------------------------------------------------

    def violations(self, assignment: Assignment) -> list[str]:
        """Tags of everything *assignment* breaks, using exact integer arithmetic."""
        broken: list[str] = []
        for var in self.variables:
            if var.index not in assignment.values:
                broken.append(f"{var.name}: no value")
            elif not var.in_bounds(assignment[var]):
                broken.append(f"{var.name}: {assignment[var]} outside [{var.lb}, {var.ub}]")
        if broken:
            return broken
        for c in self.constraints:
            if not c.satisfied_by(assignment):
                broken.append(f"{c.tag}: {c.lhs(assignment)} {c.relation.value} {c.rhs} fails")
        return broken


def new_model(name: str = "model") -> MilpModel:
    return MilpModel(name=name)
