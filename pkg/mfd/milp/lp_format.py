"""
LP-format export of a :class:`MilpModel` for offline debugging.

The model is rebuilt with OR-Tools' ``model_builder`` and written with its
LP exporter, so any solver that reads LP files can reload it. There is no
objective.
"""

from __future__ import annotations

import math
import re

from errors import BackendUnavailableError
from milp.model import MilpModel, Relation, VarKind

_UNSAFE = re.compile(r"[^A-Za-z0-9_]")


def _lp_name(text: str) -> str:
    return _UNSAFE.sub("_", text)


def to_lp(model: MilpModel) -> str:
    try:
        from ortools.linear_solver.python import model_builder as mb
    except ImportError as exc:
        raise BackendUnavailableError(f"LP export needs ortools: {exc}") from exc

    builder = mb.Model()
    builder.name = model.name
    variables = []
    for var in model.variables:
        if var.kind is VarKind.BINARY:
            variables.append(builder.new_bool_var(_lp_name(var.name)))
        elif var.kind is VarKind.INTEGER:
            variables.append(builder.new_int_var(var.lb, var.ub, _lp_name(var.name)))
        else:
            variables.append(builder.new_int_var(-math.inf, math.inf, _lp_name(var.name)))

    for pos, c in enumerate(model.constraints):
        expr = mb.LinearExpr.weighted_sum(
            [variables[var.index] for _, var in c.terms],
            [coef for coef, _ in c.terms],
        )
        lb = c.rhs if c.relation in (Relation.GE, Relation.EQ) else -math.inf
        ub = c.rhs if c.relation in (Relation.LE, Relation.EQ) else math.inf
        builder.add_linear_constraint(expr, lb, ub, name=_lp_name(f"{c.tag}_{pos}"))

    return builder.export_to_lp_string(obfuscate=False)
