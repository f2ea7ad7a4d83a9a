"""
Feasibility solving through whichever backend is configured.
"""

from __future__ import annotations

import logging
from typing import Optional

from errors import BackendError
from milp.base import SolveResult, SolveStatus
from milp.factory import create_backend
from milp.model import MilpModel

logger = logging.getLogger(__name__)


def solve_feasibility(
    model: MilpModel,
    time_limit: Optional[float] = None,
    backend: Optional[str] = None,
) -> SolveResult:
    """
    Load *model* into a fresh backend and look for any integer solution.

    A feasible answer is re-evaluated against every constraint with exact
    integer arithmetic before it is returned; a backend answer that fails
    the re-check raises :class:`BackendError`.
    """
    engine = create_backend(backend)
    for var in model.variables:
        engine.declare_variable(var)
    for constraint in model.constraints:
        engine.declare_constraint(constraint)

    result = engine.solve(time_limit)
    logger.debug(
        "%s: %s on %d vars / %d constraints (%.3fs)",
        model.name,
        result.status.value,
        len(model.variables),
        len(model.constraints),
        result.seconds,
    )

    if result.status is SolveStatus.FEASIBLE:
        broken = model.violations(result.assignment)
        if broken:
            raise BackendError(
                f"{engine.name} returned an assignment violating {len(broken)} constraint(s): "
                + "; ".join(broken[:5])
            )
    return result
