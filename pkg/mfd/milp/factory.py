"""
Factory for creating the appropriate SolverBackend based on configuration.
"""

from __future__ import annotations

from typing import Optional

import config
from errors import BackendUnavailableError
from milp.base import SolverBackend


def create_backend(name: Optional[str] = None) -> SolverBackend:
    """
    Instantiate the solver backend named *name*, or ``config.SOLVER_BACKEND``.

    Returns a fresh :class:`SolverBackend`; backends are single-use.
    """
    backend_key = (name or config.SOLVER_BACKEND).lower()

    try:
        if backend_key in ("cpsat", "cp-sat", "ortools"):
            from milp.cpsat_backend import CpSatBackend

            return CpSatBackend(threads=config.SOLVER_THREADS, seed=config.SOLVER_SEED)
        if backend_key == "scip":
            from milp.scip_backend import ScipBackend

            return ScipBackend(threads=config.SOLVER_THREADS, seed=config.SOLVER_SEED)
    except ImportError as exc:
        raise BackendUnavailableError(f"solver backend '{backend_key}' is not installed: {exc}") from exc

    raise ValueError(
        f"Unknown MFD_SOLVER_BACKEND '{backend_key}'.  "
        "Supported values: 'cpsat', 'scip'."
    )
