"""
Application configuration.

Uses environment variables with sensible defaults for local runs.
Loads a ``.env`` file (if present) from the project root for convenience.
"""

from __future__ import annotations

import os

# Load .env before reading any config values
try:
    from dotenv import load_dotenv

    load_dotenv(dotenv_path=os.path.join(os.path.dirname(__file__), "..", ".env"))
except ImportError:
    pass


# ---------------------------------------------------------------------------
# Solver backend selection
# ---------------------------------------------------------------------------
# Set MFD_SOLVER_BACKEND to "scip" to use the SCIP adapter.
# Defaults to "cpsat", which works on exact integers end to end.
SOLVER_BACKEND: str = os.environ.get("MFD_SOLVER_BACKEND", "cpsat").lower()

SOLVER_THREADS: int = int(os.environ.get("MFD_SOLVER_THREADS", "1"))
SOLVER_SEED: int = int(os.environ.get("MFD_SOLVER_SEED", "0"))


# ---------------------------------------------------------------------------
# Search budgets (wall-clock seconds)
# ---------------------------------------------------------------------------
PROBE_TIMEOUT: float = float(os.environ.get("MFD_PROBE_TIMEOUT", "60"))
TOTAL_TIMEOUT: float = float(os.environ.get("MFD_TOTAL_TIMEOUT", "600"))

CG_ITERATION_CAP: int = int(os.environ.get("MFD_CG_ITERATION_CAP", "1000"))


# ---------------------------------------------------------------------------
# Generator, oracle and benchmark
# ---------------------------------------------------------------------------
GENERATOR_MAX_WEIGHT: int = int(os.environ.get("MFD_GENERATOR_MAX_WEIGHT", "10"))

ORACLE_MAX_NODES: int = 6
ORACLE_MAX_EDGES: int = 9
ORACLE_MAX_FLOW: int = 6

BENCH_BUCKETS: str = os.environ.get("MFD_BENCH_BUCKETS", "1-3,4-10,11-15,16-20,21-")

LOG_LEVEL: str = os.environ.get("MFD_LOG_LEVEL", "INFO").upper()
