"""
Exception hierarchy.

Invariant violations of input data (``graph.validate``,
``verify.verify_decomposition``) are reported as lists, not raised; the
classes below are for faults the caller has to handle.
"""

from __future__ import annotations

from typing import TYPE_CHECKING, Any

if TYPE_CHECKING:
    from models import SearchReport


class MfdError(Exception):
    """Base class for every error raised by this package."""


class GraphSyntaxError(MfdError, ValueError):
    """A graph file does not follow the instance format."""

    def __init__(self, line: int, column: int, message: str) -> None:
        self.line = line
        self.column = column
        self.message = message
        super().__init__(f"line {line}, column {column}: {message}")


class NetworkValidationError(MfdError, ValueError):
    """A parsed network breaks one or more flow-network invariants."""

    def __init__(self, name: str, violations: list[str]) -> None:
        self.name = name
        self.violations = violations
        super().__init__(f"instance '{name}' is not a valid flow network: " + "; ".join(violations))


class NotAPseudoFlowError(MfdError, ValueError):
    def __init__(self, detail: str) -> None:
        super().__init__(f"selection is not a pseudo-flow: {detail}")


class ModelError(MfdError, ValueError):
    """Malformed integer program input (bounds, foreign variables, bad k)."""


class BackendUnavailableError(MfdError, EnvironmentError):
    """The selected solver package or engine cannot be loaded."""


class BackendError(MfdError, RuntimeError):
    """The solver returned something unusable."""


class ExtractionError(MfdError, RuntimeError):
    """Variable values do not describe the elements the model encodes."""


class SoundnessError(MfdError, RuntimeError):
    """A solver witness failed independent verification."""

    def __init__(self, violations: list[str]) -> None:
        self.violations = violations
        super().__init__("witness failed verification: " + "; ".join(violations))


class IterationCapError(MfdError, RuntimeError):
    def __init__(self, cap: int) -> None:
        self.cap = cap
        super().__init__(f"constraint generation did not converge within {cap} iterations")


class BudgetExceededError(MfdError, TimeoutError):
    """A time budget ran out; ``report`` holds whatever was measured so far."""

    def __init__(self, message: str, report: "SearchReport | None" = None, **diagnostics: Any) -> None:
        self.report = report
        self.diagnostics = diagnostics
        super().__init__(message)
