"""Exception hierarchy shared by all it2synth modules.

Every error carries the process exit code the CLI maps it to, plus an
optional ``details`` payload that ends up in ``diagnostic.json``.
"""

from typing import Any, Optional


class It2SynthError(Exception):
    """Base class for all domain errors."""

    exit_code = 1

    def __init__(self, message: str, details: Optional[dict[str, Any]] = None) -> None:
        super().__init__(message)
        self.message = message
        self.details = details or {}

    def to_dict(self) -> dict[str, Any]:
        """Machine-readable form for diagnostic files."""
        return {
            "error": type(self).__name__,
            "message": self.message,
            "exit_code": self.exit_code,
            "details": self.details,
        }


class ModelInputError(It2SynthError, ValueError):
    """Invalid shapes, dimension mismatches or schema violations."""

    exit_code = 2


class DegenerateGradeError(It2SynthError):
    """All firing strengths vanish: the state is outside the modeled region."""

    exit_code = 3


class PartitionError(It2SynthError, ValueError):
    """Degenerate partition cell or a point outside the state box."""

    exit_code = 4


class AssemblyError(It2SynthError):
    """Undeclared variable, index mismatch or rejected performance spec."""

    exit_code = 5


class InfeasibleError(It2SynthError):
    """The LMI family was proven infeasible (or the gamma bracket top was)."""

    exit_code = 6


class SolverFailure(It2SynthError):
    """The conic solver failed numerically without proving infeasibility."""

    exit_code = 7


class DivergenceError(It2SynthError):
    """State norm exceeded the blow-up bound during integration."""

    exit_code = 8

    def __init__(
        self,
        message: str,
        trajectory: Any = None,
        details: Optional[dict[str, Any]] = None,
    ) -> None:
        super().__init__(message, details)
        self.trajectory = trajectory


class CertificationError(It2SynthError):
    """Trajectory lacks the channels needed for certification."""

    exit_code = 9
