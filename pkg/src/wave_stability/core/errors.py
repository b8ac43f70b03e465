from typing import Any, Dict, Optional


class WaveStabilityError(Exception):
    """
    Base error of the package.

    Every error carries a `details` dictionary that the CLI serializes to JSON
    diagnostics on stderr.
    """

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None) -> None:
        super().__init__(message)
        self.message = message
        self.details: Dict[str, Any] = details or {}

    def to_dict(self) -> Dict[str, Any]:
        return {
            "error": type(self).__name__,
            "message": self.message,
            "details": self.details,
        }


class DomainError(WaveStabilityError, ValueError):
    """An argument lies outside the domain of the operation."""


class DegenerateFamilyError(DomainError):
    """An elliptic profile was requested at a degenerate modulus k in {0, 1}."""


class DimensionError(WaveStabilityError, ValueError):
    """A constraint subspace is smaller than the negative index of the operator."""


class NotInvertibleError(WaveStabilityError):
    """The change of variables is not strictly monotone."""


class NumericalError(WaveStabilityError):
    """A dense linear-algebra routine failed."""


class ShiftError(NumericalError):
    """L - sigma*D stayed singular for every attempted shift."""


class ModelViolationError(WaveStabilityError):
    """A discretized operator does not show the expected kernel or signature."""


class OrthogonalityError(WaveStabilityError):
    """A right-hand side has a component along the kernel."""


class CrossValidationError(WaveStabilityError):
    """Two independent evaluations of the same quantity disagree."""


class DegenerateWronskianError(WaveStabilityError):
    """The Wronskian of the Green's pair is numerically zero."""


class CertificateError(WaveStabilityError):
    """A negative-definiteness certificate did not hold."""


class VerificationError(WaveStabilityError):
    """A residual check exceeded its tolerance."""
