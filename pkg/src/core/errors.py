"""
Exceptions raised by the natural pseudo-distance solver.
"""

from typing import Optional


class NpdError(Exception):
    """Base class for solver failures."""


class DegenerateRootError(NpdError):
    """A root of f' has |f''| below tolerance (possibly non-Morse input)."""

    def __init__(self, message: str, theta: Optional[float] = None):
        super().__init__(message)
        self.theta = theta


class NotDifferentiableError(NpdError):
    """F is not differentiable where it vanishes."""


class NoImprovementError(NpdError):
    """Derivative-free refinement did not settle within its iteration budget."""


class NotMorseError(NpdError):
    """An input function failed the Morse test."""

    def __init__(self, message: str, witnesses: Optional[list] = None):
        super().__init__(message)
        self.witnesses = witnesses or []


class InconsistentOracleError(NpdError):
    """The refined distance fell outside the rigorous grid bracket."""


class BranchTrackingUnstableError(NpdError):
    """Stationary-point counts changed too often along the alpha grid."""


class ValueMismatchError(NpdError):
    """A claimed distance does not match g(alpha)."""


class FunctionSpecError(ValueError):
    """A JSON function spec is malformed."""

    def __init__(self, message: str, field: Optional[str] = None):
        super().__init__(f"{field}: {message}" if field else message)
        self.field = field
