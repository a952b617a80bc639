from .periodic_function import PeriodicFunction, TrigPolynomial, PeriodicSpline
from .npd import NpdSolver, NpdResult, compute_npd
from .localization import RotationLocalizer
from .settings import SolverSettings

__all__ = [
    "PeriodicFunction",
    "TrigPolynomial",
    "PeriodicSpline",
    "NpdSolver",
    "NpdResult",
    "compute_npd",
    "RotationLocalizer",
    "SolverSettings",
]
