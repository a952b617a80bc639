"""
Periodic C^2 functions on the circle.
Two backends share one interface: trigonometric polynomials (exact coefficients)
and periodic cubic splines through uniform samples.
"""

import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Callable, ClassVar, Optional

import numpy as np
from scipy.interpolate import CubicSpline

from src.core.angles import TWO_PI, wrap_angle, dedupe_angles
from src.core.errors import DegenerateRootError

logger = logging.getLogger(__name__)

DEFAULT_SCAN = 4096
DEFAULT_CRITICAL_TOL = 1e-8

ArrayFunc = Callable[[np.ndarray], np.ndarray]


def uniform_grid(n: int) -> np.ndarray:
    """n equally spaced angles 2*pi*j/n, j = 0..n-1."""
    return TWO_PI * np.arange(n) / n


def _match_input(result, theta):
    """Return a float for scalar input, an array otherwise."""
    if np.ndim(theta) == 0:
        return float(result)
    return result


# Root finding

def refine_brackets(
    func: ArrayFunc,
    dfunc: Optional[ArrayFunc],
    lo: np.ndarray,
    hi: np.ndarray,
    tol: float,
    max_iter: int = 200,
) -> np.ndarray:
    """
    Vectorised bisection of sign-change brackets followed by one Newton step.

    Args:
        func: Function evaluated elementwise on an array of points
        dfunc: Its derivative (None skips the Newton step)
        lo: Left ends (func changes sign on [lo, hi])
        hi: Right ends
        tol: Bracket width at which bisection stops
        max_iter: Bisection iteration cap

    Returns:
        Array of roots, one per bracket (not wrapped)
    """
    lo = np.asarray(lo, dtype=float).copy()
    hi = np.asarray(hi, dtype=float).copy()
    if lo.size == 0:
        return lo

    f_lo = func(lo)
    for _ in range(max_iter):
        if np.all(hi - lo <= tol):
            break
        mid = 0.5 * (lo + hi)
        f_mid = func(mid)
        same_side = np.sign(f_mid) == np.sign(f_lo)
        lo = np.where(same_side, mid, lo)
        f_lo = np.where(same_side, f_mid, f_lo)
        hi = np.where(same_side, hi, mid)

    root = 0.5 * (lo + hi)
    if dfunc is None:
        return root

    # Newton polish, kept only when it stays inside the final bracket
    f_root = func(root)
    d_root = dfunc(root)
    with np.errstate(divide="ignore", invalid="ignore"):
        polished = root - f_root / d_root
    accept = (
        np.isfinite(polished)
        & (polished >= lo - tol)
        & (polished <= hi + tol)
    )
    return np.where(accept, polished, root)


def roots_from_samples(
    func: ArrayFunc,
    dfunc: ArrayFunc,
    grid: np.ndarray,
    values: np.ndarray,
    tol: float,
) -> np.ndarray:
    """
    Roots of a periodic function given its samples on a uniform grid.

    Sign changes between neighbouring samples (including the wrap from the last
    sample to the first) are bisected; samples that are exactly zero are roots.

    Returns:
        Sorted canonical roots, deduplicated within 10 * tol
    """
    step = TWO_PI / len(grid)
    following = np.roll(values, -1)
    idx = np.nonzero(values * following < 0)[0]

    refined = refine_brackets(func, dfunc, grid[idx], grid[idx] + step, tol)
    exact = grid[values == 0]

    roots = wrap_angle(np.concatenate([refined, exact]))
    return np.asarray(dedupe_angles(np.atleast_1d(roots), 10 * tol), dtype=float)


def find_periodic_roots(
    func: ArrayFunc,
    dfunc: ArrayFunc,
    n_samples: int = DEFAULT_SCAN,
    tol: float = 1e-12,
) -> np.ndarray:
    """Scan a periodic function on n_samples points and refine every sign change."""
    grid = uniform_grid(n_samples)
    return roots_from_samples(func, dfunc, grid, func(grid), tol)


# Domain types

@dataclass(frozen=True)
class CriticalPoint:
    """A zero of f' with its value and curvature."""
    theta: float
    value: float
    second_derivative: float
    kind: str  # "max", "min", or "degenerate"

    def to_dict(self) -> dict:
        return {
            "theta": self.theta,
            "value": self.value,
            "second_derivative": self.second_derivative,
            "kind": self.kind,
        }


@dataclass(frozen=True)
class MorseReport:
    """Outcome of the Morse test."""
    morse: bool
    witnesses: list[CriticalPoint] = field(default_factory=list)
    critical_points: list[CriticalPoint] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "morse": self.morse,
            "witnesses": [w.to_dict() for w in self.witnesses],
            "critical_points": [c.to_dict() for c in self.critical_points],
        }


class PeriodicFunction(ABC):
    """A C^2 function on S^1 with exact first and second derivatives."""

    kind: ClassVar[str] = ""

    @abstractmethod
    def _evaluate(self, theta: np.ndarray, order: int) -> np.ndarray:
        """Evaluate the order-th derivative on canonical angles."""

    @property
    @abstractmethod
    def lipschitz_bound(self) -> float:
        """An upper bound on max |f'|."""

    @abstractmethod
    def scaled(self, factor: float) -> "PeriodicFunction":
        """The function c * f."""

    @abstractmethod
    def shifted(self, beta: float) -> "PeriodicFunction":
        """The function theta -> f(theta + beta)."""

    @abstractmethod
    def to_spec(self) -> dict:
        """JSON-ready function spec."""

    def evaluate(self, theta):
        """f(theta) for a scalar or array of angles."""
        values = self._evaluate(wrap_angle(np.asarray(theta, dtype=float)), 0)
        return _match_input(values, theta)

    def derivative(self, theta, order: int = 1):
        """
        Exact first or second derivative.

        Args:
            theta: Scalar or array of angles
            order: 1 or 2

        Returns:
            f'(theta) or f''(theta), matching the input shape
        """
        if order not in (1, 2):
            raise ValueError(f"derivative order must be 1 or 2, got {order}")
        values = self._evaluate(wrap_angle(np.asarray(theta, dtype=float)), order)
        return _match_input(values, theta)

    def __call__(self, theta):
        return self.evaluate(theta)

    def critical_points(
        self,
        tol: float = DEFAULT_CRITICAL_TOL,
        n_samples: int = DEFAULT_SCAN,
        strict: bool = True,
    ) -> list[CriticalPoint]:
        """
        Locate every critical point on [0, 2pi).

        Sign changes of f' on the scan grid are bisected to width tol and
        polished with one Newton step. Touching zeros of f' (no sign change)
        are found through the sign changes of f'' next to local minima of |f'|.

        Args:
            tol: Bisection width, dedup distance and the |f''| degeneracy bound
            n_samples: Scan grid size
            strict: Raise on degenerate roots instead of reporting them

        Returns:
            Critical points sorted by theta

        Raises:
            DegenerateRootError: In strict mode, when f' vanishes identically or
                a root has |f''| < tol
        """
        d1 = lambda t: self.derivative(t, 1)
        d2 = lambda t: self.derivative(t, 2)

        grid = uniform_grid(n_samples)
        slopes = d1(grid)

        if np.max(np.abs(slopes)) <= tol:
            if strict:
                raise DegenerateRootError("derivative vanishes identically", theta=0.0)
            value = float(self.evaluate(0.0))
            return [CriticalPoint(0.0, value, float(d2(0.0)), "degenerate")]

        roots = list(roots_from_samples(d1, d2, grid, slopes, tol))
        roots.extend(self._touching_roots(grid, slopes, tol))
        roots = dedupe_angles(roots, tol)

        points = []
        for theta in roots:
            curvature = float(d2(theta))
            if abs(curvature) < tol:
                if strict:
                    raise DegenerateRootError(
                        f"critical point at theta={theta:.10g} has f''={curvature:.3g}",
                        theta=theta,
                    )
                kind = "degenerate"
            else:
                kind = "max" if curvature < 0 else "min"
            points.append(CriticalPoint(
                theta=theta,
                value=float(self.evaluate(theta)),
                second_derivative=curvature,
                kind=kind,
            ))

        return points

    def _touching_roots(self, grid: np.ndarray, slopes: np.ndarray, tol: float) -> list[float]:
        """Zeros of f' where f' touches zero without changing sign."""
        prev = np.roll(slopes, 1)
        nxt = np.roll(slopes, -1)
        magnitude = np.abs(slopes)
        dip = (
            (magnitude <= np.abs(prev))
            & (magnitude <= np.abs(nxt))
            & (prev * slopes > 0)
            & (slopes * nxt > 0)
        )
        idx = np.nonzero(dip)[0]
        if idx.size == 0:
            return []

        step = TWO_PI / len(grid)
        d2 = lambda t: self.derivative(t, 2)

        lo = grid[idx] - step
        hi = grid[idx] + step
        flips = d2(lo) * d2(hi) < 0
        if not np.any(flips):
            return []

        # The extremum of f' is a root of f''; no third derivative is needed
        turning = refine_brackets(d2, None, lo[flips], hi[flips], min(tol, 1e-12))
        touching = np.abs(self.derivative(turning, 1)) <= tol
        return [wrap_angle(float(t)) for t in turning[touching]]

    def is_morse(self, tol: float = DEFAULT_CRITICAL_TOL, n_samples: int = DEFAULT_SCAN) -> MorseReport:
        """
        Test the Morse property: every critical point must have |f''| > tol.

        Returns:
            MorseReport listing the violating critical points as witnesses
        """
        points = self.critical_points(tol=tol, n_samples=n_samples, strict=False)
        witnesses = [p for p in points if abs(p.second_derivative) <= tol]
        if witnesses:
            logger.info(f"{self.kind} function is not Morse: {len(witnesses)} degenerate point(s)")
        return MorseReport(morse=not witnesses, witnesses=witnesses, critical_points=points)

    def value_range(self, n_samples: int = DEFAULT_SCAN) -> tuple[float, float]:
        """(min f, max f), from critical values and a dense scan."""
        samples = self.evaluate(uniform_grid(n_samples))
        values = [float(samples.min()), float(samples.max())]
        try:
            values.extend(p.value for p in self.critical_points(n_samples=n_samples, strict=False))
        except DegenerateRootError:
            pass
        return min(values), max(values)


@dataclass(frozen=True)
class TrigPolynomial(PeriodicFunction):
    """f(theta) = a0 + sum_k a_k cos(k theta) + b_k sin(k theta), k = 1..K."""
    a0: float = 0.0
    cos_coeffs: tuple[float, ...] = ()
    sin_coeffs: tuple[float, ...] = ()

    kind: ClassVar[str] = "fourier"

    _a: np.ndarray = field(init=False, repr=False, compare=False)
    _b: np.ndarray = field(init=False, repr=False, compare=False)
    _k: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        degree = max(len(self.cos_coeffs), len(self.sin_coeffs))
        a = np.zeros(degree)
        b = np.zeros(degree)
        a[:len(self.cos_coeffs)] = self.cos_coeffs
        b[:len(self.sin_coeffs)] = self.sin_coeffs
        object.__setattr__(self, "cos_coeffs", tuple(float(x) for x in self.cos_coeffs))
        object.__setattr__(self, "sin_coeffs", tuple(float(x) for x in self.sin_coeffs))
        object.__setattr__(self, "a0", float(self.a0))
        object.__setattr__(self, "_a", a)
        object.__setattr__(self, "_b", b)
        object.__setattr__(self, "_k", np.arange(1, degree + 1, dtype=float))

    @property
    def degree(self) -> int:
        return len(self._k)

    def _evaluate(self, theta: np.ndarray, order: int) -> np.ndarray:
        angles = np.multiply.outer(theta, self._k)
        cos_terms = np.cos(angles)
        sin_terms = np.sin(angles)
        k, a, b = self._k, self._a, self._b
        if order == 0:
            return self.a0 + cos_terms @ a + sin_terms @ b
        if order == 1:
            return cos_terms @ (k * b) - sin_terms @ (k * a)
        return -(cos_terms @ (k * k * a) + sin_terms @ (k * k * b))

    @property
    def lipschitz_bound(self) -> float:
        return float(np.sum(self._k * (np.abs(self._a) + np.abs(self._b))))

    def scaled(self, factor: float) -> "TrigPolynomial":
        return TrigPolynomial(
            a0=factor * self.a0,
            cos_coeffs=tuple(factor * self._a),
            sin_coeffs=tuple(factor * self._b),
        )

    def shifted(self, beta: float) -> "TrigPolynomial":
        kb = self._k * beta
        cos_kb, sin_kb = np.cos(kb), np.sin(kb)
        return TrigPolynomial(
            a0=self.a0,
            cos_coeffs=tuple(self._a * cos_kb + self._b * sin_kb),
            sin_coeffs=tuple(self._b * cos_kb - self._a * sin_kb),
        )

    def to_spec(self) -> dict:
        return {
            "type": self.kind,
            "a0": self.a0,
            "cos": list(self.cos_coeffs),
            "sin": list(self.sin_coeffs),
        }


@dataclass(frozen=True)
class PeriodicSpline(PeriodicFunction):
    """Periodic C^2 cubic interpolant through samples at theta_j = 2*pi*j/M."""
    values: tuple[float, ...] = ()
    lipschitz_safety: float = 1.05

    kind: ClassVar[str] = "samples"

    _spline: CubicSpline = field(init=False, repr=False, compare=False)
    _lipschitz: float = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if len(self.values) < 4:
            raise ValueError(f"periodic spline needs at least 4 samples, got {len(self.values)}")
        samples = np.asarray(self.values, dtype=float)
        knots = np.append(uniform_grid(len(samples)), TWO_PI)
        spline = CubicSpline(knots, np.append(samples, samples[0]), bc_type="periodic")
        object.__setattr__(self, "values", tuple(float(v) for v in samples))
        object.__setattr__(self, "_spline", spline)

        dense = uniform_grid(max(8192, 16 * len(samples)))
        slope_max = float(np.max(np.abs(spline(dense, 1))))
        object.__setattr__(self, "_lipschitz", slope_max * self.lipschitz_safety)

    @property
    def knot_count(self) -> int:
        return len(self.values)

    def _evaluate(self, theta: np.ndarray, order: int) -> np.ndarray:
        return self._spline(theta, order)

    @property
    def lipschitz_bound(self) -> float:
        return self._lipschitz

    def scaled(self, factor: float) -> "PeriodicSpline":
        return PeriodicSpline(
            values=tuple(factor * v for v in self.values),
            lipschitz_safety=self.lipschitz_safety,
        )

    def shifted(self, beta: float) -> "PeriodicSpline":
        # Exact only when beta is a multiple of the knot spacing
        resampled = self.evaluate(uniform_grid(self.knot_count) + beta)
        return PeriodicSpline(values=tuple(resampled), lipschitz_safety=self.lipschitz_safety)

    def to_spec(self) -> dict:
        return {"type": self.kind, "values": list(self.values)}


def extrema_lower_bound(
    phi: PeriodicFunction,
    psi: PeriodicFunction,
    n_samples: int = DEFAULT_SCAN,
) -> float:
    """
    max(|max phi - max psi|, |min phi - min psi|), a lower bound for the
    pseudo-distance under any rotation.
    """
    phi_min, phi_max = phi.value_range(n_samples)
    psi_min, psi_max = psi.value_range(n_samples)
    return max(abs(phi_max - psi_max), abs(phi_min - psi_min))


def critical_points(
    f: PeriodicFunction,
    tol: float = DEFAULT_CRITICAL_TOL,
    n_samples: Optional[int] = None,
) -> list[CriticalPoint]:
    """Functional form of PeriodicFunction.critical_points (strict)."""
    return f.critical_points(tol=tol, n_samples=n_samples or DEFAULT_SCAN)


def is_morse(f: PeriodicFunction, tol: float = DEFAULT_CRITICAL_TOL) -> MorseReport:
    """Functional form of PeriodicFunction.is_morse."""
    return f.is_morse(tol=tol)
