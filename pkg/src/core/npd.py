"""
Natural pseudo-distance between two periodic Morse functions under rotations.

d(phi, psi) = min over alpha of g(alpha), g(alpha) = max over theta of
|phi(theta) - psi(theta + alpha)|. A rigorous grid oracle brackets the
minimum; candidate rotations from the localization module and derivative-free
refinement sharpen it; every optimal rotation gets a certificate.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from src.core.angles import TWO_PI, wrap_angle, circular_distance, cluster_indices
from src.core.errors import (
    BranchTrackingUnstableError,
    DegenerateRootError,
    InconsistentOracleError,
    NoImprovementError,
    NotDifferentiableError,
    NotMorseError,
)
from src.core.localization import (
    CandidateRotation,
    OptimalityCertificate,
    RotationLocalizer,
)
from src.core.parallel import chunked_map
from src.core.periodic_function import (
    PeriodicFunction,
    extrema_lower_bound,
    roots_from_samples,
    refine_brackets,
    uniform_grid,
)
from src.core.settings import SolverSettings

logger = logging.getLogger(__name__)

# Above this many fine-grid samples the oracle evaluates psi directly
MAX_FINE_SAMPLES = 1 << 20

REFINE_OFFSETS = np.linspace(-1.0, 1.0, 9)


@dataclass(frozen=True)
class AlphaMaxResult:
    """g(alpha) = max_theta f_alpha(theta) and where it is attained."""
    alpha: float
    g_value: float
    argmax_set: tuple[float, ...]
    residuals: tuple[float, ...] = ()
    flat: bool = False

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "g": self.g_value,
            "argmax_set": list(self.argmax_set),
            "residuals": list(self.residuals),
            "flat": self.flat,
        }


@dataclass(frozen=True)
class Bracket:
    """Rigorous enclosure [lower, upper] of the distance."""
    lower: float
    upper: float

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def contains(self, value: float, slack: float = 0.0) -> bool:
        return self.lower - slack <= value <= self.upper + slack

    def to_dict(self) -> dict:
        return {"lower": self.lower, "upper": self.upper}


@dataclass(frozen=True)
class OracleResult:
    """Grid oracle output: the bracket plus the alpha cells that may hold a minimiser."""
    bracket: Bracket
    argmin_cells: tuple[float, ...]
    grid_maxima: np.ndarray = field(repr=False, compare=False)
    n_alpha: int = 0
    n_theta: int = 0

    def to_dict(self) -> dict:
        return {
            "lower": self.bracket.lower,
            "upper": self.bracket.upper,
            "argmin_cells": list(self.argmin_cells),
        }


@dataclass(frozen=True)
class ScoredCandidate:
    """A candidate rotation together with its profile value g(alpha)."""
    candidate: CandidateRotation
    g_value: float

    def to_dict(self) -> dict:
        data = self.candidate.to_dict()
        data["g"] = self.g_value
        return data


@dataclass(frozen=True)
class NpdResult:
    """Distance, its bracket, the finite set of optimal rotations and their certificates."""
    distance: float
    bracket: Bracket
    optimal_rotations: tuple[float, ...]
    certificates: tuple[OptimalityCertificate, ...]
    profile_resolution: int
    extrema_lower_bound: float = 0.0
    candidates: tuple[ScoredCandidate, ...] = ()

    def to_dict(self) -> dict:
        return {
            "distance": self.distance,
            "bracket": self.bracket.to_dict(),
            "optimal_alphas": list(self.optimal_rotations),
            "certificates": [c.to_dict() for c in self.certificates],
            "profile_resolution": self.profile_resolution,
            "extrema_lower_bound": self.extrema_lower_bound,
            "candidates": [c.to_dict() for c in self.candidates],
        }


@dataclass(frozen=True)
class _Minimiser:
    alpha: float
    g_value: float
    from_candidate: bool


class NpdSolver:
    """Evaluates F, g and the pseudo-distance for one ordered pair (phi, psi)."""

    def __init__(
        self,
        phi: PeriodicFunction,
        psi: PeriodicFunction,
        settings: Optional[SolverSettings] = None,
    ):
        """Initialize the solver for a pair of functions."""
        self.phi = phi
        self.psi = psi
        self.settings = settings or SolverSettings.load()
        self._phi_samples: dict[int, tuple[np.ndarray, np.ndarray]] = {}
        self._psi_fine: dict[int, np.ndarray] = {}

    # Pointwise mismatch

    def signed_gap(self, theta, alpha):
        """v(theta, alpha) = phi(theta) - psi(theta + alpha)."""
        return self.phi.evaluate(theta) - self.psi.evaluate(np.add(theta, alpha))

    def eval_F(self, theta, alpha):
        """F(theta, alpha) = |phi(theta) - psi(theta + alpha)|."""
        return abs(self.signed_gap(theta, alpha))

    def grad_F(self, theta: float, alpha: float) -> tuple[float, float]:
        """
        Gradient of F where F is smooth.

        Returns:
            (dF/dtheta, dF/dalpha)

        Raises:
            NotDifferentiableError: If F(theta, alpha) is at or below the smooth threshold
        """
        gap = float(self.signed_gap(theta, alpha))
        if abs(gap) <= self.settings.smooth_threshold:
            raise NotDifferentiableError(
                f"F({theta:.10g}, {alpha:.10g}) = {abs(gap):.3g} is too close to zero"
            )
        sign = math.copysign(1.0, gap)
        psi_slope = float(self.psi.derivative(theta + alpha, 1))
        phi_slope = float(self.phi.derivative(theta, 1))
        return sign * (phi_slope - psi_slope), -sign * psi_slope

    # Stationary points of theta -> v(theta, alpha)

    def _stationary_func(self, alpha):
        def h(theta):
            return self.phi.derivative(theta, 1) - self.psi.derivative(theta + alpha, 1)

        def dh(theta):
            return self.phi.derivative(theta, 2) - self.psi.derivative(theta + alpha, 2)

        return h, dh

    def stationary_thetas(self, alpha: float, n_theta: Optional[int] = None) -> np.ndarray:
        """Roots of phi'(theta) - psi'(theta + alpha) on [0, 2pi), sorted."""
        roots, _ = self.stationary_sets(np.array([alpha]), n_theta)
        return roots[0]

    def stationary_sets(
        self,
        alphas: np.ndarray,
        n_theta: Optional[int] = None,
    ) -> tuple[list[np.ndarray], np.ndarray]:
        """
        Root sets of phi'(theta) - psi'(theta + alpha) for many alphas at once.

        Args:
            alphas: Rotation angles
            n_theta: Scan resolution in theta

        Returns:
            (list of sorted root arrays, boolean mask of alphas where the
            difference vanishes identically)
        """
        n = self._check_resolution(n_theta or self.settings.n_theta, "n_theta")
        alphas = np.asarray(alphas, dtype=float)
        grid = uniform_grid(n)
        step = TWO_PI / n
        phi_slopes = self._phi_grid(n)[1]
        tol = self.settings.root_tol

        def scan(rows: np.ndarray):
            shifted = grid[None, :] + alphas[rows, None]
            slopes = phi_slopes[None, :] - self.psi.derivative(shifted, 1)
            flat = np.max(np.abs(slopes), axis=1) <= self.settings.sign_tol

            following = np.roll(slopes, -1, axis=1)
            r_idx, c_idx = np.nonzero((slopes * following < 0) & ~flat[:, None])
            shift = alphas[rows][r_idx]
            refined = refine_brackets(
                lambda t: self.phi.derivative(t, 1) - self.psi.derivative(t + shift, 1),
                lambda t: self.phi.derivative(t, 2) - self.psi.derivative(t + shift, 2),
                grid[c_idx],
                grid[c_idx] + step,
                tol,
            )
            z_idx, z_col = np.nonzero((slopes == 0) & ~flat[:, None])

            owners = np.concatenate([r_idx, z_idx])
            roots = wrap_angle(np.concatenate([refined, grid[z_col]]))
            per_row = []
            for r in range(len(rows)):
                row_roots = np.sort(np.atleast_1d(roots[owners == r]))
                if row_roots.size > 1:
                    keep = np.append(True, np.diff(row_roots) > 10 * tol)
                    row_roots = row_roots[keep]
                    if TWO_PI - row_roots[-1] + row_roots[0] <= 10 * tol:
                        row_roots = row_roots[:-1]
                per_row.append(row_roots)
            return per_row, flat

        parts = chunked_map(scan, len(alphas), self.settings.worker_count())
        roots = [r for part, _ in parts for r in part]
        flat = np.concatenate([f for _, f in parts]) if parts else np.zeros(0, dtype=bool)
        return roots, flat

    # The profile g

    def f_alpha_max(
        self,
        alpha: float,
        n_theta: Optional[int] = None,
        value_tol: float = 1e-12,
    ) -> AlphaMaxResult:
        """
        Maximise f_alpha(theta) = F(theta, alpha) over theta.

        Extrema of the signed gap v are roots of v'(theta) = phi'(theta) -
        psi'(theta + alpha); maxima of |v| are found among the maxima of v and
        of -v, so points where v is near zero never need a derivative of |v|.

        Args:
            alpha: Rotation angle
            n_theta: Scan resolution (at least 64)
            value_tol: Maximisers within this of the maximum form the argmax set

        Returns:
            AlphaMaxResult with g(alpha) and the argmax set Theta
        """
        n = self._check_resolution(n_theta or self.settings.n_theta, "n_theta")
        alpha = float(alpha)
        grid = uniform_grid(n)
        phi_values, phi_slopes = self._phi_grid(n)
        shifted = grid + alpha
        gap = phi_values - self.psi.evaluate(shifted)

        if np.ptp(gap) <= value_tol:
            return AlphaMaxResult(
                alpha=wrap_angle(alpha),
                g_value=float(np.max(np.abs(gap))),
                argmax_set=(0.0,),
                flat=True,
            )

        slopes = phi_slopes - self.psi.derivative(shifted, 1)
        h, dh = self._stationary_func(alpha)
        roots = roots_from_samples(h, dh, grid, slopes, self.settings.root_tol)

        # The best sample covers extrema that only touch zero in v'
        best_sample = grid[int(np.argmax(np.abs(gap)))]
        points = list(roots)
        if roots.size == 0 or np.min(circular_distance(roots, best_sample)) > 2 * TWO_PI / n:
            points.append(best_sample)

        points = np.asarray(points)
        values = np.abs(self.signed_gap(points, alpha))
        g_value = float(np.max(values))

        members = [
            (float(t), float(v)) for t, v in zip(points, values) if v >= g_value - value_tol
        ]
        argmax = []
        for group in cluster_indices([t for t, _ in members], self.settings.cluster_tol_fine):
            argmax.append(max((members[i] for i in group), key=lambda m: m[1])[0])
        argmax.sort()

        residuals = tuple(
            abs(float(h(t))) for t in argmax
            if abs(float(self.signed_gap(t, alpha))) > self.settings.smooth_threshold
        )

        return AlphaMaxResult(
            alpha=wrap_angle(alpha),
            g_value=g_value,
            argmax_set=tuple(argmax),
            residuals=residuals,
        )

    def g(self, alpha: float, n_theta: Optional[int] = None) -> float:
        """Shorthand for f_alpha_max(alpha).g_value."""
        return self.f_alpha_max(alpha, n_theta).g_value

    def profile(
        self,
        alphas: np.ndarray,
        n_theta: Optional[int] = None,
        chunk_size: int = 64,
    ) -> np.ndarray:
        """g evaluated at each alpha, chunk_size rotations per worker task."""
        alphas = np.asarray(alphas, dtype=float)

        def evaluate(rows: np.ndarray) -> np.ndarray:
            return np.array([self.g(alphas[r], n_theta) for r in rows])

        parts = chunked_map(evaluate, len(alphas), self.settings.worker_count(), chunk_size=chunk_size)
        return np.concatenate(parts) if parts else np.zeros(0)

    # Grid oracle

    def grid_oracle(self, n_alpha: Optional[int] = None, n_theta: Optional[int] = None) -> OracleResult:
        """
        Bracket the distance by brute force on an alpha x theta grid.

        G_j = max_i F(theta_i, alpha_j). A theta-grid maximum misses the true
        g(alpha_j) by at most (L(phi) + L(psi)) * pi / n_theta, and g is
        L(psi)-Lipschitz in alpha, so
            lower = min_j G_j - L(psi) * pi / n_alpha
            upper = min(min_j G_j + (L(phi) + L(psi)) * pi / n_theta, g(alpha_best))

        Args:
            n_alpha: Number of rotations sampled (at least 64)
            n_theta: Number of angles per rotation (at least 64)

        Returns:
            OracleResult with the bracket and every alpha cell whose grid maximum is
            within the bracket width of the minimum
        """
        n_alpha = self._check_resolution(n_alpha or self.settings.n_alpha, "n_alpha")
        n_theta = self._check_resolution(n_theta or self.settings.n_theta, "n_theta")

        alphas = uniform_grid(n_alpha)
        maxima = self._grid_maxima(n_alpha, n_theta)
        best = int(np.argmin(maxima))
        min_grid = float(maxima[best])

        theta_slack = (self.phi.lipschitz_bound + self.psi.lipschitz_bound) * math.pi / n_theta
        alpha_slack = self.psi.lipschitz_bound * math.pi / n_alpha

        lower = max(0.0, min_grid - alpha_slack)
        upper = min(min_grid + theta_slack, self.g(alphas[best], n_theta))
        upper = max(upper, lower)

        cells = alphas[maxima <= min_grid + theta_slack + alpha_slack]
        logger.info(
            f"Oracle {n_alpha}x{n_theta}: bracket [{lower:.10g}, {upper:.10g}], "
            f"{len(cells)} candidate cell(s)"
        )

        return OracleResult(
            bracket=Bracket(lower=lower, upper=upper),
            argmin_cells=tuple(float(a) for a in cells),
            grid_maxima=maxima,
            n_alpha=n_alpha,
            n_theta=n_theta,
        )

    def _grid_maxima(self, n_alpha: int, n_theta: int) -> np.ndarray:
        """max over the theta grid of F(theta_i, alpha_j), for every alpha_j."""
        phi_values = self._phi_grid(n_theta)[0]
        fine = math.lcm(n_alpha, n_theta)

        if fine <= MAX_FINE_SAMPLES:
            # Both grids nest in the fine grid, so psi(theta_i + alpha_j) is a lookup
            psi_fine = self._psi_on_fine_grid(fine)
            theta_idx = np.arange(n_theta) * (fine // n_theta)
            alpha_idx = np.arange(n_alpha) * (fine // n_alpha)

            def chunk_max(rows: np.ndarray) -> np.ndarray:
                idx = (alpha_idx[rows, None] + theta_idx[None, :]) % fine
                return np.max(np.abs(phi_values[None, :] - psi_fine[idx]), axis=1)
        else:
            theta = uniform_grid(n_theta)
            alphas = uniform_grid(n_alpha)

            def chunk_max(rows: np.ndarray) -> np.ndarray:
                shifted = theta[None, :] + alphas[rows, None]
                return np.max(np.abs(phi_values[None, :] - self.psi.evaluate(shifted)), axis=1)

        parts = chunked_map(chunk_max, n_alpha, self.settings.worker_count())
        return np.concatenate(parts)

    # Local refinement

    def refine_minimum(
        self,
        alpha0: float,
        radius: Optional[float] = None,
        tol: Optional[float] = None,
        n_theta: Optional[int] = None,
    ) -> tuple[float, float]:
        """
        Derivative-free refinement of a local minimum of g.

        Samples g on 9 equally spaced points of [center - radius, center + radius],
        re-centres on the best sample (the centroid of a run of exact ties) and
        halves the radius, until the radius drops below tol. When the best sample
        sits on the window edge the radius is kept so the window can travel.

        Args:
            alpha0: Starting rotation
            radius: Initial half-width (defaults to two oracle cells)
            tol: Final half-width (defaults to the refine tolerance)
            n_theta: Theta resolution for g

        Returns:
            (alpha_star, g_star)

        Raises:
            NoImprovementError: If the iteration budget runs out, or the final
                centre is worse than the best sample by more than tol
        """
        radius = radius if radius is not None else 2 * TWO_PI / self.settings.n_alpha
        tol = tol if tol is not None else self.settings.refine_tol
        center = float(alpha0)
        best_value = self.g(center, n_theta)

        for _ in range(self.settings.refine_max_iter):
            if radius < tol:
                break
            alphas = center + radius * REFINE_OFFSETS
            values = self.profile(alphas, n_theta, chunk_size=1)
            best = int(np.argmin(values))
            best_value = float(values[best])

            ties = values <= best_value + 4 * np.finfo(float).eps * max(1.0, abs(best_value))
            left, right = best, best
            while left > 0 and ties[left - 1]:
                left -= 1
            while right < len(values) - 1 and ties[right + 1]:
                right += 1
            center = float(np.mean(alphas[left:right + 1]))

            if best not in (0, len(values) - 1) or left != right:
                radius *= 0.5
        else:
            raise NoImprovementError(
                f"refinement from alpha={alpha0:.10g} did not converge in "
                f"{self.settings.refine_max_iter} iterations"
            )

        g_star = self.g(center, n_theta)
        if g_star > best_value + tol:
            raise NoImprovementError(
                f"g at refined centre {g_star:.12g} exceeds best sample {best_value:.12g}"
            )
        return wrap_angle(center), g_star

    # Full pipeline

    def compute(self, force: bool = False) -> NpdResult:
        """
        Compute the pseudo-distance, the optimal rotations and their certificates.

        Args:
            force: Skip the Morse precondition

        Returns:
            NpdResult

        Raises:
            NotMorseError: If an input is not Morse and force is False
            InconsistentOracleError: If the refined distance leaves the oracle bracket
        """
        settings = self.settings
        if not force:
            self._require_morse()

        oracle = self.grid_oracle()
        localizer = RotationLocalizer(self)
        candidates = self._collect_candidates(localizer)

        scored = [ScoredCandidate(c, self.g(c.alpha)) for c in candidates]
        seeds = self._seeds(oracle, scored)
        logger.info(f"Refining {len(seeds)} seed(s) from {len(scored)} candidate(s)")

        minimisers: list[_Minimiser] = []
        for alpha, radius, from_candidate in seeds:
            try:
                alpha_star, g_star = self.refine_minimum(alpha, radius)
            except NoImprovementError as e:
                logger.warning(f"Keeping unrefined seed {alpha:.10g}: {e}")
                alpha_star, g_star = wrap_angle(alpha), self.g(alpha)
            minimisers.append(_Minimiser(alpha_star, g_star, False))
            if from_candidate:
                minimisers.append(_Minimiser(wrap_angle(alpha), self.g(alpha), True))

        # The best grid cell bounds the distance from above whatever the seeds did
        best_cell = TWO_PI * int(np.argmin(oracle.grid_maxima)) / oracle.n_alpha
        minimisers.append(_Minimiser(best_cell, self.g(best_cell), False))

        distance = min(m.g_value for m in minimisers)
        optimal = self._cluster_optimal(minimisers, distance)

        if distance < settings.zero_threshold:
            matched = localizer.zero_distance_rotations()
            if matched:
                optimal = [_Minimiser(a, g, True) for a, g in matched]
                distance = min(distance, min(g for _, g in matched))

        distance = float(distance)
        if not oracle.bracket.contains(distance, slack=1e-12):
            raise InconsistentOracleError(
                f"refined distance {distance:.12g} outside oracle bracket "
                f"[{oracle.bracket.lower:.12g}, {oracle.bracket.upper:.12g}]"
            )

        rotations, certificates = self._certify_all(localizer, optimal)

        bound = extrema_lower_bound(self.phi, self.psi, settings.critical_scan)
        if distance < bound - 1e-9:
            logger.warning(f"Distance {distance:.12g} is below the extremal bound {bound:.12g}")

        logger.info(f"Distance {distance:.12g} at {len(rotations)} optimal rotation(s)")
        return NpdResult(
            distance=distance,
            bracket=oracle.bracket,
            optimal_rotations=tuple(rotations),
            certificates=tuple(certificates),
            profile_resolution=oracle.n_alpha,
            extrema_lower_bound=bound,
            candidates=tuple(scored),
        )

    def _require_morse(self):
        for name, f in (("phi", self.phi), ("psi", self.psi)):
            report = f.is_morse(tol=self.settings.morse_tol, n_samples=self.settings.critical_scan)
            if not report.morse:
                raise NotMorseError(f"{name} is not a Morse function", witnesses=report.witnesses)

    def _collect_candidates(self, localizer: RotationLocalizer) -> list[CandidateRotation]:
        candidates = []
        try:
            candidates.extend(localizer.candidates_critical_pairs())
        except DegenerateRootError as e:
            logger.warning(f"Skipping critical-pair candidates: {e}")
        try:
            candidates.extend(localizer.candidates_branch_crossings())
        except BranchTrackingUnstableError as e:
            logger.warning(f"Skipping branch-crossing candidates: {e}")
        return candidates

    def _seeds(
        self,
        oracle: OracleResult,
        scored: list[ScoredCandidate],
    ) -> list[tuple[float, float, bool]]:
        """(alpha, radius, from_candidate) starting points, one per coarse cluster."""
        settings = self.settings
        cell = TWO_PI / oracle.n_alpha
        seeds: list[tuple[float, float, bool, float]] = []

        # Best cell of each run of adjacent argmin cells
        cells = list(oracle.argmin_cells)
        for group in cluster_indices(cells, 1.5 * cell):
            run = [cells[i] for i in group]
            values = [oracle.grid_maxima[int(round(a / cell)) % oracle.n_alpha] for a in run]
            best = run[int(np.argmin(values))]
            seeds.append((best, 2 * cell, False, float(min(values))))

        for item in scored:
            if item.g_value <= oracle.bracket.upper + settings.optimal_value_tol:
                seeds.append((item.candidate.alpha, settings.cluster_tol_coarse, True, item.g_value))

        kept = []
        for group in cluster_indices([s[0] for s in seeds], settings.cluster_tol_coarse):
            members = [seeds[i] for i in group]
            # Candidates are exact; prefer them over grid cells
            members.sort(key=lambda s: (not s[2], s[3]))
            kept.append(members[0][:3])
        return kept

    def _cluster_optimal(self, minimisers: list[_Minimiser], distance: float) -> list[_Minimiser]:
        """Distinct rotations attaining the minimum, one representative each."""
        settings = self.settings
        attaining = [m for m in minimisers if m.g_value <= distance + settings.optimal_value_tol]
        eps = 4 * np.finfo(float).eps * max(1.0, abs(distance))

        def representative(members: list[_Minimiser]) -> _Minimiser:
            best = min(members, key=lambda m: m.g_value)
            exact = [m for m in members if m.from_candidate and m.g_value <= best.g_value + eps]
            return exact[0] if exact else best

        chosen = [
            representative([attaining[i] for i in group])
            for group in cluster_indices([m.alpha for m in attaining], settings.cluster_tol_fine)
        ]

        # Flat-bottomed minima can leave several refined points in one basin;
        # neighbours are merged when g stays optimal between them
        merged = True
        while merged and len(chosen) > 1:
            merged = False
            chosen.sort(key=lambda m: m.alpha)
            for i in range(len(chosen)):
                a, b = chosen[i], chosen[(i + 1) % len(chosen)]
                if circular_distance(a.alpha, b.alpha) > settings.cluster_tol_coarse:
                    continue
                midpoint = a.alpha + 0.5 * (wrap_angle(b.alpha - a.alpha + math.pi) - math.pi)
                if self.g(midpoint) <= distance + settings.optimal_value_tol:
                    chosen = [m for m in chosen if m is not a and m is not b]
                    chosen.append(representative([a, b]))
                    merged = True
                    break
        return chosen

    def _certify_all(
        self,
        localizer: RotationLocalizer,
        optimal: list[_Minimiser],
    ) -> tuple[list[float], list[OptimalityCertificate]]:
        """Certificates for each optimal rotation; uncertified ones are dropped."""
        tol = self.settings.certificate_tol
        pairs = []
        for m in sorted(optimal, key=lambda m: m.alpha):
            certificate = localizer.certify(m.alpha, m.g_value, tol)
            pairs.append((m.alpha, certificate))

        certified = [(a, c) for a, c in pairs if c.certified]
        if len(certified) < len(pairs):
            dropped = [a for a, c in pairs if not c.certified]
            logger.warning(f"Dropping {len(dropped)} uncertified rotation(s): {dropped}")
        if not certified:
            certified = pairs[:1]

        return [a for a, _ in certified], [c for _, c in certified]

    # Sample caches

    def _phi_grid(self, n: int) -> tuple[np.ndarray, np.ndarray]:
        if n not in self._phi_samples:
            grid = uniform_grid(n)
            self._phi_samples[n] = (self.phi.evaluate(grid), self.phi.derivative(grid, 1))
        return self._phi_samples[n]

    def _psi_on_fine_grid(self, fine: int) -> np.ndarray:
        if fine not in self._psi_fine:
            self._psi_fine[fine] = self.psi.evaluate(uniform_grid(fine))
        return self._psi_fine[fine]

    @staticmethod
    def _check_resolution(n: int, name: str) -> int:
        if n < 64:
            raise ValueError(f"{name} must be at least 64, got {n}")
        return int(n)


# Functional forms of the solver operations

def eval_F(phi: PeriodicFunction, psi: PeriodicFunction, theta: float, alpha: float) -> float:
    """|phi(theta) - psi(theta + alpha)|."""
    return float(abs(phi.evaluate(theta) - psi.evaluate(theta + alpha)))


def grad_F(phi: PeriodicFunction, psi: PeriodicFunction, theta: float, alpha: float) -> tuple[float, float]:
    return NpdSolver(phi, psi, SolverSettings()).grad_F(theta, alpha)


def f_alpha_max(
    phi: PeriodicFunction,
    psi: PeriodicFunction,
    alpha: float,
    n_theta: int = 4096,
) -> AlphaMaxResult:
    return NpdSolver(phi, psi, SolverSettings(n_theta=n_theta)).f_alpha_max(alpha)


def grid_oracle(
    phi: PeriodicFunction,
    psi: PeriodicFunction,
    n_alpha: int = 4096,
    n_theta: int = 4096,
) -> OracleResult:
    return NpdSolver(phi, psi, SolverSettings(n_alpha=n_alpha, n_theta=n_theta)).grid_oracle()


def refine_minimum(
    phi: PeriodicFunction,
    psi: PeriodicFunction,
    alpha0: float,
    radius: float,
    tol: float = 1e-10,
) -> tuple[float, float]:
    return NpdSolver(phi, psi, SolverSettings()).refine_minimum(alpha0, radius, tol)


def compute_npd(
    phi: PeriodicFunction,
    psi: PeriodicFunction,
    settings: Optional[SolverSettings] = None,
    force: bool = False,
) -> NpdResult:
    """Natural pseudo-distance between phi and psi under rotations of the circle."""
    return NpdSolver(phi, psi, settings).compute(force=force)
