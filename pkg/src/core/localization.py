"""
Candidate optimal rotations and optimality certificates.

Candidates come from two necessary conditions on an optimal rotation: either
the realizing pair is a pair of critical points of phi and psi, or two
stationary branches of theta -> phi(theta) - psi(theta + alpha) reach equal
|gap| at alpha. Certificates check a claimed optimum against the first-order
conditions on F(theta, alpha) = |phi(theta) - psi(theta + alpha)|.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Optional, Union

import numpy as np

from src.core.angles import TWO_PI, wrap_angle, circular_distance, cluster_indices
from src.core.errors import (
    BranchTrackingUnstableError,
    NotDifferentiableError,
    ValueMismatchError,
)

if TYPE_CHECKING:
    from src.core.npd import NpdSolver
    from src.core.periodic_function import PeriodicFunction

logger = logging.getLogger(__name__)

NEWTON_STEPS = 6


# Candidate sources

@dataclass(frozen=True)
class CriticalPair:
    """theta1 critical for phi, theta2 critical for psi, alpha = theta2 - theta1."""
    theta1: float
    theta2: float

    def to_dict(self) -> dict:
        return {"type": "critical_pair", "theta1": self.theta1, "theta2": self.theta2}


@dataclass(frozen=True)
class BranchCrossing:
    """
    Two stationary points of the gap at the same rotation with equal |gap|.

    boundary marks crossings where a sign test product was within tolerance of
    zero; those are accepted rather than decided.
    """
    theta1: float
    theta2: float
    theta1_tilde: float
    theta2_tilde: float
    sign_case: str  # "same_sign" or "opposite_sign"
    boundary: bool = False

    def to_dict(self) -> dict:
        return {
            "type": "branch_crossing",
            "theta1": self.theta1,
            "theta2": self.theta2,
            "theta1_tilde": self.theta1_tilde,
            "theta2_tilde": self.theta2_tilde,
            "sign_case": self.sign_case,
            "boundary": self.boundary,
        }


CandidateSource = Union[CriticalPair, BranchCrossing]


@dataclass(frozen=True)
class CandidateRotation:
    """
    A rotation that may be optimal, with the witness that produced it.

    alternates holds further witnesses that produced the same rotation, each
    with its own value.
    """
    alpha: float
    source: CandidateSource
    candidate_value: float
    alternates: tuple[tuple[CandidateSource, float], ...] = ()

    @property
    def witnesses(self) -> list[tuple[CandidateSource, float]]:
        return [(self.source, self.candidate_value), *self.alternates]

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "source": self.source.to_dict(),
            "candidate_value": self.candidate_value,
            "alternates": [
                {"source": s.to_dict(), "candidate_value": v} for s, v in self.alternates
            ],
        }


# Certificate conditions

@dataclass(frozen=True)
class CriticalPointOfF:
    """The gradient of F vanishes at (theta, alpha)."""
    theta: float
    grad_residual: float

    def to_dict(self) -> dict:
        return {"type": "critical_point_of_F", "theta": self.theta, "grad_residual": self.grad_residual}


@dataclass(frozen=True)
class OppositeSigns:
    """Two maximizers whose dF/dalpha have opposite signs."""
    theta1: float
    theta2: float
    slope1: float
    slope2: float

    def to_dict(self) -> dict:
        return {
            "type": "opposite_signs",
            "theta1": self.theta1,
            "theta2": self.theta2,
            "slope1": self.slope1,
            "slope2": self.slope2,
        }


@dataclass(frozen=True)
class ZeroDistanceMatch:
    """psi(. + alpha) equals phi: every critical point of phi lands on one of psi."""
    pairs: tuple[tuple[float, float], ...]

    def to_dict(self) -> dict:
        return {"type": "zero_distance_match", "pairs": [list(p) for p in self.pairs]}


@dataclass(frozen=True)
class Uncertified:
    reason: str

    def to_dict(self) -> dict:
        return {"type": "uncertified", "reason": self.reason}


CertificateCondition = Union[CriticalPointOfF, OppositeSigns, ZeroDistanceMatch, Uncertified]


@dataclass(frozen=True)
class OptimalityCertificate:
    """Which necessary optimality condition a rotation satisfies."""
    alpha: float
    condition: CertificateCondition
    hessian_det: Optional[float] = None
    residuals: tuple[dict, ...] = field(default=())

    @property
    def certified(self) -> bool:
        return not isinstance(self.condition, Uncertified)

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "condition": self.condition.to_dict(),
            "hessian_det": self.hessian_det,
            "residuals": list(self.residuals),
        }


class RotationLocalizer:
    """Candidate enumeration and certification on top of an NpdSolver."""

    def __init__(self, solver: "NpdSolver"):
        self.solver = solver
        self.phi = solver.phi
        self.psi = solver.psi
        self.settings = solver.settings

    def _critical_points(self):
        scan = self.settings.critical_scan
        tol = self.settings.morse_tol
        return (
            self.phi.critical_points(tol=tol, n_samples=scan),
            self.psi.critical_points(tol=tol, n_samples=scan),
        )

    # Critical pairs

    def candidates_critical_pairs(self) -> list[CandidateRotation]:
        """
        One candidate per distinct alpha = c2 - c1 over critical points c1 of phi
        and c2 of psi.

        Witnesses landing on the same alpha are merged; the primary witness is
        the one with the largest value.

        Raises:
            DegenerateRootError: If either function has a degenerate critical point
        """
        phi_points, psi_points = self._critical_points()

        raw = []
        for c1 in phi_points:
            for c2 in psi_points:
                alpha = wrap_angle(c2.theta - c1.theta)
                value = abs(c1.value - c2.value)
                raw.append((alpha, CriticalPair(c1.theta, c2.theta), value))

        candidates = []
        for group in cluster_indices([r[0] for r in raw], self.settings.cluster_tol_fine):
            members = sorted((raw[i] for i in group), key=lambda r: -r[2])
            alpha, source, value = members[0]
            candidates.append(CandidateRotation(
                alpha=alpha,
                source=source,
                candidate_value=value,
                alternates=tuple((s, v) for _, s, v in members[1:]),
            ))

        candidates.sort(key=lambda c: c.alpha)
        logger.info(f"{len(candidates)} critical-pair candidate(s) from {len(raw)} pair(s)")
        return candidates

    def critical_value_table(self) -> list[float]:
        """Sorted distinct values |phi(c1) - psi(c2)| over all critical pairs."""
        phi_points, psi_points = self._critical_points()
        values = sorted(abs(c1.value - c2.value) for c1 in phi_points for c2 in psi_points)
        distinct: list[float] = []
        for v in values:
            if not distinct or v - distinct[-1] > self.settings.cluster_tol_fine:
                distinct.append(v)
        return distinct

    def zero_distance_rotations(self) -> list[tuple[float, float]]:
        """Critical-pair rotations where g vanishes to within the match tolerance."""
        matched = []
        for candidate in self.candidates_critical_pairs():
            g_value = self.solver.g(candidate.alpha)
            if g_value <= self.settings.zero_match_tol:
                matched.append((candidate.alpha, g_value))
        return matched

    # Branch crossings

    def candidates_branch_crossings(self, n_alpha: Optional[int] = None) -> list[CandidateRotation]:
        """
        Rotations where two stationary branches of the gap have equal |gap|.

        Root sets of h(theta) = phi'(theta) - psi'(theta + alpha) are scanned on an
        alpha grid, linked between neighbouring alphas by mutual nearest
        neighbours, and every sign change of |v_i| - |v_j| between linked branches
        is bisected in alpha with the roots re-solved by Newton's method.

        Args:
            n_alpha: Alpha grid size (at least 256)

        Returns:
            Candidates sorted by alpha

        Raises:
            BranchTrackingUnstableError: If root counts change on more than one
                step in eight around the circle
        """
        settings = self.settings
        n_alpha = n_alpha or settings.branch_n_alpha
        if n_alpha < 256:
            raise ValueError(f"n_alpha must be at least 256, got {n_alpha}")

        alphas = np.append(TWO_PI * np.arange(n_alpha) / n_alpha, TWO_PI)
        roots, flat = self.solver.stationary_sets(alphas[:-1])
        roots.append(roots[0])
        flat = np.append(flat, flat[0])

        counts = [len(r) for r, f in zip(roots[:-1], flat[:-1]) if not f]
        changes = sum(1 for a, b in zip(counts, counts[1:] + counts[:1]) if a != b)
        if changes > n_alpha / 8:
            raise BranchTrackingUnstableError(
                f"stationary-point count changed {changes} times over {n_alpha} rotations"
            )

        cap = 3.0 * self._median_spacing(roots[:-1])
        brackets = []
        for j in range(n_alpha):
            if flat[j] or flat[j + 1]:
                continue
            links = self._link(roots[j], roots[j + 1], cap)
            if len(links) < 2:
                continue
            brackets.extend(self._crossing_brackets(alphas[j], alphas[j + 1], roots[j], roots[j + 1], links))

        found = self._refine_crossings(brackets) if brackets else []
        for j in np.nonzero(flat[:-1])[0]:
            found.append(self._flat_crossing(float(alphas[j])))

        logger.info(f"{len(found)} branch-crossing candidate(s) from {len(brackets)} bracket(s)")
        return self._dedupe_crossings(found)

    @staticmethod
    def _median_spacing(roots: list[np.ndarray]) -> float:
        gaps = []
        for r in roots:
            if len(r) >= 2:
                gaps.append(np.diff(np.append(r, r[0] + TWO_PI)))
        if not gaps:
            return math.pi
        return float(np.median(np.concatenate(gaps)))

    @staticmethod
    def _link(a: np.ndarray, b: np.ndarray, cap: float) -> list[tuple[int, int]]:
        """Mutual nearest neighbours between consecutive root sets, within cap."""
        if len(a) == 0 or len(b) == 0:
            return []
        dist = circular_distance(a[:, None], b[None, :])
        nearest_b = np.argmin(dist, axis=1)
        nearest_a = np.argmin(dist, axis=0)
        return [
            (i, int(k)) for i, k in enumerate(nearest_b)
            if nearest_a[k] == i and dist[i, k] <= cap
        ]

    def _crossing_brackets(self, alpha_lo, alpha_hi, roots_lo, roots_hi, links):
        tol = self.settings.root_tol
        i_lo = np.array([i for i, _ in links])
        i_hi = np.array([k for _, k in links])
        v_lo = np.abs(self.solver.signed_gap(roots_lo[i_lo], alpha_lo))
        v_hi = np.abs(self.solver.signed_gap(roots_hi[i_hi], alpha_hi))

        p, q = np.triu_indices(len(links), k=1)
        d_lo = v_lo[p] - v_lo[q]
        d_hi = v_hi[p] - v_hi[q]
        d_lo = np.where(np.abs(d_lo) <= tol, 0.0, d_lo)
        d_hi = np.where(np.abs(d_hi) <= tol, 0.0, d_hi)
        crossing = (np.sign(d_lo) != np.sign(d_hi)) & ~((d_lo == 0) & (d_hi == 0))

        return [
            (
                alpha_lo, alpha_hi,
                roots_lo[i_lo[a]], roots_hi[i_hi[a]],
                roots_lo[i_lo[b]], roots_hi[i_hi[b]],
            )
            for a, b in zip(p[crossing], q[crossing])
        ]

    def _newton_stationary(self, theta: np.ndarray, alpha: np.ndarray) -> np.ndarray:
        """Polish roots of phi'(theta) - psi'(theta + alpha) near theta."""
        for _ in range(NEWTON_STEPS):
            h = self.phi.derivative(theta, 1) - self.psi.derivative(theta + alpha, 1)
            dh = self.phi.derivative(theta, 2) - self.psi.derivative(theta + alpha, 2)
            with np.errstate(divide="ignore", invalid="ignore"):
                step = np.where(np.abs(dh) > 0, h / dh, 0.0)
            theta = theta - np.clip(step, -0.1, 0.1)
        return theta

    def _gap_difference(self, theta_p, theta_q, alpha):
        return np.abs(self.solver.signed_gap(theta_p, alpha)) - np.abs(self.solver.signed_gap(theta_q, alpha))

    def _refine_crossings(self, brackets: list[tuple]) -> list[CandidateRotation]:
        """Bisect |v_p| - |v_q| in alpha for every bracket at once."""
        data = np.array(brackets, dtype=float)
        a_lo, a_hi = data[:, 0].copy(), data[:, 1].copy()
        p_lo, p_hi, q_lo, q_hi = (data[:, k].copy() for k in range(2, 6))

        # Unwrap the theta end points so interpolation never crosses 0 == 2pi
        p_hi = p_lo + _signed_arc(p_lo, p_hi)
        q_hi = q_lo + _signed_arc(q_lo, q_hi)
        d_lo = self._gap_difference(p_lo, q_lo, a_lo)

        tol = self.settings.root_tol
        for _ in range(self.settings.refine_max_iter):
            if np.all(a_hi - a_lo <= tol):
                break
            a_mid = 0.5 * (a_lo + a_hi)
            p_mid = self._newton_stationary(0.5 * (p_lo + p_hi), a_mid)
            q_mid = self._newton_stationary(0.5 * (q_lo + q_hi), a_mid)
            d_mid = self._gap_difference(p_mid, q_mid, a_mid)

            same = np.sign(d_mid) == np.sign(d_lo)
            a_lo = np.where(same, a_mid, a_lo)
            p_lo = np.where(same, p_mid, p_lo)
            q_lo = np.where(same, q_mid, q_lo)
            d_lo = np.where(same, d_mid, d_lo)
            a_hi = np.where(same, a_hi, a_mid)
            p_hi = np.where(same, p_hi, p_mid)
            q_hi = np.where(same, q_hi, q_mid)

        alpha = 0.5 * (a_lo + a_hi)
        theta_p = self._newton_stationary(0.5 * (p_lo + p_hi), alpha)
        theta_q = self._newton_stationary(0.5 * (q_lo + q_hi), alpha)

        candidates = []
        for a, tp, tq in zip(alpha, theta_p, theta_q):
            candidate = self._crossing_candidate(float(a), float(tp), float(tq))
            if candidate is not None:
                candidates.append(candidate)
        return candidates

    def _crossing_candidate(self, alpha: float, theta_p: float, theta_q: float) -> Optional[CandidateRotation]:
        """Validate a refined crossing and apply the sign conditions."""
        settings = self.settings
        witness_tol = settings.sign_tol
        h = lambda t: float(self.phi.derivative(t, 1) - self.psi.derivative(t + alpha, 1))

        if circular_distance(theta_p, theta_q) <= settings.cluster_tol_fine:
            return None
        v_p = float(self.solver.signed_gap(theta_p, alpha))
        v_q = float(self.solver.signed_gap(theta_q, alpha))
        if abs(h(theta_p)) > witness_tol or abs(h(theta_q)) > witness_tol:
            return None
        if abs(abs(v_p) - abs(v_q)) > witness_tol:
            return None

        gap_product = v_p * v_q
        slope_product = float(self.phi.derivative(theta_p, 1) * self.phi.derivative(theta_q, 1))
        boundary = abs(gap_product) <= settings.sign_tol or abs(slope_product) <= settings.sign_tol
        if gap_product >= 0:
            sign_case = "same_sign"
            holds = slope_product < 0
        else:
            sign_case = "opposite_sign"
            holds = slope_product > 0
        if not (holds or boundary):
            return None

        theta_p, theta_q = wrap_angle(theta_p), wrap_angle(theta_q)
        return CandidateRotation(
            alpha=wrap_angle(alpha),
            source=BranchCrossing(
                theta1=theta_p,
                theta2=wrap_angle(theta_p + alpha),
                theta1_tilde=theta_q,
                theta2_tilde=wrap_angle(theta_q + alpha),
                sign_case=sign_case,
                boundary=boundary,
            ),
            candidate_value=abs(v_p),
        )

    def _flat_crossing(self, alpha: float) -> CandidateRotation:
        """At a rotation where the gap is constant every pair of points crosses."""
        grid = TWO_PI * np.arange(self.settings.n_theta) / self.settings.n_theta
        slopes = self.phi.derivative(grid, 1)
        theta_p = float(grid[int(np.argmax(slopes))])
        theta_q = float(grid[int(np.argmin(slopes))])
        v_p = float(self.solver.signed_gap(theta_p, alpha))
        v_q = float(self.solver.signed_gap(theta_q, alpha))
        return CandidateRotation(
            alpha=wrap_angle(alpha),
            source=BranchCrossing(
                theta1=theta_p,
                theta2=wrap_angle(theta_p + alpha),
                theta1_tilde=theta_q,
                theta2_tilde=wrap_angle(theta_q + alpha),
                sign_case="same_sign" if v_p * v_q >= 0 else "opposite_sign",
                boundary=True,
            ),
            candidate_value=abs(v_p),
        )

    def _dedupe_crossings(self, found: list[CandidateRotation]) -> list[CandidateRotation]:
        """Drop repeats of the same crossing (same alpha and the same pair of angles)."""
        tol = self.settings.cluster_tol_fine
        kept: list[CandidateRotation] = []
        for candidate in sorted(found, key=lambda c: c.alpha):
            source = candidate.source
            pair = {source.theta1, source.theta1_tilde}
            duplicate = any(
                circular_distance(candidate.alpha, k.alpha) <= tol
                and all(
                    min(circular_distance(t, u) for u in (k.source.theta1, k.source.theta1_tilde)) <= tol
                    for t in pair
                )
                for k in kept
            )
            if not duplicate:
                kept.append(candidate)
        return kept

    # Certificates and diagnostics

    def certify(self, alpha: float, claimed_d: float, tol: Optional[float] = None) -> OptimalityCertificate:
        """
        Check a claimed optimum against the first-order optimality conditions.

        Args:
            alpha: Claimed optimal rotation
            claimed_d: Claimed distance
            tol: Certificate tolerance

        Returns:
            OptimalityCertificate; Uncertified when no condition holds

        Raises:
            ValueMismatchError: If claimed_d differs from g(alpha) by more than tol
        """
        tol = tol if tol is not None else self.settings.certificate_tol
        alpha = wrap_angle(alpha)
        result = self.solver.f_alpha_max(alpha, value_tol=tol)
        if abs(result.g_value - claimed_d) > tol:
            raise ValueMismatchError(
                f"g({alpha:.10g}) = {result.g_value:.12g} differs from claimed {claimed_d:.12g}"
            )

        if claimed_d < self.settings.zero_threshold:
            return self._zero_certificate(alpha, tol)

        thetas = list(result.argmax_set)
        if result.flat:
            # Constant nonzero gap: theta is free, dF/dalpha vanishes where psi' does
            _, psi_points = self._critical_points()
            thetas = sorted(wrap_angle(p.theta - alpha) for p in psi_points)

        rows = []
        for theta in thetas:
            try:
                d_theta, d_alpha = self.solver.grad_F(theta, alpha)
            except NotDifferentiableError:
                continue
            rows.append({
                "theta": theta,
                "dF_dtheta": d_theta,
                "dF_dalpha": d_alpha,
                "grad_residual": max(abs(d_theta), abs(d_alpha)),
            })

        condition, at_theta = self._condition(rows, tol)
        hessian_det = None
        if at_theta is not None:
            _, hessian_det = self.hessian_F(at_theta, alpha)
            if abs(hessian_det) < self.settings.degeneracy_tol:
                logger.warning(
                    f"Near-zero Hessian determinant {hessian_det:.3g} at alpha={alpha:.10g}"
                )

        return OptimalityCertificate(
            alpha=alpha,
            condition=condition,
            hessian_det=hessian_det,
            residuals=tuple(rows),
        )

    @staticmethod
    def _condition(rows: list[dict], tol: float) -> tuple[CertificateCondition, Optional[float]]:
        if not rows:
            return Uncertified("no differentiable maximizer"), None

        if len(rows) == 1:
            row = rows[0]
            if row["grad_residual"] <= tol:
                return CriticalPointOfF(row["theta"], row["grad_residual"]), row["theta"]
            return Uncertified(
                f"single maximizer with gradient residual {row['grad_residual']:.3g}"
            ), None

        for i, first in enumerate(rows):
            for second in rows[i + 1:]:
                slopes = (first["dF_dalpha"], second["dF_dalpha"])
                if slopes[0] * slopes[1] < 0 and min(abs(s) for s in slopes) > tol:
                    return OppositeSigns(
                        theta1=first["theta"],
                        theta2=second["theta"],
                        slope1=first["dF_dalpha"],
                        slope2=second["dF_dalpha"],
                    ), first["theta"]

        for row in rows:
            if row["grad_residual"] <= tol:
                return CriticalPointOfF(row["theta"], row["grad_residual"]), row["theta"]

        return Uncertified(
            f"{len(rows)} maximizers, none critical and no opposite dF/dalpha signs"
        ), None

    def _zero_certificate(self, alpha: float, tol: float) -> OptimalityCertificate:
        """psi(theta + alpha) = phi(theta) forces critical points to correspond."""
        phi_points, psi_points = self._critical_points()
        pairs = []
        # A value error of tol moves a nondegenerate critical point by about sqrt(tol)
        for c1 in phi_points:
            image = wrap_angle(c1.theta + alpha)
            match = next(
                (
                    c2 for c2 in psi_points
                    if circular_distance(image, c2.theta) <= math.sqrt(tol)
                    and abs(c1.value - c2.value) <= tol
                ),
                None,
            )
            if match is None:
                return OptimalityCertificate(
                    alpha=alpha,
                    condition=Uncertified(f"critical point {c1.theta:.10g} of phi has no match"),
                )
            pairs.append((c1.theta, match.theta))

        if len(pairs) != len(psi_points):
            return OptimalityCertificate(
                alpha=alpha,
                condition=Uncertified(
                    f"{len(phi_points)} critical points of phi against {len(psi_points)} of psi"
                ),
            )
        return OptimalityCertificate(alpha=alpha, condition=ZeroDistanceMatch(tuple(pairs)))

    def hessian_F(self, theta: float, alpha: float) -> tuple[np.ndarray, float]:
        """
        Hessian of F at a point where F is smooth.

        Returns:
            (2x2 matrix in (theta, alpha) order, determinant)

        Raises:
            NotDifferentiableError: If F(theta, alpha) is at or below the smooth threshold
        """
        gap = float(self.solver.signed_gap(theta, alpha))
        if abs(gap) <= self.settings.smooth_threshold:
            raise NotDifferentiableError(
                f"F({theta:.10g}, {alpha:.10g}) = {abs(gap):.3g} is too close to zero"
            )
        sign = math.copysign(1.0, gap)
        phi_curv = float(self.phi.derivative(theta, 2))
        psi_curv = float(self.psi.derivative(theta + alpha, 2))

        matrix = sign * np.array([
            [phi_curv - psi_curv, -psi_curv],
            [-psi_curv, -psi_curv],
        ])
        det = float(matrix[0, 0] * matrix[1, 1] - matrix[0, 1] * matrix[1, 0])
        return matrix, det


def _signed_arc(start: np.ndarray, end: np.ndarray) -> np.ndarray:
    """Signed shortest arc from start to end, in (-pi, pi]."""
    return np.mod(end - start + math.pi, TWO_PI) - math.pi


# Functional forms

def _localizer(phi: "PeriodicFunction", psi: "PeriodicFunction") -> RotationLocalizer:
    from src.core.npd import NpdSolver

    return RotationLocalizer(NpdSolver(phi, psi))


def candidates_critical_pairs(phi: "PeriodicFunction", psi: "PeriodicFunction") -> list[CandidateRotation]:
    return _localizer(phi, psi).candidates_critical_pairs()


def candidates_branch_crossings(
    phi: "PeriodicFunction",
    psi: "PeriodicFunction",
    n_alpha: int = 4096,
) -> list[CandidateRotation]:
    return _localizer(phi, psi).candidates_branch_crossings(n_alpha)


def certify(
    phi: "PeriodicFunction",
    psi: "PeriodicFunction",
    alpha: float,
    claimed_d: float,
    tol: float = 1e-6,
) -> OptimalityCertificate:
    return _localizer(phi, psi).certify(alpha, claimed_d, tol)


def hessian_F(
    phi: "PeriodicFunction",
    psi: "PeriodicFunction",
    theta: float,
    alpha: float,
) -> tuple[np.ndarray, float]:
    return _localizer(phi, psi).hessian_F(theta, alpha)
