"""Metric and optimality properties checked on random Morse pairs."""

import math

import numpy as np
import pytest

from src.core.angles import circular_distance
from src.core.localization import RotationLocalizer
from src.core.npd import NpdSolver, compute_npd
from src.core.periodic_function import extrema_lower_bound
from src.core.settings import SolverSettings
from tests.conftest import random_morse_pairs

FAST = SolverSettings(n_theta=2048, n_alpha=2048, branch_n_alpha=1024, critical_scan=2048)


def distance(phi, psi, settings=FAST):
    return compute_npd(phi, psi, settings).distance


@pytest.fixture(scope="module")
def computed():
    """(phi, psi, result) for fifty random pairs."""
    return [(phi, psi, compute_npd(phi, psi, FAST)) for phi, psi in random_morse_pairs(seed=2024, count=50)]


class TestAcceptance:
    """Every computed result is consistent with its own oracle and certificates."""

    def test_distance_in_bracket(self, computed):
        for _, _, result in computed:
            assert result.bracket.contains(result.distance, slack=1e-12)
            assert result.optimal_rotations

    def test_all_rotations_certified(self, computed):
        for _, _, result in computed:
            assert len(result.certificates) == len(result.optimal_rotations)
            assert all(c.certified for c in result.certificates)

    def test_lower_bounds(self, computed):
        """The extremal bound and the oracle lower end never exceed the distance."""
        for phi, psi, result in computed:
            assert result.distance >= extrema_lower_bound(phi, psi) - 1e-9
            assert result.distance >= result.bracket.lower

    def test_upper_bound_by_sampling(self, computed):
        """No random rotation beats the computed distance."""
        rng = np.random.default_rng(17)
        for phi, psi, result in computed[:20]:
            solver = NpdSolver(phi, psi, FAST)
            for alpha in rng.uniform(0, 2 * math.pi, 100):
                assert result.distance <= solver.g(alpha) + 1e-12

    def test_optimal_rotations_near_candidates(self, computed):
        """Every optimal rotation lies close to a critical-pair or crossing candidate."""
        for _, _, result in computed:
            alphas = [item.candidate.alpha for item in result.candidates]
            for alpha in result.optimal_rotations:
                assert min(circular_distance(alpha, a) for a in alphas) <= 1e-4

    def test_non_optimal_candidates_rejected(self, computed):
        """A candidate away from every optimal rotation is either worse than d or uncertified."""
        for phi, psi, result in computed[:20]:
            localizer = RotationLocalizer(NpdSolver(phi, psi, FAST))
            for item in result.candidates:
                alpha = item.candidate.alpha
                if min(circular_distance(alpha, b) for b in result.optimal_rotations) <= 1e-4:
                    continue
                if item.g_value > result.distance + FAST.optimal_value_tol:
                    continue
                assert not localizer.certify(alpha, item.g_value).certified


class TestMetricProperties:
    """Symmetry, invariance and the triangle inequality."""

    def test_symmetry(self, computed):
        """d(phi, psi) = d(psi, phi) and optimal rotations change sign."""
        for phi, psi, forward in computed[:20]:
            backward = compute_npd(psi, phi, FAST)
            assert backward.distance == pytest.approx(forward.distance, abs=1e-9)
            for alpha in forward.optimal_rotations:
                assert min(circular_distance(-alpha, b) for b in backward.optimal_rotations) <= 1e-7

    def test_rotation_equivariance(self, computed):
        """Shifting psi by beta keeps the distance and moves every optimal rotation by -beta."""
        rng = np.random.default_rng(4)
        for phi, psi, result in computed[:20]:
            beta = float(rng.uniform(0, 2 * math.pi))
            shifted = compute_npd(phi, psi.shifted(beta), FAST)
            assert shifted.distance == pytest.approx(result.distance, abs=1e-9)
            assert len(shifted.optimal_rotations) == len(result.optimal_rotations)
            for alpha in result.optimal_rotations:
                assert min(circular_distance(alpha - beta, b) for b in shifted.optimal_rotations) <= 1e-7

    @pytest.mark.parametrize("c", [-2.0, 0.5, 3.0])
    def test_scaling(self, computed, c):
        """d(c phi, c psi) = |c| d(phi, psi) with the same optimal rotations."""
        for phi, psi, result in computed[:20]:
            scaled = compute_npd(phi.scaled(c), psi.scaled(c), FAST)
            assert scaled.distance == pytest.approx(abs(c) * result.distance, abs=1e-9)
            assert len(scaled.optimal_rotations) == len(result.optimal_rotations)
            for alpha in result.optimal_rotations:
                assert min(circular_distance(alpha, b) for b in scaled.optimal_rotations) <= 1e-7

    def test_triangle_inequality(self):
        pairs = random_morse_pairs(seed=77, count=38)
        functions = [f for pair in pairs for f in pair]
        for i in range(25):
            phi, psi, chi = functions[3 * i], functions[3 * i + 1], functions[3 * i + 2]
            assert distance(phi, chi) <= distance(phi, psi) + distance(psi, chi) + 2e-6


class TestFiniteness:
    """The optimal set does not grow with the rotation grid."""

    def test_count_stable_under_refinement(self):
        coarse = SolverSettings(n_theta=2048, n_alpha=4096, branch_n_alpha=1024, critical_scan=2048)
        fine = coarse.with_overrides(n_alpha=8192)
        for phi, psi in random_morse_pairs(seed=31, count=20):
            a = compute_npd(phi, psi, coarse)
            b = compute_npd(phi, psi, fine)
            assert len(a.optimal_rotations) == len(b.optimal_rotations)
            assert a.distance == pytest.approx(b.distance, abs=1e-9)
