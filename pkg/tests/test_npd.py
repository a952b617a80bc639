"""Tests for the pseudo-distance solver."""

import math
from dataclasses import replace
from unittest.mock import patch

import numpy as np
import pytest

from src.core.angles import circular_distance
from src.core.errors import (
    InconsistentOracleError,
    NoImprovementError,
    NotDifferentiableError,
    NotMorseError,
)
from src.core.npd import (
    Bracket,
    NpdSolver,
    compute_npd,
    eval_F,
    f_alpha_max,
    grad_F,
    grid_oracle,
    refine_minimum,
)
from src.core.periodic_function import TrigPolynomial, uniform_grid
from src.core.settings import SolverSettings
from tests.conftest import (
    EXAMPLE3_DISTANCE,
    example3_pair,
    random_morse_pairs,
)

HALF_PI = math.pi / 2


def assert_same_angles(actual, expected, tol):
    assert len(actual) == len(expected)
    for a in expected:
        assert min(circular_distance(a, b) for b in actual) <= tol


@pytest.fixture(scope="module")
def example3_result():
    phi, psi = example3_pair()
    return compute_npd(phi, psi, SolverSettings())


class TestEvalF:
    """Tests for F and its gradient."""

    def test_example3_value(self, example3):
        """F(2pi/3, 0) = 3 sqrt(3) / 4."""
        phi, psi = example3
        assert eval_F(phi, psi, 2 * math.pi / 3, 0.0) == pytest.approx(EXAMPLE3_DISTANCE, abs=1e-12)

    def test_identical_functions(self, sine):
        """F vanishes for identical functions at alpha = 0."""
        assert eval_F(sine, sine, 1.234, 0.0) == 0.0

    def test_example1_value(self, example1):
        """F(pi, 0) = |1/2 - 1|."""
        phi, psi = example1
        assert eval_F(phi, psi, math.pi, 0.0) == pytest.approx(0.5)

    def test_signed_gap(self, example3_solver):
        """The signed branch keeps the sign of phi - psi."""
        assert example3_solver.signed_gap(2 * math.pi / 3, 0.0) == pytest.approx(-EXAMPLE3_DISTANCE)
        assert example3_solver.signed_gap(4 * math.pi / 3, 0.0) == pytest.approx(EXAMPLE3_DISTANCE)

    def test_grad_example1(self, example1):
        """The realizing point (pi, 0) is a critical point of F."""
        phi, psi = example1
        d_theta, d_alpha = grad_F(phi, psi, math.pi, 0.0)
        assert d_theta == pytest.approx(0.0, abs=1e-15)
        assert d_alpha == pytest.approx(0.0, abs=1e-15)

    @pytest.mark.parametrize("theta,expected", [
        (2 * math.pi / 3, (0.0, -0.5)),
        (4 * math.pi / 3, (0.0, 0.5)),
    ])
    def test_grad_example3(self, example3, theta, expected):
        """dF/dalpha has opposite signs at the two maximizers."""
        phi, psi = example3
        d_theta, d_alpha = grad_F(phi, psi, theta, 0.0)
        assert d_theta == pytest.approx(expected[0], abs=1e-12)
        assert d_alpha == pytest.approx(expected[1], abs=1e-12)

    def test_grad_not_differentiable(self, sine):
        """F = 0 has no gradient."""
        with pytest.raises(NotDifferentiableError):
            grad_F(sine, sine, 0.5, 0.0)


class TestAlphaMax:
    """Tests for g(alpha) and its argmax set."""

    def test_example3_at_zero(self, example3):
        """g(0) = 3 sqrt(3) / 4, attained at 2pi/3 and 4pi/3."""
        phi, psi = example3
        result = f_alpha_max(phi, psi, 0.0)
        assert result.g_value == pytest.approx(EXAMPLE3_DISTANCE, abs=1e-12)
        assert result.argmax_set == pytest.approx([2 * math.pi / 3, 4 * math.pi / 3], abs=1e-10)
        assert max(result.residuals) <= 1e-12
        assert not result.flat

    @pytest.mark.parametrize("k", [1, 3, 5, 7])
    def test_example3_odd_quarter_turns(self, example3, k):
        """g = 3/2 at odd multiples of pi/4, above the distance."""
        phi, psi = example3
        result = f_alpha_max(phi, psi, k * math.pi / 4)
        assert result.g_value == pytest.approx(1.5, abs=1e-8)
        assert result.g_value > EXAMPLE3_DISTANCE

    def test_identical_functions_are_flat(self, sine):
        """f_0 vanishes identically."""
        result = f_alpha_max(sine, sine, 0.0)
        assert result.g_value == 0.0
        assert result.flat
        assert result.argmax_set == (0.0,)

    def test_argmax_invariants(self):
        """Members of the argmax set attain g and are pairwise separated."""
        rng = np.random.default_rng(21)
        for phi, psi in random_morse_pairs(seed=21, count=8):
            solver = NpdSolver(phi, psi, SolverSettings())
            for alpha in rng.uniform(0, 2 * math.pi, 5):
                result = solver.f_alpha_max(alpha)
                assert result.argmax_set
                for theta in result.argmax_set:
                    assert abs(solver.eval_F(theta, alpha) - result.g_value) <= 1e-12
                thetas = sorted(result.argmax_set)
                for a, b in zip(thetas, thetas[1:]):
                    assert circular_distance(a, b) > 1e-7

    def test_not_below_dense_scan(self):
        """g is at least the maximum of F on a much finer grid."""
        rng = np.random.default_rng(4)
        theta = uniform_grid(1 << 16)
        for phi, psi in random_morse_pairs(seed=4, count=5):
            solver = NpdSolver(phi, psi, SolverSettings())
            alpha = float(rng.uniform(0, 2 * math.pi))
            dense = np.max(np.abs(phi.evaluate(theta) - psi.evaluate(theta + alpha)))
            assert solver.g(alpha) >= dense - 1e-12

    def test_rejects_coarse_grid(self, example3):
        """n_theta below 64 is invalid."""
        phi, psi = example3
        with pytest.raises(ValueError):
            NpdSolver(phi, psi, SolverSettings()).f_alpha_max(0.0, n_theta=32)

    def test_profile_matches_pointwise(self, example3_solver):
        """The batched profile equals g at each alpha."""
        alphas = np.array([0.0, math.pi / 4, 1.0])
        profile = example3_solver.profile(alphas)
        assert profile == pytest.approx([example3_solver.g(a) for a in alphas], abs=0)


class TestStationaryThetas:
    """Tests for roots of phi'(theta) - psi'(theta + alpha)."""

    def test_example3_closed_form_branches(self, example3_solver):
        """Roots are alpha and -alpha/3 + 2pi k/3 away from branch merges."""
        rng = np.random.default_rng(2024)
        checked = 0
        while checked < 32:
            alpha = float(rng.uniform(0, 2 * math.pi))
            # Two branches meet at multiples of pi/2
            if min(abs(alpha - k * HALF_PI) for k in range(5)) < 0.05:
                continue
            expected = np.sort(np.mod(
                [alpha, -alpha / 3, -alpha / 3 + 2 * math.pi / 3, -alpha / 3 + 4 * math.pi / 3],
                2 * math.pi,
            ))
            roots = example3_solver.stationary_thetas(alpha)
            assert len(roots) == 4
            assert np.max(circular_distance(roots, expected)) <= 1e-8
            checked += 1

    def test_batched_matches_single(self, example3_solver):
        """Root sets from one batch equal the per-alpha query."""
        alphas = np.array([0.3, 1.1, 2.9])
        batch, flat = example3_solver.stationary_sets(alphas)
        assert not flat.any()
        for alpha, roots in zip(alphas, batch):
            assert np.allclose(roots, example3_solver.stationary_thetas(alpha), rtol=0, atol=1e-13)

    def test_flat_rotation(self, sine):
        """Identical functions have no isolated stationary points at alpha = 0."""
        solver = NpdSolver(sine, sine, SolverSettings())
        roots, flat = solver.stationary_sets(np.array([0.0, 1.0]))
        assert flat.tolist() == [True, False]
        assert len(roots[1]) == 2


class TestGridOracle:
    """Tests for the rigorous grid bracket."""

    def test_identical_functions(self, sine):
        """The bracket is [0, 0] and alpha = 0 is an argmin cell."""
        oracle = grid_oracle(sine, sine, 256, 256)
        assert oracle.bracket.lower == 0.0
        assert oracle.bracket.upper == pytest.approx(0.0, abs=1e-15)
        assert 0.0 in oracle.argmin_cells

    def test_example3(self, example3):
        """The bracket contains 3 sqrt(3) / 4 with width below 0.01."""
        phi, psi = example3
        oracle = grid_oracle(phi, psi, 4096, 4096)
        assert oracle.bracket.lower <= EXAMPLE3_DISTANCE <= oracle.bracket.upper
        assert oracle.bracket.width < 0.01
        for alpha in (0.0, HALF_PI, math.pi, 3 * HALF_PI):
            assert min(circular_distance(alpha, c) for c in oracle.argmin_cells) <= 2 * math.pi / 4096

    def test_example1(self, example1):
        """The bracket contains 1/2."""
        phi, psi = example1
        oracle = grid_oracle(phi, psi, 1024, 1024)
        assert oracle.bracket.lower <= 0.5 <= oracle.bracket.upper

    def test_unequal_grids(self, example3):
        """Grids whose common refinement is too large are evaluated directly."""
        phi, psi = example3
        oracle = grid_oracle(phi, psi, 1031, 1024)
        assert oracle.bracket.lower <= EXAMPLE3_DISTANCE <= oracle.bracket.upper

    def test_deterministic_across_threads(self, example3):
        """Thread count does not change the grid maxima."""
        phi, psi = example3
        serial = NpdSolver(phi, psi, SolverSettings(n_alpha=1024, n_theta=1024, threads=1)).grid_oracle()
        threaded = NpdSolver(phi, psi, SolverSettings(n_alpha=1024, n_theta=1024, threads=4)).grid_oracle()
        assert np.array_equal(serial.grid_maxima, threaded.grid_maxima)
        assert serial.bracket == threaded.bracket

    def test_rejects_coarse_grid(self, example3):
        """n_alpha below 64 is invalid."""
        phi, psi = example3
        with pytest.raises(ValueError):
            NpdSolver(phi, psi, SolverSettings()).grid_oracle(n_alpha=16)


class TestRefineMinimum:
    """Tests for derivative-free refinement."""

    def test_example3_from_nearby(self, example3):
        """Starting at 0.01 converges to the optimum at 0."""
        phi, psi = example3
        alpha_star, g_star = refine_minimum(phi, psi, 0.01, 0.02)
        assert circular_distance(alpha_star, 0.0) < 1e-8
        assert g_star == pytest.approx(EXAMPLE3_DISTANCE, abs=1e-9)

    def test_example3_quarter_turn(self, example3):
        """Starting at pi/2 + 0.02 converges to pi/2."""
        phi, psi = example3
        alpha_star, g_star = refine_minimum(phi, psi, HALF_PI + 0.02, 0.05)
        assert alpha_star == pytest.approx(HALF_PI, abs=1e-8)
        assert g_star == pytest.approx(EXAMPLE3_DISTANCE, abs=1e-9)

    def test_identical_functions(self, sine):
        """A wide window finds alpha = 0."""
        alpha_star, g_star = refine_minimum(sine, sine, 0.1, 0.2)
        assert circular_distance(alpha_star, 0.0) < 1e-8
        assert g_star < 1e-8

    def test_window_travels(self, example3_solver):
        """A window that does not contain the minimum moves towards it."""
        alpha_star, g_star = example3_solver.refine_minimum(0.01, radius=1e-3)
        assert circular_distance(alpha_star, 0.0) < 1e-8

    def test_no_improvement(self, example3):
        """Too few iterations to reach the tolerance."""
        phi, psi = example3
        solver = NpdSolver(phi, psi, SolverSettings(refine_max_iter=3))
        with pytest.raises(NoImprovementError):
            solver.refine_minimum(0.01, radius=0.02, tol=1e-12)

    def test_threaded_matches_serial(self, example3):
        """Stencil evaluation on several threads gives the serial result exactly."""
        phi, psi = example3
        serial = NpdSolver(phi, psi, SolverSettings(threads=1)).refine_minimum(0.01, radius=0.02)
        threaded = NpdSolver(phi, psi, SolverSettings(threads=4)).refine_minimum(0.01, radius=0.02)
        assert threaded == serial

    def test_stencil_goes_through_profile(self, example3_solver):
        """Each refinement step evaluates its stencil in one profile call."""
        with patch.object(NpdSolver, "profile", autospec=True, side_effect=NpdSolver.profile) as profile:
            example3_solver.refine_minimum(0.01, radius=0.02)
        assert profile.call_count >= 1
        assert all(len(call.args[1]) == 9 for call in profile.call_args_list)


class TestComputeNpd:
    """Tests for the full pipeline."""

    def test_example3_distance(self, example3_result):
        """Distance 3 sqrt(3) / 4 at the four quarter turns."""
        assert example3_result.distance == pytest.approx(EXAMPLE3_DISTANCE, abs=1e-6)
        assert_same_angles(example3_result.optimal_rotations, [0.0, HALF_PI, math.pi, 3 * HALF_PI], 1e-6)

    def test_example3_certificates(self, example3_result):
        """Every optimal rotation is certified."""
        assert len(example3_result.certificates) == len(example3_result.optimal_rotations)
        assert all(c.certified for c in example3_result.certificates)

    def test_example3_bracket(self, example3_result):
        """The distance lies in the oracle bracket."""
        bracket = example3_result.bracket
        assert bracket.lower - 1e-12 <= example3_result.distance <= bracket.upper + 1e-12

    def test_example3_rejected_candidates(self, example3_result):
        """Critical-pair candidates at odd quarter turns score 3/2."""
        odd = [
            c for c in example3_result.candidates
            if min(circular_distance(c.candidate.alpha, k * math.pi / 4) for k in (1, 3, 5, 7)) < 1e-9
        ]
        assert odd
        assert all(c.g_value == pytest.approx(1.5, abs=1e-8) for c in odd)

    def test_example3_optimal_values(self, example3_result, example3_solver):
        """g at every optimal rotation equals the distance."""
        for alpha in example3_result.optimal_rotations:
            assert example3_solver.g(alpha) == pytest.approx(example3_result.distance, abs=1e-9)

    def test_example3_to_dict(self, example3_result):
        """The serialised result carries the documented keys."""
        data = example3_result.to_dict()
        assert set(data) >= {"distance", "bracket", "optimal_alphas", "certificates"}
        assert set(data["bracket"]) == {"lower", "upper"}
        assert len(data["optimal_alphas"]) == 4

    def test_identical_functions(self, sine, fast_settings):
        """Distance 0 at the single rotation 0."""
        result = compute_npd(sine, sine, fast_settings)
        assert result.distance == pytest.approx(0.0, abs=1e-12)
        assert result.optimal_rotations == (0.0,)
        assert result.certificates[0].condition.to_dict()["type"] == "zero_distance_match"

    def test_example1(self, example1, settings):
        """Distance 1/2, realized at (theta, alpha) = (pi, 0)."""
        # The realizing point is (pi, 0); at (0, pi) F evaluates to 1, not 1/2
        phi, psi = example1
        result = compute_npd(phi, psi, settings)
        assert result.distance == pytest.approx(0.5, abs=1e-6)
        assert_same_angles(result.optimal_rotations, [0.0], 1e-6)
        condition = result.certificates[0].condition
        assert condition.to_dict()["type"] == "critical_point_of_F"
        assert condition.theta == pytest.approx(math.pi, abs=1e-8)
        assert condition.grad_residual <= 1e-8
        assert result.extrema_lower_bound == pytest.approx(0.5)

    def test_not_morse(self, sine, fast_settings):
        """A constant function is rejected unless forced."""
        constant = TrigPolynomial(a0=0.5)
        with pytest.raises(NotMorseError):
            compute_npd(sine, constant, fast_settings)

    def test_force_non_morse(self, sine, fast_settings):
        """Forcing skips the Morse check; the distance is max |sin - 1/2|."""
        constant = TrigPolynomial(a0=0.5)
        result = compute_npd(sine, constant, fast_settings, force=True)
        assert result.distance == pytest.approx(1.5, abs=1e-9)
        assert result.optimal_rotations

    def test_inconsistent_oracle(self, example1, fast_settings):
        """A bracket that excludes the refined distance is an internal error."""
        phi, psi = example1
        solver = NpdSolver(phi, psi, fast_settings)
        real = solver.grid_oracle()
        fake = replace(real, bracket=Bracket(lower=10.0, upper=11.0))
        with patch.object(solver, "grid_oracle", return_value=fake):
            with pytest.raises(InconsistentOracleError):
                solver.compute()
