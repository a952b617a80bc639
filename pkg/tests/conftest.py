"""Shared fixtures: the worked example pairs and random Morse functions."""

import math

import numpy as np
import pytest

from src.core.npd import NpdSolver
from src.core.periodic_function import TrigPolynomial
from src.core.settings import SolverSettings

SQRT3 = math.sqrt(3.0)

# 1/2 sin(2 theta) against sin(theta): distance 3*sqrt(3)/4 at alpha in {0, pi/2, pi, 3pi/2}
EXAMPLE3_DISTANCE = 3.0 * SQRT3 / 4.0


def example1_pair() -> tuple[TrigPolynomial, TrigPolynomial]:
    """phi = 1/2 sin^2(theta/2), psi = sin^2(theta/2), written as cosine series."""
    phi = TrigPolynomial(a0=0.25, cos_coeffs=(-0.25,))
    psi = TrigPolynomial(a0=0.5, cos_coeffs=(-0.5,))
    return phi, psi


def example3_pair() -> tuple[TrigPolynomial, TrigPolynomial]:
    phi = TrigPolynomial(sin_coeffs=(0.0, 0.5))
    psi = TrigPolynomial(sin_coeffs=(1.0,))
    return phi, psi


def random_morse_polynomial(rng: np.random.Generator, max_degree: int = 5) -> TrigPolynomial:
    """
    Trig polynomial of degree <= max_degree with coefficients uniform in [-1, 1].

    Draws whose critical points are not clearly nondegenerate are rejected.
    """
    while True:
        degree = int(rng.integers(1, max_degree + 1))
        f = TrigPolynomial(
            a0=float(rng.uniform(-1, 1)),
            cos_coeffs=tuple(rng.uniform(-1, 1, degree)),
            sin_coeffs=tuple(rng.uniform(-1, 1, degree)),
        )
        report = f.is_morse(tol=1e-8)
        if report.morse and all(abs(p.second_derivative) > 1e-3 for p in report.critical_points):
            return f


def random_morse_pairs(seed: int, count: int) -> list[tuple[TrigPolynomial, TrigPolynomial]]:
    rng = np.random.default_rng(seed)
    return [(random_morse_polynomial(rng), random_morse_polynomial(rng)) for _ in range(count)]


@pytest.fixture
def example1():
    return example1_pair()


@pytest.fixture
def example3():
    return example3_pair()


@pytest.fixture
def sine():
    return TrigPolynomial(sin_coeffs=(1.0,))


@pytest.fixture
def settings():
    """Default resolution without reading config/solver.yaml."""
    return SolverSettings()


@pytest.fixture
def fast_settings():
    """Reduced resolution for suites that compute many distances."""
    return SolverSettings(n_theta=2048, n_alpha=2048, branch_n_alpha=1024, critical_scan=2048)


@pytest.fixture
def example3_solver(example3, settings):
    phi, psi = example3
    return NpdSolver(phi, psi, settings)


@pytest.fixture
def example1_solver(example1, settings):
    phi, psi = example1
    return NpdSolver(phi, psi, settings)
