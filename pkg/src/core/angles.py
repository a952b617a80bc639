"""
Angle helpers for the circle S^1 = R / 2piZ.
Angles are plain floats holding the canonical representative in [0, 2pi).
"""

import math
from typing import Iterable, Sequence

import numpy as np

TWO_PI = 2.0 * math.pi

# Canonical representative of a point of S^1; arithmetic is modulo 2pi.
Angle = float


def wrap_angle(value):
    """
    Reduce an angle (or array of angles) to [0, 2pi).

    Args:
        value: Scalar or array of radians

    Returns:
        Same shape as the input, every entry in [0, 2pi)
    """
    wrapped = np.mod(value, TWO_PI)
    # np.mod can round up to exactly 2pi for tiny negative inputs
    wrapped = np.where(wrapped >= TWO_PI, 0.0, wrapped)
    if np.ndim(wrapped) == 0:
        return float(wrapped)
    return wrapped


def circular_distance(a, b):
    """Shortest arc length between two angles (elementwise for arrays)."""
    delta = np.abs(np.mod(np.asarray(a, dtype=float) - np.asarray(b, dtype=float), TWO_PI))
    result = np.minimum(delta, TWO_PI - delta)
    if np.ndim(result) == 0:
        return float(result)
    return result


def angles_close(a: float, b: float, tol: float) -> bool:
    """True when a and b differ by a multiple of 2pi up to tol."""
    return circular_distance(a, b) <= tol


def dedupe_angles(values: Iterable[float], tol: float) -> list[float]:
    """
    Collapse angles closer than tol into one representative.

    Args:
        values: Angles in any range
        tol: Merge distance on the circle

    Returns:
        Sorted canonical angles, pairwise more than tol apart
    """
    groups = cluster_angles(values, tol)
    return [group[0] for group in groups]


def cluster_angles(values: Iterable[float], tol: float) -> list[list[float]]:
    """
    Group angles into chains whose neighbours are within tol (cyclically).

    Returns:
        List of groups, each a list of canonical angles in ascending order
        (a group straddling 0 starts just below 2pi)
    """
    canonical = [wrap_angle(float(v)) for v in values]
    return [[canonical[i] for i in group] for group in cluster_indices(canonical, tol)]


def cluster_indices(values: Sequence[float], tol: float) -> list[list[int]]:
    """
    Same chaining as cluster_angles, returning positions into values.

    Lets callers cluster records by their angle while keeping the payload.
    """
    canonical = [wrap_angle(float(v)) for v in values]
    order = sorted(range(len(canonical)), key=lambda i: canonical[i])
    if not order:
        return []

    groups: list[list[int]] = [[order[0]]]
    for i in order[1:]:
        if canonical[i] - canonical[groups[-1][-1]] <= tol:
            groups[-1].append(i)
        else:
            groups.append([i])

    # Join the last group onto the first across 0 == 2pi
    first, last = canonical[order[0]], canonical[order[-1]]
    if len(groups) > 1 and (first + TWO_PI) - last <= tol:
        tail = groups.pop()
        groups[0] = tail + groups[0]

    return groups
