"""
Rendering of solver results as JSON documents and CSV tables.
"""

import csv
import io
import json
from typing import Iterable, Optional, Sequence

import numpy as np

from src.core.angles import TWO_PI, wrap_angle
from src.core.localization import OptimalityCertificate
from src.core.npd import NpdResult, OracleResult
from src.core.periodic_function import MorseReport

ANGLE_DIGITS = 10

# Keys whose values (or list entries) are angles
ANGLE_KEYS = {
    "alpha", "theta", "theta1", "theta2", "theta1_tilde", "theta2_tilde",
    "optimal_alphas", "argmin_cells", "argmax_set", "pairs",
}

_TWO_PI_ROUNDED = float(f"{TWO_PI:.{ANGLE_DIGITS}g}")


def format_angle(value: float) -> float:
    """Canonical angle rounded to 10 significant digits (2pi rounds to 0)."""
    rounded = float(f"{wrap_angle(value):.{ANGLE_DIGITS}g}")
    return 0.0 if rounded >= _TWO_PI_ROUNDED else rounded


def _round_angles(data, is_angle: bool = False):
    if isinstance(data, dict):
        return {k: _round_angles(v, is_angle or k in ANGLE_KEYS) for k, v in data.items()}
    if isinstance(data, (list, tuple)):
        return [_round_angles(v, is_angle) for v in data]
    if isinstance(data, (float, np.floating)):
        return format_angle(float(data)) if is_angle else float(data)
    if isinstance(data, np.integer):
        return int(data)
    if isinstance(data, np.bool_):
        return bool(data)
    return data


def to_json(data: dict) -> str:
    """Deterministic JSON text with angles rounded."""
    return json.dumps(_round_angles(data), indent=2, sort_keys=True) + "\n"


def _csv_text(header: Sequence[str], rows: Iterable[Sequence], comments: Sequence[str] = ()) -> str:
    buffer = io.StringIO()
    for line in comments:
        buffer.write(f"# {line}\n")
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buffer.getvalue()


def _num(value: float) -> str:
    return f"{value:.12g}"


def _ang(value: float) -> str:
    return f"{format_angle(value):.{ANGLE_DIGITS}g}"


# Per-command renderers

def render_result(result: NpdResult, fmt: str = "json") -> str:
    if fmt == "json":
        return to_json(result.to_dict())
    rows = [
        (_ang(alpha), _num(result.distance), cert.condition.to_dict()["type"])
        for alpha, cert in zip(result.optimal_rotations, result.certificates)
    ]
    return _csv_text(
        ["alpha", "distance", "condition"],
        rows,
        comments=[
            f"distance {_num(result.distance)} in "
            f"[{_num(result.bracket.lower)}, {_num(result.bracket.upper)}]",
        ],
    )


def render_oracle(oracle: OracleResult, fmt: str = "json") -> str:
    if fmt == "json":
        return to_json(oracle.to_dict())
    return _csv_text(
        ["alpha"],
        [(_ang(a),) for a in oracle.argmin_cells],
        comments=[f"bracket [{_num(oracle.bracket.lower)}, {_num(oracle.bracket.upper)}]"],
    )


def render_certificate(certificate: OptimalityCertificate, fmt: str = "json") -> str:
    if fmt == "json":
        return to_json(certificate.to_dict())
    condition = certificate.condition.to_dict()
    det = "" if certificate.hessian_det is None else _num(certificate.hessian_det)
    return _csv_text(
        ["alpha", "condition", "hessian_det"],
        [(_ang(certificate.alpha), condition["type"], det)],
    )


def render_critical(report: MorseReport, fmt: str = "json") -> str:
    if fmt == "json":
        return to_json(report.to_dict())
    rows = [
        (_ang(p.theta), _num(p.value), _num(p.second_derivative), p.kind)
        for p in report.critical_points
    ]
    return _csv_text(
        ["theta", "value", "second_derivative", "kind"],
        rows,
        comments=[f"morse {str(report.morse).lower()}"],
    )


def render_profile(
    alphas: np.ndarray,
    g_values: np.ndarray,
    best_alpha: Optional[float],
    thetas: np.ndarray,
    phi_values: np.ndarray,
    psi_shifted: np.ndarray,
    fmt: str = "csv",
) -> str:
    """
    Profile of g plus the pointwise matching at the best rotation.

    CSV layout: comment header, then `alpha,g` rows, then a second header and
    `theta,phi,psi_shifted,absdiff` rows.
    """
    absdiff = np.abs(phi_values - psi_shifted)
    if fmt == "json":
        return to_json({
            "best_alpha": best_alpha,
            "profile": [{"alpha": a, "g": g} for a, g in zip(alphas, g_values)],
            "matching": [
                {"theta": t, "phi": p, "psi_shifted": s, "absdiff": d}
                for t, p, s, d in zip(thetas, phi_values, psi_shifted, absdiff)
            ],
        })

    comments = [
        "alpha,g: g(alpha) = max over theta of |phi(theta) - psi(theta + alpha)|",
        f"theta,phi,psi_shifted,absdiff: matching at alpha = {_ang(best_alpha)}",
    ]
    profile = _csv_text(
        ["alpha", "g"],
        ((_ang(a), _num(g)) for a, g in zip(alphas, g_values)),
        comments=comments,
    )
    matching = _csv_text(
        ["theta", "phi", "psi_shifted", "absdiff"],
        (
            (_ang(t), _num(p), _num(s), _num(d))
            for t, p, s, d in zip(thetas, phi_values, psi_shifted, absdiff)
        ),
    )
    return profile + matching
