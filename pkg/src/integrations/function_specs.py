"""
JSON function specs: the file format for periodic functions.

    {"type": "fourier", "a0": 0.0, "cos": [...], "sin": [...]}   (index k = 1..K)
    {"type": "samples", "values": [...]}                          (theta_j = 2*pi*j/M)
"""

import json
import logging
import math
from typing import Any

from src.core.errors import FunctionSpecError
from src.core.periodic_function import PeriodicFunction, PeriodicSpline, TrigPolynomial

logger = logging.getLogger(__name__)

SPEC_TYPES = ("fourier", "samples")


def _number_list(data: dict, key: str, required: bool = False) -> list[float]:
    if key not in data:
        if required:
            raise FunctionSpecError("missing required field", field=key)
        return []
    raw = data[key]
    if not isinstance(raw, list):
        raise FunctionSpecError(f"expected a list of numbers, got {type(raw).__name__}", field=key)

    values = []
    for i, item in enumerate(raw):
        if isinstance(item, bool) or not isinstance(item, (int, float)):
            raise FunctionSpecError(f"expected a number, got {item!r}", field=f"{key}[{i}]")
        if not math.isfinite(item):
            raise FunctionSpecError("value is not finite", field=f"{key}[{i}]")
        values.append(float(item))
    return values


def parse_function_spec(data: Any, lipschitz_safety: float = 1.05) -> PeriodicFunction:
    """
    Build a PeriodicFunction from a decoded JSON spec.

    Args:
        data: Decoded JSON object
        lipschitz_safety: Safety factor for spline Lipschitz bounds

    Returns:
        TrigPolynomial or PeriodicSpline

    Raises:
        FunctionSpecError: If the spec is malformed
    """
    if not isinstance(data, dict):
        raise FunctionSpecError(f"expected a JSON object, got {type(data).__name__}")

    spec_type = data.get("type")
    if spec_type not in SPEC_TYPES:
        raise FunctionSpecError(f"must be one of {list(SPEC_TYPES)}, got {spec_type!r}", field="type")

    if spec_type == "fourier":
        a0 = data.get("a0", 0.0)
        if isinstance(a0, bool) or not isinstance(a0, (int, float)) or not math.isfinite(a0):
            raise FunctionSpecError(f"expected a finite number, got {a0!r}", field="a0")
        cos_coeffs = _number_list(data, "cos")
        sin_coeffs = _number_list(data, "sin")
        return TrigPolynomial(a0=float(a0), cos_coeffs=tuple(cos_coeffs), sin_coeffs=tuple(sin_coeffs))

    values = _number_list(data, "values", required=True)
    if len(values) < 4:
        raise FunctionSpecError(f"need at least 4 samples, got {len(values)}", field="values")
    return PeriodicSpline(values=tuple(values), lipschitz_safety=lipschitz_safety)


def load_function_spec(path: str, lipschitz_safety: float = 1.05) -> PeriodicFunction:
    """
    Read a function spec from a JSON file.

    Raises:
        FunctionSpecError: With the line and column of a JSON syntax error, or
            the offending field of a malformed spec
    """
    with open(path, "r") as f:
        text = f.read()

    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise FunctionSpecError(f"{path}: line {e.lineno}, column {e.colno}: {e.msg}") from e

    try:
        function = parse_function_spec(data, lipschitz_safety)
    except FunctionSpecError as e:
        raise FunctionSpecError(f"{path}: {e}") from e

    logger.info(f"Loaded {function.kind} function from {path}")
    return function


def dump_function_spec(function: PeriodicFunction) -> str:
    """Canonical JSON text for a function: sorted keys, fixed indentation."""
    return json.dumps(function.to_spec(), indent=2, sort_keys=True) + "\n"
