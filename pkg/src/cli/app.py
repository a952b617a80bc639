"""
Command-line entry point.

    circle-npd compute PHI PSI        distance, optimal rotations, certificates
    circle-npd oracle PHI PSI         rigorous grid bracket
    circle-npd verify PHI PSI --alpha A --distance D
    circle-npd profile PHI PSI        CSV of g(alpha) and the best matching
    circle-npd critical F             critical points and Morse verdict
    circle-npd normalize F            canonical function spec

Exit codes: 0 ok, 1 malformed input, 2 not Morse / degenerate root,
3 inconsistent oracle, 4 uncertified or value mismatch.
"""

import argparse
import logging
import sys
from typing import Optional, Sequence

import numpy as np
from dotenv import load_dotenv

from src.cli import formatting
from src.core.errors import (
    DegenerateRootError,
    FunctionSpecError,
    InconsistentOracleError,
    NotMorseError,
    NpdError,
    ValueMismatchError,
)
from src.core.localization import RotationLocalizer
from src.core.npd import NpdSolver
from src.core.periodic_function import uniform_grid
from src.core.settings import SolverSettings
from src.integrations.function_specs import dump_function_spec, load_function_spec

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_MALFORMED = 1
EXIT_NOT_MORSE = 2
EXIT_INCONSISTENT = 3
EXIT_UNCERTIFIED = 4


class UsageError(Exception):
    """Bad command-line arguments."""


class _ArgumentParser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage, which is reserved for non-Morse input
    def error(self, message):
        raise UsageError(message)


def _power_of_two(text: str) -> int:
    value = int(text)
    if value < 64 or value & (value - 1):
        raise argparse.ArgumentTypeError(f"must be a power of two >= 64, got {value}")
    return value


def _tolerance(text: str) -> float:
    value = float(text)
    if not 0.0 < value < 1e-2:
        raise argparse.ArgumentTypeError(f"must lie in (0, 0.01), got {value}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(
        prog="circle-npd",
        description="Natural pseudo-distance between periodic Morse functions under rotations.",
    )
    parser.add_argument("--config", help="Solver settings YAML (defaults to config/solver.yaml)")
    parser.add_argument("--verbose", action="store_true", help="Log progress to stderr")
    subparsers = parser.add_subparsers(dest="command", required=True)

    # Each command registers only the options it reads
    def add_command(name: str, help: str, pair: bool = True, grids: tuple[str, ...] = (),
                    tol: bool = False, force: bool = False, formats: bool = True):
        sub = subparsers.add_parser(name, help=help)
        if pair:
            sub.add_argument("phi", help="JSON spec of phi")
            sub.add_argument("psi", help="JSON spec of psi")
        else:
            sub.add_argument("function", help="JSON spec of the function")
        if "theta" in grids:
            sub.add_argument("--ntheta", type=_power_of_two, help="Theta grid size")
        if "alpha" in grids:
            sub.add_argument("--nalpha", type=_power_of_two, help="Alpha grid size")
        if tol:
            sub.add_argument("--tol", type=_tolerance, help="Tolerance for the command")
        if force:
            sub.add_argument("--force", action="store_true", help="Skip the Morse precondition")
        if formats:
            sub.add_argument("--format", choices=("json", "csv"), default=None, help="Output format")
        sub.add_argument("--out", help="Write output to this path instead of stdout")
        return sub

    both = ("theta", "alpha")
    add_command("compute", "Compute the distance and optimal rotations", grids=both, tol=True, force=True)
    add_command("oracle", "Bracket the distance on a grid", grids=both)
    verify = add_command("verify", "Certify a claimed optimal rotation", grids=("theta",), tol=True)
    verify.add_argument("--alpha", type=float, required=True, help="Claimed optimal rotation")
    verify.add_argument("--distance", type=float, required=True, help="Claimed distance")
    add_command("profile", "Emit g(alpha) and the best matching", grids=both, force=True)
    add_command("critical", "List critical points", pair=False, tol=True)
    add_command("normalize", "Rewrite a spec canonically", pair=False, formats=False)

    return parser


def _settings(args) -> SolverSettings:
    settings = SolverSettings.load(args.config)
    return settings.with_overrides(
        n_theta=getattr(args, "ntheta", None),
        n_alpha=getattr(args, "nalpha", None),
    )


def _solver(args, settings: SolverSettings) -> NpdSolver:
    phi = load_function_spec(args.phi, settings.spline_lipschitz_safety)
    psi = load_function_spec(args.psi, settings.spline_lipschitz_safety)
    return NpdSolver(phi, psi, settings)


def _emit(text: str, out: Optional[str]):
    if out:
        with open(out, "w") as f:
            f.write(text)
        logger.info(f"Wrote {out}")
    else:
        sys.stdout.write(text)


# Commands

def cmd_compute(args) -> int:
    settings = _settings(args)
    if args.tol:
        settings = settings.with_overrides(refine_tol=args.tol)
    result = _solver(args, settings).compute(force=args.force)
    _emit(formatting.render_result(result, args.format or "json"), args.out)
    return EXIT_OK


def cmd_oracle(args) -> int:
    settings = _settings(args)
    oracle = _solver(args, settings).grid_oracle()
    _emit(formatting.render_oracle(oracle, args.format or "json"), args.out)
    return EXIT_OK


def cmd_verify(args) -> int:
    settings = _settings(args)
    solver = _solver(args, settings)
    certificate = RotationLocalizer(solver).certify(args.alpha, args.distance, args.tol)
    _emit(formatting.render_certificate(certificate, args.format or "json"), args.out)
    if not certificate.certified:
        logger.error(f"Rotation {args.alpha} is not certified: {certificate.condition.reason}")
        return EXIT_UNCERTIFIED
    return EXIT_OK


def cmd_profile(args) -> int:
    settings = _settings(args)
    solver = _solver(args, settings)
    result = solver.compute(force=args.force)
    best_alpha = result.optimal_rotations[0]

    alphas = uniform_grid(settings.n_alpha)
    g_values = solver.profile(alphas)
    thetas = uniform_grid(settings.n_theta)
    text = formatting.render_profile(
        alphas,
        g_values,
        best_alpha,
        thetas,
        solver.phi.evaluate(thetas),
        solver.psi.evaluate(thetas + best_alpha),
        args.format or "csv",
    )
    _emit(text, args.out)
    return EXIT_OK


def cmd_critical(args) -> int:
    settings = _settings(args)
    function = load_function_spec(args.function, settings.spline_lipschitz_safety)
    report = function.is_morse(tol=args.tol or settings.morse_tol, n_samples=settings.critical_scan)
    _emit(formatting.render_critical(report, args.format or "json"), args.out)
    if not report.morse:
        witnesses = ", ".join(f"{w.theta:.10g}" for w in report.witnesses)
        logger.error(f"DegenerateRoot: degenerate critical point(s) at theta = {witnesses}")
        return EXIT_NOT_MORSE
    return EXIT_OK


def cmd_normalize(args) -> int:
    settings = _settings(args)
    function = load_function_spec(args.function, settings.spline_lipschitz_safety)
    _emit(dump_function_spec(function), args.out)
    return EXIT_OK


COMMANDS = {
    "compute": cmd_compute,
    "oracle": cmd_oracle,
    "verify": cmd_verify,
    "profile": cmd_profile,
    "critical": cmd_critical,
    "normalize": cmd_normalize,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Run one command and return its exit code."""
    load_dotenv()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        parser.print_usage(sys.stderr)
        print(f"error: {e}", file=sys.stderr)
        return EXIT_MALFORMED

    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        stream=sys.stderr,
    )

    try:
        return COMMANDS[args.command](args)
    except (NotMorseError, DegenerateRootError) as e:
        logger.error(f"{type(e).__name__}: {e}")
        return EXIT_NOT_MORSE
    except InconsistentOracleError as e:
        logger.error(f"InconsistentOracle: {e}")
        return EXIT_INCONSISTENT
    except ValueMismatchError as e:
        logger.error(f"ValueMismatch: {e}")
        return EXIT_UNCERTIFIED
    except (FunctionSpecError, NpdError, ValueError, OSError) as e:
        logger.error(f"{type(e).__name__}: {e}")
        return EXIT_MALFORMED


if __name__ == "__main__":
    sys.exit(main())
