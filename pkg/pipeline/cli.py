"""
Command-line entry point: python -m pipeline.cli <command> [options]

Commands:
    classify            stability verdict as JSON (exit 0 stable, 2 unstable)
    spectrum            branch-tracked roots of the dispersion relation (CSV)
    regions             S/M/C membership map of the k=2 family (CSV)
    simulate            modal or physical-space time integration (CSV)
    verify-equivalence  local system vs memory quadrature (JSON report)
    kernel              Gamma densities and kernel samples (CSV)

Exit codes: 0 success, 1 input error, 2 unstable verdict, 3 numeric failure.
Logs go to standard error; datasets to --out or standard output.
"""
import argparse
import logging
import math
import sys

import numpy as np
import pandas as pd

from analysis import dispersion, stability
from analysis.errors import MemstabError, UnsupportedOrderError
from analysis.kernel_model import eval_kernel, sample_gamma_family
from analysis.settings import configure_logging, get_settings
from pipeline.datasets import build_spec, write_frame, write_json
from simulation import simulator

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INPUT_ERROR = 1
EXIT_UNSTABLE = 2
EXIT_NUMERIC_FAILURE = 3

DEFAULT_GRID = "1.2x3x200"


class _Parser(argparse.ArgumentParser):
    """ArgumentParser that reports usage errors with the input-error code."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT_ERROR, f"{self.prog}: error: {message}\n")


# ============================================================================
# Option helpers
# ============================================================================

def _spec_from_args(args, required=True):
    if not required and args.spec is None and args.theta is None:
        return None
    return build_spec(args.spec, args.theta, args.tau)


def _xi_grid(args):
    """Grid from --xi-min/--xi-max/--points/--log, or None for the default grid."""
    if args.xi_min is None and args.xi_max is None and args.points is None:
        return None
    settings = get_settings()
    xi_min = 0.0 if args.xi_min is None else args.xi_min
    xi_max = settings.xi_max if args.xi_max is None else args.xi_max
    points = settings.xi_points if args.points is None else args.points
    return dispersion.frequency_grid(xi_min, xi_max, points, args.log)


def parse_grid(text: str):
    """Parse ETA2_MAXxETA3_MAXxRES, e.g. 1.2x3x200."""
    parts = text.lower().split("x")
    if len(parts) != 3:
        raise ValueError(f"--grid expects ETA2_MAXxETA3_MAXxRES, got '{text}'")
    try:
        eta2_max, eta3_max, resolution = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise ValueError(f"--grid expects ETA2_MAXxETA3_MAXxRES, got '{text}'") from None
    if eta2_max < 0 or eta3_max < 0 or resolution < 1:
        raise ValueError(f"--grid bounds must be non-negative and resolution positive, got '{text}'")
    return eta2_max, eta3_max, resolution


def _parse_shapes(text: str):
    try:
        shapes = [int(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise ValueError(f"--shapes expects a comma-separated list of integers, got '{text}'") from None
    if not shapes:
        raise ValueError("--shapes must name at least one shape")
    return shapes


# ============================================================================
# Commands
# ============================================================================

def cmd_classify(args) -> int:
    spec = _spec_from_args(args)
    verdict = stability.classify(spec, xi_grid=_xi_grid(args))
    payload = verdict.to_dict()
    payload["spec"] = spec.to_dict()
    write_json(payload, args.out)
    logger.info("Verdict: %s", verdict.verdict_class.value)
    return EXIT_OK if verdict.is_stable else EXIT_UNSTABLE


def cmd_spectrum(args) -> int:
    spec = _spec_from_args(args)
    grid = _xi_grid(args)
    result = dispersion.spectrum_on_grid(spec, dispersion.default_grid() if grid is None else grid)
    frame = result.envelope_frame() if args.envelope_only else result.to_frame()
    write_frame(frame, args.out)
    return EXIT_OK


def cmd_regions(args) -> int:
    spec = _spec_from_args(args, required=False)
    if spec is not None and spec.k != 2:
        raise UnsupportedOrderError(2, spec.k)
    eta2_max, eta3_max, resolution = parse_grid(args.grid)
    frame = stability.region_grid(eta2_max, eta3_max, resolution, resolution)
    violations = stability.count_containment_violations(frame)
    if violations:
        logger.warning("%d grid node(s) violate C within S within M", violations)
    write_frame(frame, args.out)
    return EXIT_OK


def _gaussian_bump(length: float, width: float):
    def profile(x):
        return np.exp(-((x - length / 2) / width) ** 2)
    return profile


def cmd_simulate(args) -> int:
    spec = _spec_from_args(args)
    if args.xi is not None:
        dt = args.dt or 0.5 * simulator.max_stable_step(spec, args.xi)
        w0 = np.zeros(spec.k + 2, dtype=complex)
        w0[0] = 1.0
        result = simulator.integrate_mode(spec, args.xi, w0, args.t_end, dt)
        predicted = float(dispersion.envelope(spec, [args.xi])[0])
        logger.info("xi=%.6g: fitted rate %.6g, predicted %.6g", args.xi, result.fitted_rate, predicted)
        write_frame(result.to_frame(), args.out)
        return EXIT_OK

    result = simulator.simulate_physical(
        spec,
        domain_length=args.length,
        n_modes=args.modes,
        initial_u=_gaussian_bump(args.length, args.width),
        t_end=args.t_end,
        dt=args.dt,
        n_snapshots=args.n_snapshots,
    )
    if args.snapshots:
        write_frame(result.snapshot_frame(), args.snapshots)
    write_frame(result.modes, args.out)
    return EXIT_OK


def cmd_verify_equivalence(args) -> int:
    spec = _spec_from_args(args)
    w0 = np.zeros(spec.k + 2, dtype=complex)
    w0[0] = 1.0
    local = simulator.integrate_mode(spec, args.xi, w0, args.t_end, args.dt)
    memory = simulator.integrate_memory_quadrature(spec, args.xi, 1.0, args.t_end, args.dt)
    error = simulator.relative_discrepancy(local.u, memory.u)
    logger.info("Relative discrepancy at xi=%.6g: %.3e", args.xi, error)
    write_json({
        "spec": spec.to_dict(),
        "xi": args.xi,
        "t_end": args.t_end,
        "dt": args.dt,
        "relative_error": error,
        "fitted_rate_local": local.fitted_rate,
        "fitted_rate_memory": memory.fitted_rate,
    }, args.out)
    if args.trajectories:
        write_frame(pd.DataFrame({
            "t": local.times,
            "re_u_local": local.u.real,
            "im_u_local": local.u.imag,
            "re_u_memory": memory.u.real,
            "im_u_memory": memory.u.imag,
        }), args.trajectories)
    return EXIT_OK


def cmd_kernel(args) -> int:
    spec = _spec_from_args(args, required=False)
    if args.points < 2 or not args.t_max > 0:
        raise ValueError("--points must be at least 2 and --t-max positive")
    t = np.linspace(0.0, args.t_max, args.points)
    tau = args.tau if args.tau is not None else (spec.tau if spec else 1.0)
    shapes = _parse_shapes(args.shapes) if args.shapes else ([] if spec else [1, 2, 3, 4])
    frame = sample_gamma_family(shapes, tau, t)
    if spec is not None:
        frame["g"] = eval_kernel(spec, t)
    write_frame(frame, args.out)
    return EXIT_OK


# ============================================================================
# Parser
# ============================================================================

def _add_spec_options(parser):
    parser.add_argument("--spec", help="JSON file {\"k\": int, \"theta\": [...], \"tau\": float}")
    parser.add_argument("--theta", help="comma-separated weights, overrides the file")
    parser.add_argument("--tau", type=float, help="Gamma scale, overrides the file")


def _add_grid_options(parser):
    parser.add_argument("--xi-min", type=float)
    parser.add_argument("--xi-max", type=float)
    parser.add_argument("--points", type=int)
    parser.add_argument("--log", action="store_true", help="logarithmic spacing (xi=0 is prepended)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="memstab", description="Stability of heat conduction with Gamma-combination memory")
    commands = parser.add_subparsers(dest="command", required=True)

    p = commands.add_parser("classify", help="stability verdict as JSON")
    _add_spec_options(p)
    _add_grid_options(p)
    p.add_argument("--out")
    p.set_defaults(handler=cmd_classify)

    p = commands.add_parser("spectrum", help="branch-tracked spectrum as CSV")
    _add_spec_options(p)
    _add_grid_options(p)
    p.add_argument("--envelope-only", action="store_true", help="write xi,max_re only")
    p.add_argument("--out")
    p.set_defaults(handler=cmd_spectrum)

    p = commands.add_parser("regions", help="k=2 region map as CSV")
    _add_spec_options(p)
    p.add_argument("--grid", default=DEFAULT_GRID, help="ETA2_MAXxETA3_MAXxRES")
    p.add_argument("--out")
    p.set_defaults(handler=cmd_regions)

    p = commands.add_parser("simulate", help="modal (--xi) or physical-space simulation")
    _add_spec_options(p)
    p.add_argument("--xi", type=float, help="integrate a single mode instead of a field")
    p.add_argument("--length", type=float, default=20 * math.pi)
    p.add_argument("--modes", type=int, default=40)
    p.add_argument("--width", type=float, default=1.0, help="width of the initial Gaussian bump")
    p.add_argument("--t-end", type=float, default=200.0)
    p.add_argument("--dt", type=float)
    p.add_argument("--n-snapshots", type=int, default=5)
    p.add_argument("--snapshots", help="CSV path for (x, t, u) snapshots")
    p.add_argument("--out", help="CSV path for per-mode rates (or the mode trajectory)")
    p.set_defaults(handler=cmd_simulate)

    p = commands.add_parser("verify-equivalence", help="local system vs memory quadrature")
    _add_spec_options(p)
    p.add_argument("--xi", type=float, default=1.0)
    p.add_argument("--t-end", type=float, default=10.0)
    p.add_argument("--dt", type=float, default=1e-3)
    p.add_argument("--trajectories", help="CSV path for both u trajectories")
    p.add_argument("--out")
    p.set_defaults(handler=cmd_verify_equivalence)

    p = commands.add_parser("kernel", help="Gamma densities and kernel samples as CSV")
    _add_spec_options(p)
    p.add_argument("--shapes", help="comma-separated shapes, default 1,2,3,4 without a spec")
    p.add_argument("--t-max", type=float, default=10.0)
    p.add_argument("--points", type=int, default=201)
    p.add_argument("--out")
    p.set_defaults(handler=cmd_kernel)
    return parser


def main(argv=None) -> int:
    configure_logging()
    args = build_parser().parse_args(argv)
    try:
        get_settings.cache_clear()
        get_settings()
        return args.handler(args)
    except (ValueError, OSError) as e:
        logger.error("%s: invalid input: %s", args.command, e)
        return EXIT_INPUT_ERROR
    except MemstabError as e:
        logger.error("%s failed: %s", args.command, e)
        return EXIT_NUMERIC_FAILURE


if __name__ == "__main__":
    sys.exit(main())
