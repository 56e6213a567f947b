"""
Command line front end: ``qbicladder {solve,wavefunction,sweep,scaling,evolve}``.

Exit status 0 on success, 1 on a computational failure and 2 on a usage error.
"""

import argparse
import logging
import sys
import warnings
from typing import Optional

import numpy as np
import pandas as pd

from qbicladder.config import FLAT_KEYS, RunConfig, flat_to_nested, merge_dicts
from qbicladder.dynamics import (
    Propagator,
    build_finite_ladder,
    dominant_resonance,
    dot_state,
    evolve_survival,
    fit_decay_rate,
    truncated_eigenstate,
)
from qbicladder.emitters import TABLE_PRECISION, emit
from qbicladder.errors import QbicError, TrackingError
from qbicladder.executor import get_executor
from qbicladder.log import configure_cli_logging
from qbicladder.model import band_edges
from qbicladder.polynomial import dispersion_polynomial, find_roots
from qbicladder.spectrum import (
    Eigenstate,
    find_state,
    solve_spectrum,
    spectrum_frame,
)
from qbicladder.sweep import fit_g_scaling, select_track, sweep_parameter, track_frame
from qbicladder.wavefunction import Normalization, build_profile

logger = logging.getLogger(__name__)

XMAX_LIMIT = 100_000
EXIT_OK, EXIT_FAILURE, EXIT_USAGE = 0, 1, 2

SOLVE_FORMATS = {
    "re_e": TABLE_PRECISION,
    "re_k_plus": TABLE_PRECISION,
    "im_k_plus": TABLE_PRECISION,
    "re_k_minus": TABLE_PRECISION,
    "im_k_minus": TABLE_PRECISION,
    "im_e": "%.8e",
    "residual": "%.3e",
}


class UsageError(Exception):
    pass


def _common_flags() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--th", type=float, default=None, help="leg hopping t_h (default 1.0)")
    common.add_argument("--tp", type=float, default=None, help="rung hopping t'_h")
    common.add_argument("--g", type=float, default=None, help="dot coupling g")
    common.add_argument("--ed", type=float, default=None, help="dot level E_d")
    common.add_argument("--format", choices=["csv", "json"], default=None, help="output format")
    common.add_argument("--out", default=None, help="output file (default: standard output)")
    common.add_argument("--config", default=None, help="YAML file with flag values")
    common.add_argument("--tol", type=float, default=None, help="Newton refinement tolerance")
    common.add_argument("-v", "--verbose", action="store_true", help="Enable verbose output")
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common_flags()
    parser = argparse.ArgumentParser(
        prog="qbicladder",
        description="Discrete spectrum of a quantum dot on a two-leg ladder",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("solve", parents=[common], help="the twelve discrete eigenstates")

    p = sub.add_parser("wavefunction", parents=[common], help="spatial profile of one state")
    p.add_argument("--state", required=True, help="state label, e.g. Q2")
    p.add_argument("--xmax", type=int, default=100, help="sites |x| <= xmax are sampled")
    p.add_argument(
        "--normalization",
        choices=[n.value for n in Normalization],
        default=Normalization.dot_unity.value,
    )
    p.add_argument(
        "--allow-large", action="store_true", help=f"permit --xmax above {XMAX_LIMIT}"
    )

    p = sub.add_parser("sweep", parents=[common], help="track the spectrum along a parameter")
    p.add_argument("--param", choices=["ed", "g", "tp"], required=True)
    p.add_argument("--from", dest="start", type=float, required=True)
    p.add_argument("--to", dest="stop", type=float, required=True)
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--state", default=None, help="only emit this track")
    _executor_flags(p)

    p = sub.add_parser("scaling", parents=[common], help="coupling dependence of a width")
    p.add_argument("--state", required=True)
    p.add_argument("--gmin", type=float, default=0.05)
    p.add_argument("--gmax", type=float, default=0.2)
    p.add_argument("--points", type=int, default=7)
    _executor_flags(p)

    p = sub.add_parser("evolve", parents=[common], help="survival probability on a finite ladder")
    p.add_argument("--length", type=int, default=1500, help="half length L of the ladder")
    p.add_argument("--tmax", type=float, default=800.0)
    p.add_argument("--dt", type=float, default=1.0)
    p.add_argument("--initial", default="dot", help="dot or state:LABEL")
    p.add_argument(
        "--method", choices=[m.value for m in Propagator], default=Propagator.chebyshev.value
    )
    p.add_argument(
        "--fit-start",
        type=float,
        default=0.2,
        help="start of the fit window as a fraction of its end",
    )
    return parser


def _executor_flags(p: argparse.ArgumentParser):
    p.add_argument(
        "--executor",
        choices=["serial", "thread_pool", "process_pool"],
        default=None,
        help="pool used to solve grid points",
    )
    p.add_argument("--max_workers", type=int, default=1)


def load_config(args: argparse.Namespace) -> RunConfig:
    """config file values overridden by the flags given on the command line"""
    flags = {key: getattr(args, key) for key in FLAT_KEYS if getattr(args, key, None) is not None}
    overrides = flat_to_nested(flags)
    if args.config:
        return RunConfig.from_file(args.config, overrides=overrides)
    return RunConfig.from_dict(merge_dicts({}, overrides))


def _emit(config: RunConfig, frame: pd.DataFrame, **kwargs) -> None:
    emit(frame, config.output_format, config.output_path, **kwargs)


def _nearest_feature(config: RunConfig, z: complex) -> tuple[str, float]:
    edges = band_edges(config.params)
    features = {
        "E_d": config.params.e_d,
        "+ band bottom": edges.lower_band[0],
        "+ band top": edges.lower_band[1],
        "- band bottom": edges.upper_band[0],
        "- band top": edges.upper_band[1],
    }
    name = min(features, key=lambda k: abs(z - features[k]))
    return name, features[name]


def cmd_solve(args: argparse.Namespace, config: RunConfig) -> int:
    params = config.params
    if params.g == 0:
        roots = find_roots(
            dispersion_polynomial(params),
            tol=config.tolerances.polish,
            max_iter=config.tolerances.max_iter,
            cluster_radius=config.tolerances.cluster_radius,
        )
        rows = []
        for cluster in roots.clusters():
            name, value = _nearest_feature(config, cluster["centre"])
            rows.append(
                {
                    "cluster_id": cluster["cluster_id"],
                    "multiplicity": cluster["multiplicity"],
                    "re_centre": cluster["centre"].real,
                    "im_centre": cluster["centre"].imag,
                    "nearest": name,
                    "nearest_energy": value,
                }
            )
        logger.info("g = 0: the dot decouples; reporting degenerate root clusters")
        _emit(config, pd.DataFrame(rows), metadata={"g": 0.0})
        return EXIT_OK

    states = solve_spectrum(params, **config.tolerances.solve_kwargs())
    _emit(config, spectrum_frame(states), formats=SOLVE_FORMATS)
    return EXIT_OK


def cmd_wavefunction(args: argparse.Namespace, config: RunConfig) -> int:
    if args.xmax < 2:
        raise UsageError("--xmax must be at least 2")
    if args.xmax > XMAX_LIMIT and not args.allow_large:
        raise UsageError(f"--xmax above {XMAX_LIMIT} needs --allow-large")

    states = solve_spectrum(config.params, **config.tolerances.solve_kwargs())
    state = find_state(states, args.state)
    profile = build_profile(
        config.params, state, (-args.xmax, args.xmax), args.normalization
    )
    metadata = {
        "state": state.label,
        "re_e": state.energy.real,
        "im_e": state.energy.imag,
        "abs_psi_dot": abs(profile.psi_dot),
        "normalization": profile.normalization.value,
    }
    _emit(config, profile.moduli_frame(), metadata=metadata)
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace, config: RunConfig) -> int:
    if args.steps < 2:
        raise UsageError("--steps must be at least 2")
    if not args.start < args.stop:
        raise UsageError("--from must be smaller than --to")

    grid = np.linspace(args.start, args.stop, args.steps)
    status = EXIT_OK
    with get_executor(args.executor, max_workers=args.max_workers) as executor:
        try:
            records = sweep_parameter(
                config.params,
                args.param,
                grid,
                executor=executor,
                continuity_floor=config.tolerances.continuity_floor,
                **config.tolerances.solve_kwargs(),
            )
        except TrackingError as err:
            logger.error(f"{err} (at {args.param}={err.param_value:g})")
            records = err.records
            status = EXIT_FAILURE

    if args.state:
        try:
            records = select_track(records, args.state)
        except KeyError:
            if status == EXIT_OK:
                raise
            records = []
    frame = track_frame(records)
    _emit(config, frame[["param_value", "track_id", "label", "re_e", "im_e", "sheet"]])
    return status


def cmd_scaling(args: argparse.Namespace, config: RunConfig) -> int:
    if args.points < 5:
        raise UsageError("--points must be at least 5")
    if not 0 < args.gmin < args.gmax:
        raise UsageError("need 0 < --gmin < --gmax")

    g_grid = np.geomspace(args.gmin, args.gmax, args.points)
    with get_executor(args.executor, max_workers=args.max_workers) as executor:
        fit = fit_g_scaling(
            config.params, args.state, g_grid, executor=executor, **config.tolerances.solve_kwargs()
        )
    report = {
        "state": fit.state_label,
        "exponent": fit.exponent,
        "prefactor": fit.prefactor,
        "r_squared": fit.r_squared,
    }
    _emit(config, pd.DataFrame({"g": fit.g_grid, "abs_im_e": fit.im_e}), report=report)
    return EXIT_OK


def cmd_evolve(args: argparse.Namespace, config: RunConfig) -> int:
    params = config.params
    if args.length < 1 or not args.dt > 0 or args.tmax < 0:
        raise UsageError("need --length >= 1, --dt > 0 and --tmax >= 0")

    ladder = build_finite_ladder(params, args.length)
    states: list[Eigenstate] = []
    if params.g > 0:
        states = solve_spectrum(params, **config.tolerances.solve_kwargs())

    if args.initial == "dot":
        initial = dot_state(ladder)
        reference = dominant_resonance(params, states, params.e_d) if states else None
    elif args.initial.startswith("state:"):
        if not states:
            raise UsageError("state initial conditions need g > 0")
        reference = find_state(states, args.initial.split(":", 1)[1])
        profile = build_profile(params, reference, (-args.length, args.length))
        initial = truncated_eigenstate(ladder, profile)
    else:
        raise UsageError(f"--initial must be 'dot' or 'state:LABEL', got {args.initial!r}")

    trace = evolve_survival(
        ladder,
        initial,
        args.tmax,
        args.dt,
        method=args.method,
        label=args.initial,
        norm_drift_tol=config.tolerances.norm_drift,
    )

    report = {}
    t_hi = min(args.tmax, ladder.reflection_horizon)
    t_lo = args.fit_start * t_hi
    if reference is not None and t_hi - t_lo >= 2 * args.dt:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            fit = fit_decay_rate(trace, (t_lo, t_hi))
        expected = 2.0 * abs(reference.energy.imag)
        report = {
            "fitted_rate": fit.rate,
            "r_squared": fit.r_squared,
            "reference_state": reference.label,
            "reference_rate": expected,
            "ratio": fit.rate / expected if expected > 0 else float("nan"),
        }
        if fit.warning:
            logger.warning(fit.warning)

    frame = pd.DataFrame({"t": trace.times, "survival": trace.probability})
    _emit(config, frame, report=report)
    return EXIT_OK


COMMANDS = {
    "solve": cmd_solve,
    "wavefunction": cmd_wavefunction,
    "sweep": cmd_sweep,
    "scaling": cmd_scaling,
    "evolve": cmd_evolve,
}


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    configure_cli_logging(args.verbose)

    try:
        config = load_config(args)
        return COMMANDS[args.command](args, config)
    except (UsageError, KeyError, ValueError) as err:
        message = err.args[0] if isinstance(err, KeyError) and err.args else str(err)
        if isinstance(err, QbicError):
            logger.error(message)
            return EXIT_FAILURE
        parser.print_usage(sys.stderr)
        logger.error(message)
        return EXIT_USAGE
    except QbicError as err:
        logger.error(str(err))
        return EXIT_FAILURE
    except OSError as err:
        logger.error(str(err))
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
