import argparse
import logging
from typing import Callable, List

from gsr_dist.commands.common import (
    add_headstart_argument,
    add_model_arguments,
    add_output_arguments,
    add_spectrum_source,
    headstarts,
    resolve_spectrum,
    run_config,
)
from gsr_dist.core.exceptions import PreconvergenceError
from gsr_dist.distribution import density_curve, survival_curve
from gsr_dist.schemas.curve import Curve, CurveFlag
from gsr_dist.schemas.params import ModelParams
from gsr_dist.schemas.run import RunConfig, TimeGrid
from gsr_dist.schemas.spectrum import Spectrum
from gsr_dist.utils.io import sidecar_path, write_csv, write_json
from gsr_dist.utils.parallel import ordered_map

logger = logging.getLogger(__name__)

CURVE_HEADER = ("r", "t", "value", "flag")

CurveBuilder = Callable[[ModelParams, Spectrum, float, List[float]], Curve]


def _add_curve_parser(subparsers: argparse._SubParsersAction, name: str, what: str) -> None:
    parser = subparsers.add_parser(
        name,
        help=f"Evaluate the {what} on a headstart x time grid",
        description=(
            f"Evaluate the {what} of the stopping time for each headstart over a "
            "time grid and write a long-format table."
        ),
    )
    add_model_arguments(parser, inline_required=False)
    add_spectrum_source(parser)
    add_headstart_argument(parser, "Headstart value or inclusive range a:b:n (repeatable, default 0)")
    parser.add_argument("--tgrid", required=True, help="Time grid min:max:n[:log]")
    parser.add_argument(
        "--allow-preconv",
        action="store_true",
        help="Emit grid points below the series convergence time instead of failing",
    )
    add_output_arguments(parser)
    parser.set_defaults(handler=cmd_survival if name == "survival" else cmd_density)


def register(subparsers: argparse._SubParsersAction) -> None:
    _add_curve_parser(subparsers, "survival", "survival function")
    _add_curve_parser(subparsers, "density", "time density")


def _evaluate(config: RunConfig, spectrum: Spectrum, builder: CurveBuilder) -> List[Curve]:
    grid = config.time_grid.values()
    return ordered_map(lambda r: builder(config.params, spectrum, r, grid), config.headstarts)


def _check_preconvergence(curves: List[Curve]) -> None:
    for curve in curves:
        flagged = [t for t, f in zip(curve.grid, curve.point_flags) if f is CurveFlag.PRECONV]
        if flagged:
            raise PreconvergenceError(
                f"{len(flagged)} grid points at r={curve.meta.r:g} lie below "
                f"t_conv={curve.meta.t_conv:.3g}; pass --allow-preconv to emit them"
            )


def _write(config: RunConfig, curves: List[Curve]) -> None:
    if config.format == "json":
        write_json(config.out, [curve.model_dump(mode="json") for curve in curves])
        return

    rows = (
        (curve.meta.r, t, value, flag.value)
        for curve in curves
        for t, value, flag in zip(curve.grid, curve.values, curve.point_flags)
    )
    write_csv(config.out, CURVE_HEADER, rows)

    if config.out is not None:
        write_json(
            sidecar_path(config.out),
            {
                "command": config.command,
                "mu": config.params.mu,
                "A": config.params.a_threshold,
                "theta": config.params.theta,
                "n_modes": config.n_modes,
                "curves": [curve.meta.model_dump(mode="json") for curve in curves],
            },
        )


def _run(args: argparse.Namespace, builder: CurveBuilder) -> int:
    spectrum = resolve_spectrum(args)
    config = run_config(
        args,
        spectrum.params,
        spectrum.n_modes,
        headstarts(args, [0.0]),
        TimeGrid.parse(args.tgrid),
    )
    curves = _evaluate(config, spectrum, builder)
    if not args.allow_preconv:
        _check_preconvergence(curves)
    _write(config, curves)
    logger.info("Wrote %d curves of %d points", len(curves), config.time_grid.n_points)
    return 0


def cmd_survival(args: argparse.Namespace) -> int:
    return _run(args, survival_curve)


def cmd_density(args: argparse.Namespace) -> int:
    return _run(args, density_curve)
