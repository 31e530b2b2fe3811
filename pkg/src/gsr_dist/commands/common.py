import argparse
import logging
from pathlib import Path
from typing import List, Optional

from gsr_dist.core.config import get_settings
from gsr_dist.schemas.params import ModelParams
from gsr_dist.schemas.run import RunConfig, TimeGrid, parse_headstarts
from gsr_dist.schemas.spectrum import Spectrum
from gsr_dist.spectrum import build_spectrum

logger = logging.getLogger(__name__)


def add_model_arguments(parser: argparse.ArgumentParser, inline_required: bool = True) -> None:
    group = parser.add_argument_group("model")
    group.add_argument("--mu", type=float, required=inline_required, help="Post-change drift (nonzero)")
    group.add_argument("--threshold", type=float, required=inline_required, help="Detection threshold A > 0")
    group.add_argument("--theta", type=int, required=inline_required, help="0 pre-change, 1 post-change")
    group.add_argument("--modes", type=int, default=None, help="Number of imaginary-axis roots N")


def add_spectrum_source(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--spectrum",
        type=Path,
        default=None,
        help="Saved spectrum JSON; replaces --mu/--threshold/--theta",
    )


def add_headstart_argument(parser: argparse.ArgumentParser, help_text: str) -> None:
    parser.add_argument(
        "--headstart",
        action="append",
        default=None,
        metavar="R|A:B:N",
        help=help_text,
    )


def add_output_arguments(parser: argparse.ArgumentParser, formats: bool = True) -> None:
    parser.add_argument("--out", type=Path, default=None, help="Output file (stdout when omitted)")
    if formats:
        parser.add_argument("--format", choices=("csv", "json"), default="csv")


def model_params(args: argparse.Namespace) -> ModelParams:
    return ModelParams(mu=args.mu, a_threshold=args.threshold, theta=args.theta)


def n_modes(args: argparse.Namespace) -> int:
    return args.modes if args.modes is not None else get_settings().default_modes


def resolve_params(args: argparse.Namespace) -> ModelParams:
    """Model parameters from --spectrum when given, else from the inline flags"""
    path: Optional[Path] = getattr(args, "spectrum", None)
    if path is not None:
        return Spectrum.from_json(path.read_text(encoding="utf-8")).params
    return model_params(args)


def resolve_spectrum(args: argparse.Namespace) -> Spectrum:
    """Load --spectrum (truncated to --modes) or build one from the inline flags"""
    path: Optional[Path] = getattr(args, "spectrum", None)
    if path is not None:
        spectrum = Spectrum.from_json(path.read_text(encoding="utf-8"))
        logger.info("Loaded spectrum with %d modes from %s", spectrum.n_modes, path)
        if args.modes is not None and args.modes < spectrum.n_modes:
            spectrum = spectrum.truncated(args.modes)
        return spectrum
    return build_spectrum(model_params(args), n_modes(args))


def headstarts(args: argparse.Namespace, default: List[float]) -> List[float]:
    return parse_headstarts(args.headstart) if args.headstart else default


def run_config(
    args: argparse.Namespace,
    params: ModelParams,
    modes: int,
    headstart_values: List[float],
    time_grid: Optional[TimeGrid] = None,
) -> RunConfig:
    return RunConfig(
        command=args.command,
        params=params,
        headstarts=headstart_values,
        time_grid=time_grid,
        n_modes=modes,
        out=args.out,
        format=getattr(args, "format", "csv"),
    )
