import argparse
import sys

from gsr_dist.commands.common import add_model_arguments, add_output_arguments, model_params, n_modes
from gsr_dist.spectrum import build_spectrum
from gsr_dist.utils.io import open_output


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser(
        "spectrum",
        help="Locate eigenvalue roots and mode weights",
        description="Build the truncated spectrum for one (mu, A, theta) and write it as JSON.",
    )
    add_model_arguments(parser)
    add_output_arguments(parser, formats=False)
    parser.set_defaults(handler=cmd_spectrum)


def cmd_spectrum(args: argparse.Namespace) -> int:
    params = model_params(args)
    spectrum = build_spectrum(params, n_modes(args))

    with open_output(args.out) as stream:
        stream.write(spectrum.to_json())

    # Keep stdout pure JSON when the spectrum itself goes there
    summary = sys.stdout if args.out is not None else sys.stderr
    summary.write(f"residual_max: {spectrum.residual_max:.3e}\n")
    summary.write(f"alpha0: {'present' if spectrum.alpha0 is not None else 'absent'}\n")
    return 0
