"""Command line entry point: solar-flow run <experiment> | verify <suite>"""
import argparse
import logging
import sys
from typing import List, Optional

from .experiment import Experiment
from .runner import EXIT_ERROR, run_sweep
from .suites import SUITES, verify

LOGGER = logging.getLogger(__name__)


def parse_arguments(argv: Optional[List[str]] = None) -> argparse.Namespace:
    """
    Parse command-line arguments.

    Parameters
    ------------------------
    argv: Optional[List[str]]
        Arguments without the program name. Default sys.argv[1:].

    Returns
    ------------------------
    argparse.Namespace
        The parsed arguments.
    """
    parser = argparse.ArgumentParser(
        prog="solar-flow",
        description="Central-force simulations of the mu-lambda and OSW "
        "families, with acceptance suites.",
    )
    parser.add_argument(
        "--verbose", action="store_true", help="Log debug information."
    )
    commands = parser.add_subparsers(dest="command", required=True)

    run = commands.add_parser("run", help="Run an experiment file.")
    run.add_argument(
        "experiment_file", type=str, help="Path of the yaml experiment."
    )
    run.add_argument("--n", type=int, default=None, help="Grid size.")
    run.add_argument("--dt", type=float, default=None, help="Time step.")
    run.add_argument("--t-end", type=float, default=None, help="Horizon.")
    run.add_argument("--out", type=str, default=None, help="Output folder.")

    check = commands.add_parser("verify", help="Run an acceptance suite.")
    check.add_argument("suite", type=str, help=f"One of {sorted(SUITES)}.")
    check.add_argument(
        "--out", type=str, default="verify", help="Output folder."
    )
    return parser.parse_args(argv)


def configure_logging(verbose: bool) -> None:
    """
    Sends log records to standard error.

    Parameters
    ------------------------
    verbose: bool
        DEBUG when true, INFO otherwise.
    """
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
        force=True,
    )


def main(argv: Optional[List[str]] = None) -> int:
    """
    Runs the requested command.

    Parameters
    ------------------------
    argv: Optional[List[str]]
        Arguments without the program name. Default sys.argv[1:].

    Returns
    ------------------------
    int
        0 completed, 2 breakdown reached with stop-at-breakdown, 1 error.
    """
    arguments = parse_arguments(argv)
    configure_logging(arguments.verbose)

    try:
        if arguments.command == "verify":
            return verify(arguments.suite, arguments.out)

        experiment = Experiment.from_yaml(
            arguments.experiment_file, verbose=arguments.verbose
        ).with_overrides(
            n=arguments.n,
            dt=arguments.dt,
            t_end=arguments.t_end,
            output_dir=arguments.out,
        )
        return run_sweep(experiment)
    except (OSError, ValueError, RuntimeError) as error:
        LOGGER.error("%s: %s", type(error).__name__, error)
        print(f"solar-flow: {error}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
