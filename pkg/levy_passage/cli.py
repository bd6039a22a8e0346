"""CLI argument helpers for the ``levy-passage`` command."""

# Copyright (c) 2025 Nicholas M. Synovic

import argparse
from argparse import ArgumentParser, Namespace
from pathlib import Path

from levy_passage import APPLICATION_NAME, THREADS_ENV_VAR

DEFAULT_LEVELS: tuple[float, ...] = (0.5, 1.0, 2.0)
DEFAULT_HORIZONS: tuple[float, ...] = (1.0, 10.0, 100.0)


class CLI:
    """Reusable argument definitions for levy-passage sub-commands."""

    @staticmethod
    def add_config_argument(
        parser: argparse.ArgumentParser,
        *,
        help_text: str,
    ) -> None:
        """
        Add the positional JSON input of a sub-command.

        Args:
            parser: The argument parser to augment.
            help_text: Description of the expected file.

        """
        parser.add_argument("config", type=Path, help=help_text)

    @staticmethod
    def add_out_dir_argument(
        parser: argparse.ArgumentParser,
        *,
        required: bool = False,
    ) -> None:
        """
        Add the ``--out-dir`` argument to a parser.

        Args:
            parser: The argument parser to augment.
            required: Whether the argument is mandatory.

        """
        parser.add_argument(
            "-o",
            "--out-dir",
            required=required,
            type=Path,
            default=None,
            help="Directory to write results to. Default: the config's output_dir.",
        )

    @staticmethod
    def add_threads_argument(parser: argparse.ArgumentParser) -> None:
        """
        Add the ``--threads`` argument to a parser.

        Args:
            parser: The argument parser to augment.

        """
        parser.add_argument(
            "-t",
            "--threads",
            type=int,
            default=None,
            help=(
                "Worker processes for path simulation. "
                f"Default: ${THREADS_ENV_VAR}, else 1. Results do not depend on it."
            ),
        )

    @staticmethod
    def add_log_level_argument(parser: argparse.ArgumentParser) -> None:
        parser.add_argument(
            "--log-level",
            default="WARNING",
            choices=("DEBUG", "INFO", "WARNING", "ERROR"),
            help="Console log level. The log file always records DEBUG.",
        )

    @staticmethod
    def add_calibration_arguments(parser: argparse.ArgumentParser) -> None:
        """
        Add the oracle grid arguments of ``calibrate``.

        Args:
            parser: The argument parser to augment.

        """
        parser.add_argument(
            "--levels",
            type=float,
            nargs="+",
            default=list(DEFAULT_LEVELS),
            help="Constant boundary levels a.",
        )
        parser.add_argument(
            "--horizons",
            type=float,
            nargs="+",
            default=list(DEFAULT_HORIZONS),
            help="Horizons T.",
        )
        parser.add_argument(
            "--paths",
            type=int,
            default=10_000,
            help="Paths per grid point.",
        )
        parser.add_argument("--seed", type=int, default=0, help="Master seed.")
        parser.add_argument(
            "--lemmas",
            action="store_true",
            help="Also run the Monte Carlo lemma checks (slow).",
        )

    def run(self) -> Namespace:
        """
        Build and run the CLI argument parser.

        Returns:
            Parsed command-line arguments as a Namespace object.

        """
        # Setup top level parser
        parser = ArgumentParser(
            prog=APPLICATION_NAME,
            description=(
                f"{APPLICATION_NAME}: Monte Carlo first-passage probabilities "
                "of Levy processes over moving boundaries."
            ),
            epilog=(
                "Exit codes: 0 success, 1 no command, 2 invalid configuration, "
                "3 simulation error, 4 zero survival without importance sampling."
            ),
        )

        # Setup subparser handler
        subparsers = parser.add_subparsers(dest="command")

        run_parser = subparsers.add_parser(
            "run",
            help="Run one experiment and write its curve, fit and plot data.",
        )
        self.add_config_argument(run_parser, help_text="Experiment JSON file.")

        suite_parser = subparsers.add_parser(
            "suite",
            help="Run every experiment listed in a suite file.",
        )
        self.add_config_argument(suite_parser, help_text="Suite JSON file.")

        boundary_parser = subparsers.add_parser(
            "check-boundary",
            help="Classify a boundary and report its iteration counts.",
        )
        self.add_config_argument(boundary_parser, help_text="Boundary JSON file.")

        bounds_parser = subparsers.add_parser(
            "verify-bounds",
            help="Check the iterated-map inequalities for a set of constants.",
        )
        self.add_config_argument(bounds_parser, help_text="Constants JSON file.")

        calibrate_parser = subparsers.add_parser(
            "calibrate",
            help="Compare Brownian estimates against the closed form.",
        )
        self.add_calibration_arguments(calibrate_parser)

        for sub in (
            run_parser,
            suite_parser,
            boundary_parser,
            bounds_parser,
            calibrate_parser,
        ):
            self.add_out_dir_argument(sub)
            self.add_log_level_argument(sub)
        for sub in (run_parser, suite_parser, calibrate_parser):
            self.add_threads_argument(sub)

        # Parse args
        return parser.parse_args()
