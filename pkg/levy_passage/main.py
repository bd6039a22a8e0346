"""Entry point for the ``levy-passage`` command-line application."""

# Copyright (c) 2025 Nicholas M. Synovic

import sys
from argparse import Namespace
from pathlib import Path

from pydantic import ValidationError

from levy_passage import APPLICATION_NAME, PACKAGE_NAME
from levy_passage.cli import CLI
from levy_passage.errors import (
    EXIT_INVALID_CONFIG,
    EXIT_NO_COMMAND,
    EXIT_OK,
    EXIT_SIMULATION_ERROR,
    DomainError,
    PassageError,
)
from levy_passage.experiment import (
    BoundaryCheckConfig,
    ExperimentConfig,
    SuiteConfig,
    VerifyBoundsConfig,
)
from levy_passage.experiment.checks import (
    calibrate,
    check_boundary,
    check_lemmas,
    verify_bounds,
)
from levy_passage.experiment.runner import ExperimentRunner
from levy_passage.logger import PassageLogger
from levy_passage.oracles import LemmaConfig
from levy_passage.utils import PassageUtils

DEFAULT_OUT_DIR: Path = Path("results")


def dispatch(args: Namespace, logger: PassageLogger) -> int:
    """
    Run the selected sub-command.

    Returns:
        The exit code of a successful command.

    """
    out_dir: Path | None = args.out_dir

    if args.command == "run":
        threads: int = PassageUtils.resolve_threads(args.threads)
        config = ExperimentConfig.from_file(args.config)
        ExperimentRunner(logger, threads, out_dir).run(config)

    elif args.command == "suite":
        threads = PassageUtils.resolve_threads(args.threads)
        suite = SuiteConfig.from_file(args.config)
        ExperimentRunner(logger, threads, out_dir).run_suite(
            suite, args.config.parent
        )

    elif args.command == "check-boundary":
        report = check_boundary(BoundaryCheckConfig.from_file(args.config))
        target: Path = out_dir or DEFAULT_OUT_DIR
        target.mkdir(parents=True, exist_ok=True)
        PassageUtils.save_json(
            report.model_dump(mode="json"), target / "boundary_report.json"
        )
        print(report.model_dump_json(indent=4))  # noqa: T201

    elif args.command == "verify-bounds":
        config = VerifyBoundsConfig.from_file(args.config)
        bounds = verify_bounds(config, out_dir or DEFAULT_OUT_DIR)
        print(  # noqa: T201
            f"checked={bounds.checked} violations={len(bounds.violations)} "
            f"out_of_validity={len(bounds.out_of_validity)} ok={bounds.ok}"
        )
        if not bounds.ok:
            return EXIT_SIMULATION_ERROR

    elif args.command == "calibrate":
        threads = PassageUtils.resolve_threads(args.threads)
        target = out_dir or DEFAULT_OUT_DIR
        path = calibrate(
            target, args.levels, args.horizons, args.paths, args.seed, threads
        )
        print(f"Wrote {path}")  # noqa: T201
        if args.lemmas:
            lemmas = check_lemmas(target, LemmaConfig(seed=args.seed), threads)
            print(f"lemma checks ok={lemmas.ok}")  # noqa: T201
            if not lemmas.ok:
                return EXIT_SIMULATION_ERROR

    else:
        return EXIT_NO_COMMAND

    return EXIT_OK


def main() -> int:
    """Entry point for the levy-passage CLI application."""
    args = CLI().run()

    if args.command is None:
        sys.exit(EXIT_NO_COMMAND)

    logger: PassageLogger = PassageLogger(name=PACKAGE_NAME)
    logger.setup_file_logging(prefix=APPLICATION_NAME)
    logger.setup_console_logging(level=args.log_level)

    try:
        code: int = dispatch(args, logger)
    except ValidationError as error:
        logger.get_logger().error("Invalid configuration: %s", error)
        code = EXIT_INVALID_CONFIG
    except PassageError as error:
        logger.get_logger().error("%s", error)  # noqa: TRY400
        code = error.exit_code
    except DomainError as error:
        logger.get_logger().error("Invalid configuration: %s", error)
        code = EXIT_INVALID_CONFIG

    sys.exit(code)


if __name__ == "__main__":
    main()
