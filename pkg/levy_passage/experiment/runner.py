from __future__ import annotations

import time
from logging import Logger
from pathlib import Path

from progress.bar import Bar

from levy_passage import PACKAGE_NAME
from levy_passage.db import Catalog
from levy_passage.errors import (
    ConfigError,
    DomainError,
    PassageError,
    SimulationError,
    ZeroSurvivalError,
)
from levy_passage.experiment import (
    CATALOG_NAME,
    CODE_VERSION,
    CURVE_SUFFIX,
    FIT_SUFFIX,
    PLOT_DATA_SUFFIX,
    PLOT_SCRIPT_SUFFIX,
    ExperimentConfig,
    Manifest,
    RunResult,
    SuiteConfig,
)
from levy_passage.experiment.estimate import ExperimentEstimate
from levy_passage.experiment.load import ExperimentLoad
from levy_passage.experiment.plot import emit_plot_data
from levy_passage.logger import PassageLogger
from levy_passage.passage_mc import ExponentFit, SurvivalCurve, fit_exponent
from levy_passage.utils import PassageUtils

ZERO_SURVIVAL_GUIDANCE: str = (
    "a horizon has zero estimated survival; rerun with \"method\": \"importance\", "
    "more paths, or a smaller T_max"
)


class ExperimentRunner:
    """Estimate, fit, write and catalog experiments."""

    def __init__(
        self,
        passage_logger: PassageLogger,
        threads: int = 1,
        out_dir: Path | None = None,
        *,
        use_catalog: bool = True,
    ) -> None:
        self.passage_logger: PassageLogger = passage_logger
        self.logger: Logger = passage_logger.get_logger()
        self.threads: int = threads
        self.out_dir: Path | None = out_dir
        self.use_catalog: bool = use_catalog
        self.estimate: ExperimentEstimate = ExperimentEstimate(
            passage_logger=passage_logger,
            threads=threads,
        )

    def _effective(self, config: ExperimentConfig) -> ExperimentConfig:
        if self.out_dir is None:
            return config
        return config.model_copy(update={"output_dir": self.out_dir})

    def _curve(self, config: ExperimentConfig) -> SurvivalCurve:
        try:
            return self.estimate.estimate_curve(config)
        except PassageError:
            raise
        except DomainError as error:
            msg = f"Experiment `{config.name or config.config_hash}` is invalid: {error}"
            raise ConfigError(msg) from error
        except (ArithmeticError, ValueError, RuntimeError, MemoryError) as error:
            msg = f"Simulation failed for `{config.name or config.config_hash}`: {error}"
            raise SimulationError(msg) from error

    def run(self, config: ExperimentConfig) -> RunResult:
        """
        Run one experiment end to end.

        Files are named by the config hash, so an identical config overwrites
        its own earlier outputs with identical numbers.

        Returns:
            The finished run.

        Raises:
            ConfigError: For an invalid process, boundary or tilt.
            SimulationError: For a numerical failure while sampling.
            ZeroSurvivalError: If a horizon has zero estimated survival; the
                curve, plot data and manifest are written first.

        """
        config = self._effective(config)
        config.output_dir.mkdir(parents=True, exist_ok=True)
        config_hash: str = config.config_hash
        self.logger.info("Running experiment %s (%s)", config.name, config_hash)

        started: float = time.perf_counter()
        curve = self._curve(config)
        fit: ExponentFit | None = None
        failure: ZeroSurvivalError | None = None
        try:
            fit = fit_exponent(curve, config.fit_skip_decades)
        except ZeroSurvivalError as error:
            failure = ZeroSurvivalError(f"{error}; {ZERO_SURVIVAL_GUIDANCE}")
        except DomainError as error:
            msg = f"Cannot fit an exponent: {error}"
            raise ConfigError(msg) from error

        run = RunResult(
            config_hash=config_hash,
            output_dir=config.output_dir,
            curve=curve,
            fit=fit,
            effective_sample_sizes=self.estimate.effective_sample_sizes,
        )
        catalog: Catalog | None = (
            Catalog(self.passage_logger, config.output_dir / CATALOG_NAME)
            if self.use_catalog
            else None
        )
        load = ExperimentLoad(passage_logger=self.passage_logger, catalog=catalog)
        load.write_curve(run)
        plot = emit_plot_data(run)

        files: dict[str, str] = {
            "curve": run.path(CURVE_SUFFIX).name,
            "plot_data": run.path(PLOT_DATA_SUFFIX).name,
            "plot_script": run.path(PLOT_SCRIPT_SUFFIX).name,
        }
        if fit is not None:
            files["fit"] = run.path(FIT_SUFFIX).name
        manifest = Manifest(
            config_hash=config_hash,
            seed=config.seed,
            method=config.method,
            code_version=CODE_VERSION,
            wall_time_seconds=time.perf_counter() - started,
            created=PassageUtils.get_timestamp(),
            threads=self.threads,
            censored=plot.censored,
            files=files,
            config=config.model_dump(mode="json", by_alias=True, exclude={"output_dir"}),
        )
        run = run.model_copy(update={"manifest": manifest})
        load.load_data(run)

        if failure is not None:
            raise failure
        if fit is not None:
            self.logger.info(
                "delta_hat=%.4f +/- %.4f over T in [%g, %g]",
                fit.delta_hat,
                fit.stderr,
                fit.window[0],
                fit.window[1],
            )
        return run

    def run_suite(self, suite: SuiteConfig, base_dir: Path) -> list[RunResult]:
        """Run every experiment of a suite in order; the first failure stops the suite."""
        configs: list[ExperimentConfig] = suite.resolve(base_dir)
        results: list[RunResult] = []
        with Bar("Running suite... ", max=len(configs)) as bar:
            for config in configs:
                results.append(self.run(config))
                bar.next()
        return results


def run_experiment(
    config: ExperimentConfig,
    *,
    threads: int = 1,
    out_dir: Path | None = None,
    use_catalog: bool = True,
) -> RunResult:
    """Run one experiment with a package-level logger."""
    runner = ExperimentRunner(
        PassageLogger(name=PACKAGE_NAME),
        threads,
        out_dir,
        use_catalog=use_catalog,
    )
    return runner.run(config)


def run_suite(
    suite: SuiteConfig,
    base_dir: Path,
    *,
    threads: int = 1,
    out_dir: Path | None = None,
) -> list[RunResult]:
    """Run a suite with a package-level logger."""
    runner = ExperimentRunner(PassageLogger(name=PACKAGE_NAME), threads, out_dir)
    return runner.run_suite(suite, base_dir)
