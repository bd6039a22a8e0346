from __future__ import annotations

from logging import Logger

from progress.bar import Bar

from levy_passage.boundary import (
    Boundary,
    ConstantBoundary,
    ConstantBoundarySpec,
    PowerBoundary,
)
from levy_passage.errors import DomainError
from levy_passage.experiment import WEIGHTS_SUFFIX, ExperimentConfig
from levy_passage.logger import PassageLogger
from levy_passage.passage_mc import (
    HORIZON_STREAM_STRIDE,
    CrudeEstimator,
    SurvivalCurve,
    SurvivalEstimate,
    horizon_grid,
)
from levy_passage.tilt_is import Side, importance_tally, make_tilt


def split_boundary(
    config: ExperimentConfig,
) -> tuple[Boundary, Boundary, Side]:
    """
    Write the configured boundary as ``g - f`` or ``g + f`` with ``f`` non-decreasing.

    Returns:
        ``(g, f, side)``; constant boundaries get ``f = 0`` on the configured
        side (negative by default).

    """
    spec = config.boundary
    if isinstance(spec, ConstantBoundarySpec):
        return (
            ConstantBoundary(spec.value),
            ConstantBoundary(0.0),
            config.tilt.side or "negative",
        )
    side: Side = "negative" if spec.sign == "minus" else "positive"
    if config.tilt.side is not None and config.tilt.side != side:
        msg = f"tilt side {config.tilt.side!r} does not match a {spec.sign!r} boundary"
        raise DomainError(msg)
    return ConstantBoundary(spec.offset), PowerBoundary(spec.gamma), side


class ExperimentEstimate:
    """Estimate the survival curve of one experiment, crude or weighted."""

    def __init__(self, passage_logger: PassageLogger, threads: int = 1) -> None:
        self.logger: Logger = passage_logger.get_logger()
        self.threads: int = threads
        self.effective_sample_sizes: tuple[float, ...] | None = None

    def _crude(self, config: ExperimentConfig) -> SurvivalCurve:
        triplet = config.process.to_triplet()
        boundary = config.boundary.to_boundary()
        estimator = CrudeEstimator(triplet, boundary, config.sim_config, self.threads)
        horizons = horizon_grid(
            config.horizons.t_min,
            config.horizons.t_max,
            config.horizons.points_per_decade,
        )
        estimates: list[SurvivalEstimate] = []
        with Bar("Estimating survival... ", max=len(horizons)) as bar:
            for index, horizon in enumerate(horizons):
                estimate = estimator.estimate(
                    float(horizon),
                    config.n_paths,
                    config.seed,
                    stream_offset=index * HORIZON_STREAM_STRIDE,
                )
                self.logger.info(
                    "T=%g p=%.6g [%.6g, %.6g]",
                    horizon,
                    estimate.p_hat,
                    estimate.ci_low,
                    estimate.ci_high,
                )
                estimates.append(estimate)
                bar.next()
        return SurvivalCurve.from_estimates(estimates)

    def _importance(self, config: ExperimentConfig) -> SurvivalCurve:
        triplet = config.process.to_triplet()
        effective, moving, side = split_boundary(config)
        spec = make_tilt(
            triplet,
            moving,
            side,
            config.tilt.active_from,
            mass_fraction=config.tilt.mass_fraction,
            support=config.tilt.support,
        )
        self.logger.info(
            "Tilting A=[%g, %g] with m=%g from s0=%g",
            spec.support[0],
            spec.support[1],
            spec.m,
            spec.active_from,
        )
        horizons = horizon_grid(
            config.horizons.t_min,
            config.horizons.t_max,
            config.horizons.points_per_decade,
        )
        estimates: list[SurvivalEstimate] = []
        sizes: list[float] = []
        with Bar("Estimating weighted survival... ", max=len(horizons)) as bar:
            for index, horizon in enumerate(horizons):
                tally = importance_tally(
                    triplet,
                    effective,
                    spec,
                    float(horizon),
                    config.sim_config,
                    config.seed,
                    index * HORIZON_STREAM_STRIDE,
                    config.n_paths,
                    threads=self.threads,
                )
                estimate = tally.estimate()
                if config.tilt.dump_weights:
                    tally.dump(
                        config.output_dir
                        / f"{config.config_hash}_T{index}{WEIGHTS_SUFFIX}"
                    )
                self.logger.info(
                    "T=%g p=%.6g ess=%.1f", horizon, estimate.p_hat, estimate.ess
                )
                estimates.append(estimate)
                sizes.append(estimate.ess)
                bar.next()
        self.effective_sample_sizes = tuple(sizes)
        return SurvivalCurve.from_estimates(estimates)

    def estimate_curve(self, config: ExperimentConfig) -> SurvivalCurve:
        self.effective_sample_sizes = None
        if config.method == "importance":
            return self._importance(config)
        return self._crude(config)
