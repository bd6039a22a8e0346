"""Non-exit probability estimates, survival curves and exponent fits."""

from __future__ import annotations

import logging
import math
from pathlib import Path

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, model_validator
from scipy import stats

from levy_passage.batch import evaluate_streams
from levy_passage.boundary import Boundary
from levy_passage.errors import DomainError, ZeroSurvivalError
from levy_passage.interfaces import EstimatorInterface, PathTask
from levy_passage.levy_model import LevyTriplet, require_valid
from levy_passage.simulate import (
    RngStamp,
    SimConfig,
    no_exit_indicator,
    sample_path,
    simulation_grid,
)

LOGGER: logging.Logger = logging.getLogger(__name__)

MIN_PATHS: int = 100
MIN_GRID_RATIO: float = 16.0
MIN_FIT_HORIZONS: int = 4
HORIZON_STREAM_STRIDE: int = 2**32
Z_95: float = float(stats.norm.ppf(0.975))


class SurvivalEstimate(BaseModel):
    """Point estimate and 95% interval of one non-exit probability."""

    model_config = ConfigDict(frozen=True)

    horizon: float
    p_hat: float
    ci_low: float
    ci_high: float
    stderr: float
    n_paths: int


class SurvivalCurve(BaseModel):
    """Estimates on a geometric horizon grid."""

    model_config = ConfigDict(frozen=True)

    horizons: tuple[float, ...]
    estimates: tuple[float, ...]
    ci_low: tuple[float, ...]
    ci_high: tuple[float, ...]
    n_paths: int

    @model_validator(mode="after")
    def _check_shape(self) -> SurvivalCurve:
        size: int = len(self.horizons)
        if not len(self.estimates) == len(self.ci_low) == len(self.ci_high) == size:
            msg = "curve columns differ in length"
            raise ValueError(msg)
        for low, p, high in zip(self.ci_low, self.estimates, self.ci_high, strict=True):
            if not low <= p <= high:
                msg = f"interval [{low}, {high}] does not contain {p}"
                raise ValueError(msg)
        return self

    @classmethod
    def from_estimates(cls, estimates: list[SurvivalEstimate]) -> SurvivalCurve:
        return cls(
            horizons=tuple(e.horizon for e in estimates),
            estimates=tuple(e.p_hat for e in estimates),
            ci_low=tuple(e.ci_low for e in estimates),
            ci_high=tuple(e.ci_high for e in estimates),
            n_paths=min(e.n_paths for e in estimates),
        )

    def standard_errors(self) -> np.ndarray:
        p = np.asarray(self.estimates)
        return np.sqrt(p * (1.0 - p) / self.n_paths)

    def is_monotone(self, tolerance_se: float = 2.0) -> bool:
        """Whether estimates never rise by more than ``tolerance_se`` combined SEs."""
        p = np.asarray(self.estimates)
        se = self.standard_errors()
        combined = np.sqrt(se[:-1] ** 2 + se[1:] ** 2)
        return bool(np.all(np.diff(p) <= tolerance_se * combined + 1e-15))


class ExponentFit(BaseModel):
    """Weighted log-log regression of a survival curve."""

    model_config = ConfigDict(frozen=True)

    delta_hat: float
    slope: float
    stderr: float
    window: tuple[float, float]
    n_horizons: int


class PathTally(BaseModel):
    """Per-path weights of one horizon; merging keeps the pooled estimate exact."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    horizon: float
    weights: np.ndarray

    def merge(self, other: PathTally) -> PathTally:
        return PathTally(
            horizon=self.horizon,
            weights=np.concatenate([self.weights, other.weights]),
        )

    def estimate(self) -> SurvivalEstimate:
        """
        Mean weight with a Wilson interval.

        Returns:
            The estimate; the standard error is the sample standard deviation
            of the weights over ``sqrt(n)``.

        """
        n: int = int(self.weights.size)
        total: float = math.fsum(self.weights.tolist())
        p_hat: float = total / n
        squares: float = math.fsum((self.weights * self.weights).tolist())
        variance: float = max(squares - n * p_hat * p_hat, 0.0) / max(n - 1, 1)
        low, high = wilson_interval(p_hat, n)
        return SurvivalEstimate(
            horizon=self.horizon,
            p_hat=p_hat,
            ci_low=min(low, p_hat),
            ci_high=max(high, p_hat),
            stderr=math.sqrt(variance / n),
            n_paths=n,
        )


def wilson_interval(p_hat: float, n: int, z: float = Z_95) -> tuple[float, float]:
    """
    Wilson score interval for a proportion.

    Args:
        p_hat: Observed proportion in ``[0, 1]``.
        n: Number of trials.
        z: Normal quantile, 95% by default.

    Returns:
        Lower and upper bounds clipped to ``[0, 1]``.

    """
    p: float = min(max(p_hat, 0.0), 1.0)
    z2: float = z * z
    denominator: float = 1.0 + z2 / n
    centre: float = (p + z2 / (2.0 * n)) / denominator
    half: float = z * math.sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denominator
    return max(centre - half, 0.0), min(centre + half, 1.0)


class CrudeSurvivalTask(PathTask):
    """Simulate one path and check it against the boundary."""

    width: int = 2

    def __init__(  # noqa: PLR0913
        self,
        triplet: LevyTriplet,
        boundary: Boundary,
        horizon: float,
        cfg: SimConfig,
        seed: int,
        start: float = 0.0,
    ) -> None:
        self.triplet: LevyTriplet = triplet
        self.boundary: Boundary = boundary
        self.horizon: float = horizon
        self.cfg: SimConfig = cfg
        self.seed: int = seed
        self.start: float = start
        self.breakpoints: tuple[float, ...] = (start,) if start > 0.0 else ()
        grid = simulation_grid(horizon, cfg, self.breakpoints)
        self.boundary_grid: np.ndarray = np.asarray(boundary.value(grid))

    def evaluate(self, stream_index: int) -> tuple[float, float]:
        stamp = RngStamp(seed=self.seed, stream_index=stream_index)
        path = sample_path(
            self.triplet,
            self.horizon,
            self.cfg,
            stamp,
            breakpoints=self.breakpoints,
        )
        check = no_exit_indicator(
            path,
            self.boundary,
            self.cfg,
            stamp,
            start=self.start,
            boundary_grid=self.boundary_grid,
        )
        return float(check.indicator), check.weight


def _check_paths(n_paths: int) -> None:
    if n_paths < MIN_PATHS:
        msg = f"n_paths must be at least {MIN_PATHS}, got {n_paths}"
        raise DomainError(msg)


def crude_tally(  # noqa: PLR0913
    triplet: LevyTriplet,
    boundary: Boundary,
    horizon: float,
    cfg: SimConfig,
    seed: int,
    first: int,
    count: int,
    *,
    start: float = 0.0,
    threads: int = 1,
) -> PathTally:
    """Correction-weighted indicators of paths ``first .. first + count - 1``."""
    require_valid(triplet)
    task = CrudeSurvivalTask(triplet, boundary, horizon, cfg, seed, start)
    rows = evaluate_streams(task, first, count, threads)
    return PathTally(horizon=horizon, weights=rows[:, 1])


class CrudeEstimator(EstimatorInterface):
    """Plain Monte Carlo estimator of ``P(X(t) <= f(t), t <= T)``."""

    def __init__(
        self,
        triplet: LevyTriplet,
        boundary: Boundary,
        cfg: SimConfig,
        threads: int = 1,
    ) -> None:
        self.triplet: LevyTriplet = triplet
        self.boundary: Boundary = boundary
        self.cfg: SimConfig = cfg
        self.threads: int = threads

    def estimate(
        self,
        horizon: float,
        n_paths: int,
        seed: int,
        stream_offset: int = 0,
    ) -> SurvivalEstimate:
        _check_paths(n_paths)
        tally = crude_tally(
            self.triplet,
            self.boundary,
            horizon,
            self.cfg,
            seed,
            stream_offset,
            n_paths,
            threads=self.threads,
        )
        return tally.estimate()


def estimate_survival(  # noqa: PLR0913
    triplet: LevyTriplet,
    boundary: Boundary,
    horizon: float,
    n_paths: int,
    cfg: SimConfig,
    seed: int,
    *,
    threads: int = 1,
    stream_offset: int = 0,
) -> SurvivalEstimate:
    """
    Estimate ``P(X(t) <= f(t), 0 <= t <= T)`` from ``n_paths`` paths.

    Args:
        triplet: Process law.
        boundary: Barrier ``f``.
        horizon: ``T``.
        n_paths: At least 100.
        cfg: Discretisation settings.
        seed: Key of the path streams.
        threads: Worker processes.
        stream_offset: First stream index.

    Returns:
        Mean of the correction-weighted indicators with its Wilson interval.

    """
    return CrudeEstimator(triplet, boundary, cfg, threads).estimate(
        horizon, n_paths, seed, stream_offset
    )


def estimate_window_survival(  # noqa: PLR0913
    triplet: LevyTriplet,
    boundary: Boundary,
    start: float,
    end: float,
    n_paths: int,
    cfg: SimConfig,
    seed: int,
    *,
    threads: int = 1,
    stream_offset: int = 0,
) -> SurvivalEstimate:
    """
    Estimate ``P(X(t) <= f(t), start <= t <= end)``.

    Raises:
        DomainError: If the window is empty or ``n_paths < 100``.

    """
    _check_paths(n_paths)
    if not 0.0 <= start < end:
        msg = f"window [{start!r}, {end!r}] is empty"
        raise DomainError(msg)
    tally = crude_tally(
        triplet,
        boundary,
        end,
        cfg,
        seed,
        stream_offset,
        n_paths,
        start=start,
        threads=threads,
    )
    return tally.estimate()


def horizon_grid(t_min: float, t_max: float, points_per_decade: float) -> np.ndarray:
    """
    Geometric horizons from ``t_min`` to ``t_max`` inclusive.

    Raises:
        DomainError: If ``t_min < 1`` or ``t_max / t_min < 16``.

    """
    if t_min < 1.0 or t_max < MIN_GRID_RATIO * t_min:
        msg = (
            f"grid too small: need T_min >= 1 and T_max/T_min >= {MIN_GRID_RATIO:g}, "
            f"got [{t_min!r}, {t_max!r}]"
        )
        raise DomainError(msg)
    if points_per_decade <= 0.0:
        msg = f"points_per_decade must be positive, got {points_per_decade!r}"
        raise DomainError(msg)
    count: int = round(math.log10(t_max / t_min) * points_per_decade) + 1
    grid = np.geomspace(t_min, t_max, max(count, 2))
    grid[0], grid[-1] = t_min, t_max
    return grid


def curve_from_estimator(
    estimator: EstimatorInterface,
    horizons: np.ndarray,
    n_paths: int,
    seed: int,
) -> SurvivalCurve:
    """Estimate every horizon from its own block of streams."""
    estimates: list[SurvivalEstimate] = []
    for index, horizon in enumerate(horizons):
        estimate = estimator.estimate(
            float(horizon),
            n_paths,
            seed,
            stream_offset=index * HORIZON_STREAM_STRIDE,
        )
        LOGGER.debug(
            "T=%g p=%.6g [%.6g, %.6g]",
            horizon,
            estimate.p_hat,
            estimate.ci_low,
            estimate.ci_high,
        )
        estimates.append(estimate)
    return SurvivalCurve.from_estimates(estimates)


def survival_curve(  # noqa: PLR0913
    triplet: LevyTriplet,
    boundary: Boundary,
    t_min: float,
    t_max: float,
    points_per_decade: float,
    n_paths: int,
    cfg: SimConfig,
    seed: int,
    *,
    threads: int = 1,
) -> SurvivalCurve:
    """Crude survival curve on a geometric grid with disjoint path sets."""
    horizons = horizon_grid(t_min, t_max, points_per_decade)
    estimator = CrudeEstimator(triplet, boundary, cfg, threads)
    return curve_from_estimator(estimator, horizons, n_paths, seed)


def fit_exponent(
    curve: SurvivalCurve,
    skip_decades: float = 1.0,
) -> ExponentFit:
    """
    Fit ``ln p = c - delta ln T`` by weighted least squares.

    Weights are inverse delta-method variances ``(1 - p) / (n p)`` of
    ``ln p``. Horizons within ``skip_decades`` of the smallest are left out
    unless that leaves fewer than four, in which case the four largest are used.

    Args:
        curve: Survival curve with positive estimates.
        skip_decades: Leading decades excluded from the fit.

    Returns:
        The fit; ``delta_hat`` is clipped at 0.

    Raises:
        ZeroSurvivalError: If any estimate is zero.
        DomainError: If the curve has fewer than four horizons.

    """
    horizons = np.asarray(curve.horizons)
    p = np.asarray(curve.estimates)
    if np.any(p <= 0.0):
        msg = (
            "survival estimate is zero at some horizon; use importance sampling "
            "or fewer decades"
        )
        raise ZeroSurvivalError(msg)
    if horizons.size < MIN_FIT_HORIZONS:
        msg = f"exponent fit needs at least {MIN_FIT_HORIZONS} horizons"
        raise DomainError(msg)

    mask = horizons >= horizons[0] * 10.0**skip_decades * (1.0 - 1e-12)
    if int(mask.sum()) < MIN_FIT_HORIZONS:
        mask = np.zeros(horizons.size, dtype=bool)
        mask[-MIN_FIT_HORIZONS:] = True

    n: int = curve.n_paths
    variance = np.maximum((1.0 - p[mask]) / (n * p[mask]), 1.0 / (n * n))
    coefficients, covariance = np.polyfit(
        np.log(horizons[mask]),
        np.log(p[mask]),
        1,
        w=1.0 / np.sqrt(variance),
        cov="unscaled",
    )
    slope: float = float(coefficients[0])
    return ExponentFit(
        delta_hat=max(0.0, -slope),
        slope=slope,
        stderr=math.sqrt(max(float(covariance[0, 0]), 0.0)),
        window=(float(horizons[mask][0]), float(horizons[mask][-1])),
        n_horizons=int(mask.sum()),
    )


def curve_to_csv(curve: SurvivalCurve, path: Path) -> Path:
    """Write ``T,p,ci_low,ci_high,n`` rows."""
    pd.DataFrame(
        {
            "T": curve.horizons,
            "p": curve.estimates,
            "ci_low": curve.ci_low,
            "ci_high": curve.ci_high,
            "n": curve.n_paths,
        }
    ).to_csv(path, index=False)
    return path


def curve_from_csv(path: Path) -> SurvivalCurve:
    """Read a curve written by :func:`curve_to_csv` without loss."""
    frame = pd.read_csv(path, float_precision="round_trip")
    return SurvivalCurve(
        horizons=tuple(frame["T"].astype(float)),
        estimates=tuple(frame["p"].astype(float)),
        ci_low=tuple(frame["ci_low"].astype(float)),
        ci_high=tuple(frame["ci_high"].astype(float)),
        n_paths=int(frame["n"].min()),
    )
