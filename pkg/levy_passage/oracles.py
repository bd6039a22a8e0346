"""
Reference values for the simulator: closed forms, stable positivity
parameters, Spitzer probes, the Brownian calibration grid and an empirical
battery for the auxiliary lemmas of the exit-problem proofs.
"""

from __future__ import annotations

import logging
import math
from typing import Any

import numpy as np
import pandas as pd
from numpy.typing import ArrayLike
from progress.bar import Bar
from pydantic import BaseModel, ConfigDict, Field
from scipy import special

from levy_passage.batch import evaluate_streams
from levy_passage.boundary import Boundary, ConstantBoundary, PowerBoundary, Scalar
from levy_passage.errors import DomainError
from levy_passage.interfaces import PathTask
from levy_passage.levy_model import (
    JumpMeasure,
    LevyTriplet,
    martingale_normalize,
    require_valid,
)
from levy_passage.passage_mc import (
    HORIZON_STREAM_STRIDE,
    SurvivalEstimate,
    _check_paths,
    estimate_survival,
    estimate_window_survival,
    wilson_interval,
)
from levy_passage.simulate import RngStamp, SimConfig, sample_path

LOGGER: logging.Logger = logging.getLogger(__name__)

BBGR_SAFETY: float = 10.0
HELPLN_LEVEL: float = 3.0
HELPLN_FACTOR: float = 0.5
HELPLN_HORIZON_CAP: float = 4.0
COUP_FLOOR_RATIO: float = 0.5


def bm_no_exit_exact(a: float, sigma2: float, horizon: float) -> float:
    """
    ``P(sigma B(t) <= a, t <= T) = 2 Phi(a / sqrt(sigma2 T)) - 1`` by reflection.

    Evaluated as ``erf(z / sqrt 2)`` with ``z = a / sqrt(sigma2 T)``.

    Raises:
        DomainError: Unless ``a``, ``sigma2`` and ``T`` are positive.

    """
    if not (a > 0.0 and sigma2 > 0.0 and horizon > 0.0):
        msg = f"need a, sigma2, T > 0, got {a!r}, {sigma2!r}, {horizon!r}"
        raise DomainError(msg)
    z: float = a / math.sqrt(sigma2 * horizon)
    return float(special.erf(z / math.sqrt(2.0)))


def stable_rho(alpha: float, skew: float) -> float:
    """
    Positivity parameter ``rho = P(X(t) > 0)`` of a strictly stable law.

    Args:
        alpha: Index in ``(0, 2)``.
        skew: ``beta`` in ``[-1, 1]``.

    Returns:
        ``1/2 + arctan(beta tan(pi alpha / 2)) / (pi alpha)``, kept inside
        the open unit interval.

    Raises:
        DomainError: Outside the parameter ranges, or ``alpha = 1`` with
            ``beta != 0``.

    """
    if not 0.0 < alpha < 2.0 or not -1.0 <= skew <= 1.0:  # noqa: PLR2004
        msg = f"stable parameters out of range: alpha={alpha!r}, beta={skew!r}"
        raise DomainError(msg)
    if alpha == 1.0 and skew != 0.0:
        msg = "alpha = 1 with nonzero skew is not strictly stable"
        raise DomainError(msg)
    rho: float = 0.5 + math.atan(skew * math.tan(math.pi * alpha / 2.0)) / (
        math.pi * alpha
    )
    tiny: float = float(np.finfo(float).eps)
    return min(max(rho, tiny), 1.0 - tiny)


class RhoEstimate(BaseModel):
    """Estimate of ``P(X(t) > 0)`` at one probe time."""

    model_config = ConfigDict(frozen=True)

    probe: float
    p_hat: float
    ci_low: float
    ci_high: float
    n_paths: int


class PositivityTask(PathTask):
    """Signs of ``X`` at the probe times of one path."""

    def __init__(
        self,
        triplet: LevyTriplet,
        probes: tuple[float, ...],
        cfg: SimConfig,
        seed: int,
    ) -> None:
        self.triplet: LevyTriplet = triplet
        self.probes: tuple[float, ...] = probes
        self.cfg: SimConfig = cfg
        self.seed: int = seed
        self.width: int = len(probes)

    def evaluate(self, stream_index: int) -> tuple[float, ...]:
        stamp = RngStamp(seed=self.seed, stream_index=stream_index)
        path = sample_path(
            self.triplet,
            self.probes[-1],
            self.cfg,
            stamp,
            breakpoints=self.probes,
        )
        positions = np.searchsorted(path.times, self.probes)
        return tuple(float(v > 0.0) for v in path.values[positions])


def spitzer_rho_estimate(  # noqa: PLR0913
    triplet: LevyTriplet,
    probes: ArrayLike,
    n_paths: int,
    seed: int,
    *,
    cfg: SimConfig | None = None,
    threads: int = 1,
) -> list[RhoEstimate]:
    """
    Estimate ``P(X(t) > 0)`` at each probe from the same paths.

    The grid consists of the probe times only, so every increment is drawn
    from its exact law.

    Args:
        triplet: Process law.
        probes: Probe times, each at least 1.
        n_paths: At least 100.
        seed: Key of the path streams.
        cfg: Supplies the small-jump cutoff; the step is overridden.
        threads: Worker processes.

    Returns:
        One estimate with Wilson interval per probe, in increasing time.

    Raises:
        DomainError: If a probe is below 1.

    """
    _check_paths(n_paths)
    require_valid(triplet)
    times = tuple(sorted(float(t) for t in np.atleast_1d(probes)))
    if not times or times[0] < 1.0:
        msg = f"probe times must be at least 1, got {times!r}"
        raise DomainError(msg)
    base = cfg or SimConfig()
    probe_cfg = base.model_copy(update={"dt_max": times[-1], "dt_scaling": "fixed"})
    rows = evaluate_streams(
        PositivityTask(triplet, times, probe_cfg, seed), 0, n_paths, threads
    )
    estimates: list[RhoEstimate] = []
    for column, probe in enumerate(times):
        p_hat: float = math.fsum(rows[:, column].tolist()) / n_paths
        low, high = wilson_interval(p_hat, n_paths)
        estimates.append(
            RhoEstimate(
                probe=probe,
                p_hat=p_hat,
                ci_low=low,
                ci_high=high,
                n_paths=n_paths,
            )
        )
    return estimates


def calibration_grid(  # noqa: PLR0913
    levels: ArrayLike,
    horizons: ArrayLike,
    n_paths: int,
    seed: int,
    *,
    sigma2: float = 1.0,
    cfg: SimConfig | None = None,
    threads: int = 1,
) -> pd.DataFrame:
    """
    Compare crude estimates for Brownian motion with the reflection formula.

    Args:
        levels: Constant boundary levels ``a``.
        horizons: Horizons ``T``.
        n_paths: Paths per grid point.
        seed: Key of the path streams; grid points use disjoint stream blocks.
        sigma2: Brownian variance.
        cfg: Discretisation, default ``dt = 0.01 sqrt(T)`` with bridge correction.
        threads: Worker processes.

    Returns:
        One row per ``(a, T)`` with the exact value, the estimate, its
        interval and standard error, the z-score and ``within_3se``.

    """
    settings = cfg or SimConfig(dt_max=0.01, dt_scaling="sqrt")
    triplet = LevyTriplet.brownian(sigma2)
    points = [(float(a), float(t)) for a in np.atleast_1d(levels) for t in np.atleast_1d(horizons)]
    rows: list[dict[str, Any]] = []
    with Bar("Calibrating against the reflection formula... ", max=len(points)) as bar:
        for index, (a, horizon) in enumerate(points):
            exact: float = bm_no_exit_exact(a, sigma2, horizon)
            estimate = estimate_survival(
                triplet,
                ConstantBoundary(a),
                horizon,
                n_paths,
                settings,
                seed,
                threads=threads,
                stream_offset=index * HORIZON_STREAM_STRIDE,
            )
            z: float = (
                (estimate.p_hat - exact) / estimate.stderr if estimate.stderr > 0.0 else 0.0
            )
            rows.append(
                {
                    "a": a,
                    "T": horizon,
                    "exact": exact,
                    "p_hat": estimate.p_hat,
                    "ci_low": estimate.ci_low,
                    "ci_high": estimate.ci_high,
                    "stderr": estimate.stderr,
                    "z": z,
                    "within_3se": abs(estimate.p_hat - exact)
                    <= 3.0 * max(estimate.stderr, 1.0 / n_paths),
                }
            )
            LOGGER.debug("a=%g T=%g exact=%.6f p=%.6f z=%.2f", a, horizon, exact, estimate.p_hat, z)
            bar.next()
    return pd.DataFrame(rows)


class GrowthEnvelopeBoundary(Boundary):
    """``t -> c max{(ln T)^5, t^(3/4)}`` for a fixed horizon ``T``."""

    def __init__(self, scale: float, horizon: float) -> None:
        self.scale: float = float(scale)
        self.floor: float = math.log(horizon) ** 5

    def value(self, t: ArrayLike) -> Scalar:
        times = np.asarray(t, dtype=np.float64)
        values = self.scale * np.maximum(self.floor, times**0.75)
        return values if values.ndim else float(values)

    def derivative(self, t: ArrayLike) -> Scalar:
        times = np.asarray(t, dtype=np.float64)
        with np.errstate(divide="ignore"):
            slope = np.where(
                times**0.75 > self.floor, 0.75 * self.scale * times**-0.25, 0.0
            )
        return slope if slope.ndim else float(slope)


class LemmaConfig(BaseModel):
    """Desk-scale settings of the lemma battery."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    n_paths: int = Field(default=2000, ge=100)
    seed: int = Field(default=0, ge=0)
    dt_max: float = Field(default=0.01, gt=0.0)
    association_trials: int = Field(default=20, ge=1)
    helpln_horizons: tuple[float, ...] = (2.0**6, 2.0**8)
    bbgr_horizon: float = Field(default=2.0**10, gt=1.0)
    bbgr_paths: int = Field(default=100_000, ge=100)
    bbgr_scale: float = Field(default=1.0, gt=0.0)
    bbgr_safety: float = Field(default=BBGR_SAFETY, gt=0.0)
    coup_exponent: float = Field(default=0.6, gt=0.5)
    coup_horizons: tuple[float, ...] = tuple(2.0**k for k in range(4, 13))

    @property
    def sim_config(self) -> SimConfig:
        return SimConfig(dt_max=self.dt_max, dt_scaling="sqrt")


class AssociationTrial(BaseModel):
    model_config = ConfigDict(frozen=True)

    window: tuple[float, float, float]
    whole: float
    product: float
    stderr: float
    holds: bool


class HelplnCheck(BaseModel):
    model_config = ConfigDict(frozen=True)

    horizon: float
    truncated_horizon: float
    lhs: float
    rhs: float
    stderr: float
    holds: bool


class BBgrCheck(BaseModel):
    model_config = ConfigDict(frozen=True)

    horizon: float
    n_paths: int
    frequency: float
    bound: float
    safety: float
    holds: bool


class CoupCheck(BaseModel):
    model_config = ConfigDict(frozen=True)

    exponent: float
    horizons: tuple[float, ...]
    estimates: tuple[float, ...]
    floor: float
    reference: float
    holds: bool


class LemmaReport(BaseModel):
    """Outcome of :func:`lemma_checks`."""

    model_config = ConfigDict(frozen=True)

    association: list[AssociationTrial]
    helpln: list[HelplnCheck]
    bbgr: BBgrCheck
    coup: CoupCheck

    @property
    def ok(self) -> bool:
        return (
            all(t.holds for t in self.association)
            and all(h.holds for h in self.helpln)
            and self.bbgr.holds
            and self.coup.holds
        )


def _association_windows(trials: int) -> list[tuple[float, float, float]]:
    windows: list[tuple[float, float, float]] = []
    for trial in range(trials):
        start: float = 2.0 ** (trial % 3)
        end: float = start * 2.0 ** (3 + trial % 4)
        windows.append((start, math.sqrt(start * end), end))
    return windows


def check_association(config: LemmaConfig, threads: int = 1) -> list[AssociationTrial]:
    """``p[a, c] >= p[a, b] p[b, c] - 2 SE`` for Brownian motion under ``f = 1``."""
    triplet = LevyTriplet.brownian()
    boundary = ConstantBoundary(1.0)
    cfg = config.sim_config
    results: list[AssociationTrial] = []
    for trial, (a, b, c) in enumerate(_association_windows(config.association_trials)):
        offset: int = 3 * trial * HORIZON_STREAM_STRIDE
        estimates: list[SurvivalEstimate] = [
            estimate_window_survival(
                triplet,
                boundary,
                lo,
                hi,
                config.n_paths,
                cfg,
                config.seed,
                threads=threads,
                stream_offset=offset + k * HORIZON_STREAM_STRIDE,
            )
            for k, (lo, hi) in enumerate(((a, c), (a, b), (b, c)))
        ]
        whole, left, right = estimates
        product: float = left.p_hat * right.p_hat
        stderr: float = math.sqrt(
            whole.stderr**2
            + (right.p_hat * left.stderr) ** 2
            + (left.p_hat * right.stderr) ** 2
        )
        results.append(
            AssociationTrial(
                window=(a, b, c),
                whole=whole.p_hat,
                product=product,
                stderr=stderr,
                holds=whole.p_hat >= product - 2.0 * stderr,
            )
        )
    return results


def check_helpln(config: LemmaConfig, threads: int = 1) -> list[HelplnCheck]:
    """
    ``P(X <= 3 on [0, T]) >= 1/2 P(X <= 3 - t^(1/3) on [0, S]) P(X <= 3 + (ln T)^6 on [1, T])``.

    ``S = min((ln T)^21, 4T)``; shortening the first window only raises the
    right-hand side.
    """
    triplet = LevyTriplet.brownian()
    cfg = config.sim_config
    checks: list[HelplnCheck] = []
    for index, horizon in enumerate(config.helpln_horizons):
        offset: int = 3 * index * HORIZON_STREAM_STRIDE
        shortened: float = min(math.log(horizon) ** 21, HELPLN_HORIZON_CAP * horizon)
        lhs = estimate_survival(
            triplet,
            ConstantBoundary(HELPLN_LEVEL),
            horizon,
            config.n_paths,
            cfg,
            config.seed,
            threads=threads,
            stream_offset=offset,
        )
        early = estimate_survival(
            triplet,
            PowerBoundary(1.0 / 3.0, "minus", HELPLN_LEVEL),
            shortened,
            config.n_paths,
            cfg,
            config.seed,
            threads=threads,
            stream_offset=offset + HORIZON_STREAM_STRIDE,
        )
        late = estimate_window_survival(
            triplet,
            ConstantBoundary(HELPLN_LEVEL + math.log(horizon) ** 6),
            1.0,
            horizon,
            config.n_paths,
            cfg,
            config.seed,
            threads=threads,
            stream_offset=offset + 2 * HORIZON_STREAM_STRIDE,
        )
        rhs: float = HELPLN_FACTOR * early.p_hat * late.p_hat
        stderr: float = math.sqrt(
            lhs.stderr**2
            + (HELPLN_FACTOR * late.p_hat * early.stderr) ** 2
            + (HELPLN_FACTOR * early.p_hat * late.stderr) ** 2
        )
        checks.append(
            HelplnCheck(
                horizon=horizon,
                truncated_horizon=shortened,
                lhs=lhs.p_hat,
                rhs=rhs,
                stderr=stderr,
                holds=lhs.p_hat >= rhs - 2.0 * stderr,
            )
        )
    return checks


def check_bbgr(config: LemmaConfig, threads: int = 1) -> BBgrCheck:
    """
    Exceedance frequency of ``c max{(ln T)^5, t^(3/4)}`` by Brownian motion.

    The bound ``exp(-(ln T)^2 / 4)`` holds up to an unspecified constant; it
    is multiplied by ``bbgr_safety``.
    """
    horizon: float = config.bbgr_horizon
    estimate = estimate_survival(
        LevyTriplet.brownian(),
        GrowthEnvelopeBoundary(config.bbgr_scale, horizon),
        horizon,
        config.bbgr_paths,
        config.sim_config,
        config.seed,
        threads=threads,
    )
    frequency: float = max(1.0 - estimate.p_hat, 0.0)
    bound: float = math.exp(-(math.log(horizon) ** 2) / 4.0) * config.bbgr_safety
    return BBgrCheck(
        horizon=horizon,
        n_paths=config.bbgr_paths,
        frequency=frequency,
        bound=bound,
        safety=config.bbgr_safety,
        holds=frequency == 0.0 or frequency <= bound,
    )


def compensated_poisson() -> LevyTriplet:
    """Unit-rate Poisson process with jumps of size -1, compensated to a martingale."""
    return martingale_normalize(LevyTriplet(jumps=JumpMeasure(atoms=((-1.0, 1.0),))))


def check_coup(config: LemmaConfig, threads: int = 1) -> CoupCheck:
    """``P(X(t) <= t^alpha, 1 <= t <= T)`` stays above half its first value."""
    triplet = compensated_poisson()
    boundary = PowerBoundary(config.coup_exponent)
    estimates: list[float] = []
    for index, horizon in enumerate(config.coup_horizons):
        estimate = estimate_window_survival(
            triplet,
            boundary,
            1.0,
            horizon,
            config.n_paths,
            config.sim_config,
            config.seed,
            threads=threads,
            stream_offset=index * HORIZON_STREAM_STRIDE,
        )
        estimates.append(estimate.p_hat)
    floor: float = min(estimates)
    reference: float = estimates[0]
    return CoupCheck(
        exponent=config.coup_exponent,
        horizons=config.coup_horizons,
        estimates=tuple(estimates),
        floor=floor,
        reference=reference,
        holds=floor > 0.0 and floor >= COUP_FLOOR_RATIO * reference,
    )


def lemma_checks(config: LemmaConfig | None = None, threads: int = 1) -> LemmaReport:
    """
    Run the whole battery.

    Args:
        config: Settings, defaults to :class:`LemmaConfig`.
        threads: Worker processes for every Monte Carlo estimate.

    Returns:
        The report; failed checks are flagged, never raised.

    """
    settings = config or LemmaConfig()
    with Bar("Checking lemmas... ", max=4) as bar:
        association = check_association(settings, threads)
        bar.next()
        helpln = check_helpln(settings, threads)
        bar.next()
        bbgr = check_bbgr(settings, threads)
        bar.next()
        coup = check_coup(settings, threads)
        bar.next()
    report = LemmaReport(association=association, helpln=helpln, bbgr=bbgr, coup=coup)
    if not report.ok:
        LOGGER.warning("Lemma battery reported failures")
    return report

