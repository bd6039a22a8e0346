"""
Importance sampling by tilting the intensity of a compact set of jumps.

For a non-decreasing boundary ``f`` held flat before ``active_from = s0``
(``fbar(t) = f(max(t, s0))``) the jumps ``x`` in ``A`` get intensity
``exp(theta(x, s)) nu(dx) ds`` with

    theta(x, s) = ln(1 + fbar'(s) |x| / m),   m = int_A x^2 nu(dx).

The extra jumps shift the path by ``-/+ (fbar(t) - f(s0))`` on average, so an
estimate of ``P(X <= g - fbar)`` (negative side) or ``P(X <= g + fbar)``
(positive side) is obtained from tilted paths checked against the same
boundary and weighted by

    ln dP/dQ = (M1 / m) (fbar(T) - fbar(s0)) - sum_{A-jumps} theta(x_i, s_i),

where ``M1 = int_A |x| nu(dx)``. Only the atoms of the jump measure are
tilted, which keeps the stochastic integral a finite sum.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Callable
from pathlib import Path
from typing import Literal

import numpy as np
import pandas as pd
from numpy.polynomial import legendre
from numpy.typing import ArrayLike, NDArray
from pydantic import BaseModel, ConfigDict

from levy_passage.batch import evaluate_streams
from levy_passage.boundary import (
    Boundary,
    FrozenBoundary,
    PowerBoundary,
    ShiftedBoundary,
)
from levy_passage.errors import DomainError, NoJumpsOfRequiredSignError
from levy_passage.interfaces import EstimatorInterface, PathTask
from levy_passage.levy_model import LevyTriplet, require_valid
from levy_passage.passage_mc import Z_95, SurvivalEstimate, _check_paths
from levy_passage.simulate import (
    SUBSTREAM_TILT,
    JumpRecords,
    PathSkeleton,
    RngStamp,
    SimConfig,
    no_exit_indicator,
    sample_path,
    simulation_grid,
)

LOGGER: logging.Logger = logging.getLogger(__name__)

Side = Literal["negative", "positive"]

DEFAULT_MASS_FRACTION: float = 0.9
LEGENDRE_NODES: int = 64
ENVELOPE_SAMPLES: int = 513
MIN_ESS: float = 10.0

_NODES, _WEIGHTS = legendre.leggauss(LEGENDRE_NODES)


class TiltSpec(BaseModel):
    """Tilted jump set ``A``, its masses and the boundary driving the tilt."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    side: Side
    support: tuple[float, float]
    m: float
    first_moment: float
    active_from: float
    boundary: Boundary
    atom_indices: tuple[int, ...]
    atom_sizes: tuple[float, ...]
    atom_rates: tuple[float, ...]

    @property
    def sign(self) -> float:
        """+1 when the tilt compensates ``g - f``, -1 for ``g + f``."""
        return 1.0 if self.side == "negative" else -1.0

    @property
    def frozen_boundary(self) -> FrozenBoundary:
        return FrozenBoundary(self.boundary, self.active_from)

    def in_support(self, x: ArrayLike) -> NDArray[np.bool_]:
        sizes = np.asarray(x, dtype=np.float64)
        return (sizes >= self.support[0]) & (sizes <= self.support[1])

    def theta(self, x: ArrayLike, s: ArrayLike) -> NDArray[np.float64]:
        """
        Log intensity ratio ``theta(x, s)``, broadcast over ``x`` and ``s``.

        Returns:
            Zero outside ``A x [active_from, inf)``.

        """
        sizes = np.asarray(x, dtype=np.float64)
        times = np.asarray(s, dtype=np.float64)
        slope = np.asarray(self.frozen_boundary.derivative(times))
        active = self.in_support(sizes) & (times >= self.active_from)
        lifted = np.where(active, slope * np.abs(sizes) / self.m, 0.0)
        return np.log1p(lifted)

    def time_change(self, horizon: float) -> float:
        """``fbar(T) - fbar(s0)``."""
        frozen = self.frozen_boundary
        return float(frozen.value(horizon)) - float(frozen.value(self.active_from))

    def log_weight_offset(self, horizon: float) -> float:
        """``int int (e^theta - 1) nu ds`` over ``[0, T]``, in closed form."""
        return self.first_moment / self.m * self.time_change(horizon)

    def envelope(self, horizon: float) -> float:
        """Largest ``fbar'`` on ``[s0, T]``."""
        if horizon <= self.active_from:
            return 0.0
        probes = np.concatenate(
            [
                [self.active_from, horizon],
                np.geomspace(
                    max(self.active_from, 1e-12), horizon, ENVELOPE_SAMPLES
                ),
            ]
        )
        return float(np.max(self.boundary.derivative(probes)))

    def target_boundary(self, effective: Boundary) -> ShiftedBoundary:
        """Boundary ``g - fbar`` (negative side) or ``g + fbar`` (positive side)."""
        return ShiftedBoundary(effective, self.frozen_boundary, self.sign)


class WeightedSample(BaseModel):
    """A path drawn under the tilted law with its log Radon-Nikodym weight."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    path: PathSkeleton
    log_weight: float
    extra_jumps: int
    tilted_jumps: int


class ImportanceEstimate(SurvivalEstimate):
    """Importance-sampling estimate with its effective sample size."""

    ess: float
    low_ess: bool


class GBoundCheck(BaseModel):
    """Numerical check of ``0 <= g(u) <= c u^2`` on the attained range of ``u``."""

    model_config = ConfigDict(frozen=True)

    u_max: float
    c_tilde: float
    nonnegative: bool
    quadratic_bound_holds: bool


def entropy_gap(u: ArrayLike) -> NDArray[np.float64]:
    """``g(u) = (1 + u) ln(1 + u) - u``."""
    values = np.asarray(u, dtype=np.float64)
    return (1.0 + values) * np.log1p(values) - values


def _select_support(
    sizes: NDArray[np.float64],
    rates: NDArray[np.float64],
    fraction: float,
) -> tuple[float, float]:
    order = np.argsort(sizes)
    ordered = sizes[order]
    mass = ordered * ordered * rates[order]
    cumulative = np.cumsum(mass)
    total: float = float(cumulative[-1])
    tail: float = (1.0 - fraction) / 2.0 * total
    low_index: int = int(np.searchsorted(cumulative, tail, side="right"))
    high_index: int = int(np.searchsorted(cumulative, total - tail, side="left"))
    low_index = min(low_index, ordered.size - 1)
    high_index = min(max(high_index, low_index), ordered.size - 1)
    return float(ordered[low_index]), float(ordered[high_index])


def make_tilt(  # noqa: PLR0913
    triplet: LevyTriplet,
    boundary: Boundary,
    side: Side,
    active_from: float,
    *,
    mass_fraction: float = DEFAULT_MASS_FRACTION,
    support: tuple[float, float] | None = None,
) -> TiltSpec:
    """
    Choose the tilted jump set ``A`` for a boundary.

    ``A`` is the narrowest interval of atoms in ``[-1, 0)`` (negative side) or
    ``(0, 1]`` (positive side) obtained by trimming equal shares of x^2-mass
    from both ends while keeping ``mass_fraction`` of it.

    Args:
        triplet: Validated triplet.
        boundary: Non-decreasing ``f`` whose slope drives the tilt.
        side: Which sign of jumps to tilt.
        active_from: ``s0``; the tilt vanishes before it.
        mass_fraction: Share of x^2-mass ``A`` must carry.
        support: Explicit ``A``, overriding the trimming rule.

    Returns:
        The tilt.

    Raises:
        NoJumpsOfRequiredSignError: If no atom of the required sign qualifies.
        DomainError: If ``s0`` or the boundary do not allow an exact tilt.

    """
    require_valid(triplet)
    if active_from < 0.0:
        msg = f"active_from must be nonnegative, got {active_from!r}"
        raise DomainError(msg)
    has_mass = (
        triplet.jumps.mass_negative() if side == "negative"
        else triplet.jumps.mass_positive()
    )
    if not has_mass:
        msg = "no jumps of required sign"
        raise NoJumpsOfRequiredSignError(msg)

    indices = np.arange(len(triplet.jumps.atoms))
    sizes = np.array([x for x, _ in triplet.jumps.atoms], dtype=np.float64)
    rates = np.array([r for _, r in triplet.jumps.atoms], dtype=np.float64)
    window = (
        (sizes >= -1.0) & (sizes < 0.0) if side == "negative"
        else (sizes > 0.0) & (sizes <= 1.0)
    )
    if not np.any(window):
        msg = "no jumps of required sign among the atoms within unit distance"
        raise NoJumpsOfRequiredSignError(msg)

    if support is None:
        support = _select_support(sizes[window], rates[window], mass_fraction)
    lo, hi = support
    if lo > hi or lo <= 0.0 <= hi or (side == "negative") != (hi < 0.0):
        msg = f"support {support!r} has the wrong sign or contains 0"
        raise DomainError(msg)
    chosen = window & (sizes >= lo) & (sizes <= hi)
    if not np.any(chosen):
        msg = f"support {support!r} holds no atom"
        raise NoJumpsOfRequiredSignError(msg)

    slope_at_start = float(boundary.derivative(active_from))
    if not math.isfinite(slope_at_start):
        msg = "boundary slope is unbounded at active_from; move active_from right"
        raise DomainError(msg)
    probes = active_from + np.geomspace(1e-6, 1e6, 257)
    if np.any(np.asarray(boundary.derivative(probes)) < 0.0) or slope_at_start < 0.0:
        msg = "tilting needs a non-decreasing boundary"
        raise DomainError(msg)
    if side == "negative" and float(boundary.value(active_from)) >= 1.0:
        msg = "negative-side tilt needs f(active_from) < 1"
        raise DomainError(msg)

    m: float = math.fsum((sizes[chosen] ** 2 * rates[chosen]).tolist())
    first_moment: float = math.fsum((np.abs(sizes[chosen]) * rates[chosen]).tolist())
    LOGGER.debug("Tilt %s: A=[%g, %g], m=%g, M1=%g", side, lo, hi, m, first_moment)
    return TiltSpec(
        side=side,
        support=(float(lo), float(hi)),
        m=m,
        first_moment=first_moment,
        active_from=float(active_from),
        boundary=boundary,
        atom_indices=tuple(int(i) for i in indices[chosen]),
        atom_sizes=tuple(float(x) for x in sizes[chosen]),
        atom_rates=tuple(float(r) for r in rates[chosen]),
    )


def _check_spec(triplet: LevyTriplet, spec: TiltSpec) -> None:
    for index, size, rate in zip(
        spec.atom_indices, spec.atom_sizes, spec.atom_rates, strict=True
    ):
        if index >= len(triplet.jumps.atoms) or triplet.jumps.atoms[index] != (
            size,
            rate,
        ):
            msg = f"tilt atom {index} does not match the triplet"
            raise DomainError(msg)


def _extra_jumps(
    spec: TiltSpec,
    horizon: float,
    rng: np.random.Generator,
) -> JumpRecords:
    start: float = spec.active_from
    if horizon <= start or spec.time_change(horizon) <= 0.0:
        return JumpRecords.empty()
    envelope: float = spec.envelope(horizon)
    times: list[NDArray[np.float64]] = []
    sizes: list[NDArray[np.float64]] = []
    origins: list[NDArray[np.int64]] = []
    for index, size, rate in zip(
        spec.atom_indices, spec.atom_sizes, spec.atom_rates, strict=True
    ):
        ceiling: float = rate * abs(size) / spec.m * envelope
        count: int = int(rng.poisson(ceiling * (horizon - start)))
        if count == 0:
            continue
        proposed = start + (1.0 - rng.random(count)) * (horizon - start)
        slope = np.asarray(spec.boundary.derivative(proposed))
        accepted = proposed[rng.random(count) * envelope < slope]
        times.append(accepted)
        sizes.append(np.full(accepted.size, size))
        origins.append(np.full(accepted.size, index, dtype=np.int64))
    if not times:
        return JumpRecords.empty()
    return JumpRecords(
        times=np.concatenate(times),
        sizes=np.concatenate(sizes),
        origins=np.concatenate(origins),
    )


def sample_tilted_path(
    triplet: LevyTriplet,
    spec: TiltSpec,
    horizon: float,
    cfg: SimConfig,
    rng_stamp: RngStamp,
) -> WeightedSample:
    """
    Draw a path under the tilted law and weigh it back.

    The base path uses exactly the draws of :func:`sample_path`; extra
    ``A``-jumps come from a thinned Poisson stream on a separate sub-stream.
    Without tilt the sample equals the untilted path and the weight is 0.

    Args:
        triplet: Process law the tilt was made for.
        spec: The tilt.
        horizon: ``T``.
        cfg: Discretisation settings.
        rng_stamp: Stream identity.

    Returns:
        The weighted sample.

    """
    _check_spec(triplet, spec)
    extra = _extra_jumps(spec, horizon, rng_stamp.generator(SUBSTREAM_TILT))
    path = sample_path(
        triplet,
        horizon,
        cfg,
        rng_stamp,
        injected=extra if extra.times.size else None,
    )
    tilted = np.isin(path.jump_origins, spec.atom_indices) & (
        path.jump_times >= spec.active_from
    )
    offset: float = spec.log_weight_offset(horizon)
    if offset == 0.0:
        return WeightedSample(
            path=path,
            log_weight=0.0,
            extra_jumps=0,
            tilted_jumps=int(tilted.sum()),
        )
    penalty: float = math.fsum(
        spec.theta(path.jump_sizes[tilted], path.jump_times[tilted]).tolist()
    )
    return WeightedSample(
        path=path,
        log_weight=offset - penalty,
        extra_jumps=int(extra.times.size),
        tilted_jumps=int(tilted.sum()),
    )


class ImportanceSurvivalTask(PathTask):
    """Tilted path, its check against the target boundary and its log weight."""

    width: int = 4

    def __init__(  # noqa: PLR0913
        self,
        triplet: LevyTriplet,
        target: Boundary,
        spec: TiltSpec,
        horizon: float,
        cfg: SimConfig,
        seed: int,
    ) -> None:
        self.triplet: LevyTriplet = triplet
        self.target: Boundary = target
        self.spec: TiltSpec = spec
        self.horizon: float = horizon
        self.cfg: SimConfig = cfg
        self.seed: int = seed
        self.boundary_grid: np.ndarray = np.asarray(
            target.value(simulation_grid(horizon, cfg))
        )

    def evaluate(self, stream_index: int) -> tuple[float, float, float, float]:
        stamp = RngStamp(seed=self.seed, stream_index=stream_index)
        sample = sample_tilted_path(
            self.triplet, self.spec, self.horizon, self.cfg, stamp
        )
        check = no_exit_indicator(
            sample.path,
            self.target,
            self.cfg,
            stamp,
            boundary_grid=self.boundary_grid,
        )
        return (
            float(check.indicator),
            check.weight,
            sample.log_weight,
            float(sample.extra_jumps),
        )


class ImportanceTally(BaseModel):
    """Per-path rows ``(indicator, correction, log_weight, extra)`` of one horizon."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    horizon: float
    first_stream: int
    rows: np.ndarray

    def estimate(self) -> ImportanceEstimate:
        """
        Weighted mean with max-log rescaling and a normal 95% interval in [0, 1].

        Returns:
            The estimate; ``low_ess`` flags an effective sample size below 10.

        """
        n: int = int(self.rows.shape[0])
        log_weights = self.rows[:, 2]
        shift: float = float(np.max(log_weights)) if n else 0.0
        contributions = self.rows[:, 1] * np.exp(log_weights - shift)
        total: float = math.fsum(contributions.tolist())
        squares: float = math.fsum((contributions * contributions).tolist())
        scale: float = math.exp(shift)
        p_hat: float = scale * total / n
        mean_scaled: float = total / n
        variance: float = max(squares - n * mean_scaled * mean_scaled, 0.0) / max(
            n - 1, 1
        )
        stderr: float = scale * math.sqrt(variance / n)
        ess: float = total * total / squares if squares > 0.0 else 0.0
        if ess < MIN_ESS:
            LOGGER.warning(
                "Effective sample size %.2f below %g at T=%g", ess, MIN_ESS, self.horizon
            )
        return ImportanceEstimate(
            horizon=self.horizon,
            p_hat=p_hat,
            ci_low=min(max(p_hat - Z_95 * stderr, 0.0), 1.0),
            ci_high=min(p_hat + Z_95 * stderr, 1.0),
            stderr=stderr,
            n_paths=n,
            ess=ess,
            low_ess=ess < MIN_ESS,
        )

    def dump(self, path: Path) -> Path:
        """Write one JSON line per path: ``log_weight``, ``indicator``, ``stream``."""
        return dump_weighted_samples(self.rows, self.first_stream, path)


def dump_weighted_samples(rows: np.ndarray, first_stream: int, path: Path) -> Path:
    """Write importance-sampling rows as JSON lines."""
    pd.DataFrame(
        {
            "log_weight": rows[:, 2],
            "indicator": rows[:, 0].astype(np.int64),
            "stream": np.arange(rows.shape[0]) + first_stream,
        }
    ).to_json(path, orient="records", lines=True)
    LOGGER.debug("Wrote %d weighted samples to %s", rows.shape[0], path)
    return path


def importance_tally(  # noqa: PLR0913
    triplet: LevyTriplet,
    b_effective: Boundary,
    spec: TiltSpec,
    horizon: float,
    cfg: SimConfig,
    seed: int,
    first: int,
    count: int,
    *,
    threads: int = 1,
) -> ImportanceTally:
    """Rows of paths ``first .. first + count - 1`` checked against the target."""
    _check_spec(triplet, spec)
    task = ImportanceSurvivalTask(
        triplet,
        spec.target_boundary(b_effective),
        spec,
        horizon,
        cfg,
        seed,
    )
    rows = evaluate_streams(task, first, count, threads)
    return ImportanceTally(horizon=horizon, first_stream=first, rows=rows)


class ImportanceEstimator(EstimatorInterface):
    """Importance-sampling estimator of the tilt's target probability."""

    def __init__(  # noqa: PLR0913
        self,
        triplet: LevyTriplet,
        b_effective: Boundary,
        spec: TiltSpec,
        cfg: SimConfig,
        threads: int = 1,
    ) -> None:
        self.triplet: LevyTriplet = triplet
        self.b_effective: Boundary = b_effective
        self.spec: TiltSpec = spec
        self.cfg: SimConfig = cfg
        self.threads: int = threads

    def estimate(
        self,
        horizon: float,
        n_paths: int,
        seed: int,
        stream_offset: int = 0,
    ) -> ImportanceEstimate:
        _check_paths(n_paths)
        tally = importance_tally(
            self.triplet,
            self.b_effective,
            self.spec,
            horizon,
            self.cfg,
            seed,
            stream_offset,
            n_paths,
            threads=self.threads,
        )
        return tally.estimate()


def is_estimate_survival(  # noqa: PLR0913
    triplet: LevyTriplet,
    b_effective: Boundary,
    spec: TiltSpec,
    horizon: float,
    n_paths: int,
    cfg: SimConfig,
    seed: int,
    *,
    threads: int = 1,
    stream_offset: int = 0,
) -> ImportanceEstimate:
    """
    Estimate ``P(X(t) <= target(t), t <= T)`` with ``target = spec.target_boundary(b_effective)``.

    Args:
        triplet: Process law.
        b_effective: Boundary ``g`` before the tilt's shift.
        spec: The tilt.
        horizon: ``T``.
        n_paths: At least 100.
        cfg: Discretisation settings.
        seed: Key of the path streams.
        threads: Worker processes.
        stream_offset: First stream index.

    Returns:
        Mean of ``exp(log_weight)`` times the correction-weighted indicator.

    """
    return ImportanceEstimator(triplet, b_effective, spec, cfg, threads).estimate(
        horizon, n_paths, seed, stream_offset
    )


def _inverse_times(spec: TiltSpec, levels: NDArray[np.float64], horizon: float) -> NDArray[np.float64]:
    base = spec.boundary
    if isinstance(base, PowerBoundary) and base.gamma > 0.0 and base.sign == "plus":
        return np.clip((levels - base.offset) ** (1.0 / base.gamma), spec.active_from, horizon)
    return np.array(
        [base.inverse(float(level), spec.active_from, horizon) for level in levels]
    )


def homogenized_compensator(
    triplet: LevyTriplet,
    spec: TiltSpec,
    boundary: Boundary,
    horizon: float,
    rng_stamp: RngStamp,
    cfg: SimConfig | None = None,
) -> PathSkeleton:
    """
    Simulate ``Z(fbar(t) - f(s0))`` for the homogeneous martingale ``Z``.

    ``Z`` has no Gaussian part and jump measure ``(|x|/m) 1_A nu(dx)``, compensated
    to mean zero; its jump times in the new clock are mapped back through the
    inverse of ``f``.

    Args:
        triplet: Process law the tilt was made for.
        spec: The tilt.
        boundary: The boundary ``f`` providing the clock.
        horizon: ``T``.
        rng_stamp: Stream identity; the tilt sub-stream is used.
        cfg: Grid settings, defaults to :class:`SimConfig`.

    Returns:
        Skeleton on the simulation grid with the mapped jumps.

    """
    _check_spec(triplet, spec)
    cfg = cfg or SimConfig()
    clocked = spec.model_copy(update={"boundary": boundary})
    times = simulation_grid(horizon, cfg)
    clock = np.asarray(clocked.frozen_boundary.value(times)) - float(
        boundary.value(spec.active_from)
    )
    total_clock: float = float(clock[-1])
    sizes_arr = np.asarray(spec.atom_sizes)
    rates_arr = np.asarray(spec.atom_rates)
    drift_rate: float = -math.fsum(
        (sizes_arr * np.abs(sizes_arr) * rates_arr / spec.m).tolist()
    )

    rng = rng_stamp.generator(SUBSTREAM_TILT)
    levels: list[NDArray[np.float64]] = []
    sizes: list[NDArray[np.float64]] = []
    origins: list[NDArray[np.int64]] = []
    if total_clock > 0.0:
        for index, size, rate in zip(
            spec.atom_indices, spec.atom_sizes, spec.atom_rates, strict=True
        ):
            count: int = int(rng.poisson(rate * abs(size) / spec.m * total_clock))
            levels.append((1.0 - rng.random(count)) * total_clock)
            sizes.append(np.full(count, size))
            origins.append(np.full(count, index, dtype=np.int64))

    if not levels or sum(level.size for level in levels) == 0:
        return PathSkeleton(
            times=times,
            values=drift_rate * clock,
            jump_times=np.empty(0),
            jump_sizes=np.empty(0),
            jump_origins=np.empty(0, dtype=np.int64),
            jump_post_values=np.empty(0),
            diffusion_variance=0.0,
            rng_stamp=rng_stamp,
        )

    all_levels = np.concatenate(levels)
    order = np.argsort(all_levels, kind="stable")
    all_levels = all_levels[order]
    all_sizes = np.concatenate(sizes)[order]
    all_origins = np.concatenate(origins)[order]
    jump_times = _inverse_times(
        clocked,
        all_levels + float(boundary.value(spec.active_from)),
        horizon,
    )
    running = np.cumsum(all_sizes)
    seen = np.searchsorted(all_levels, clock, side="right")
    values = np.concatenate([[0.0], running])[seen] + drift_rate * clock
    return PathSkeleton(
        times=times,
        values=values,
        jump_times=jump_times,
        jump_sizes=all_sizes,
        jump_origins=all_origins,
        jump_post_values=running + drift_rate * all_levels,
        diffusion_variance=0.0,
        rng_stamp=rng_stamp,
    )


def _dyadic_spans(lo: float, hi: float) -> list[tuple[float, float]]:
    spans: list[tuple[float, float]] = []
    left: float = lo
    right: float = min(2.0 * lo if lo > 0.0 else 1.0, hi)
    while left < hi:
        spans.append((left, right))
        left, right = right, min(2.0 * right, hi)
    return spans


def _tilt_integral(
    spec: TiltSpec,
    horizon: float,
    kernel: Callable[[NDArray[np.float64]], NDArray[np.float64]],
) -> float:
    """``int_{s0}^T int_A kernel(fbar'(s) |x| / m) nu(dx) ds``, 64 nodes per dyadic span."""
    total: float = 0.0
    sizes = np.asarray(spec.atom_sizes)
    rates = np.asarray(spec.atom_rates)
    for left, right in _dyadic_spans(spec.active_from, horizon):
        half: float = 0.5 * (right - left)
        nodes = left + half * (_NODES + 1.0)
        slope = np.asarray(spec.boundary.derivative(nodes))
        lifted = slope[:, None] * np.abs(sizes)[None, :] / spec.m
        integrand = kernel(lifted) @ rates
        total += half * float(_WEIGHTS @ integrand)
    return total


def measure_change_cost(spec: TiltSpec, horizon: float) -> float:
    """
    ``int_{s0}^T int_A g(fbar'(s) |x| / m) nu(dx) ds`` by Gauss-Legendre.

    Each dyadic span ``[s, 2s]`` gets 64 nodes.

    """
    return _tilt_integral(spec, horizon, entropy_gap)


def log_weight_second_moment(spec: TiltSpec, horizon: float) -> float:
    """
    ``ln E_Q[(dP/dQ)^2] = int int u^2 / (1 + u) nu(dx) ds`` with ``u = fbar' |x| / m``.

    Bounds the relative variance of any weighted indicator; it is at most
    ``int int u^2 nu(dx) ds``.

    """
    return _tilt_integral(spec, horizon, lambda u: u * u / (1.0 + u))


def g_ratio_range(spec: TiltSpec, horizon: float, samples: int = 1000) -> GBoundCheck:
    """
    Check ``g(u) >= 0`` and ``g(u) <= u^2 / 2`` on the attained ``[0, u_max]``.

    ``u_max = max fbar' * max |x| / m`` over ``[s0, T]``.

    """
    u_max: float = spec.envelope(horizon) * max(abs(x) for x in spec.atom_sizes) / spec.m
    grid = np.linspace(0.0, u_max, samples)
    gap = entropy_gap(grid)
    c_tilde: float = 0.5
    return GBoundCheck(
        u_max=u_max,
        c_tilde=c_tilde,
        nonnegative=bool(np.all(gap >= -1e-15)),
        quadratic_bound_holds=bool(np.all(gap <= c_tilde * grid * grid + 1e-15)),
    )
