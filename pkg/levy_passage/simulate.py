"""
Grid skeletons of Levy paths and the no-exit check against a boundary.

Every path owns counter-based Philox streams keyed by ``(seed, stream_index)``;
independent sub-streams are separated through the high word of the counter,
so the base draws of a path never depend on how many auxiliary draws (bridge
points, tilted jumps, crossing coins) it needs.
"""

from __future__ import annotations

import functools
import logging
import math
from pathlib import Path
from typing import Literal, NamedTuple

import numpy as np
import pandas as pd
from numpy.typing import NDArray
from pydantic import BaseModel, ConfigDict, Field, NonNegativeInt

from levy_passage.boundary import Boundary
from levy_passage.errors import DomainError
from levy_passage.levy_model import (
    TRUNCATION,
    LevyTriplet,
    StablePart,
    require_valid,
)

LOGGER: logging.Logger = logging.getLogger(__name__)

SUBSTREAM_BASE: int = 0
SUBSTREAM_BRIDGE: int = 1
SUBSTREAM_TILT: int = 2
SUBSTREAM_CROSSING: int = 3

ORIGIN_STABLE: int = -1
ORIGIN_DENSITY: int = -2

FloatArray = NDArray[np.float64]


class RngStamp(BaseModel):
    """Identity of the random streams that produced one path."""

    model_config = ConfigDict(frozen=True)

    seed: NonNegativeInt
    stream_index: NonNegativeInt

    def generator(self, substream: int = SUBSTREAM_BASE) -> np.random.Generator:
        """
        Open one of the path's independent sub-streams.

        Args:
            substream: Sub-stream number, stored in the counter's high word.

        Returns:
            A fresh generator positioned at the start of the sub-stream.

        """
        bit_generator = np.random.Philox(
            key=np.array([self.seed, self.stream_index], dtype=np.uint64),
            counter=np.array([0, 0, 0, substream], dtype=np.uint64),
        )
        return np.random.Generator(bit_generator)


class SimConfig(BaseModel):
    """Discretisation settings shared by all samplers."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    dt_max: float = Field(default=0.01, gt=0.0)
    small_jump_cutoff: float = Field(default=1e-3, gt=0.0, le=1.0)
    bridge_correction: bool = True
    bridge_sampling: bool = False
    dt_scaling: Literal["fixed", "sqrt"] = "fixed"

    def step(self, horizon: float) -> float:
        """Grid step used for a path of length ``horizon``."""
        if self.dt_scaling == "sqrt":
            return self.dt_max * math.sqrt(horizon)
        return self.dt_max


class JumpRecords(BaseModel):
    """Finite-activity jumps, sorted by time."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    times: np.ndarray
    sizes: np.ndarray
    origins: np.ndarray

    @classmethod
    def empty(cls) -> JumpRecords:
        return cls(
            times=np.empty(0),
            sizes=np.empty(0),
            origins=np.empty(0, dtype=np.int64),
        )


class PathSkeleton(BaseModel):
    """Grid values of one simulated path plus its explicit jumps."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    times: np.ndarray
    values: np.ndarray
    jump_times: np.ndarray
    jump_sizes: np.ndarray
    jump_origins: np.ndarray
    jump_post_values: np.ndarray
    diffusion_variance: float
    rng_stamp: RngStamp

    @property
    def horizon(self) -> float:
        return float(self.times[-1])

    @property
    def jump_pre_values(self) -> FloatArray:
        """Left limits ``X(s-)`` at the jump times."""
        return self.jump_post_values - self.jump_sizes

    @property
    def jump_records(self) -> list[tuple[float, float, str]]:
        """``(time, size, origin)`` triples with readable origin tags."""
        return [
            (float(s), float(x), origin_name(int(o)))
            for s, x, o in zip(
                self.jump_times, self.jump_sizes, self.jump_origins, strict=True
            )
        ]


class ExitCheck(NamedTuple):
    """Outcome of the no-exit check on one path."""

    indicator: int
    weight: float


def origin_name(code: int) -> str:
    """Readable tag of a jump origin code."""
    if code == ORIGIN_STABLE:
        return "stable"
    if code == ORIGIN_DENSITY:
        return "density"
    return f"atom:{code}"


class _JumpPlan(NamedTuple):
    drift: float
    variance: float
    atom_sizes: FloatArray
    atom_rates: FloatArray
    stable: StablePart | None
    density_lo: FloatArray
    density_hi: FloatArray
    density_cdf: FloatArray
    density_rate: float


@functools.lru_cache(maxsize=64)
def _jump_plan(triplet: LevyTriplet, eps: float) -> _JumpPlan:
    require_valid(triplet)
    atom_sizes = np.array([x for x, _ in triplet.jumps.atoms], dtype=np.float64)
    atom_rates = np.array([r for _, r in triplet.jumps.atoms], dtype=np.float64)
    inside = np.abs(atom_sizes) <= TRUNCATION
    drift: float = triplet.drift - math.fsum(atom_rates[inside] * atom_sizes[inside])
    variance: float = triplet.sigma2

    density = triplet.jumps.density
    lo = hi = cdf = np.empty(0)
    rate: float = 0.0
    if density is not None:
        drift -= density.moment(1, -TRUNCATION, -eps) + density.moment(
            1, eps, TRUNCATION
        )
        variance += density.abs_moment(2, 0.0, eps)
        lo, hi, mass = density.pieces_beyond(eps)
        rate = float(np.sum(mass))
        cdf = np.cumsum(mass) / rate if rate > 0.0 else np.empty(0)

    return _JumpPlan(
        drift=drift,
        variance=variance,
        atom_sizes=atom_sizes,
        atom_rates=atom_rates,
        stable=triplet.jumps.stable,
        density_lo=lo,
        density_hi=hi,
        density_cdf=cdf,
        density_rate=rate,
    )


@functools.lru_cache(maxsize=256)
def _grid(horizon: float, step: float, breakpoints: tuple[float, ...]) -> FloatArray:
    cells: int = max(math.ceil(horizon / step - 1e-9), 1)
    times = np.linspace(0.0, horizon, cells + 1)
    extra = [b for b in breakpoints if 0.0 < b < horizon]
    if extra:
        times = np.union1d(times, np.asarray(extra, dtype=np.float64))
    times.setflags(write=False)
    return times


def simulation_grid(
    horizon: float,
    cfg: SimConfig,
    breakpoints: tuple[float, ...] = (),
) -> FloatArray:
    """
    Uniform grid on ``[0, horizon]`` refined by extra breakpoints.

    Args:
        horizon: Right end ``T > 0``.
        cfg: Supplies the step.
        breakpoints: Additional grid times inside ``(0, T)``.

    Returns:
        Read-only strictly increasing times with ``t_0 = 0`` and ``t_k = T``.

    Raises:
        DomainError: If ``horizon <= 0``.

    """
    if not horizon > 0.0:
        msg = f"horizon must be positive, got {horizon!r}"
        raise DomainError(msg)
    return _grid(float(horizon), cfg.step(horizon), tuple(sorted(breakpoints)))


def sample_stable_increment(
    alpha: float,
    scale: float,
    skew: float,
    dt: float | FloatArray,
    rng: np.random.Generator | RngStamp,
) -> float | FloatArray:
    """
    Draw stable increments over time steps ``dt`` (Chambers-Mallows-Stuck).

    The law matches the closed-form exponent of :class:`StablePart`; for
    ``alpha = 2`` it is Gaussian with variance ``2 scale**2 dt``.

    Args:
        alpha: Index in ``(0, 2]``.
        scale: Scale ``> 0``.
        skew: Skewness in ``[-1, 1]``.
        dt: Step length, scalar or one entry per increment.
        rng: Generator, or a stamp whose base stream is used.

    Returns:
        One increment per entry of ``dt``.

    Raises:
        DomainError: If a parameter is out of range.

    """
    if not 0.0 < alpha <= 2.0:  # noqa: PLR2004
        msg = f"stable alpha out of range: {alpha!r}"
        raise DomainError(msg)
    if not scale > 0.0 or not -1.0 <= skew <= 1.0:
        msg = f"stable scale/skew out of range: {scale!r}, {skew!r}"
        raise DomainError(msg)
    generator = rng.generator() if isinstance(rng, RngStamp) else rng
    steps = np.asarray(dt, dtype=np.float64)
    size = None if steps.ndim == 0 else steps.shape

    half_pi: float = math.pi / 2.0
    v = generator.uniform(-half_pi, half_pi, size)
    w = generator.standard_exponential(size)

    if alpha == 1.0:
        shifted = half_pi + skew * v
        unit = (2.0 / math.pi) * (
            shifted * np.tan(v) - skew * np.log(half_pi * w * np.cos(v) / shifted)
        )
        scaled = scale * steps
        draws = scaled * unit + (2.0 / math.pi) * skew * scaled * np.log(scaled)
    else:
        zeta: float = skew * math.tan(half_pi * alpha)
        shift: float = math.atan(zeta) / alpha
        stretch: float = (1.0 + zeta * zeta) ** (1.0 / (2.0 * alpha))
        unit = (
            stretch
            * np.sin(alpha * (v + shift))
            / np.cos(v) ** (1.0 / alpha)
            * (np.cos(v - alpha * (v + shift)) / w) ** ((1.0 - alpha) / alpha)
        )
        draws = scale * steps ** (1.0 / alpha) * unit

    if np.ndim(draws) == 0:
        return float(draws)
    return draws


def _segmented_cumsum(values: FloatArray, first: NDArray[np.bool_]) -> FloatArray:
    totals = np.cumsum(values)
    group = np.cumsum(first) - 1
    before = np.concatenate([[0.0], totals])[np.flatnonzero(first)]
    return totals - before[group]


def _draw_jumps(
    plan: _JumpPlan,
    times: FloatArray,
    dt: FloatArray,
    rng: np.random.Generator,
) -> tuple[list[FloatArray], list[FloatArray], list[NDArray[np.int64]]]:
    cells = np.arange(dt.size)
    jump_times: list[FloatArray] = []
    jump_sizes: list[FloatArray] = []
    jump_origins: list[NDArray[np.int64]] = []

    for index, (size, rate) in enumerate(
        zip(plan.atom_sizes, plan.atom_rates, strict=True)
    ):
        counts = rng.poisson(rate * dt)
        total: int = int(counts.sum())
        if total == 0:
            continue
        owner = np.repeat(cells, counts)
        jump_times.append(times[owner] + (1.0 - rng.random(total)) * dt[owner])
        jump_sizes.append(np.full(total, size))
        jump_origins.append(np.full(total, index, dtype=np.int64))

    if plan.density_rate > 0.0:
        counts = rng.poisson(plan.density_rate * dt)
        total = int(counts.sum())
        if total > 0:
            owner = np.repeat(cells, counts)
            jump_times.append(times[owner] + (1.0 - rng.random(total)) * dt[owner])
            piece = np.searchsorted(plan.density_cdf, rng.random(total), side="right")
            piece = np.minimum(piece, plan.density_cdf.size - 1)
            lo = plan.density_lo[piece]
            jump_sizes.append(lo + rng.random(total) * (plan.density_hi[piece] - lo))
            jump_origins.append(np.full(total, ORIGIN_DENSITY, dtype=np.int64))

    return jump_times, jump_sizes, jump_origins


def sample_path(  # noqa: PLR0913
    triplet: LevyTriplet,
    horizon: float,
    cfg: SimConfig,
    rng_stamp: RngStamp,
    *,
    breakpoints: tuple[float, ...] = (),
    injected: JumpRecords | None = None,
) -> PathSkeleton:
    """
    Simulate one path skeleton on ``[0, horizon]``.

    Per cell of length ``D`` the continuous increment is Gaussian with mean
    ``b D`` minus the compensators of the explicit small jumps and variance
    ``(sigma2 + small-jump variance) D``, plus a stable increment when the
    triplet has a stable part. Atom and density jumps are Poisson counts with
    uniform times; their post-jump values use a Brownian bridge of the
    continuous motion drawn from a separate sub-stream.

    Args:
        triplet: Validated triplet.
        horizon: ``T > 0``.
        cfg: Discretisation settings.
        rng_stamp: Stream identity of this path.
        breakpoints: Extra grid times.
        injected: Additional jumps merged in before the grid is built.

    Returns:
        The skeleton.

    """
    times = simulation_grid(horizon, cfg, breakpoints)
    dt = np.diff(times)
    plan = _jump_plan(triplet, cfg.small_jump_cutoff)
    rng = rng_stamp.generator(SUBSTREAM_BASE)

    continuous = plan.drift * dt
    if plan.variance > 0.0:
        continuous = continuous + np.sqrt(plan.variance * dt) * rng.standard_normal(
            dt.size
        )
    if plan.stable is not None:
        continuous = continuous + sample_stable_increment(
            plan.stable.alpha,
            plan.stable.scale,
            plan.stable.skew,
            dt,
            rng,
        )

    jump_times, jump_sizes, jump_origins = _draw_jumps(plan, times, dt, rng)
    if injected is not None and injected.times.size > 0:
        jump_times.append(injected.times)
        jump_sizes.append(injected.sizes)
        jump_origins.append(injected.origins)

    if not jump_times:
        values = np.concatenate([[0.0], np.cumsum(continuous)])
        empty = JumpRecords.empty()
        return PathSkeleton(
            times=times,
            values=values,
            jump_times=empty.times,
            jump_sizes=empty.sizes,
            jump_origins=empty.origins,
            jump_post_values=np.empty(0),
            diffusion_variance=plan.variance,
            rng_stamp=rng_stamp,
        )

    all_times = np.concatenate(jump_times)
    order = np.argsort(all_times, kind="stable")
    all_times = all_times[order]
    all_sizes = np.concatenate(jump_sizes)[order]
    all_origins = np.concatenate(jump_origins)[order]

    owner = np.clip(np.searchsorted(times, all_times, side="left") - 1, 0, dt.size - 1)
    per_cell = np.bincount(owner, weights=all_sizes, minlength=dt.size)
    values = np.concatenate([[0.0], np.cumsum(continuous + per_cell)])

    width = dt[owner]
    local = all_times - times[owner]
    first = np.concatenate([[True], owner[1:] != owner[:-1]])
    between = continuous[owner] * local / width
    if plan.variance > 0.0:
        bridge = rng_stamp.generator(SUBSTREAM_BRIDGE)
        previous = np.where(first, 0.0, np.concatenate([[0.0], local[:-1]]))
        walk = _segmented_cumsum(
            np.sqrt(local - previous) * bridge.standard_normal(local.size),
            first,
        )
        last = np.concatenate([owner[1:] != owner[:-1], [True]])
        group = np.cumsum(first) - 1
        walk_end = walk[last] + np.sqrt(width[last] - local[last]) * (
            bridge.standard_normal(int(last.sum()))
        )
        between = between + math.sqrt(plan.variance) * (
            walk - local / width * walk_end[group]
        )
    post = values[owner] + between + _segmented_cumsum(all_sizes, first)

    return PathSkeleton(
        times=times,
        values=values,
        jump_times=all_times,
        jump_sizes=all_sizes,
        jump_origins=all_origins,
        jump_post_values=post,
        diffusion_variance=plan.variance,
        rng_stamp=rng_stamp,
    )


def no_exit_indicator(
    path: PathSkeleton,
    boundary: Boundary,
    cfg: SimConfig,
    rng_stamp: RngStamp | None = None,
    *,
    start: float = 0.0,
    boundary_grid: FloatArray | None = None,
) -> ExitCheck:
    """
    Check ``X(t) <= f(t)`` on ``[start, T]``.

    Grid values, post-jump values and pre-jump left limits are compared with
    the boundary. With bridge correction and a Gaussian part, each segment
    between consecutive grid or jump points survives with probability
    ``1 - exp(-2 d0 d1 / (sigma2 D))`` where the boundary is held at the larger
    of its endpoint values. ``bridge_sampling`` replaces the product of these
    factors by Bernoulli draws.

    Args:
        path: Simulated skeleton.
        boundary: Barrier ``f``.
        cfg: Correction settings.
        rng_stamp: Stream identity for crossing draws, defaults to the path's.
        start: Left end of the checked window.
        boundary_grid: Precomputed ``f(path.times)``.

    Returns:
        Indicator and correction weight; the weight is 0 when the indicator is.

    """
    times = path.times
    f_grid = (
        np.asarray(boundary.value(times)) if boundary_grid is None else boundary_grid
    )
    window = times >= start
    if np.any(path.values[window] > f_grid[window]):
        return ExitCheck(0, 0.0)

    jumps = path.jump_times
    f_jump = np.asarray(boundary.value(jumps)) if jumps.size else np.empty(0)
    if jumps.size:
        post = path.jump_post_values
        pre = path.jump_pre_values
        after = jumps >= start
        strictly_after = jumps > start
        if np.any(post[after] > f_jump[after]) or np.any(
            pre[strictly_after] > f_jump[strictly_after]
        ):
            return ExitCheck(0, 0.0)

    if not cfg.bridge_correction or path.diffusion_variance <= 0.0:
        return ExitCheck(1, 1.0)

    point_times = np.concatenate([jumps, times])
    order = np.argsort(point_times, kind="stable")
    point_times = point_times[order]
    left = np.concatenate([path.jump_pre_values, path.values])[order]
    right = np.concatenate([path.jump_post_values, path.values])[order]
    level = np.concatenate([f_jump, f_grid])[order]

    span = np.diff(point_times)
    keep = (point_times[:-1] >= start) & (span > 0.0)
    ceiling = np.maximum(level[:-1], level[1:])[keep]
    d0 = ceiling - right[:-1][keep]
    d1 = ceiling - left[1:][keep]
    crossing = np.exp(-2.0 * d0 * d1 / (path.diffusion_variance * span[keep]))

    if cfg.bridge_sampling:
        stamp = rng_stamp or path.rng_stamp
        coins = stamp.generator(SUBSTREAM_CROSSING).random(crossing.size)
        if np.any(coins < crossing):
            return ExitCheck(0, 0.0)
        return ExitCheck(1, 1.0)

    weight = float(np.exp(np.sum(np.log1p(-np.minimum(crossing, 1.0)))))
    return ExitCheck(1, weight)


def dump_skeleton(path: PathSkeleton, out_dir: Path, stem: str) -> tuple[Path, Path]:
    """
    Write the grid values and the jump sidecar as CSV files.

    Args:
        path: Skeleton to dump.
        out_dir: Existing output directory.
        stem: Common file name stem.

    Returns:
        Paths of the ``t,x`` file and the ``time,size,origin`` sidecar.

    """
    grid_path: Path = out_dir / f"{stem}.csv"
    jumps_path: Path = out_dir / f"{stem}_jumps.csv"
    pd.DataFrame({"t": path.times, "x": path.values}).to_csv(grid_path, index=False)
    pd.DataFrame(
        {
            "time": path.jump_times,
            "size": path.jump_sizes,
            "origin": [origin_name(int(o)) for o in path.jump_origins],
        }
    ).to_csv(jumps_path, index=False)
    LOGGER.debug("Wrote skeleton `%s` and sidecar `%s`", grid_path, jumps_path)
    return grid_path, jumps_path
