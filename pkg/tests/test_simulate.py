from __future__ import annotations

import math
from pathlib import Path

import numpy as np
import pandas as pd
import pytest

from levy_passage.boundary import ConstantBoundary
from levy_passage.errors import DomainError
from levy_passage.levy_model import JumpMeasure, LevyTriplet
from levy_passage.oracles import stable_rho
from levy_passage.simulate import (
    JumpRecords,
    PathSkeleton,
    RngStamp,
    SimConfig,
    dump_skeleton,
    no_exit_indicator,
    sample_path,
    sample_stable_increment,
    simulation_grid,
)

N_PATHS: int = 20_000


def _terminal_values(triplet: LevyTriplet, cfg: SimConfig, seed: int) -> np.ndarray:
    return np.array(
        [
            sample_path(triplet, 1.0, cfg, RngStamp(seed=seed, stream_index=i)).values[-1]
            for i in range(N_PATHS)
        ]
    )


def _flat_path(times: np.ndarray, variance: float) -> PathSkeleton:
    return PathSkeleton(
        times=times,
        values=np.zeros_like(times),
        jump_times=np.empty(0),
        jump_sizes=np.empty(0),
        jump_origins=np.empty(0, dtype=np.int64),
        jump_post_values=np.empty(0),
        diffusion_variance=variance,
        rng_stamp=RngStamp(seed=0, stream_index=0),
    )


def test_grid_contains_breakpoints() -> None:
    grid = simulation_grid(1.0, SimConfig(dt_max=0.25), (0.1, 0.6, 2.0))
    np.testing.assert_allclose(grid, [0.0, 0.1, 0.25, 0.5, 0.6, 0.75, 1.0])


def test_grid_sqrt_scaling() -> None:
    grid = simulation_grid(16.0, SimConfig(dt_max=0.5, dt_scaling="sqrt"))
    assert grid.size == 9
    assert grid[-1] == 16.0


def test_grid_rejects_nonpositive_horizon() -> None:
    with pytest.raises(DomainError):
        simulation_grid(0.0, SimConfig())


def test_zero_process_stays_at_origin() -> None:
    path = sample_path(LevyTriplet.zero(), 7.5, SimConfig(dt_max=0.5), RngStamp(seed=1, stream_index=0))
    assert np.all(path.values == 0.0)
    assert path.jump_times.size == 0


def test_paths_are_reproducible(negative_jumps: LevyTriplet) -> None:
    cfg = SimConfig(dt_max=0.1)
    first = sample_path(negative_jumps, 5.0, cfg, RngStamp(seed=9, stream_index=4))
    again = sample_path(negative_jumps, 5.0, cfg, RngStamp(seed=9, stream_index=4))
    other = sample_path(negative_jumps, 5.0, cfg, RngStamp(seed=9, stream_index=5))
    np.testing.assert_array_equal(first.values, again.values)
    np.testing.assert_array_equal(first.jump_post_values, again.jump_post_values)
    assert not np.array_equal(first.values, other.values)


def test_brownian_terminal_moments(bm: LevyTriplet) -> None:
    terminal = _terminal_values(bm, SimConfig(dt_max=1.0), seed=11)
    assert abs(terminal.mean()) < 4.0 / math.sqrt(N_PATHS)
    assert terminal.var() == pytest.approx(1.0, abs=4.0 * math.sqrt(2.0 / N_PATHS))


def test_poisson_jump_count() -> None:
    triplet = LevyTriplet(jumps=JumpMeasure(atoms=((1.0, 2.0),)))
    cfg = SimConfig(dt_max=0.25)
    counts = np.array(
        [
            sample_path(triplet, 1.0, cfg, RngStamp(seed=5, stream_index=i)).jump_times.size
            for i in range(N_PATHS)
        ]
    )
    assert counts.mean() == pytest.approx(2.0, abs=4.0 * math.sqrt(2.0 / N_PATHS))


def test_jump_records_are_consistent(negative_jumps: LevyTriplet) -> None:
    path = sample_path(negative_jumps, 20.0, SimConfig(dt_max=0.1), RngStamp(seed=2, stream_index=0))
    assert path.jump_times.size > 0
    assert np.all(np.diff(path.jump_times) >= 0.0)
    assert np.all((path.jump_times > 0.0) & (path.jump_times <= 20.0))
    np.testing.assert_allclose(path.jump_sizes, -0.5)
    assert all(origin == "atom:0" for _, _, origin in path.jump_records)


def test_injected_jumps_leave_base_draws_alone(bm: LevyTriplet) -> None:
    cfg = SimConfig(dt_max=0.01)
    stamp = RngStamp(seed=3, stream_index=7)
    plain = sample_path(bm, 1.0, cfg, stamp)
    injected = JumpRecords(
        times=np.array([0.505]),
        sizes=np.array([-1.0]),
        origins=np.array([0], dtype=np.int64),
    )
    shifted = sample_path(bm, 1.0, cfg, stamp, injected=injected)
    before = plain.times <= 0.5
    after = plain.times >= 0.51
    np.testing.assert_array_equal(plain.values[before], shifted.values[before])
    np.testing.assert_allclose(shifted.values[after] - plain.values[after], -1.0)


def test_flat_path_survives_with_bridge_weight() -> None:
    times = np.linspace(0.0, 1.0, 11)
    check = no_exit_indicator(_flat_path(times, 1.0), ConstantBoundary(1.0), SimConfig())
    assert check.indicator == 1
    assert check.weight == pytest.approx((1.0 - math.exp(-20.0)) ** 10, rel=1e-12)


def test_flat_path_without_diffusion_has_unit_weight() -> None:
    times = np.linspace(0.0, 1.0, 11)
    check = no_exit_indicator(_flat_path(times, 0.0), ConstantBoundary(1.0), SimConfig())
    assert check == (1, 1.0)


def test_grid_violation_is_an_exit() -> None:
    times = np.linspace(0.0, 1.0, 11)
    path = _flat_path(times, 1.0).model_copy(
        update={"values": np.where(times == times[6], 1.5, 0.0)}
    )
    assert no_exit_indicator(path, ConstantBoundary(1.0), SimConfig()).indicator == 0


def test_left_limit_violation_is_an_exit() -> None:
    times = np.linspace(0.0, 1.0, 11)
    path = _flat_path(times, 0.0).model_copy(
        update={
            "jump_times": np.array([0.55]),
            "jump_sizes": np.array([-2.0]),
            "jump_origins": np.array([0], dtype=np.int64),
            "jump_post_values": np.array([-0.5]),
        }
    )
    assert no_exit_indicator(path, ConstantBoundary(1.0), SimConfig()).indicator == 0
    later = no_exit_indicator(path, ConstantBoundary(1.0), SimConfig(), start=0.6)
    assert later.indicator == 1


def test_bridge_sampling_gives_binary_weights(bm: LevyTriplet) -> None:
    cfg = SimConfig(dt_max=0.05, bridge_sampling=True)
    boundary = ConstantBoundary(1.0)
    checks = [
        no_exit_indicator(
            sample_path(bm, 1.0, cfg, RngStamp(seed=8, stream_index=i)), boundary, cfg
        )
        for i in range(200)
    ]
    assert {c.weight for c in checks} <= {0.0, 1.0}
    assert all(c.weight == c.indicator for c in checks)


def test_stable_alpha_two_is_gaussian() -> None:
    draws = sample_stable_increment(2.0, 1.0, 0.0, np.full(N_PATHS, 1.0), np.random.default_rng(1))
    assert draws.var() == pytest.approx(2.0, abs=4.0 * 2.0 * math.sqrt(2.0 / N_PATHS))


def test_cauchy_median() -> None:
    draws = sample_stable_increment(1.0, 1.0, 0.0, np.full(N_PATHS, 1.0), np.random.default_rng(2))
    assert abs(np.median(draws)) < 4.0 * (math.pi / 2.0) / math.sqrt(N_PATHS)


def test_spectrally_negative_positivity() -> None:
    rho: float = stable_rho(1.5, -1.0)
    draws = sample_stable_increment(1.5, 1.0, -1.0, np.full(N_PATHS, 1.0), np.random.default_rng(3))
    tolerance: float = 4.0 * math.sqrt(rho * (1.0 - rho) / N_PATHS)
    assert np.mean(draws > 0.0) == pytest.approx(rho, abs=tolerance)


def test_stable_increment_scalar_and_domain() -> None:
    assert isinstance(
        sample_stable_increment(1.5, 1.0, 0.0, 0.1, RngStamp(seed=0, stream_index=0)), float
    )
    with pytest.raises(DomainError):
        sample_stable_increment(2.5, 1.0, 0.0, 1.0, np.random.default_rng(0))


def test_dump_skeleton(tmp_path: Path, negative_jumps: LevyTriplet) -> None:
    path = sample_path(negative_jumps, 10.0, SimConfig(dt_max=0.5), RngStamp(seed=4, stream_index=1))
    grid_file, jump_file = dump_skeleton(path, tmp_path, "path")
    grid = pd.read_csv(grid_file)
    jumps = pd.read_csv(jump_file)
    assert list(grid.columns) == ["t", "x"]
    assert list(jumps.columns) == ["time", "size", "origin"]
    assert len(grid) == path.times.size
    assert len(jumps) == path.jump_times.size
