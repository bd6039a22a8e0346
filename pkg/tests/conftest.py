"""Shared fixtures for the levy-passage test suite."""

from __future__ import annotations

import pytest

from levy_passage.boundary import ConstantBoundary, PowerBoundary
from levy_passage.levy_model import JumpMeasure, LevyTriplet, martingale_normalize
from levy_passage.simulate import SimConfig


@pytest.fixture
def bm() -> LevyTriplet:
    return LevyTriplet.brownian()


@pytest.fixture
def negative_jumps() -> LevyTriplet:
    """BM plus a compensated negative atom at -0.5 with rate 1."""
    return martingale_normalize(
        LevyTriplet(sigma2=1.0, jumps=JumpMeasure(atoms=((-0.5, 1.0),)))
    )


@pytest.fixture
def both_jumps() -> LevyTriplet:
    return martingale_normalize(
        LevyTriplet(sigma2=1.0, jumps=JumpMeasure(atoms=((-0.5, 1.0), (0.5, 1.0))))
    )


@pytest.fixture
def unit_level() -> ConstantBoundary:
    return ConstantBoundary(1.0)


@pytest.fixture
def quarter_power() -> PowerBoundary:
    return PowerBoundary(gamma=0.25)


@pytest.fixture
def coarse_cfg() -> SimConfig:
    """A coarse grid for fast tests; the bridge correction keeps it unbiased for BM."""
    return SimConfig(dt_max=0.05)
