from __future__ import annotations

import math

import pytest
from pydantic import ValidationError

from levy_passage.errors import DomainError
from levy_passage.levy_model import JumpMeasure, LevyTriplet, StablePart
from levy_passage.oracles import (
    GrowthEnvelopeBoundary,
    LemmaConfig,
    bm_no_exit_exact,
    calibration_grid,
    check_association,
    check_bbgr,
    check_coup,
    compensated_poisson,
    spitzer_rho_estimate,
    stable_rho,
)
from levy_passage.simulate import SimConfig

SMALL_BATTERY = LemmaConfig(
    n_paths=300,
    dt_max=0.05,
    association_trials=1,
    bbgr_horizon=2.0**6,
    bbgr_paths=200,
    coup_horizons=(16.0, 64.0),
)


def test_reflection_formula() -> None:
    assert bm_no_exit_exact(1.0, 1.0, 1.0) == pytest.approx(0.682689492, rel=1e-8)
    assert bm_no_exit_exact(2.0, 4.0, 1.0) == pytest.approx(bm_no_exit_exact(1.0, 1.0, 1.0))
    assert bm_no_exit_exact(1.0, 1.0, 1e12) < 1e-5


@pytest.mark.parametrize(("a", "sigma2", "horizon"), [(0.0, 1.0, 1.0), (1.0, 0.0, 1.0), (1.0, 1.0, -1.0)])
def test_reflection_formula_domain(a: float, sigma2: float, horizon: float) -> None:
    with pytest.raises(DomainError):
        bm_no_exit_exact(a, sigma2, horizon)


@pytest.mark.parametrize(
    ("alpha", "skew", "expected"),
    [
        (1.5, 0.0, 0.5),
        (1.0, 0.0, 0.5),
        (1.5, -1.0, 2.0 / 3.0),
        (1.5, 1.0, 1.0 / 3.0),
        (0.5, 1.0, 1.0),
    ],
)
def test_stable_rho(alpha: float, skew: float, expected: float) -> None:
    assert stable_rho(alpha, skew) == pytest.approx(expected, abs=1e-12)


def test_stable_rho_stays_open() -> None:
    assert 0.0 < stable_rho(0.5, -1.0) < 1.0
    assert stable_rho(0.5, 1.0) < 1.0


@pytest.mark.parametrize(("alpha", "skew"), [(2.0, 0.0), (1.5, 1.5), (1.0, 0.5)])
def test_stable_rho_domain(alpha: float, skew: float) -> None:
    with pytest.raises(DomainError):
        stable_rho(alpha, skew)


def test_spitzer_estimate_of_stable_law() -> None:
    triplet = LevyTriplet(jumps=JumpMeasure(stable=StablePart(alpha=1.5, scale=1.0, skew=-1.0)))
    rho: float = stable_rho(1.5, -1.0)
    estimates = spitzer_rho_estimate(triplet, [4.0, 1.0], 2000, seed=3)
    assert [e.probe for e in estimates] == [1.0, 4.0]
    tolerance: float = 4.0 * math.sqrt(rho * (1.0 - rho) / 2000)
    for estimate in estimates:
        assert estimate.p_hat == pytest.approx(rho, abs=tolerance)
        assert estimate.ci_low <= estimate.p_hat <= estimate.ci_high


def test_spitzer_estimate_of_brownian(bm: LevyTriplet) -> None:
    (estimate,) = spitzer_rho_estimate(bm, 2.0, 2000, seed=1, cfg=SimConfig())
    assert estimate.p_hat == pytest.approx(0.5, abs=4.0 * math.sqrt(0.25 / 2000))


def test_spitzer_probes_start_at_one(bm: LevyTriplet) -> None:
    with pytest.raises(DomainError):
        spitzer_rho_estimate(bm, [0.5, 2.0], 200, seed=0)


def test_calibration_grid() -> None:
    frame = calibration_grid((1.0, 2.0), (1.0, 4.0), 2000, seed=9, cfg=SimConfig(dt_max=0.05))
    assert list(frame.columns) == [
        "a",
        "T",
        "exact",
        "p_hat",
        "ci_low",
        "ci_high",
        "stderr",
        "z",
        "within_3se",
    ]
    assert len(frame) == 4
    assert frame["exact"].iloc[0] == pytest.approx(bm_no_exit_exact(1.0, 1.0, 1.0))
    assert (frame["z"].abs() <= 4.0).all()


def test_compensated_poisson_is_centred() -> None:
    triplet = compensated_poisson()
    assert triplet.mean() == pytest.approx(0.0)
    assert triplet.jumps.atoms == ((-1.0, 1.0),)


def test_growth_envelope_boundary() -> None:
    boundary = GrowthEnvelopeBoundary(2.0, 2.0**10)
    floor: float = math.log(2.0**10) ** 5
    assert boundary.value(1.0) == pytest.approx(2.0 * floor)
    assert boundary.derivative(1.0) == 0.0
    late: float = floor ** (4.0 / 3.0) * 2.0
    assert boundary.value(late) == pytest.approx(2.0 * late**0.75)
    assert boundary.derivative(late) == pytest.approx(1.5 * late**-0.25)


def test_lemma_config_validation() -> None:
    with pytest.raises(ValidationError):
        LemmaConfig(coup_exponent=0.5)
    with pytest.raises(ValidationError):
        LemmaConfig(n_paths=10)


def test_association_on_small_budget() -> None:
    (trial,) = check_association(SMALL_BATTERY)
    a, b, c = trial.window
    assert a < b < c
    assert trial.holds


def test_bbgr_on_small_budget() -> None:
    check = check_bbgr(SMALL_BATTERY)
    assert check.frequency == 0.0
    assert check.holds
    assert check.bound == pytest.approx(10.0 * math.exp(-(math.log(64.0) ** 2) / 4.0))


def test_coup_on_small_budget() -> None:
    check = check_coup(SMALL_BATTERY)
    assert check.horizons == (16.0, 64.0)
    assert check.reference == check.estimates[0]
    assert 0.0 < check.floor == min(check.estimates)
    assert check.holds == (check.floor >= 0.5 * check.reference)
