from __future__ import annotations

import math

import numpy as np
import pytest
from pydantic import ValidationError

from levy_passage.bound_machinery import (
    ProofConstants,
    W_n,
    Z_n,
    eval_H_negative,
    eval_H_positive,
    h_square_threshold,
    iterate_H,
    iterated_log_star,
    log_iterate_H,
    verify_inequalities,
)
from levy_passage.boundary import ConstantBoundary, PowerBoundary
from levy_passage.errors import DomainError, IterateEscapedError

UNIT = ProofConstants(c1=1.0, c2=1.0, beta=0.5, l2_norm_sq=1.0)


def test_negative_h_at_one() -> None:
    pc = ProofConstants(c1=1.0, c2=2.0, l2_norm_sq=0.5)
    assert eval_H_negative(pc, 1.0) == pytest.approx(math.exp(-1.0))


def test_negative_h_closed_form() -> None:
    # ln H = -1 - sqrt(1) - 1
    assert eval_H_negative(UNIT, math.exp(-1.0)) == pytest.approx(math.exp(-3.0))


def test_positive_h_closed_form() -> None:
    # ln H = -4 + sqrt(4)
    assert eval_H_positive(UNIT, math.exp(-4.0)) == pytest.approx(math.exp(-2.0))


def test_h_brackets_identity() -> None:
    x = np.geomspace(1e-12, 1.0, 50)
    assert np.all(eval_H_negative(UNIT, x) <= x)
    assert np.all(eval_H_positive(UNIT, x) >= x)


@pytest.mark.parametrize("x", [0.0, -0.5, 1.5])
def test_h_domain(x: float) -> None:
    with pytest.raises(DomainError):
        eval_H_negative(UNIT, x)
    with pytest.raises(DomainError):
        eval_H_positive(UNIT, x)


def test_iterate_base_cases() -> None:
    assert iterate_H("beta_negative", UNIT, 0, 0.3) == pytest.approx(0.3)
    assert iterate_H("two_positive", UNIT, 0, 0.3) == pytest.approx(0.3)
    assert iterate_H("beta_negative", UNIT, 1, 0.3) == pytest.approx(eval_H_negative(UNIT, 0.15))
    assert iterate_H("two_positive", UNIT, 1, 0.01) == pytest.approx(eval_H_positive(UNIT, 0.02))


def test_iterate_unrolled() -> None:
    x: float = 0.2
    expected: float = x
    for _ in range(3):
        expected = float(eval_H_negative(UNIT, UNIT.beta * expected))
    assert iterate_H("beta_negative", UNIT, 3, x) == pytest.approx(expected, rel=1e-12)


def test_iterate_far_below_double_range() -> None:
    pc = ProofConstants(l2_norm_sq=4.0)
    log_value: float = log_iterate_H("beta_negative", pc, 200, -500.0)
    assert math.isfinite(log_value)
    assert log_value < -800.0
    assert iterate_H("beta_negative", pc, 200, math.exp(-500.0)) == 0.0


def test_iterate_escape() -> None:
    with pytest.raises(IterateEscapedError) as caught:
        iterate_H("two_positive", UNIT, 1, 0.6)
    assert caught.value.level == 1
    assert caught.value.value == pytest.approx(1.2)
    with pytest.raises(DomainError):
        iterate_H("beta_negative", UNIT, -1, 0.5)


def test_w_and_z() -> None:
    assert W_n(UNIT, 0, 0.25) == pytest.approx(0.25)
    assert W_n(UNIT, 2, 0.25) == pytest.approx(0.25 * 0.25 * math.exp(-2.0))
    assert Z_n(UNIT, 1, 0.25) == pytest.approx(math.exp(-1.0))
    inner: float = math.log(1.0 / (0.25 * 0.25))
    assert Z_n(UNIT, 2, 0.25) == pytest.approx(math.exp(math.sqrt(inner) - 1.0))


def test_constants_from_boundary() -> None:
    assert ProofConstants.from_boundary(PowerBoundary(0.25)).l2_norm_sq == pytest.approx(0.125)
    with pytest.raises(DomainError):
        ProofConstants.from_boundary(ConstantBoundary(1.0))
    with pytest.raises(ValidationError):
        ProofConstants(beta=1.5, l2_norm_sq=1.0)


def test_square_threshold_matches_closed_form() -> None:
    report = h_square_threshold(UNIT, samples=500, seed=2)
    assert report.log_threshold == pytest.approx(report.closed_form_log_threshold, rel=1e-10)
    # (1 + sqrt(5)) / 2 squared
    assert report.log_threshold == pytest.approx(-((1.0 + math.sqrt(5.0)) / 2.0) ** 2)
    assert report.holds_below


def test_verify_inequalities_defaults() -> None:
    pc = ProofConstants.from_boundary(PowerBoundary(0.25))
    report = verify_inequalities(pc, PowerBoundary(0.25), 2.0**16, samples=300)
    assert report.checked == 600
    assert report.violations == []
    assert report.ok
    assert report.iteration_counts == {"negative_case": 7, "positive_case": 10}
    assert report.log_star == 3
    names = {check.name for check in report.boundary_checks}
    assert names == {"findu", "incr2", "abs", "incr"}


def test_verify_inequalities_is_reproducible() -> None:
    pc = ProofConstants.from_boundary(PowerBoundary(0.25))
    first = verify_inequalities(pc, PowerBoundary(0.25), 2.0**16, samples=100, seed=4)
    again = verify_inequalities(pc, PowerBoundary(0.25), 2.0**16, samples=100, seed=4)
    assert first == again


def test_verify_skips_boundary_checks_for_short_horizons() -> None:
    pc = ProofConstants.from_boundary(PowerBoundary(0.25))
    report = verify_inequalities(pc, PowerBoundary(0.25), 2.0, samples=50)
    assert report.boundary_checks == []
    assert report.iteration_counts == {"negative_case": 0, "positive_case": 0}


@pytest.mark.parametrize(
    ("horizon", "expected"),
    [(0.5, 0), (1.0, 0), (math.e, 1), (15.0, 2), (2.0**16, 3), (1e6, 3)],
)
def test_iterated_log_star(horizon: float, expected: int) -> None:
    assert iterated_log_star(horizon) == expected


def test_iterated_log_star_domain() -> None:
    with pytest.raises(DomainError):
        iterated_log_star(0.0)
