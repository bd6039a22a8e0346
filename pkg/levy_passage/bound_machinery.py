"""
Arithmetic of the iteration bounds: ``H``, its iterates, ``W_n``, ``Z_n``,
``n(T)`` and ``ln*``, plus a numerical certificate of the induction
inequalities built on them.

Everything is evaluated on ``ln x`` so that iterates far below the smallest
double stay representable.
"""

from __future__ import annotations

import logging
import math
from typing import Literal

import numpy as np
from numpy.typing import ArrayLike, NDArray
from pydantic import BaseModel, ConfigDict, Field
from scipy import optimize

from levy_passage.boundary import (
    Boundary,
    IteratedBoundary,
    iteration_count,
    l2_derivative_test,
)
from levy_passage.errors import DomainError, IterateEscapedError

LOGGER: logging.Logger = logging.getLogger(__name__)

IterateVariant = Literal["beta_negative", "two_positive"]

RELATIVE_SLACK: float = 1e-9
DEFAULT_LOG_X_RANGE: float = 200.0
BOUNDARY_GRID_POINTS: int = 400
LN2: float = math.log(2.0)


class ProofConstants(BaseModel):
    """Free constants of the iteration bounds."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    c1: float = Field(default=1.0, gt=0.0)
    c2: float = Field(default=1.0, gt=0.0)
    beta: float = Field(default=0.5, gt=0.0, lt=1.0)
    l2_norm_sq: float = Field(gt=0.0)
    kappa: float = Field(default=1.0, gt=0.0)
    kappa_delta: float = Field(default=1.0, gt=0.0)

    @property
    def root_scale(self) -> float:
        """``c1 * ||f'||^2``."""
        return self.c1 * self.l2_norm_sq

    @property
    def shift(self) -> float:
        """``c2 * ||f'||^2``."""
        return self.c2 * self.l2_norm_sq

    @classmethod
    def from_boundary(
        cls,
        boundary: Boundary,
        **constants: float,
    ) -> ProofConstants:
        """
        Take ``||f'||^2`` from :func:`l2_derivative_test`.

        Raises:
            DomainError: If the integral is not finite and positive.

        """
        test = l2_derivative_test(boundary)
        if test.status != "finite" or not test.value:
            msg = f"boundary needs a finite positive ||f'||^2, got {test.status}"
            raise DomainError(msg)
        return cls(l2_norm_sq=test.value, **constants)


def _log_domain(x: ArrayLike) -> NDArray[np.float64]:
    values = np.asarray(x, dtype=np.float64)
    if np.any(~(values > 0.0)) or np.any(values > 1.0):
        msg = "H is defined on (0, 1]"
        raise DomainError(msg)
    return np.log(values)


def _as_output(values: NDArray[np.float64], x: ArrayLike) -> float | NDArray[np.float64]:
    if np.ndim(x) == 0:
        return float(values)
    return values


def log_H_negative(pc: ProofConstants, log_x: ArrayLike) -> NDArray[np.float64]:  # noqa: N802
    """``ln H(x) = ln x - sqrt(c1 L ln(1/x)) - c2 L``."""
    lx = np.asarray(log_x, dtype=np.float64)
    return lx - np.sqrt(pc.root_scale * np.maximum(-lx, 0.0)) - pc.shift


def log_H_positive(pc: ProofConstants, log_x: ArrayLike) -> NDArray[np.float64]:  # noqa: N802
    """``ln H(x) = ln x + sqrt(c1 L ln(1/x))``."""
    lx = np.asarray(log_x, dtype=np.float64)
    return lx + np.sqrt(pc.root_scale * np.maximum(-lx, 0.0))


def eval_H_negative(pc: ProofConstants, x: ArrayLike) -> float | NDArray[np.float64]:  # noqa: N802
    """
    Evaluate ``H(x) = x exp(-sqrt(c1 L ln(1/x)) - c2 L)`` on ``(0, 1]``.

    Args:
        pc: Constants, ``L = ||f'||^2``.
        x: Scalar or array in ``(0, 1]``.

    Returns:
        Values in ``(0, x]``.

    Raises:
        DomainError: Outside ``(0, 1]``.

    """
    return _as_output(np.exp(log_H_negative(pc, _log_domain(x))), x)


def eval_H_positive(pc: ProofConstants, x: ArrayLike) -> float | NDArray[np.float64]:  # noqa: N802
    """Evaluate ``H(x) = x exp(sqrt(c1 L ln(1/x)))`` on ``(0, 1]``; ``H(x) >= x``."""
    return _as_output(np.exp(log_H_positive(pc, _log_domain(x))), x)


def log_iterate_H(  # noqa: N802
    variant: IterateVariant,
    pc: ProofConstants,
    n: int,
    log_x: float,
) -> float:
    """
    Iterate in the log domain.

    ``beta_negative`` composes ``y -> H(beta y)`` ``n`` times; ``two_positive``
    composes ``y -> H(2 y)``, so level 1 is ``H(2x)``. Level 0 is ``x``.

    Raises:
        DomainError: If ``n < 0`` or ``x`` is outside ``(0, 1]``.
        IterateEscapedError: If an argument ``2y`` leaves ``(0, 1]``.

    """
    if n < 0:
        msg = f"iteration level must be nonnegative, got {n}"
        raise DomainError(msg)
    if not log_x <= 0.0:
        msg = "H is defined on (0, 1]"
        raise DomainError(msg)
    current: float = log_x
    for level in range(1, n + 1):
        if variant == "beta_negative":
            current = float(log_H_negative(pc, current + math.log(pc.beta)))
            continue
        argument: float = current + LN2
        if argument > 0.0:
            raise IterateEscapedError(level=level, value=math.exp(argument))
        current = float(log_H_positive(pc, argument))
    return current


def iterate_H(variant: IterateVariant, pc: ProofConstants, n: int, x: float) -> float:  # noqa: N802
    """``H^n_beta(x)`` or ``H^n_2(x)``; see :func:`log_iterate_H`."""
    if not 0.0 < x <= 1.0:
        msg = "H is defined on (0, 1]"
        raise DomainError(msg)
    return math.exp(log_iterate_H(variant, pc, n, math.log(x)))


def log_W(pc: ProofConstants, n: int, log_x: float) -> float:  # noqa: N802
    """``ln W_n(x) = ln x + n ln beta - n c2 L``."""
    return log_x + n * math.log(pc.beta) - n * pc.shift


def log_Z(pc: ProofConstants, n: int, log_x: float) -> float:  # noqa: N802
    """``ln Z_n(x) = (n - 1) sqrt(c1 L 2^(n-2) ln(1 / (x beta^2))) - c2 L``."""
    inner: float = -log_x - 2.0 * math.log(pc.beta)
    return (n - 1) * math.sqrt(pc.root_scale * 2.0 ** (n - 2) * inner) - pc.shift


def W_n(pc: ProofConstants, n: int, x: float) -> float:  # noqa: N802
    return math.exp(log_W(pc, n, math.log(x)))


def Z_n(pc: ProofConstants, n: int, x: float) -> float:  # noqa: N802
    return math.exp(log_Z(pc, n, math.log(x)))


class ThresholdReport(BaseModel):
    """Crossover below which ``H(x) >= x^2`` (negative-case ``H``)."""

    model_config = ConfigDict(frozen=True)

    threshold: float
    log_threshold: float
    closed_form_log_threshold: float
    samples: int
    holds_below: bool


def h_square_threshold(
    pc: ProofConstants,
    samples: int = 1000,
    seed: int = 0,
) -> ThresholdReport:
    """
    Locate the largest ``x`` with ``H(x) >= x^2`` for all smaller ``x``.

    With ``u = ln(1/x)`` the inequality reads ``u - sqrt(c1 L u) - c2 L >= 0``;
    the root is found with :func:`scipy.optimize.brentq` and compared with
    ``sqrt(u*) = (sqrt(c1 L) + sqrt(c1 L + 4 c2 L)) / 2``.

    Args:
        pc: Constants.
        samples: Log-uniform probes below the threshold.
        seed: Seed of the probes.

    Returns:
        The threshold and whether the inequality held on every probe.

    """

    def gap(u: float) -> float:
        return u - math.sqrt(pc.root_scale * u) - pc.shift

    upper: float = 1.0
    while gap(upper) <= 0.0:
        upper *= 2.0
    root: float = float(optimize.brentq(gap, 0.0, upper, xtol=1e-14, rtol=1e-14))
    closed: float = (
        (math.sqrt(pc.root_scale) + math.sqrt(pc.root_scale + 4.0 * pc.shift)) / 2.0
    ) ** 2

    rng = np.random.default_rng(seed)
    log_x = -root - rng.uniform(0.0, DEFAULT_LOG_X_RANGE, samples)
    holds = bool(np.all(log_H_negative(pc, log_x) >= 2.0 * log_x - RELATIVE_SLACK))
    if not holds:
        LOGGER.warning("H(x) >= x^2 failed below the located threshold")
    return ThresholdReport(
        threshold=math.exp(-root),
        log_threshold=-root,
        closed_form_log_threshold=-closed,
        samples=samples,
        holds_below=holds,
    )


class InequalityWitness(BaseModel):
    """One sampled ``(n, x)``; ``lhs`` and ``rhs`` are natural logarithms."""

    model_config = ConfigDict(frozen=True)

    variant: IterateVariant
    n: int
    log_x: float
    lhs: float
    rhs: float


class BoundaryCheck(BaseModel):
    """Worst relative excess of one boundary-side inequality at one level."""

    model_config = ConfigDict(frozen=True)

    name: Literal["findu", "incr2", "abs", "incr"]
    level: int
    holds: bool
    worst_excess: float


class InequalityReport(BaseModel):
    """Outcome of :func:`verify_inequalities`."""

    model_config = ConfigDict(frozen=True)

    checked: int
    violations: list[InequalityWitness]
    out_of_validity: list[InequalityWitness]
    threshold: ThresholdReport
    boundary_checks: list[BoundaryCheck]
    iteration_counts: dict[str, int]
    log_star: int

    @property
    def ok(self) -> bool:
        return not self.violations and all(c.holds for c in self.boundary_checks)


def _indi_witness(pc: ProofConstants, n: int, log_x: float) -> InequalityWitness:
    lhs: float = log_iterate_H("beta_negative", pc, n, log_x)
    w: float = log_W(pc, n, log_x)
    ratio: float = max(log_Z(pc, n, log_x) - w, 0.0)
    rhs: float = w - n * math.sqrt(pc.root_scale * ratio)
    return InequalityWitness(variant="beta_negative", n=n, log_x=log_x, lhs=lhs, rhs=rhs)


def _induct_witness(
    pc: ProofConstants,
    n: int,
    log_x: float,
) -> tuple[InequalityWitness, bool]:
    root: float = math.sqrt(pc.root_scale * -log_x)
    monotone_edge: float = -pc.root_scale / 4.0
    valid: bool = all(
        LN2 + (k * LN2 + log_x + k * root) <= monotone_edge for k in range(n)
    )
    rhs: float = n * LN2 + log_x + n * root
    try:
        lhs: float = log_iterate_H("two_positive", pc, n, log_x)
    except IterateEscapedError:
        lhs = math.inf
        valid = False
    witness = InequalityWitness(
        variant="two_positive", n=n, log_x=log_x, lhs=lhs, rhs=rhs
    )
    return witness, valid


def _excess(lhs: NDArray[np.float64], rhs: NDArray[np.float64]) -> float:
    scale = np.maximum(1.0, np.abs(rhs))
    finite = np.isfinite(lhs) & np.isfinite(rhs)
    if not np.any(finite):
        return 0.0
    return float(np.max((lhs[finite] - rhs[finite]) / scale[finite]))


def _boundary_checks(
    pc: ProofConstants,
    boundary: Boundary,
    horizon: float,
    counts: dict[str, int],
) -> list[BoundaryCheck]:
    checks: list[BoundaryCheck] = []
    times = np.geomspace(1e-3, horizon, BOUNDARY_GRID_POINTS)
    slope = np.asarray(boundary.derivative(times), dtype=np.float64)

    negative = IteratedBoundary(boundary, horizon, "negative_case")
    for level in range(counts.get("negative_case", -1) + 1):
        values = np.asarray(negative.value(level, times))
        bound = np.asarray(negative.findu_bound(level, times))
        findu: float = _excess(values, bound)
        derivative = np.asarray(negative.derivative(level, times))
        incr2: float = max(_excess(derivative, slope), _excess(-derivative, 0.0 * slope))
        checks.append(
            BoundaryCheck(name="findu", level=level, holds=findu <= RELATIVE_SLACK, worst_excess=findu)
        )
        checks.append(
            BoundaryCheck(name="incr2", level=level, holds=incr2 <= RELATIVE_SLACK, worst_excess=incr2)
        )

    positive = IteratedBoundary(boundary, horizon, "positive_case", pc.kappa_delta)
    late = times[times > math.log(horizon)]
    late_slope = np.asarray(boundary.derivative(late), dtype=np.float64)
    for level in range(1, counts.get("positive_case", 0) + 1):
        values = np.asarray(positive.value(level, late))
        bound = np.asarray(positive.abs_bound(level, late))
        absolute: float = _excess(values, bound)
        derivative = np.asarray(positive.derivative(level, late))
        incr: float = _excess(derivative, late_slope)
        checks.append(
            BoundaryCheck(name="abs", level=level, holds=absolute <= RELATIVE_SLACK, worst_excess=absolute)
        )
        checks.append(
            BoundaryCheck(name="incr", level=level, holds=incr <= RELATIVE_SLACK, worst_excess=incr)
        )
    return checks


def verify_inequalities(  # noqa: PLR0913
    pc: ProofConstants,
    boundary: Boundary,
    horizon: float,
    samples: int = 1000,
    *,
    max_level: int = 30,
    log_x_range: float = DEFAULT_LOG_X_RANGE,
    seed: int = 0,
) -> InequalityReport:
    """
    Certify the induction inequalities on random ``(n, x)``.

    For the negative case, ``H^n_beta(x) >= W_n exp(-n sqrt(c1 L ln(Z_n / W_n)))``
    is claimed wherever ``beta x`` lies below the ``H(x) >= x^2`` threshold.
    For the positive case, ``H^n_2(2x) <= 2^n x exp(n sqrt(c1 L ln(1/x)))`` is
    claimed wherever every doubled intermediate bound stays in the region
    where ``H`` increases. Samples outside these ranges are listed as
    out-of-validity, never as violations.

    The boundary-side inequalities are checked on a log grid of ``[1e-3, T]``
    for every level up to ``n(T)``.

    Args:
        pc: Constants.
        boundary: The boundary ``f`` behind the iterated levels.
        horizon: ``T``.
        samples: Draws per variant.
        max_level: Largest sampled ``n``.
        log_x_range: ``ln x`` is drawn uniformly from ``[-log_x_range, 0)``.
        seed: Seed of the draws.

    Returns:
        The report; it never raises for a failed inequality.

    """
    rng = np.random.default_rng(seed)
    threshold = h_square_threshold(pc, seed=seed)
    levels = rng.integers(1, max_level + 1, size=(2, samples))
    log_xs = -rng.uniform(0.0, log_x_range, size=(2, samples))

    violations: list[InequalityWitness] = []
    outside: list[InequalityWitness] = []
    for n, log_x in zip(levels[0].tolist(), log_xs[0].tolist(), strict=True):
        witness = _indi_witness(pc, n, log_x)
        if log_x + math.log(pc.beta) > threshold.log_threshold:
            outside.append(witness)
        elif witness.lhs < witness.rhs - RELATIVE_SLACK * max(1.0, abs(witness.rhs)):
            violations.append(witness)
    for n, log_x in zip(levels[1].tolist(), log_xs[1].tolist(), strict=True):
        witness, valid = _induct_witness(pc, n, log_x)
        if not valid:
            outside.append(witness)
        elif witness.lhs > witness.rhs + RELATIVE_SLACK * max(1.0, abs(witness.rhs)):
            violations.append(witness)

    counts: dict[str, int] = {}
    checks: list[BoundaryCheck] = []
    try:
        counts = {
            "negative_case": iteration_count("negative_case", pc.kappa, horizon),
            "positive_case": iteration_count("positive_case", pc.kappa, horizon),
        }
        checks = _boundary_checks(pc, boundary, horizon, counts)
    except DomainError as error:
        LOGGER.warning("Boundary-side checks skipped: %s", error)

    if violations:
        LOGGER.warning("%d inequality violations inside validity", len(violations))
    LOGGER.debug(
        "Checked %d samples, %d out of validity", 2 * samples, len(outside)
    )
    return InequalityReport(
        checked=2 * samples,
        violations=violations,
        out_of_validity=outside,
        threshold=threshold,
        boundary_checks=checks,
        iteration_counts=counts,
        log_star=iterated_log_star(horizon),
    )


def iterated_log_star(horizon: float) -> int:
    """
    Count logarithms until the value drops to 1 or below.

    Raises:
        DomainError: If ``T <= 0``.

    """
    if not horizon > 0.0:
        msg = f"ln* needs T > 0, got {horizon!r}"
        raise DomainError(msg)
    count: int = 0
    value: float = float(horizon)
    while value > 1.0:
        value = math.log(value)
        count += 1
    return count
