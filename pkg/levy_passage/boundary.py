"""Moving boundaries, their integral tests and the iterated constructions."""

from __future__ import annotations

import logging
import math
import threading
from abc import ABC, abstractmethod
from collections.abc import Callable
from typing import Annotated, Any, Literal

import numpy as np
from numpy.typing import ArrayLike, NDArray
from pydantic import BaseModel, ConfigDict, Field, TypeAdapter
from scipy import integrate, optimize

from levy_passage.errors import DomainError

LOGGER: logging.Logger = logging.getLogger(__name__)

DEFAULT_QUAD_UPPER: float = 1e8
DOUBLING_RTOL: float = 1e-6
TAIL_FINITE_EXPONENT: float = 1.05
TAIL_INFINITE_EXPONENT: float = 1.001
MAX_LEVEL: int = 200
SWITCH_RTOL: float = 1e-9
GROWTH_GRID_POINTS: int = 2000

Variant = Literal["negative_case", "positive_case"]
Scalar = float | NDArray[np.float64]


def _shape_like(values: NDArray[np.float64], t: ArrayLike) -> Scalar:
    if np.ndim(t) == 0:
        return float(values)
    return values


class Boundary(ABC):
    """A deterministic barrier ``f`` on ``t >= 0`` with its derivative."""

    kind: str = "custom"

    @abstractmethod
    def value(self, t: ArrayLike) -> Scalar:
        """Return ``f(t)``."""

    @abstractmethod
    def derivative(self, t: ArrayLike) -> Scalar:
        """Return ``f'(t)``."""

    def inverse(self, level: float, lo: float, hi: float) -> float:
        """
        Solve ``f(t) = level`` for ``t`` in ``[lo, hi]``.

        Args:
            level: Target value.
            lo: Left end of the bracket.
            hi: Right end of the bracket.

        Returns:
            A root of ``f(t) - level``.

        Raises:
            DomainError: If the bracket holds no sign change.

        """
        f_lo: float = float(self.value(lo)) - level
        f_hi: float = float(self.value(hi)) - level
        if f_lo == 0.0:
            return lo
        if f_hi == 0.0:
            return hi
        if f_lo * f_hi > 0.0:
            msg = f"level {level!r} not bracketed on [{lo!r}, {hi!r}]"
            raise DomainError(msg)
        return float(
            optimize.brentq(
                lambda t: float(self.value(t)) - level,
                lo,
                hi,
                xtol=1e-14,
                rtol=4 * np.finfo(float).eps,
            )
        )

    def to_json_dict(self) -> dict[str, Any]:
        """
        Return the JSON object form.

        Raises:
            DomainError: For boundaries without a JSON form.

        """
        msg = f"{type(self).__name__} has no JSON form"
        raise DomainError(msg)


class ConstantBoundary(Boundary):
    """``f(t) = level``."""

    kind: str = "constant"

    def __init__(self, level: float) -> None:
        self.level: float = float(level)

    def value(self, t: ArrayLike) -> Scalar:
        return _shape_like(np.full(np.shape(t), self.level), t)

    def derivative(self, t: ArrayLike) -> Scalar:
        return _shape_like(np.zeros(np.shape(t)), t)

    def to_json_dict(self) -> dict[str, Any]:
        return {"kind": "constant", "value": self.level}

    def __repr__(self) -> str:
        return f"ConstantBoundary({self.level!r})"


class PowerBoundary(Boundary):
    """``f(t) = offset + t**gamma`` (sign plus) or ``offset - t**gamma``."""

    kind: str = "power"

    def __init__(
        self,
        gamma: float,
        sign: Literal["plus", "minus"] = "plus",
        offset: float = 0.0,
    ) -> None:
        if gamma < 0.0:
            msg = f"power boundary needs gamma >= 0, got {gamma!r}"
            raise DomainError(msg)
        self.gamma: float = float(gamma)
        self.sign: Literal["plus", "minus"] = sign
        self.offset: float = float(offset)
        self._signum: float = 1.0 if sign == "plus" else -1.0

    def value(self, t: ArrayLike) -> Scalar:
        times = np.asarray(t, dtype=np.float64)
        return _shape_like(self.offset + self._signum * times**self.gamma, t)

    def derivative(self, t: ArrayLike) -> Scalar:
        times = np.asarray(t, dtype=np.float64)
        if self.gamma == 0.0:
            return _shape_like(np.zeros(times.shape), t)
        with np.errstate(divide="ignore"):
            slope = self.gamma * times ** (self.gamma - 1.0)
        return _shape_like(self._signum * slope, t)

    def to_json_dict(self) -> dict[str, Any]:
        return {
            "kind": "power",
            "gamma": self.gamma,
            "sign": self.sign,
            "offset": self.offset,
        }

    def __repr__(self) -> str:
        return f"PowerBoundary({self.gamma!r}, {self.sign!r}, {self.offset!r})"


class CustomBoundary(Boundary):
    """
    Boundary given by a vectorised function and its derivative.

    Both callables must be picklable (module-level functions) when the
    boundary is evaluated by more than one worker process.
    """

    def __init__(
        self,
        func: Callable[[NDArray[np.float64]], NDArray[np.float64]],
        deriv: Callable[[NDArray[np.float64]], NDArray[np.float64]],
        name: str = "custom",
    ) -> None:
        self.func = func
        self.deriv = deriv
        self.name: str = name

    def value(self, t: ArrayLike) -> Scalar:
        times = np.asarray(t, dtype=np.float64)
        return _shape_like(np.asarray(self.func(times), dtype=np.float64), t)

    def derivative(self, t: ArrayLike) -> Scalar:
        times = np.asarray(t, dtype=np.float64)
        return _shape_like(np.asarray(self.deriv(times), dtype=np.float64), t)

    def __repr__(self) -> str:
        return f"CustomBoundary({self.name!r})"


class FrozenBoundary(Boundary):
    """``t -> base(max(t, start))``: the base boundary held flat before ``start``."""

    def __init__(self, base: Boundary, start: float) -> None:
        self.base: Boundary = base
        self.start: float = float(start)

    def value(self, t: ArrayLike) -> Scalar:
        times = np.maximum(np.asarray(t, dtype=np.float64), self.start)
        return _shape_like(np.asarray(self.base.value(times)), t)

    def derivative(self, t: ArrayLike) -> Scalar:
        times = np.asarray(t, dtype=np.float64)
        active = np.maximum(times, self.start)
        slope = np.where(times >= self.start, self.base.derivative(active), 0.0)
        return _shape_like(slope, t)

    def __repr__(self) -> str:
        return f"FrozenBoundary({self.base!r}, {self.start!r})"


class ShiftedBoundary(Boundary):
    """``t -> base(t) - sign * moving(t)``."""

    def __init__(self, base: Boundary, moving: Boundary, sign: float) -> None:
        self.base: Boundary = base
        self.moving: Boundary = moving
        self.sign: float = float(sign)

    def value(self, t: ArrayLike) -> Scalar:
        values = np.asarray(self.base.value(t)) - self.sign * np.asarray(
            self.moving.value(t)
        )
        return _shape_like(values, t)

    def derivative(self, t: ArrayLike) -> Scalar:
        slopes = np.asarray(self.base.derivative(t)) - self.sign * np.asarray(
            self.moving.derivative(t)
        )
        return _shape_like(slopes, t)

    def __repr__(self) -> str:
        return f"ShiftedBoundary({self.base!r}, {self.moving!r}, {self.sign!r})"


class ConstantBoundarySpec(BaseModel):
    """JSON form of a constant boundary."""

    model_config = ConfigDict(extra="forbid")

    kind: Literal["constant"]
    value: float

    def to_boundary(self) -> Boundary:
        return ConstantBoundary(self.value)


class PowerBoundarySpec(BaseModel):
    """JSON form of a power boundary."""

    model_config = ConfigDict(extra="forbid")

    kind: Literal["power"]
    gamma: float = Field(ge=0.0)
    sign: Literal["plus", "minus"] = "plus"
    offset: float = 0.0

    def to_boundary(self) -> Boundary:
        return PowerBoundary(self.gamma, self.sign, self.offset)


BoundarySpec = Annotated[
    ConstantBoundarySpec | PowerBoundarySpec,
    Field(discriminator="kind"),
]
BOUNDARY_SPEC_ADAPTER: TypeAdapter[BoundarySpec] = TypeAdapter(BoundarySpec)


def boundary_from_json(data: dict[str, Any]) -> Boundary:
    """Build a boundary from its JSON object form."""
    return BOUNDARY_SPEC_ADAPTER.validate_python(data).to_boundary()


class IntegralTest(BaseModel):
    """Convergence class of an improper integral on ``[1, inf)``."""

    model_config = ConfigDict(frozen=True)

    status: Literal["finite", "infinite", "inconclusive"]
    value: float | None = None


class GrowthReport(BaseModel):
    """Witnessed constants of the two growth properties on a sample grid."""

    model_config = ConfigDict(frozen=True)

    prop1_holds: bool
    prop1_c: float
    prop2_holds: bool
    prop2_c: float


def _tail_exponent(
    integrand: Callable[[NDArray[np.float64]], NDArray[np.float64]],
    upper: float,
) -> float | None:
    times = np.geomspace(upper / 100.0, upper, 64)
    values = np.abs(integrand(times))
    if np.any(values <= 0.0) or not np.all(np.isfinite(values)):
        return None
    slope, _ = np.polyfit(np.log(times), np.log(values), 1)
    return float(-slope)


def _doubling_quadrature(
    integrand: Callable[[NDArray[np.float64]], NDArray[np.float64]],
    quad_upper: float,
) -> IntegralTest:
    total: float = 0.0
    lo: float = 1.0
    hi: float = 2.0
    while hi <= quad_upper:
        piece, _ = integrate.quad(
            lambda s: float(integrand(np.asarray(s))),
            lo,
            hi,
            limit=200,
        )
        total += piece
        if not math.isfinite(total):
            return IntegralTest(status="infinite")
        if total > 0.0 and abs(piece) < DOUBLING_RTOL * abs(total):
            return IntegralTest(status="finite", value=total)
        lo, hi = hi, 2.0 * hi

    exponent: float | None = _tail_exponent(integrand, lo)
    LOGGER.debug("Tail exponent beyond %g: %s", lo, exponent)
    if exponent is None:
        return IntegralTest(status="inconclusive", value=total)
    if exponent >= TAIL_FINITE_EXPONENT:
        tail: float = abs(float(integrand(np.asarray(lo)))) * lo / (exponent - 1.0)
        return IntegralTest(status="finite", value=total + tail)
    if exponent <= TAIL_INFINITE_EXPONENT:
        return IntegralTest(status="infinite")
    LOGGER.warning("Quadrature inconclusive, tail exponent %.4f", exponent)
    return IntegralTest(status="inconclusive", value=total)


def uchiyama_test(
    boundary: Boundary,
    quad_upper: float = DEFAULT_QUAD_UPPER,
) -> IntegralTest:
    """
    Classify ``int_1^inf |f(t)| t**-1.5 dt``.

    Args:
        boundary: Boundary evaluable on ``[1, inf)``.
        quad_upper: Cap of the doubling quadrature for custom boundaries.

    Returns:
        Closed-form class for constant and power boundaries, otherwise the
        quadrature verdict.

    """
    if isinstance(boundary, ConstantBoundary):
        return IntegralTest(status="finite", value=2.0 * abs(boundary.level))
    if isinstance(boundary, PowerBoundary):
        if boundary.gamma >= 0.5:  # noqa: PLR2004
            return IntegralTest(status="infinite")
        value, _ = integrate.quad(
            lambda s: abs(float(boundary.value(s))) * s**-1.5,
            1.0,
            math.inf,
            limit=200,
        )
        return IntegralTest(status="finite", value=value)

    def integrand(t: NDArray[np.float64]) -> NDArray[np.float64]:
        return np.abs(np.asarray(boundary.value(t))) * t**-1.5

    return _doubling_quadrature(integrand, quad_upper)


def l2_derivative_test(
    boundary: Boundary,
    quad_upper: float = DEFAULT_QUAD_UPPER,
) -> IntegralTest:
    """
    Classify ``int_1^inf f'(s)**2 ds``.

    Args:
        boundary: Boundary with a derivative evaluable on ``[1, inf)``.
        quad_upper: Cap of the doubling quadrature for custom boundaries.

    Returns:
        Closed form ``gamma**2 / (1 - 2 gamma)`` for power boundaries,
        otherwise the quadrature verdict.

    """
    if isinstance(boundary, ConstantBoundary):
        return IntegralTest(status="finite", value=0.0)
    if isinstance(boundary, PowerBoundary):
        gamma: float = boundary.gamma
        if gamma == 0.0:
            return IntegralTest(status="finite", value=0.0)
        if gamma >= 0.5:  # noqa: PLR2004
            return IntegralTest(status="infinite")
        return IntegralTest(status="finite", value=gamma * gamma / (1.0 - 2.0 * gamma))

    def integrand(t: NDArray[np.float64]) -> NDArray[np.float64]:
        return np.asarray(boundary.derivative(t)) ** 2

    return _doubling_quadrature(integrand, quad_upper)


def _bounded_on_grid(values: NDArray[np.float64]) -> bool:
    half: int = values.size // 2
    head: float = float(np.max(values[:half]))
    tail: float = float(np.max(values[half:]))
    return tail <= head + 1e-9 * max(1.0, abs(head))


def growth_props(boundary: Boundary, horizon: float) -> GrowthReport:
    """
    Certify ``f(T) <= c T`` and ``sqrt(t) f'(s) <= c~`` on a log grid of ``[1, T]``.

    A property holds when its witnessed ratio over the upper half of the grid
    never exceeds the maximum over the lower half.

    Args:
        boundary: Boundary to inspect.
        horizon: Right end ``T > e`` of the grid.

    Returns:
        Holding flags and witnessed constants.

    Raises:
        DomainError: If ``horizon <= e``.

    """
    if horizon <= math.e:
        msg = f"growth_props needs T > e, got {horizon!r}"
        raise DomainError(msg)
    grid = np.geomspace(1.0, horizon, GROWTH_GRID_POINTS)
    ratio = np.maximum(np.asarray(boundary.value(grid)), 0.0) / grid
    slopes = np.asarray(boundary.derivative(grid))
    # sup over 1 <= t <= s of sqrt(t) f'(s) sits at t = s or t = 1
    weighted = np.maximum(np.sqrt(grid) * slopes, slopes)
    return GrowthReport(
        prop1_holds=_bounded_on_grid(ratio),
        prop1_c=float(np.max(ratio)),
        prop2_holds=_bounded_on_grid(weighted),
        prop2_c=max(float(np.max(weighted)), 0.0),
    )


def check_derivative(
    boundary: Boundary,
    rng: np.random.Generator,
    samples: int = 100,
) -> float:
    """
    Largest normalised gap between ``f'`` and a central difference on ``[1, 1e4]``.

    Args:
        boundary: Boundary to inspect.
        rng: Source of the sampled times.
        samples: Number of sampled times.

    Returns:
        ``max |(f(t+h) - f(t-h)) / 2h - f'(t)| / (1 + |f'(t)|)`` with ``h = 1e-4 t``.

    """
    times = rng.uniform(1.0, 1e4, samples)
    step = 1e-4 * times
    central = (
        np.asarray(boundary.value(times + step))
        - np.asarray(boundary.value(times - step))
    ) / (2.0 * step)
    exact = np.asarray(boundary.derivative(times))
    return float(np.max(np.abs(central - exact) / (1.0 + np.abs(exact))))


def iteration_count(variant: Variant, kappa: float, horizon: float) -> int:
    """
    Number of internal iterations ``n(T)`` used by the proofs.

    Args:
        variant: ``negative_case`` (ratio 3/2) or ``positive_case`` (ratio 4/3).
        kappa: Growth constant of the boundary bound.
        horizon: Horizon ``T``.

    Returns:
        ``ceil(ln(ln(kappa T) / ln 2) / ln(ratio))``.

    Raises:
        DomainError: If ``kappa T < 2``.

    """
    scaled: float = kappa * horizon
    if not scaled >= 2.0:  # noqa: PLR2004
        msg = f"iteration_count needs kappa*T >= 2, got {scaled!r}"
        raise DomainError(msg)
    ratio: float = 1.5 if variant == "negative_case" else 4.0 / 3.0
    numerator: float = math.log(math.log(scaled) / math.log(2.0))
    return max(math.ceil(numerator / math.log(ratio) - 1e-12), 0)


class IteratedBoundary:
    """
    Levels ``f_0, f_1, ...`` of the iterated boundary anchored at ``ln T``.

    Anchor values ``f_n(ln T)`` are memoised on first use behind a lock so
    that concurrent readers see a consistent table.
    """

    def __init__(
        self,
        base: Boundary,
        horizon: float,
        variant: Variant,
        kappa_delta: float = 1.0,
    ) -> None:
        """
        Anchor the recursion.

        Args:
            base: The boundary ``f``.
            horizon: ``T > e``.
            variant: Which recursion to follow.
            kappa_delta: Per-level shift constant (positive case only).

        Raises:
            DomainError: If ``T <= e`` or ``kappa_delta < 0``.

        """
        if horizon <= math.e:
            msg = f"iterated boundary needs T > e, got {horizon!r}"
            raise DomainError(msg)
        if kappa_delta < 0.0:
            msg = f"kappa_delta must be nonnegative, got {kappa_delta!r}"
            raise DomainError(msg)
        self.base: Boundary = base
        self.horizon: float = float(horizon)
        self.variant: Variant = variant
        self.kappa_delta: float = float(kappa_delta)
        self.anchor: float = math.log(self.horizon)

        self._lock: threading.Lock = threading.Lock()
        self._anchors: list[float] = [float(base.value(self.anchor))]

    @property
    def plateau(self) -> float:
        """Floor of the level increment: 1, or ``(ln T)**5`` in the positive case."""
        if self.variant == "negative_case":
            return 1.0
        return self.anchor**5

    def _step(self, excess: NDArray[np.float64]) -> NDArray[np.float64]:
        excess = np.maximum(excess, 0.0)
        if self.variant == "negative_case":
            return np.maximum(1.0, excess ** (2.0 / 3.0))
        return self.kappa_delta * self.anchor + np.maximum(
            self.plateau,
            excess**0.75,
        )

    def anchor_value(self, n: int) -> float:
        """
        Return ``f_n(ln T)``.

        Args:
            n: Level, ``0 <= n <= 200``.

        """
        self._check_level(n)
        with self._lock:
            while len(self._anchors) <= n:
                previous: float = self._anchors[-1]
                self._anchors.append(
                    previous + float(self._step(np.asarray(0.0)))
                )
            return self._anchors[n]

    @staticmethod
    def _check_level(n: int) -> None:
        if not 0 <= n <= MAX_LEVEL:
            msg = f"level must lie in [0, {MAX_LEVEL}], got {n}"
            raise DomainError(msg)

    def _levels(
        self,
        n: int,
        t: ArrayLike,
    ) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
        self._check_level(n)
        times = np.asarray(t, dtype=np.float64)
        if np.any(times < 0.0):
            msg = "iterated boundary is defined for t >= 0"
            raise DomainError(msg)
        raw = np.asarray(self.base.value(times), dtype=np.float64)
        lifted = raw > self._anchors[0]
        values = np.where(lifted, raw, self._anchors[0])
        slopes = np.where(lifted, np.asarray(self.base.derivative(times)), 0.0)
        for level in range(1, n + 1):
            previous: float = self.anchor_value(level - 1)
            excess = np.maximum(values - previous, 0.0)
            if self.variant == "negative_case":
                active = excess ** (2.0 / 3.0) > 1.0
                with np.errstate(divide="ignore"):
                    factor = np.where(active, (2.0 / 3.0) * excess ** (-1.0 / 3.0), 0.0)
            else:
                active = excess**0.75 > self.plateau
                with np.errstate(divide="ignore"):
                    factor = np.where(active, 0.75 * excess**-0.25, 0.0)
            slopes = factor * slopes
            values = previous + self._step(excess)
        return values, slopes

    def value(self, n: int, t: ArrayLike) -> Scalar:
        """Return ``f_n(t)``."""
        values, _ = self._levels(n, t)
        return _shape_like(values, t)

    def derivative(self, n: int, t: ArrayLike) -> Scalar:
        """Return ``f_n'(t)`` by the chain rule through the recursion."""
        _, slopes = self._levels(n, t)
        return _shape_like(slopes, t)

    def switch_point(self, n: int) -> float:
        """
        Locate where ``f_n`` leaves its plateau.

        Args:
            n: Level ``>= 1``.

        Returns:
            The switch time, ``inf`` when ``f_n`` stays flat up to ``2**200``.

        """
        if n < 1:
            msg = "switch point is defined for n >= 1"
            raise DomainError(msg)
        previous: float = self.anchor_value(n - 1)

        def gap(t: float) -> float:
            excess: float = float(self.value(n - 1, t)) - previous
            if self.variant == "negative_case":
                return excess - 1.0
            return max(excess, 0.0) ** 0.75 - self.plateau

        lo: float = self.anchor
        if gap(lo) > 0.0:
            return lo
        hi: float = 2.0 * lo
        while gap(hi) <= 0.0:
            hi *= 2.0
            if hi > 2.0**MAX_LEVEL:
                return math.inf
        return float(optimize.bisect(gap, lo, hi, rtol=SWITCH_RTOL))

    def findu_bound(self, n: int, t: ArrayLike) -> Scalar:
        """Right-hand side ``f(ln T) + n + max{1, f(t)**((2/3)**n)}``."""
        level = np.maximum(np.asarray(self.base.value(t), dtype=np.float64), 0.0)
        bound = self._anchors[0] + n + np.maximum(1.0, level ** ((2.0 / 3.0) ** n))
        return _shape_like(bound, t)

    def abs_bound(self, n: int, t: ArrayLike) -> Scalar:
        """Right-hand side of the positive-case absolute bound (``n >= 1``)."""
        level = np.maximum(np.asarray(self.base.value(t), dtype=np.float64), 0.0)
        bound = (
            self._anchors[0]
            + n * self.kappa_delta * self.anchor
            + (n - 1) * self.plateau
            + np.maximum(self.plateau, level**(0.75**n))
        )
        return _shape_like(bound, t)
