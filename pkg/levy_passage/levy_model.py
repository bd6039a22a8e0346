"""
Levy process laws given by their generating triplet.

A triplet is (sigma2, drift, jumps) under the truncation convention
``1{|x| <= 1}``: the characteristic exponent is

    Psi(u) = i b u - sigma2 u^2 / 2 + int (e^{iux} - 1 - 1{|x|<=1} iux) nu(dx).

Jump measures are restricted to finitely many atoms, at most one stable
component (entering through its closed-form exponent) and an optional
tabulated piecewise-constant density of finite total mass.
"""

from __future__ import annotations

import math
from typing import Any, Self

import numpy as np
from numpy.typing import ArrayLike, NDArray
from pydantic import BaseModel, ConfigDict, Field

from levy_passage.errors import DomainError, InvalidTripletError, MomentError

TRUNCATION: float = 1.0


class StablePart(BaseModel):
    """Stable jump component in the (alpha, scale, skew) parametrisation."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    alpha: float
    scale: float
    skew: float = 0.0

    def problems(self) -> list[str]:
        """
        List parameter violations.

        Returns:
            Human readable violation tags, empty when admissible.

        """
        found: list[str] = []
        if not 0.0 < self.alpha < 2.0:  # noqa: PLR2004
            found.append("stable alpha out of range")
        if not self.scale > 0.0:
            found.append("stable scale nonpositive")
        if not -1.0 <= self.skew <= 1.0:
            found.append("stable skew out of range")
        return found

    def exponent(self, u: NDArray[np.float64]) -> NDArray[np.complex128]:
        """
        Closed-form stable exponent at ``u``.

        Args:
            u: Real frequencies.

        Returns:
            Complex exponent values, zero at ``u = 0``.

        """
        abs_u: NDArray[np.float64] = np.abs(u)
        sign_u: NDArray[np.float64] = np.sign(u)
        if self.alpha == 1.0:
            safe_u = np.where(abs_u > 0.0, abs_u, 1.0)
            log_term = np.where(abs_u > 0.0, np.log(safe_u), 0.0)
            return -self.scale * abs_u * (
                1.0 + 1j * self.skew * (2.0 / math.pi) * sign_u * log_term
            )
        tan_term: float = math.tan(math.pi * self.alpha / 2.0)
        return -(self.scale**self.alpha) * abs_u**self.alpha * (
            1.0 - 1j * self.skew * sign_u * tan_term
        )


class DensityPart(BaseModel):
    """
    Piecewise-constant jump density ``g`` on finite bins.

    ``values[i]`` is the density on ``[edges[i], edges[i + 1])``. Bins may
    touch the origin but never straddle it.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    edges: tuple[float, ...]
    values: tuple[float, ...]

    def problems(self) -> list[str]:
        """
        List tabulation violations.

        Returns:
            Human readable violation tags, empty when admissible.

        """
        found: list[str] = []
        edges = np.asarray(self.edges, dtype=np.float64)
        values = np.asarray(self.values, dtype=np.float64)
        if edges.size < 2 or values.size != edges.size - 1:  # noqa: PLR2004
            found.append("density table malformed")
            return found
        if not np.all(np.isfinite(edges)) or not np.all(np.isfinite(values)):
            found.append("density table not finite")
        if np.any(np.diff(edges) <= 0.0):
            found.append("density edges not increasing")
        if np.any(values < 0.0):
            found.append("density negative")
        if np.any((edges[:-1] < 0.0) & (edges[1:] > 0.0)):
            found.append("density bin straddles origin")
        return found

    def moment(self, power: int, lo: float, hi: float) -> float:
        """
        Integrate ``x**power g(x)`` over ``[lo, hi]``.

        Args:
            power: Non-negative integer power.
            lo: Lower integration limit, may be ``-inf``.
            hi: Upper integration limit, may be ``inf``.

        Returns:
            The integral.

        """
        edges = np.asarray(self.edges, dtype=np.float64)
        values = np.asarray(self.values, dtype=np.float64)
        left = np.clip(edges[:-1], lo, hi)
        right = np.clip(edges[1:], lo, hi)
        k: int = power + 1
        return float(np.sum(values * (right**k - left**k)) / k)

    def abs_moment(self, power: int, lo: float, hi: float) -> float:
        """
        Integrate ``|x|**power g(x)`` over ``lo <= |x| <= hi``.

        Args:
            power: Non-negative integer power.
            lo: Lower bound on ``|x|``.
            hi: Upper bound on ``|x|``.

        Returns:
            The integral.

        """
        positive: float = self.moment(power, lo, hi)
        negative: float = self.moment(power, -hi, -lo)
        return positive + negative * (-1.0) ** power

    def pieces_beyond(
        self,
        eps: float,
    ) -> tuple[NDArray[np.float64], NDArray[np.float64], NDArray[np.float64]]:
        """
        Split the bins at ``+-eps`` and keep the parts with ``|x| >= eps``.

        Args:
            eps: Small-jump cutoff.

        Returns:
            Arrays ``(lo, hi, mass)`` of the retained pieces.

        """
        edges = np.asarray(self.edges, dtype=np.float64)
        values = np.asarray(self.values, dtype=np.float64)
        neg_lo = np.minimum(edges[:-1], -eps)
        neg_hi = np.minimum(edges[1:], -eps)
        pos_lo = np.maximum(edges[:-1], eps)
        pos_hi = np.maximum(edges[1:], eps)
        lo = np.concatenate([neg_lo, pos_lo])
        hi = np.concatenate([neg_hi, pos_hi])
        mass = np.concatenate([values, values]) * (hi - lo)
        keep = mass > 0.0
        return lo[keep], hi[keep], mass[keep]

    def exponent(self, u: NDArray[np.float64]) -> NDArray[np.complex128]:
        """
        Jump-integral contribution of the density at ``u``.

        Args:
            u: Real frequencies.

        Returns:
            Complex values of the truncated jump integral.

        """
        edges = np.asarray(self.edges, dtype=np.float64)
        values = np.asarray(self.values, dtype=np.float64)
        total = np.zeros(u.shape, dtype=np.complex128)
        windows: tuple[tuple[float, float, bool], ...] = (
            (-math.inf, -TRUNCATION, False),
            (-TRUNCATION, TRUNCATION, True),
            (TRUNCATION, math.inf, False),
        )
        nonzero = u != 0.0
        safe_u = np.where(nonzero, u, 1.0)
        for lo, hi, compensated in windows:
            left = np.clip(edges[:-1], lo, hi)
            right = np.clip(edges[1:], lo, hi)
            width = right - left
            for a, b, v, w in zip(left, right, values, width, strict=True):
                if w <= 0.0 or v == 0.0:
                    continue
                oscillating = np.where(
                    nonzero,
                    (np.exp(1j * safe_u * b) - np.exp(1j * safe_u * a)) / (1j * safe_u),
                    w,
                )
                piece = oscillating - w
                if compensated:
                    piece = piece - 1j * u * (b * b - a * a) / 2.0
                total = total + v * piece
        return total


class JumpMeasure(BaseModel):
    """Atoms, an optional stable component and an optional tabulated density."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    atoms: tuple[tuple[float, float], ...] = ()
    stable: StablePart | None = None
    density: DensityPart | None = None

    def is_empty(self) -> bool:
        """Return whether the measure is identically zero."""
        density_mass: float = 0.0
        if self.density is not None:
            density_mass = self.density.moment(0, -math.inf, math.inf)
        return not self.atoms and self.stable is None and density_mass == 0.0

    def mass_negative(self) -> bool:
        """Return whether ``nu((-inf, 0)) > 0``."""
        if any(x < 0.0 and rate > 0.0 for x, rate in self.atoms):
            return True
        if self.stable is not None and self.stable.skew < 1.0:
            return True
        return (
            self.density is not None
            and self.density.moment(0, -math.inf, 0.0) > 0.0
        )

    def mass_positive(self) -> bool:
        """Return whether ``nu((0, inf)) > 0``."""
        if any(x > 0.0 and rate > 0.0 for x, rate in self.atoms):
            return True
        if self.stable is not None and self.stable.skew > -1.0:
            return True
        return (
            self.density is not None
            and self.density.moment(0, 0.0, math.inf) > 0.0
        )

    def first_moment_finite(self) -> bool:
        """Return whether ``int_{|x|>1} |x| nu(dx)`` is finite."""
        return self.stable is None or self.stable.alpha > 1.0

    def large_jump_mean(self) -> float:
        """
        Mean contribution of the jumps outside the truncation window.

        The stable component enters through its closed-form exponent, which
        for ``alpha > 1`` is already centred and contributes nothing here.

        Returns:
            ``int_{|x|>1} x nu(dx)``.

        Raises:
            MomentError: If the first moment is infinite.

        """
        if not self.first_moment_finite():
            msg = "first moment absent"
            raise MomentError(msg)
        total: float = math.fsum(
            x * rate for x, rate in self.atoms if abs(x) > TRUNCATION
        )
        if self.density is not None:
            total += self.density.moment(1, -math.inf, -TRUNCATION)
            total += self.density.moment(1, TRUNCATION, math.inf)
        return total

    def small_jump_mean(self) -> float:
        """
        Return ``int_{|x|<=1} x nu(dx)`` of the finite-activity components.

        Raises:
            DomainError: If a stable component is present.

        """
        if self.stable is not None:
            msg = "small-jump mean undefined for a stable component"
            raise DomainError(msg)
        total: float = math.fsum(
            x * rate for x, rate in self.atoms if abs(x) <= TRUNCATION
        )
        if self.density is not None:
            total += self.density.moment(1, -TRUNCATION, TRUNCATION)
        return total

    def exponent(self, u: NDArray[np.float64]) -> NDArray[np.complex128]:
        """
        Truncated jump integral of the exponent at ``u``.

        Args:
            u: Real frequencies.

        Returns:
            Complex values.

        """
        total = np.zeros(u.shape, dtype=np.complex128)
        for x, rate in self.atoms:
            compensator = 1j * u * x if abs(x) <= TRUNCATION else 0.0
            total = total + rate * (np.exp(1j * u * x) - 1.0 - compensator)
        if self.stable is not None:
            total = total + self.stable.exponent(u)
        if self.density is not None:
            total = total + self.density.exponent(u)
        return total


class LevyTriplet(BaseModel):
    """Generating triplet of a one-dimensional Levy process."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    sigma2: float = 0.0
    drift: float = 0.0
    jumps: JumpMeasure = Field(default_factory=JumpMeasure)
    degenerate_ok: bool = False

    @classmethod
    def zero(cls) -> Self:
        """Return the explicitly constructed zero process."""
        return cls(degenerate_ok=True)

    @classmethod
    def brownian(cls, sigma2: float = 1.0, drift: float = 0.0) -> Self:
        """Return Brownian motion with the given variance and drift."""
        return cls(sigma2=sigma2, drift=drift)

    def __add__(self, other: LevyTriplet) -> LevyTriplet:
        """
        Componentwise sum, the law of the sum of independent processes.

        Raises:
            DomainError: If both summands carry a stable or density component.

        """
        if self.jumps.stable is not None and other.jumps.stable is not None:
            msg = "cannot add two stable components"
            raise DomainError(msg)
        if self.jumps.density is not None and other.jumps.density is not None:
            msg = "cannot add two density components"
            raise DomainError(msg)
        jumps = JumpMeasure(
            atoms=self.jumps.atoms + other.jumps.atoms,
            stable=self.jumps.stable or other.jumps.stable,
            density=self.jumps.density or other.jumps.density,
        )
        return LevyTriplet(
            sigma2=self.sigma2 + other.sigma2,
            drift=self.drift + other.drift,
            jumps=jumps,
            degenerate_ok=self.degenerate_ok and other.degenerate_ok,
        )

    def mean(self) -> float:
        """Return ``E X(1)``."""
        return self.drift + self.jumps.large_jump_mean()

    @property
    def drift_without_truncation(self) -> float:
        """Drift under the uncompensated convention, ``b - int_{|x|<=1} x nu``."""
        return self.drift - self.jumps.small_jump_mean()

    @classmethod
    def from_json_dict(cls, data: dict[str, Any]) -> LevyTriplet:
        """Build a triplet from its JSON object form."""
        return TripletSpec.model_validate(data).to_triplet()

    def to_json_dict(self) -> dict[str, Any]:
        """Return the JSON object form."""
        return TripletSpec.from_triplet(self).model_dump(mode="json")


class TripletSpec(BaseModel):
    """JSON form of a triplet as read from experiment configurations."""

    model_config = ConfigDict(extra="forbid")

    sigma2: float = 0.0
    drift: float = 0.0
    atoms: list[tuple[float, float]] = Field(default_factory=list)
    stable: StablePart | None = None
    density: DensityPart | None = None
    zero: bool = False

    def to_triplet(self) -> LevyTriplet:
        """Return the immutable triplet."""
        return LevyTriplet(
            sigma2=self.sigma2,
            drift=self.drift,
            jumps=JumpMeasure(
                atoms=tuple(self.atoms),
                stable=self.stable,
                density=self.density,
            ),
            degenerate_ok=self.zero,
        )

    @classmethod
    def from_triplet(cls, triplet: LevyTriplet) -> TripletSpec:
        """Return the JSON form of ``triplet``."""
        return cls(
            sigma2=triplet.sigma2,
            drift=triplet.drift,
            atoms=list(triplet.jumps.atoms),
            stable=triplet.jumps.stable,
            density=triplet.jumps.density,
            zero=triplet.degenerate_ok,
        )


class ValidationReport(BaseModel):
    """Violated admissibility conditions of a triplet."""

    model_config = ConfigDict(frozen=True)

    violations: tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        """Whether the triplet is admissible."""
        return not self.violations


def validate_triplet(triplet: LevyTriplet) -> ValidationReport:
    """
    Report every violated admissibility condition of ``triplet``.

    Validation never raises; an empty report means the triplet is admissible.

    Args:
        triplet: Triplet to inspect.

    Returns:
        The report.

    """
    found: list[str] = []
    if not (math.isfinite(triplet.sigma2) and math.isfinite(triplet.drift)):
        found.append("non-finite coefficient")
    if triplet.sigma2 < 0.0:
        found.append("sigma2 negative")
    for x, rate in triplet.jumps.atoms:
        if not (math.isfinite(x) and math.isfinite(rate)):
            found.append("atom not finite")
        if x == 0.0:
            found.append("atom at origin")
        if rate <= 0.0:
            found.append("atom rate nonpositive")
    if triplet.jumps.stable is not None:
        found.extend(triplet.jumps.stable.problems())
    if triplet.jumps.density is not None:
        found.extend(triplet.jumps.density.problems())
    degenerate: bool = (
        triplet.sigma2 == 0.0 and triplet.drift == 0.0 and triplet.jumps.is_empty()
    )
    if degenerate and not triplet.degenerate_ok:
        found.append("degenerate process")
    return ValidationReport(violations=tuple(dict.fromkeys(found)))


def require_valid(triplet: LevyTriplet) -> None:
    """
    Raise unless ``triplet`` validates cleanly.

    Raises:
        InvalidTripletError: With the joined violation list.

    """
    report: ValidationReport = validate_triplet(triplet)
    if not report.ok:
        msg = "invalid triplet: " + ", ".join(report.violations)
        raise InvalidTripletError(msg)


def char_exponent(
    triplet: LevyTriplet,
    u: ArrayLike,
) -> complex | NDArray[np.complex128]:
    """
    Evaluate the characteristic exponent ``Psi(u)``.

    Args:
        triplet: A triplet that passes :func:`validate_triplet`.
        u: Real frequency or array of frequencies.

    Returns:
        ``Psi(u)`` with the same shape as ``u``.

    """
    require_valid(triplet)
    freq: NDArray[np.float64] = np.asarray(u, dtype=np.float64)
    value = (
        1j * triplet.drift * freq
        - 0.5 * triplet.sigma2 * freq * freq
        + triplet.jumps.exponent(freq)
    )
    if value.ndim == 0:
        return complex(value)
    return value


def martingale_normalize(triplet: LevyTriplet) -> LevyTriplet:
    """
    Adjust the drift so that ``E X(1) = 0``.

    Args:
        triplet: Triplet whose large jumps have a finite first moment.

    Returns:
        Copy of ``triplet`` with drift ``-int_{|x|>1} x nu(dx)``.

    """
    return triplet.model_copy(update={"drift": -triplet.jumps.large_jump_mean()})
