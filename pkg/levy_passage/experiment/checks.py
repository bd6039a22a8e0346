"""Non-simulation subcommands: boundary classification, bound certificates, calibration."""

from __future__ import annotations

import logging
import math
from pathlib import Path

import numpy as np
from pydantic import BaseModel, ConfigDict

from levy_passage.bound_machinery import (
    InequalityReport,
    ProofConstants,
    iterated_log_star,
    verify_inequalities,
)
from levy_passage.boundary import (
    GrowthReport,
    IntegralTest,
    check_derivative,
    growth_props,
    iteration_count,
    l2_derivative_test,
    uchiyama_test,
)
from levy_passage.errors import DomainError
from levy_passage.experiment import BoundaryCheckConfig, VerifyBoundsConfig
from levy_passage.oracles import LemmaConfig, LemmaReport, calibration_grid, lemma_checks
from levy_passage.utils import PassageUtils

LOGGER: logging.Logger = logging.getLogger(__name__)

CALIBRATION_FILE: str = "calibration.csv"
LEMMA_FILE: str = "lemma_report.json"
BOUNDS_FILE: str = "verify_bounds.json"


class BoundaryReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    boundary: dict
    uchiyama: IntegralTest
    l2_derivative: IntegralTest
    growth: GrowthReport | None
    derivative_error: float
    iteration_counts: dict[str, int]
    log_star: int


def check_boundary(config: BoundaryCheckConfig) -> BoundaryReport:
    """Classify a boundary and report ``n(T)`` and ``ln*(T)`` at the configured horizon."""
    boundary = config.boundary.to_boundary()
    growth: GrowthReport | None = None
    if config.horizon > math.e:
        growth = growth_props(boundary, config.horizon)
    counts: dict[str, int] = {}
    try:
        counts = {
            variant: iteration_count(variant, config.kappa, config.horizon)
            for variant in ("negative_case", "positive_case")
        }
    except DomainError as error:
        LOGGER.warning("No iteration count: %s", error)
    return BoundaryReport(
        boundary=boundary.to_json_dict(),
        uchiyama=uchiyama_test(boundary),
        l2_derivative=l2_derivative_test(boundary),
        growth=growth,
        derivative_error=check_derivative(
            boundary,
            np.random.default_rng(config.seed),
            config.derivative_samples,
        ),
        iteration_counts=counts,
        log_star=iterated_log_star(config.horizon),
    )


def verify_bounds(config: VerifyBoundsConfig, out_dir: Path) -> InequalityReport:
    """
    Run :func:`verify_inequalities` and write its JSON report.

    Raises:
        DomainError: If ``||f'||^2`` is neither given nor finite and positive.

    """
    boundary = config.boundary.to_boundary()
    values = config.constants.model_dump(exclude={"l2_norm_sq"})
    pc = (
        ProofConstants(l2_norm_sq=config.constants.l2_norm_sq, **values)
        if config.constants.l2_norm_sq is not None
        else ProofConstants.from_boundary(boundary, **values)
    )
    report = verify_inequalities(
        pc,
        boundary,
        config.horizon,
        config.samples,
        max_level=config.max_level,
        seed=config.seed,
    )
    out_dir.mkdir(parents=True, exist_ok=True)
    PassageUtils.save_json(report.model_dump(mode="json"), out_dir / BOUNDS_FILE)
    return report


def calibrate(  # noqa: PLR0913
    out_dir: Path,
    levels: list[float],
    horizons: list[float],
    n_paths: int,
    seed: int,
    threads: int = 1,
) -> Path:
    """Write the Brownian calibration table as CSV."""
    out_dir.mkdir(parents=True, exist_ok=True)
    table = calibration_grid(levels, horizons, n_paths, seed, threads=threads)
    path: Path = out_dir / CALIBRATION_FILE
    table.to_csv(path, index=False)
    failures: int = int((~table["within_3se"]).sum())
    if failures:
        LOGGER.warning("%d calibration points outside 3 standard errors", failures)
    return path


def check_lemmas(
    out_dir: Path,
    config: LemmaConfig,
    threads: int = 1,
) -> LemmaReport:
    """Run the lemma battery and write its JSON report."""
    out_dir.mkdir(parents=True, exist_ok=True)
    report = lemma_checks(config, threads)
    PassageUtils.save_json(report.model_dump(mode="json"), out_dir / LEMMA_FILE)
    return report
