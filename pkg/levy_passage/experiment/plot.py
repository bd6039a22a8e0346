"""Plot data for survival curves: a CSV of logarithms and a gnuplot script."""

from __future__ import annotations

import logging
from pathlib import Path
from string import Template

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict

from levy_passage.errors import ConfigError
from levy_passage.experiment import (
    CURVE_SUFFIX,
    FIT_SUFFIX,
    PLOT_DATA_SUFFIX,
    PLOT_SCRIPT_SUFFIX,
    RunResult,
)
from levy_passage.passage_mc import ExponentFit, SurvivalCurve, curve_from_csv
from levy_passage.utils import PassageUtils

LOGGER: logging.Logger = logging.getLogger(__name__)

PLOT_COLUMNS: tuple[str, ...] = (
    "lnT",
    "lnp",
    "lncilow",
    "lncihigh",
    "T",
    "p",
    "ci_low",
    "ci_high",
    "n",
)

GNUPLOT_TEMPLATE: Template = Template(
    """# Survival curve of run $config_hash
# censored rows (zero estimates): $censored
set datafile separator ","
set xlabel "ln T"
set ylabel "ln p"
set key bottom left
$fit_lines
plot "$data" skip 1 using 1:3:4 with filledcurves fs transparent solid 0.3 title "95% CI", \\
     "$data" skip 1 using 1:2 with linespoints pt 7 title "estimate"$fit_plot
"""
)


class PlotFiles(BaseModel):
    """Files written by :func:`emit_plot_data`."""

    model_config = ConfigDict(frozen=True)

    data: Path
    script: Path
    censored: int


def emit_plot_data(run: RunResult) -> PlotFiles:
    """
    Write ``ln T`` against ``ln p`` with interval bands, plus a gnuplot script.

    Rows with ``p = 0`` are dropped and counted as censored. The raw columns
    ``T, p, ci_low, ci_high, n`` are kept so the curve can be read back
    exactly; nothing is rendered.

    Args:
        run: A finished run.

    Returns:
        Paths of both files and the censored count.

    Raises:
        ConfigError: If the run's output directory does not exist.

    """
    if not run.output_dir.is_dir():
        msg = f"no run output directory at `{run.output_dir}`"
        raise ConfigError(msg)
    curve = run.curve
    frame = pd.DataFrame(
        {
            "T": curve.horizons,
            "p": curve.estimates,
            "ci_low": curve.ci_low,
            "ci_high": curve.ci_high,
            "n": curve.n_paths,
        }
    )
    kept = frame[frame["p"] > 0.0].copy()
    censored: int = len(frame) - len(kept)
    with np.errstate(divide="ignore"):
        kept["lnT"] = np.log(kept["T"])
        kept["lnp"] = np.log(kept["p"])
        kept["lncilow"] = np.log(kept["ci_low"]).replace(-np.inf, np.nan)
        kept["lncihigh"] = np.log(kept["ci_high"])
    data_path: Path = run.path(PLOT_DATA_SUFFIX)
    kept.loc[:, list(PLOT_COLUMNS)].to_csv(data_path, index=False)

    fit_lines, fit_plot = "", ""
    if run.fit is not None:
        intercept: float = _intercept(kept, run.fit)
        fit_lines = f"fit_line(x) = {intercept!r} - {run.fit.delta_hat!r} * x"
        fit_plot = (
            ", \\\n     fit_line(x) title "
            f'"delta = {run.fit.delta_hat:.4f} +/- {run.fit.stderr:.4f}"'
        )
    script_path: Path = run.path(PLOT_SCRIPT_SUFFIX)
    script_path.write_text(
        GNUPLOT_TEMPLATE.substitute(
            config_hash=run.config_hash,
            censored=censored,
            data=data_path.name,
            fit_lines=fit_lines,
            fit_plot=fit_plot,
        ),
        encoding="utf-8",
    )
    if censored:
        LOGGER.warning("%d zero estimates left out of the plot data", censored)
    return PlotFiles(data=data_path, script=script_path, censored=censored)


def _intercept(kept: pd.DataFrame, fit: ExponentFit) -> float:
    window = kept[(kept["T"] >= fit.window[0]) & (kept["T"] <= fit.window[1])]
    if window.empty:
        return 0.0
    return float((window["lnp"] + fit.delta_hat * window["lnT"]).mean())


def read_plot_data(path: Path) -> SurvivalCurve:
    """Rebuild the uncensored part of a curve from its plot CSV."""
    frame = pd.read_csv(path, float_precision="round_trip")
    return SurvivalCurve(
        horizons=tuple(frame["T"].astype(float)),
        estimates=tuple(frame["p"].astype(float)),
        ci_low=tuple(frame["ci_low"].astype(float)),
        ci_high=tuple(frame["ci_high"].astype(float)),
        n_paths=int(frame["n"].min()),
    )


def load_run(output_dir: Path, config_hash: str) -> RunResult:
    """
    Read back a run from its curve CSV and fit JSON.

    Raises:
        ConfigError: If the run's curve file is missing.

    """
    curve_path: Path = output_dir / f"{config_hash}{CURVE_SUFFIX}"
    if not curve_path.is_file():
        msg = f"no run `{config_hash}` in `{output_dir}`"
        raise ConfigError(msg)
    fit_path: Path = output_dir / f"{config_hash}{FIT_SUFFIX}"
    fit = (
        ExponentFit.model_validate(PassageUtils.load_json(fit_path))
        if fit_path.is_file()
        else None
    )
    return RunResult(
        config_hash=config_hash,
        output_dir=output_dir,
        curve=curve_from_csv(curve_path),
        fit=fit,
    )
