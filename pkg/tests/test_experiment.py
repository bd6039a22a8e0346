from __future__ import annotations

import json
from pathlib import Path
from typing import Any

import pandas as pd
import pytest
from sqlalchemy import create_engine

from levy_passage.errors import ConfigError, ZeroSurvivalError
from levy_passage.experiment import (
    CURVE_SUFFIX,
    FIT_SUFFIX,
    MANIFEST_SUFFIX,
    PLOT_DATA_SUFFIX,
    PLOT_SCRIPT_SUFFIX,
    WEIGHTS_SUFFIX,
    BoundaryCheckConfig,
    ExperimentConfig,
    RunResult,
    SuiteConfig,
    VerifyBoundsConfig,
)
from levy_passage.experiment.checks import (
    BOUNDS_FILE,
    CALIBRATION_FILE,
    LEMMA_FILE,
    calibrate,
    check_boundary,
    check_lemmas,
    verify_bounds,
)
from levy_passage.experiment.estimate import split_boundary
from levy_passage.experiment.plot import emit_plot_data, load_run, read_plot_data
from levy_passage.experiment.runner import ExperimentRunner
from levy_passage.levy_model import validate_triplet
from levy_passage.logger import PassageLogger
from levy_passage.oracles import LemmaConfig
from levy_passage.passage_mc import SurvivalCurve

BROWNIAN_RUN: dict[str, Any] = {
    "name": "bm-unit-level",
    "process": {"sigma2": 1.0},
    "boundary": {"kind": "constant", "value": 1.0},
    "horizons": {"T_min": 1.0, "T_max": 100.0, "points_per_decade": 2.0},
    "n_paths": 200,
    "seed": 1,
    "dt_max": 0.5,
}

POISSON_RUN: dict[str, Any] = {
    "name": "poisson-below-half",
    "process": {"drift": 5.0, "atoms": [[1.0, 5.0]]},
    "boundary": {"kind": "constant", "value": 0.5},
    "horizons": {"T_min": 1.0, "T_max": 100.0, "points_per_decade": 2.0},
    "n_paths": 200,
    "seed": 2,
    "dt_max": 0.5,
}

TILTED_RUN: dict[str, Any] = {
    "name": "tilted-quarter-power",
    "process": {"sigma2": 1.0, "atoms": [[-0.5, 1.0]]},
    "boundary": {"kind": "power", "gamma": 0.25, "sign": "minus", "offset": 1.0},
    "horizons": {"T_min": 1.0, "T_max": 100.0, "points_per_decade": 2.0},
    "n_paths": 200,
    "seed": 3,
    "dt_max": 0.5,
    "method": "importance",
    "tilt": {"dump_weights": True},
}


def _config(data: dict[str, Any], out_dir: Path, **changes: Any) -> ExperimentConfig:  # noqa: ANN401
    return ExperimentConfig.model_validate({**data, "output_dir": str(out_dir), **changes})


def _runner() -> ExperimentRunner:
    return ExperimentRunner(PassageLogger(name="levy_passage.tests"))


def _catalog(out_dir: Path, table: str) -> pd.DataFrame:
    engine = create_engine(f"sqlite:///{(out_dir / 'results.db').absolute()}")
    return pd.read_sql_table(table, engine)


def test_hash_ignores_name_and_output_dir(tmp_path: Path) -> None:
    first = _config(BROWNIAN_RUN, tmp_path / "a")
    second = _config(BROWNIAN_RUN, tmp_path / "b", name="renamed")
    assert first.config_hash == second.config_hash
    assert len(first.config_hash) == 16
    assert first.config_hash != _config(BROWNIAN_RUN, tmp_path, seed=2).config_hash


def test_hash_ignores_tilt_of_crude_runs(tmp_path: Path) -> None:
    crude = _config(BROWNIAN_RUN, tmp_path)
    tilted = _config(BROWNIAN_RUN, tmp_path, tilt={"active_from": 0.5})
    assert crude.config_hash == tilted.config_hash

    weighted = _config(TILTED_RUN, tmp_path)
    moved = _config(TILTED_RUN, tmp_path, tilt={"active_from": 0.5})
    assert weighted.config_hash != moved.config_hash


@pytest.mark.parametrize(
    "changes",
    [
        {"horizons": {"T_min": 10.0, "T_max": 10.0}},
        {"horizons": {"T_min": 0.5, "T_max": 100.0}},
        {"n_paths": 50},
        {"method": "quasi"},
        {"boundary": {"kind": "logarithmic"}},
        {"unknown": 1},
    ],
)
def test_invalid_config_files(tmp_path: Path, changes: dict[str, Any]) -> None:
    path = tmp_path / "experiment.json"
    path.write_text(json.dumps({**BROWNIAN_RUN, **changes}), encoding="utf-8")
    with pytest.raises(ConfigError):
        ExperimentConfig.from_file(path)


def test_unreadable_config_file(tmp_path: Path) -> None:
    path = tmp_path / "broken.json"
    path.write_text("{", encoding="utf-8")
    with pytest.raises(ConfigError):
        ExperimentConfig.from_file(path)
    with pytest.raises(ConfigError):
        ExperimentConfig.from_file(tmp_path / "missing.json")


def test_split_boundary(tmp_path: Path) -> None:
    effective, moving, side = split_boundary(_config(TILTED_RUN, tmp_path))
    assert side == "negative"
    assert effective.value(16.0) == 1.0
    assert moving.value(16.0) == pytest.approx(2.0)

    effective, moving, side = split_boundary(_config(BROWNIAN_RUN, tmp_path))
    assert (effective.value(3.0), moving.value(3.0), side) == (1.0, 0.0, "negative")


def test_crude_run_writes_every_output(tmp_path: Path) -> None:
    config = _config(BROWNIAN_RUN, tmp_path)
    run = _runner().run(config)

    for suffix in (CURVE_SUFFIX, FIT_SUFFIX, MANIFEST_SUFFIX, PLOT_DATA_SUFFIX, PLOT_SCRIPT_SUFFIX):
        assert run.path(suffix).is_file()
    assert len(run.curve.horizons) == 5
    assert run.fit is not None
    assert run.effective_sample_sizes is None

    manifest = json.loads(run.path(MANIFEST_SUFFIX).read_text(encoding="utf-8"))
    assert manifest["config_hash"] == config.config_hash
    assert manifest["seed"] == 1
    assert manifest["method"] == "crude"
    assert manifest["censored"] == 0
    assert "output_dir" not in manifest["config"]
    assert manifest["files"]["fit"] == run.path(FIT_SUFFIX).name

    runs = _catalog(tmp_path, "_runs")
    assert runs["config_hash"].tolist() == [config.config_hash]
    assert runs["delta_hat"].iloc[0] == pytest.approx(run.fit.delta_hat)
    points = _catalog(tmp_path, "_survival_points")
    assert points["p"].tolist() == pytest.approx(list(run.curve.estimates))


def test_rerun_is_identical_and_replaces_catalog_rows(tmp_path: Path) -> None:
    config = _config(BROWNIAN_RUN, tmp_path)
    first = _runner().run(config)
    again = _runner().run(config.model_copy(update={"name": "again"}))
    assert first.curve == again.curve
    assert first.fit == again.fit
    assert len(_catalog(tmp_path, "_runs")) == 1
    assert len(_catalog(tmp_path, "_survival_points")) == len(first.curve.horizons)


def test_threads_leave_results_unchanged(tmp_path: Path) -> None:
    config = _config(BROWNIAN_RUN, tmp_path, n_paths=1200)
    inline = ExperimentRunner(PassageLogger(name="levy_passage.tests"), threads=1).run(config)
    pooled = ExperimentRunner(PassageLogger(name="levy_passage.tests"), threads=2).run(config)
    assert inline.curve == pooled.curve


def test_out_dir_override(tmp_path: Path) -> None:
    config = _config(BROWNIAN_RUN, tmp_path / "ignored")
    run = ExperimentRunner(
        PassageLogger(name="levy_passage.tests"),
        out_dir=tmp_path / "chosen",
        use_catalog=False,
    ).run(config)
    assert run.output_dir == tmp_path / "chosen"
    assert run.path(CURVE_SUFFIX).is_file()
    assert not (tmp_path / "chosen" / "results.db").exists()
    assert not (tmp_path / "ignored").exists()


def test_zero_survival_still_writes_outputs(tmp_path: Path) -> None:
    config = _config(POISSON_RUN, tmp_path)
    with pytest.raises(ZeroSurvivalError, match="importance"):
        _runner().run(config)

    prefix = tmp_path / config.config_hash
    assert Path(f"{prefix}{CURVE_SUFFIX}").is_file()
    assert Path(f"{prefix}{PLOT_DATA_SUFFIX}").is_file()
    assert not Path(f"{prefix}{FIT_SUFFIX}").exists()
    manifest = json.loads(Path(f"{prefix}{MANIFEST_SUFFIX}").read_text(encoding="utf-8"))
    assert manifest["censored"] > 0
    assert "fit" not in manifest["files"]
    runs = _catalog(tmp_path, "_runs")
    assert runs["delta_hat"].isna().all()


def test_importance_run(tmp_path: Path) -> None:
    config = _config(TILTED_RUN, tmp_path)
    run = _runner().run(config)
    assert run.effective_sample_sizes is not None
    assert len(run.effective_sample_sizes) == len(run.curve.horizons)
    assert all(ess > 0.0 for ess in run.effective_sample_sizes)
    dumps = sorted(tmp_path.glob(f"{config.config_hash}_T*{WEIGHTS_SUFFIX}"))
    assert len(dumps) == len(run.curve.horizons)
    frame = pd.read_json(dumps[0], lines=True)
    assert len(frame) == config.n_paths


def test_importance_needs_matching_jumps(tmp_path: Path) -> None:
    config = _config(TILTED_RUN, tmp_path, process={"sigma2": 1.0})
    with pytest.raises(ConfigError, match="no jumps of required sign"):
        _runner().run(config)


def test_invalid_process_is_a_config_error(tmp_path: Path) -> None:
    config = _config(BROWNIAN_RUN, tmp_path, process={"sigma2": -1.0, "drift": 1.0})
    with pytest.raises(ConfigError):
        _runner().run(config)


def test_shipped_suite_is_valid() -> None:
    experiments_dir = Path(__file__).parents[1] / "experiments"
    configs = SuiteConfig.from_file(experiments_dir / "suite.json").resolve(experiments_dir)
    assert len(configs) == 7
    assert all(validate_triplet(c.process.to_triplet()).ok for c in configs)
    assert {(c.horizons.t_min, c.horizons.t_max) for c in configs} == {(16.0, 4096.0)}
    assert all(c.n_paths == 100_000 for c in configs)
    assert len({c.config_hash for c in configs}) == len(configs)


def test_suite_resolves_relative_paths(tmp_path: Path) -> None:
    (tmp_path / "bm.json").write_text(json.dumps(BROWNIAN_RUN), encoding="utf-8")
    suite_path = tmp_path / "suite.json"
    suite_path.write_text(
        json.dumps({"experiments": ["bm.json", {**BROWNIAN_RUN, "seed": 4}]}),
        encoding="utf-8",
    )
    suite = SuiteConfig.from_file(suite_path)
    configs = suite.resolve(tmp_path)
    assert [c.seed for c in configs] == [1, 4]

    out_dir = tmp_path / "out"
    results = ExperimentRunner(
        PassageLogger(name="levy_passage.tests"), out_dir=out_dir
    ).run_suite(suite, tmp_path)
    assert len(results) == 2
    assert len(_catalog(out_dir, "_runs")) == 2


def test_plot_data_censors_zero_estimates(tmp_path: Path) -> None:
    curve = SurvivalCurve(
        horizons=(1.0, 10.0, 100.0),
        estimates=(0.5, 0.1, 0.0),
        ci_low=(0.4, 0.05, 0.0),
        ci_high=(0.6, 0.15, 0.02),
        n_paths=100,
    )
    run = RunResult(config_hash="0123456789abcdef", output_dir=tmp_path, curve=curve, fit=None)
    plot = emit_plot_data(run)
    assert plot.censored == 1
    frame = pd.read_csv(plot.data)
    assert list(frame.columns) == ["lnT", "lnp", "lncilow", "lncihigh", "T", "p", "ci_low", "ci_high", "n"]
    assert len(frame) == 2
    assert "zero estimates): 1" in plot.script.read_text(encoding="utf-8")

    restored = read_plot_data(plot.data)
    assert restored.horizons == (1.0, 10.0)
    assert restored.estimates == (0.5, 0.1)


def test_plot_needs_output_dir(tmp_path: Path) -> None:
    curve = SurvivalCurve(horizons=(1.0,), estimates=(0.5,), ci_low=(0.4,), ci_high=(0.6,), n_paths=100)
    run = RunResult(config_hash="x", output_dir=tmp_path / "missing", curve=curve, fit=None)
    with pytest.raises(ConfigError):
        emit_plot_data(run)


def test_load_run_reads_back_outputs(tmp_path: Path) -> None:
    run = _runner().run(_config(BROWNIAN_RUN, tmp_path))
    loaded = load_run(tmp_path, run.config_hash)
    assert loaded.curve == run.curve
    assert loaded.fit == run.fit
    with pytest.raises(ConfigError):
        load_run(tmp_path, "ffffffffffffffff")


def test_check_boundary_accepts_bare_boundary(tmp_path: Path) -> None:
    path = tmp_path / "boundary.json"
    path.write_text(json.dumps({"kind": "power", "gamma": 0.25}), encoding="utf-8")
    report = check_boundary(BoundaryCheckConfig.from_file(path))
    assert report.uchiyama.status == "finite"
    assert report.l2_derivative.value == pytest.approx(0.125)
    assert report.iteration_counts == {"negative_case": 8, "positive_case": 11}
    assert report.log_star == 3
    assert report.derivative_error <= 1e-4


def test_check_boundary_short_horizon() -> None:
    config = BoundaryCheckConfig.model_validate(
        {"boundary": {"kind": "constant", "value": 1.0}, "horizon": 2.0}
    )
    report = check_boundary(config)
    assert report.growth is None
    assert report.iteration_counts == {"negative_case": 0, "positive_case": 0}


def test_verify_bounds_writes_report(tmp_path: Path) -> None:
    config = VerifyBoundsConfig.model_validate(
        {"boundary": {"kind": "power", "gamma": 0.25}, "samples": 100}
    )
    report = verify_bounds(config, tmp_path)
    assert report.ok
    saved = json.loads((tmp_path / BOUNDS_FILE).read_text(encoding="utf-8"))
    assert saved["checked"] == 200
    assert saved["violations"] == []


def test_verify_bounds_needs_finite_norm(tmp_path: Path) -> None:
    config = VerifyBoundsConfig.model_validate(
        {"boundary": {"kind": "power", "gamma": 0.75}, "samples": 10}
    )
    with pytest.raises(ValueError, match="finite positive"):
        verify_bounds(config, tmp_path)


def test_calibrate_writes_table(tmp_path: Path) -> None:
    path = calibrate(tmp_path, [1.0], [1.0, 2.0], 200, seed=0)
    assert path == tmp_path / CALIBRATION_FILE
    assert len(pd.read_csv(path)) == 2


def test_check_lemmas_writes_report(tmp_path: Path) -> None:
    config = LemmaConfig(
        n_paths=200,
        dt_max=0.05,
        association_trials=1,
        helpln_horizons=(16.0,),
        bbgr_horizon=2.0**6,
        bbgr_paths=200,
        coup_horizons=(16.0, 32.0),
    )
    report = check_lemmas(tmp_path, config)
    saved = json.loads((tmp_path / LEMMA_FILE).read_text(encoding="utf-8"))
    assert set(saved) == {"association", "helpln", "bbgr", "coup"}
    assert len(report.helpln) == 1
