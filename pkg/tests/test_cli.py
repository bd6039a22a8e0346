from __future__ import annotations

import json
from pathlib import Path
from typing import Any

import pytest

from levy_passage import THREADS_ENV_VAR
from levy_passage.errors import (
    EXIT_INVALID_CONFIG,
    EXIT_NO_COMMAND,
    EXIT_OK,
    EXIT_ZERO_SURVIVAL,
)
from levy_passage.main import main

EXPERIMENT: dict[str, Any] = {
    "name": "cli-bm",
    "process": {"sigma2": 1.0},
    "boundary": {"kind": "constant", "value": 1.0},
    "horizons": {"T_min": 1.0, "T_max": 100.0, "points_per_decade": 2.0},
    "n_paths": 200,
    "seed": 5,
    "dt_max": 0.5,
}


@pytest.fixture(autouse=True)
def _isolated(tmp_path: Path, monkeypatch: pytest.MonkeyPatch) -> None:
    monkeypatch.chdir(tmp_path)
    monkeypatch.delenv(THREADS_ENV_VAR, raising=False)


def _write(path: Path, data: dict[str, Any]) -> Path:
    path.write_text(json.dumps(data), encoding="utf-8")
    return path


def _exit_code(monkeypatch: pytest.MonkeyPatch, *argv: str) -> int:
    monkeypatch.setattr("sys.argv", ["levy-passage", *argv])
    with pytest.raises(SystemExit) as caught:
        main()
    return caught.value.code


def test_no_command(monkeypatch: pytest.MonkeyPatch) -> None:
    assert _exit_code(monkeypatch) == EXIT_NO_COMMAND


def test_run_writes_results(tmp_path: Path, monkeypatch: pytest.MonkeyPatch) -> None:
    config = _write(tmp_path / "bm.json", EXPERIMENT)
    out_dir = tmp_path / "out"
    assert _exit_code(monkeypatch, "run", str(config), "-o", str(out_dir)) == EXIT_OK
    assert len(list(out_dir.glob("*_curve.csv"))) == 1
    assert len(list(out_dir.glob("*_manifest.json"))) == 1
    assert (out_dir / "results.db").is_file()
    assert list(tmp_path.glob("levy-passage_*.log"))


@pytest.mark.parametrize(
    "changes",
    [
        {"horizons": {"T_min": 10.0, "T_max": 10.0}},
        {"process": {"sigma2": -1.0, "drift": 1.0}},
        {"method": "importance"},
    ],
)
def test_run_rejects_invalid_configs(
    tmp_path: Path, monkeypatch: pytest.MonkeyPatch, changes: dict[str, Any]
) -> None:
    config = _write(tmp_path / "bad.json", {**EXPERIMENT, **changes})
    assert _exit_code(monkeypatch, "run", str(config)) == EXIT_INVALID_CONFIG


def test_run_missing_file(tmp_path: Path, monkeypatch: pytest.MonkeyPatch) -> None:
    assert _exit_code(monkeypatch, "run", str(tmp_path / "nope.json")) == EXIT_INVALID_CONFIG


def test_run_rejects_bad_thread_counts(tmp_path: Path, monkeypatch: pytest.MonkeyPatch) -> None:
    config = _write(tmp_path / "bm.json", EXPERIMENT)
    assert _exit_code(monkeypatch, "run", str(config), "-t", "0") == EXIT_INVALID_CONFIG
    monkeypatch.setenv(THREADS_ENV_VAR, "many")
    assert _exit_code(monkeypatch, "run", str(config)) == EXIT_INVALID_CONFIG


def test_run_zero_survival(tmp_path: Path, monkeypatch: pytest.MonkeyPatch) -> None:
    poisson = {
        **EXPERIMENT,
        "process": {"drift": 5.0, "atoms": [[1.0, 5.0]]},
        "boundary": {"kind": "constant", "value": 0.5},
    }
    config = _write(tmp_path / "poisson.json", poisson)
    out_dir = tmp_path / "out"
    assert _exit_code(monkeypatch, "run", str(config), "-o", str(out_dir)) == EXIT_ZERO_SURVIVAL
    assert len(list(out_dir.glob("*_curve.csv"))) == 1


def test_suite(tmp_path: Path, monkeypatch: pytest.MonkeyPatch) -> None:
    _write(tmp_path / "bm.json", EXPERIMENT)
    suite = _write(tmp_path / "suite.json", {"experiments": ["bm.json", {**EXPERIMENT, "seed": 6}]})
    out_dir = tmp_path / "out"
    assert _exit_code(monkeypatch, "suite", str(suite), "-o", str(out_dir)) == EXIT_OK
    assert len(list(out_dir.glob("*_fit.json"))) == 2


def test_check_boundary(
    tmp_path: Path, monkeypatch: pytest.MonkeyPatch, capsys: pytest.CaptureFixture[str]
) -> None:
    boundary = _write(tmp_path / "boundary.json", {"kind": "power", "gamma": 0.25})
    assert _exit_code(monkeypatch, "check-boundary", str(boundary)) == EXIT_OK
    printed = json.loads(capsys.readouterr().out)
    assert printed["uchiyama"]["status"] == "finite"
    saved = json.loads((tmp_path / "results" / "boundary_report.json").read_text(encoding="utf-8"))
    assert saved == printed


def test_verify_bounds(
    tmp_path: Path, monkeypatch: pytest.MonkeyPatch, capsys: pytest.CaptureFixture[str]
) -> None:
    constants = _write(
        tmp_path / "constants.json",
        {"boundary": {"kind": "power", "gamma": 0.25}, "samples": 100},
    )
    out_dir = tmp_path / "bounds"
    assert _exit_code(monkeypatch, "verify-bounds", str(constants), "-o", str(out_dir)) == EXIT_OK
    assert "violations=0" in capsys.readouterr().out
    assert (out_dir / "verify_bounds.json").is_file()


def test_verify_bounds_rejects_unknown_constants(tmp_path: Path, monkeypatch: pytest.MonkeyPatch) -> None:
    constants = _write(
        tmp_path / "constants.json",
        {"boundary": {"kind": "power", "gamma": 0.25}, "constants": {"c3": 1.0}},
    )
    assert _exit_code(monkeypatch, "verify-bounds", str(constants)) == EXIT_INVALID_CONFIG


def test_calibrate(tmp_path: Path, monkeypatch: pytest.MonkeyPatch) -> None:
    out_dir = tmp_path / "calibration"
    code = _exit_code(
        monkeypatch,
        "calibrate",
        "--levels",
        "1",
        "--horizons",
        "1",
        "2",
        "--paths",
        "200",
        "-o",
        str(out_dir),
    )
    assert code == EXIT_OK
    assert (out_dir / "calibration.csv").is_file()
