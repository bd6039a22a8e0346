"""Configuration records and constants of the experiment pipeline."""

from __future__ import annotations

from importlib import metadata
from pathlib import Path
from typing import Any, Literal

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from levy_passage import APPLICATION_NAME
from levy_passage.boundary import BoundarySpec
from levy_passage.errors import ConfigError
from levy_passage.levy_model import TripletSpec
from levy_passage.passage_mc import ExponentFit, SurvivalCurve
from levy_passage.simulate import SimConfig
from levy_passage.utils import PassageUtils

CURVE_SUFFIX: str = "_curve.csv"
FIT_SUFFIX: str = "_fit.json"
MANIFEST_SUFFIX: str = "_manifest.json"
PLOT_DATA_SUFFIX: str = "_plot.csv"
PLOT_SCRIPT_SUFFIX: str = "_plot.gp"
WEIGHTS_SUFFIX: str = "_weights.jsonl"
CATALOG_NAME: str = "results.db"

MIN_DECADES_RATIO: float = 100.0

try:
    CODE_VERSION: str = metadata.version(APPLICATION_NAME)
except metadata.PackageNotFoundError:
    CODE_VERSION = "0+unknown"


def _validate_file(model: type[BaseModel], path: Path) -> Any:  # noqa: ANN401
    try:
        return model.model_validate(PassageUtils.load_json(path))
    except ValidationError as error:
        msg = f"Invalid configuration in `{path}`:\n{error}"
        raise ConfigError(msg) from error


class HorizonSpec(BaseModel):
    """Geometric horizon grid of an experiment."""

    model_config = ConfigDict(frozen=True, extra="forbid", populate_by_name=True)

    t_min: float = Field(alias="T_min", ge=1.0)
    t_max: float = Field(alias="T_max")
    points_per_decade: float = Field(default=4.0, gt=0.0)

    @model_validator(mode="after")
    def _check_span(self) -> HorizonSpec:
        if self.t_max < MIN_DECADES_RATIO * self.t_min:
            msg = (
                "horizons must span at least two decades, got "
                f"[{self.t_min!r}, {self.t_max!r}]"
            )
            raise ValueError(msg)
        return self


class TiltConfig(BaseModel):
    """Importance-sampling settings; the side defaults to the boundary's sign."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    side: Literal["negative", "positive"] | None = None
    active_from: float = Field(default=0.1, ge=0.0)
    support: tuple[float, float] | None = None
    mass_fraction: float = Field(default=0.9, gt=0.0, le=1.0)
    dump_weights: bool = False


class ExperimentConfig(BaseModel):
    """One experiment: process, boundary, horizons and Monte Carlo budget."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    name: str = ""
    process: TripletSpec
    boundary: BoundarySpec
    horizons: HorizonSpec
    n_paths: int = Field(ge=100)
    seed: int = Field(ge=0)
    dt_max: float = Field(default=0.01, gt=0.0)
    dt_scaling: Literal["fixed", "sqrt"] = "fixed"
    small_jump_cutoff: float = Field(default=1e-3, gt=0.0, le=1.0)
    bridge_correction: bool = True
    bridge_sampling: bool = False
    method: Literal["crude", "importance"] = "crude"
    tilt: TiltConfig = Field(default_factory=TiltConfig)
    fit_skip_decades: float = Field(default=1.0, ge=0.0)
    output_dir: Path = Path("results")

    @classmethod
    def from_file(cls, path: Path) -> ExperimentConfig:
        """
        Load and validate an experiment JSON file.

        Raises:
            ConfigError: If the file is unreadable or invalid.

        """
        return _validate_file(cls, path)

    @property
    def sim_config(self) -> SimConfig:
        return SimConfig(
            dt_max=self.dt_max,
            small_jump_cutoff=self.small_jump_cutoff,
            bridge_correction=self.bridge_correction,
            bridge_sampling=self.bridge_sampling,
            dt_scaling=self.dt_scaling,
        )

    def hashed_fields(self) -> dict[str, Any]:
        """Every field that influences the numbers."""
        exclude: set[str] = {"name", "output_dir"}
        if self.method == "crude":
            exclude.add("tilt")
        return self.model_dump(mode="json", by_alias=True, exclude=exclude)

    @property
    def config_hash(self) -> str:
        return PassageUtils.config_hash(self.hashed_fields())[:16]


class SuiteConfig(BaseModel):
    """A list of experiments, inline or as paths relative to the suite file."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    experiments: list[ExperimentConfig | Path] = Field(min_length=1)

    @classmethod
    def from_file(cls, path: Path) -> SuiteConfig:
        return _validate_file(cls, path)

    def resolve(self, base_dir: Path) -> list[ExperimentConfig]:
        """Load every referenced experiment file."""
        return [
            entry
            if isinstance(entry, ExperimentConfig)
            else ExperimentConfig.from_file(
                entry if entry.is_absolute() else base_dir / entry
            )
            for entry in self.experiments
        ]


class BoundaryCheckConfig(BaseModel):
    """Input of ``check-boundary``."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    boundary: BoundarySpec
    horizon: float = Field(default=1e6, gt=0.0)
    kappa: float = Field(default=1.0, gt=0.0)
    derivative_samples: int = Field(default=100, ge=1)
    seed: int = Field(default=0, ge=0)

    @classmethod
    def from_file(cls, path: Path) -> BoundaryCheckConfig:
        """Accept either this object or a bare boundary object."""
        data = PassageUtils.load_json(path)
        if isinstance(data, dict) and "boundary" not in data:
            data = {"boundary": data}
        try:
            return cls.model_validate(data)
        except ValidationError as error:
            msg = f"Invalid boundary check in `{path}`:\n{error}"
            raise ConfigError(msg) from error


class ConstantsInput(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    c1: float = Field(default=1.0, gt=0.0)
    c2: float = Field(default=1.0, gt=0.0)
    beta: float = Field(default=0.5, gt=0.0, lt=1.0)
    l2_norm_sq: float | None = Field(default=None, gt=0.0)
    kappa: float = Field(default=1.0, gt=0.0)
    kappa_delta: float = Field(default=1.0, gt=0.0)


class VerifyBoundsConfig(BaseModel):
    """Input of ``verify-bounds``; ``||f'||^2`` defaults to the boundary's."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    constants: ConstantsInput = Field(default_factory=ConstantsInput)
    boundary: BoundarySpec
    horizon: float = Field(default=2.0**16, gt=0.0)
    samples: int = Field(default=1000, ge=1)
    max_level: int = Field(default=30, ge=1)
    seed: int = Field(default=0, ge=0)

    @classmethod
    def from_file(cls, path: Path) -> VerifyBoundsConfig:
        return _validate_file(cls, path)


class Manifest(BaseModel):
    """Provenance of one run."""

    model_config = ConfigDict(frozen=True)

    config_hash: str
    seed: int
    method: str
    code_version: str
    wall_time_seconds: float
    created: int
    threads: int
    censored: int
    files: dict[str, str]
    config: dict[str, Any]


class RunResult(BaseModel):
    """Curve, fit and provenance of a finished experiment."""

    model_config = ConfigDict(frozen=True)

    config_hash: str
    output_dir: Path
    curve: SurvivalCurve
    fit: ExponentFit | None
    effective_sample_sizes: tuple[float, ...] | None = None
    manifest: Manifest | None = None

    def path(self, suffix: str) -> Path:
        return self.output_dir / f"{self.config_hash}{suffix}"
