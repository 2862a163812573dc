"""
Experiment configuration files: pydantic models, semantic checks and diagnostics.

A config file (JSON or YAML) describes one experiment, selected by its `kind`.
Validation problems are rendered as `<field.path>: <message>`.
"""

import logging
import math
from pathlib import Path
from typing import Annotated, Any, Dict, List, Literal, Optional, Tuple, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, TypeAdapter, ValidationError, field_validator, model_validator

from .potentials import GrowthBounds, Potential, PotentialError, make_potential
from .thick_sets import (
    IntervalSet,
    ThickSetError,
    ThicknessProfile,
    build_profile_partition,
    generate_thick,
    regular_window_set,
)

logger = logging.getLogger(__name__)

EXPERIMENT_KINDS = ("partition", "thickness", "eigen", "lift", "smallness",
                    "spectral-sweep", "control", "costlaw")
SET_KINDS = ("intervals", "generated", "regular", "full")
SET_FIELDS = ("omega", "subset")
ScenarioName = Literal["power-thick", "loglog-thick", "decaying-density", "regular-windows"]

Window = Tuple[float, float]


class ConfigError(Exception):
    """Exception for unreadable or invalid experiment configs; carries the diagnostics."""

    def __init__(self, diagnostics: List[str]):
        self.diagnostics = list(diagnostics)
        super().__init__("; ".join(self.diagnostics))


class LabModel(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


def _nonempty(values: List[float]) -> List[float]:
    if not values:
        raise ValueError("must be nonempty")
    return values


def _positive(value: float, name: str) -> float:
    if not (value > 0 and math.isfinite(value)):
        raise ValueError(f"{name} must be positive and finite")
    return value


class BoundsSpec(LabModel):
    """Declared growth constants c₁(|x|-c₃)₊^{β₁} ≤ V ≤ c₂⟨x⟩^{β₂}."""
    c1: float = Field(..., description="Lower growth constant")
    c2: float = Field(..., description="Upper growth constant")
    c3: float = Field(0.0, description="Lower growth shift")
    beta1: float = Field(..., description="Lower growth exponent")
    beta2: float = Field(..., description="Upper growth exponent")


class PotentialSpec(LabModel):
    """Potential kind, parameters, optional declared bounds and offset."""
    kind: Literal["monomial", "oscillating", "shifted_monomial", "tabulated", "constant"]
    params: Dict[str, Union[float, List[float]]] = Field(default_factory=dict)
    bounds: Optional[BoundsSpec] = None
    offset: float = 0.0

    @model_validator(mode="after")
    def _buildable(self) -> 'PotentialSpec':
        self.build()
        return self

    def build(self) -> Potential:
        try:
            bounds = GrowthBounds(**self.bounds.model_dump()) if self.bounds else None
            return make_potential(self.kind, bounds=bounds, offset=self.offset, **self.params)
        except (PotentialError, TypeError) as e:
            raise ValueError(str(e))

    def growth_exponents(self) -> Optional[Tuple[float, float]]:
        """(β₁, β₂) from the declared bounds or the kind; None when neither gives them."""
        if self.bounds is not None:
            return self.bounds.beta1, self.bounds.beta2
        if self.kind in ("monomial", "shifted_monomial"):
            beta = float(self.params["beta"])
            return beta, beta
        if self.kind == "oscillating":
            return float(self.params["beta1"]), float(self.params["beta2"])
        return None


class ProfileSpec(LabModel):
    """Thickness profile (ρ, τ) with constants γ and L."""
    kind: Literal["power", "loglog", "unit"] = "power"
    gamma: float
    L: float = 1.0
    tau: float = 0.0
    s: float = 0.0
    R: float = 1.0
    beta2: float = 2.0
    bracket_exponent: float = 1.0

    @field_validator("gamma")
    @classmethod
    def _gamma_range(cls, value: float) -> float:
        if not 0.0 < value < 1.0:
            raise ValueError("γ must lie in (0,1)")
        return value

    @model_validator(mode="after")
    def _buildable(self) -> 'ProfileSpec':
        self.build()
        return self

    def build(self) -> ThicknessProfile:
        try:
            return ThicknessProfile(**self.model_dump())
        except ThickSetError as e:
            raise ValueError(str(e))


class IntervalsSetSpec(LabModel):
    kind: Literal["intervals"]
    intervals: List[Tuple[float, float]]
    window: Optional[Window] = None

    @field_validator("intervals")
    @classmethod
    def _ordered(cls, value: List[Tuple[float, float]]) -> List[Tuple[float, float]]:
        for a, b in value:
            if not a <= b:
                raise ValueError(f"interval ({a}, {b}) has its ends reversed")
        return value

    def build(self, window: Window) -> IntervalSet:
        return IntervalSet(tuple(self.intervals), self.window)


class GeneratedSetSpec(LabModel):
    """Seeded thick set with one subinterval per partition piece."""
    kind: Literal["generated"]
    profile: ProfileSpec
    N: int = Field(..., ge=1)
    seed: int = 0

    def build(self, window: Window) -> IntervalSet:
        profile = self.profile.build()
        return generate_thick(profile, build_profile_partition(profile, self.N), self.seed)


class RegularSetSpec(LabModel):
    """One centered window per cell of length L, half-width fill·(L/2)·⟨k⟩^{-σ}."""
    kind: Literal["regular"]
    L: float = 1.0
    sigma: float = 0.0
    fill: float = 0.5
    window: Optional[Window] = None

    def build(self, window: Window) -> IntervalSet:
        try:
            return regular_window_set(self.L, self.sigma, self.window or window, self.fill)
        except ThickSetError as e:
            raise ValueError(str(e))


class FullSetSpec(LabModel):
    """The whole truncation interval."""
    kind: Literal["full"]

    def build(self, window: Window) -> IntervalSet:
        return IntervalSet((window,), window)


SetSpec = Annotated[Union[IntervalsSetSpec, GeneratedSetSpec, RegularSetSpec, FullSetSpec],
                    Field(discriminator="kind")]


class ExperimentBase(LabModel):
    name: Optional[str] = None
    output: Optional[str] = Field(None, description="Output directory under the output root")

    @field_validator("name", "output")
    @classmethod
    def _directory_name(cls, value: Optional[str]) -> Optional[str]:
        if value is None:
            return value
        if not value.strip():
            raise ValueError("must not be empty")
        if "/" in value or "\\" in value or value in (".", "..") or Path(value).is_absolute():
            raise ValueError(f"must be a plain directory name under the output root, got '{value}'")
        return value

    def semantic_warnings(self) -> List[str]:
        return []


class PartitionExperiment(ExperimentBase):
    kind: Literal["partition"]
    L: float = 1.0
    s: float = 0.0
    N: int = Field(..., ge=1)
    profile: Optional[ProfileSpec] = None

    @field_validator("L")
    @classmethod
    def _length(cls, value: float) -> float:
        return _positive(value, "L")

    @field_validator("s")
    @classmethod
    def _decay(cls, value: float) -> float:
        if value < 0:
            raise ValueError("s must be nonnegative")
        return value


class ThicknessExperiment(ExperimentBase):
    kind: Literal["thickness"]
    profile: ProfileSpec
    N: int = Field(50, ge=1)
    seeds: List[int] = Field(default_factory=lambda: [0])
    omega: Optional[SetSpec] = None
    pointwise_points: int = Field(2001, ge=2)

    @field_validator("seeds")
    @classmethod
    def _seeds(cls, value: List[int]) -> List[int]:
        return _nonempty(value)


class SpectralExperiment(ExperimentBase):
    """Fields shared by every experiment built on an eigenbasis."""
    potential: PotentialSpec
    radius: Optional[float] = Field(None, description="Truncation radius; certified from tail_tol when omitted")
    grid_points: Optional[int] = Field(None, ge=3)
    tail_tol: float = 1e-8

    @field_validator("radius")
    @classmethod
    def _radius(cls, value: Optional[float]) -> Optional[float]:
        return None if value is None else _positive(value, "radius")


class EigenExperiment(SpectralExperiment):
    kind: Literal["eigen"]
    lambda_max: float
    localization: List[float] = Field(default_factory=list)
    samples: int = Field(100, ge=1)
    seed: int = 0
    norm: Literal["l2", "h1"] = "l2"
    oracle: Optional[Literal["harmonic"]] = None
    oracle_modes: int = Field(20, ge=1)
    oracle_rtol: float = 1e-3

    @field_validator("lambda_max")
    @classmethod
    def _cutoff(cls, value: float) -> float:
        return _positive(value, "lambda_max")


class LiftExperiment(SpectralExperiment):
    kind: Literal["lift"]
    lambda_max: float
    y_max: float = 1.0
    m: int = Field(21, ge=3)
    levels: int = Field(3, ge=2)
    lift_kind: Literal["cosh", "sinh"] = "cosh"
    seed: int = 0
    min_order: float = 1.8
    aux_window: Optional[Window] = Field(None, description="x-range for the divergence-form residual")

    @field_validator("m")
    @classmethod
    def _odd(cls, value: int) -> int:
        if value % 2 == 0:
            raise ValueError("must be odd")
        return value

    @field_validator("lambda_max", "y_max")
    @classmethod
    def _positive_fields(cls, value: float) -> float:
        return _positive(value, "value")


class SmallnessExperiment(SpectralExperiment):
    kind: Literal["smallness"]
    lambda_list: List[float]
    omega: List[Tuple[float, float]]
    origin: float = 0.0
    scale: float = 1.0
    n_random: int = Field(50, ge=1)
    seed: int = 0
    c_budget: float = 10.0
    d1: float = 1.0
    d2: float = 1.0

    @field_validator("lambda_list")
    @classmethod
    def _lambdas(cls, value: List[float]) -> List[float]:
        return _nonempty(value)

    @field_validator("omega")
    @classmethod
    def _unit_line(cls, value: List[Tuple[float, float]]) -> List[Tuple[float, float]]:
        if not value:
            raise ValueError("must be nonempty")
        for a, b in value:
            if not 0.0 <= a <= b <= 1.0:
                raise ValueError("intervals must lie in [0, 1]")
        return value

    @model_validator(mode="after")
    def _enough_samples(self) -> 'SmallnessExperiment':
        if self.n_random * len(self.lambda_list) < 30:
            raise ValueError("n_random: the fit needs at least 30 samples in total")
        return self


class ScenarioMixin:
    """Named scenarios checked against the control set and the potential."""

    def _scenario_checks(self) -> List[str]:
        scenario = getattr(self, "scenario", None)
        if scenario is None:
            return []
        omega = self.omega
        exponents = self.potential.growth_exponents()
        warnings = []
        if scenario == "power-thick":
            if not (isinstance(omega, GeneratedSetSpec) and omega.profile.kind == "power"):
                raise ValueError("omega: power-thick scenario needs a generated set with a power profile")
            if exponents is None:
                raise ValueError("potential.bounds: power-thick scenario needs declared growth exponents")
            beta1, beta2 = exponents
            if omega.profile.tau >= beta1 / 4.0:
                warnings.append("omega.profile.tau: strict inequality τ < β₁/4 required")
            if omega.profile.s < beta2 / 2.0:
                warnings.append("omega.profile.s: s ≥ β₂/2 required for the power-thick scenario")
        elif scenario == "loglog-thick":
            if not (isinstance(omega, GeneratedSetSpec) and omega.profile.kind == "loglog"):
                raise ValueError("omega: loglog-thick scenario needs a generated set with a loglog profile")
            if exponents is not None and not math.isclose(omega.profile.beta2, exponents[1]):
                warnings.append("omega.profile.beta2: differs from the potential's upper growth exponent")
        elif scenario == "decaying-density":
            if not (isinstance(omega, GeneratedSetSpec) and omega.profile.kind == "unit"):
                raise ValueError("omega: decaying-density scenario needs a generated set with a unit profile")
        elif scenario == "regular-windows":
            if not isinstance(omega, RegularSetSpec):
                raise ValueError("omega: regular-windows scenario needs a regular set")
        return warnings


class SpectralSweepExperiment(SpectralExperiment, ScenarioMixin):
    kind: Literal["spectral-sweep"]
    lambda_list: List[float]
    omega: SetSpec
    subset: Optional[SetSpec] = None
    zeta: float = 1.0
    with_log: bool = False
    scenario: Optional[ScenarioName] = None
    zeta_band: Optional[Tuple[float, float]] = None

    @field_validator("lambda_list")
    @classmethod
    def _lambdas(cls, value: List[float]) -> List[float]:
        _nonempty(value)
        if len(value) < 5:
            raise ValueError("needs at least 5 values")
        if min(value) <= 0:
            raise ValueError("values must be positive")
        if max(value) / min(value) < 2.0:
            raise ValueError("λ values must span at least a factor 2 (a factor 4 in λ²)")
        return value

    @field_validator("zeta")
    @classmethod
    def _zeta(cls, value: float) -> float:
        return _positive(value, "ζ")

    @model_validator(mode="after")
    def _scenario(self) -> 'SpectralSweepExperiment':
        self._scenario_checks()
        return self

    def semantic_warnings(self) -> List[str]:
        return self._scenario_checks()


class ControlExperiment(SpectralExperiment, ScenarioMixin):
    kind: Literal["control"]
    cutoff: float
    T: float = 1.0
    omega: SetSpec
    m: Optional[int] = Field(None, ge=8, description="Time nodes; numerics.time_nodes when omitted")
    zeta: float = 1.0
    alpha0: float = 1.0
    alpha1: float = 1.0
    kappa1: float = 1.0
    kappa2: float = 1.0
    kappa3: float = 1.0
    staged: bool = False
    max_stages: Optional[int] = Field(None, ge=1)
    lambda_base: Optional[float] = None
    seed: int = 0
    residual_tol: Optional[float] = None
    scenario: Optional[ScenarioName] = None

    @field_validator("zeta")
    @classmethod
    def _zeta(cls, value: float) -> float:
        if value >= 2.0:
            raise ValueError("Lebeau-Robbiano exponent must satisfy ζ<2")
        return _positive(value, "ζ")

    @field_validator("cutoff", "T")
    @classmethod
    def _positive_fields(cls, value: float) -> float:
        return _positive(value, "value")

    @model_validator(mode="after")
    def _scenario(self) -> 'ControlExperiment':
        self._scenario_checks()
        return self

    def semantic_warnings(self) -> List[str]:
        return self._scenario_checks()

    @property
    def terminal_tolerance(self) -> float:
        if self.residual_tol is not None:
            return self.residual_tol
        return 1e-6 if self.staged else 1e-8


class CostLawExperiment(ControlExperiment):
    kind: Literal["costlaw"]
    horizons: List[float]

    @field_validator("horizons")
    @classmethod
    def _horizons(cls, value: List[float]) -> List[float]:
        _nonempty(value)
        if len(value) < 4:
            raise ValueError("needs at least 4 horizons")
        if min(value) <= 0:
            raise ValueError("horizons must be positive")
        if max(value) / min(value) < 8.0:
            raise ValueError("horizons must span at least a factor 8")
        return value


Experiment = Annotated[
    Union[PartitionExperiment, ThicknessExperiment, EigenExperiment, LiftExperiment,
          SmallnessExperiment, SpectralSweepExperiment, ControlExperiment, CostLawExperiment],
    Field(discriminator="kind"),
]

_ADAPTER = TypeAdapter(Experiment)


def _render_location(loc: Tuple[Any, ...]) -> str:
    """Field path without the discriminator tags pydantic inserts after union fields."""
    parts = []
    for i, item in enumerate(loc):
        tag_position = i == 0 or (i > 0 and str(loc[i - 1]) in SET_FIELDS)
        if tag_position and item in EXPERIMENT_KINDS + SET_KINDS:
            continue
        parts.append(str(item))
    return ".".join(parts)


def format_errors(error: ValidationError) -> List[str]:
    """Render pydantic errors as `<field.path>: <message>` lines."""
    diagnostics = []
    for err in error.errors():
        path = _render_location(err["loc"])
        message = err["msg"]
        if message.startswith("Value error, "):
            message = message[len("Value error, "):]
        if err["type"] in ("union_tag_invalid", "union_tag_not_found"):
            path = f"{path}.kind" if path else "kind"
        diagnostics.append(f"{path}: {message}" if path else message)
    return diagnostics


def parse_experiment(data: Any) -> Experiment:
    """Validate a decoded config mapping."""
    if not isinstance(data, dict):
        raise ConfigError(["<root>: config must be a mapping"])
    try:
        return _ADAPTER.validate_python(data)
    except ValidationError as e:
        raise ConfigError(format_errors(e))


def read_config_file(path: Union[str, Path]) -> Dict[str, Any]:
    """Decode a JSON or YAML config file (JSON is read by the YAML parser)."""
    path = Path(path)
    try:
        with open(path, "r") as f:
            data = yaml.safe_load(f)
    except OSError as e:
        raise ConfigError([f"{path}: cannot read config ({e})"])
    except yaml.YAMLError as e:
        raise ConfigError([f"{path}: cannot parse config ({e})"])
    if data is None:
        raise ConfigError([f"{path}: config is empty"])
    return data


def load_experiment(path: Union[str, Path]) -> Tuple[Experiment, List[str]]:
    """Read, validate and collect warnings for one experiment config."""
    experiment = parse_experiment(read_config_file(path))
    warnings = experiment.semantic_warnings()
    for warning in warnings:
        logger.warning(f"{path}: {warning}")
    return experiment, warnings


def experiment_name(experiment: Experiment, path: Union[str, Path]) -> str:
    """Output directory name: the output field, then the name, then the file stem."""
    return experiment.output or experiment.name or Path(path).stem


def experiment_json_schema() -> Dict[str, Any]:
    """JSON Schema of an experiment config, for docs/experiment.schema.json."""
    schema = _ADAPTER.json_schema()
    schema["title"] = "thick-control-lab experiment"
    return schema
