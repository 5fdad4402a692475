"""Run configuration: parsing, validation, dotted-path overrides."""

from __future__ import annotations

import copy
import json
from pathlib import Path
from typing import Annotated, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from . import model as m
from .flux import CoupledTLSModel
from .steady import UNIQUENESS_RTOL


class ConfigError(ValueError):
    pass


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class SystemConfig(_Strict):
    kind: m.SystemKind = m.SystemKind.LAMBDA
    energies: dict[str, float] = Field(default_factory=dict)
    omega1: Optional[float] = None
    omega2: Optional[float] = None
    g: Optional[float] = None

    @model_validator(mode="after")
    def _check(self):
        if self.kind is m.SystemKind.COUPLED_TLS:
            if None in (self.omega1, self.omega2, self.g):
                raise ValueError("CoupledTLS needs omega1, omega2 and g")
            if self.energies:
                raise ValueError("CoupledTLS takes omega1/omega2/g, not energies")
            CoupledTLSModel(self.omega1, self.omega2, self.g)
        else:
            if any(v is not None for v in (self.omega1, self.omega2, self.g)):
                raise ValueError(f"{self.kind.value} takes energies, not omega1/omega2/g")
            m.build_system(self.kind, **{f"E_{k}": v for k, v in self.energies.items()})
        return self

    def build(self):
        if self.kind is m.SystemKind.COUPLED_TLS:
            return CoupledTLSModel(self.omega1, self.omega2, self.g)
        return m.build_system(self.kind, **{f"E_{k}": v for k, v in self.energies.items()})


class _SpectrumBase(_Strict):
    @model_validator(mode="after")
    def _check(self):
        _spectrum(self)
        return self


class FlatConfig(_SpectrumBase):
    model: Literal["flat"] = "flat"
    gamma11: float
    gamma22: float


class TabulatedConfig(_SpectrumBase):
    model: Literal["tabulated"]
    gamma11: list[tuple[float, float]]
    gamma22: list[tuple[float, float]]


class StepConfig(_Strict):
    low: float
    high: float
    center: float
    width: float


class LogisticConfig(_SpectrumBase):
    model: Literal["logistic"]
    step11: StepConfig
    step22: StepConfig


SpectrumConfig = Annotated[Union[FlatConfig, TabulatedConfig, LogisticConfig],
                           Field(discriminator="model")]


def _spectrum(cfg) -> m.SpectralModel:
    if isinstance(cfg, FlatConfig):
        return m.Flat(cfg.gamma11, cfg.gamma22)
    if isinstance(cfg, TabulatedConfig):
        return m.Tabulated.from_dict({1: dict(cfg.gamma11), 2: dict(cfg.gamma22)})
    return m.LogisticStep(m.Step(**cfg.step11.model_dump()), m.Step(**cfg.step22.model_dump()))


class ConstantWeight(_Strict):
    model: Literal["constant"] = "constant"
    value: float = 1.0


class DimensionalWeight(_Strict):
    model: Literal["dimensional"]
    D: int
    x0: float


WeightConfig = Annotated[Union[ConstantWeight, DimensionalWeight], Field(discriminator="model")]


class InterferenceConfig(_Strict):
    weight: WeightConfig = Field(default_factory=ConstantWeight)
    phase: float = 0.0

    @model_validator(mode="after")
    def _check(self):
        self.build()
        return self

    def build(self) -> m.InterferenceSpec:
        w = self.weight
        model = m.Constant(w.value) if isinstance(w, ConstantWeight) else m.Dimensional(w.D, w.x0)
        return m.InterferenceSpec(model, self.phase)


class BathConfig(_Strict):
    temperature: float = 1.0
    spectrum: SpectrumConfig = Field(default_factory=lambda: FlatConfig(gamma11=0.01, gamma22=0.01))
    interference: Optional[InterferenceConfig] = None


class BathsConfig(_Strict):
    """Two baths. If ``T`` is set, T_L = T and T_R = T + dT override the per-bath values."""

    L: BathConfig = Field(default_factory=BathConfig)
    R: BathConfig = Field(default_factory=BathConfig)
    T: Optional[float] = None
    dT: float = 0.0

    def temperatures(self) -> tuple[float, float]:
        if self.T is None:
            return self.L.temperature, self.R.temperature
        return self.T, self.T + self.dT


class SolverConfig(_Strict):
    method: Literal["NullSpace", "BlochLinear"] = "NullSpace"
    generator: Literal["NonSecular", "Secular"] = "NonSecular"
    uniqueness_rtol: float = Field(UNIQUENESS_RTOL, gt=0)
    zero_coherence_atol: float = Field(1e-12, ge=0)


class AxisConfig(_Strict):
    path: str
    min: float
    max: float
    count: int = Field(ge=1)

    def values(self) -> list[float]:
        if self.count == 1:
            return [self.min]
        step = (self.max - self.min) / (self.count - 1)
        return [self.min + k * step for k in range(self.count - 1)] + [self.max]


class SweepConfig(_Strict):
    axes: list[AxisConfig] = Field(default_factory=list)


class MatrixConfig(_Strict):
    re: list[list[float]]
    im: Optional[list[list[float]]] = None


class EvolveConfig(_Strict):
    initial: Union[Literal["ground", "maximally-mixed", "random"], MatrixConfig] = "maximally-mixed"
    t_end: float = Field(100.0, ge=0)
    dt: Optional[float] = Field(None, gt=0)
    samples: int = Field(1000, ge=1)


class OutputConfig(_Strict):
    path: Optional[str] = None
    format: Literal["csv", "json"] = "csv"


class RunConfig(_Strict):
    system: SystemConfig = Field(default_factory=lambda: SystemConfig(
        kind="Lambda", energies={"g1": 0.0, "g2": 0.01, "e": 1.005}))
    baths: BathsConfig = Field(default_factory=BathsConfig)
    interference: InterferenceConfig = Field(default_factory=InterferenceConfig)
    solver: SolverConfig = Field(default_factory=SolverConfig)
    sweep: SweepConfig = Field(default_factory=SweepConfig)
    evolve: EvolveConfig = Field(default_factory=EvolveConfig)
    output: OutputConfig = Field(default_factory=OutputConfig)
    seed: int = 0

    @model_validator(mode="after")
    def _check(self):
        kind = self.system.kind
        if self.solver.method == "BlochLinear" and kind not in (m.SystemKind.LAMBDA, m.SystemKind.VEE):
            raise ValueError(f"BlochLinear is only available for Lambda and Vee, not {kind.value}")
        if self.solver.method == "BlochLinear" and self.solver.generator == "Secular":
            raise ValueError("BlochLinear solves the non-secular equations; use NullSpace with Secular")
        TL, TR = self.baths.temperatures()
        for label, T in (("L", TL), ("R", TR)):
            if not T >= 0:
                raise ValueError(f"bath {label} temperature must be >= 0, got {T}")
        data = self.model_dump(mode="json")
        for axis in self.sweep.axes:
            try:
                current = get_path(data, axis.path)
            except KeyError:
                raise ValueError(f"sweep axis path {axis.path!r} does not exist") from None
            if axis.path.startswith(("sweep.", "output.", "evolve.initial")) or not (
                    current is None or isinstance(current, (int, float))) or isinstance(current, bool):
                raise ValueError(f"sweep axis path {axis.path!r} is not a numeric parameter")
        return self

    def bath_specs(self) -> tuple[m.BathSpec, m.BathSpec]:
        TL, TR = self.baths.temperatures()
        out = []
        for label, T, b in (("L", TL, self.baths.L), ("R", TR, self.baths.R)):
            inter = (b.interference or self.interference).build()
            out.append(m.BathSpec(label, T, _spectrum(b.spectrum), inter))
        return out[0], out[1]


def get_path(data: dict, path: str):
    node = data
    for part in path.split("."):
        if not isinstance(node, dict) or part not in node:
            raise KeyError(path)
        node = node[part]
    return node


def set_path(data: dict, path: str, value) -> dict:
    out = copy.deepcopy(data)
    node = out
    parts = path.split(".")
    for part in parts[:-1]:
        node = node[part]
    node[parts[-1]] = value
    return out


def _format_errors(err: ValidationError) -> str:
    lines = []
    for e in err.errors():
        loc = ".".join(str(p) for p in e["loc"]) or "<root>"
        lines.append(f"{loc}: {e['msg']}")
    return "\n".join(lines)


def parse_config(data: dict) -> RunConfig:
    try:
        return RunConfig.model_validate(data)
    except ValidationError as err:
        raise ConfigError(_format_errors(err)) from None


def load_config(path: str | Path | None) -> RunConfig:
    if path is None:
        return RunConfig()
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as err:
        raise ConfigError(f"{path}: invalid JSON: {err}") from None
    return parse_config(data)


def dump_config(cfg: RunConfig) -> str:
    """Effective config as JSON; re-parses to an equal RunConfig."""
    return json.dumps(cfg.model_dump(mode="json"), indent=2, sort_keys=True)


def with_overrides(cfg: RunConfig, overrides: dict[str, float]) -> RunConfig:
    data = cfg.model_dump(mode="json")
    for path, value in overrides.items():
        data = set_path(data, path, value)
    return parse_config(data)


def config_schema() -> dict:
    return RunConfig.model_json_schema()
