"""Run configuration: one JSON or TOML file drives every subcommand."""
from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .grid import Grid
from .model import ForceMode, ForceSpec, IdealGas, PhysicalParams, PolynomialPressure

__all__ = ["ConfigError", "RunConfig", "load_config", "parse_config"]


class ConfigError(ValueError):
    pass


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class GridConfig(_Strict):
    L: float = 2 * math.pi
    N: int = 32

    def build(self) -> Grid:
        return Grid(self.L, self.N)

    @model_validator(mode="after")
    def _valid(self):
        Grid(self.L, self.N)
        return self


class PressureConfig(_Strict):
    """``ideal``: ``P = R rho theta``.  ``table``: ``P = sum table[a][b] rho**a theta**b``."""

    type: Literal["ideal", "table"] = "ideal"
    R: float = 1.0
    table: Optional[list[list[float]]] = None

    @model_validator(mode="after")
    def _table_present(self):
        if self.type == "table" and not self.table:
            raise ValueError("pressure type 'table' needs a non-empty 'table'")
        return self

    def build(self):
        if self.type == "ideal":
            return IdealGas(self.R)
        return PolynomialPressure(tuple(tuple(row) for row in self.table))


class ParamsConfig(_Strict):
    mu: float = 1.0
    mu_prime: float = 0.0
    kappa: float = 1.0
    c_v: float = 1.5
    rho_inf: float = 1.0
    theta_inf: float = 1.0
    pressure: PressureConfig = PressureConfig()

    @model_validator(mode="after")
    def _physical(self):
        self.build()
        return self

    def build(self) -> PhysicalParams:
        return PhysicalParams(
            mu=self.mu,
            mu_prime=self.mu_prime,
            kappa=self.kappa,
            c_v=self.c_v,
            rho_inf=self.rho_inf,
            theta_inf=self.theta_inf,
            pressure=self.pressure.build(),
        )


class ForceModeConfig(_Strict):
    k: tuple[int, int, int]
    component: int = Field(ge=0, le=2)
    a: float = 1.0
    b: float = 0.0


def _default_modes():
    return [
        ForceModeConfig(k=(1, 0, 0), component=1, a=1.0),
        ForceModeConfig(k=(1, 0, 0), component=0, a=0.0, b=1.0),
    ]


class ForceConfig(_Strict):
    T: float = Field(1.0, gt=0)
    eps: float = 1e-3
    modes: list[ForceModeConfig] = Field(default_factory=_default_modes)
    cos: list[float] = [1.0]
    sin: list[float] = []
    mean: float = 0.0

    def build(self) -> ForceSpec:
        return ForceSpec(
            T=self.T,
            eps=self.eps,
            modes=tuple(ForceMode(tuple(m.k), m.component, m.a, m.b) for m in self.modes),
            cos=tuple(self.cos),
            sin=tuple(self.sin),
            mean=self.mean,
        )


class InitialConfig(_Strict):
    snapshot: Optional[str] = None
    amplitude: float = 0.01
    band: float = 2.0


class IntegratorConfig(_Strict):
    dt: float = Field(0.05, gt=0)
    cadence: int = Field(1, ge=1)
    t_end: float = Field(1.0, ge=0)
    linear_only: bool = False
    pin_mean: bool = False
    dt_max_factor: float = 0.25
    record: list[str] = ["s=1"]
    initial: InitialConfig = InitialConfig()


class PeriodicConfig(_Strict):
    tol: float = 1e-8
    max_periods: int = 50
    steps_per_period: int = 20
    delta_cap: float = 0.5
    pin_mean: bool = True
    linear_only: bool = False
    stall_periods: int = 5


class StabilityConfig(_Strict):
    p: float = Field(2.0, ge=1, le=2)
    amplitude: float = 1e-3
    s_list: list[float] = [1.0]
    window: Optional[tuple[float, float]] = None
    cutoff: float = 1.0
    dt: float = 0.25
    samples: int = 80
    linear_only: bool = False
    tolerance: float = 0.2
    s_margin: float = 0.1
    base_tol: float = 1e-9
    base_max_periods: int = 60


class SpectrumConfig(_Strict):
    r_min: float = Field(1e-3, gt=0)
    r_max: float = Field(16.0, gt=0)
    count: int = Field(200, ge=2)
    band_factor: float = 10.0


class BesovConfig(_Strict):
    s: float = 0.0
    r: float = 2.0
    j_min: Optional[int] = None
    j_max: Optional[int] = None


class InequalitiesConfig(_Strict):
    N: int = 32
    n_fields: int = 100
    slopes: list[float] = [0.0, 1.0, 2.0, 3.0]
    doubling: bool = True


class RunConfig(_Strict):
    grid: GridConfig = GridConfig()
    params: ParamsConfig = ParamsConfig()
    force: Optional[ForceConfig] = None
    integrator: IntegratorConfig = IntegratorConfig()
    periodic: PeriodicConfig = PeriodicConfig()
    stability: StabilityConfig = StabilityConfig()
    spectrum: SpectrumConfig = SpectrumConfig()
    besov: BesovConfig = BesovConfig()
    inequalities: InequalitiesConfig = InequalitiesConfig()
    seed: int = 0


def _format(err: ValidationError) -> str:
    lines = []
    for e in err.errors():
        loc = e["loc"]
        msg = e["msg"]
        if e["type"] == "extra_forbidden":
            msg = f"unknown key {loc[-1]!r}"
            loc = loc[:-1]
        path = ".".join(str(p) for p in loc) or "<root>"
        lines.append(f"{path}: {msg}")
    return "; ".join(lines)


def parse_config(data: dict) -> RunConfig:
    try:
        return RunConfig.model_validate(data)
    except ValidationError as err:
        raise ConfigError(_format(err)) from None


def load_config(path) -> RunConfig:
    path = Path(path)
    text = path.read_text()
    if path.suffix.lower() == ".toml":
        import tomli

        data = tomli.loads(text)
    else:
        data = json.loads(text)
    return parse_config(data)
