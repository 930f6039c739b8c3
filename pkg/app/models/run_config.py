import math
from typing import Callable, Dict, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from app.models.field import Grid
from app.models.solver import SolverConfig

SUPPORTED_EQUATIONS = ("qg", "euler")


def _pair(value):
    if isinstance(value, str):
        return [part.strip() for part in value.split(",")]
    return value


class ScenarioRef(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    name: str
    params: Dict[str, float] = {}


class FrontConfig(BaseModel):
    """Two tracked contours over an x1 window; bracket2 defaults to bracket."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    G1: float
    G2: float
    window: Tuple[float, float]
    bracket: Tuple[float, float]
    bracket2: Optional[Tuple[float, float]] = None
    exit_factor: float = Field(default=4.0, gt=0.0)

    @field_validator("window", "bracket", "bracket2", mode="before")
    @classmethod
    def _split_pairs(cls, v):
        return _pair(v)

    @field_validator("window")
    @classmethod
    def _window_ordered(cls, v: Tuple[float, float]) -> Tuple[float, float]:
        if not v[0] < v[1]:
            raise ValueError(f"window must satisfy a < b, got a={v[0]:g}, b={v[1]:g}")
        return v

    @field_validator("bracket", "bracket2")
    @classmethod
    def _bracket_ordered(cls, v):
        if v is not None and not v[0] < v[1]:
            raise ValueError("bracket must satisfy lo < hi")
        return v

    @model_validator(mode="after")
    def _distinct_contours(self):
        if self.G1 == self.G2:
            raise ValueError("contour values G1 and G2 must be distinct")
        return self


class ModulusConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    pair_count: int = Field(default=10_000, gt=0)
    tau_floor: float = Field(default=1e-6, gt=0.0)
    tau_max: float = Field(default=math.exp(-1.0), gt=0.0, le=math.exp(-1.0))
    every: float = Field(default=0.5, gt=0.0)
    center_radius: float = Field(default=0.25, gt=0.0)
    dump_pairs: bool = False

    @model_validator(mode="after")
    def _tau_range(self):
        if not self.tau_floor < self.tau_max:
            raise ValueError("tau_floor must be below tau_max")
        return self


class RunConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    equation: str
    resolution: Tuple[int, int]
    solver: SolverConfig = SolverConfig()
    scenario: ScenarioRef
    front: Optional[FrontConfig] = None
    modulus: Optional[ModulusConfig] = None
    output_dir: str = "runs/default"
    seed: int = 0
    # write a checkpoint every this many time units (final state always written)
    checkpoint_every: Optional[float] = Field(default=None, gt=0.0)

    @field_validator("equation", mode="before")
    @classmethod
    def _supported_equation(cls, v):
        value = str(v).strip().lower()
        if value not in SUPPORTED_EQUATIONS:
            raise ValueError(f"unsupported equation '{v}' (expected one of {', '.join(SUPPORTED_EQUATIONS)})")
        return value

    @field_validator("resolution", mode="before")
    @classmethod
    def _square_shorthand(cls, v):
        v = _pair(v)
        if isinstance(v, (int, str)):
            v = [v]
        if isinstance(v, (list, tuple)) and len(v) == 1:
            return (v[0], v[0])
        return v

    @field_validator("resolution")
    @classmethod
    def _valid_grid(cls, v: Tuple[int, int]) -> Tuple[int, int]:
        for n in v:
            if n < 8 or n % 2:
                raise ValueError(f"grid sizes must be even and >= 8, got {n}")
        return v

    @model_validator(mode="after")
    def _scenario_known(self):
        from app.services.scenario_service import get_scenario

        scenario = get_scenario(self.scenario.name)
        if scenario is None:
            raise ValueError(f"unknown scenario '{self.scenario.name}'")
        unknown = sorted(set(self.scenario.params) - set(scenario.params))
        if unknown:
            raise ValueError(f"scenario '{scenario.name}' has no parameter(s) {', '.join(unknown)}")
        if self.equation not in scenario.equations:
            raise ValueError(f"scenario '{scenario.name}' is not defined for equation '{self.equation}'")
        return self

    @property
    def grid(self) -> Grid:
        return Grid(n1=self.resolution[0], n2=self.resolution[1])


class Scenario(BaseModel):
    """Closed-form initial scalar with named parameters."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    name: str
    description: str
    provenance: str
    params: Dict[str, float] = {}
    formula: Callable[..., np.ndarray]
    equations: Tuple[str, ...] = SUPPORTED_EQUATIONS
    # rhs vanishes identically; checked when the scenario is registered
    steady: bool = False
    suggested_front: Optional[FrontConfig] = None

    def merged_params(self, overrides: Optional[Dict[str, float]] = None) -> Dict[str, float]:
        merged = dict(self.params)
        merged.update(overrides or {})
        return merged
