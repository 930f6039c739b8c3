from typing import List, Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from app.models.field import SpectralCoeffs


class LevelCurve(BaseModel):
    """Graph samples x2 = phi(x1) of the contour q = contour_value over a window."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    rho_label: float = 0.0
    contour_value: float
    x1_window: Tuple[float, float]
    x1: np.ndarray
    phi: np.ndarray
    bracket: Tuple[float, float]
    contour_tol: float

    @field_validator("x1", "phi", mode="before")
    @classmethod
    def _as_array(cls, v):
        arr = np.array(v, dtype=np.float64, copy=True)
        arr.setflags(write=False)
        return arr

    @model_validator(mode="after")
    def _consistent(self):
        a, b = self.x1_window
        if not a < b:
            raise ValueError("x1_window must satisfy a < b")
        if self.x1.shape != self.phi.shape:
            raise ValueError("x1 and phi must have the same length")
        return self

    @property
    def front_length(self) -> float:
        return self.x1_window[1] - self.x1_window[0]

    def points(self) -> np.ndarray:
        return np.column_stack([self.x1, self.phi])

    def endpoint(self, which: Literal["a", "b"]) -> Tuple[float, float]:
        i = 0 if which == "a" else -1
        return float(self.x1[i]), float(self.phi[i])


class ThicknessReport(BaseModel):
    delta_min: float
    delta_max: float
    semi_uniformity_c: float
    collapsed: bool = False


class FrontDiagnostics(BaseModel):
    """Per-snapshot front record. semi_uniformity_c is 0 only when the curves touch."""

    t: float
    delta_min: float
    delta_max: float
    semi_uniformity_c: float = Field(ge=0.0, le=1.0)
    area_A: float
    flux_F: float
    u_sup_integral: float
    front_length: float
    stream_jump: Optional[float] = None
    grad_max: Optional[float] = None
    collapsed: bool = False

    @property
    def loglog_A(self) -> Optional[float]:
        if 0.0 < self.area_A < np.exp(-1.0):
            return float(np.log(-np.log(self.area_A)))
        return None


class AreaFluxReport(BaseModel):
    times: List[float]
    centered_rate: List[float]
    flux: List[float]
    max_abs_mismatch: float
    max_rel_mismatch: float


class GraphEvolutionReport(BaseModel):
    times: List[float]
    max_mismatch: List[float]
    max_rate: List[float]
    overall_max_mismatch: float
    overall_max_rate: float
    relative_mismatch: float
    snapshots_used: int
    failed_at: Optional[float] = None
    failure: Optional[str] = None


class BoundFit(BaseModel):
    model: Literal["double-exponential", "exponential"]
    A_hat: float
    B_hat: float
    B_lower: float
    slope_bound: Optional[float] = None
    empirical_slope: float
    max_violation: float
    gronwall_violation: Optional[float] = None
    points_used: int
    points_excluded: int
    collapsed: bool = False

    @field_validator("A_hat")
    @classmethod
    def _finite(cls, v: float) -> float:
        if not np.isfinite(v):
            raise ValueError("A_hat must be finite")
        return v

    @property
    def slope_within_bound(self) -> Optional[bool]:
        if self.slope_bound is None:
            return None
        return self.empirical_slope <= self.slope_bound


class CurveSnapshot(BaseModel):
    """One tracked curve at one time, with the fields needed to check the graph-evolution identity."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    t: float
    psi: SpectralCoeffs
    q: Optional[SpectralCoeffs] = None
    curve: Optional[LevelCurve] = None
    failure: Optional[str] = None
