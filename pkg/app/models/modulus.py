import math
from typing import List, Optional, Tuple

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field

from app.models.field import TWO_PI

Point = Tuple[float, float]


def torus_delta(z_from, z_to) -> np.ndarray:
    """Minimum-image displacement z_to - z_from on the 2pi-torus (componentwise in [-pi, pi))."""
    d = np.asarray(z_to, dtype=np.float64) - np.asarray(z_from, dtype=np.float64)
    return (d + np.pi) % TWO_PI - np.pi


def torus_distance(z1, z2) -> np.ndarray:
    d = torus_delta(z1, z2)
    return np.hypot(d[..., 0], d[..., 1])


class PointPair(BaseModel):
    model_config = ConfigDict(frozen=True)

    z1: Point
    z2: Point

    @property
    def tau(self) -> float:
        return float(torus_distance(self.z1, self.z2))

    @property
    def in_log_lipschitz_regime(self) -> bool:
        return 0.0 < self.tau < math.exp(-1.0)

    def swapped(self) -> "PointPair":
        return PointPair(z1=self.z2, z2=self.z1)

    def shifted(self, offset: Point) -> "PointPair":
        return PointPair(
            z1=(self.z1[0] + offset[0], self.z1[1] + offset[1]),
            z2=(self.z2[0] + offset[0], self.z2[1] + offset[1]),
        )


class PairPlan(BaseModel):
    """Log-uniform sampling plan in tau; pairs optionally concentrated around centers."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    pair_count: int = Field(default=10_000, ge=0)
    tau_floor: float = Field(default=1e-6, gt=0.0)
    tau_max: float = Field(default=math.exp(-1.0), gt=0.0, le=math.exp(-1.0))
    seed: int = 0
    centers: List[Point] = []
    center_radius: float = Field(default=0.25, gt=0.0)


class KernelSplit(BaseModel):
    tau: float
    k_cutoff: float
    I1: float
    I2: float
    I3: float

    @property
    def total(self) -> float:
        return self.I1 + self.I2 + self.I3


class ModulusEstimate(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    kind: str
    M_hat: float = Field(ge=0.0)
    pair_count: int
    worst_pair: Optional[PointPair] = None
    worst_ratio_tau: Optional[float] = None
    split: List[KernelSplit] = []
    pair_table: Optional[pd.DataFrame] = None


class RegionBoundReport(BaseModel):
    taus: List[float]
    splits: List[KernelSplit]
    ratios: List[Tuple[float, float, float]]
    constants: Tuple[float, float, float]
    growth: Tuple[float, float, float]
    excluded_taus: List[float] = []
    growth_limit: float = 2.0

    @property
    def passed(self) -> bool:
        return all(g <= self.growth_limit for g in self.growth)
