from enum import Enum
from typing import Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from app.utils.errors import FieldError

TWO_PI = 2.0 * np.pi


class ScalarKind(str, Enum):
    QG_THETA = "qg-theta"
    EULER_VORTICITY = "euler-vorticity"

    @property
    def inversion_exponent(self) -> float:
        # psi = (-Lap)^(-a) q
        return 0.5 if self is ScalarKind.QG_THETA else 1.0

    @classmethod
    def for_equation(cls, equation: str) -> "ScalarKind":
        return cls.QG_THETA if equation == "qg" else cls.EULER_VORTICITY


def _frozen_array(value, dtype) -> np.ndarray:
    arr = np.array(value, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


class Grid(BaseModel):
    """Uniform periodic grid on [0, 2pi)^2."""

    model_config = ConfigDict(frozen=True)

    n1: int = Field(ge=8)
    n2: int = Field(ge=8)

    @field_validator("n1", "n2")
    @classmethod
    def _even(cls, v: int) -> int:
        if v % 2:
            raise ValueError("grid sizes must be even")
        return v

    @classmethod
    def square(cls, n: int) -> "Grid":
        return cls(n1=n, n2=n)

    @property
    def shape(self) -> Tuple[int, int]:
        return (self.n1, self.n2)

    @property
    def h1(self) -> float:
        return TWO_PI / self.n1

    @property
    def h2(self) -> float:
        return TWO_PI / self.n2

    @property
    def cell_area(self) -> float:
        return self.h1 * self.h2

    def x1(self) -> np.ndarray:
        return np.arange(self.n1) * self.h1

    def x2(self) -> np.ndarray:
        return np.arange(self.n2) * self.h2

    def mesh(self) -> Tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.x1(), self.x2(), indexing="ij")

    def wavenumbers(self) -> Tuple[np.ndarray, np.ndarray]:
        """Integer wavenumbers in fft order, shaped (n1, 1) and (1, n2)."""
        k1 = np.fft.fftfreq(self.n1, 1.0 / self.n1)
        k2 = np.fft.fftfreq(self.n2, 1.0 / self.n2)
        return k1[:, None], k2[None, :]


class ScalarField(BaseModel):
    """Physical samples of the active scalar q (theta for QG, omega for Euler)."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    grid: Grid
    values: np.ndarray
    kind: ScalarKind = ScalarKind.QG_THETA

    @field_validator("values", mode="before")
    @classmethod
    def _as_array(cls, v):
        arr = _frozen_array(v, np.float64)
        if not np.all(np.isfinite(arr)):
            raise FieldError("scalar field contains non-finite values")
        return arr

    @model_validator(mode="after")
    def _shape_matches_grid(self):
        if self.values.shape != self.grid.shape:
            raise FieldError(f"values shape {self.values.shape} does not match grid {self.grid.shape}")
        return self

    @property
    def sup(self) -> float:
        return float(np.max(np.abs(self.values))) if self.values.size else 0.0

    def mean(self) -> float:
        return float(np.mean(self.values))

    def mean_defect(self) -> float:
        """|mean| relative to the max-norm (0 for the zero field)."""
        return abs(self.mean()) / self.sup if self.sup > 0 else 0.0

    def with_values(self, values: np.ndarray) -> "ScalarField":
        return ScalarField(grid=self.grid, values=values, kind=self.kind)

    def zero_mean(self) -> "ScalarField":
        return self.with_values(self.values - self.mean())


class SpectralCoeffs(BaseModel):
    """
    Fourier modes in numpy fft order, normalised so that
    q(x) = sum_k modes[k] * exp(i k.x).
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    grid: Grid
    modes: np.ndarray

    @field_validator("modes", mode="before")
    @classmethod
    def _as_array(cls, v):
        arr = _frozen_array(v, np.complex128)
        if not np.all(np.isfinite(arr)):
            raise FieldError("spectral coefficients contain non-finite values")
        return arr

    @model_validator(mode="after")
    def _shape_matches_grid(self):
        if self.modes.shape != self.grid.shape:
            raise FieldError(f"modes shape {self.modes.shape} does not match grid {self.grid.shape}")
        return self

    @property
    def mean_mode(self) -> complex:
        return complex(self.modes[0, 0])

    def mode(self, k1: int, k2: int) -> complex:
        return complex(self.modes[k1 % self.grid.n1, k2 % self.grid.n2])

    def scaled(self, factor: float) -> "SpectralCoeffs":
        return SpectralCoeffs(grid=self.grid, modes=self.modes * factor)


class VelocityField(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    grid: Grid
    u1: np.ndarray
    u2: np.ndarray

    @field_validator("u1", "u2", mode="before")
    @classmethod
    def _as_array(cls, v):
        return _frozen_array(v, np.float64)

    @model_validator(mode="after")
    def _shapes(self):
        if self.u1.shape != self.grid.shape or self.u2.shape != self.grid.shape:
            raise FieldError("velocity components do not match the grid")
        return self

    def speed(self) -> np.ndarray:
        return np.hypot(self.u1, self.u2)
