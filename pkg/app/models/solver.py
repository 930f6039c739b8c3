from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.models.field import ScalarField


class Hyperviscosity(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    nu: float = Field(default=0.0, ge=0.0)
    p: int = Field(default=4, ge=1)


class SolverConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    dt_init: float = Field(default=1e-3, gt=0.0)
    cfl: float = Field(default=0.5, gt=0.0, le=1.0)
    # t_end = 0 is a valid single-snapshot run
    t_end: float = Field(default=1.0, ge=0.0)
    dealias: Literal["two-thirds", "none"] = "two-thirds"
    dissipation: Literal["none", "hyperviscous"] = "none"
    hyperviscosity: Hyperviscosity = Hyperviscosity()
    snapshot_interval: float = Field(default=0.05, gt=0.0)
    reverse_velocity: bool = False

    @model_validator(mode="after")
    def _dissipation_consistent(self):
        if self.dissipation == "none" and self.hyperviscosity.nu > 0:
            raise ValueError("hyperviscosity.nu > 0 requires dissipation = hyperviscous")
        return self

    @property
    def nu(self) -> float:
        return self.hyperviscosity.nu if self.dissipation == "hyperviscous" else 0.0


class SimulationState(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    t: float = Field(default=0.0, ge=0.0)
    q: ScalarField
    step_count: int = 0
    accumulated_u_sup_integral: float = 0.0
    # ||u(t)||_inf, cached for the CFL bound and the trapezoid rule
    u_sup: Optional[float] = None


class Snapshot(BaseModel):
    """Read-only view handed to observers."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    index: int
    t: float
    q: ScalarField
    step_count: int
    u_sup: float
    u_sup_integral: float

    @classmethod
    def from_state(cls, index: int, state: SimulationState) -> "Snapshot":
        return cls(
            index=index,
            t=state.t,
            q=state.q,
            step_count=state.step_count,
            u_sup=state.u_sup or 0.0,
            u_sup_integral=state.accumulated_u_sup_integral,
        )


class RunResult(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    snapshots: list[Snapshot]
    final_state: SimulationState
    halt_reason: Optional[str] = None
    halt_detail: str = ""
