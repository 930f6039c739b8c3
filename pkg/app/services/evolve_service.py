"""
Time integration of (d_t + u.grad) q = 0 for both kinds.

The stepper works on forward-normalised Fourier modes; the physical field is
rebuilt once per step for the state, the CFL bound and the velocity sup.
"""
import logging
import math
from typing import Callable, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import trapezoid

from app.models.field import ScalarField
from app.models.solver import RunResult, SimulationState, Snapshot, SolverConfig
from app.services.spectral_service import (
    checked_mean_free,
    fft2,
    get_operators,
    ifft2_real,
    velocity_hat,
)
from app.utils.errors import DtUnderflow, NonFiniteState, RunHalted, SolverAbort

logger = logging.getLogger("evolve")

DT_FLOOR = 1e-10
CFL_EPS = 1e-8
TIME_EPS = 1e-12

Observer = Callable[[Snapshot], None]


class AdvectionOperator:
    """
    Spectral transport term -u.grad q for one grid and kind. Hyperviscosity is kept
    apart as the diagonal `damping` so step() can integrate it exactly.
    """

    def __init__(self, q: ScalarField, config: SolverConfig):
        self.grid = q.grid
        self.kind = q.kind
        self.ops = get_operators(q.grid, q.kind.inversion_exponent)
        self.mask = self.ops.dealias_mask if config.dealias == "two-thirds" else None
        self.sign = -1.0 if config.reverse_velocity else 1.0
        self.damping = (
            self.ops.hyperviscous(config.nu, config.hyperviscosity.p) if config.nu > 0 else None
        )

    def __call__(self, q_hat: np.ndarray) -> np.ndarray:
        qh = q_hat * self.mask if self.mask is not None else q_hat
        u1_hat, u2_hat = velocity_hat(qh * self.ops.inverse, self.ops)
        advection = ifft2_real(u1_hat) * ifft2_real(self.ops.ik1 * qh)
        advection += ifft2_real(u2_hat) * ifft2_real(self.ops.ik2 * qh)
        out = -self.sign * fft2(advection)
        if self.mask is not None:
            out *= self.mask
        out[0, 0] = 0.0
        return out

    def tendency(self, q_hat: np.ndarray) -> np.ndarray:
        out = self(q_hat)
        if self.damping is not None:
            out += self.damping * q_hat
            out[0, 0] = 0.0
        return out

    def integrating_factors(self, dt: float) -> Optional[Tuple[np.ndarray, np.ndarray]]:
        """exp(-nu |k|^2p dt/2) and exp(-nu |k|^2p dt), or None without dissipation."""
        if self.damping is None:
            return None
        half = np.exp(0.5 * dt * self.damping)
        return half, half * half

    def velocity_sup(self, q_hat: np.ndarray) -> float:
        u1_hat, u2_hat = velocity_hat(q_hat * self.ops.inverse, self.ops)
        return float(np.max(np.hypot(ifft2_real(u1_hat), ifft2_real(u2_hat))))


def rhs(q: ScalarField, config: Optional[SolverConfig] = None) -> ScalarField:
    config = config or SolverConfig()
    q_hat = checked_mean_free(fft2(q.values))
    return q.with_values(ifft2_real(AdvectionOperator(q, config).tendency(q_hat)))


def initial_state(q: ScalarField, t: float = 0.0) -> SimulationState:
    q_hat = checked_mean_free(fft2(q.values))
    op = AdvectionOperator(q, SolverConfig())
    return SimulationState(t=t, q=q, u_sup=op.velocity_sup(q_hat))


def cfl_dt(state: SimulationState, config: SolverConfig) -> float:
    grid = state.q.grid
    return config.cfl * min(grid.h1, grid.h2) / max(state.u_sup or 0.0, CFL_EPS)


def step(
    state: SimulationState,
    config: SolverConfig,
    dt: Optional[float] = None,
    operator: Optional[AdvectionOperator] = None,
) -> SimulationState:
    """
    One classical RK4 step; dt defaults to dt_init and is always capped by the CFL bound.
    With hyperviscosity the linear damping is integrated exactly (integrating-factor RK4),
    so the CFL bound stays the only step restriction.
    """
    op = operator or AdvectionOperator(state.q, config)
    q_hat = fft2(state.q.values)
    u_sup = state.u_sup if state.u_sup is not None else op.velocity_sup(q_hat)
    state = state if state.u_sup is not None else state.model_copy(update={"u_sup": u_sup})

    limit = cfl_dt(state, config)
    if limit < DT_FLOOR:
        raise DtUnderflow(limit, state)
    dt = min(dt if dt is not None else config.dt_init, limit)

    factors = op.integrating_factors(dt)
    if factors is None:
        k1 = op(q_hat)
        k2 = op(q_hat + 0.5 * dt * k1)
        k3 = op(q_hat + 0.5 * dt * k2)
        k4 = op(q_hat + dt * k3)
        new_hat = q_hat + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    else:
        half, full = factors
        k1 = op(q_hat)
        k2 = op(half * (q_hat + 0.5 * dt * k1))
        k3 = op(half * q_hat + 0.5 * dt * k2)
        k4 = op(full * q_hat + dt * half * k3)
        new_hat = full * q_hat + (dt / 6.0) * (full * k1 + 2.0 * half * (k2 + k3) + k4)
    new_hat[0, 0] = 0.0

    if not np.all(np.isfinite(new_hat)):
        raise NonFiniteState(state)
    values = ifft2_real(new_hat)
    new_sup = op.velocity_sup(new_hat)
    if not (np.all(np.isfinite(values)) and math.isfinite(new_sup)):
        raise NonFiniteState(state)

    return SimulationState(
        t=state.t + dt,
        q=state.q.with_values(values),
        step_count=state.step_count + 1,
        accumulated_u_sup_integral=state.accumulated_u_sup_integral + 0.5 * dt * (u_sup + new_sup),
        u_sup=new_sup,
    )


def snapshot_targets(t_start: float, config: SolverConfig) -> List[float]:
    """Absolute snapshot times k*interval in (t_start, t_end], plus t_end itself."""
    targets = []
    k = math.floor(t_start / config.snapshot_interval + TIME_EPS) + 1
    while k * config.snapshot_interval < config.t_end - TIME_EPS:
        targets.append(k * config.snapshot_interval)
        k += 1
    if config.t_end > t_start + TIME_EPS:
        targets.append(config.t_end)
    return targets


def run(
    state: SimulationState,
    config: SolverConfig,
    observers: Iterable[Observer] = (),
) -> RunResult:
    """
    Integrate to config.t_end, emitting a snapshot at the start and at every
    snapshot_interval. Observers may raise RunHalted to end the run early;
    solver aborts propagate with the partial series attached.
    """
    observers = list(observers)
    op = AdvectionOperator(state.q, config)
    if state.u_sup is None:
        state = state.model_copy(update={"u_sup": op.velocity_sup(fft2(state.q.values))})
    snapshots: List[Snapshot] = []

    def emit(current: SimulationState) -> None:
        snap = Snapshot.from_state(len(snapshots), current)
        snapshots.append(snap)
        logger.debug("snapshot %d at t=%.6f (steps=%d, |u|max=%.4g)", snap.index, snap.t, snap.step_count, snap.u_sup)
        for observer in observers:
            observer(snap)

    try:
        emit(state)
        for target in snapshot_targets(state.t, config):
            while state.t < target - TIME_EPS:
                state = step(state, config, dt=min(config.dt_init, target - state.t), operator=op)
                if abs(state.t - target) <= TIME_EPS:
                    state = state.model_copy(update={"t": target})
            emit(state)
    except RunHalted as halt:
        logger.warning("run halted at t=%.6f: %s", state.t, halt)
        return RunResult(snapshots=snapshots, final_state=state, halt_reason=halt.reason, halt_detail=halt.detail)
    except SolverAbort as abort:
        abort.snapshots = snapshots
        if abort.state is None:
            abort.state = state
        logger.error("solver abort at t=%.6f: %s", state.t, abort, exc_info=True)
        raise

    return RunResult(snapshots=snapshots, final_state=state)


def velocity_sup_integral(snapshots: Sequence[Snapshot]) -> float:
    """Trapezoid estimate of the integral of ||u||_inf over the snapshot times."""
    if len(snapshots) < 2:
        return 0.0
    return float(trapezoid([s.u_sup for s in snapshots], [s.t for s in snapshots]))
