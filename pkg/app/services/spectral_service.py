"""
Spectral operator toolbox shared by both equations: transforms, fractional-Laplacian
inversion, velocity recovery, off-grid evaluation and norms on the 2pi-periodic torus.
"""
import logging
from functools import lru_cache
from typing import Callable, Iterable, Tuple

import numpy as np
from pydantic import BaseModel
from scipy import fft as sfft

from app.models.field import TWO_PI, Grid, ScalarField, ScalarKind, SpectralCoeffs, VelocityField
from app.utils.env import get_fft_workers
from app.utils.errors import FieldError, NonZeroMeanError

logger = logging.getLogger("spectral")

ZERO_MEAN_TOL = 1e-12
SUPPORTED_EXPONENTS = (0.5, 1.0)
_EVAL_CHUNK = 2048


class SpectralOperators:
    """Per-(grid, exponent) multipliers in fft layout."""

    def __init__(self, grid: Grid, a: float):
        self.grid = grid
        self.a = a
        k1, k2 = grid.wavenumbers()
        self.k1 = k1
        self.k2 = k2
        # Nyquist modes have no real derivative; drop them from ik.
        self.ik1 = 1j * np.where(np.abs(k1) == grid.n1 // 2, 0.0, k1)
        self.ik2 = 1j * np.where(np.abs(k2) == grid.n2 // 2, 0.0, k2)
        self.ksq = k1 * k1 + k2 * k2
        inverse = np.zeros(grid.shape)
        nonzero = self.ksq > 0
        inverse[nonzero] = self.ksq[nonzero] ** (-a)
        self.inverse = inverse
        self.dealias_mask = (np.abs(k1) <= grid.n1 // 3) & (np.abs(k2) <= grid.n2 // 3)

    def hyperviscous(self, nu: float, p: int) -> np.ndarray:
        return -nu * self.ksq ** p


@lru_cache(maxsize=32)
def get_operators(grid: Grid, a: float = 0.5) -> SpectralOperators:
    if a not in SUPPORTED_EXPONENTS:
        raise ValueError(f"unsupported inversion exponent {a}; expected one of {SUPPORTED_EXPONENTS}")
    return SpectralOperators(grid, a)


def fft2(values: np.ndarray) -> np.ndarray:
    return sfft.fft2(values, norm="forward", workers=get_fft_workers())


def ifft2_real(modes: np.ndarray) -> np.ndarray:
    return sfft.ifft2(modes, norm="forward", workers=get_fft_workers()).real


def field_from_function(
    grid: Grid,
    fn: Callable[[np.ndarray, np.ndarray], np.ndarray],
    kind: ScalarKind = ScalarKind.QG_THETA,
) -> ScalarField:
    x1, x2 = grid.mesh()
    values = np.broadcast_to(np.asarray(fn(x1, x2), dtype=np.float64), grid.shape)
    return ScalarField(grid=grid, values=values, kind=kind)


def to_spectral(f: ScalarField) -> SpectralCoeffs:
    return SpectralCoeffs(grid=f.grid, modes=fft2(f.values))


def from_spectral(c: SpectralCoeffs, kind: ScalarKind = ScalarKind.QG_THETA) -> ScalarField:
    return ScalarField(grid=c.grid, values=ifft2_real(c.modes), kind=kind)


def checked_mean_free(modes: np.ndarray) -> np.ndarray:
    """
    Zero the mean mode when it is below 1e-12 of the field's max-norm, reject otherwise.
    Returns a writable copy.
    """
    out = np.array(modes, dtype=np.complex128, copy=True)
    mean = abs(out[0, 0])
    if mean == 0.0:
        return out
    sup = float(np.max(np.abs(ifft2_real(out))))
    tolerance = ZERO_MEAN_TOL * sup
    if mean > tolerance:
        raise NonZeroMeanError(mean, tolerance)
    out[0, 0] = 0.0
    return out


def invert_fractional_laplacian(c: SpectralCoeffs, a: float) -> SpectralCoeffs:
    ops = get_operators(c.grid, a)
    modes = checked_mean_free(c.modes)
    return SpectralCoeffs(grid=c.grid, modes=modes * ops.inverse)


def stream_function(q: ScalarField) -> SpectralCoeffs:
    return invert_fractional_laplacian(to_spectral(q), q.kind.inversion_exponent)


def velocity_hat(psi_modes: np.ndarray, ops: SpectralOperators) -> Tuple[np.ndarray, np.ndarray]:
    # u = grad_perp psi = (-d2 psi, d1 psi)
    return -ops.ik2 * psi_modes, ops.ik1 * psi_modes


def velocity_from_scalar(q: ScalarField) -> VelocityField:
    psi = stream_function(q)
    ops = get_operators(q.grid, q.kind.inversion_exponent)
    u1_hat, u2_hat = velocity_hat(psi.modes, ops)
    return VelocityField(grid=q.grid, u1=ifft2_real(u1_hat), u2=ifft2_real(u2_hat))


def spectral_divergence(u: VelocityField) -> float:
    """max_k |i k . u_hat(k)| relative to max |u_hat|."""
    ops = get_operators(u.grid)
    u1_hat = fft2(u.u1)
    u2_hat = fft2(u.u2)
    div = ops.ik1 * u1_hat + ops.ik2 * u2_hat
    scale = max(float(np.max(np.abs(u1_hat))), float(np.max(np.abs(u2_hat))))
    if scale == 0.0:
        return 0.0
    return float(np.max(np.abs(div))) / scale


def _as_points(points: Iterable) -> np.ndarray:
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim == 1:
        pts = pts.reshape(1, 2)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise FieldError(f"points must have shape (P, 2), got {pts.shape}")
    if not np.all(np.isfinite(pts)):
        raise FieldError("evaluation points contain non-finite values")
    return pts


def evaluate_modes(modes: np.ndarray, grid: Grid, points: Iterable) -> np.ndarray:
    """Trigonometric interpolant sum_k c_k exp(i k.x) at arbitrary points, O(n1*n2) per point."""
    pts = _as_points(points)
    k1 = np.fft.fftfreq(grid.n1, 1.0 / grid.n1)
    k2 = np.fft.fftfreq(grid.n2, 1.0 / grid.n2)
    out = np.empty(len(pts))
    for start in range(0, len(pts), _EVAL_CHUNK):
        chunk = pts[start:start + _EVAL_CHUNK]
        e1 = np.exp(1j * np.outer(chunk[:, 0], k1))
        e2 = np.exp(1j * np.outer(chunk[:, 1], k2))
        out[start:start + len(chunk)] = np.einsum("pj,pj->p", e1 @ modes, e2).real
    return out


def evaluate_field_at(c: SpectralCoeffs, points: Iterable) -> np.ndarray:
    return evaluate_modes(c.modes, c.grid, points)


def evaluate_gradient_at(c: SpectralCoeffs, points: Iterable) -> Tuple[np.ndarray, np.ndarray]:
    ops = get_operators(c.grid)
    d1 = evaluate_modes(ops.ik1 * c.modes, c.grid, points)
    d2 = evaluate_modes(ops.ik2 * c.modes, c.grid, points)
    return d1, d2


class FieldNorms(BaseModel):
    L1: float
    L2: float
    Linf: float


def norms(q: ScalarField) -> FieldNorms:
    area = q.grid.cell_area
    return FieldNorms(
        L1=float(np.sum(np.abs(q.values)) * area),
        L2=float(np.sqrt(np.sum(q.values ** 2) * area)),
        Linf=q.sup,
    )


def l2_from_modes(c: SpectralCoeffs) -> float:
    # Parseval on [0, 2pi)^2 with forward-normalised modes
    return float(np.sqrt(TWO_PI ** 2 * np.sum(np.abs(c.modes) ** 2)))


def velocity_sup(u: VelocityField) -> float:
    return float(np.max(u.speed()))


def gradient_sup(q: ScalarField) -> float:
    ops = get_operators(q.grid)
    q_hat = fft2(q.values)
    return float(np.max(np.hypot(ifft2_real(ops.ik1 * q_hat), ifft2_real(ops.ik2 * q_hat))))


def energy(q: ScalarField) -> float:
    """Half the integral of psi * q; conserved under pure transport for both kinds."""
    q_hat = fft2(q.values)
    psi_hat = q_hat * get_operators(q.grid, q.kind.inversion_exponent).inverse
    return float(0.5 * TWO_PI ** 2 * np.sum(psi_hat * np.conj(q_hat)).real)
