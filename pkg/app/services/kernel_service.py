"""
Three-region split of the QG stream-function difference

    psi(z1) - psi(z2) = c * integral theta(y) (1/|y - z1| - 1/|y - z2|) dy

over the periodic cell centred at z1, tau = |z1 - z2|:

    I1   |y - z1| <= 2 tau
    I2   2 tau < |y - z1| <= k
    I3   |y - z1| > k

Each kernel term is integrated in polar coordinates about its own singularity,
so the 1/r factor cancels against the Jacobian. I1/tau, I2/(tau |log tau|) and
I3/tau should stay bounded as tau -> 0; verify_region_bounds checks that.
"""
import logging
import math
from functools import lru_cache
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy import ndimage, special

from app.models.field import TWO_PI, ScalarField
from app.models.modulus import KernelSplit, PointPair, RegionBoundReport, torus_delta
from app.services.spectral_service import fft2, get_operators, ifft2_real
from app.utils.errors import Unresolvable

logger = logging.getLogger("kernel")

INNER_RADIAL_NODES = 16
INNER_ANGULAR_NODES = 64
PANEL_NODES = 4


@lru_cache(maxsize=16)
def _unit_rule(nodes: int, panels: int) -> Tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre rule on [0, 1]."""
    x, w = special.roots_legendre(nodes)
    x = 0.5 * (x + 1.0)
    w = 0.5 * w
    edges = np.arange(panels) / panels
    xs = (edges[:, None] + x[None, :] / panels).ravel()
    ws = np.tile(w / panels, panels)
    return xs, ws


class _Sampler:
    """Periodic cubic-spline interpolant of theta at arbitrary points."""

    def __init__(self, theta: ScalarField):
        self.grid = theta.grid
        self.coeffs = ndimage.spline_filter(theta.values, order=3, mode="grid-wrap")

    def __call__(self, x1: np.ndarray, x2: np.ndarray) -> np.ndarray:
        coords = np.stack([np.ravel(x1) / self.grid.h1, np.ravel(x2) / self.grid.h2])
        values = ndimage.map_coordinates(self.coeffs, coords, order=3, mode="grid-wrap", prefilter=False)
        return values.reshape(np.shape(x1))


def _ray_integral(sample, origin, angles, s0, s1, panels: int) -> np.ndarray:
    """Per-angle integral of theta(origin + s e) ds for s in [s0, s1]."""
    x, w = _unit_rule(PANEL_NODES, panels)
    length = (s1 - s0)[:, None]
    s = s0[:, None] + length * x[None, :]
    c, sn = np.cos(angles)[:, None], np.sin(angles)[:, None]
    values = sample(origin[0] + s * c, origin[1] + s * sn)
    return np.sum(values * w[None, :], axis=1) * length[:, 0]


def _disc_exit(w: np.ndarray, angles: np.ndarray, tau: float, radius: float) -> np.ndarray:
    """Distance from z2 along each angle to the circle |y - z1| = radius (z2 inside it)."""
    we = w[0] * np.cos(angles) + w[1] * np.sin(angles)
    return -we + np.sqrt(we * we + radius * radius - tau * tau)


def _circle_angles(n: int) -> Tuple[np.ndarray, float]:
    return np.arange(n) * (TWO_PI / n), TWO_PI / n


def _cell_sectors(n_per_sector: int) -> Tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre angles/weights over four sectors split at the cell diagonals."""
    x, w = special.roots_legendre(n_per_sector)
    angles, weights = [], []
    for m in range(4):
        lo = -math.pi / 4 + m * math.pi / 2
        angles.append(lo + (x + 1.0) * math.pi / 4)
        weights.append(w * math.pi / 4)
    return np.concatenate(angles), np.concatenate(weights)


def _panels(length: float, h: float) -> int:
    return max(1, int(math.ceil(length / h)))


def kernel_split(
    theta: ScalarField,
    pair: PointPair,
    k_cutoff: float = 1.0,
    inner_radial: int = INNER_RADIAL_NODES,
    inner_angular: int = INNER_ANGULAR_NODES,
) -> KernelSplit:
    tau = pair.tau
    if not 0.0 < tau:
        raise ValueError("kernel split needs two distinct points")
    if not 2.0 * tau < k_cutoff:
        raise ValueError(f"tau={tau:.4g} must be below k_cutoff/2={k_cutoff / 2:.4g}")
    if not k_cutoff < math.pi:
        raise ValueError("k_cutoff must stay inside the periodic cell (k < pi)")

    # nodes closer together than the coordinate spacing land on the same point
    spacing = float(np.spacing(max(abs(c) for c in pair.z1 + pair.z2)))
    cell = max(2.0 * tau / inner_radial, TWO_PI * 2.0 * tau / inner_angular, spacing)
    if cell > tau / 4.0:
        raise Unresolvable(tau, cell)

    grid = theta.grid
    h = min(grid.h1, grid.h2)
    sample = _Sampler(theta)
    z1 = np.asarray(pair.z1, dtype=np.float64)
    w = torus_delta(pair.z1, pair.z2)
    z2 = z1 + w

    # I1: disc of radius 2 tau about z1
    alpha, d_alpha = _circle_angles(inner_angular)
    zeros = np.zeros_like(alpha)
    inner = 2.0 * tau
    radial_panels = max(1, inner_radial // PANEL_NODES)
    t1a = np.sum(_ray_integral(sample, z1, alpha, zeros, np.full_like(alpha, inner), radial_panels)) * d_alpha
    t1b = np.sum(_ray_integral(sample, z2, alpha, zeros, _disc_exit(w, alpha, tau, inner), radial_panels)) * d_alpha
    I1 = t1a - t1b

    # I2: annulus 2 tau < |y - z1| <= k
    n_mid = max(inner_angular, int(math.ceil(4.0 * math.pi * k_cutoff / h)))
    gamma, d_gamma = _circle_angles(n_mid)
    mid_panels = _panels(k_cutoff + tau, h)
    zeros = np.zeros_like(gamma)
    t2a = np.sum(
        _ray_integral(sample, z1, gamma, zeros + inner, np.full_like(gamma, k_cutoff), mid_panels)
    ) * d_gamma
    t2b = np.sum(
        _ray_integral(
            sample, z2, gamma, _disc_exit(w, gamma, tau, inner), _disc_exit(w, gamma, tau, k_cutoff), mid_panels
        )
    ) * d_gamma
    I2 = t2a - t2b

    # I3: rest of the cell about z1, out to the square boundary r = pi / max(|cos|, |sin|)
    n_sector = max(inner_angular // 4, int(math.ceil(math.pi * math.pi * math.sqrt(2.0) / h)))
    beta, w_beta = _cell_sectors(n_sector)
    c, s = np.cos(beta), np.sin(beta)
    r_max = math.pi / np.maximum(np.abs(c), np.abs(s))
    x, wr = _unit_rule(PANEL_NODES, _panels(math.pi * math.sqrt(2.0) - k_cutoff, h))
    length = (r_max - k_cutoff)[:, None]
    r = k_cutoff + length * x[None, :]
    y1 = z1[0] + r * c[:, None]
    y2 = z1[1] + r * s[:, None]
    th = sample(y1, y2)
    d = torus_delta(z2, np.stack([y1, y2], axis=-1))
    dist2 = np.hypot(d[..., 0], d[..., 1])
    weights = length * wr[None, :] * w_beta[:, None]
    I3 = float(np.sum(th * (1.0 - r / dist2) * weights))

    return KernelSplit(tau=tau, k_cutoff=k_cutoff, I1=float(I1), I2=float(I2), I3=I3)


def _steepest_point(theta: ScalarField) -> Tuple[float, float]:
    ops = get_operators(theta.grid)
    t_hat = fft2(theta.values)
    g = np.hypot(ifft2_real(ops.ik1 * t_hat), ifft2_real(ops.ik2 * t_hat))
    i, j = np.unravel_index(int(np.argmax(g)), g.shape)
    return float(i * theta.grid.h1), float(j * theta.grid.h2)


def verify_region_bounds(
    theta: ScalarField,
    taus: Sequence[float],
    k_cutoff: float = 1.0,
    z1: Optional[Tuple[float, float]] = None,
    direction: float = 0.0,
    growth_limit: float = 2.0,
) -> RegionBoundReport:
    """
    Evaluate the split at each tau along a fixed direction from z1 (default: the
    point of steepest theta). Constants are taken at the largest resolved tau and
    growth is max ratio / constant per region.
    """
    if len(taus) < 3:
        raise ValueError("region bounds need at least three tau values")
    if z1 is None:
        z1 = _steepest_point(theta)
    e = (math.cos(direction), math.sin(direction))

    kept, splits, ratios, excluded = [], [], [], []
    for tau in sorted(taus, reverse=True):
        pair = PointPair(z1=z1, z2=(z1[0] + tau * e[0], z1[1] + tau * e[1]))
        try:
            split = kernel_split(theta, pair, k_cutoff)
        except Unresolvable as err:
            logger.info("excluding tau=%.3e: %s", tau, err)
            excluded.append(float(tau))
            continue
        log_weight = split.tau * abs(math.log(split.tau))
        kept.append(split.tau)
        splits.append(split)
        ratios.append((abs(split.I1) / split.tau, abs(split.I2) / log_weight, abs(split.I3) / split.tau))

    if not ratios:
        raise Unresolvable(min(taus), float("inf"))

    constants = ratios[0]
    growth = []
    for i in range(3):
        C = constants[i]
        peak = max(r[i] for r in ratios)
        if C > 0:
            growth.append(peak / C)
        else:
            growth.append(0.0 if peak <= 1e-14 else math.inf)

    report = RegionBoundReport(
        taus=kept,
        splits=splits,
        ratios=ratios,
        constants=tuple(constants),
        growth=tuple(growth),
        excluded_taus=excluded,
        growth_limit=growth_limit,
    )
    logger.info("region growth %s over %d tau values (%d excluded)", report.growth, len(kept), len(excluded))
    return report
