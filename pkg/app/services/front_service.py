"""
Level-curve tracking: graph extraction x2 = phi(x1), front thickness, the area
between two curves and its flux-form rate, and the checks of the graph
evolution law d_t phi = d_x1 psi(x1, phi(x1)).
"""
import logging
import math
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import fft as sfft
from scipy import optimize
from scipy.integrate import trapezoid

from app.models.field import TWO_PI, SpectralCoeffs
from app.models.front import (
    AreaFluxReport,
    CurveSnapshot,
    FrontDiagnostics,
    GraphEvolutionReport,
    LevelCurve,
    ThicknessReport,
)
from app.models.solver import Snapshot
from app.services.spectral_service import (
    evaluate_field_at,
    evaluate_gradient_at,
    get_operators,
    gradient_sup,
    ifft2_real,
    invert_fractional_laplacian,
    to_spectral,
)
from app.utils.errors import (
    ContourResidualError,
    FrontCollapsed,
    FrontTrackingError,
    NoCrossing,
    NonGraph,
    RunHalted,
    WindowMismatch,
)

logger = logging.getLogger("front")

CONTOUR_TOL_FACTOR = 1e-9
_COLUMN_EPS = 1e-12


def window_columns(grid, window: Tuple[float, float]) -> np.ndarray:
    """Grid x1 columns inside [a, b], with a and b themselves always included."""
    a, b = window
    h = grid.h1
    first = math.ceil(a / h - 1e-9)
    last = math.floor(b / h + 1e-9)
    cols = [j * h for j in range(first, last + 1)]
    cols = [x for x in cols if a - _COLUMN_EPS <= x <= b + _COLUMN_EPS]
    if not cols or abs(cols[0] - a) > _COLUMN_EPS:
        cols.insert(0, a)
    else:
        cols[0] = a
    if abs(cols[-1] - b) > _COLUMN_EPS:
        cols.append(b)
    else:
        cols[-1] = b
    return np.asarray(cols)


class _ColumnSeries:
    """q(x1, .) restricted to one column, as a 1D Fourier series in x2."""

    def __init__(self, coeffs: np.ndarray, k2: np.ndarray, ik2: np.ndarray, level: float):
        self.coeffs = coeffs
        self.k2 = k2
        self.ik2 = ik2
        self.level = level

    def __call__(self, x2) -> np.ndarray:
        x2 = np.atleast_1d(np.asarray(x2, dtype=np.float64))
        return (np.exp(1j * np.outer(x2, self.k2)) @ self.coeffs).real - self.level

    def scalar(self, x2: float) -> float:
        return float(self(x2)[0])

    def derivative(self, x2: float) -> float:
        return float((np.exp(1j * x2 * self.k2) @ (self.ik2 * self.coeffs)).real)


def _bracket_nodes(grid, bracket: Tuple[float, float]) -> np.ndarray:
    lo, hi = bracket
    h = grid.h2
    inner = [j * h for j in range(math.ceil(lo / h), math.floor(hi / h) + 1) if lo < j * h < hi]
    return np.asarray([lo, *inner, hi])


def _column_root(series: _ColumnSeries, nodes: np.ndarray, x1: float, tol: float) -> float:
    f = series(nodes)
    signs = np.sign(f)
    nonzero = signs[signs != 0]
    crossings = int(np.count_nonzero(nonzero[1:] != nonzero[:-1]))
    if crossings > 1:
        raise NonGraph(x1, crossings)
    zeros = np.flatnonzero(signs == 0)
    if zeros.size:
        return float(nodes[zeros[0]])
    if crossings == 0:
        raise NoCrossing(x1)

    i = int(np.flatnonzero(signs[:-1] * signs[1:] < 0)[0])
    lo, hi = float(nodes[i]), float(nodes[i + 1])
    root = optimize.bisect(series.scalar, lo, hi, xtol=1e-14, maxiter=200)
    # Newton polish on the trigonometric interpolant, kept only if it improves and stays bracketed
    try:
        polished = optimize.newton(series.scalar, root, fprime=series.derivative, tol=1e-15, maxiter=8)
        if lo <= polished <= hi and abs(series.scalar(polished)) <= abs(series.scalar(root)):
            root = float(polished)
    except (RuntimeError, ZeroDivisionError):
        pass

    residual = abs(series.scalar(root))
    if residual > tol:
        raise ContourResidualError(x1, residual, tol)
    return root


def extract_level_curve(
    q: SpectralCoeffs,
    G: float,
    window: Tuple[float, float],
    bracket: Tuple[float, float],
    rho_label: float = 0.0,
    contour_tol: Optional[float] = None,
) -> LevelCurve:
    grid = q.grid
    if not bracket[0] < bracket[1]:
        raise ValueError("bracket must satisfy lo < hi")
    if contour_tol is None:
        contour_tol = CONTOUR_TOL_FACTOR * float(np.max(np.abs(ifft2_real(q.modes))))

    ops = get_operators(grid)
    k1 = ops.k1.ravel()
    k2 = ops.k2.ravel()
    ik2 = ops.ik2.ravel()
    x1 = window_columns(grid, window)
    column_coeffs = np.exp(1j * np.outer(x1, k1)) @ q.modes
    nodes = _bracket_nodes(grid, bracket)

    phi = np.empty_like(x1)
    for j, x in enumerate(x1):
        series = _ColumnSeries(column_coeffs[j], k2, ik2, G)
        phi[j] = _column_root(series, nodes, float(x), contour_tol)

    return LevelCurve(
        rho_label=rho_label,
        contour_value=G,
        x1_window=window,
        x1=x1,
        phi=phi,
        bracket=bracket,
        contour_tol=contour_tol,
    )


def contour_residual(q: SpectralCoeffs, curve: LevelCurve) -> float:
    """max |q(x1, phi) - G| re-evaluated independently of the extraction."""
    return float(np.max(np.abs(evaluate_field_at(q, curve.points()) - curve.contour_value)))


def _check_same_columns(c1: LevelCurve, c2: LevelCurve) -> None:
    if c1.x1_window != c2.x1_window or c1.x1.shape != c2.x1.shape or not np.array_equal(c1.x1, c2.x1):
        raise WindowMismatch(f"curve windows differ: {c1.x1_window} vs {c2.x1_window}")


def thickness(c1: LevelCurve, c2: LevelCurve) -> ThicknessReport:
    _check_same_columns(c1, c2)
    delta = np.abs(c2.phi - c1.phi)
    delta_min = float(np.min(delta))
    delta_max = float(np.max(delta))
    c = delta_min / delta_max if delta_max > 0 else 0.0
    return ThicknessReport(
        delta_min=delta_min,
        delta_max=delta_max,
        semi_uniformity_c=c,
        collapsed=delta_min <= 0.0,
    )


def area_between_curves(c1: LevelCurve, c2: LevelCurve) -> float:
    """Window-averaged gap (1/(b-a)) * integral of (phi2 - phi1) dx1."""
    _check_same_columns(c1, c2)
    return float(trapezoid(c2.phi - c1.phi, c1.x1)) / c1.front_length


def flux_form_derivative(psi: SpectralCoeffs, c1: LevelCurve, c2: LevelCurve) -> float:
    """
    Corner combination psi(b,phi2(b)) - psi(a,phi2(a)) + psi(a,phi1(a)) - psi(b,phi1(b)),
    divided by (b - a); equals dA/dt for the window-averaged area.
    """
    _check_same_columns(c1, c2)
    corners = [c2.endpoint("b"), c2.endpoint("a"), c1.endpoint("a"), c1.endpoint("b")]
    v = evaluate_field_at(psi, corners)
    return float(v[0] - v[1] + v[2] - v[3]) / c1.front_length


def stream_jump_bound(psi: SpectralCoeffs, c1: LevelCurve, c2: LevelCurve) -> float:
    """sup over columns of |psi(x1, phi2) - psi(x1, phi1)|; |flux| <= 2 * this / (b - a)."""
    _check_same_columns(c1, c2)
    upper = evaluate_field_at(psi, c2.points())
    lower = evaluate_field_at(psi, c1.points())
    return float(np.max(np.abs(upper - lower)))


def curve_slope(q: SpectralCoeffs, curve: LevelCurve) -> np.ndarray:
    """d phi / d x1 = -(d1 q)/(d2 q) on the curve."""
    d1, d2 = evaluate_gradient_at(q, curve.points())
    return -d1 / d2


def _is_full_period(curve: LevelCurve, n1: int) -> bool:
    return abs(curve.front_length - TWO_PI) < 1e-9 and len(curve.x1) == n1 + 1


def composite_slope(psi: SpectralCoeffs, curve: LevelCurve, q: Optional[SpectralCoeffs] = None) -> np.ndarray:
    """
    d/dx1 of g(x1) = psi(x1, phi(x1)). Full-period windows differentiate the sampled
    composite with an FFT; partial windows use the chain rule with the implicit slope.
    """
    if _is_full_period(curve, psi.grid.n1):
        g = evaluate_field_at(psi, curve.points()[:-1])
        n = len(g)
        k = sfft.fftfreq(n, 1.0 / n)
        k[n // 2] = 0.0
        dg = sfft.ifft(1j * k * sfft.fft(g)).real
        return np.append(dg, dg[0])
    if q is None:
        raise ValueError("a partial window needs the scalar q to form the curve slope")
    d1, d2 = evaluate_gradient_at(psi, curve.points())
    return d1 + d2 * curve_slope(q, curve)


def verify_area_flux(times: Sequence[float], areas: Sequence[float], fluxes: Sequence[float]) -> AreaFluxReport:
    t = np.asarray(times, dtype=np.float64)
    A = np.asarray(areas, dtype=np.float64)
    F = np.asarray(fluxes, dtype=np.float64)
    if len(t) < 3 or len(A) != len(t) or len(F) != len(t):
        raise ValueError("need at least 3 aligned (t, A, flux) samples")
    rate = (A[2:] - A[:-2]) / (t[2:] - t[:-2])
    interior = F[1:-1]
    mismatch = np.abs(rate - interior)
    max_abs = float(np.max(mismatch))
    scale = float(np.max(np.abs(interior)))
    if scale > 0:
        max_rel = max_abs / scale
    else:
        max_rel = 0.0 if max_abs == 0.0 else math.inf
    return AreaFluxReport(
        times=t[1:-1].tolist(),
        centered_rate=rate.tolist(),
        flux=interior.tolist(),
        max_abs_mismatch=max_abs,
        max_rel_mismatch=max_rel,
    )


def verify_graph_evolution(snapshots: Sequence[CurveSnapshot]) -> GraphEvolutionReport:
    """
    Compare the centred time difference of phi with d_x1 psi(x1, phi) column by column.
    Stops at the first snapshot whose curve could not be extracted.
    """
    usable: List[CurveSnapshot] = []
    failed_at = None
    failure = None
    for snap in snapshots:
        if snap.curve is None:
            failed_at = snap.t
            failure = snap.failure or "curve extraction failed"
            break
        usable.append(snap)

    times, mismatches, rates = [], [], []
    for prev, cur, nxt in zip(usable, usable[1:], usable[2:]):
        if not (np.array_equal(prev.curve.x1, cur.curve.x1) and np.array_equal(cur.curve.x1, nxt.curve.x1)):
            raise WindowMismatch("tracked curve columns changed between snapshots")
        lhs = (nxt.curve.phi - prev.curve.phi) / (nxt.t - prev.t)
        rhs = composite_slope(cur.psi, cur.curve, cur.q)
        times.append(cur.t)
        mismatches.append(float(np.max(np.abs(lhs - rhs))))
        rates.append(float(np.max(np.abs(lhs))))

    overall_mismatch = max(mismatches, default=0.0)
    overall_rate = max(rates, default=0.0)
    if overall_rate > 0:
        relative = overall_mismatch / overall_rate
    else:
        relative = 0.0 if overall_mismatch == 0.0 else math.inf
    if failure:
        logger.warning("graph evolution check truncated at t=%.6f: %s", failed_at, failure)
    return GraphEvolutionReport(
        times=times,
        max_mismatch=mismatches,
        max_rate=rates,
        overall_max_mismatch=overall_mismatch,
        overall_max_rate=overall_rate,
        relative_mismatch=relative,
        snapshots_used=len(usable),
        failed_at=failed_at,
        failure=failure,
    )


def oriented_pair(q: SpectralCoeffs, front) -> Tuple[LevelCurve, LevelCurve]:
    """Extract both tracked curves and order them so that phi2 >= phi1 on average."""
    c1 = extract_level_curve(q, front.G1, front.window, front.bracket, rho_label=1.0)
    c2 = extract_level_curve(q, front.G2, front.window, front.bracket2 or front.bracket, rho_label=2.0)
    if area_between_curves(c1, c2) < 0:
        c1, c2 = c2, c1
    return c1, c2


class FrontTracker:
    """
    Run observer: tracks the two configured level curves at every snapshot and
    records FrontDiagnostics. Ends the run (RunHalted) on an ansatz failure, on
    collapse, or once the thinnest gap drops below exit_factor grid cells.
    """

    def __init__(self, front, exit_factor: float = 4.0):
        self.front = front
        self.exit_factor = exit_factor
        self.diagnostics: List[FrontDiagnostics] = []
        self.tracks: Dict[float, List[CurveSnapshot]] = {front.G1: [], front.G2: []}
        self.failure: Optional[FrontTrackingError] = None
        self.last_pair: Optional[Tuple[LevelCurve, LevelCurve]] = None

    def __call__(self, snap: Snapshot) -> None:
        q_hat = to_spectral(snap.q)
        psi = invert_fractional_laplacian(q_hat, snap.q.kind.inversion_exponent)
        try:
            c1, c2 = oriented_pair(q_hat, self.front)
        except FrontTrackingError as err:
            self.failure = err
            for G in self.tracks:
                self.tracks[G].append(CurveSnapshot(t=snap.t, psi=psi, q=q_hat, failure=str(err)))
            logger.warning("front tracking failed at t=%.6f: %s", snap.t, err)
            raise RunHalted(err.reason, str(err))

        self.last_pair = (c1, c2)
        for curve in (c1, c2):
            self.tracks[curve.contour_value].append(CurveSnapshot(t=snap.t, psi=psi, q=q_hat, curve=curve))

        report = thickness(c1, c2)
        diag = FrontDiagnostics(
            t=snap.t,
            delta_min=report.delta_min,
            delta_max=report.delta_max,
            semi_uniformity_c=report.semi_uniformity_c,
            area_A=area_between_curves(c1, c2),
            flux_F=flux_form_derivative(psi, c1, c2),
            u_sup_integral=snap.u_sup_integral,
            front_length=c1.front_length,
            stream_jump=stream_jump_bound(psi, c1, c2),
            grad_max=gradient_sup(snap.q),
            collapsed=report.collapsed,
        )
        self.diagnostics.append(diag)

        if report.collapsed:
            self.failure = FrontCollapsed(snap.t)
            logger.warning("front collapsed at t=%.6f", snap.t)
            raise RunHalted(self.failure.reason, str(self.failure))
        h2 = snap.q.grid.h2
        if report.delta_min < self.exit_factor * h2:
            raise RunHalted(
                "resolution-exit",
                f"delta_min={report.delta_min:.4g} < {self.exit_factor:g}*h={self.exit_factor * h2:.4g}",
            )

    def centers(self, max_points: int = 16) -> List[Tuple[float, float]]:
        """Mid-gap points along the last tracked pair, for concentrating modulus pairs."""
        if self.last_pair is None:
            return []
        c1, c2 = self.last_pair
        idx = np.unique(np.linspace(0, len(c1.x1) - 1, min(max_points, len(c1.x1))).astype(int))
        mid = 0.5 * (c1.phi[idx] + c2.phi[idx])
        return [(float(x), float(y)) for x, y in zip(c1.x1[idx], mid)]
