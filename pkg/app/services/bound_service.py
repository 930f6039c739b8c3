"""
Envelope fits for the thickness lower bounds:

    double-exponential (QG):  value(t) > exp(-exp(A t + B))
    exponential (Euler):      value(t) > exp(-(A t + B))

and the comparison solution of the Gronwall inequality |A'| <= K A |log A|
(resp. |A'| <= K A).
"""
import logging
import math
from typing import Literal, Optional, Sequence

import numpy as np
from scipy import stats

from app.models.front import BoundFit
from app.utils.errors import Unfittable

logger = logging.getLogger("bounds")

BoundModel = Literal["double-exponential", "exponential"]
LOGLOG_CUTOFF = math.exp(-1.0)


def model_for_equation(equation: str) -> BoundModel:
    return "double-exponential" if equation == "qg" else "exponential"


def transform(values: np.ndarray, model: BoundModel) -> np.ndarray:
    """log|log v| for the double-exponential model, -log v for the exponential one."""
    if model == "double-exponential":
        return np.log(-np.log(values))
    return -np.log(values)


def envelope(t: np.ndarray, A: float, B: float, model: BoundModel) -> np.ndarray:
    if model == "double-exponential":
        return np.exp(-np.exp(A * t + B))
    return np.exp(-(A * t + B))


def gronwall_lower_bound(A0: float, K: float, t, model: BoundModel) -> np.ndarray:
    """Solution of A' = -K A |log A| (A0 < 1) or A' = -K A, started from A0."""
    t = np.asarray(t, dtype=np.float64)
    if model == "double-exponential":
        if not 0.0 < A0 < 1.0:
            raise ValueError("the double-exponential comparison needs 0 < A0 < 1")
        return np.power(A0, np.exp(K * t))
    return A0 * np.exp(-K * t)


def slope_bound(M: Optional[float], c_min: Optional[float], front_length: Optional[float]) -> Optional[float]:
    """C*M/(b-a) with C = 1/c_min."""
    if M is None or not c_min or not front_length:
        return None
    return M / (c_min * front_length)


def fit_bound_envelope(
    times: Sequence[float],
    values: Sequence[float],
    model: BoundModel,
    M: Optional[float] = None,
    c_min: Optional[float] = None,
    front_length: Optional[float] = None,
) -> BoundFit:
    t = np.asarray(times, dtype=np.float64)
    v = np.asarray(values, dtype=np.float64)
    if t.shape != v.shape:
        raise ValueError("times and values must align")

    collapsed = False
    nonpositive = np.flatnonzero(v <= 0.0)
    if nonpositive.size:
        collapsed = True
        cut = int(nonpositive[0])
        logger.warning("series collapses at t=%.6g; fitting the %d points before it", t[cut], cut)
        t, v = t[:cut], v[:cut]

    usable = v < LOGLOG_CUTOFF if model == "double-exponential" else np.ones_like(v, dtype=bool)
    t_used, G = t[usable], transform(v[usable], model)
    if len(t_used) < 2:
        raise Unfittable(f"{len(t_used)} usable points for the {model} model (need 2)")

    fit = stats.linregress(t_used, G)
    A_hat, B_hat = float(fit.slope), float(fit.intercept)
    B_lower = float(np.max(G - A_hat * t_used))
    max_violation = float(np.max(envelope(t, A_hat, B_hat, model) - v))
    empirical = float(np.max(np.abs(np.diff(G) / np.diff(t_used))))

    bound = slope_bound(M, c_min, front_length)
    gronwall_violation = None
    if bound is not None and (model == "exponential" or 0.0 < v[0] < 1.0):
        comparison = gronwall_lower_bound(float(v[0]), bound, t - t[0], model)
        gronwall_violation = float(np.max(comparison - v))

    return BoundFit(
        model=model,
        A_hat=A_hat,
        B_hat=B_hat,
        B_lower=B_lower,
        slope_bound=bound,
        empirical_slope=empirical,
        max_violation=max_violation,
        gronwall_violation=gronwall_violation,
        points_used=int(len(t_used)),
        points_excluded=int(len(t) - len(t_used)),
        collapsed=collapsed,
    )
