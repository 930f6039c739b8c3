"""
Sampled modulus of continuity of the stream function.

For QG the ratio is |psi(z1) - psi(z2)| / (tau |log tau|) (log-Lipschitz regime,
0 < tau < 1/e); for Euler it is |psi(z1) - psi(z2)| / tau.
"""
import logging
import math
from typing import Callable, List, Optional, Tuple

import numpy as np
import pandas as pd
from pydantic import BaseModel

from app.models.field import TWO_PI, ScalarField, ScalarKind, SpectralCoeffs
from app.models.modulus import KernelSplit, ModulusEstimate, PairPlan, PointPair
from app.models.solver import Snapshot
from app.services.kernel_service import kernel_split
from app.services.spectral_service import evaluate_field_at, norms, stream_function
from app.utils.errors import EmptyPairPlan, Unresolvable

logger = logging.getLogger("modulus")


def psi_difference(psi: SpectralCoeffs, pair: PointPair) -> float:
    v1, v2 = evaluate_field_at(psi, [pair.z1, pair.z2])
    return float(v1 - v2)


def _pair_arrays(plan: PairPlan) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """z1 (P, 2), z2 (P, 2), tau (P,) drawn in a fixed order from the plan's seed."""
    rng = np.random.default_rng(plan.seed)
    P = plan.pair_count
    tau = np.exp(rng.uniform(math.log(plan.tau_floor), math.log(plan.tau_max), P))
    angle = rng.uniform(0.0, TWO_PI, P)
    if plan.centers:
        centers = np.asarray(plan.centers, dtype=np.float64)
        base = centers[rng.integers(len(centers), size=P)]
        base = base + rng.uniform(-plan.center_radius, plan.center_radius, (P, 2))
    else:
        base = rng.uniform(0.0, TWO_PI, (P, 2))
    z1 = base % TWO_PI
    z2 = (z1 + tau[:, None] * np.column_stack([np.cos(angle), np.sin(angle)])) % TWO_PI
    return z1, z2, tau


def generate_pairs(plan: PairPlan) -> List[PointPair]:
    z1, z2, _ = _pair_arrays(plan)
    return [PointPair(z1=tuple(a), z2=tuple(b)) for a, b in zip(z1.tolist(), z2.tolist())]


def _denominator(tau: np.ndarray, kind: ScalarKind) -> np.ndarray:
    if kind is ScalarKind.QG_THETA:
        return tau * np.abs(np.log(tau))
    return tau


def _worst_splits(theta: ScalarField, z1: np.ndarray, z2: np.ndarray, order: np.ndarray) -> List[KernelSplit]:
    splits = []
    for i in order:
        pair = PointPair(z1=tuple(z1[i].tolist()), z2=tuple(z2[i].tolist()))
        try:
            splits.append(kernel_split(theta, pair))
        except Unresolvable as err:
            logger.debug("no kernel split for tau=%.3e: %s", pair.tau, err)
    return splits


def estimate_modulus(
    psi: SpectralCoeffs,
    kind: ScalarKind,
    plan: PairPlan,
    keep_pairs: bool = False,
    theta: Optional[ScalarField] = None,
    split_count: int = 1,
) -> ModulusEstimate:
    """
    Maximum sampled ratio over the plan's pairs. For QG, passing `theta` also
    splits the kernel integral at the `split_count` pairs with the largest ratio.
    """
    if plan.pair_count == 0:
        raise EmptyPairPlan("pair plan has no pairs")
    if plan.tau_floor >= plan.tau_max:
        raise EmptyPairPlan(f"tau_floor {plan.tau_floor:g} >= tau_max {plan.tau_max:g}")

    z1, z2, tau = _pair_arrays(plan)
    # tau is the drawn separation, so 0 < tau < 1/e
    diff = evaluate_field_at(psi, z1) - evaluate_field_at(psi, z2)
    ratio = np.abs(diff) / _denominator(tau, kind)
    worst = int(np.argmax(ratio))

    table = None
    if keep_pairs:
        table = pd.DataFrame({
            "z1_x1": z1[:, 0], "z1_x2": z1[:, 1],
            "z2_x1": z2[:, 0], "z2_x2": z2[:, 1],
            "tau": tau, "psi_diff": diff, "ratio": ratio,
        })

    split: List[KernelSplit] = []
    if theta is not None and kind is ScalarKind.QG_THETA and split_count > 0:
        order = np.argsort(-ratio, kind="stable")[:split_count]
        split = _worst_splits(theta, z1, z2, order)

    estimate = ModulusEstimate(
        kind=kind.value,
        M_hat=float(ratio[worst]),
        pair_count=plan.pair_count,
        worst_pair=PointPair(z1=tuple(z1[worst].tolist()), z2=tuple(z2[worst].tolist())),
        worst_ratio_tau=float(tau[worst]),
        split=split,
        pair_table=table,
    )
    logger.debug("M_hat=%.6g over %d pairs (worst tau=%.3e)", estimate.M_hat, plan.pair_count, tau[worst])
    return estimate


def lipschitz_data_ratio(psi: SpectralCoeffs, omega: ScalarField, plan: PairPlan) -> float:
    """Euler: sampled Lipschitz constant of psi over ||omega||_L1 + ||omega||_Linf."""
    estimate = estimate_modulus(psi, ScalarKind.EULER_VORTICITY, plan)
    n = norms(omega)
    scale = n.L1 + n.Linf
    return estimate.M_hat / scale if scale > 0 else 0.0


class ModulusRecord(BaseModel):
    t: float
    estimate: ModulusEstimate


class ModulusMonitor:
    """
    Run observer: estimates the stream-function modulus every `every` time units,
    optionally concentrating pairs around points supplied by `centers_from`.
    """

    def __init__(
        self,
        plan: PairPlan,
        every: float,
        centers_from: Optional[Callable[[], List[Tuple[float, float]]]] = None,
        keep_pairs: bool = False,
    ):
        if every <= 0:
            raise ValueError("modulus interval must be positive")
        self.plan = plan
        self.every = every
        self.centers_from = centers_from
        self.keep_pairs = keep_pairs
        self.records: List[ModulusRecord] = []
        self._next_due: Optional[float] = None

    def __call__(self, snap: Snapshot) -> None:
        if self._next_due is not None and snap.t < self._next_due - 1e-12:
            return
        plan = self.plan
        centers = self.centers_from() if self.centers_from else []
        if centers:
            plan = plan.model_copy(update={"centers": centers})
        estimate = estimate_modulus(
            stream_function(snap.q), snap.q.kind, plan, keep_pairs=self.keep_pairs, theta=snap.q
        )
        self.records.append(ModulusRecord(t=snap.t, estimate=estimate))
        self._next_due = snap.t + self.every
        logger.info("t=%.4f M_hat=%.6g", snap.t, estimate.M_hat)

    @property
    def max_estimate(self) -> Optional[float]:
        if not self.records:
            return None
        return max(r.estimate.M_hat for r in self.records)
