"""
Built-in initial data. Every scenario is sampled on the grid and recentred to
zero mean; steady scenarios are checked (rhs == 0) when they are registered.
"""
import logging
import math
from typing import Dict, Optional

import numpy as np

from app.models.field import Grid, ScalarField, ScalarKind
from app.models.run_config import FrontConfig, Scenario
from app.models.solver import SolverConfig

logger = logging.getLogger("scenarios")

STEADY_TOL = 1e-12
_SELF_TEST_GRID = Grid.square(16)

_REGISTRY: Dict[str, Scenario] = {}


def sample_scenario(
    scenario: Scenario,
    grid: Grid,
    kind: ScalarKind,
    params: Optional[Dict[str, float]] = None,
) -> ScalarField:
    x1, x2 = grid.mesh()
    values = np.broadcast_to(scenario.formula(x1, x2, **scenario.merged_params(params)), grid.shape)
    q = ScalarField(grid=grid, values=values, kind=kind)
    mean = q.mean()
    if mean != 0.0:
        logger.info("scenario %s: subtracted mean %.6e on %dx%d", scenario.name, mean, grid.n1, grid.n2)
    return q.zero_mean()


def register_scenario(scenario: Scenario) -> Scenario:
    if scenario.steady:
        from app.services.evolve_service import rhs

        for equation in scenario.equations:
            q = sample_scenario(scenario, _SELF_TEST_GRID, ScalarKind.for_equation(equation))
            residual = rhs(q, SolverConfig()).sup
            if residual > STEADY_TOL * max(1.0, q.sup):
                raise ValueError(f"scenario {scenario.name} is not steady under {equation}: |rhs| = {residual:.3e}")
    _REGISTRY[scenario.name] = scenario
    return scenario


def get_scenario(name: str) -> Optional[Scenario]:
    return _REGISTRY.get(name)


def builtin_scenarios() -> Dict[str, Scenario]:
    return dict(_REGISTRY)


def _two_band(x1, x2, d, w):
    return np.tanh((x2 - math.pi - d / 2) / w) - np.tanh((x2 - math.pi + d / 2) / w)


def _band_front() -> FrontConfig:
    # G1 sits on the lower front, G2 on the upper one
    return FrontConfig(
        G1=-0.3,
        G2=-1.2,
        window=(0.0, 2.0 * math.pi),
        bracket=(math.pi - 1.5, math.pi),
        bracket2=(math.pi, math.pi + 1.5),
    )


register_scenario(Scenario(
    name="saddle",
    description="theta0 = sin(x1) sin(x2) + cos(x2); level sets contain hyperbolic saddles at (0, 0) and (pi, 0)",
    provenance="hyperbolic-saddle datum of Constantin-Majda-Tabak (1994), used in the later QG front numerics",
    formula=lambda x1, x2: np.sin(x1) * np.sin(x2) + np.cos(x2),
    suggested_front=FrontConfig(
        G1=0.9,
        G2=0.8,
        window=(math.pi - 0.5, math.pi + 0.5),
        bracket=(0.0, 1.5),
    ),
))

register_scenario(Scenario(
    name="shear",
    description="q = amplitude * sin(x2); exact steady state of both equations",
    provenance="parallel shear flow",
    params={"amplitude": 1.0},
    formula=lambda x1, x2, amplitude: amplitude * np.sin(x2),
    steady=True,
    suggested_front=FrontConfig(G1=0.0, G2=0.5, window=(0.0, 2.0 * math.pi), bracket=(-0.6, 1.2)),
))

register_scenario(Scenario(
    name="taylor-green",
    description="q = amplitude * sin(x1) sin(x2); a Laplacian eigenfunction, so psi is proportional to q",
    provenance="Taylor and Green (1937) vortex array",
    params={"amplitude": 1.0},
    formula=lambda x1, x2, amplitude: amplitude * np.sin(x1) * np.sin(x2),
    steady=True,
))

register_scenario(Scenario(
    name="two-band",
    description="q = tanh((x2-pi-d/2)/w) - tanh((x2-pi+d/2)/w): two parallel fronts a distance d apart",
    provenance="manufactured front pair for the thickness pipeline",
    params={"d": 1.0, "w": 0.25},
    formula=lambda x1, x2, d, w: _two_band(x1, x2, d, w),
    steady=True,
    suggested_front=_band_front(),
))

register_scenario(Scenario(
    name="sheared-two-band",
    description="two-band profile displaced by amp * sin(x1); evolves under both equations",
    provenance="manufactured front pair for the exponential-thinning (Euler) runs",
    params={"d": 1.0, "w": 0.25, "amp": 0.3},
    formula=lambda x1, x2, d, w, amp: _two_band(x1, x2 - amp * np.sin(x1), d, w),
    suggested_front=_band_front(),
))
