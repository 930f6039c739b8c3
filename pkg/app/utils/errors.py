"""
Exception hierarchy for frontlab.

CLI exit codes are derived from the class (see main.py):
ConfigError -> 2, SolverAbort -> 3, FrontTrackingError -> 4.
"""
from typing import Any, List, Optional


class FrontLabError(Exception):
    exit_code = 1


# Not a ValueError: pydantic would re-wrap it inside ValidationError.
class FieldError(FrontLabError):
    pass


class NonZeroMeanError(FieldError):
    def __init__(self, mean_mode: float, tolerance: float):
        self.mean_mode = mean_mode
        self.tolerance = tolerance
        super().__init__(
            f"mean mode {mean_mode:.3e} exceeds tolerance {tolerance:.3e}; "
            "the scalar passed to the inversion is not zero-mean"
        )


class SolverAbort(FrontLabError):
    exit_code = 3

    def __init__(self, reason: str, message: str, state: Any = None, snapshots: Optional[list] = None):
        self.reason = reason
        self.state = state
        self.snapshots = snapshots or []
        super().__init__(message)


class NonFiniteState(SolverAbort):
    def __init__(self, state: Any = None, snapshots: Optional[list] = None):
        t = getattr(state, "t", float("nan"))
        super().__init__("nan", f"non-finite values after step from t={t:.6g}", state, snapshots)


class DtUnderflow(SolverAbort):
    def __init__(self, dt: float, state: Any = None, snapshots: Optional[list] = None):
        self.dt = dt
        t = getattr(state, "t", float("nan"))
        super().__init__(
            "dt-underflow",
            f"time step {dt:.3e} fell below 1e-10 at t={t:.6g} (velocity blow-up at this resolution)",
            state,
            snapshots,
        )


class FrontTrackingError(FrontLabError):
    exit_code = 4
    reason = "front-tracking"


class NoCrossing(FrontTrackingError):
    reason = "no-crossing"

    def __init__(self, x1: float):
        self.x1 = x1
        super().__init__(f"no sign change across the bracket at x1={x1:.6g}")


class NonGraph(FrontTrackingError):
    reason = "non-graph"

    def __init__(self, x1: float, crossings: int):
        self.x1 = x1
        self.crossings = crossings
        super().__init__(f"{crossings} sign changes at x1={x1:.6g}; the level curve is not a graph over x1")


class ContourResidualError(FrontTrackingError):
    reason = "contour-residual"

    def __init__(self, x1: float, residual: float, tolerance: float):
        self.x1 = x1
        self.residual = residual
        super().__init__(f"root at x1={x1:.6g} has residual {residual:.3e} > {tolerance:.3e}")


class WindowMismatch(FrontTrackingError):
    reason = "window-mismatch"


class FrontCollapsed(FrontTrackingError):
    reason = "collapse"

    def __init__(self, t: float):
        self.t = t
        super().__init__(f"tracked curves touch at t={t:.6g}")


class Unfittable(FrontLabError):
    pass


class Unresolvable(FrontLabError):
    def __init__(self, tau: float, cell: float):
        self.tau = tau
        self.cell = cell
        super().__init__(f"quadrature cell {cell:.3e} exceeds tau/4 at tau={tau:.3e}")


class EmptyPairPlan(FrontLabError, ValueError):
    pass


class ConfigError(FrontLabError):
    exit_code = 2

    def __init__(self, errors: List[str]):
        self.errors = list(errors)
        super().__init__("invalid configuration:\n  " + "\n  ".join(self.errors))


class ScenarioMismatch(FrontLabError):
    exit_code = 2


class RunHalted(Exception):
    """Raised by an observer to end a run early. Not a failure by itself."""

    def __init__(self, reason: str, detail: str = ""):
        self.reason = reason
        self.detail = detail
        super().__init__(f"{reason}: {detail}" if detail else reason)
