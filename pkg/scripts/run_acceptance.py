"""
Long-running acceptance checks. Each check prints SUCCESS or FAILURE with the
measured numbers; the process exits non-zero if any check failed.

    python scripts/run_acceptance.py                    # everything (tens of minutes)
    python scripts/run_acceptance.py conservation kernel
"""
import argparse
import math
import os
import sys
import time
from pathlib import Path

import numpy as np
from dotenv import load_dotenv

# Ensure we can import app modules
sys.path.append(os.path.abspath(os.path.join(os.path.dirname(__file__), "..")))

from app.models.field import Grid, ScalarKind  # noqa: E402
from app.models.modulus import PairPlan  # noqa: E402
from app.models.solver import SolverConfig  # noqa: E402
from app.services.config_service import parse_config  # noqa: E402
from app.services.evolve_service import initial_state, run  # noqa: E402
from app.services.experiment_service import run_experiment  # noqa: E402
from app.services.kernel_service import verify_region_bounds  # noqa: E402
from app.services.modulus_service import estimate_modulus  # noqa: E402
from app.services.scenario_service import get_scenario, sample_scenario  # noqa: E402
from app.services.spectral_service import norms, stream_function  # noqa: E402
from app.storage import bundle_store  # noqa: E402
from app.utils.errors import FrontTrackingError  # noqa: E402

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"


def report(ok: bool, message: str) -> bool:
    print(f"{'SUCCESS' if ok else 'FAILURE'}: {message}")
    return ok


def saddle(n: int):
    return sample_scenario(get_scenario("saddle"), Grid.square(n), ScalarKind.QG_THETA)


def check_conservation(out: Path) -> bool:
    q0 = saddle(128)
    result = run(initial_state(q0), SolverConfig(dt_init=1e-3, t_end=1.0, snapshot_interval=0.25))
    before, after = norms(q0), norms(result.final_state.q)
    l2 = abs(after.L2 - before.L2) / before.L2
    linf = (after.Linf - before.Linf) / before.Linf
    return report(l2 < 1e-6 and linf < 1e-6, f"L2 drift {l2:.3e}, Linf growth {linf:.3e}")


def run_front_config(name: str, out: Path) -> Path:
    """Run a front config; an ansatz failure still leaves a bundle to read."""
    config = parse_config((CONFIG_DIR / f"{name}.ini").read_text(encoding="utf-8"))
    print(f"Running {config.scenario.name}/{config.equation} at {config.grid.n1}^2 ...")
    bundle = out / name
    try:
        result = run_experiment(config, output_dir=bundle)
        print(f"Halted: {result.halt_reason} after {result.snapshot_count} snapshots")
    except FrontTrackingError as e:
        print(f"Front tracking ended the run: {e}")
    return bundle


def check_fit(bundle: Path) -> bool:
    fit = (bundle_store.read_record(bundle, "bound_fit.json") or {}).get("fit")
    if not fit:
        return report(False, "no envelope could be fitted")
    ok = report(fit["max_violation"] <= 1e-3, f"envelope max_violation {fit['max_violation']:.3e} (A_hat={fit['A_hat']:.4g})")
    if fit["slope_bound"] is None:
        return report(False, "no slope bound (modulus or semi-uniformity missing)")
    ok &= report(fit["empirical_slope"] <= 1.2 * fit["slope_bound"],
                 f"slope {fit['empirical_slope']:.4g} vs bound {fit['slope_bound']:.4g}")
    return ok


def check_saddle_front(out: Path) -> bool:
    bundle = run_front_config("saddle_qg", out)
    verification = bundle_store.read_record(bundle, "verification.json") or {}

    ok = True
    for G, graph in (verification.get("graph_evolution") or {}).items():
        ok &= report(graph["relative_mismatch"] < 0.01,
                     f"graph evolution G={G}: mismatch {graph['relative_mismatch']:.3e} of max |d phi/dt|")
    area_flux = verification.get("area_flux")
    ok &= report(area_flux is not None and area_flux["max_rel_mismatch"] < 0.02,
                 f"area rate vs flux: max relative {area_flux['max_rel_mismatch'] if area_flux else float('nan'):.3e}")
    ok &= check_fit(bundle)
    u_int = bundle_store.read_series(bundle, "diagnostics.csv")["u_sup_integral"].to_numpy()
    ok &= report(bool(np.all(np.diff(u_int) >= 0)), "u_sup_integral is nondecreasing")
    return ok


def check_euler_front(out: Path) -> bool:
    return check_fit(run_front_config("sheared_two_band_euler", out))


def check_modulus(out: Path) -> bool:
    psi = stream_function(saddle(256))
    base = estimate_modulus(psi, ScalarKind.QG_THETA, PairPlan(pair_count=10_000, seed=0), keep_pairs=True)
    doubled = estimate_modulus(psi, ScalarKind.QG_THETA, PairPlan(pair_count=20_000, seed=0))
    spread = abs(doubled.M_hat - base.M_hat) / base.M_hat
    ok = report(math.isfinite(base.M_hat) and spread < 0.05,
                f"M_hat {base.M_hat:.5g} -> {doubled.M_hat:.5g} with doubled pairs ({spread:.2%})")

    table = base.pair_table
    decades = np.floor(np.log10(table["tau"]))
    per_decade = table.groupby(decades)["ratio"].max()
    ok &= report(per_decade.iloc[0] <= per_decade.iloc[-1],
                 f"ratio at smallest tau {per_decade.iloc[0]:.4g} <= largest tau {per_decade.iloc[-1]:.4g}")
    return ok


def check_kernel(out: Path) -> bool:
    theta = saddle(256)
    bounds = verify_region_bounds(theta, [1e-2, 1e-3, 1e-4], z1=(1.0, 0.7), direction=math.pi)
    for tau, ratio in zip(bounds.taus, bounds.ratios):
        print(f"  tau={tau:.0e}: I1/tau={ratio[0]:.4g} I2/(tau|log tau|)={ratio[1]:.4g} I3/tau={ratio[2]:.4g}")
    return report(bounds.passed, f"growth down the sweep {tuple(round(g, 3) for g in bounds.growth)}")


def check_richardson(out: Path) -> bool:
    q0 = saddle(64)
    finals = []
    for dt in (0.02, 0.01, 0.005):
        result = run(initial_state(q0), SolverConfig(dt_init=dt, t_end=0.4, snapshot_interval=0.4))
        finals.append(result.final_state.q.values)
    ratio = np.max(np.abs(finals[0] - finals[1])) / np.max(np.abs(finals[1] - finals[2]))
    return report(12.0 <= ratio <= 20.0, f"dt-refinement ratio {ratio:.3f} (RK4 nominal 16)")


def check_reproducibility(out: Path) -> bool:
    config = parse_config((CONFIG_DIR / "shear_check.ini").read_text(encoding="utf-8"))
    target = out / "repeat"
    run_experiment(config, output_dir=target)
    first = (target / "diagnostics.csv").read_bytes()
    run_experiment(config, output_dir=target)
    return report((target / "diagnostics.csv").read_bytes() == first, "identical runs give identical diagnostics.csv")


CHECKS = {
    "conservation": check_conservation,
    "richardson": check_richardson,
    "modulus": check_modulus,
    "kernel": check_kernel,
    "reproducibility": check_reproducibility,
    "saddle": check_saddle_front,
    "euler": check_euler_front,
}


def main() -> int:
    load_dotenv()
    parser = argparse.ArgumentParser(description="frontlab acceptance checks")
    parser.add_argument("checks", nargs="*", help=f"subset to run (default: all of {', '.join(CHECKS)})")
    parser.add_argument("--output-root", default="runs/acceptance")
    args = parser.parse_args()

    unknown = [c for c in args.checks if c not in CHECKS]
    if unknown:
        parser.error(f"unknown checks: {', '.join(unknown)}")

    out = Path(args.output_root)
    failed = []
    for name in args.checks or list(CHECKS):
        print(f"--- {name} ---")
        started = time.perf_counter()
        if not CHECKS[name](out):
            failed.append(name)
        print(f"({time.perf_counter() - started:.1f}s)")

    print("--- Done ---")
    if failed:
        print(f"FAILURE: {', '.join(failed)}")
        return 1
    print("SUCCESS: all checks passed")
    return 0


if __name__ == "__main__":
    sys.exit(main())
