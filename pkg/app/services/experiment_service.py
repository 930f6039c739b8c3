"""
End-to-end experiment pipeline: sample the scenario, evolve with the front
tracker and modulus monitor attached, post-process (area-flux and graph-evolution
checks, envelope fit) and write the artifact bundle. Abnormal ends still write a
partial bundle plus abort.json before the error propagates.
"""
import logging
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict

from app.models.field import ScalarKind
from app.models.front import AreaFluxReport, BoundFit, GraphEvolutionReport
from app.models.modulus import ModulusEstimate, PairPlan
from app.models.run_config import RunConfig
from app.models.solver import SimulationState, Snapshot
from app.services.bound_service import fit_bound_envelope, model_for_equation
from app.services.config_service import dump_config, parse_config
from app.services.evolve_service import initial_state, run
from app.services.front_service import FrontTracker, verify_area_flux, verify_graph_evolution
from app.services.modulus_service import ModulusMonitor
from app.services.scenario_service import get_scenario, sample_scenario
from app.services.spectral_service import energy, gradient_sup, norms
from app.storage import bundle_store
from app.storage.checkpoint_store import read_checkpoint, write_checkpoint
from app.utils.errors import ConfigError, FrontLabError, ScenarioMismatch, SolverAbort, Unfittable

logger = logging.getLogger("experiment")

FINAL_CHECKPOINT = "final.flck"


def modulus_column(equation: str) -> str:
    return "M_hat" if equation == "qg" else "M_lip"


def state_from_snapshot(snap: Snapshot) -> SimulationState:
    return SimulationState(
        t=snap.t,
        q=snap.q,
        step_count=snap.step_count,
        accumulated_u_sup_integral=snap.u_sup_integral,
        u_sup=snap.u_sup,
    )


class SnapshotRecorder:
    """Per-snapshot field diagnostics, independent of front tracking."""

    def __init__(self):
        self.rows: List[Dict[str, float]] = []

    def __call__(self, snap: Snapshot) -> None:
        n = norms(snap.q)
        self.rows.append({
            "t": snap.t,
            "step_count": snap.step_count,
            "u_sup": snap.u_sup,
            "u_sup_integral": snap.u_sup_integral,
            "L1": n.L1,
            "L2": n.L2,
            "Linf": n.Linf,
            "energy": energy(snap.q),
            "grad_max": gradient_sup(snap.q),
        })


class CheckpointWriter:
    def __init__(self, directory: Path, every: Optional[float], config_text: str):
        self.directory = directory
        self.every = every
        self.config_text = config_text
        self._next_due: Optional[float] = None

    def __call__(self, snap: Snapshot) -> None:
        if self.every is None:
            return
        if self._next_due is not None and snap.t < self._next_due - 1e-12:
            return
        write_checkpoint(self.directory / f"step{snap.step_count:08d}.flck", state_from_snapshot(snap), self.config_text)
        self._next_due = snap.t + self.every


class ExperimentResult(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    bundle: str
    snapshot_count: int
    halt_reason: Optional[str] = None
    diagnostics: pd.DataFrame
    bound_fit: Optional[BoundFit] = None
    area_flux: Optional[AreaFluxReport] = None
    graph_evolution: Dict[str, GraphEvolutionReport] = {}


def _diagnostics_frame(
    recorder: SnapshotRecorder,
    tracker: Optional[FrontTracker],
    monitor: Optional[ModulusMonitor],
    equation: str,
) -> pd.DataFrame:
    frame = pd.DataFrame(recorder.rows)
    if tracker is not None and tracker.diagnostics:
        front = pd.DataFrame([d.model_dump(exclude={"u_sup_integral", "grad_max"}) for d in tracker.diagnostics])
        front["loglog_A"] = [d.loglog_A for d in tracker.diagnostics]
        front = front.rename(columns={"semi_uniformity_c": "c"})
        frame = frame.merge(front, on="t", how="left")
    if monitor is not None:
        column = modulus_column(equation)
        values = pd.DataFrame({"t": [r.t for r in monitor.records], column: [r.estimate.M_hat for r in monitor.records]})
        frame = frame.merge(values, on="t", how="left")
    return frame


def _split_columns(estimate: ModulusEstimate) -> Dict[str, float]:
    if not estimate.split:
        return {}
    split = estimate.split[0]
    return {"worst_I1": split.I1, "worst_I2": split.I2, "worst_I3": split.I3, "k_cutoff": split.k_cutoff}


def _modulus_frames(monitor: ModulusMonitor):
    summary = pd.DataFrame([
        {
            "t": r.t,
            "M_hat": r.estimate.M_hat,
            "pair_count": r.estimate.pair_count,
            "worst_tau": r.estimate.worst_ratio_tau,
            "worst_z1_x1": r.estimate.worst_pair.z1[0],
            "worst_z1_x2": r.estimate.worst_pair.z1[1],
            "worst_z2_x1": r.estimate.worst_pair.z2[0],
            "worst_z2_x2": r.estimate.worst_pair.z2[1],
            **_split_columns(r.estimate),
        }
        for r in monitor.records
    ])
    tables = [r.estimate.pair_table.assign(t=r.t) for r in monitor.records if r.estimate.pair_table is not None]
    pairs = pd.concat(tables, ignore_index=True) if tables else None
    return summary, pairs


def _verification(tracker: FrontTracker):
    area_flux = None
    graph: Dict[str, GraphEvolutionReport] = {}
    diags = tracker.diagnostics
    if len(diags) >= 3:
        area_flux = verify_area_flux([d.t for d in diags], [d.area_A for d in diags], [d.flux_F for d in diags])
    for G, track in tracker.tracks.items():
        if track:
            graph[repr(G)] = verify_graph_evolution(track)
    return area_flux, graph


def _fit(tracker: FrontTracker, monitor: Optional[ModulusMonitor], equation: str):
    diags = tracker.diagnostics
    if not diags:
        return None, "no front diagnostics"
    try:
        fit = fit_bound_envelope(
            [d.t for d in diags],
            [d.area_A for d in diags],
            model_for_equation(equation),
            M=monitor.max_estimate if monitor else None,
            c_min=min(d.semi_uniformity_c for d in diags),
            front_length=diags[0].front_length,
        )
        return fit, None
    except Unfittable as err:
        logger.warning("bound envelope not fitted: %s", err)
        return None, str(err)


def run_experiment(
    config: RunConfig,
    initial: Optional[SimulationState] = None,
    output_dir: Optional[Union[str, Path]] = None,
) -> ExperimentResult:
    out = bundle_store.prepare_bundle(output_dir or config.output_dir)
    text = dump_config(config)
    bundle_store.write_text(out, "config.ini", text)
    checkpoints = bundle_store.checkpoint_dir(out)

    if initial is None:
        scenario = get_scenario(config.scenario.name)
        q0 = sample_scenario(scenario, config.grid, ScalarKind.for_equation(config.equation), config.scenario.params)
        initial = initial_state(q0)

    recorder = SnapshotRecorder()
    tracker = FrontTracker(config.front, config.front.exit_factor) if config.front else None
    monitor = None
    if config.modulus:
        m = config.modulus
        plan = PairPlan(
            pair_count=m.pair_count,
            tau_floor=m.tau_floor,
            tau_max=m.tau_max,
            seed=config.seed,
            center_radius=m.center_radius,
        )
        monitor = ModulusMonitor(plan, m.every, centers_from=tracker.centers if tracker else None, keep_pairs=m.dump_pairs)
    observers = [o for o in (recorder, tracker, monitor) if o is not None]
    observers.append(CheckpointWriter(checkpoints, config.checkpoint_every, text))

    logger.info(
        "run %s/%s on %dx%d to t=%g -> %s",
        config.equation, config.scenario.name, config.grid.n1, config.grid.n2, config.solver.t_end, out,
    )
    abort: Optional[SolverAbort] = None
    halt_reason = None
    try:
        result = run(initial, config.solver, observers)
        final_state, halt_reason = result.final_state, result.halt_reason
    except SolverAbort as err:
        abort = err
        final_state, halt_reason = err.state, err.reason
    failure: Optional[FrontLabError] = abort or (tracker.failure if tracker else None)

    frame = _diagnostics_frame(recorder, tracker, monitor, config.equation)
    bundle_store.write_series(out, "diagnostics.csv", frame)

    if monitor is not None:
        summary, pairs = _modulus_frames(monitor)
        bundle_store.write_series(out, "modulus.csv", summary)
        if pairs is not None:
            bundle_store.write_series(out, "modulus_pairs.csv", pairs)

    fit = area_flux = None
    graph: Dict[str, GraphEvolutionReport] = {}
    if tracker is not None:
        area_flux, graph = _verification(tracker)
        fit, fit_error = _fit(tracker, monitor, config.equation)
        bundle_store.write_record(out, "bound_fit.json", {"fit": fit, "error": fit_error})
        bundle_store.write_record(out, "verification.json", {"area_flux": area_flux, "graph_evolution": graph})

    if final_state is not None:
        name = "abort.flck" if abort else FINAL_CHECKPOINT
        write_checkpoint(checkpoints / name, final_state, text)

    if failure is not None:
        bundle_store.write_record(out, "abort.json", {
            "reason": failure.reason,
            "message": str(failure),
            "t": final_state.t if final_state is not None else None,
            "step_count": final_state.step_count if final_state is not None else None,
        })

    bundle_store.write_manifest(out, {
        "equation": config.equation,
        "scenario": config.scenario.name,
        "scenario_params": get_scenario(config.scenario.name).merged_params(config.scenario.params),
        "resolution": list(config.resolution),
        "dt_init": config.solver.dt_init,
        "t_end": config.solver.t_end,
        "halt_reason": halt_reason,
        "snapshots": len(frame),
    })

    if failure is not None:
        raise failure

    return ExperimentResult(
        bundle=str(out),
        snapshot_count=len(frame),
        halt_reason=halt_reason,
        diagnostics=frame,
        bound_fit=fit,
        area_flux=area_flux,
        graph_evolution=graph,
    )


def resume_experiment(
    checkpoint: Union[str, Path],
    t_end: Optional[float] = None,
    output_dir: Optional[Union[str, Path]] = None,
) -> ExperimentResult:
    """Continue a run from a checkpoint; the bundle goes to <output_dir>/resumed unless overridden."""
    state, header = read_checkpoint(checkpoint)
    config = parse_config(header["config"])
    if t_end is not None:
        config = config.model_copy(update={"solver": config.solver.model_copy(update={"t_end": t_end})})
    if config.solver.t_end < state.t:
        raise ConfigError([f"solver.t_end: {config.solver.t_end:g} is before the checkpoint time {state.t:g}"])
    target = output_dir or Path(config.output_dir) / "resumed"
    logger.info("resuming from %s at t=%.6f (step %d)", checkpoint, state.t, state.step_count)
    return run_experiment(config, initial=state, output_dir=target)


def _final_field(bundle: Path) -> Optional[np.ndarray]:
    path = bundle / "checkpoints" / FINAL_CHECKPOINT
    if not path.exists():
        return None
    state, _ = read_checkpoint(path)
    return state.q.values


def _successive_ratio(values: Sequence[Optional[float]]) -> List[float]:
    ratios = [np.nan] * len(values)
    for i in range(2, len(values)):
        a, b, c = values[i - 2], values[i - 1], values[i]
        if a is None or b is None or c is None or np.isnan(a) or np.isnan(b) or np.isnan(c) or c == b:
            continue
        ratios[i] = (a - b) / (b - c)
    return ratios


def compare_runs(bundles: Sequence[Union[str, Path]]) -> pd.DataFrame:
    """
    One row per bundle, ordered by resolution then decreasing dt. Successive-difference
    ratios (Richardson) are given for the final area and the final field.
    """
    rows, fields, key = [], [], None
    for bundle in map(Path, bundles):
        manifest = bundle_store.read_record(bundle, "manifest.json")
        if manifest is None:
            raise FileNotFoundError(f"{bundle} is not a run bundle (no manifest.json)")
        this_key = (manifest["scenario"], manifest["equation"], tuple(sorted(manifest["scenario_params"].items())))
        if key is None:
            key = this_key
        elif this_key != key:
            raise ScenarioMismatch(f"{bundle} ran {this_key[1]}/{this_key[0]}, expected {key[1]}/{key[0]}")

        diagnostics = bundle_store.read_series(bundle, "diagnostics.csv")
        last = diagnostics.iloc[-1]
        fit_record = bundle_store.read_record(bundle, "bound_fit.json") or {}
        fit = fit_record.get("fit") or {}
        column = modulus_column(manifest["equation"])
        rows.append({
            "bundle": bundle.name,
            "equation": manifest["equation"],
            "scenario": manifest["scenario"],
            "n1": manifest["resolution"][0],
            "n2": manifest["resolution"][1],
            "dt_init": manifest["dt_init"],
            "t_final": float(last["t"]),
            "area_A": float(last["area_A"]) if "area_A" in last else np.nan,
            "delta_min": float(last["delta_min"]) if "delta_min" in last else np.nan,
            "M_hat": float(diagnostics[column].max()) if column in diagnostics else np.nan,
            "A_hat": fit.get("A_hat", np.nan),
            "B_hat": fit.get("B_hat", np.nan),
        })
        fields.append(_final_field(bundle))

    frame = pd.DataFrame(rows)
    order = sorted(range(len(rows)), key=lambda i: (rows[i]["n1"], rows[i]["n2"], -rows[i]["dt_init"]))
    frame = frame.iloc[order].reset_index(drop=True)
    fields = [fields[i] for i in order]

    frame["area_ratio"] = _successive_ratio(frame["area_A"].tolist())
    diffs: List[Optional[float]] = [np.nan]
    for prev, cur in zip(fields, fields[1:]):
        if prev is None or cur is None or prev.shape != cur.shape:
            diffs.append(np.nan)
        else:
            diffs.append(float(np.sqrt(np.mean((prev - cur) ** 2))))
    field_ratio = [np.nan] * len(fields)
    for i in range(2, len(fields)):
        if np.isfinite(diffs[i - 1]) and np.isfinite(diffs[i]) and diffs[i] > 0:
            field_ratio[i] = diffs[i - 1] / diffs[i]
    frame["field_ratio"] = field_ratio
    return frame
