"""
Checkpoint container:

    b"FLCK" | version (1 byte) | header length (uint32 LE) | JSON header | float64 LE samples

The header carries grid dims, kind, t, step_count, the accumulated velocity
integral, the cached ||u||_inf and the originating config text.
"""
import json
import logging
import struct
from pathlib import Path
from typing import Any, Dict, Tuple, Union

import numpy as np

from app.models.field import Grid, ScalarField, ScalarKind
from app.models.solver import SimulationState

logger = logging.getLogger("checkpoint")

MAGIC = b"FLCK"
FORMAT_VERSION = 1


class CheckpointFormatError(ValueError):
    pass


def encode_checkpoint(state: SimulationState, config_text: str = "") -> bytes:
    grid = state.q.grid
    header = {
        "n1": grid.n1,
        "n2": grid.n2,
        "kind": state.q.kind.value,
        "t": state.t,
        "step_count": state.step_count,
        "accumulated_u_sup_integral": state.accumulated_u_sup_integral,
        "u_sup": state.u_sup,
        "config": config_text,
    }
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
    samples = np.ascontiguousarray(state.q.values, dtype="<f8").tobytes()
    return MAGIC + struct.pack("<BI", FORMAT_VERSION, len(header_bytes)) + header_bytes + samples


def decode_checkpoint(blob: bytes) -> Tuple[SimulationState, Dict[str, Any]]:
    if blob[:4] != MAGIC:
        raise CheckpointFormatError("not a frontlab checkpoint")
    version, header_len = struct.unpack("<BI", blob[4:9])
    if version != FORMAT_VERSION:
        raise CheckpointFormatError(f"unsupported checkpoint version {version}")
    header = json.loads(blob[9:9 + header_len].decode("utf-8"))
    grid = Grid(n1=header["n1"], n2=header["n2"])
    raw = blob[9 + header_len:]
    expected = grid.n1 * grid.n2 * 8
    if len(raw) != expected:
        raise CheckpointFormatError(f"expected {expected} sample bytes, found {len(raw)}")
    values = np.frombuffer(raw, dtype="<f8").reshape(grid.shape)
    state = SimulationState(
        t=header["t"],
        q=ScalarField(grid=grid, values=values, kind=ScalarKind(header["kind"])),
        step_count=header["step_count"],
        accumulated_u_sup_integral=header["accumulated_u_sup_integral"],
        u_sup=header.get("u_sup"),
    )
    return state, header


def write_checkpoint(path: Union[str, Path], state: SimulationState, config_text: str = "") -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(encode_checkpoint(state, config_text))
    logger.info("checkpoint written: %s (t=%.6f, steps=%d)", path, state.t, state.step_count)
    return path


def read_checkpoint(path: Union[str, Path]) -> Tuple[SimulationState, Dict[str, Any]]:
    return decode_checkpoint(Path(path).read_bytes())
