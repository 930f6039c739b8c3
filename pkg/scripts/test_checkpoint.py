import unittest
import sys
import os
import tempfile
from pathlib import Path

import numpy as np

# Add project root to path
sys.path.append(os.path.abspath(os.path.join(os.path.dirname(__file__), "..")))

from app.models.field import Grid, ScalarKind
from app.models.solver import SolverConfig
from app.services.evolve_service import initial_state, run
from app.services.spectral_service import field_from_function
from app.storage.checkpoint_store import (
    MAGIC,
    CheckpointFormatError,
    decode_checkpoint,
    encode_checkpoint,
    read_checkpoint,
    write_checkpoint,
)


class TestCheckpoint(unittest.TestCase):
    def setUp(self):
        self.grid = Grid(n1=16, n2=8)
        q = field_from_function(
            self.grid, lambda x1, x2: np.sin(x1) * np.sin(x2) + np.cos(x2), ScalarKind.EULER_VORTICITY
        )
        self.state = initial_state(q).model_copy(update={"t": 0.75, "step_count": 42, "accumulated_u_sup_integral": 0.5})

    def test_header_and_samples_survive(self):
        blob = encode_checkpoint(self.state, "equation = euler\n")
        self.assertTrue(blob.startswith(MAGIC))
        state, header = decode_checkpoint(blob)
        self.assertEqual(header["config"], "equation = euler\n")
        self.assertEqual(state.q.grid, self.grid)
        self.assertEqual(state.q.kind, ScalarKind.EULER_VORTICITY)
        self.assertEqual(state.t, 0.75)
        self.assertEqual(state.step_count, 42)
        self.assertEqual(state.accumulated_u_sup_integral, 0.5)
        self.assertTrue(np.array_equal(state.q.values, self.state.q.values))

    def test_bad_magic_and_truncation(self):
        blob = encode_checkpoint(self.state)
        with self.assertRaises(CheckpointFormatError):
            decode_checkpoint(b"XXXX" + blob[4:])
        with self.assertRaises(CheckpointFormatError):
            decode_checkpoint(blob[:-8])
        with self.assertRaises(CheckpointFormatError):
            decode_checkpoint(blob[:4] + bytes([99]) + blob[5:])

    def test_resume_reproduces_uninterrupted_run(self):
        grid = Grid.square(32)
        q = field_from_function(grid, lambda x1, x2: np.sin(x1) * np.sin(x2) + np.cos(x2))
        full = run(initial_state(q), SolverConfig(dt_init=0.01, t_end=0.2, snapshot_interval=0.1))
        half = run(initial_state(q), SolverConfig(dt_init=0.01, t_end=0.1, snapshot_interval=0.1))
        with tempfile.TemporaryDirectory() as tmp:
            path = write_checkpoint(Path(tmp) / "ck" / "mid.flck", half.final_state)
            restored, _ = read_checkpoint(path)
        resumed = run(restored, SolverConfig(dt_init=0.01, t_end=0.2, snapshot_interval=0.1))
        self.assertAlmostEqual(resumed.final_state.t, 0.2, places=14)
        self.assertLess(np.max(np.abs(resumed.final_state.q.values - full.final_state.q.values)), 1e-13)
        self.assertAlmostEqual(
            resumed.final_state.accumulated_u_sup_integral, full.final_state.accumulated_u_sup_integral, places=13
        )


if __name__ == "__main__":
    unittest.main()
