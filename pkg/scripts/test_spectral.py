import unittest
import sys
import os

import numpy as np

# Add project root to path
sys.path.append(os.path.abspath(os.path.join(os.path.dirname(__file__), "..")))

from app.models.field import Grid, ScalarField, ScalarKind, SpectralCoeffs
from app.services.spectral_service import (
    energy,
    evaluate_field_at,
    evaluate_gradient_at,
    field_from_function,
    from_spectral,
    gradient_sup,
    invert_fractional_laplacian,
    l2_from_modes,
    norms,
    spectral_divergence,
    stream_function,
    to_spectral,
    velocity_from_scalar,
    velocity_sup,
)
from app.utils.errors import FieldError, NonZeroMeanError

MODES = [(1, 0), (0, 1), (1, 1), (2, -1), (3, 2), (-4, 1), (5, 5), (0, 7), (6, -3), (2, 2),
         (1, 3), (7, 0), (4, 4), (-2, 5), (3, -6), (1, -1), (8, 1), (2, 7), (5, -2), (6, 6)]


class TestTransforms(unittest.TestCase):
    def setUp(self):
        self.grid = Grid.square(32)

    def test_round_trip_is_exact_to_roundoff(self):
        rng = np.random.default_rng(3)
        q = ScalarField(grid=self.grid, values=rng.standard_normal(self.grid.shape))
        back = from_spectral(to_spectral(q))
        self.assertLess(np.max(np.abs(back.values - q.values)), 1e-13)

    def test_single_mode_normalisation(self):
        q = field_from_function(self.grid, lambda x1, x2: np.cos(2 * x1 + 3 * x2))
        c = to_spectral(q)
        self.assertAlmostEqual(c.mode(2, 3).real, 0.5, places=14)
        self.assertAlmostEqual(c.mode(-2, -3).real, 0.5, places=14)

    def test_non_finite_samples_rejected(self):
        values = np.zeros(self.grid.shape)
        values[3, 4] = np.nan
        with self.assertRaises(FieldError):
            ScalarField(grid=self.grid, values=values)

    def test_odd_grid_rejected(self):
        with self.assertRaises(ValueError):
            Grid(n1=15, n2=16)


class TestInversion(unittest.TestCase):
    def setUp(self):
        self.grid = Grid.square(32)

    def test_eigenfunction_identities(self):
        for a in (0.5, 1.0):
            for k1, k2 in MODES:
                q = field_from_function(self.grid, lambda x1, x2: np.cos(k1 * x1 + k2 * x2))
                psi = from_spectral(invert_fractional_laplacian(to_spectral(q), a))
                expected = (k1 * k1 + k2 * k2) ** (-a) * q.values
                self.assertLess(np.max(np.abs(psi.values - expected)), 1e-12, f"a={a}, k=({k1},{k2})")

    def test_nonzero_mean_rejected(self):
        q = field_from_function(self.grid, lambda x1, x2: 1.0 + np.sin(x1))
        with self.assertRaises(NonZeroMeanError):
            invert_fractional_laplacian(to_spectral(q), 0.5)

    def test_roundoff_mean_is_zeroed(self):
        q = field_from_function(self.grid, lambda x1, x2: np.sin(x1) + 1e-15)
        psi = invert_fractional_laplacian(to_spectral(q), 1.0)
        self.assertEqual(psi.mean_mode, 0.0)

    def test_unsupported_exponent(self):
        q = field_from_function(self.grid, lambda x1, x2: np.sin(x1))
        with self.assertRaises(ValueError):
            invert_fractional_laplacian(to_spectral(q), 0.75)

    def test_stream_function_follows_kind(self):
        qg = field_from_function(self.grid, lambda x1, x2: np.sin(2 * x1), ScalarKind.QG_THETA)
        euler = qg.model_copy(update={"kind": ScalarKind.EULER_VORTICITY})
        self.assertAlmostEqual(from_spectral(stream_function(qg)).sup, 0.5, places=13)
        self.assertAlmostEqual(from_spectral(stream_function(euler)).sup, 0.25, places=13)


class TestVelocity(unittest.TestCase):
    def setUp(self):
        self.grid = Grid.square(32)

    def test_shear_velocity(self):
        # psi = sin(x2) -> u = (-cos(x2), 0)
        q = field_from_function(self.grid, lambda x1, x2: np.sin(x2), ScalarKind.EULER_VORTICITY)
        u = velocity_from_scalar(q)
        x1, x2 = self.grid.mesh()
        self.assertLess(np.max(np.abs(u.u1 + np.cos(x2))), 1e-13)
        self.assertLess(np.max(np.abs(u.u2)), 1e-13)
        self.assertAlmostEqual(velocity_sup(u), 1.0, places=12)

    def test_divergence_free(self):
        rng = np.random.default_rng(11)
        values = rng.standard_normal(self.grid.shape)
        q = ScalarField(grid=self.grid, values=values - values.mean())
        self.assertLess(spectral_divergence(velocity_from_scalar(q)), 1e-12)


class TestEvaluation(unittest.TestCase):
    def setUp(self):
        self.grid = Grid.square(16)

    def test_off_grid_points(self):
        q = field_from_function(self.grid, lambda x1, x2: np.sin(x1) * np.cos(2 * x2))
        points = np.array([[0.1, 0.2], [1.234, 5.678], [6.2, 3.3]])
        expected = np.sin(points[:, 0]) * np.cos(2 * points[:, 1])
        got = evaluate_field_at(to_spectral(q), points)
        self.assertLess(np.max(np.abs(got - expected)), 1e-13)

    def test_gradient_at_points(self):
        q = field_from_function(self.grid, lambda x1, x2: np.sin(x1) * np.cos(2 * x2))
        points = np.array([[0.3, 0.9], [2.5, 4.1]])
        d1, d2 = evaluate_gradient_at(to_spectral(q), points)
        self.assertLess(np.max(np.abs(d1 - np.cos(points[:, 0]) * np.cos(2 * points[:, 1]))), 1e-12)
        self.assertLess(np.max(np.abs(d2 + 2 * np.sin(points[:, 0]) * np.sin(2 * points[:, 1]))), 1e-12)

    def test_dense_grid_oracle(self):
        rng = np.random.default_rng(5)
        modes = np.zeros(self.grid.shape, dtype=complex)
        for k1 in range(-3, 4):
            for k2 in range(-3, 4):
                modes[k1 % 16, k2 % 16] = rng.standard_normal() + 1j * rng.standard_normal()
        values = np.real(np.fft.ifft2(modes) * modes.size)
        c = to_spectral(ScalarField(grid=self.grid, values=values))
        # oracle: the same band-limited spectrum zero-padded onto an 8x finer grid
        fine = Grid.square(128)
        padded = np.zeros(fine.shape, dtype=complex)
        for k1 in range(-3, 4):
            for k2 in range(-3, 4):
                padded[k1 % 128, k2 % 128] = c.mode(k1, k2)
        fine_values = np.real(np.fft.ifft2(padded) * padded.size)
        idx = [(8, 40), (100, 3), (64, 127)]
        points = [(i * fine.h1, j * fine.h2) for i, j in idx]
        got = evaluate_field_at(c, points)
        expected = [fine_values[i, j] for i, j in idx]
        self.assertLess(np.max(np.abs(got - np.array(expected))), 1e-10)

    def test_bad_points_rejected(self):
        c = to_spectral(field_from_function(self.grid, lambda x1, x2: np.sin(x1)))
        with self.assertRaises(FieldError):
            evaluate_field_at(c, [[np.nan, 0.0]])


class TestNorms(unittest.TestCase):
    def test_taylor_green_norms(self):
        grid = Grid.square(16)
        q = field_from_function(grid, lambda x1, x2: np.sin(x1) * np.sin(x2))
        n = norms(q)
        self.assertAlmostEqual(n.L2, np.pi, places=12)
        self.assertAlmostEqual(n.Linf, 1.0, places=12)
        self.assertAlmostEqual(l2_from_modes(to_spectral(q)), np.pi, places=12)

    def test_energy_and_gradient(self):
        grid = Grid.square(32)
        q = field_from_function(grid, lambda x1, x2: np.sin(x1) * np.sin(x2), ScalarKind.QG_THETA)
        # psi = q / sqrt(2): 0.5 * integral psi q = 0.5 * pi^2 / sqrt(2)
        self.assertAlmostEqual(energy(q), 0.5 * np.pi ** 2 / np.sqrt(2.0), places=11)
        self.assertAlmostEqual(gradient_sup(q), 1.0, places=12)

    def test_zero_field(self):
        grid = Grid.square(8)
        q = ScalarField(grid=grid, values=np.zeros(grid.shape))
        self.assertEqual(norms(q).Linf, 0.0)
        self.assertEqual(q.mean_defect(), 0.0)
        self.assertIsInstance(to_spectral(q), SpectralCoeffs)


if __name__ == "__main__":
    unittest.main()
