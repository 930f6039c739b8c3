import unittest
import sys
import os
import math

import numpy as np

# Add project root to path
sys.path.append(os.path.abspath(os.path.join(os.path.dirname(__file__), "..")))

from app.models.field import Grid, ScalarField, ScalarKind, SpectralCoeffs
from app.models.modulus import PairPlan, PointPair, torus_distance
from app.models.solver import SolverConfig
from app.services.evolve_service import initial_state, run
from app.services.kernel_service import kernel_split
from app.services.modulus_service import (
    ModulusMonitor,
    estimate_modulus,
    generate_pairs,
    lipschitz_data_ratio,
    psi_difference,
)
from app.services.spectral_service import field_from_function, norms, stream_function, to_spectral
from app.utils.errors import EmptyPairPlan


def _random_psi(grid, seed=7, band=4):
    rng = np.random.default_rng(seed)
    modes = np.zeros(grid.shape, dtype=complex)
    for k1 in range(-band, band + 1):
        for k2 in range(-band, band + 1):
            modes[k1 % grid.n1, k2 % grid.n2] = rng.standard_normal() + 1j * rng.standard_normal()
    modes[0, 0] = 0.0
    values = np.real(np.fft.ifft2(modes) * modes.size)
    return ScalarField(grid=grid, values=values)


class TestPsiDifference(unittest.TestCase):
    def setUp(self):
        self.grid = Grid.square(32)

    def test_unit_difference(self):
        psi = to_spectral(field_from_function(self.grid, lambda x1, x2: np.sin(x1)))
        pair = PointPair(z1=(math.pi / 2, 0.0), z2=(0.0, 0.0))
        self.assertAlmostEqual(psi_difference(psi, pair), 1.0, places=13)
        self.assertAlmostEqual(pair.tau, math.pi / 2, places=15)

    def test_antisymmetric(self):
        psi = to_spectral(_random_psi(self.grid))
        pair = PointPair(z1=(0.3, 1.7), z2=(2.9, 5.1))
        self.assertAlmostEqual(psi_difference(psi, pair), -psi_difference(psi, pair.swapped()), places=13)

    def test_translation_invariance(self):
        q = _random_psi(self.grid)
        shifted = q.with_values(np.roll(q.values, (3, 5), axis=(0, 1)))
        pair = PointPair(z1=(0.4, 2.2), z2=(0.41, 2.23))
        offset = (3 * self.grid.h1, 5 * self.grid.h2)
        before = psi_difference(stream_function(q), pair)
        after = psi_difference(stream_function(shifted), pair.shifted(offset))
        self.assertLess(abs(before - after), 1e-12)

    def test_torus_distance_uses_minimum_image(self):
        self.assertAlmostEqual(float(torus_distance((0.05, 0.0), (2 * math.pi - 0.05, 0.0))), 0.1, places=12)
        pair = PointPair(z1=(0.01, 6.28), z2=(6.27, 0.02))
        self.assertLess(pair.tau, 0.1)
        self.assertTrue(pair.in_log_lipschitz_regime)


class TestPairPlan(unittest.TestCase):
    def test_log_uniform_taus(self):
        plan = PairPlan(pair_count=500, tau_floor=1e-6, seed=3)
        pairs = generate_pairs(plan)
        self.assertEqual(len(pairs), 500)
        taus = np.array([p.tau for p in pairs])
        self.assertTrue(np.all(taus >= 1e-6 * (1 - 1e-6)))
        self.assertTrue(np.all(taus <= math.exp(-1.0) + 1e-12))
        # log-uniform: roughly half of the pairs below the geometric midpoint
        below = np.count_nonzero(taus < math.sqrt(1e-6 * math.exp(-1.0)))
        self.assertGreater(below, 175)
        self.assertLess(below, 325)

    def test_pairs_concentrate_around_centers(self):
        plan = PairPlan(pair_count=200, centers=[(1.0, 2.0)], center_radius=0.1)
        for pair in generate_pairs(plan):
            self.assertLessEqual(abs(pair.z1[0] - 1.0), 0.1 + 1e-12)
            self.assertLessEqual(abs(pair.z1[1] - 2.0), 0.1 + 1e-12)

    def test_same_seed_same_pairs(self):
        plan = PairPlan(pair_count=50, seed=11)
        self.assertEqual(generate_pairs(plan), generate_pairs(plan))
        self.assertNotEqual(generate_pairs(plan), generate_pairs(plan.model_copy(update={"seed": 12})))


class TestEstimateModulus(unittest.TestCase):
    def setUp(self):
        self.grid = Grid.square(64)
        self.plan = PairPlan(pair_count=2000, seed=1)

    def test_smooth_stream_function_is_slack(self):
        psi = to_spectral(field_from_function(self.grid, lambda x1, x2: np.sin(x1)))
        qg = estimate_modulus(psi, ScalarKind.QG_THETA, self.plan)
        self.assertLessEqual(qg.M_hat, 1.0)
        self.assertGreater(qg.M_hat, 0.0)
        euler = estimate_modulus(psi, ScalarKind.EULER_VORTICITY, self.plan)
        self.assertLessEqual(euler.M_hat, 1.0 + 1e-8)
        self.assertEqual(qg.kind, "qg")
        self.assertEqual(euler.kind, "euler")

    def test_zero_stream_function(self):
        psi = SpectralCoeffs(grid=self.grid, modes=np.zeros(self.grid.shape, dtype=complex))
        estimate = estimate_modulus(psi, ScalarKind.QG_THETA, self.plan)
        self.assertEqual(estimate.M_hat, 0.0)

    def test_scaling_is_exact(self):
        psi = to_spectral(_random_psi(self.grid))
        once = estimate_modulus(psi, ScalarKind.QG_THETA, self.plan)
        twice = estimate_modulus(psi.scaled(2.0), ScalarKind.QG_THETA, self.plan)
        self.assertEqual(twice.M_hat, 2.0 * once.M_hat)
        self.assertEqual(twice.worst_pair, once.worst_pair)

    def test_every_pair_respects_the_estimate(self):
        psi = to_spectral(_random_psi(self.grid))
        estimate = estimate_modulus(psi, ScalarKind.QG_THETA, self.plan, keep_pairs=True)
        table = estimate.pair_table
        self.assertEqual(len(table), 2000)
        bound = estimate.M_hat * table["tau"] * np.abs(np.log(table["tau"]))
        self.assertTrue(np.all(np.abs(table["psi_diff"]) <= bound * (1 + 1e-12)))
        worst = table["ratio"].idxmax()
        self.assertEqual(table["ratio"][worst], estimate.M_hat)
        self.assertAlmostEqual(table["tau"][worst], estimate.worst_ratio_tau, places=15)

    def test_deterministic(self):
        psi = to_spectral(_random_psi(self.grid))
        a = estimate_modulus(psi, ScalarKind.QG_THETA, self.plan)
        b = estimate_modulus(psi, ScalarKind.QG_THETA, self.plan)
        self.assertEqual(a.M_hat, b.M_hat)
        self.assertEqual(a.worst_pair, b.worst_pair)

    def test_empty_plan(self):
        psi = to_spectral(_random_psi(self.grid))
        with self.assertRaises(EmptyPairPlan):
            estimate_modulus(psi, ScalarKind.QG_THETA, PairPlan(pair_count=0))
        with self.assertRaises(EmptyPairPlan):
            estimate_modulus(psi, ScalarKind.QG_THETA, PairPlan(tau_floor=0.3, tau_max=0.2))

    def test_qg_split_at_the_worst_pair(self):
        theta = field_from_function(self.grid, lambda x1, x2: np.sin(x1) * np.sin(x2))
        psi = stream_function(theta)
        plain = estimate_modulus(psi, ScalarKind.QG_THETA, self.plan)
        self.assertEqual(plain.split, [])
        estimate = estimate_modulus(psi, ScalarKind.QG_THETA, self.plan, theta=theta)
        self.assertEqual(len(estimate.split), 1)
        split = estimate.split[0]
        self.assertAlmostEqual(split.tau, estimate.worst_ratio_tau, delta=1e-12)
        expected = kernel_split(theta, estimate.worst_pair)
        self.assertAlmostEqual(split.I2, expected.I2, delta=1e-12)
        self.assertEqual(len(estimate_modulus(psi, ScalarKind.QG_THETA, self.plan, theta=theta, split_count=3).split), 3)

    def test_euler_has_no_split(self):
        omega = field_from_function(self.grid, lambda x1, x2: np.sin(x1) * np.sin(x2), ScalarKind.EULER_VORTICITY)
        estimate = estimate_modulus(stream_function(omega), ScalarKind.EULER_VORTICITY, self.plan, theta=omega)
        self.assertEqual(estimate.split, [])

    def test_lipschitz_data_ratio(self):
        omega = field_from_function(self.grid, lambda x1, x2: np.sin(x1) * np.sin(x2), ScalarKind.EULER_VORTICITY)
        ratio = lipschitz_data_ratio(stream_function(omega), omega, self.plan)
        # |grad psi| <= 1/2
        n = norms(omega)
        self.assertGreater(ratio, 0.0)
        self.assertLessEqual(ratio, 0.5 / (n.L1 + n.Linf) * (1 + 1e-8))
        self.assertAlmostEqual(n.L1, 16.0, delta=0.05)


class TestModulusMonitor(unittest.TestCase):
    def test_schedule_follows_interval(self):
        grid = Grid.square(32)
        q = field_from_function(grid, lambda x1, x2: np.sin(x2))
        requested = []

        def centers():
            requested.append(True)
            return [(1.0, 0.5)]

        monitor = ModulusMonitor(PairPlan(pair_count=100), every=0.5, centers_from=centers)
        run(initial_state(q), SolverConfig(dt_init=0.05, t_end=1.0, snapshot_interval=0.25), [monitor])
        self.assertEqual([r.t for r in monitor.records], [0.0, 0.5, 1.0])
        self.assertEqual(len(requested), 3)
        self.assertEqual(monitor.max_estimate, max(r.estimate.M_hat for r in monitor.records))

    def test_rejects_bad_interval(self):
        with self.assertRaises(ValueError):
            ModulusMonitor(PairPlan(), every=0.0)

    def test_empty_monitor(self):
        self.assertIsNone(ModulusMonitor(PairPlan(), every=1.0).max_estimate)


if __name__ == "__main__":
    unittest.main()
