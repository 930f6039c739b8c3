import unittest
import sys
import os
import math

import numpy as np

# Add project root to path
sys.path.append(os.path.abspath(os.path.join(os.path.dirname(__file__), "..")))

from app.services.bound_service import (
    fit_bound_envelope,
    gronwall_lower_bound,
    model_for_equation,
    slope_bound,
    transform,
)
from app.utils.errors import Unfittable


class TestEnvelopeFit(unittest.TestCase):
    def setUp(self):
        self.t = np.linspace(0.0, 1.0, 11)

    def test_exact_double_exponential(self):
        values = np.exp(-np.exp(2.0 * self.t + 1.0))
        fit = fit_bound_envelope(self.t, values, "double-exponential")
        self.assertAlmostEqual(fit.A_hat, 2.0, delta=1e-6)
        self.assertAlmostEqual(fit.B_hat, 1.0, delta=1e-6)
        self.assertLessEqual(fit.max_violation, 1e-12)
        self.assertEqual(fit.points_used, 11)
        self.assertEqual(fit.points_excluded, 0)
        self.assertIsNone(fit.slope_bound)
        self.assertIsNone(fit.slope_within_bound)

    def test_exact_exponential(self):
        values = np.exp(-(3.0 * self.t + 0.5))
        fit = fit_bound_envelope(self.t, values, "exponential")
        self.assertAlmostEqual(fit.A_hat, 3.0, delta=1e-9)
        self.assertAlmostEqual(fit.B_hat, 0.5, delta=1e-9)
        self.assertAlmostEqual(fit.empirical_slope, 3.0, delta=1e-9)

    def test_points_above_cutoff_are_excluded(self):
        values = np.array([0.9, 0.5, 0.3, 0.2, 0.1])
        fit = fit_bound_envelope(np.arange(5.0), values, "double-exponential")
        self.assertEqual(fit.points_used, 3)
        self.assertEqual(fit.points_excluded, 2)

    def test_lower_offset_bounds_every_point(self):
        rng = np.random.default_rng(2)
        values = np.exp(-np.exp(1.5 * self.t + 0.2 + 0.05 * rng.standard_normal(self.t.size)))
        fit = fit_bound_envelope(self.t, values, "double-exponential")
        G = transform(values, "double-exponential")
        self.assertTrue(np.all(G <= fit.A_hat * self.t + fit.B_lower + 1e-12))
        self.assertGreaterEqual(fit.B_lower, fit.B_hat)

    def test_collapse_truncates_the_series(self):
        values = np.exp(-(self.t + 1.0))
        values[6] = 0.0
        fit = fit_bound_envelope(self.t, values, "exponential")
        self.assertTrue(fit.collapsed)
        self.assertEqual(fit.points_used, 6)
        self.assertAlmostEqual(fit.A_hat, 1.0, delta=1e-9)

    def test_unfittable(self):
        with self.assertRaises(Unfittable):
            fit_bound_envelope([0.0, 1.0, 2.0], [0.9, 0.8, 0.5], "double-exponential")
        with self.assertRaises(Unfittable):
            fit_bound_envelope([0.0, 1.0], [0.0, 0.0], "exponential")

    def test_misaligned_series(self):
        with self.assertRaises(ValueError):
            fit_bound_envelope([0.0, 1.0], [0.1], "exponential")


class TestGronwall(unittest.TestCase):
    def test_double_exponential_comparison(self):
        out = gronwall_lower_bound(0.1, 1.0, [0.0, 1.0], "double-exponential")
        self.assertAlmostEqual(out[0], 0.1, places=15)
        self.assertAlmostEqual(out[1], 0.1 ** math.e, places=14)

    def test_comparison_solves_the_inequality_with_equality(self):
        t = np.linspace(0.0, 0.5, 2001)
        A = gronwall_lower_bound(0.2, 1.5, t, "double-exponential")
        rate = np.gradient(A, t)
        expected = -1.5 * A * np.abs(np.log(A))
        self.assertLess(np.max(np.abs(rate[1:-1] - expected[1:-1])), 1e-6)

    def test_exponential_comparison(self):
        out = gronwall_lower_bound(0.5, 2.0, [0.0, 1.0], "exponential")
        self.assertAlmostEqual(out[1], 0.5 * math.exp(-2.0), places=15)

    def test_comparison_requires_small_start(self):
        with self.assertRaises(ValueError):
            gronwall_lower_bound(1.5, 1.0, [0.0], "double-exponential")

    def test_slope_bound(self):
        self.assertAlmostEqual(slope_bound(1.0, 0.5, 2.0), 1.0, places=15)
        self.assertIsNone(slope_bound(None, 0.5, 2.0))
        self.assertIsNone(slope_bound(1.0, 0.0, 2.0))

    def test_fit_reports_gronwall_check(self):
        t = np.linspace(0.0, 1.0, 11)
        values = np.exp(-np.exp(2.0 * t + 1.0))
        fit = fit_bound_envelope(t, values, "double-exponential", M=2.5, c_min=1.0, front_length=1.0)
        self.assertAlmostEqual(fit.slope_bound, 2.5, places=15)
        self.assertTrue(fit.slope_within_bound)
        # a faster comparison rate only touches the data at t = 0
        self.assertLessEqual(fit.gronwall_violation, 1e-15)

    def test_model_for_equation(self):
        self.assertEqual(model_for_equation("qg"), "double-exponential")
        self.assertEqual(model_for_equation("euler"), "exponential")


if __name__ == "__main__":
    unittest.main()
