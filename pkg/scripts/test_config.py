import unittest
import sys
import os
from pathlib import Path

# Add project root to path
sys.path.append(os.path.abspath(os.path.join(os.path.dirname(__file__), "..")))

from app.models.run_config import FrontConfig, ModulusConfig
from app.services.config_service import dump_config, format_value, parse_config
from app.utils.errors import ConfigError

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"

MINIMAL = """\
equation = qg
resolution = 128
scenario = saddle
t_end = 1
"""


class TestParseConfig(unittest.TestCase):
    def _errors(self, text):
        with self.assertRaises(ConfigError) as ctx:
            parse_config(text)
        return ctx.exception.errors

    def test_minimal_config_fills_defaults(self):
        config = parse_config(MINIMAL)
        self.assertEqual(config.equation, "qg")
        self.assertEqual(config.resolution, (128, 128))
        self.assertEqual(config.scenario.name, "saddle")
        self.assertEqual(config.scenario.params, {})
        self.assertEqual(config.solver.t_end, 1.0)
        self.assertEqual(config.solver.dt_init, 1e-3)
        self.assertEqual(config.solver.cfl, 0.5)
        self.assertEqual(config.solver.dealias, "two-thirds")
        self.assertEqual(config.output_dir, "runs/default")
        self.assertEqual(config.seed, 0)
        self.assertIsNone(config.front)
        self.assertIsNone(config.modulus)
        self.assertIsNone(config.checkpoint_every)

    def test_echo_dump_shows_defaults(self):
        text = dump_config(parse_config(MINIMAL))
        for line in ("equation = qg", "resolution = 128, 128", "dt_init = 0.001", "t_end = 1.0",
                     "dealias = two-thirds", "reverse_velocity = false", "name = saddle"):
            self.assertIn(line, text.splitlines())

    def test_round_trip(self):
        for path in sorted(CONFIG_DIR.glob("*.ini")):
            config = parse_config(path.read_text(encoding="utf-8"))
            self.assertEqual(parse_config(dump_config(config)), config, path.name)

    def test_sections_and_pairs(self):
        config = parse_config((CONFIG_DIR / "sheared_two_band_euler.ini").read_text(encoding="utf-8"))
        self.assertEqual(config.equation, "euler")
        self.assertEqual(config.scenario.name, "sheared-two-band")
        self.assertEqual(config.scenario.params, {"d": 1.0, "w": 0.25, "amp": 0.3})
        self.assertIsInstance(config.front, FrontConfig)
        self.assertEqual(config.front.bracket2, (3.141592653589793, 4.641592653589793))
        self.assertIsInstance(config.modulus, ModulusConfig)
        self.assertEqual(config.modulus.pair_count, 5000)

    def test_rectangular_resolution(self):
        config = parse_config(MINIMAL.replace("resolution = 128", "resolution = 64, 32"))
        self.assertEqual(config.resolution, (64, 32))
        self.assertEqual(config.grid.shape, (64, 32))

    def test_hyperviscosity_keys(self):
        text = MINIMAL + "\n[solver]\ndissipation = hyperviscous\nnu = 1e-8\np = 2\n"
        config = parse_config(text)
        self.assertEqual(config.solver.nu, 1e-8)
        self.assertEqual(config.solver.hyperviscosity.p, 2)

    def test_unsupported_equation(self):
        errors = self._errors(MINIMAL.replace("qg", "mhd"))
        self.assertTrue(any("unsupported equation" in e for e in errors), errors)

    def test_window_order_names_the_field(self):
        text = MINIMAL + "\n[front]\nG1 = 0.9\nG2 = 0.8\nwindow = 2.0, 1.0\nbracket = 0.0, 1.5\n"
        errors = self._errors(text)
        self.assertTrue(any(e.startswith("front.window") for e in errors), errors)

    def test_equal_contours_rejected(self):
        text = MINIMAL + "\n[front]\nG1 = 0.5\nG2 = 0.5\nwindow = 0, 1\nbracket = 0, 1\n"
        errors = self._errors(text)
        self.assertTrue(any("distinct" in e for e in errors), errors)

    def test_all_errors_reported_together(self):
        text = "equation = qg\nresolution = 63\nscenario = saddle\ncolour = blue\n\n[plots]\nx = 1\n"
        errors = self._errors(text)
        self.assertTrue(any("[plots]" in e for e in errors), errors)
        self.assertTrue(any(e.startswith("colour") for e in errors), errors)
        self.assertTrue(any(e.startswith("resolution") for e in errors), errors)

    def test_missing_required_keys(self):
        errors = self._errors("resolution = 64\n")
        self.assertTrue(any(e.startswith("equation") for e in errors), errors)
        self.assertTrue(any(e.startswith("scenario") for e in errors), errors)

    def test_unknown_scenario_and_parameter(self):
        errors = self._errors(MINIMAL.replace("saddle", "vortex-sheet"))
        self.assertTrue(any("unknown scenario 'vortex-sheet'" in e for e in errors), errors)
        text = "equation = qg\nresolution = 64\n\n[scenario]\nname = shear\nwidth = 2\n"
        errors = self._errors(text)
        self.assertTrue(any("width" in e for e in errors), errors)

    def test_duplicate_solver_key(self):
        errors = self._errors(MINIMAL + "\n[solver]\nt_end = 2\n")
        self.assertIn("solver.t_end: given twice", errors)

    def test_syntax_error(self):
        errors = self._errors("[run\nequation = qg\n")
        self.assertTrue(errors[0].startswith("syntax:"), errors)

    def test_byte_order_mark_is_ignored(self):
        self.assertEqual(parse_config("\ufeff" + MINIMAL), parse_config(MINIMAL))

    def test_format_value(self):
        self.assertEqual(format_value(True), "true")
        self.assertEqual(format_value(0.1), "0.1")
        self.assertEqual(format_value((0.0, 1.5)), "0.0, 1.5")
        self.assertEqual(format_value(128), "128")


if __name__ == "__main__":
    unittest.main()
