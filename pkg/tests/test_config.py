import math
import os
import tempfile
import unittest

from pilotwave.cli.config import TABLES, parse_bool, parse_config, parse_float, parse_text
from pilotwave.errors import IoError, MissingRequired, ParameterTypeError, UnknownKey


class ConfigFileMixin:

    def setUp(self):
        self._directory = tempfile.TemporaryDirectory()
        self.addCleanup(self._directory.cleanup)

    def config_file(self, text):
        path = os.path.join(self._directory.name, "run.conf")
        with open(path, "w", encoding="utf-8") as config_file:
            config_file.write(text)
        return path


class ParseConfigTests(ConfigFileMixin, unittest.TestCase):

    def test_defaults(self):
        config = parse_config("evolve")
        self.assertEqual(config.points, 256)
        self.assertEqual(config.seed, 0)
        self.assertFalse(config.render)
        self.assertEqual(set(config.sources.values()), {"default"})

    def test_file_overrides_default(self):
        config = parse_config("evolve", self.config_file("sigma = 2.5\n"))
        self.assertEqual(config.sigma, 2.5)
        self.assertEqual(config.sources["sigma"], "file")

    def test_flag_overrides_file(self):
        path = self.config_file("seed = 42\n")
        config = parse_config("evolve", path, {"seed": "7"})
        self.assertEqual(config.seed, 7)
        self.assertEqual(config.sources["seed"], "flag")

    def test_unset_flags_are_ignored(self):
        config = parse_config("evolve", self.config_file("seed = 42\n"), {"seed": None})
        self.assertEqual(config.seed, 42)

    def test_comments_and_blank_lines_are_skipped(self):
        path = self.config_file("# a run\n\npoints = 128  # finer\n")
        self.assertEqual(parse_config("evolve", path).points, 128)

    def test_points_must_be_a_power_of_two(self):
        path = self.config_file("seed = 1\npoints = 100\n")
        with self.assertRaises(ParameterTypeError) as context:
            parse_config("evolve", path)
        self.assertEqual(context.exception.line, 2)
        self.assertEqual(context.exception.key, "points")
        self.assertIn("power of two", str(context.exception))
        self.assertEqual(context.exception.code, "TypeError")

    def test_unknown_key_reports_line(self):
        path = self.config_file("\n\ncolour = blue\n")
        with self.assertRaises(UnknownKey) as context:
            parse_config("evolve", path)
        self.assertEqual(context.exception.key, "colour")
        self.assertEqual(context.exception.line, 3)

    def test_unknown_flag(self):
        with self.assertRaises(UnknownKey):
            parse_config("nogo", overrides={"seed": "1"})

    def test_bad_float(self):
        with self.assertRaises(ParameterTypeError):
            parse_config("evolve", overrides={"sigma": "wide"})

    def test_negative_width(self):
        with self.assertRaises(ParameterTypeError):
            parse_config("evolve", overrides={"sigma": "-1"})

    def test_unknown_choice(self):
        with self.assertRaises(ParameterTypeError):
            parse_config("eprb", overrides={"order": "sideways"})

    def test_missing_separator(self):
        with self.assertRaises(ParameterTypeError):
            parse_config("evolve", self.config_file("points 128\n"))

    def test_missing_required(self):
        with self.assertRaises(MissingRequired) as context:
            parse_config("nonlocality-probe")
        self.assertEqual(context.exception.key, "b_alt")

    def test_nonlocality_probe_defaults(self):
        config = parse_config("nonlocality-probe", overrides={"b_alt": "pi/2"})
        self.assertEqual(config.order, "side2-first")
        self.assertEqual(config.n, 2000)
        self.assertAlmostEqual(config.b_alt, math.pi / 2.0)

    def test_chsh_defaults_are_optimal_settings(self):
        config = parse_config("chsh")
        self.assertEqual((config.a, config.a_alt, config.b), (0.0, math.pi / 2.0, math.pi / 4.0))
        self.assertAlmostEqual(config.b_alt, 7.0 * math.pi / 4.0)

    def test_missing_config_file_raises_io_error(self):
        with self.assertRaises(IoError):
            parse_config("evolve", os.path.join(self._directory.name, "absent.conf"))

    def test_every_subcommand_has_a_table(self):
        self.assertEqual(
            set(TABLES),
            {"evolve", "trajectories", "equivariance", "double-slit", "stern-gerlach",
             "eprb", "chsh", "nonlocality-probe", "nogo"},
        )


class ValueParsingTests(unittest.TestCase):

    def test_multiples_of_pi(self):
        self.assertAlmostEqual(parse_float("pi"), math.pi)
        self.assertAlmostEqual(parse_float("pi/4"), math.pi / 4.0)
        self.assertAlmostEqual(parse_float("7pi/4"), 7.0 * math.pi / 4.0)
        self.assertAlmostEqual(parse_float("0.5*pi"), math.pi / 2.0)
        self.assertAlmostEqual(parse_float("-pi/2"), -math.pi / 2.0)

    def test_plain_floats(self):
        self.assertEqual(parse_float(" 1e-3 "), 1e-3)

    def test_non_finite_floats_are_rejected(self):
        with self.assertRaises(ValueError):
            parse_float("inf")

    def test_booleans(self):
        self.assertTrue(parse_bool("yes"))
        self.assertFalse(parse_bool("0"))
        with self.assertRaises(ValueError):
            parse_bool("maybe")

    def test_parse_text_returns_only_given_keys(self):
        values = parse_text(["n = 10", "order = simultaneous"], TABLES["eprb"])
        self.assertEqual(values, {"n": 10, "order": "simultaneous"})


if __name__ == '__main__':
    unittest.main()
