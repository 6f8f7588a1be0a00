import itertools
import math
import unittest

from pilotwave.errors import ValidationError
from pilotwave.experiments.chsh import (
    LOCAL_BOUND,
    OPTIMAL_SETTINGS,
    chsh,
    chsh_from_records,
    chsh_value,
    local_deterministic_chsh_bound,
    setting_pairs,
    singlet_chsh,
    strategy_records,
)
from pilotwave.experiments.eprb import EPRBConfig
from pilotwave.experiments.nogo import UNSATISFIABLE, von_neumann_obstruction
from pilotwave.fields import UnitSystem


class ChshArithmeticTests(unittest.TestCase):

    def test_value(self):
        self.assertEqual(chsh_value(1.0, 1.0, 1.0, -1.0), 4.0)

    def test_setting_pairs(self):
        self.assertEqual(setting_pairs(1, 2, 3, 4), ((1, 3), (1, 4), (2, 3), (2, 4)))

    def test_optimal_settings_reach_tsirelson_bound(self):
        self.assertAlmostEqual(abs(singlet_chsh(*OPTIMAL_SETTINGS)), 2.0 * math.sqrt(2.0))

    def test_antipodal_second_setting_cancels(self):
        self.assertAlmostEqual(singlet_chsh(0.0, math.pi / 2.0, math.pi / 4.0, 3.0 * math.pi / 4.0), 0.0)

    def test_four_records_are_required(self):
        with self.assertRaises(ValidationError):
            chsh_from_records(strategy_records((1, 1, 1, 1))[:3])


class LocalBoundTests(unittest.TestCase):

    def test_every_strategy_is_listed(self):
        report = local_deterministic_chsh_bound()
        self.assertEqual(len(report.rows), 16)
        self.assertEqual(set(row[:4] for row in report.rows), set(itertools.product((1, -1), repeat=4)))

    def test_bound_is_two(self):
        report = local_deterministic_chsh_bound()
        self.assertEqual(report.max_abs, LOCAL_BOUND)
        self.assertTrue(all(abs(row[4]) <= 2 for row in report.rows))

    def test_all_plus_strategy(self):
        rows = {row[:4]: row[4] for row in local_deterministic_chsh_bound().rows}
        self.assertEqual(rows[(1, 1, 1, 1)], 2)

    def test_strategy_records_reproduce_strategy_value(self):
        for row in local_deterministic_chsh_bound().rows:
            with self.subTest(strategy=row[:4]):
                result = chsh_from_records(strategy_records(row[:4], n=3))
                self.assertEqual(result.value, row[4])
                self.assertEqual(result.standard_error, 0.0)
                self.assertFalse(result.exceeds_local_bound())

    def test_summary(self):
        summary = local_deterministic_chsh_bound().summary()
        self.assertEqual(summary["max_abs_S"], 2.0)
        self.assertEqual(len(summary["rows"]), 16)


class SimulatedChshTests(unittest.TestCase):

    def test_optimal_settings_violate_local_bound(self):
        result = chsh(EPRBConfig(n=4000, seed=1), *OPTIMAL_SETTINGS)
        self.assertEqual(len(result.records), 4)
        self.assertAlmostEqual(abs(result.value), 2.0 * math.sqrt(2.0), delta=0.1)
        self.assertTrue(result.exceeds_local_bound(3.0))
        self.assertEqual(result.settings, OPTIMAL_SETTINGS)
        self.assertEqual(len({record.seed for record in result.records}), 4)


class NoGoTests(unittest.TestCase):

    def test_no_assignment_is_admissible(self):
        report = von_neumann_obstruction()
        self.assertEqual(report.verdict, UNSATISFIABLE)
        self.assertEqual(len(report.rows), 4)
        self.assertEqual(report.admissible_count, 0)

    def test_bisector_values(self):
        report = von_neumann_obstruction(UnitSystem(hbar=2.0))
        bisectors = sorted(row.bisector for row in report.rows)
        self.assertAlmostEqual(bisectors[0], -math.sqrt(2.0))
        self.assertAlmostEqual(bisectors[1], 0.0)
        self.assertAlmostEqual(bisectors[3], math.sqrt(2.0))

    def test_summary(self):
        summary = von_neumann_obstruction().summary()
        self.assertEqual(summary["verdict"], "UNSAT")
        self.assertEqual(len(summary["rows"]), 4)


if __name__ == '__main__':
    unittest.main()
