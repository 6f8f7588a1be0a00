import math
import unittest

import numpy as np

from pilotwave.errors import ValidationError
from pilotwave.experiments.doubleslit import (
    DoubleSlitConfig,
    double_slit,
    initial_state,
    interference_minima,
)
from pilotwave.fields import GridSpec, RealField, norm_squared


class DoubleSlitTests(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        cls.result = double_slit(DoubleSlitConfig())

    def test_fringe_spacing_matches_prediction(self):
        cfg = self.result.config
        self.assertAlmostEqual(cfg.predicted_spacing, 2.0 * math.pi * 100.0 / 10.0)
        self.assertGreaterEqual(self.result.minima.size, 2)
        self.assertLess(abs(self.result.fringe_spacing / cfg.predicted_spacing - 1.0), 0.1)

    def test_arrivals_avoid_nodes(self):
        self.assertLess(self.result.node_bin_ratio, 0.05)

    def test_arrivals_stay_on_their_slit_side(self):
        self.assertTrue(self.result.label_consistent)
        self.assertEqual(set(np.unique(self.result.slit_labels)), {-1, 1})

    def test_arrivals_follow_final_density(self):
        self.assertLess(self.result.arrival_tv, 0.05)

    def test_trajectories_are_sampled_every_output_interval(self):
        trajectories = self.result.trajectories
        self.assertEqual(len(trajectories), 100_000)
        np.testing.assert_allclose(trajectories.times, np.arange(0.0, 101.0, 5.0), atol=1e-9)

    def test_summary(self):
        summary = self.result.summary()
        self.assertEqual(summary["screen_distance"], 1000.0)
        self.assertTrue(summary["label_consistent"])
        self.assertEqual(summary["statuses"], {"completed": 100_000})


class DoubleSlitConfigTests(unittest.TestCase):

    def test_slits_too_close_raise_validation_error(self):
        with self.assertRaises(ValidationError):
            DoubleSlitConfig(separation=4.0, sigma=1.0)

    def test_final_width(self):
        cfg = DoubleSlitConfig()
        self.assertAlmostEqual(cfg.spread_time, 50.0)
        self.assertAlmostEqual(cfg.final_width, math.sqrt(1.0 + 2500.0))

    def test_initial_state_is_normalized_and_symmetric(self):
        psi = initial_state(DoubleSlitConfig())
        self.assertAlmostEqual(norm_squared(psi), 1.0, places=12)
        rho = np.abs(psi.values) ** 2
        np.testing.assert_allclose(rho[1:], rho[1:][::-1], atol=1e-15)

    def test_same_seed_reproduces_arrivals(self):
        cfg = DoubleSlitConfig(n=500, flight_time=20.0, seed=4)
        np.testing.assert_array_equal(double_slit(cfg).arrivals, double_slit(cfg).arrivals)


class InterferenceMinimaTests(unittest.TestCase):

    def test_minima_of_cosine_fringes(self):
        grid = GridSpec(-32.0, 32.0, 256)
        (x,) = grid.mesh()
        rho = RealField(grid, 1.0 + 0.9 * np.cos(2.0 * math.pi * x / 8.0))
        minima = interference_minima(rho, 20.0)
        np.testing.assert_allclose(minima, [-12.0, -4.0, 4.0, 12.0], atol=0.02)


if __name__ == '__main__':
    unittest.main()
