import unittest

import numpy as np
from numpy.testing import assert_allclose, assert_array_equal
from scipy import stats

from pilotwave.equilibrium import (
    HistogramDensity,
    cell_density,
    density_histogram,
    equivariance_report,
    histogram,
    occupied_edges,
    sample_density,
    scaling_exponent,
    total_variation,
)
from pilotwave.errors import BinMismatch, DegenerateDensity, EmptyInput, ValidationError
from pilotwave.fields import GridSpec, RealField, probability_density
from pilotwave.experiments.states import gaussian_packet, singlet
from pilotwave.propagator import FREE, PropagatorConfig, evolve


class SamplerTests(unittest.TestCase):

    def test_uniform_density(self):
        grid = GridSpec(0.0, 1.0, 64)
        samples = sample_density(RealField(grid, np.ones(64)), 100_000, seed=3)
        self.assertEqual(samples.points.shape, (100_000, 1))
        self.assertLess(stats.kstest(samples.points[:, 0], "uniform").statistic, 0.01)
        self.assertTrue(np.all((samples.points >= 0.0) & (samples.points < 1.0)))

    def test_single_node_density_stays_in_its_cell(self):
        grid = GridSpec(0.0, 16.0, 16)
        values = np.zeros(16)
        values[5] = 1.0
        rho = RealField(grid, values)
        samples = sample_density(rho, 5000, seed=1)
        self.assertTrue(np.all((samples.points >= 5.0) & (samples.points < 6.0)))
        masses = histogram(samples, np.arange(17.0)).masses
        assert_array_equal(np.flatnonzero(masses), [5])
        self.assertEqual(masses[5], 1.0)
        assert_allclose(density_histogram(rho, np.arange(17.0)).masses, masses)

    def test_samples_are_uniform_inside_a_cell(self):
        grid = GridSpec(0.0, 16.0, 16)
        values = np.zeros(16)
        values[5] = 1.0
        samples = sample_density(RealField(grid, values), 20_000, seed=2)
        self.assertLess(stats.kstest(samples.points[:, 0] - 5.0, "uniform").statistic, 0.02)

    def test_two_dimensional_single_cell(self):
        grid = GridSpec((0.0, 0.0), (16.0, 16.0), (16, 16))
        values = np.zeros((16, 16))
        values[3, 11] = 2.0
        samples = sample_density(RealField(grid, values), 2000, seed=4)
        self.assertTrue(np.all((samples.points[:, 0] >= 3.0) & (samples.points[:, 0] < 4.0)))
        self.assertTrue(np.all((samples.points[:, 1] >= 11.0) & (samples.points[:, 1] < 12.0)))

    # each node's mass fills the cell above it, so the samples sit half a cell higher
    def test_gaussian_matches_normal_distribution(self):
        grid = GridSpec(-16.0, 16.0, 256)
        rho = probability_density(gaussian_packet(grid, 1.0, 1.5))
        samples = sample_density(rho, 100_000, seed=11)
        expected = stats.norm(1.0 + 0.5 * grid.spacing[0], 1.5)
        self.assertLess(stats.kstest(samples.points[:, 0], expected.cdf).statistic, 0.01)

    def test_two_dimensional_marginals(self):
        grid = GridSpec((-8.0, -8.0), (8.0, 8.0), (128, 128))
        rho = probability_density(gaussian_packet(grid, (0.5, -1.0), (1.0, 0.7)))
        samples = sample_density(rho, 100_000, seed=5)
        self.assertEqual(samples.points.shape, (100_000, 2))
        first = stats.norm(0.5 + 0.5 * grid.spacing[0], 1.0)
        second = stats.norm(-1.0 + 0.5 * grid.spacing[1], 0.7)
        self.assertLess(stats.kstest(samples.points[:, 0], first.cdf).statistic, 0.01)
        self.assertLess(stats.kstest(samples.points[:, 1], second.cdf).statistic, 0.01)

    def test_two_dimensional_conditional_follows_correlation(self):
        grid = GridSpec((-8.0, -8.0), (8.0, 8.0), (128, 128))
        x, y = grid.mesh()
        rho = RealField(grid, np.exp(-(x ** 2 - 1.2 * x * y + y ** 2) / 2.0))
        samples = sample_density(rho, 50_000, seed=9)
        correlation = np.corrcoef(samples.points.T)[0, 1]
        self.assertAlmostEqual(correlation, 0.6, delta=0.02)

    def test_same_seed_reproduces_samples(self):
        grid = GridSpec(-8.0, 8.0, 64)
        rho = probability_density(gaussian_packet(grid))
        first = sample_density(rho, 1000, seed=42)
        second = sample_density(rho, 1000, seed=42)
        assert_array_equal(first.points, second.points)
        self.assertEqual(first.source, second.source)

    def test_different_seeds_differ(self):
        grid = GridSpec(-8.0, 8.0, 64)
        rho = probability_density(gaussian_packet(grid))
        self.assertFalse(np.array_equal(
            sample_density(rho, 100, seed=1).points,
            sample_density(rho, 100, seed=2).points,
        ))

    def test_zero_density_raises_degenerate_density(self):
        grid = GridSpec(-8.0, 8.0, 64)
        with self.assertRaises(DegenerateDensity):
            sample_density(RealField(grid, np.zeros(64)), 10, seed=0)

    def test_negative_density_raises_validation_error(self):
        grid = GridSpec(-8.0, 8.0, 64)
        with self.assertRaises(ValidationError):
            sample_density(RealField(grid, -np.ones(64)), 10, seed=0)

    def test_non_positive_count_raises_validation_error(self):
        grid = GridSpec(-8.0, 8.0, 64)
        with self.assertRaises(ValidationError):
            sample_density(RealField(grid, np.ones(64)), 0, seed=0)


class CellDensityTests(unittest.TestCase):

    def test_gaussian_at_cell_centres(self):
        grid = GridSpec(-16.0, 16.0, 128)
        psi = gaussian_packet(grid, 0.5, 1.0, 2.0)
        (x,) = grid.mesh()
        centres = x + 0.5 * grid.spacing[0]
        expected = np.exp(-(centres - 0.5) ** 2 / 2.0) / np.sqrt(2.0 * np.pi)
        assert_allclose(cell_density(psi).values, expected, atol=1e-10)

    def test_two_dimensional_spinor(self):
        grid = GridSpec((-8.0, -8.0), (8.0, 8.0), (64, 64))
        pair = singlet(gaussian_packet(grid))
        x, y = grid.mesh()
        dx, dy = grid.spacing
        expected = np.exp(-((x + 0.5 * dx) ** 2 + (y + 0.5 * dy) ** 2) / 2.0) / (2.0 * np.pi)
        assert_allclose(cell_density(pair).values, expected, atol=1e-10)

    def test_samples_follow_the_continuous_density(self):
        grid = GridSpec(-16.0, 16.0, 128)
        samples = sample_density(cell_density(gaussian_packet(grid, 1.0, 1.5)), 100_000, seed=11)
        self.assertLess(stats.kstest(samples.points[:, 0], stats.norm(1.0, 1.5).cdf).statistic, 0.01)


class HistogramTests(unittest.TestCase):

    def test_all_samples_in_one_bin(self):
        h = histogram(np.full(10, 3.5), np.arange(6.0))
        assert_allclose(h.masses, [0.0, 0.0, 0.0, 1.0, 0.0])

    def test_masses_are_fractions(self):
        h = histogram([0.25, 0.75, 0.8, 0.1], [0.0, 0.5, 1.0])
        assert_allclose(h.masses, [0.5, 0.5])
        self.assertEqual(h.clipped, 0)

    def test_outside_samples_are_clipped_and_logged(self):
        with self.assertLogs("pilotwave.equilibrium", level="WARNING"):
            h = histogram([-1.0, 0.25, 2.0], [0.0, 0.5, 1.0])
        self.assertEqual(h.clipped, 2)
        assert_allclose(h.masses, [2.0 / 3.0, 1.0 / 3.0])

    def test_empty_samples_raise_empty_input(self):
        with self.assertRaises(EmptyInput):
            histogram(np.empty(0), [0.0, 1.0])

    def test_decreasing_edges_raise_validation_error(self):
        with self.assertRaises(ValidationError):
            histogram([0.5], [1.0, 0.0])

    def test_two_dimensional_histogram(self):
        points = np.array([[0.1, 0.1], [0.9, 0.1], [0.9, 0.9], [0.8, 0.7]])
        h = histogram(points, ([0.0, 0.5, 1.0], [0.0, 0.5, 1.0]))
        assert_allclose(h.masses, [[0.25, 0.0], [0.25, 0.5]])

    def test_masses_must_sum_to_one(self):
        with self.assertRaises(ValidationError):
            HistogramDensity((np.array([0.0, 1.0, 2.0]),), np.array([0.5, 0.4]))


class TotalVariationTests(unittest.TestCase):

    def density(self, masses):
        return HistogramDensity((np.arange(len(masses) + 1.0),), np.array(masses))

    def test_identical_histograms(self):
        self.assertEqual(total_variation(self.density([0.2, 0.8]), self.density([0.2, 0.8])), 0.0)

    def test_disjoint_histograms(self):
        self.assertEqual(total_variation(self.density([1.0, 0.0]), self.density([0.0, 1.0])), 1.0)

    def test_half_the_l1_distance(self):
        self.assertAlmostEqual(total_variation(self.density([1.0, 0.0]), self.density([0.5, 0.5])), 0.5)

    def test_symmetric(self):
        p, q = self.density([0.1, 0.3, 0.6]), self.density([0.4, 0.4, 0.2])
        self.assertEqual(total_variation(p, q), total_variation(q, p))

    def test_invariant_under_relabelling_bins(self):
        p, q = [0.1, 0.3, 0.6], [0.4, 0.4, 0.2]
        order = [2, 0, 1]
        self.assertAlmostEqual(
            total_variation(self.density(p), self.density(q)),
            total_variation(self.density([p[i] for i in order]), self.density([q[i] for i in order])),
        )

    def test_different_binning_raises_bin_mismatch(self):
        p = HistogramDensity((np.array([0.0, 1.0, 2.0]),), np.array([0.5, 0.5]))
        q = HistogramDensity((np.array([0.0, 1.0, 3.0]),), np.array([0.5, 0.5]))
        with self.assertRaises(BinMismatch):
            total_variation(p, q)


class DensityHistogramTests(unittest.TestCase):

    def test_uniform_density_gives_equal_masses(self):
        grid = GridSpec(0.0, 1.0, 64)
        h = density_histogram(RealField(grid, np.ones(64)), np.linspace(0.0, 1.0, 9))
        assert_allclose(h.masses, 1.0 / 8.0)

    def test_gaussian_bins_match_normal_distribution(self):
        grid = GridSpec(-16.0, 16.0, 512)
        rho = probability_density(gaussian_packet(grid, 0.0, 1.0))
        edges = np.linspace(-4.0, 4.0, 17)
        h = density_histogram(rho, edges)
        expected = np.diff(stats.norm.cdf(edges - 0.5 * grid.spacing[0]))
        assert_allclose(h.masses, expected / expected.sum(), atol=1e-3)

    def test_occupied_edges_cover_the_density(self):
        grid = GridSpec(-16.0, 16.0, 256)
        rho = probability_density(gaussian_packet(grid, 2.0, 1.0))
        (edges,) = occupied_edges(rho, bins=32)
        self.assertEqual(edges.size, 33)
        self.assertLess(edges[0], 2.0 - 6.0)
        self.assertGreater(edges[-1], 2.0 + 6.0)
        self.assertGreater(edges[0], -16.0)

    def test_sampling_noise_at_start(self):
        grid = GridSpec(-16.0, 16.0, 256)
        rho = probability_density(gaussian_packet(grid, 0.0, 1.0))
        edges = occupied_edges(rho)
        samples = sample_density(rho, 100_000, seed=0)
        self.assertLess(total_variation(histogram(samples, edges), density_histogram(rho, edges)), 0.02)


class EquivarianceTests(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        cls.grid = GridSpec(-32.0, 32.0, 256)
        cls.psi = gaussian_packet(cls.grid, 0.0, 1.0)
        cls.record = evolve(cls.psi, FREE, PropagatorConfig(0.1, 20, 1))

    def test_free_gaussian_stays_in_equilibrium(self):
        report = equivariance_report(self.psi, self.record, 100_000, seed=0, times=[0.0, 1.0, 2.0])
        self.assertEqual(len(report.rows), 3)
        self.assertLess(report.worst, 0.03)
        self.assertEqual(report.trajectories.positions.shape, (100_000, 3, 1))

    def test_distance_shrinks_as_inverse_square_root(self):
        ns = (1000, 10_000, 100_000)
        tvs = []
        for n in ns:
            runs = [
                equivariance_report(self.psi, self.record, n, seed=s, times=[0.0]).worst
                for s in range(5)
            ]
            tvs.append(np.mean(runs))
        exponent = scaling_exponent(ns, tvs)
        self.assertTrue(-0.6 <= exponent <= -0.4, exponent)

    def test_times_must_be_stored_frames(self):
        with self.assertRaises(ValidationError):
            equivariance_report(self.psi, self.record, 100, seed=0, times=[0.05])

    def test_scaling_exponent_of_exact_power_law(self):
        ns = np.array([10.0, 100.0, 1000.0])
        self.assertAlmostEqual(scaling_exponent(ns, 3.0 / np.sqrt(ns)), -0.5)

    def test_scaling_exponent_needs_two_points(self):
        with self.assertRaises(ValidationError):
            scaling_exponent([10], [0.1])


if __name__ == '__main__':
    unittest.main()
