import math
import unittest

import numpy as np
from numpy.testing import assert_allclose

from pilotwave.errors import ShapeMismatch, ValidationError
from pilotwave.fields import GridSpec, norm_squared
from pilotwave.experiments.states import (
    analyzer_states,
    check_amplitudes,
    gaussian_packet,
    harmonic_ground_state,
    plane_wave,
    rotated_amplitudes,
    singlet,
    spinor,
)
from pilotwave.propagator import analyzer_direction


PAULI = (
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]]),
    np.array([[1, 0], [0, -1]], dtype=complex),
)


class StateTests(unittest.TestCase):

    def setUp(self):
        self.grid = GridSpec(-16.0, 16.0, 128)

    def test_states_are_normalized(self):
        for psi in (
            plane_wave(self.grid, 2.0 * math.pi / 32.0),
            gaussian_packet(self.grid, 1.0, 2.0, 0.5),
            harmonic_ground_state(self.grid, 2.0),
        ):
            self.assertAlmostEqual(norm_squared(psi), 1.0, places=12)

    def test_gaussian_width(self):
        psi = gaussian_packet(self.grid, 0.0, 2.0)
        (x,) = self.grid.mesh()
        second_moment = np.sum(x ** 2 * np.abs(psi.values) ** 2) * self.grid.cell_volume
        self.assertAlmostEqual(second_moment, 4.0, places=8)

    def test_non_positive_sigma_raises_validation_error(self):
        with self.assertRaises(ValidationError):
            gaussian_packet(self.grid, 0.0, 0.0)

    def test_unnormalized_amplitudes_raise_validation_error(self):
        with self.assertRaises(ValidationError):
            check_amplitudes([1.0, 1.0])

    def test_three_amplitudes_raise_shape_mismatch(self):
        with self.assertRaises(ShapeMismatch):
            check_amplitudes([1.0, 0.0, 0.0])

    def test_spinor_components(self):
        psi = gaussian_packet(self.grid)
        chi = spinor(psi, [0.6, 0.8j])
        assert_allclose(chi.values[1], 0.8j * psi.values)
        self.assertAlmostEqual(norm_squared(chi), 1.0, places=12)

    def test_analyzer_states_are_eigenvectors(self):
        for theta in (0.0, 0.4, math.pi / 2.0, 2.5, 5.0):
            n = analyzer_direction(theta)
            operator = sum(n[i] * PAULI[i] for i in range(3))
            up, down = analyzer_states(theta)
            assert_allclose(operator @ up, up, atol=1e-12)
            assert_allclose(operator @ down, -down, atol=1e-12)

    def test_rotation_takes_up_to_analyzer_up(self):
        up, _ = analyzer_states(1.1)
        assert_allclose(rotated_amplitudes([1.0, 0.0], 1.1), up, atol=1e-12)

    def test_singlet_needs_two_dimensional_grid(self):
        with self.assertRaises(ShapeMismatch):
            singlet(gaussian_packet(self.grid))

    def test_singlet_components(self):
        grid = GridSpec((-8.0, -8.0), (8.0, 8.0), (32, 32))
        pair = singlet(gaussian_packet(grid))
        self.assertEqual(pair.components, 4)
        assert_allclose(pair.values[0], 0.0)
        assert_allclose(pair.values[1], -pair.values[2])


if __name__ == '__main__':
    unittest.main()
