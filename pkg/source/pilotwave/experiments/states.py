"""Initial wave functions for the canned experiments."""
import math

import numpy as np

from pilotwave.errors import ShapeMismatch, ValidationError
from pilotwave.fields import DEFAULT_UNITS, ScalarField, SpinorField, normalize

SPINOR_TOLERANCE = 1e-10


def _per_axis(value, dims, name):
    values = np.broadcast_to(np.asarray(value, dtype=float), (dims,))
    if not np.all(np.isfinite(values)):
        raise ValidationError(f"{name} must be finite")
    return values


def plane_wave(grid, k):
    """exp(i k.x), normalized over the grid; k should be a grid wavenumber for periodicity."""
    k = _per_axis(k, grid.dims, "k")
    phase = sum(k[a] * x for a, x in enumerate(grid.mesh()))
    return normalize(ScalarField(grid, np.exp(1j * phase)))


def gaussian_packet(grid, center=0.0, sigma=1.0, k=0.0):
    """A product of Gaussians with position spread sigma and mean wavenumber k per axis."""
    center = _per_axis(center, grid.dims, "center")
    sigma = _per_axis(sigma, grid.dims, "sigma")
    k = _per_axis(k, grid.dims, "k")
    if np.any(sigma <= 0):
        raise ValidationError(f"sigma must be strictly positive, not {sigma!r}")
    exponent = 0.0
    for a, x in enumerate(grid.mesh()):
        exponent = exponent - (x - center[a]) ** 2 / (4.0 * sigma[a] ** 2) + 1j * k[a] * x
    return normalize(ScalarField(grid, np.exp(exponent)))


def harmonic_ground_state(grid, omega=1.0, units=DEFAULT_UNITS):
    if not omega > 0:
        raise ValidationError(f"omega must be strictly positive, not {omega!r}")
    exponent = sum(
        -units.mass(a) * omega * x ** 2 / (2.0 * units.hbar) for a, x in enumerate(grid.mesh())
    )
    return normalize(ScalarField(grid, np.exp(exponent)))


def check_amplitudes(amplitudes):
    amplitudes = np.asarray(amplitudes, dtype=complex)
    if amplitudes.shape != (2,):
        raise ShapeMismatch("A spin state has two amplitudes")
    norm = float(np.sum(np.abs(amplitudes) ** 2))
    if abs(norm - 1.0) > SPINOR_TOLERANCE:
        raise ValidationError(f"Spin amplitudes have squared norm {norm!r}, not 1")
    return amplitudes


def spinor(psi, amplitudes):
    """The single-particle spinor (c_up psi, c_down psi)."""
    up, down = check_amplitudes(amplitudes)
    return SpinorField(psi.grid, np.stack([up * psi.values, down * psi.values]))


def analyzer_states(theta):
    """The spin-up and spin-down eigenvectors of n.sigma for n at angle theta in the x-z plane."""
    half = 0.5 * theta
    return (
        np.array([math.cos(half), math.sin(half)], dtype=complex),
        np.array([-math.sin(half), math.cos(half)], dtype=complex),
    )


def rotated_amplitudes(amplitudes, theta):
    """Rotate a spin state by theta about the y axis."""
    half = 0.5 * theta
    rotation = np.array([[math.cos(half), -math.sin(half)], [math.sin(half), math.cos(half)]])
    return rotation @ check_amplitudes(amplitudes)


def singlet(spatial):
    """The spin singlet (|up down> - |down up>)/sqrt(2) times a two-particle spatial factor.

    spatial lives on a 2D grid whose axes are the two particles' positions.
    """
    if spatial.grid.dims != 2:
        raise ShapeMismatch("The singlet needs a two-particle (2D) configuration grid")
    weights = np.array([0.0, 1.0, -1.0, 0.0]) / math.sqrt(2.0)
    return SpinorField(spatial.grid, np.multiply.outer(weights, spatial.values))
