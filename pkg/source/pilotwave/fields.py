"""Grid geometry, complex field storage and spectral calculus.

All fields live on a uniform grid with periodic topology in every axis.
Derivatives are taken in wavenumber space, so they are exact for
band-limited fields up to floating point roundoff.

Fields are immutable: their value arrays are copied on construction and
marked read-only.
"""
import logging
import math
from dataclasses import dataclass

import numpy as np

from pilotwave.errors import GridError, ShapeMismatch, ValidationError, ZeroNorm

logger = logging.getLogger(__name__)

DEFAULT_NODE_EPS = 1e-12
UNDERFLOW_NORM = 1e-300
MIN_POINTS = 16


def _is_power_of_two(n):
    return n > 0 and (n & (n - 1)) == 0


def _read_only(array):
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class GridSpec:
    """A uniform periodic grid in one or two dimensions.

    The upper extent is excluded: point i of an axis sits at
    lower + i * dx with dx = (upper - lower) / points.
    """
    lower: tuple
    upper: tuple
    points: tuple

    def __post_init__(self):
        lower = tuple(float(v) for v in np.atleast_1d(self.lower))
        upper = tuple(float(v) for v in np.atleast_1d(self.upper))
        raw_points = np.atleast_1d(self.points)
        if not (len(lower) == len(upper) == len(raw_points)):
            raise GridError("lower, upper and points must have one entry per axis")
        if len(lower) not in (1, 2):
            raise GridError(f"Grids must have 1 or 2 dimensions, not {len(lower)}")
        points = []
        for n in raw_points:
            if int(n) != n:
                raise GridError(f"Point count {n!r} is not an integer")
            n = int(n)
            if n < MIN_POINTS or not _is_power_of_two(n):
                raise GridError(f"Point count {n} must be a power of two of at least {MIN_POINTS}")
            points.append(n)
        for lo, hi in zip(lower, upper):
            if not (math.isfinite(lo) and math.isfinite(hi)):
                raise GridError("Grid extents must be finite")
            if not hi > lo:
                raise GridError(f"Upper extent {hi} must exceed lower extent {lo}")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        object.__setattr__(self, "points", tuple(points))

    @property
    def dims(self):
        return len(self.points)

    @property
    def shape(self):
        return self.points

    @property
    def lengths(self):
        return tuple(hi - lo for lo, hi in zip(self.lower, self.upper))

    @property
    def spacing(self):
        return tuple(length / n for length, n in zip(self.lengths, self.points))

    @property
    def cell_volume(self):
        return float(np.prod(self.spacing))

    def axis(self, axis):
        """The coordinates of the grid points along one axis."""
        return self.lower[axis] + np.arange(self.points[axis]) * self.spacing[axis]

    def mesh(self):
        return np.meshgrid(*(self.axis(a) for a in range(self.dims)), indexing="ij")

    def wavenumbers(self, axis, nyquist=True):
        """Angular wavenumbers in discrete Fourier ordering.

        With nyquist=False the Nyquist mode is zeroed, which keeps first
        derivatives of real fields real.
        """
        k = 2.0 * np.pi * np.fft.fftfreq(self.points[axis], d=self.spacing[axis])
        if not nyquist:
            k[self.points[axis] // 2] = 0.0
        return k

    def contains(self, point):
        point = np.atleast_1d(point)
        return all(lo <= p < hi for p, lo, hi in zip(point, self.lower, self.upper))


@dataclass(frozen=True)
class UnitSystem:
    """Reduced Planck constant and particle masses.

    A single mass applies to every axis. With several masses, axis i of
    the configuration grid belongs to particle i.
    """
    hbar: float = 1.0
    masses: tuple = (1.0,)

    def __post_init__(self):
        masses = tuple(float(m) for m in np.atleast_1d(self.masses))
        if not (math.isfinite(self.hbar) and self.hbar > 0):
            raise ValidationError(f"hbar must be strictly positive, not {self.hbar!r}")
        if not masses or not all(math.isfinite(m) and m > 0 for m in masses):
            raise ValidationError(f"Masses must be strictly positive, not {masses!r}")
        object.__setattr__(self, "hbar", float(self.hbar))
        object.__setattr__(self, "masses", masses)

    def mass(self, axis=0):
        if len(self.masses) == 1:
            return self.masses[0]
        try:
            return self.masses[axis]
        except IndexError:
            raise ShapeMismatch(f"No mass given for axis {axis}; masses are {self.masses!r}")


DEFAULT_UNITS = UnitSystem()


def _check_finite(values, what):
    if not np.all(np.isfinite(values)):
        raise ValidationError(f"{what} contains NaN or Inf")


@dataclass(frozen=True, eq=False)
class ScalarField:
    grid: GridSpec
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=complex)
        if values.shape != self.grid.shape:
            raise ShapeMismatch(f"Values of shape {values.shape} do not match grid {self.grid.shape}")
        _check_finite(values, type(self).__name__)
        object.__setattr__(self, "values", _read_only(values))

    def with_values(self, values):
        return type(self)(self.grid, values)


@dataclass(frozen=True, eq=False)
class SpinorField:
    """A two- or four-component spinor field.

    Four components hold two spin-1/2 particles in tensor order
    particle 1 (x) particle 2, so component 2*s1 + s2.
    """
    grid: GridSpec
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=complex)
        if values.shape[1:] != self.grid.shape:
            raise ShapeMismatch(f"Values of shape {values.shape} do not match grid {self.grid.shape}")
        if values.shape[0] not in (2, 4):
            raise ShapeMismatch(f"Spinors have 2 or 4 components, not {values.shape[0]}")
        _check_finite(values, type(self).__name__)
        object.__setattr__(self, "values", _read_only(values))

    @property
    def components(self):
        return self.values.shape[0]

    @property
    def particles(self):
        return 1 if self.components == 2 else 2

    def component(self, index):
        return ScalarField(self.grid, self.values[index])

    def with_values(self, values):
        return type(self)(self.grid, values)


@dataclass(frozen=True, eq=False)
class RealField:
    """Real values on the grid, with an optional node mask."""
    grid: GridSpec
    values: np.ndarray
    mask: np.ndarray = None

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.shape != self.grid.shape:
            raise ShapeMismatch(f"Values of shape {values.shape} do not match grid {self.grid.shape}")
        _check_finite(values, type(self).__name__)
        object.__setattr__(self, "values", _read_only(values))
        if self.mask is not None:
            mask = np.array(self.mask, dtype=bool)
            if mask.shape != self.grid.shape:
                raise ShapeMismatch("Mask shape does not match the grid")
            object.__setattr__(self, "mask", _read_only(mask))


@dataclass(frozen=True, eq=False)
class VectorField:
    """One real value per grid point per axis; values has shape (dims, *grid.shape)."""
    grid: GridSpec
    values: np.ndarray
    mask: np.ndarray = None

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.shape != (self.grid.dims,) + self.grid.shape:
            raise ShapeMismatch(f"Values of shape {values.shape} do not match grid {self.grid.shape}")
        _check_finite(values, type(self).__name__)
        object.__setattr__(self, "values", _read_only(values))
        if self.mask is not None:
            mask = np.array(self.mask, dtype=bool)
            if mask.shape != self.grid.shape:
                raise ShapeMismatch("Mask shape does not match the grid")
            object.__setattr__(self, "mask", _read_only(mask))

    def component(self, axis):
        return RealField(self.grid, self.values[axis], self.mask)


def _spatial_axes(values, grid):
    offset = values.ndim - grid.dims
    return tuple(range(offset, values.ndim))


def _broadcast_along(k, values, grid, axis):
    shape = [1] * values.ndim
    shape[values.ndim - grid.dims + axis] = k.size
    return k.reshape(shape)


def spectral_derivative(values, grid, axis, order=1):
    """Differentiate an array along one spatial axis of grid.

    Leading array axes (spinor components, vector components) are carried
    along untouched. The result is complex even for real input.
    """
    if not 0 <= axis < grid.dims:
        raise ValidationError(f"Axis {axis} is not an axis of a {grid.dims}D grid")
    axes = _spatial_axes(values, grid)
    coefficients = np.fft.fftn(values, axes=axes)
    k = grid.wavenumbers(axis, nyquist=(order % 2 == 0))
    coefficients *= _broadcast_along((1j * k) ** order, values, grid, axis)
    return np.fft.ifftn(coefficients, axes=axes)


def spectral_laplacian(values, grid):
    axes = _spatial_axes(values, grid)
    coefficients = np.fft.fftn(values, axes=axes)
    k_squared = sum(_broadcast_along(grid.wavenumbers(a) ** 2, values, grid, a) for a in range(grid.dims))
    return np.fft.ifftn(-k_squared * coefficients, axes=axes)


def to_spectral(f):
    """The discrete Fourier coefficients of a field over its spatial axes."""
    return np.fft.fftn(f.values, axes=_spatial_axes(f.values, f.grid))


def from_spectral(coefficients, like):
    """Rebuild a field of the same kind and grid as like from coefficients."""
    values = np.fft.ifftn(coefficients, axes=_spatial_axes(np.asarray(coefficients), like.grid))
    return like.with_values(values)


def norm_squared(f):
    return float(np.sum(np.abs(f.values) ** 2) * f.grid.cell_volume)


def integrate(rho):
    return float(np.sum(rho.values) * rho.grid.cell_volume)


def normalize(f):
    """Rescale f to unit norm.

    Raises:
        ZeroNorm: If the squared norm is below the underflow threshold.
    """
    n2 = norm_squared(f)
    if not n2 > UNDERFLOW_NORM:
        raise ZeroNorm(n2)
    return f.with_values(f.values / math.sqrt(n2))


def gradient(f, axis):
    return f.with_values(spectral_derivative(f.values, f.grid, axis))


def laplacian(f):
    return f.with_values(spectral_laplacian(f.values, f.grid))


def node_mask(rho, eps=DEFAULT_NODE_EPS):
    """Mark points whose density is below eps relative to the peak density."""
    rho = np.asarray(rho)
    peak = rho.max() if rho.size else 0.0
    if not peak > 0:
        return np.ones(rho.shape, dtype=bool)
    return rho < eps * peak


def _unwrap_segments(phase, mask):
    """Unwrap a 1D phase along each unmasked run separately."""
    out = np.zeros_like(phase)
    valid = ~mask
    if not valid.any():
        return out
    starts = np.flatnonzero(np.diff(valid.astype(np.int8))) + 1
    for segment in np.split(np.arange(phase.size), starts):
        if valid[segment[0]]:
            out[segment] = np.unwrap(phase[segment])
    return out


def _unwrap(phase, mask):
    if phase.ndim == 1:
        return _unwrap_segments(phase, mask)
    anchor = _unwrap_segments(phase[:, 0], mask[:, 0])
    out = np.zeros_like(phase)
    for i in range(phase.shape[0]):
        row = _unwrap_segments(phase[i], mask[i])
        if not mask[i, 0]:
            masked = np.flatnonzero(mask[i])
            end = masked[0] if masked.size else row.size
            row[:end] += anchor[i] - row[0]
        out[i] = row
    return out


def polar_decompose(psi, eps=DEFAULT_NODE_EPS, units=DEFAULT_UNITS):
    """Split psi into amplitude R = |psi| and phase action S.

    S is unwrapped along axis 0 through the first column and then along
    axis 1 row by row. Masked points (density below eps relative to the
    peak) break unwrap chains and hold S = 0.

    Returns:
        A tuple (R, S, mask).
    """
    if not eps > 0:
        raise ValidationError(f"eps must be strictly positive, not {eps!r}")
    amplitude = np.abs(psi.values)
    mask = node_mask(amplitude ** 2, eps)
    action = units.hbar * _unwrap(np.angle(psi.values), mask)
    action[mask] = 0.0
    return (
        RealField(psi.grid, amplitude, mask),
        RealField(psi.grid, action, mask),
        mask,
    )


def density_values(f):
    magnitude = np.abs(f.values) ** 2
    if isinstance(f, SpinorField):
        return magnitude.sum(axis=0)
    return magnitude


def probability_density(f):
    return RealField(f.grid, density_values(f))


def current_values(f, units=DEFAULT_UNITS):
    """Probability current (hbar/m) Im(f* grad f), summed over spinor components."""
    conjugate = np.conj(f.values)
    current = np.empty((f.grid.dims,) + f.grid.shape)
    for axis in range(f.grid.dims):
        flux = np.imag(conjugate * spectral_derivative(f.values, f.grid, axis))
        if isinstance(f, SpinorField):
            flux = flux.sum(axis=0)
        current[axis] = units.hbar / units.mass(axis) * flux
    return current


def probability_current(f, units=DEFAULT_UNITS):
    return VectorField(f.grid, current_values(f, units))
