"""Time evolution under the Schroedinger and Pauli equations.

Steps use symmetric (Strang) splitting: half a potential step, a full
kinetic step in wavenumber space, then the second potential half step.
Every factor is an exact unitary on the periodic grid, so the norm is
preserved to roundoff.
"""
import hashlib
import logging
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from pilotwave.errors import NonFinite, ShapeMismatch, ValidationError
from pilotwave.fields import (
    DEFAULT_UNITS,
    RealField,
    SpinorField,
    norm_squared,
)

logger = logging.getLogger(__name__)

DEFAULT_DT = 1e-3
NORM_WARNING_TOLERANCE = 1e-8


@dataclass(frozen=True, eq=False)
class SpinCoupling:
    """The interaction -mu B(x).sigma acting on one particle's spin.

    field has shape (3, *grid.shape) holding the Cartesian components of B.
    """
    field: np.ndarray
    mu: float = 1.0
    particle: int = 0

    def __post_init__(self):
        values = np.array(self.field, dtype=float)
        if values.ndim < 2 or values.shape[0] != 3:
            raise ShapeMismatch(f"Coupling field must have shape (3, *grid), not {values.shape}")
        if not np.all(np.isfinite(values)):
            raise ValidationError("Coupling field contains NaN or Inf")
        if not math.isfinite(self.mu):
            raise ValidationError(f"Coupling constant must be finite, not {self.mu!r}")
        if self.particle not in (0, 1):
            raise ValidationError(f"Coupling targets particle 0 or 1, not {self.particle!r}")
        values.setflags(write=False)
        object.__setattr__(self, "field", values)

    @classmethod
    def linear(cls, grid, axis, gradient, direction, mu=1.0, particle=0):
        """The idealized Stern-Gerlach field B(x) = gradient * x[axis] * direction."""
        direction = np.asarray(direction, dtype=float)
        direction = direction / np.linalg.norm(direction)
        coordinate = grid.mesh()[axis]
        return cls(gradient * np.multiply.outer(direction, coordinate), mu, particle)


def analyzer_direction(theta):
    """Unit vector at angle theta from the z axis in the x-z plane."""
    return np.array([math.sin(theta), 0.0, math.cos(theta)])


@dataclass(frozen=True, eq=False)
class Potential:
    """A scalar potential V(x) plus any number of spin couplings."""
    scalar: RealField = None
    couplings: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "couplings", tuple(self.couplings))

    @property
    def is_free(self):
        return self.scalar is None and not self.couplings

    def scalar_values(self, grid):
        if self.scalar is None:
            return np.zeros(grid.shape)
        if self.scalar.grid != grid:
            raise ShapeMismatch("Potential and field live on different grids")
        return self.scalar.values


FREE = Potential()


@dataclass(frozen=True)
class PropagatorConfig:
    dt: float = DEFAULT_DT
    steps: int = 1
    frame_stride: int = 1

    def __post_init__(self):
        if not (math.isfinite(self.dt) and self.dt > 0):
            raise ValidationError(f"dt must be strictly positive, not {self.dt!r}")
        if int(self.steps) != self.steps or self.steps < 1:
            raise ValidationError(f"steps must be a positive integer, not {self.steps!r}")
        if int(self.frame_stride) != self.frame_stride or not 1 <= self.frame_stride <= self.steps:
            raise ValidationError(f"frame_stride must lie in [1, steps], not {self.frame_stride!r}")

    @property
    def total_time(self):
        return self.dt * self.steps

    @classmethod
    def spanning(cls, duration, dt, frame_interval):
        """A configuration covering duration with dt no larger than requested.

        The frame interval is rounded to a whole number of steps.
        """
        steps = max(1, int(math.ceil(duration / dt - 1e-9)))
        dt = duration / steps
        stride = min(steps, max(1, int(round(frame_interval / dt))))
        return cls(dt=dt, steps=steps, frame_stride=stride)


@dataclass(frozen=True)
class Stage:
    potential: Potential
    config: PropagatorConfig


@dataclass(frozen=True, eq=False)
class Frame:
    time: float
    field: object
    stage: int


@dataclass(frozen=True, eq=False)
class EvolutionRecord:
    """Stored states of one evolution, with their norms and energies."""
    frames: tuple
    stages: tuple
    units: object
    norms: np.ndarray
    energies: np.ndarray
    stage_starts: tuple = (0.0,)

    @property
    def times(self):
        return np.array([frame.time for frame in self.frames])

    @property
    def grid(self):
        return self.frames[0].field.grid

    @property
    def config(self):
        return self.stages[0].config

    @property
    def start(self):
        return self.frames[0].time

    @property
    def end(self):
        return self.frames[-1].time

    def potential_at(self, frame_index):
        return self.stages[self.frames[frame_index].stage].potential

    def frame_nearest(self, time, tolerance=1e-9):
        times = self.times
        index = int(np.argmin(np.abs(times - time)))
        scale = max(1.0, abs(time))
        if abs(times[index] - time) > tolerance * scale:
            return None
        return index

    @cached_property
    def identifier(self):
        """A content digest identifying this record."""
        digester = hashlib.sha1()
        for frame in self.frames:
            digester.update(np.float64(frame.time).tobytes())
            digester.update(np.ascontiguousarray(frame.field.values).tobytes())
        return digester.hexdigest()


class SplitOperator:
    """Precomputed Strang factors for one grid, potential and time step."""

    def __init__(self, grid, potential, dt, units=DEFAULT_UNITS, components=None):
        self._grid = grid
        self._dt = dt
        self._units = units
        self._components = components
        hbar = units.hbar

        kinetic_phase = np.zeros(grid.shape)
        for axis, k in enumerate(grid.wavenumbers(a) for a in range(grid.dims)):
            shape = [1] * grid.dims
            shape[axis] = k.size
            kinetic_phase = kinetic_phase + (hbar * k ** 2 / (2.0 * units.mass(axis))).reshape(shape)
        self._kinetic = np.exp(-1j * kinetic_phase * dt)

        if potential.scalar is None:
            self._half_potential = None
        else:
            self._half_potential = np.exp(-1j * potential.scalar_values(grid) * dt / (2.0 * hbar))

        if potential.couplings and components is None:
            raise ShapeMismatch("Spin couplings require a spinor field")
        particles = {2: 1, 4: 2}.get(components, 0)
        self._spin = []
        for coupling in potential.couplings:
            if coupling.particle >= particles:
                raise ShapeMismatch(
                    f"Coupling targets particle {coupling.particle} but the spinor has {particles}"
                )
            if coupling.field.shape[1:] != grid.shape:
                raise ShapeMismatch("Coupling field does not match the grid")
            self._spin.append((coupling.particle, _spin_half_step(coupling, dt, hbar)))

        logger.debug(
            "%s prepared for grid %r, dt=%r, %d coupling(s)",
            type(self).__name__,
            grid.shape,
            dt,
            len(self._spin),
        )

    def _potential_half(self, values):
        if self._half_potential is not None:
            values = values * self._half_potential
        for particle, unitary in self._spin:
            values = _apply_spin(unitary, values, particle)
        return values

    def step(self, values):
        axes = tuple(range(values.ndim - self._grid.dims, values.ndim))
        values = self._potential_half(values)
        values = np.fft.ifftn(np.fft.fftn(values, axes=axes) * self._kinetic, axes=axes)
        return self._potential_half(values)


def _spin_half_step(coupling, dt, hbar):
    """The pointwise 2x2 unitary exp(i mu dt (B.sigma) / (2 hbar)).

    Returned with shape (2, 2, *grid.shape).
    """
    bx, by, bz = coupling.field
    magnitude = np.sqrt(bx ** 2 + by ** 2 + bz ** 2)
    rate = coupling.mu * dt / (2.0 * hbar)
    theta = rate * magnitude
    cos = np.cos(theta)
    with np.errstate(invalid="ignore", divide="ignore"):
        sin_over_b = np.where(magnitude > 0, np.sin(theta) / magnitude, rate)
    return np.array([
        [cos + 1j * sin_over_b * bz, 1j * sin_over_b * (bx - 1j * by)],
        [1j * sin_over_b * (bx + 1j * by), cos - 1j * sin_over_b * bz],
    ])


def _apply_spin(unitary, values, particle):
    if values.shape[0] == 2:
        return np.einsum("ab...,b...->a...", unitary, values)
    pair = values.reshape((2, 2) + values.shape[1:])
    if particle == 0:
        pair = np.einsum("ab...,bc...->ac...", unitary, pair)
    else:
        pair = np.einsum("ab...,cb...->ca...", unitary, pair)
    return pair.reshape(values.shape)


def _warn_if_not_normalized(f):
    n2 = norm_squared(f)
    if abs(n2 - 1.0) > NORM_WARNING_TOLERANCE:
        logger.warning("Propagating a field with squared norm %r; results are not normalized", n2)


def step_scalar(psi, pot, dt, units=DEFAULT_UNITS):
    """Advance a scalar field by one Strang step of size dt (dt may be negative)."""
    _warn_if_not_normalized(psi)
    operator = SplitOperator(psi.grid, pot, dt, units)
    return psi.with_values(operator.step(psi.values))


def step_spinor(psi, pot, dt, units=DEFAULT_UNITS):
    """Advance a spinor field by one Strang step of the Pauli equation.

    Raises:
        ShapeMismatch: If a coupling targets a particle absent from the spinor.
    """
    _warn_if_not_normalized(psi)
    operator = SplitOperator(psi.grid, pot, dt, units, components=psi.components)
    return psi.with_values(operator.step(psi.values))


def energy(f, pot, units=DEFAULT_UNITS):
    """The expectation of the Hamiltonian, with a spectral kinetic term."""
    grid = f.grid
    axes = tuple(range(f.values.ndim - grid.dims, f.values.ndim))
    coefficients = np.fft.fftn(f.values, axes=axes)
    spectral_weight = np.abs(coefficients) ** 2
    if isinstance(f, SpinorField):
        spectral_weight = spectral_weight.sum(axis=0)
    kinetic_density = np.zeros(grid.shape)
    for axis in range(grid.dims):
        shape = [1] * grid.dims
        shape[axis] = grid.points[axis]
        k = grid.wavenumbers(axis).reshape(shape)
        kinetic_density = kinetic_density + units.hbar ** 2 * k ** 2 / (2.0 * units.mass(axis))
    size = float(np.prod(grid.shape))
    kinetic = np.sum(kinetic_density * spectral_weight) * grid.cell_volume / size

    magnitude = np.abs(f.values) ** 2
    rho = magnitude.sum(axis=0) if isinstance(f, SpinorField) else magnitude
    potential = np.sum(pot.scalar_values(grid) * rho) * grid.cell_volume

    for coupling in pot.couplings:
        for index, sigma_expectation in enumerate(_pauli_densities(f, coupling.particle)):
            potential -= coupling.mu * np.sum(coupling.field[index] * sigma_expectation) * grid.cell_volume
    return float(kinetic + potential)


def _pauli_densities(f, particle):
    """Pointwise psi^dagger sigma_i psi for one particle, i = x, y, z."""
    values = f.values
    if values.shape[0] == 2:
        up, down = values[0], values[1]
    else:
        pair = values.reshape((2, 2) + values.shape[1:])
        if particle == 0:
            up, down = pair[0], pair[1]
        else:
            up, down = pair[:, 0], pair[:, 1]
    cross = np.conj(up) * down
    densities = (
        2.0 * np.real(cross),
        2.0 * np.imag(cross),
        np.abs(up) ** 2 - np.abs(down) ** 2,
    )
    if values.shape[0] == 4:
        densities = tuple(d.sum(axis=0) for d in densities)
    return densities


def spin_expectation(f, particle=0):
    """The Bloch vector (<sigma_x>, <sigma_y>, <sigma_z>) of one particle."""
    return np.array([np.sum(d) * f.grid.cell_volume for d in _pauli_densities(f, particle)])


def evolve(initial, pot, config, units=DEFAULT_UNITS):
    """Propagate initial under a fixed potential and store every frame_stride-th state."""
    return evolve_stages(initial, [Stage(pot, config)], units)


def evolve_stages(initial, stages, units=DEFAULT_UNITS, start_time=0.0):
    """Propagate through a schedule of piecewise-constant potentials.

    The initial state and the final state of every stage are always stored.

    Raises:
        NonFinite: If a stored state contains NaN or Inf. The exception
            carries the partial record up to the last finite frame.
    """
    stages = tuple(stages)
    if not stages:
        raise ValidationError("At least one stage is required")
    _warn_if_not_normalized(initial)
    spinor = isinstance(initial, SpinorField)
    components = initial.components if spinor else None

    frames = [Frame(float(start_time), initial, 0)]
    norms = [norm_squared(initial)]
    energies = [energy(initial, stages[0].potential, units)]
    stage_starts = []

    def partial_record():
        return EvolutionRecord(
            tuple(frames), stages, units, np.array(norms), np.array(energies), tuple(stage_starts)
        )

    values = initial.values
    time = float(start_time)
    for index, stage in enumerate(stages):
        config = stage.config
        stage_starts.append(time)
        logger.debug(
            "Stage %d: %d steps of dt=%r from t=%r, storing every %d",
            index,
            config.steps,
            config.dt,
            time,
            config.frame_stride,
        )
        operator = SplitOperator(initial.grid, stage.potential, config.dt, units, components)
        for step in range(1, config.steps + 1):
            values = operator.step(values)
            if step % config.frame_stride == 0 or step == config.steps:
                frame_time = time + step * config.dt
                if not np.all(np.isfinite(values)):
                    raise NonFinite(frame_time, partial_record())
                state = initial.with_values(values)
                frames.append(Frame(frame_time, state, index))
                norms.append(norm_squared(state))
                energies.append(energy(state, stage.potential, units))
        time = time + config.steps * config.dt

    record = partial_record()
    logger.debug(
        "Evolution finished at t=%r with %d frames, max norm deviation %.3g",
        time,
        len(frames),
        float(np.max(np.abs(record.norms - record.norms[0]))),
    )
    return record
