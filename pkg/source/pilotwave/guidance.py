"""Velocity fields, the quantum potential and guided trajectories.

Particles move with dq/dt = v(q, t), where v = (hbar/m) Im(psi* grad psi)
/ (psi* psi) is read off the wave function. The same velocity field can be
written as J/rho or as grad(S)/m, and the functions here provide all three
forms so their agreement can be checked.

Trajectory integration is classical RK4 on velocity fields interpolated
multilinearly in space (periodically) and linearly in time between stored
frames. Near nodes of the wave function the velocity is unreliable, so
trajectories entering a masked region stop there and are reported as
node-stalled.
"""
import enum
import logging
import math
import os
from collections import Counter
from concurrent.futures.thread import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from pilotwave.errors import InsufficientFrames, OutOfWindow, ShapeMismatch, ValidationError
from pilotwave.fields import (
    DEFAULT_NODE_EPS,
    DEFAULT_UNITS,
    RealField,
    ScalarField,
    SpinorField,
    VectorField,
    current_values,
    density_values,
    node_mask,
    probability_current,
    probability_density,
    spectral_derivative,
)

logger = logging.getLogger(__name__)

THREADS_VARIABLE = "PILOTWAVE_THREADS"
MIN_CHUNK = 256


@dataclass(frozen=True, eq=False)
class VelocityField(VectorField):
    pass


class TrajectoryStatus(str, enum.Enum):
    COMPLETED = "completed"
    ESCAPED = "escaped"
    NODE_STALLED = "node-stalled"


@dataclass(frozen=True, eq=False)
class Trajectory:
    """One particle path.

    positions are wrapped into the grid extents; windings counts how many
    times the path crossed the periodic seam along each axis.
    """
    times: np.ndarray
    positions: np.ndarray
    windings: np.ndarray
    status: TrajectoryStatus
    lengths: tuple

    @property
    def unwrapped(self):
        return self.positions + self.windings * np.asarray(self.lengths)

    @property
    def final_position(self):
        return self.positions[-1]


@dataclass(frozen=True, eq=False)
class TrajectorySet:
    """An ensemble of trajectories sharing one time grid.

    positions and windings have shape (trajectories, times, dims).
    """
    times: np.ndarray
    positions: np.ndarray
    windings: np.ndarray
    statuses: tuple
    lengths: tuple
    seed: int = None
    source: str = None

    def __len__(self):
        return self.positions.shape[0]

    def __getitem__(self, index):
        return Trajectory(
            self.times,
            self.positions[index],
            self.windings[index],
            self.statuses[index],
            self.lengths,
        )

    def __iter__(self):
        for index in range(len(self)):
            yield self[index]

    @property
    def unwrapped(self):
        return self.positions + self.windings * np.asarray(self.lengths)

    @property
    def initial_positions(self):
        return self.positions[:, 0]

    @property
    def final_positions(self):
        return self.positions[:, -1]

    def status_counts(self):
        return Counter(status.value for status in self.statuses)


def worker_count():
    """The trajectory worker pool size; PILOTWAVE_THREADS=0 or unset means automatic."""
    raw = os.environ.get(THREADS_VARIABLE, "0").strip() or "0"
    try:
        requested = int(raw)
    except ValueError:
        raise ValidationError(f"{THREADS_VARIABLE} must be an integer, not {raw!r}")
    if requested < 0:
        raise ValidationError(f"{THREADS_VARIABLE} must not be negative, not {requested}")
    return requested or (os.cpu_count() or 1)


def _velocity_values(f, eps, units):
    if not eps > 0:
        raise ValidationError(f"eps must be strictly positive, not {eps!r}")
    rho = density_values(f)
    mask = node_mask(rho, eps)
    floor = np.maximum(rho, eps * rho.max())
    conjugate = np.conj(f.values)
    velocity = np.empty((f.grid.dims,) + f.grid.shape)
    with np.errstate(invalid="ignore", divide="ignore"):
        for axis in range(f.grid.dims):
            flux = np.imag(conjugate * spectral_derivative(f.values, f.grid, axis))
            if isinstance(f, SpinorField):
                flux = flux.sum(axis=0)
            velocity[axis] = np.where(mask, 0.0, units.hbar / units.mass(axis) * flux / floor)
    return velocity, mask


def velocity_scalar(psi, eps=DEFAULT_NODE_EPS, units=DEFAULT_UNITS):
    """The guiding velocity (hbar/m) Im(grad psi / psi) of a scalar field."""
    if not isinstance(psi, ScalarField):
        raise ShapeMismatch(f"velocity_scalar needs a ScalarField, not {type(psi).__name__}")
    values, mask = _velocity_values(psi, eps, units)
    return VelocityField(psi.grid, values, mask)


def velocity_spinor(psi, eps=DEFAULT_NODE_EPS, units=DEFAULT_UNITS):
    """The guiding velocity (hbar/m) Im(psi* grad psi) / (psi* psi), summed over components.

    On a two-axis grid holding two particles, axis i uses the mass of particle i.
    """
    if not isinstance(psi, SpinorField):
        raise ShapeMismatch(f"velocity_spinor needs a SpinorField, not {type(psi).__name__}")
    values, mask = _velocity_values(psi, eps, units)
    return VelocityField(psi.grid, values, mask)


def velocity(f, eps=DEFAULT_NODE_EPS, units=DEFAULT_UNITS):
    if isinstance(f, SpinorField):
        return velocity_spinor(f, eps, units)
    return velocity_scalar(f, eps, units)


def velocity_from_current(f, eps=DEFAULT_NODE_EPS, units=DEFAULT_UNITS):
    """The velocity written as J / rho."""
    rho = probability_density(f).values
    mask = node_mask(rho, eps)
    current = probability_current(f, units).values
    with np.errstate(invalid="ignore", divide="ignore"):
        values = np.where(mask, 0.0, current / np.where(mask, 1.0, rho))
    return VelocityField(f.grid, values, mask)


def velocity_from_phase(action, mask=None, units=DEFAULT_UNITS):
    """The velocity written as grad(S) / m, from an unwrapped phase action S.

    Uses second-order central differences, which are exact for phases at
    most quadratic in position. The mask is grown by one cell because
    differences next to a masked point are meaningless.
    """
    grid = action.grid
    if mask is None:
        mask = action.mask if action.mask is not None else np.zeros(grid.shape, dtype=bool)
    grown = ndimage.binary_dilation(mask) if mask.any() else mask
    values = np.empty((grid.dims,) + grid.shape)
    for axis in range(grid.dims):
        derivative = np.gradient(action.values, grid.spacing[axis], axis=axis, edge_order=2)
        values[axis] = np.where(grown, 0.0, derivative / units.mass(axis))
    return VelocityField(grid, values, grown)


def _quantum_potential_values(psi, eps, units):
    if not eps > 0:
        raise ValidationError(f"eps must be strictly positive, not {eps!r}")
    amplitude = np.abs(psi.values)
    mask = node_mask(amplitude ** 2, eps)
    curvature = np.zeros(psi.grid.shape)
    for axis in range(psi.grid.dims):
        second = np.real(spectral_derivative(amplitude, psi.grid, axis, order=2))
        curvature += units.hbar ** 2 / (2.0 * units.mass(axis)) * second
    with np.errstate(invalid="ignore", divide="ignore"):
        values = np.where(mask, 0.0, -curvature / np.where(mask, 1.0, amplitude))
    return values, mask


def quantum_potential(psi, eps=DEFAULT_NODE_EPS, units=DEFAULT_UNITS):
    """Q = -(hbar^2 / 2m) lap(R) / R with R = |psi|, masked where the density is negligible."""
    values, mask = _quantum_potential_values(psi, eps, units)
    return RealField(psi.grid, values, mask)


def _force_values(psi, potential, eps, units):
    q_values, mask = _quantum_potential_values(psi, eps, units)
    total = q_values + potential.scalar_values(psi.grid)
    grown = ndimage.binary_dilation(mask) if mask.any() else mask
    force = np.empty((psi.grid.dims,) + psi.grid.shape)
    for axis in range(psi.grid.dims):
        slope = (np.roll(total, -1, axis=axis) - np.roll(total, 1, axis=axis)) / (2.0 * psi.grid.spacing[axis])
        force[axis] = np.where(grown, 0.0, -slope)
    return force, grown


def quantum_force(psi, potential, eps=DEFAULT_NODE_EPS, units=DEFAULT_UNITS):
    """The force -grad(V + Q) that reproduces guided motion in Newtonian form."""
    if not isinstance(psi, ScalarField):
        raise ShapeMismatch("The quantum force is defined for scalar fields")
    values, mask = _force_values(psi, potential, eps, units)
    return VectorField(psi.grid, values, mask)


@dataclass(frozen=True, eq=False)
class Residual:
    """A residual field at the midpoint of a frame pair and its summary statistics."""
    time: float
    field: RealField
    max_abs: float
    mean_abs: float


def _summarize(time, grid, residual, mask):
    residual = np.where(mask, 0.0, residual)
    off_mask = np.abs(residual[~mask])
    max_abs = float(off_mask.max()) if off_mask.size else 0.0
    mean_abs = float(off_mask.mean()) if off_mask.size else 0.0
    return Residual(time, RealField(grid, residual, mask), max_abs, mean_abs)


def _scalar_frames(record):
    if len(record.frames) < 2:
        raise InsufficientFrames(len(record.frames))
    if not isinstance(record.frames[0].field, ScalarField):
        raise ShapeMismatch("Hamilton-Jacobi residuals need a scalar wave function")


def _hamilton_jacobi_energy(psi, potential, eps, units):
    """|grad S|^2 / 2m + V + Q, with grad S = m v to avoid unwrap seams."""
    velocity_values, mask = _velocity_values(psi, eps, units)
    kinetic = sum(0.5 * units.mass(a) * velocity_values[a] ** 2 for a in range(psi.grid.dims))
    q_values, _ = _quantum_potential_values(psi, eps, units)
    return kinetic + potential.scalar_values(psi.grid) + q_values, mask


def hj_residual(record, eps=DEFAULT_NODE_EPS, units=DEFAULT_UNITS):
    """Residual of dS/dt + |grad S|^2/2m + V + Q = 0 for each frame pair.

    dS/dt comes from the local phase difference arg(psi_b conj(psi_a)), so
    no global unwrap is needed; the spatial terms are averaged over both
    frames. The result is centred at the pair's midpoint.

    Raises:
        InsufficientFrames: If the record holds fewer than two frames.
    """
    _scalar_frames(record)
    residuals = []
    for index in range(len(record.frames) - 1):
        first, second = record.frames[index], record.frames[index + 1]
        potential = record.potential_at(index + 1)
        interval = second.time - first.time
        phase_rate = units.hbar * np.angle(second.field.values * np.conj(first.field.values)) / interval
        energy_first, mask_first = _hamilton_jacobi_energy(first.field, potential, eps, units)
        energy_second, mask_second = _hamilton_jacobi_energy(second.field, potential, eps, units)
        residual = phase_rate + 0.5 * (energy_first + energy_second)
        residuals.append(_summarize(
            0.5 * (first.time + second.time), record.grid, residual, mask_first | mask_second
        ))
    return tuple(residuals)


def _divergence(current, grid):
    return sum(np.real(spectral_derivative(current[a], grid, a)) for a in range(grid.dims))


def continuity_residual(record, eps=DEFAULT_NODE_EPS, units=DEFAULT_UNITS):
    """Residual of d(rho)/dt + div(rho v) = 0 for each frame pair.

    Raises:
        InsufficientFrames: If the record holds fewer than two frames.
    """
    if len(record.frames) < 2:
        raise InsufficientFrames(len(record.frames))
    grid = record.grid
    residuals = []
    for first, second in zip(record.frames, record.frames[1:]):
        rho_first, rho_second = density_values(first.field), density_values(second.field)
        interval = second.time - first.time
        divergence = 0.5 * (
            _divergence(current_values(first.field, units), grid)
            + _divergence(current_values(second.field, units), grid)
        )
        residual = (rho_second - rho_first) / interval + divergence
        mask = node_mask(rho_first, eps) | node_mask(rho_second, eps)
        residuals.append(_summarize(0.5 * (first.time + second.time), grid, residual, mask))
    return tuple(residuals)


class _FieldHistory:
    """Vector fields stored per frame, sampled at arbitrary points and times."""

    def __init__(self, grid, times, values, masks):
        self._grid = grid
        self._times = np.asarray(times, dtype=float)
        self._values = values
        self._masks = masks
        self._lower = np.asarray(grid.lower)
        self._spacing = np.asarray(grid.spacing)
        self._points = np.asarray(grid.points)

    @classmethod
    def of_velocities(cls, record, eps, units):
        pairs = [_velocity_values(frame.field, eps, units) for frame in record.frames]
        return cls(
            record.grid,
            record.times,
            np.stack([values for values, _ in pairs]),
            np.stack([mask for _, mask in pairs]),
        )

    @classmethod
    def of_forces(cls, record, eps, units):
        pairs = [
            _force_values(frame.field, record.potential_at(index), eps, units)
            for index, frame in enumerate(record.frames)
        ]
        return cls(
            record.grid,
            record.times,
            np.stack([values for values, _ in pairs]),
            np.stack([mask for _, mask in pairs]),
        )

    @property
    def frame_interval(self):
        if self._times.size < 2:
            return 0.0
        return float(np.min(np.diff(self._times)))

    def _bracket(self, time):
        if self._times.size == 1:
            return 0, 0.0
        index = int(np.searchsorted(self._times, time, side="right")) - 1
        index = min(max(index, 0), self._times.size - 2)
        weight = (time - self._times[index]) / (self._times[index + 1] - self._times[index])
        return index, min(max(weight, 0.0), 1.0)

    def _coordinates(self, points):
        return ((points - self._lower) / self._spacing).T

    def sample(self, points, time):
        index, weight = self._bracket(time)
        if weight == 0.0:
            field = self._values[index]
        elif weight == 1.0:
            field = self._values[index + 1]
        else:
            field = (1.0 - weight) * self._values[index] + weight * self._values[index + 1]
        coordinates = self._coordinates(points)
        sampled = np.empty_like(points)
        for axis in range(self._grid.dims):
            sampled[:, axis] = ndimage.map_coordinates(
                field[axis], coordinates, order=1, mode="grid-wrap"
            )
        return sampled

    def masked(self, points, time):
        index, weight = self._bracket(time)
        frame = index if weight < 0.5 or self._times.size == 1 else index + 1
        nearest = np.rint(self._coordinates(points)).astype(np.int64)
        nearest %= self._points[:, None]
        return self._masks[frame][tuple(nearest)]


def _output_times(record, times):
    start, end = record.start, record.end
    if times is None:
        return record.times
    times = np.atleast_1d(np.asarray(times, dtype=float))
    if times.size == 0:
        raise ValidationError("At least one output time is required")
    if np.any(np.diff(times) <= 0):
        raise ValidationError("Output times must be strictly increasing")
    tolerance = 1e-9 * max(1.0, abs(end))
    for time in (times[0], times[-1]):
        if time < start - tolerance or time > end + tolerance:
            raise OutOfWindow(float(time), start, end)
    return times


def _default_step(history, step_dt):
    if step_dt is None:
        interval = history.frame_interval
        return interval / 4.0 if interval > 0 else 1.0
    if not step_dt > 0:
        raise ValidationError(f"step_dt must be strictly positive, not {step_dt!r}")
    return step_dt


def _substeps(start, end, step_dt):
    count = max(1, int(math.ceil((end - start) / step_dt - 1e-9)))
    return count, (end - start) / count


def _rk4_positions(history, starts, times, step_dt):
    positions = np.empty((starts.shape[0], times.size, starts.shape[1]))
    q = starts.copy()
    positions[:, 0] = q
    stalled = history.masked(q, times[0])
    for j in range(1, times.size):
        count, h = _substeps(times[j - 1], times[j], step_dt)
        for s in range(count):
            t = times[j - 1] + s * h
            k1 = history.sample(q, t)
            k2 = history.sample(q + 0.5 * h * k1, t + 0.5 * h)
            k3 = history.sample(q + 0.5 * h * k2, t + 0.5 * h)
            k4 = history.sample(q + h * k3, t + h)
            advanced = q + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            q = np.where(stalled[:, None], q, advanced)
            stalled = stalled | history.masked(q, t + h)
        positions[:, j] = q
    return positions, stalled


def _wrap(grid, paths):
    lower = np.asarray(grid.lower)
    lengths = np.asarray(grid.lengths)
    windings = np.floor((paths - lower) / lengths).astype(np.int64)
    return paths - windings * lengths, windings


def _statuses(windings, stalled):
    escaped = np.any(windings != 0, axis=(1, 2))
    statuses = []
    for is_stalled, has_escaped in zip(stalled, escaped):
        if is_stalled:
            statuses.append(TrajectoryStatus.NODE_STALLED)
        elif has_escaped:
            statuses.append(TrajectoryStatus.ESCAPED)
        else:
            statuses.append(TrajectoryStatus.COMPLETED)
    return tuple(statuses)


def _as_starts(starts, grid):
    starts = np.asarray(starts, dtype=float)
    if starts.ndim == 1 and grid.dims == 1:
        starts = starts[:, None]
    elif starts.ndim == 1:
        starts = starts[None, :]
    if starts.ndim != 2 or starts.shape[1] != grid.dims:
        raise ShapeMismatch(f"Start points must have {grid.dims} coordinate(s)")
    lower, upper = np.asarray(grid.lower), np.asarray(grid.upper)
    if np.any(starts < lower) or np.any(starts >= upper):
        raise ValidationError("Start points must lie inside the grid extents")
    return starts


def integrate_ensemble(starts, record, units=DEFAULT_UNITS, step_dt=None, times=None,
                       eps=DEFAULT_NODE_EPS, seed=None):
    """Integrate the guiding equation from each start point.

    Trajectories are independent, so the batch is split across a thread
    pool; results do not depend on the split. Node stalls and seam crossings
    are reported per trajectory and never abort the batch.

    Raises:
        OutOfWindow: If requested times exceed the record's coverage.
    """
    grid = record.grid
    starts = _as_starts(starts, grid)
    output_times = _output_times(record, times)
    history = _FieldHistory.of_velocities(record, eps, units)
    step = _default_step(history, step_dt)

    workers = worker_count()
    chunk_count = max(1, min(workers, starts.shape[0] // MIN_CHUNK))
    chunks = np.array_split(np.arange(starts.shape[0]), chunk_count)
    logger.debug(
        "Integrating %d trajectories over %d output times with step %r in %d chunk(s)",
        starts.shape[0],
        output_times.size,
        step,
        chunk_count,
    )
    if chunk_count == 1:
        results = [_rk4_positions(history, starts, output_times, step)]
    else:
        with ThreadPoolExecutor(max_workers=chunk_count) as executor:
            results = list(executor.map(
                lambda chunk: _rk4_positions(history, starts[chunk], output_times, step), chunks
            ))
    paths = np.concatenate([paths for paths, _ in results])
    stalled = np.concatenate([stalled for _, stalled in results])
    positions, windings = _wrap(grid, paths)
    statuses = _statuses(windings, stalled)
    if stalled.any():
        logger.warning("%d of %d trajectories stalled at nodes", int(stalled.sum()), stalled.size)
    return TrajectorySet(
        output_times, positions, windings, statuses, grid.lengths, seed, record.identifier
    )


def integrate_trajectory(x0, record, units=DEFAULT_UNITS, step_dt=None, times=None,
                         eps=DEFAULT_NODE_EPS):
    """Integrate the guiding equation from a single start point."""
    point = np.atleast_1d(np.asarray(x0, dtype=float))
    return integrate_ensemble(point[None, :], record, units, step_dt, times, eps)[0]


def integrate_newtonian(x0, record, units=DEFAULT_UNITS, step_dt=None, times=None,
                        eps=DEFAULT_NODE_EPS):
    """Integrate m q'' = -grad(V + Q), starting with the guiding velocity.

    This is the second-order rewriting of guided motion; for exact fields
    it reproduces integrate_trajectory.
    """
    _scalar_frames(record)
    grid = record.grid
    start = _as_starts(np.atleast_1d(np.asarray(x0, dtype=float))[None, :], grid)
    output_times = _output_times(record, times)
    velocities = _FieldHistory.of_velocities(record, eps, units)
    forces = _FieldHistory.of_forces(record, eps, units)
    step = _default_step(forces, step_dt)
    masses = np.array([units.mass(a) for a in range(grid.dims)])

    q = start.copy()
    p = masses * velocities.sample(q, output_times[0])
    paths = np.empty((1, output_times.size, grid.dims))
    paths[:, 0] = q
    stalled = forces.masked(q, output_times[0])
    for j in range(1, output_times.size):
        count, h = _substeps(output_times[j - 1], output_times[j], step)
        for s in range(count):
            t = output_times[j - 1] + s * h
            kq1, kp1 = p / masses, forces.sample(q, t)
            kq2, kp2 = (p + 0.5 * h * kp1) / masses, forces.sample(q + 0.5 * h * kq1, t + 0.5 * h)
            kq3, kp3 = (p + 0.5 * h * kp2) / masses, forces.sample(q + 0.5 * h * kq2, t + 0.5 * h)
            kq4, kp4 = (p + h * kp3) / masses, forces.sample(q + h * kq3, t + h)
            if not stalled[0]:
                q = q + (h / 6.0) * (kq1 + 2.0 * kq2 + 2.0 * kq3 + kq4)
                p = p + (h / 6.0) * (kp1 + 2.0 * kp2 + 2.0 * kp3 + kp4)
                stalled = stalled | forces.masked(q, t + h)
        paths[:, j] = q
    positions, windings = _wrap(grid, paths)
    return Trajectory(output_times, positions[0], windings[0], _statuses(windings, stalled)[0], grid.lengths)
