"""Quantum equilibrium: sampling |psi|^2 and checking equivariance.

The density at grid node i is read as the constant density of the cell
[x_i, x_i + dx), so its cumulative distribution is piecewise linear. The
sampler and density_histogram both use this one model, so binning a
density and binning samples drawn from it differ only by sampling noise.
"""
import hashlib
import logging
from dataclasses import dataclass

import numpy as np

from pilotwave import seeds
from pilotwave.errors import BinMismatch, DegenerateDensity, EmptyInput, ValidationError
from pilotwave.fields import DEFAULT_NODE_EPS, DEFAULT_UNITS, from_spectral, probability_density, to_spectral
from pilotwave.guidance import integrate_ensemble

logger = logging.getLogger(__name__)

DEFAULT_BINS = 64
OCCUPIED_THRESHOLD = 1e-10
MASS_TOLERANCE = 1e-12
SAMPLE_LABEL = "initial-positions"
_BLOCK = 4096


def density_identifier(rho):
    digester = hashlib.sha1()
    digester.update(np.ascontiguousarray(rho.values).tobytes())
    return digester.hexdigest()


@dataclass(frozen=True, eq=False)
class SampleSet:
    """Positions drawn from a density, shape (n, dims)."""
    points: np.ndarray
    seed: int
    source: str

    def __len__(self):
        return self.points.shape[0]


@dataclass(frozen=True, eq=False)
class HistogramDensity:
    """Bin masses over a rectangular binning.

    clipped counts the samples that fell outside the edges and were placed
    in the nearest boundary bin.
    """
    edges: tuple
    masses: np.ndarray
    clipped: int = 0

    def __post_init__(self):
        edges = tuple(np.asarray(e, dtype=float) for e in self.edges)
        masses = np.asarray(self.masses, dtype=float)
        if masses.shape != tuple(e.size - 1 for e in edges):
            raise BinMismatch("Masses do not match the binning")
        if np.any(masses < 0):
            raise ValidationError("Bin masses must not be negative")
        if abs(masses.sum() - 1.0) > MASS_TOLERANCE * max(1, masses.size):
            raise ValidationError(f"Bin masses sum to {masses.sum()!r}, not 1")
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "masses", masses)

    @property
    def dims(self):
        return len(self.edges)

    def same_binning(self, other):
        return self.dims == other.dims and all(
            a.shape == b.shape and np.array_equal(a, b) for a, b in zip(self.edges, other.edges)
        )


def _check_edges(edges, dims):
    if dims == 1 and np.ndim(edges[0]) == 0:
        edges = (edges,)
    edges = tuple(np.asarray(e, dtype=float) for e in edges)
    if len(edges) != dims:
        raise BinMismatch(f"Need bin edges for {dims} axis/axes, got {len(edges)}")
    for e in edges:
        if e.ndim != 1 or e.size < 2:
            raise ValidationError("Each axis needs at least two bin edges")
        if np.any(np.diff(e) <= 0):
            raise ValidationError("Bin edges must be strictly increasing")
    return edges


def cell_density(f):
    """|f|^2 at the centre of each grid cell, read off the Fourier series of f.

    Samples drawn from this density under the cell model follow the
    continuous |f|^2 rather than a copy of it displaced by half a cell.
    """
    grid = f.grid
    coefficients = to_spectral(f)
    for axis in range(grid.dims):
        shape = [1] * coefficients.ndim
        shape[coefficients.ndim - grid.dims + axis] = -1
        k = grid.wavenumbers(axis, nyquist=False)
        coefficients = coefficients * np.exp(0.5j * k * grid.spacing[axis]).reshape(shape)
    return probability_density(from_spectral(coefficients, f))


def _density_array(rho):
    values = np.asarray(rho.values, dtype=float)
    if np.any(values < 0):
        raise ValidationError("Densities must not be negative")
    total = values.sum() * rho.grid.cell_volume
    if not total > 0:
        raise DegenerateDensity(f"Density has total mass {total!r}")
    return values


def _within_cell(targets, below, cell_mass):
    """Linear inversion of the cumulative mass inside the chosen cells."""
    with np.errstate(invalid="ignore", divide="ignore"):
        fraction = np.where(cell_mass > 0, (targets - below) / cell_mass, 0.5)
    return np.clip(fraction, 0.0, 1.0)


def _sample_axis(values, draws):
    """Continuous cell coordinates: cell i holds values[i] spread evenly over [i, i + 1)."""
    cumulative = np.cumsum(values)
    targets = draws * cumulative[-1]
    cell = np.minimum(np.searchsorted(cumulative, targets, side="right"), values.size - 1)
    below = cumulative[cell] - values[cell]
    return cell + _within_cell(targets, below, values[cell])


def _sample_rows(rows, draws):
    """As _sample_axis, with one density row per draw."""
    cumulative = np.cumsum(rows, axis=1)
    targets = draws * cumulative[:, -1]
    cell = np.minimum((cumulative <= targets[:, None]).sum(axis=1), rows.shape[1] - 1)
    pick = cell[:, None]
    cell_mass = np.take_along_axis(rows, pick, 1)[:, 0]
    below = np.take_along_axis(cumulative, pick, 1)[:, 0] - cell_mass
    return cell + _within_cell(targets, below, cell_mass)


def sample_density(rho, n, seed, label=SAMPLE_LABEL):
    """Draw n positions distributed as rho.

    In two dimensions the axis-0 marginal is sampled first and axis 1 from
    the conditional density of the drawn axis-0 cell.

    Raises:
        DegenerateDensity: If rho carries no mass.
    """
    if int(n) != n or n < 1:
        raise ValidationError(f"Sample count must be a positive integer, not {n!r}")
    n = int(n)
    values = _density_array(rho)
    grid = rho.grid
    generator = seeds.rng(seed, label)

    if grid.dims == 1:
        coordinates = _sample_axis(values, generator.random(n))[:, None]
    else:
        first = _sample_axis(values.sum(axis=1), generator.random(n))
        second_draws = generator.random(n)
        second = np.empty(n)
        cell = np.minimum(np.floor(first).astype(np.int64), grid.points[0] - 1)
        for start in range(0, n, _BLOCK):
            block = slice(start, start + _BLOCK)
            second[block] = _sample_rows(values[cell[block]], second_draws[block])
        coordinates = np.stack([first, second], axis=1)

    upper_index = np.nextafter(np.asarray(grid.points, dtype=float), 0.0)
    coordinates = np.minimum(coordinates, upper_index)
    points = np.asarray(grid.lower) + coordinates * np.asarray(grid.spacing)
    logger.debug("Drew %d samples from a %dD density with seed %r", n, grid.dims, seed)
    return SampleSet(points, seed, density_identifier(rho))


def histogram(samples, edges):
    """Bin samples into masses counts / n.

    Samples outside the edges are counted in the nearest boundary bin and
    reported through the clipped count.

    Raises:
        EmptyInput: If there are no samples.
    """
    points = samples.points if isinstance(samples, SampleSet) else np.asarray(samples, dtype=float)
    if points.ndim == 1:
        points = points[:, None]
    if points.shape[0] == 0:
        raise EmptyInput("Cannot histogram an empty sample set")
    edges = _check_edges(edges, points.shape[1])
    lower = np.array([e[0] for e in edges])
    upper = np.array([e[-1] for e in edges])
    outside = np.any((points < lower) | (points > upper), axis=1)
    clipped = int(outside.sum())
    if clipped:
        logger.warning("%d of %d samples lie outside the bins and were clipped", clipped, points.shape[0])
        points = np.clip(points, lower, upper)
    counts, _ = np.histogramdd(points, bins=edges)
    return HistogramDensity(edges, counts / points.shape[0], clipped)


def total_variation(p, q):
    """Half the L1 distance between two histograms on identical bins.

    Raises:
        BinMismatch: If the binnings differ.
    """
    if not p.same_binning(q):
        raise BinMismatch("Total variation needs identical binning")
    return float(min(1.0, 0.5 * np.abs(p.masses - q.masses).sum()))


def _cumulative_weights(lower, spacing, points, positions):
    """Mass each node's cell contributes between lower and each position.

    Returns an array of shape (len(positions), points).
    """
    scaled = np.clip((np.asarray(positions) - lower) / spacing, 0.0, points)
    nodes = np.arange(points)[None, :]
    return spacing * np.clip(scaled[:, None] - nodes, 0.0, 1.0)


def density_histogram(rho, edges):
    """Bin a gridded density exactly under its cell model."""
    values = _density_array(rho)
    grid = rho.grid
    edges = _check_edges(edges, grid.dims)
    operators = []
    for axis, e in enumerate(edges):
        weights = _cumulative_weights(grid.lower[axis], grid.spacing[axis], grid.points[axis], e)
        operators.append(np.diff(weights, axis=0))
    if grid.dims == 1:
        masses = operators[0] @ values
    else:
        masses = operators[0] @ values @ operators[1].T
    total = masses.sum()
    if not total > 0:
        raise DegenerateDensity("No density mass falls inside the bins")
    return HistogramDensity(edges, np.maximum(masses, 0.0) / total)


def occupied_edges(rho, bins=DEFAULT_BINS, threshold=OCCUPIED_THRESHOLD):
    """Equal-width bin edges per axis spanning where the marginal density is non-negligible."""
    values = _density_array(rho)
    grid = rho.grid
    edges = []
    for axis in range(grid.dims):
        others = tuple(a for a in range(grid.dims) if a != axis)
        marginal = values.sum(axis=others) if others else values
        occupied = np.flatnonzero(marginal > threshold * marginal.max())
        low = grid.lower[axis] + occupied[0] * grid.spacing[axis]
        high = grid.lower[axis] + (occupied[-1] + 1) * grid.spacing[axis]
        edges.append(np.linspace(low, min(high, grid.upper[axis]), bins + 1))
    return tuple(edges)


def scaling_exponent(ns, tvs):
    """The slope p of a least-squares fit TV ~ n^p on log-log axes."""
    ns = np.asarray(ns, dtype=float)
    tvs = np.asarray(tvs, dtype=float)
    if ns.size < 2 or ns.shape != tvs.shape:
        raise ValidationError("Need at least two (n, TV) pairs of equal length")
    if np.any(ns <= 0) or np.any(tvs <= 0):
        raise ValidationError("Sample counts and distances must be positive")
    slope, _ = np.polyfit(np.log(ns), np.log(tvs), 1)
    return float(slope)


@dataclass(frozen=True, eq=False)
class EquivarianceReport:
    times: np.ndarray
    total_variation: np.ndarray
    sample_count: int
    seed: int
    bins: int
    trajectories: object

    @property
    def rows(self):
        return [
            {"t": float(t), "tv": float(tv)} for t, tv in zip(self.times, self.total_variation)
        ]

    @property
    def worst(self):
        return float(self.total_variation.max())


def equivariance_report(psi0, record, n, seed, times=None, units=DEFAULT_UNITS, bins=DEFAULT_BINS,
                        eps=DEFAULT_NODE_EPS):
    """Sample |psi0|^2, carry the samples along guided trajectories and compare with |psi_t|^2.

    Each requested time must coincide with a stored frame of record.
    """
    output_times = record.times if times is None else np.atleast_1d(np.asarray(times, dtype=float))
    frame_indices = []
    for t in output_times:
        index = record.frame_nearest(t)
        if index is None:
            raise ValidationError(f"Time {float(t)!r} is not a stored frame of the record")
        frame_indices.append(index)

    samples = sample_density(cell_density(psi0), n, seed)
    trajectories = integrate_ensemble(
        samples.points, record, units, times=output_times, eps=eps, seed=seed
    )
    distances = []
    for j, index in enumerate(frame_indices):
        rho_t = cell_density(record.frames[index].field)
        edges = occupied_edges(rho_t, bins)
        reference = density_histogram(rho_t, edges)
        distances.append(total_variation(histogram(trajectories.positions[:, j], edges), reference))
    distances = np.array(distances)
    logger.info(
        "Equivariance over %d time(s) with n=%d: worst TV %.4f",
        output_times.size,
        n,
        float(distances.max()),
    )
    return EquivarianceReport(output_times, distances, int(n), seed, bins, trajectories)
