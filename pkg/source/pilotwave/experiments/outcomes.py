"""Measurement outcomes read off particle positions."""
import math
from dataclasses import dataclass

import numpy as np

from pilotwave.errors import ShapeMismatch, UnresolvedBeams, ValidationError
from pilotwave.fields import DEFAULT_UNITS
from pilotwave.experiments.states import analyzer_states

OVERLAP_LIMIT = 0.01


def outcome_signs(displacements):
    """+1 for a non-negative pointer displacement, -1 otherwise."""
    return np.where(np.asarray(displacements) >= 0.0, 1, -1).astype(np.int8)


@dataclass(frozen=True, eq=False)
class OutcomeRecord:
    """Per-trajectory +-1 outcomes of one run at fixed analyzer settings.

    outcomes_2 is None for single-particle runs.
    """
    settings: tuple
    outcomes_1: np.ndarray
    outcomes_2: np.ndarray = None
    predicted: float = None
    trajectories: object = None
    seed: int = None

    def __post_init__(self):
        object.__setattr__(self, "settings", tuple(float(s) for s in self.settings))
        for name in ("outcomes_1", "outcomes_2"):
            values = getattr(self, name)
            if values is None:
                continue
            values = np.asarray(values, dtype=np.int8)
            if values.ndim != 1 or values.size == 0:
                raise ShapeMismatch(f"{name} must be a non-empty one-dimensional array")
            if not np.all(np.abs(values) == 1):
                raise ValidationError(f"{name} must contain only +1 and -1")
            values.setflags(write=False)
            object.__setattr__(self, name, values)
        if self.outcomes_2 is not None and self.outcomes_2.size != self.outcomes_1.size:
            raise ShapeMismatch("Both sides need one outcome per trajectory")

    def __len__(self):
        return self.outcomes_1.size

    @property
    def outcome_classes(self):
        return tuple(sorted(set(self.outcomes_1.tolist())))

    @property
    def fraction_up(self):
        return float(np.mean(self.outcomes_1 == 1))

    @property
    def fraction_up_error(self):
        """The binomial standard error of fraction_up."""
        p = self.fraction_up
        return math.sqrt(p * (1.0 - p) / len(self))

    @property
    def products(self):
        if self.outcomes_2 is None:
            raise ValidationError("Correlations need outcomes on both sides")
        return self.outcomes_1.astype(np.int64) * self.outcomes_2

    @property
    def correlation(self):
        return float(np.mean(self.products))

    @property
    def standard_error(self):
        products = self.products
        if products.size < 2:
            return 0.0
        return float(np.std(products, ddof=1) / math.sqrt(products.size))

    def spin_values(self, units=DEFAULT_UNITS):
        """Outcomes on side 1 expressed as spin components +-hbar/2."""
        return self.outcomes_1 * (units.hbar / 2.0)

    def rows(self, run_id=0):
        a, b = (self.settings + (float("nan"),))[:2]
        second = self.outcomes_2 if self.outcomes_2 is not None else np.zeros_like(self.outcomes_1)
        for o1, o2 in zip(self.outcomes_1.tolist(), second.tolist()):
            yield run_id, a, b, o1, o2


def _branch_amplitudes(values, theta, particle):
    """Project spinor values onto the up and down states of one particle's analyzer."""
    up, down = analyzer_states(theta)
    if values.shape[0] == 2:
        return (
            np.tensordot(np.conj(up), values, axes=1),
            np.tensordot(np.conj(down), values, axes=1),
        )
    pair = values.reshape((2, 2) + values.shape[1:])
    if particle == 1:
        pair = np.swapaxes(pair, 0, 1)
    return (
        np.tensordot(np.conj(up), pair, axes=1),
        np.tensordot(np.conj(down), pair, axes=1),
    )


def check_resolved(field, theta, particle, side, limit=OVERLAP_LIMIT):
    """Raise UnresolvedBeams when too much of either beam sits on the wrong side of the pointer axis.

    Returns the misclassified fraction of the mass.
    """
    grid = field.grid
    positive = grid.mesh()[particle] >= 0.0
    up, down = _branch_amplitudes(field.values, theta, particle)
    up_mass = np.abs(up) ** 2
    down_mass = np.abs(down) ** 2
    if up_mass.ndim > grid.dims:
        up_mass = up_mass.sum(axis=0)
        down_mass = down_mass.sum(axis=0)
    wrong = up_mass[~positive].sum() + down_mass[positive].sum()
    overlap = float(wrong / (up_mass.sum() + down_mass.sum()))
    if overlap > limit:
        raise UnresolvedBeams(side, overlap, limit)
    return overlap


def pointer_outcomes(trajectories, axis):
    """Outcomes from the final unwrapped pointer coordinate along axis.

    Unwrapping keeps the sign of a trajectory that crossed the periodic seam.
    """
    return outcome_signs(trajectories.unwrapped[:, -1, axis])
