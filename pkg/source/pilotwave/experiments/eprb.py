"""The EPR-Bohm experiment: two spin-1/2 particles in the singlet state.

The configuration space is the plane (x1, x2) of the two particle
positions and the wave function has four spin components. Each side is
measured by a Stern-Gerlach coupling on its own particle's position, one
after the other, and the outcomes are the signs of the two final
displacements.
"""
import logging
import math
from dataclasses import dataclass, replace

import numpy as np

from pilotwave.equilibrium import cell_density, sample_density
from pilotwave.errors import ValidationError
from pilotwave.fields import DEFAULT_UNITS, GridSpec
from pilotwave.guidance import integrate_ensemble
from pilotwave.propagator import (
    FREE,
    Potential,
    PropagatorConfig,
    SpinCoupling,
    Stage,
    analyzer_direction,
    evolve_stages,
)
from pilotwave.experiments.outcomes import OutcomeRecord, check_resolved, pointer_outcomes
from pilotwave.experiments.states import gaussian_packet, singlet

logger = logging.getLogger(__name__)

SIDE1_FIRST = "side1-first"
SIDE2_FIRST = "side2-first"
SIMULTANEOUS = "simultaneous"
ORDERS = (SIDE1_FIRST, SIDE2_FIRST, SIMULTANEOUS)

DIVERGING_SAMPLE = 10


def _check_angle(name, value):
    if not (math.isfinite(value) and 0.0 <= value < 2.0 * math.pi):
        raise ValidationError(f"Analyzer angle {name}={value!r} must lie in [0, 2 pi)")


def wrap_angle(value):
    return float(value) % (2.0 * math.pi)


@dataclass(frozen=True)
class EPRBConfig:
    a: float = 0.0
    b: float = 0.0
    sigma: float = 1.0
    gradient: float = 10.0
    mu: float = 1.0
    coupling_time: float = 0.5
    gap: float = 2.0
    flight_time: float = 3.0
    order: str = SIDE1_FIRST
    n: int = 4000
    seed: int = 0
    points: int = 256
    extent: float = 51.2
    dt: float = 5e-3
    frame_interval: float = 0.05
    free_frame_interval: float = 0.25
    units: object = DEFAULT_UNITS

    def __post_init__(self):
        _check_angle("a", self.a)
        _check_angle("b", self.b)
        if self.order not in ORDERS:
            raise ValidationError(f"order must be one of {', '.join(ORDERS)}, not {self.order!r}")
        for name in ("sigma", "gradient", "coupling_time", "extent", "dt", "frame_interval",
                     "free_frame_interval"):
            if not getattr(self, name) > 0:
                raise ValidationError(f"{name} must be strictly positive, not {getattr(self, name)!r}")
        for name in ("gap", "flight_time"):
            if not getattr(self, name) >= 0:
                raise ValidationError(f"{name} must not be negative, not {getattr(self, name)!r}")
        if int(self.n) != self.n or self.n < 1:
            raise ValidationError(f"n must be a positive integer, not {self.n!r}")

    @property
    def grid(self):
        return GridSpec((-self.extent, -self.extent), (self.extent, self.extent), (self.points, self.points))

    @property
    def total_time(self):
        return 2.0 * self.coupling_time + self.gap + self.flight_time


def singlet_correlation(a, b):
    """The quantum prediction -cos(a - b) for the singlet's spin correlation."""
    return -math.cos(a - b)


def predicted_flip_fraction(a, b, b_alt):
    """The fraction of side-1 outcomes that change when side 2, measured first, switches from b to b_alt."""
    return abs(math.cos(a - b) - math.cos(a - b_alt)) / 2.0


def _coupling(cfg, side):
    angle = cfg.a if side == 1 else cfg.b
    particle = side - 1
    return SpinCoupling.linear(
        cfg.grid, particle, cfg.gradient, analyzer_direction(angle), cfg.mu, particle
    )


def measurement_stages(cfg):
    """Coupling, gap, coupling, flight; the order decides which side couples first."""
    coupled = PropagatorConfig.spanning(cfg.coupling_time, cfg.dt, cfg.frame_interval)

    def free(duration):
        if duration <= 0:
            return []
        config = PropagatorConfig.spanning(duration, cfg.free_frame_interval, cfg.free_frame_interval)
        return [Stage(FREE, config)]

    if cfg.order == SIMULTANEOUS:
        both = Potential(couplings=(_coupling(cfg, 1), _coupling(cfg, 2)))
        return [Stage(both, coupled)] + free(cfg.gap + cfg.coupling_time + cfg.flight_time)
    first, second = (1, 2) if cfg.order == SIDE1_FIRST else (2, 1)
    return (
        [Stage(Potential(couplings=(_coupling(cfg, first),)), coupled)]
        + free(cfg.gap)
        + [Stage(Potential(couplings=(_coupling(cfg, second),)), coupled)]
        + free(cfg.flight_time)
    )


def initial_state(cfg):
    return singlet(gaussian_packet(cfg.grid, 0.0, cfg.sigma))


def eprb_run(cfg):
    """Measure both particles of a singlet pair at analyzer angles a and b.

    Raises:
        UnresolvedBeams: If either side's beams have not separated at readout.
    """
    logger.info(
        "EPRB: a=%.4f, b=%.4f, order=%s, n=%d, seed=%r",
        cfg.a,
        cfg.b,
        cfg.order,
        cfg.n,
        cfg.seed,
    )
    psi0 = initial_state(cfg)
    record = evolve_stages(psi0, measurement_stages(cfg), cfg.units)
    final = record.frames[-1].field
    check_resolved(final, cfg.a, 0, 1)
    check_resolved(final, cfg.b, 1, 2)

    samples = sample_density(cell_density(psi0), cfg.n, cfg.seed)
    trajectories = integrate_ensemble(samples.points, record, cfg.units, seed=cfg.seed)
    outcomes = OutcomeRecord(
        (cfg.a, cfg.b),
        pointer_outcomes(trajectories, 0),
        pointer_outcomes(trajectories, 1),
        predicted=singlet_correlation(cfg.a, cfg.b),
        trajectories=trajectories,
        seed=cfg.seed,
    )
    logger.info(
        "EPRB finished: E=%.4f +- %.4f, predicted %.4f",
        outcomes.correlation,
        outcomes.standard_error,
        outcomes.predicted,
    )
    return outcomes


@dataclass(frozen=True, eq=False)
class DivergingPair:
    index: int
    start: np.ndarray
    final: np.ndarray
    final_alt: np.ndarray
    outcome: int
    outcome_alt: int


@dataclass(frozen=True, eq=False)
class NonlocalityReport:
    a: float
    b: float
    b_alt: float
    order: str
    flip_fraction: float
    predicted_flip: float
    identical: bool
    diverging: tuple
    records: tuple

    def summary(self):
        return {
            "a": self.a,
            "b": self.b,
            "b_alt": self.b_alt,
            "order": self.order,
            "flip_fraction": self.flip_fraction,
            "predicted_flip": self.predicted_flip,
            "identical": self.identical,
            "diverging": [
                {
                    "index": pair.index,
                    "start": pair.start.tolist(),
                    "final": pair.final.tolist(),
                    "final_alt": pair.final_alt.tolist(),
                    "outcome": pair.outcome,
                    "outcome_alt": pair.outcome_alt,
                }
                for pair in self.diverging
            ],
        }


def nonlocality_probe(cfg, b, b_alt, sample_size=DIVERGING_SAMPLE):
    """Run twice, changing only the distant analyzer, and compare the near-side outcomes.

    The distant side must couple first (or together with the near side);
    a side-1-first configuration is switched to side-2-first.
    """
    if cfg.order == SIDE1_FIRST:
        logger.info("Nonlocality probe measures side 2 first")
        cfg = replace(cfg, order=SIDE2_FIRST)
    b, b_alt = wrap_angle(b), wrap_angle(b_alt)
    first = eprb_run(replace(cfg, b=b))
    second = eprb_run(replace(cfg, b=b_alt))

    flips = np.flatnonzero(first.outcomes_1 != second.outcomes_1)
    starts = first.trajectories.initial_positions
    diverging = tuple(
        DivergingPair(
            int(i),
            starts[i],
            first.trajectories.final_positions[i],
            second.trajectories.final_positions[i],
            int(first.outcomes_1[i]),
            int(second.outcomes_1[i]),
        )
        for i in flips[:sample_size]
    )
    report = NonlocalityReport(
        cfg.a,
        b,
        b_alt,
        cfg.order,
        flips.size / len(first),
        predicted_flip_fraction(cfg.a, b, b_alt),
        bool(np.array_equal(first.trajectories.positions, second.trajectories.positions)),
        diverging,
        (first, second),
    )
    logger.info(
        "Nonlocality probe: %.4f of side-1 outcomes flipped (predicted %.4f)",
        report.flip_fraction,
        report.predicted_flip,
    )
    return report
