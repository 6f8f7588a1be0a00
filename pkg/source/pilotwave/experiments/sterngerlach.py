"""A Stern-Gerlach measurement on a spin-1/2 particle.

The particle carries only a position. A coupling -mu b x (n.sigma) pushes
the two analyzer components of the spinor apart along x, and the outcome
is the side of the axis on which the particle ends up.
"""
import logging
from dataclasses import dataclass

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
from pilotwave.experiments.states import analyzer_states, check_amplitudes, gaussian_packet, spinor

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SternGerlachConfig:
    amplitudes: tuple = (1.0, 0.0)
    theta: float = 0.0
    gradient: float = 3.0
    mu: float = 1.0
    coupling_time: float = 1.0
    flight_time: float = 10.0
    sigma: float = 1.0
    n: int = 10_000
    seed: int = 0
    points: int = 512
    extent: float = 80.0
    dt: float = 0.01
    frame_interval: float = 0.1
    free_frame_interval: float = 0.5
    units: object = DEFAULT_UNITS

    def __post_init__(self):
        object.__setattr__(self, "amplitudes", tuple(complex(c) for c in check_amplitudes(self.amplitudes)))
        for name in ("gradient", "coupling_time", "sigma", "extent", "dt", "frame_interval",
                     "free_frame_interval"):
            if not getattr(self, name) > 0:
                raise ValidationError(f"{name} must be strictly positive, not {getattr(self, name)!r}")
        if not self.flight_time >= 0:
            raise ValidationError(f"flight_time must not be negative, not {self.flight_time!r}")
        if int(self.n) != self.n or self.n < 1:
            raise ValidationError(f"n must be a positive integer, not {self.n!r}")

    @property
    def grid(self):
        return GridSpec(-self.extent, self.extent, self.points)

    @property
    def predicted_fraction_up(self):
        """The Born weight |<n+|chi>|^2 of the analyzer's up state."""
        up, _ = analyzer_states(self.theta)
        return float(abs(np.vdot(up, np.array(self.amplitudes))) ** 2)


def measurement_stages(cfg):
    coupling = SpinCoupling.linear(cfg.grid, 0, cfg.gradient, analyzer_direction(cfg.theta), cfg.mu)
    stages = [Stage(
        Potential(couplings=(coupling,)),
        PropagatorConfig.spanning(cfg.coupling_time, cfg.dt, cfg.frame_interval),
    )]
    if cfg.flight_time > 0:
        # Free flight is exact in wavenumber space, so one step per stored frame suffices.
        stages.append(Stage(
            FREE,
            PropagatorConfig.spanning(cfg.flight_time, cfg.free_frame_interval, cfg.free_frame_interval),
        ))
    return stages


def stern_gerlach(cfg):
    """Measure the spin component along the analyzer at angle theta.

    Raises:
        UnresolvedBeams: If the two beams have not separated at readout.
    """
    logger.info(
        "Stern-Gerlach: amplitudes=%r, theta=%r, n=%d, seed=%r",
        cfg.amplitudes,
        cfg.theta,
        cfg.n,
        cfg.seed,
    )
    psi0 = spinor(gaussian_packet(cfg.grid, 0.0, cfg.sigma), cfg.amplitudes)
    record = evolve_stages(psi0, measurement_stages(cfg), cfg.units)
    overlap = check_resolved(record.frames[-1].field, cfg.theta, 0, 1)

    samples = sample_density(cell_density(psi0), cfg.n, cfg.seed)
    trajectories = integrate_ensemble(samples.points, record, cfg.units, seed=cfg.seed)
    outcomes = OutcomeRecord(
        (cfg.theta,),
        pointer_outcomes(trajectories, 0),
        predicted=cfg.predicted_fraction_up,
        trajectories=trajectories,
        seed=cfg.seed,
    )
    logger.info(
        "Stern-Gerlach finished: fraction(+1)=%.4f, predicted %.4f, beam overlap %.2g",
        outcomes.fraction_up,
        outcomes.predicted,
        overlap,
    )
    return outcomes


def expected_separation(cfg):
    """The pointer displacement of each beam at readout, in the analyzer's eigenbasis."""
    mass = cfg.units.mass()
    force = cfg.mu * cfg.gradient
    during = force * cfg.coupling_time ** 2 / (2.0 * mass)
    return during + force * cfg.coupling_time * cfg.flight_time / mass

