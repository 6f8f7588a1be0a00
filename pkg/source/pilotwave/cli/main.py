"""The pilotwave command line.

Every subcommand writes its data files (CSV), a JSON summary and finally
manifest.json into the output directory. Exit status is 0 on success, 1
for invalid input or output failures and 2 for numerical failures; the
error's structured name is written to stderr.
"""
import argparse
import cmath
import logging
import sys
from dataclasses import dataclass

import numpy as np

from pilotwave.archive import RunArchive
from pilotwave.cli.config import REQUIRED, TABLES, parse_config
from pilotwave.cli.manifest import RunManifest, previous_outputs
from pilotwave.cli.render import render_to_archive
from pilotwave.cli.writers import (
    write_field,
    write_outcomes,
    write_summary,
    write_table,
    write_trajectories,
)
from pilotwave.equilibrium import cell_density, equivariance_report, sample_density
from pilotwave.errors import NumericalError, PilotWaveError, UsageError
from pilotwave.experiments import (
    DoubleSlitConfig,
    EPRBConfig,
    SternGerlachConfig,
    chsh,
    double_slit,
    eprb_run,
    local_deterministic_chsh_bound,
    nonlocality_probe,
    stern_gerlach,
    von_neumann_obstruction,
)
from pilotwave.experiments.states import gaussian_packet, harmonic_ground_state, plane_wave
from pilotwave.fields import DEFAULT_UNITS, GridSpec, RealField, UnitSystem, probability_density
from pilotwave.guidance import integrate_ensemble
from pilotwave.propagator import FREE, Potential, PropagatorConfig, evolve
from pilotwave.storage import FileStorage
from pilotwave.version import __version__

logger = logging.getLogger(__name__)

DEFAULT_OUTPUT = "pilotwave-output"
SUMMARY_NAME = "summary.json"

EXIT_SUCCESS = 0
EXIT_INVALID = 1
EXIT_NUMERICAL = 2

OUTPUT_FORMATS = """\
output files (CSV columns in order):
  field.csv         x[,y],re,im
  frames.csv        t,norm,energy
  trajectories.csv  trajectory_id,t,x[,y]
  tv.csv            t,tv
  arrivals.csv      lower,upper,mass
  outcomes.csv      run_id,setting_a,setting_b,outcome_1,outcome_2
  summary.json      subcommand results
  manifest.json     parameters, seed, grid, units and a digest of every other file
"""


class ArgumentParser(argparse.ArgumentParser):

    def error(self, message):
        raise UsageError(message)


@dataclass(frozen=True)
class RunContext:
    """What a handler reports back for the manifest."""
    grid: object = None
    units: object = DEFAULT_UNITS


def _units(config):
    return UnitSystem(config.hbar, (config.mass,))


def _grid(config):
    return GridSpec(config.lower, config.upper, config.points)


def _initial_state(config, grid, units):
    if config.state == "harmonic":
        return harmonic_ground_state(grid, config.omega, units)
    if config.state == "plane":
        return plane_wave(grid, config.k)
    return gaussian_packet(grid, config.x0, config.sigma, config.k)


def _potential(config, grid, units):
    if config.potential == "harmonic":
        (x,) = grid.mesh()
        return Potential(RealField(grid, 0.5 * units.mass() * config.omega ** 2 * x ** 2))
    return FREE


def _evolution(config):
    units = _units(config)
    grid = _grid(config)
    psi0 = _initial_state(config, grid, units)
    propagation = PropagatorConfig.spanning(config.duration, config.dt, config.frame_interval)
    record = evolve(psi0, _potential(config, grid, units), propagation, units)
    return units, grid, psi0, record


def _variance(f):
    (x,) = f.grid.mesh()
    rho = probability_density(f).values * f.grid.cell_volume
    mean = float(np.sum(x * rho))
    return float(np.sum(x ** 2 * rho)) - mean ** 2


def run_evolve(config, archive):
    units, grid, psi0, record = _evolution(config)
    final = record.frames[-1].field
    write_field(archive, "field.csv", final)
    write_table(
        archive,
        "frames.csv",
        ("t", "norm", "energy"),
        zip(record.times.tolist(), record.norms.tolist(), record.energies.tolist()),
    )
    energy0 = record.energies[0]
    write_summary(archive, SUMMARY_NAME, {
        "record_id": record.identifier,
        "frames": len(record.frames),
        "end": record.end,
        "norm_drift": float(np.max(np.abs(record.norms - record.norms[0]))),
        "energy_drift_relative": float(np.max(np.abs(record.energies - energy0)) / max(abs(energy0), 1e-300)),
        "final_variance": _variance(final),
    })
    if config.render:
        render_to_archive(archive, "density.png", final)
    return RunContext(grid, units)


def run_trajectories(config, archive):
    units, grid, psi0, record = _evolution(config)
    samples = sample_density(cell_density(psi0), config.n, config.seed)
    trajectories = integrate_ensemble(
        samples.points, record, units, step_dt=config.step_dt or None, seed=config.seed
    )
    write_trajectories(archive, "trajectories.csv", trajectories)
    write_summary(archive, SUMMARY_NAME, {
        "record_id": record.identifier,
        "trajectories": len(trajectories),
        "statuses": dict(trajectories.status_counts()),
    })
    if config.render:
        render_to_archive(archive, "density.png", record.frames[-1].field)
    return RunContext(grid, units)


def run_equivariance(config, archive):
    units, grid, psi0, record = _evolution(config)
    report = equivariance_report(psi0, record, config.n, config.seed, units=units, bins=config.bins)
    write_table(archive, "tv.csv", ("t", "tv"), ((row["t"], row["tv"]) for row in report.rows))
    write_summary(archive, SUMMARY_NAME, {
        "record_id": record.identifier,
        "n": report.sample_count,
        "bins": report.bins,
        "worst_tv": report.worst,
        "final_tv": float(report.total_variation[-1]),
    })
    if config.render:
        render_to_archive(archive, "density.png", record.frames[-1].field)
    return RunContext(grid, units)


def run_double_slit(config, archive):
    cfg = DoubleSlitConfig(
        separation=config.separation,
        sigma=config.sigma,
        wavenumber=config.wavenumber,
        flight_time=config.flight_time,
        n=config.n,
        seed=config.seed,
        points=config.points,
        extent=config.extent,
        frame_interval=config.frame_interval,
        output_interval=config.output_interval,
        bins=config.bins,
    )
    result = double_slit(cfg)
    write_trajectories(archive, "trajectories.csv", result.trajectories, limit=config.stored_trajectories)
    (edges,) = result.arrival_histogram.edges
    write_table(
        archive,
        "arrivals.csv",
        ("lower", "upper", "mass"),
        zip(edges[:-1].tolist(), edges[1:].tolist(), result.arrival_histogram.masses.tolist()),
    )
    summary = result.summary()
    summary["record_id"] = result.record_id
    write_summary(archive, SUMMARY_NAME, summary)
    if config.render:
        render_to_archive(archive, "arrivals.png", result.arrival_histogram)
    return RunContext(cfg.grid, cfg.units)


def run_stern_gerlach(config, archive):
    cfg = SternGerlachConfig(
        amplitudes=(config.c_up, config.c_down * cmath.exp(1j * config.c_down_phase)),
        theta=config.theta,
        gradient=config.gradient,
        mu=config.mu,
        coupling_time=config.coupling_time,
        flight_time=config.flight_time,
        sigma=config.sigma,
        n=config.n,
        seed=config.seed,
        points=config.points,
        extent=config.extent,
        dt=config.dt,
    )
    record = stern_gerlach(cfg)
    write_outcomes(archive, "outcomes.csv", [record])
    write_summary(archive, SUMMARY_NAME, {
        "fraction_up": record.fraction_up,
        "fraction_up_error": record.fraction_up_error,
        "predicted_fraction_up": record.predicted,
        "outcome_classes": list(record.outcome_classes),
        "spin_values": sorted({float(v) for v in record.spin_values(cfg.units)}),
        "statuses": dict(record.trajectories.status_counts()),
    })
    return RunContext(cfg.grid, cfg.units)


def _eprb_config(config, **changes):
    fields = dict(
        sigma=config.sigma,
        gradient=config.gradient,
        coupling_time=config.coupling_time,
        gap=config.gap,
        flight_time=config.flight_time,
        order=config.order,
        n=config.n,
        seed=config.seed,
        points=config.points,
        extent=config.extent,
        dt=config.dt,
    )
    fields.update(changes)
    return EPRBConfig(**fields)


def _correlation_summary(record):
    return {
        "a": record.settings[0],
        "b": record.settings[1],
        "E": record.correlation,
        "standard_error": record.standard_error,
        "predicted": record.predicted,
        "statuses": dict(record.trajectories.status_counts()),
    }


def run_eprb(config, archive):
    cfg = _eprb_config(config, a=config.a, b=config.b)
    record = eprb_run(cfg)
    write_outcomes(archive, "outcomes.csv", [record])
    write_summary(archive, SUMMARY_NAME, _correlation_summary(record))
    return RunContext(cfg.grid, cfg.units)


def run_chsh(config, archive):
    cfg = _eprb_config(config)
    result = chsh(cfg, config.a, config.a_alt, config.b, config.b_alt)
    write_outcomes(archive, "outcomes.csv", result.records)
    summary = result.summary()
    summary["exceeds_local_bound"] = result.exceeds_local_bound()
    summary["local_bound"] = local_deterministic_chsh_bound().max_abs
    write_summary(archive, SUMMARY_NAME, summary)
    return RunContext(cfg.grid, cfg.units)


def run_nonlocality_probe(config, archive):
    cfg = _eprb_config(config, a=config.a)
    report = nonlocality_probe(cfg, config.b, config.b_alt, config.sample)
    write_outcomes(archive, "outcomes.csv", report.records)
    write_summary(archive, SUMMARY_NAME, report.summary())
    return RunContext(cfg.grid, cfg.units)


def run_nogo(config, archive):
    units = UnitSystem(config.hbar)
    write_summary(archive, SUMMARY_NAME, {
        "von_neumann": von_neumann_obstruction(units).summary(),
        "chsh_local": local_deterministic_chsh_bound().summary(),
    })
    return RunContext(None, units)


HANDLERS = {
    "evolve": run_evolve,
    "trajectories": run_trajectories,
    "equivariance": run_equivariance,
    "double-slit": run_double_slit,
    "stern-gerlach": run_stern_gerlach,
    "eprb": run_eprb,
    "chsh": run_chsh,
    "nonlocality-probe": run_nonlocality_probe,
    "nogo": run_nogo,
}


def withdraw(archive):
    """Remove every file committed to archive."""
    if len(archive):
        logger.warning("Removing %d file(s) written before the run failed", len(archive))
    for name in list(archive):
        del archive[name]


def run_subcommand(name, config, output=DEFAULT_OUTPUT):
    """Run one subcommand and write its files and manifest into output.

    Files listed by a manifest already in output are removed first. If the
    run fails, the files it had written are removed again.

    Returns:
        The RunManifest written.
    """
    if name not in HANDLERS:
        raise UsageError(f"Unknown subcommand {name!r}; choose from {', '.join(HANDLERS)}")
    manifest = RunManifest(name, dict(config.values), config.values.get("seed"))
    storage = FileStorage(output)
    try:
        for stale in previous_outputs(storage):
            storage.discard(stale)
        with RunArchive(storage) as archive:
            try:
                context = HANDLERS[name](config, archive)
            except Exception:
                withdraw(archive)
                raise
            manifest.grid = context.grid
            manifest.units = context.units
            manifest.write(archive)
    finally:
        storage.close()
    logger.info("%s wrote %d file(s) to %s", name, len(manifest.files) + 1, output)
    return manifest


def exit_status(error):
    if isinstance(error, NumericalError):
        return EXIT_NUMERICAL
    return EXIT_INVALID


def _flag_names(name):
    names = [f"--{name}"]
    if "_" in name:
        names.append(f"--{name.replace('_', '-')}")
    return names


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="key = value parameter file")
    common.add_argument("--output", metavar="DIR", default=DEFAULT_OUTPUT, help="output directory")
    common.add_argument("-v", "--verbose", action="count", default=0, help="-v for INFO, -vv for DEBUG")

    parser = ArgumentParser(
        prog="pilotwave",
        description=__doc__,
        epilog=OUTPUT_FORMATS,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subparsers = parser.add_subparsers(dest="command", metavar="SUBCOMMAND")
    subparsers.required = True
    for name, table in TABLES.items():
        subparser = subparsers.add_parser(name, parents=[common], help=f"run {name}")
        for parameter in table:
            default = "required" if parameter.default is REQUIRED else parameter.default
            subparser.add_argument(
                *_flag_names(parameter.name),
                dest=parameter.name,
                metavar="VALUE",
                default=None,
                help=f"{parameter.help} (default: {default})",
            )
    return parser


def configure_logging(verbosity):
    level = logging.WARNING if verbosity <= 0 else logging.INFO if verbosity == 1 else logging.DEBUG
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


def main(argv=None):
    parser = build_parser()
    try:
        arguments = parser.parse_args(argv)
        configure_logging(arguments.verbose)
        overrides = {
            parameter.name: getattr(arguments, parameter.name)
            for parameter in TABLES[arguments.command]
        }
        config = parse_config(arguments.command, arguments.config, overrides)
        run_subcommand(arguments.command, config, arguments.output)
    except PilotWaveError as e:
        print(f"{e.code}: {e}", file=sys.stderr)
        return exit_status(e)
    return EXIT_SUCCESS
