"""CSV outputs with fixed column orders.

trajectories: trajectory_id, t, x[, y]
outcomes:     run_id, setting_a, setting_b, outcome_1, outcome_2
fields:       x[, y], re, im
"""
import csv

import numpy as np

from pilotwave.cli.manifest import dumps

CSV_MIME = "text/csv"
JSON_MIME = "application/json"
ENCODING = "utf-8"

_AXIS_NAMES = ("x", "y")


def _writer(stream):
    return csv.writer(stream, lineterminator="\n")


def _number(value):
    return repr(float(value))


def write_trajectories(archive, name, trajectories, limit=None):
    """One row per trajectory per output time, positions wrapped into the grid."""
    dims = trajectories.positions.shape[2]
    count = len(trajectories) if limit is None else min(limit, len(trajectories))
    with archive.add_stream(name, CSV_MIME, ENCODING, rows=count * trajectories.times.size) as stream:
        writer = _writer(stream)
        writer.writerow(("trajectory_id", "t") + _AXIS_NAMES[:dims])
        for index in range(count):
            for t, position in zip(trajectories.times, trajectories.positions[index]):
                writer.writerow([index, _number(t)] + [_number(p) for p in position])
    return stream.emitted


def write_outcomes(archive, name, records):
    """Outcome rows of several runs; run_id is the record's position in records."""
    total = sum(len(record) for record in records)
    with archive.add_stream(name, CSV_MIME, ENCODING, rows=total) as stream:
        writer = _writer(stream)
        writer.writerow(("run_id", "setting_a", "setting_b", "outcome_1", "outcome_2"))
        for run_id, record in enumerate(records):
            b_missing = len(record.settings) < 2
            for _, a, b, o1, o2 in record.rows(run_id):
                writer.writerow((
                    run_id,
                    _number(a),
                    "" if b_missing else _number(b),
                    o1,
                    "" if record.outcomes_2 is None else o2,
                ))
    return stream.emitted


def write_field(archive, name, f):
    """Grid coordinates with the real and imaginary parts of a scalar field."""
    grid = f.grid
    coordinates = [c.ravel() for c in grid.mesh()]
    values = np.asarray(f.values).ravel()
    with archive.add_stream(name, CSV_MIME, ENCODING, rows=values.size) as stream:
        writer = _writer(stream)
        writer.writerow(_AXIS_NAMES[:grid.dims] + ("re", "im"))
        for index in range(values.size):
            writer.writerow(
                [_number(c[index]) for c in coordinates]
                + [_number(values[index].real), _number(values[index].imag)]
            )
    return stream.emitted


def write_table(archive, name, header, rows):
    rows = list(rows)
    with archive.add_stream(name, CSV_MIME, ENCODING, rows=len(rows)) as stream:
        writer = _writer(stream)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_number(v) if isinstance(v, float) else v for v in row])
    return stream.emitted


def write_summary(archive, name, document):
    return archive.add(name, dumps(document), mime=JSON_MIME)
