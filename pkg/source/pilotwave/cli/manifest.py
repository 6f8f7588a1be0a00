import json
import logging
from dataclasses import dataclass, field
from datetime import datetime, timezone

from pilotwave.version import __version__

MANIFEST_NAME = "manifest.json"

logger = logging.getLogger(__name__)


def timestamp():
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def dumps(document):
    """The canonical JSON form used for every summary: sorted keys, two-space indent."""
    return json.dumps(document, indent=2, sort_keys=True) + "\n"


def grid_document(grid):
    if grid is None:
        return None
    return {"lower": list(grid.lower), "upper": list(grid.upper), "points": list(grid.points)}


def units_document(units):
    if units is None:
        return None
    return {"hbar": units.hbar, "masses": list(units.masses)}


@dataclass
class RunManifest:
    """What was run, with which parameters, and which files it produced."""
    subcommand: str
    parameters: dict
    seed: int = None
    grid: object = None
    units: object = None
    started: str = field(default_factory=timestamp)
    finished: str = None
    files: list = field(default_factory=list)
    version: str = __version__

    def to_document(self):
        return {
            "version": self.version,
            "subcommand": self.subcommand,
            "parameters": dict(self.parameters),
            "seed": self.seed,
            "grid": grid_document(self.grid),
            "units": units_document(self.units),
            "started": self.started,
            "finished": self.finished,
            "files": list(self.files),
        }

    def write(self, archive):
        """Record every file in archive and write the manifest itself, last."""
        self.finished = timestamp()
        self.files = [archive[name].to_dict() for name in archive if name != MANIFEST_NAME]
        logger.debug("%s listing %d file(s)", type(self).__name__, len(self.files))
        return archive.add(MANIFEST_NAME, dumps(self.to_document()), mime="application/json")


def previous_outputs(storage):
    """The files a manifest already in storage lists, followed by the manifest itself.

    Only names still present in storage are returned, so files the earlier
    run did not produce are never touched.
    """
    try:
        with storage.openin(MANIFEST_NAME) as in_file:
            document = json.loads(in_file.read().decode("utf-8"))
    except KeyError:
        return []
    except ValueError as e:
        logger.warning("Ignoring unreadable %s: %s", MANIFEST_NAME, e)
        return []
    entries = document.get("files", []) if isinstance(document, dict) else []
    listed = [entry.get("name") for entry in entries if isinstance(entry, dict)]
    listed.append(MANIFEST_NAME)
    present = set(storage.keys())
    return [name for name in listed if name in present]
