import contextlib
import logging
import os
from pathlib import Path

import atomicwrites

from pilotwave.errors import IoError
from pilotwave.storage.storage import Storage

logger = logging.getLogger(__name__)


class FileStorage(Storage):

    def __init__(self, root_dirpath):
        """
        Args:
            root_dirpath: The directory receiving the output files. It is
                created if it does not exist.

        Raises:
            IoError: If root_dirpath exists but is not a directory.
        """
        self._root_dirpath = Path(root_dirpath)
        logger.debug("Creating %s with dirpath %s", type(self).__name__, self._root_dirpath)
        try:
            self._root_dirpath.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            raise IoError(f"Cannot create output directory {self._root_dirpath}: {e}") from e

    @property
    def root_dirpath(self):
        return self._root_dirpath

    def _path(self, name):
        if self.closed:
            raise IoError(f"{type(self).__name__} has been closed")
        if not name or name in (".", "..") or "/" in name or os.sep in name:
            raise IoError(f"Output name {name!r} must be a plain file name")
        return self._root_dirpath / name

    def keys(self):
        for entry in sorted(os.listdir(self._root_dirpath)):
            if (self._root_dirpath / entry).is_file():
                yield entry

    @contextlib.contextmanager
    def openout(self, name):
        path = self._path(name)
        logger.debug("%s opening %s for atomic write", type(self).__name__, path)
        try:
            with atomicwrites.atomic_write(path, mode="wb", overwrite=True) as out_file:
                yield out_file
        except OSError as e:
            raise IoError(f"Cannot write {path}: {e}") from e
        self._sync_parent_directory(path)
        logger.debug("%s wrote %s", type(self).__name__, path)

    @contextlib.contextmanager
    def openin(self, name):
        path = self._path(name)
        try:
            with open(path, mode="rb") as in_file:
                yield in_file
        except FileNotFoundError:
            raise KeyError(name)

    def discard(self, name):
        path = self._path(name)
        logger.debug("%s removing %s", type(self).__name__, path)
        path.unlink(missing_ok=True)
        self._sync_parent_directory(path)

    def _sync_parent_directory(self, path: Path):
        logger.debug("Syncing parent directory of %s", path)
        atomicwrites._sync_directory(str(path.parent))

    def close(self):
        self._root_dirpath = None
        logger.debug("%s closed", type(self).__name__)

    @property
    def closed(self):
        return self._root_dirpath is None

    def __repr__(self):
        return f"{type(self).__name__}(root_dirpath={self._root_dirpath})"
