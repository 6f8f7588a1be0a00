import logging
import threading
from collections.abc import Mapping

from pilotwave.errors import IoError
from pilotwave.streams import DigestingStream

DEFAULT_ENCODING = "utf-8"

logger = logging.getLogger(__name__)


class ArchiveClosed(IoError):

    def __init__(self):
        super().__init__(f"{RunArchive.__name__} has been closed")


class RunArchive(Mapping):
    """The files emitted by one run, by name.

    Files are committed atomically and recorded with their digests, in the
    order they were committed.
    """

    def __init__(self, storage):
        self._lock = threading.RLock()
        self._storage = storage
        self._emitted = {}

    @property
    def storage(self):
        if self.closed:
            raise ArchiveClosed()
        with self._lock:
            return self._storage

    @property
    def closed(self):
        with self._lock:
            return self._storage is None

    def close(self):
        with self._lock:
            self._storage = None
        logger.debug("%s closing", type(self).__name__)

    def __enter__(self):
        return self

    def __exit__(self, exception_type, exception_value, traceback):
        self.close()

    def add_stream(self, name, mime=None, encoding=None, **meta):
        """Returns an open, writable file-like-object and context manager
        which when closed, commits the data under name and records it in
        this archive.

        name: The file name within the run's output directory.

        mime: The optional MIME type of the data.

        encoding: If encoding is None (the default) the returned file-like-
            object will only accept bytes objects. Otherwise strings are
            accepted and encoded with it.

        **meta: Extra fields recorded alongside the file's digest.
        """
        logger.debug(
            "%s adding stream %r with MIME type %r and encoding %r",
            type(self).__name__,
            name,
            mime,
            encoding
        )
        if self.closed:
            raise ArchiveClosed()
        return DigestingStream(self, name, mime, encoding, **meta)

    def add(self, name, data, mime=None, encoding=None, **meta):
        """Writes data as the file name.

        Args:
            name: The file name.
            data (bytes or str): The contents. Strings are encoded with
                encoding, UTF-8 by default.
            mime: The MIME type of the data.
            encoding: The encoding of the data.

        Returns:
            The EmittedFile recording the committed data.
        """
        logger.debug(
            "%s adding %r of length %r with MIME type %r and encoding %r",
            type(self).__name__,
            name,
            len(data),
            mime,
            encoding
        )
        if isinstance(data, str):
            encoding = encoding or DEFAULT_ENCODING
            data = data.encode(encoding)

        if not isinstance(data, bytes):
            raise TypeError("data type must be bytes or str")

        with self.add_stream(name, mime, encoding=encoding, **meta) as stream:
            stream.write(data)
        return stream.emitted

    def _register(self, emitted):
        with self._lock:
            self._emitted[emitted.name] = emitted

    def __iter__(self):
        with self._lock:
            yield from list(self._emitted)

    def __getitem__(self, name):
        with self._lock:
            return self._emitted[name]

    def __delitem__(self, name):
        logger.debug("%s removing %r", type(self).__name__, name)
        with self._lock:
            if name not in self._emitted:
                raise KeyError(name)
            self.storage.discard(name)
            del self._emitted[name]

    def __len__(self):
        with self._lock:
            return len(self._emitted)

    def __repr__(self):
        return f"{type(self).__name__}(storage={self._storage})"
