import contextlib
import hashlib
import logging

from pilotwave.emitted import EmittedFile

logger = logging.getLogger(__name__)


class DigestingStream:
    """A writable stream that hashes what it writes and registers the file on close."""

    def __init__(self, archive, name, mime, encoding, **meta):
        logger.debug(
            "Creating %s for %r with MIME type %r and encoding %r",
            type(self).__name__,
            name,
            mime,
            encoding
        )
        self._archive = archive
        self._name = name
        self._mime = mime
        self._encoding = encoding
        self._meta = meta
        self._stack = contextlib.ExitStack()
        self._file = self._stack.enter_context(archive.storage.openout(name))
        self._digester = hashlib.sha256()
        self._length = 0
        self._emitted = None

    def __enter__(self):
        return self

    def __exit__(self, type, value, traceback):
        if type is not None:
            self._stack.__exit__(type, value, traceback)
            return False
        self.close()
        return False

    @property
    def name(self):
        return self._name

    @property
    def mime(self):
        return self._mime

    @property
    def encoding(self):
        return self._encoding

    @property
    def emitted(self):
        return self._emitted

    def write(self, data):
        if isinstance(data, str):
            if self._encoding is None:
                raise TypeError(f"{type(self).__name__} without an encoding accepts only bytes")
            data = data.encode(self._encoding)
        self._digester.update(data)
        self._length += len(data)
        self._file.write(data)
        return len(data)

    @property
    def closed(self):
        return self._emitted is not None

    def close(self):
        if self.closed:
            return self._emitted
        self._stack.close()
        self._emitted = EmittedFile(
            self._name,
            self._digester.hexdigest(),
            self._length,
            self._mime,
            self._encoding,
            dict(self._meta),
        )
        logger.debug(
            "%s committed %r with digest %s",
            type(self).__name__,
            self._name,
            self._emitted.digest
        )
        self._archive._register(self._emitted)
        return self._emitted
