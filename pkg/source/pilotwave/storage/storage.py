from abc import ABC, abstractmethod


class Storage(ABC):
    """Named byte files making up the outputs of one run."""

    @abstractmethod
    def keys(self):
        """An iterator over all stored names
        """
        raise NotImplementedError

    @abstractmethod
    def openout(self, name):
        """A context manager yielding a binary file; the contents appear under name only on success."""
        raise NotImplementedError

    @abstractmethod
    def openin(self, name):
        raise NotImplementedError

    @abstractmethod
    def discard(self, name):
        raise NotImplementedError

    @abstractmethod
    def close(self):
        raise NotImplementedError

    @property
    @abstractmethod
    def closed(self):
        raise NotImplementedError
