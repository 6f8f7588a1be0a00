from dataclasses import dataclass, field


@dataclass(frozen=True)
class EmittedFile:
    """An output file as it was committed: its name, SHA-256 digest and length in bytes."""
    name: str
    digest: str
    length: int
    mime: str = None
    encoding: str = None
    meta: dict = field(default_factory=dict)

    def to_dict(self):
        entry = {
            "name": self.name,
            "sha256": self.digest,
            "length": self.length,
            "mime": self.mime,
            "encoding": self.encoding,
        }
        entry.update(self.meta)
        return entry
