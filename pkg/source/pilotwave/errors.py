"""Exceptions raised by pilotwave.

Every exception carries a ``code``, the structured name the command line
front end writes to stderr. Validation failures map to exit status 1 and
numerical failures to exit status 2.
"""


class PilotWaveError(Exception):
    code = "PilotWaveError"


class ValidationError(PilotWaveError, ValueError):
    code = "ValidationError"


class NumericalError(PilotWaveError, ArithmeticError):
    code = "NumericalError"


class IoError(PilotWaveError, OSError):
    code = "IoError"


class GridError(ValidationError):
    code = "GridError"


class ZeroNorm(ValidationError):
    code = "ZeroNorm"

    def __init__(self, norm_squared):
        self.norm_squared = norm_squared
        super().__init__(f"Cannot normalize a field with squared norm {norm_squared!r}")


class ShapeMismatch(ValidationError):
    code = "ShapeMismatch"


class NonFinite(NumericalError):
    code = "NonFinite"

    def __init__(self, time, record=None):
        self.time = time
        self.record = record
        super().__init__(f"Field contains NaN or Inf at t={time!r}")


class InsufficientFrames(ValidationError):
    code = "InsufficientFrames"

    def __init__(self, count, required=2):
        self.count = count
        self.required = required
        super().__init__(f"Need at least {required} frames, record has {count}")


class OutOfWindow(ValidationError):
    code = "OutOfWindow"

    def __init__(self, time, start, end):
        self.time = time
        self.start = start
        self.end = end
        super().__init__(f"Time {time!r} lies outside the record window [{start!r}, {end!r}]")


class DegenerateDensity(ValidationError):
    code = "DegenerateDensity"


class EmptyInput(ValidationError):
    code = "EmptyInput"


class BinMismatch(ValidationError):
    code = "BinMismatch"


class UnresolvedBeams(ValidationError):
    code = "UnresolvedBeams"

    def __init__(self, side, overlap, limit):
        self.side = side
        self.overlap = overlap
        self.limit = limit
        super().__init__(
            f"Beams on side {side} overlap by {overlap:.3g} of the mass at readout "
            f"(limit {limit:.3g}); increase the gradient, coupling time or flight time"
        )


class UnknownKey(ValidationError):
    code = "UnknownKey"

    def __init__(self, key, line=None):
        self.key = key
        self.line = line
        where = f" (line {line})" if line is not None else ""
        super().__init__(f"Unknown parameter {key!r}{where}")


class ParameterTypeError(ValidationError):
    code = "TypeError"

    def __init__(self, key, reason, line=None):
        self.key = key
        self.reason = reason
        self.line = line
        where = f" (line {line})" if line is not None else ""
        super().__init__(f"Parameter {key!r}{where}: {reason}")


class MissingRequired(ValidationError):
    code = "MissingRequired"

    def __init__(self, key):
        self.key = key
        super().__init__(f"Required parameter {key!r} has no value")


class UsageError(ValidationError):
    code = "UsageError"
