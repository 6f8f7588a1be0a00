"""Run parameters: per-subcommand tables, config files and flag overrides.

Config files are flat ``key = value`` text. Blank lines are ignored and
``#`` starts a comment. Values given as flags override the file, and
anything left unset takes the table default.

Angles and other floats may be written as multiples of pi, for example
``pi/4``, ``7pi/4`` or ``0.5*pi``.
"""
import logging
import math
import re
from dataclasses import dataclass
from pathlib import Path

from pilotwave.errors import IoError, MissingRequired, ParameterTypeError, UnknownKey
from pilotwave.experiments.chsh import OPTIMAL_SETTINGS
from pilotwave.experiments.eprb import ORDERS, SIDE2_FIRST
from pilotwave.fields import MIN_POINTS

logger = logging.getLogger(__name__)

REQUIRED = object()

_PI_MULTIPLE = re.compile(
    r"^(?P<factor>[+-]?(\d+(\.\d*)?|\.\d+)?)\s*\*?\s*pi(\s*/\s*(?P<divisor>\d+(\.\d*)?))?$"
)
_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def parse_float(text):
    text = text.strip().lower()
    match = _PI_MULTIPLE.match(text)
    if match:
        factor = match.group("factor") or ""
        if factor in ("", "+", "-"):
            factor = factor + "1"
        value = float(factor) * math.pi
        if match.group("divisor"):
            value /= float(match.group("divisor"))
        return value
    value = float(text)
    if not math.isfinite(value):
        raise ValueError(f"{text!r} is not finite")
    return value


def parse_int(text):
    return int(text.strip())


def parse_bool(text):
    lowered = text.strip().lower()
    if lowered in _TRUE:
        return True
    if lowered in _FALSE:
        return False
    raise ValueError(f"{text!r} is not a boolean")


def parse_str(text):
    return text.strip()


_PARSERS = {float: parse_float, int: parse_int, bool: parse_bool, str: parse_str}
_KIND_NAMES = {float: "a real number", int: "an integer", bool: "a boolean", str: "a string"}


def positive(value):
    return None if value > 0 else "must be strictly positive"


def non_negative(value):
    return None if value >= 0 else "must not be negative"


def power_of_two(value):
    if value >= MIN_POINTS and value & (value - 1) == 0:
        return None
    return f"must be a power of two of at least {MIN_POINTS}"


def one_of(*choices):
    def check(value):
        return None if value in choices else f"must be one of {', '.join(choices)}"
    return check


@dataclass(frozen=True)
class Parameter:
    name: str
    kind: type
    default: object = REQUIRED
    check: object = None
    help: str = ""

    def convert(self, text, line=None):
        if not isinstance(text, str):
            value = text
        else:
            try:
                value = _PARSERS[self.kind](text)
            except ValueError:
                raise ParameterTypeError(self.name, f"{text.strip()!r} is not {_KIND_NAMES[self.kind]}", line)
        if self.check is not None:
            problem = self.check(value)
            if problem:
                raise ParameterTypeError(self.name, f"{value!r} {problem}", line)
        return value


@dataclass(frozen=True)
class ResolvedConfig:
    """Parameter values after merging defaults, the config file and flags.

    sources maps each name to "default", "file" or "flag".
    """
    subcommand: str
    values: dict
    sources: dict

    def __getitem__(self, name):
        return self.values[name]

    def __getattr__(self, name):
        if name.startswith("_") or name in ("values", "sources", "subcommand"):
            raise AttributeError(name)
        try:
            return self.values[name]
        except KeyError:
            raise AttributeError(name)


SEED = Parameter("seed", int, 0, non_negative, "master random seed")
RENDER = Parameter("render", bool, False, None, "also write PNG images")

_WAVE = (
    Parameter("state", str, "gaussian", one_of("gaussian", "harmonic", "plane"), "initial state"),
    Parameter("potential", str, "free", one_of("free", "harmonic"), "scalar potential"),
    Parameter("lower", float, -32.0, None, "lower grid extent"),
    Parameter("upper", float, 32.0, None, "upper grid extent (excluded)"),
    Parameter("points", int, 256, power_of_two, "grid points"),
    Parameter("x0", float, 0.0, None, "packet centre"),
    Parameter("sigma", float, 1.0, positive, "packet width"),
    Parameter("k", float, 0.0, None, "mean wavenumber"),
    Parameter("omega", float, 1.0, positive, "harmonic frequency"),
    Parameter("dt", float, 1e-3, positive, "time step"),
    Parameter("duration", float, 2.0, positive, "evolution time"),
    Parameter("frame_interval", float, 0.1, positive, "time between stored frames"),
    Parameter("hbar", float, 1.0, positive, "reduced Planck constant"),
    Parameter("mass", float, 1.0, positive, "particle mass"),
)

_EPRB = (
    Parameter("a", float, 0.0, None, "side-1 analyzer angle"),
    Parameter("b", float, 0.0, None, "side-2 analyzer angle"),
    Parameter("order", str, "side1-first", one_of(*ORDERS), "measurement order"),
    Parameter("n", int, 4000, positive, "trajectories per setting"),
    Parameter("sigma", float, 1.0, positive, "packet width"),
    Parameter("gradient", float, 10.0, positive, "field gradient"),
    Parameter("coupling_time", float, 0.5, positive, "coupling duration per side"),
    Parameter("gap", float, 2.0, non_negative, "free time between couplings"),
    Parameter("flight_time", float, 3.0, non_negative, "free flight after the last coupling"),
    Parameter("points", int, 256, power_of_two, "grid points per axis"),
    Parameter("extent", float, 51.2, positive, "half width of the grid"),
    Parameter("dt", float, 5e-3, positive, "time step while coupled"),
)


def _replace(parameters, **changes):
    replaced = []
    for parameter in parameters:
        if parameter.name in changes:
            parameter = Parameter(parameter.name, parameter.kind, changes[parameter.name],
                                  parameter.check, parameter.help)
        replaced.append(parameter)
    return tuple(replaced)


def _without(parameters, *names):
    return tuple(p for p in parameters if p.name not in names)


TABLES = {
    "evolve": _WAVE + (SEED, RENDER),
    "trajectories": _WAVE + (
        Parameter("n", int, 100, positive, "trajectories"),
        Parameter("step_dt", float, 0.0, non_negative, "RK4 step, 0 for a quarter frame interval"),
        SEED,
        RENDER,
    ),
    "equivariance": _WAVE + (
        Parameter("n", int, 10_000, positive, "trajectories"),
        Parameter("bins", int, 64, positive, "bins per axis"),
        SEED,
        RENDER,
    ),
    "double-slit": (
        Parameter("separation", float, 10.0, positive, "slit separation d"),
        Parameter("sigma", float, 1.0, positive, "packet width per slit"),
        Parameter("wavenumber", float, 10.0, positive, "forward wavenumber"),
        Parameter("flight_time", float, 100.0, positive, "flight time T"),
        Parameter("n", int, 100_000, positive, "trajectories"),
        Parameter("points", int, 1024, power_of_two, "grid points"),
        Parameter("extent", float, 320.0, positive, "half width of the grid"),
        Parameter("frame_interval", float, 0.5, positive, "time between stored frames"),
        Parameter("output_interval", float, 5.0, positive, "time between trajectory samples"),
        Parameter("bins", int, 64, positive, "arrival histogram bins"),
        Parameter("stored_trajectories", int, 1000, non_negative, "trajectories written in full"),
        SEED,
        RENDER,
    ),
    "stern-gerlach": (
        Parameter("c_up", float, 1.0, None, "spin-up amplitude"),
        Parameter("c_down", float, 0.0, None, "spin-down amplitude magnitude"),
        Parameter("c_down_phase", float, 0.0, None, "phase of the spin-down amplitude"),
        Parameter("theta", float, 0.0, None, "analyzer angle from z in the x-z plane"),
        Parameter("gradient", float, 3.0, positive, "field gradient"),
        Parameter("mu", float, 1.0, positive, "magnetic moment"),
        Parameter("coupling_time", float, 1.0, positive, "coupling duration"),
        Parameter("flight_time", float, 10.0, non_negative, "free flight"),
        Parameter("sigma", float, 1.0, positive, "packet width"),
        Parameter("n", int, 10_000, positive, "trajectories"),
        Parameter("points", int, 512, power_of_two, "grid points"),
        Parameter("extent", float, 80.0, positive, "half width of the grid"),
        Parameter("dt", float, 0.01, positive, "time step while coupled"),
        SEED,
    ),
    "eprb": _EPRB + (SEED,),
    "chsh": _without(_EPRB, "a", "b") + (
        Parameter("a", float, OPTIMAL_SETTINGS[0], None, "first side-1 angle"),
        Parameter("a_alt", float, OPTIMAL_SETTINGS[1], None, "second side-1 angle"),
        Parameter("b", float, OPTIMAL_SETTINGS[2], None, "first side-2 angle"),
        Parameter("b_alt", float, OPTIMAL_SETTINGS[3], None, "second side-2 angle"),
        SEED,
    ),
    "nonlocality-probe": _replace(_EPRB, order=SIDE2_FIRST, n=2000) + (
        Parameter("b_alt", float, REQUIRED, None, "alternative side-2 angle"),
        Parameter("sample", int, 10, non_negative, "diverging trajectories reported"),
        SEED,
    ),
    "nogo": (
        Parameter("hbar", float, 1.0, positive, "reduced Planck constant"),
    ),
}


def _read_lines(path):
    try:
        return Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as e:
        raise IoError(f"Cannot read config file {path}: {e}") from e


def parse_text(lines, table):
    """Parse key = value lines against a parameter table, recording line numbers."""
    parameters = {p.name: p for p in table}
    values = {}
    for number, raw in enumerate(lines, start=1):
        text = raw.split("#", 1)[0].strip()
        if not text:
            continue
        key, separator, value = text.partition("=")
        key = key.strip()
        if not separator:
            raise ParameterTypeError(key, "expected 'key = value'", number)
        if key not in parameters:
            raise UnknownKey(key, number)
        values[key] = parameters[key].convert(value, number)
    return values


def parse_config(subcommand, path=None, overrides=None):
    """Resolve every parameter of subcommand from defaults, a config file and flags.

    Raises:
        UnknownKey: For names the subcommand does not accept.
        ParameterTypeError: For values of the wrong type or out of range.
        MissingRequired: For required parameters left unset.
    """
    table = TABLES[subcommand]
    parameters = {p.name: p for p in table}
    values, sources = {}, {}
    for parameter in table:
        if parameter.default is not REQUIRED:
            values[parameter.name] = parameter.default
            sources[parameter.name] = "default"
    if path is not None:
        for key, value in parse_text(_read_lines(path), table).items():
            values[key] = value
            sources[key] = "file"
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if key not in parameters:
            raise UnknownKey(key)
        values[key] = parameters[key].convert(value)
        sources[key] = "flag"
    for parameter in table:
        if parameter.name not in values:
            raise MissingRequired(parameter.name)
    for name in sorted(values):
        logger.info("%s: %s = %r (%s)", subcommand, name, values[name], sources[name])
    return ResolvedConfig(subcommand, values, sources)
