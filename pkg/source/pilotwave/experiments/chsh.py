"""The CHSH combination of correlations, for simulated runs and local strategies."""
import itertools
import logging
import math
from dataclasses import dataclass, replace

import numpy as np

from pilotwave import seeds
from pilotwave.errors import ValidationError
from pilotwave.experiments.eprb import eprb_run, singlet_correlation
from pilotwave.experiments.outcomes import OutcomeRecord

logger = logging.getLogger(__name__)

# (a, a', b, b') maximizing |S| for E = -cos(a - b).
OPTIMAL_SETTINGS = (0.0, math.pi / 2.0, math.pi / 4.0, 7.0 * math.pi / 4.0)
LOCAL_BOUND = 2.0


def chsh_value(e_ab, e_ab_alt, e_a_alt_b, e_a_alt_b_alt):
    return e_ab + e_ab_alt + e_a_alt_b - e_a_alt_b_alt


def setting_pairs(a, a_alt, b, b_alt):
    return ((a, b), (a, b_alt), (a_alt, b), (a_alt, b_alt))


def singlet_chsh(a, a_alt, b, b_alt):
    return chsh_value(*(singlet_correlation(x, y) for x, y in setting_pairs(a, a_alt, b, b_alt)))


@dataclass(frozen=True, eq=False)
class ChshResult:
    settings: tuple
    correlations: tuple
    errors: tuple
    value: float
    standard_error: float
    records: tuple = ()

    def exceeds_local_bound(self, sigmas=3.0):
        return abs(self.value) - LOCAL_BOUND > sigmas * self.standard_error

    def summary(self):
        return {
            "settings": list(self.settings),
            "correlations": list(self.correlations),
            "errors": list(self.errors),
            "S": self.value,
            "standard_error": self.standard_error,
        }


def chsh_from_records(records):
    """Combine four runs at (a,b), (a,b'), (a',b), (a',b') into S with a combined standard error."""
    records = tuple(records)
    if len(records) != 4:
        raise ValidationError(f"CHSH needs four runs, not {len(records)}")
    (a, b), (_, b_alt), (a_alt, _), _ = (record.settings for record in records)
    correlations = tuple(record.correlation for record in records)
    errors = tuple(record.standard_error for record in records)
    return ChshResult(
        (a, a_alt, b, b_alt),
        correlations,
        errors,
        chsh_value(*correlations),
        math.sqrt(sum(e ** 2 for e in errors)),
        records,
    )


def chsh(cfg, a, a_alt, b, b_alt):
    """Run the four EPRB settings, each with its own derived seed stream, and combine them."""
    records = []
    for index, (x, y) in enumerate(setting_pairs(a, a_alt, b, b_alt)):
        seed = seeds.derive_seed(cfg.seed, f"setting/{index}")
        records.append(eprb_run(replace(cfg, a=x, b=y, seed=seed)))
    result = chsh_from_records(records)
    logger.info("CHSH: S=%.4f +- %.4f", result.value, result.standard_error)
    return result


@dataclass(frozen=True)
class LocalBoundReport:
    """Every deterministic strategy (A(a), A(a'), B(b), B(b')) with its S."""
    rows: tuple
    max_abs: float

    def summary(self):
        return {
            "rows": [
                {"A_a": r[0], "A_a_alt": r[1], "B_b": r[2], "B_b_alt": r[3], "S": r[4]}
                for r in self.rows
            ],
            "max_abs_S": self.max_abs,
        }


def local_deterministic_chsh_bound():
    rows = []
    for strategy in itertools.product((1, -1), repeat=4):
        a_value, a_alt_value, b_value, b_alt_value = strategy
        s = chsh_value(
            a_value * b_value,
            a_value * b_alt_value,
            a_alt_value * b_value,
            a_alt_value * b_alt_value,
        )
        rows.append(strategy + (s,))
    return LocalBoundReport(tuple(rows), float(max(abs(row[4]) for row in rows)))


def strategy_records(strategy, n=1, settings=OPTIMAL_SETTINGS):
    """Outcome records produced by a predetermined local strategy, for feeding chsh_from_records."""
    if len(strategy) != 4 or len(settings) != 4:
        raise ValidationError("A strategy assigns four values for four settings")
    records = []
    for first, second in ((0, 2), (0, 3), (1, 2), (1, 3)):
        records.append(OutcomeRecord(
            (settings[first], settings[second]),
            np.full(n, strategy[first], dtype=np.int8),
            np.full(n, strategy[second], dtype=np.int8),
        ))
    return tuple(records)
