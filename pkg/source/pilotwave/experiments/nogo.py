"""Enumeration check that spin components cannot carry additive preassigned values."""
import itertools
import math
from dataclasses import dataclass

from pilotwave.fields import DEFAULT_UNITS

SATISFIABLE = "SAT"
UNSATISFIABLE = "UNSAT"


@dataclass(frozen=True)
class AssignmentRow:
    s_x: float
    s_y: float
    bisector: float
    admissible: bool


@dataclass(frozen=True)
class ObstructionReport:
    rows: tuple
    verdict: str

    @property
    def admissible_count(self):
        return sum(row.admissible for row in self.rows)

    def summary(self):
        return {
            "rows": [
                {"s_x": r.s_x, "s_y": r.s_y, "bisector": r.bisector, "admissible": r.admissible}
                for r in self.rows
            ],
            "verdict": self.verdict,
        }


def von_neumann_obstruction(units=DEFAULT_UNITS):
    """Try every value assignment to s_x and s_y against the spin component along their bisector.

    The bisector component (s_x + s_y)/sqrt(2) is itself a spin component,
    so a consistent assignment would have to give it one of +-hbar/2.
    """
    half = units.hbar / 2.0
    permitted = (half, -half)
    rows = []
    for s_x, s_y in itertools.product(permitted, repeat=2):
        bisector = (s_x + s_y) / math.sqrt(2.0)
        admissible = any(math.isclose(bisector, value, abs_tol=1e-12) for value in permitted)
        rows.append(AssignmentRow(s_x, s_y, bisector, admissible))
    verdict = SATISFIABLE if any(row.admissible for row in rows) else UNSATISFIABLE
    return ObstructionReport(tuple(rows), verdict)
