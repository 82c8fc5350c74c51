"""Three-level Box-Behnken experiment designs.

A Box-Behnken design for k factors holds, for every unordered factor pair,
the four (+/-1, +/-1) edge combinations with all other factors at their
middle level, plus C0 replicated center runs. Run count is 2k(k-1) + C0.

Rows are enumerated deterministically: factor pairs in lexicographic index
order, sign combinations ordered (-,-), (-,+), (+,-), (+,+), center rows
last. Published run tables may use any order, so comparisons against a
reference are made as multisets via :func:`verify_against_reference`.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from itertools import combinations

from .errors import InvalidDesignError, SchemaError
from .schema import STUDY_LEVELS, FEATURE_UNITS, PARAM_NAMES


@dataclass(frozen=True)
class FactorSpec:
    """One experiment factor with exactly three ascending levels."""

    name: str
    levels: tuple[float, float, float]
    unit: str = ""

    def __post_init__(self):
        if len(self.levels) != 3:
            raise SchemaError(f"factor {self.name!r} needs exactly 3 levels, got {len(self.levels)}")
        lo, mid, hi = self.levels
        if not (lo < mid < hi):
            raise SchemaError(f"factor {self.name!r} levels must be strictly ascending: {self.levels}")


@dataclass
class DesignMatrix:
    """Coded Box-Behnken run matrix over {-1, 0, +1}."""

    factors: list[FactorSpec]
    coded_rows: list[tuple[int, ...]]
    center_replicates: int

    def __post_init__(self):
        self.validate()

    @property
    def k(self) -> int:
        return len(self.factors)

    def validate(self) -> None:
        """Check every structural invariant; raise on the first violation."""
        names = [f.name for f in self.factors]
        if len(set(names)) != len(names):
            raise SchemaError(f"duplicate factor names in design: {names}")
        k = self.k
        if self.center_replicates < 0:
            raise InvalidDesignError("center_replicates must be >= 0")
        expected = 2 * k * (k - 1) + self.center_replicates
        if len(self.coded_rows) != expected:
            raise InvalidDesignError(
                f"row count {len(self.coded_rows)} != 2k(k-1)+C0 = {expected} for k={k}"
            )
        edge_rows = []
        n_center = 0
        for row in self.coded_rows:
            if len(row) != k:
                raise SchemaError(f"coded row width {len(row)} != k={k}")
            if any(c not in (-1, 0, 1) for c in row):
                raise InvalidDesignError(f"coded values must be -1/0/+1: {row}")
            nonzero = [i for i, c in enumerate(row) if c != 0]
            if not nonzero:
                n_center += 1
            elif len(nonzero) == 2:
                edge_rows.append(row)
            else:
                raise InvalidDesignError(
                    f"non-center row must have exactly 2 non-zero coordinates: {row}"
                )
        if n_center != self.center_replicates:
            raise InvalidDesignError(
                f"found {n_center} center rows, declared C0={self.center_replicates}"
            )
        if len(set(edge_rows)) != len(edge_rows):
            raise InvalidDesignError("duplicate non-center rows")
        # Each factor pair must realize the four sign combinations exactly once.
        for i, j in combinations(range(k), 2):
            signs = sorted((row[i], row[j]) for row in edge_rows if row[i] != 0 and row[j] != 0)
            if signs != [(-1, -1), (-1, 1), (1, -1), (1, 1)]:
                raise InvalidDesignError(
                    f"factor pair ({i},{j}) does not realize the 4 sign combinations exactly once"
                )


def generate_bbd(factors: list[FactorSpec], center_replicates: int = 0) -> DesignMatrix:
    """Build the Box-Behnken design for the given factors.

    Needs at least 3 factors. Row order is deterministic (see module
    docstring), so repeated calls with the same inputs return identical
    sequences.
    """
    k = len(factors)
    if k < 3:
        raise InvalidDesignError(f"Box-Behnken designs need k >= 3 factors, got {k}")
    if center_replicates < 0:
        raise InvalidDesignError("center_replicates must be >= 0")
    names = [f.name for f in factors]
    if len(set(names)) != len(names):
        raise SchemaError(f"duplicate factor names: {names}")

    rows: list[tuple[int, ...]] = []
    for i, j in combinations(range(k), 2):
        for si, sj in ((-1, -1), (-1, 1), (1, -1), (1, 1)):
            row = [0] * k
            row[i] = si
            row[j] = sj
            rows.append(tuple(row))
    rows.extend([tuple([0] * k)] * center_replicates)
    return DesignMatrix(factors=list(factors), coded_rows=rows, center_replicates=center_replicates)


def map_levels(design: DesignMatrix) -> list[tuple[float, ...]]:
    """Replace coded -1/0/+1 with the factor's low/middle/high level."""
    out = []
    for row in design.coded_rows:
        out.append(tuple(f.levels[c + 1] for f, c in zip(design.factors, row)))
    return out


@dataclass
class MatchReport:
    """Multiset difference between a mapped design and a reference table.

    ``missing_rows`` are design rows absent from the reference,
    ``extra_rows`` are reference rows the design does not produce, and
    ``multiplicity_mismatches`` hold (row, design count, reference count)
    for rows present on both sides with different counts.
    """

    missing_rows: list[tuple[float, ...]] = field(default_factory=list)
    extra_rows: list[tuple[float, ...]] = field(default_factory=list)
    multiplicity_mismatches: list[tuple[tuple[float, ...], int, int]] = field(default_factory=list)

    @property
    def empty(self) -> bool:
        return not (self.missing_rows or self.extra_rows or self.multiplicity_mismatches)


def verify_against_reference(
    design: DesignMatrix, reference_rows: list[tuple[float, ...]]
) -> MatchReport:
    """Compare the level-mapped design against a reference run table.

    Both sides must share the factor order. The report is empty iff the two
    row collections are equal as multisets.
    """
    mapped = map_levels(design)
    for row in reference_rows:
        if len(row) != design.k:
            raise SchemaError(
                f"reference row width {len(row)} != design factor count {design.k}"
            )
    ours = Counter(tuple(float(v) for v in row) for row in mapped)
    theirs = Counter(tuple(float(v) for v in row) for row in reference_rows)
    report = MatchReport()
    for row in sorted(set(ours) | set(theirs)):
        a, b = ours[row], theirs[row]
        if a == b:
            continue
        if b == 0:
            report.missing_rows.append(row)
        elif a == 0:
            report.extra_rows.append(row)
        else:
            report.multiplicity_mismatches.append((row, a, b))
    return report


def study_factors() -> list[FactorSpec]:
    """The seven process-parameter factors of the reference campaign."""
    return [
        FactorSpec(name=name, levels=STUDY_LEVELS[name], unit=FEATURE_UNITS[name])
        for name in PARAM_NAMES
    ]
