"""Periodicity carried from a fine level of a time hierarchy to a coarser one.

If each value of the coarse level l_j has ``p`` combinations of the finer
levels below it, a level l_i pattern with periodicity ``f > (p - 1)/p``
yields ``p`` level l_j patterns whose periodicities average ``f`` and are
each at least ``1 - p(1 - f)``.  Everything here is exact rational
arithmetic.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Sequence

from .calendar import PeriodLevel

# p for the built-in level pairs (fine, coarse).  Day-of-year uses 365.
BUILTIN_P = {
    (PeriodLevel.MONTHLY, PeriodLevel.YEARLY): 12,
    (PeriodLevel.DAILY, PeriodLevel.YEARLY): 365,
}


class HypothesisError(ValueError):
    """f does not exceed (p - 1)/p, so no positive minimum is guaranteed."""


@dataclass(frozen=True)
class HierarchySpec:
    p: int
    f: Fraction
    m_j: int = 1

    def __post_init__(self):
        object.__setattr__(self, "f", Fraction(self.f))
        if int(self.p) != self.p or self.p < 1:
            raise ValueError(f"p must be a positive integer, got {self.p!r}")
        if int(self.m_j) != self.m_j or self.m_j < 1:
            raise ValueError(f"m_j must be a positive integer, got {self.m_j!r}")
        if not 0 < self.f <= 1:
            raise ValueError(f"f must lie in (0, 1], got {self.f}")

    @property
    def m_i(self) -> int:
        return self.p * self.m_j


@dataclass(frozen=True)
class DerivedBounds:
    min_periodicity: Fraction
    avg_periodicity: Fraction
    count: int


def derived_pattern_bounds(spec: HierarchySpec) -> DerivedBounds:
    p, f = spec.p, spec.f
    if f <= Fraction(p - 1, p):
        raise HypothesisError(f"f = {f} does not exceed (p-1)/p = {Fraction(p - 1, p)}")
    return DerivedBounds(1 - p * (1 - f), f, p)


@dataclass(frozen=True)
class BoundCheck:
    """Outcome of checking one occurrence assignment ``n_1..n_p``."""

    passed: bool
    f: Fraction
    bound: Fraction
    min_ratio: Fraction
    mean_ratio: Fraction
    hypothesis_holds: bool
    tight: bool
    argmin: int

    def __bool__(self) -> bool:
        return self.passed


def verify_bounds_by_enumeration(p: int, m_j: int, counts: Sequence[int]) -> BoundCheck:
    """Check the minimum and average periodicity claims on one assignment.

    ``counts[k]`` is how many of the ``m_j`` coarse periods show the pattern
    at the k-th fine combination.  When the hypothesis ``f > (p-1)/p`` fails
    the minimum claim is vacuous (bound <= 0) and only the average is checked
    against the definition.
    """
    counts = [int(n) for n in counts]
    if len(counts) != p:
        raise ValueError(f"expected {p} counts, got {len(counts)}")
    if any(not 0 <= n <= m_j for n in counts):
        raise ValueError(f"every count must lie in [0, {m_j}]")
    f = Fraction(sum(counts), p * m_j)
    bound = 1 - p * (1 - f)
    ratios = [Fraction(n, m_j) for n in counts]
    min_ratio = min(ratios)
    mean_ratio = sum(ratios, Fraction(0)) / p
    return BoundCheck(
        passed=min_ratio >= bound and mean_ratio == f,
        f=f,
        bound=bound,
        min_ratio=min_ratio,
        mean_ratio=mean_ratio,
        hypothesis_holds=f > Fraction(p - 1, p),
        tight=min_ratio == bound,
        argmin=ratios.index(min_ratio),
    )


def all_assignments(p: int, m_j: int) -> Iterator[tuple[int, ...]]:
    return itertools.product(range(m_j + 1), repeat=p)


def tight_assignment(p: int, m_j: int, total: int) -> tuple[int, ...]:
    """``p - 1`` counts at ``m_j`` and the remainder in the last slot."""
    rest = total - (p - 1) * m_j
    if not 0 <= rest <= m_j:
        raise ValueError(f"total {total} cannot be split with p-1 full slots")
    return (m_j,) * (p - 1) + (rest,)
