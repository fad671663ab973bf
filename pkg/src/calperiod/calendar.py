"""Yearly, monthly, daily and hourly periodicities of calendar-dated intervals.

Pattern occurrences are closed calendar intervals at some resolution (days,
hours, minutes or seconds).  Mining at a period level goes through:

1. merge overlapping/touching occurrences so the list is disjoint;
2. split every occurrence at the boundaries of the level's cycle;
3. strip the high-order calendar fields, mapping each piece onto one cycle;
4. build the occurrence function of the stripped pieces and find its hills;
5. divide each hill's peak by the number of cycles in the lifespan.

Because the list is disjoint before stripping, a stripped position can be
covered at most once per cycle and certainty never exceeds one.

Stripped positions ("offsets") are 1-based.  The yearly cycle uses a leap
layout with 366 day slots, the monthly cycle has 31 day slots; slots that
some cycles lack (Feb 29, days 29-31) are flagged on the hills touching
them rather than renormalised.
"""

from __future__ import annotations

import datetime as _dt
import enum
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence, Union

import numpy as np

from .intervals import (
    ChangeArray,
    IntervalArray,
    LocalMaximum,
    TimeAxis,
    build_change_records,
    build_knot_records,
    find_local_maxima,
    occurrence_at,
    sort_endpoints,
)

Stamp = Union[_dt.date, _dt.datetime]

MONTH_ABBR = ("Jan", "Feb", "Mar", "Apr", "May", "Jun", "Jul", "Aug", "Sep", "Oct", "Nov", "Dec")

# Leap layout of the canonical year: cumulative days before each month.
_DAYS_IN_MONTH_LEAP = (31, 29, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31)
_DAYS_BEFORE_MONTH = tuple(sum(_DAYS_IN_MONTH_LEAP[:i]) for i in range(12))
FEB29_SLOT = _DAYS_BEFORE_MONTH[1] + 29


class Resolution(enum.Enum):
    DAY = 1
    HOUR = 24
    MINUTE = 24 * 60
    SECOND = 24 * 60 * 60

    @property
    def per_day(self) -> int:
        return self.value


class PeriodLevel(enum.Enum):
    YEARLY = "yearly"
    MONTHLY = "monthly"
    DAILY = "daily"
    HOURLY = "hourly"

    def check_resolution(self, res: Resolution) -> None:
        if self is PeriodLevel.DAILY and res is Resolution.DAY:
            raise ValueError("daily periodicities need data finer than one day")
        if self is PeriodLevel.HOURLY and res in (Resolution.DAY, Resolution.HOUR):
            raise ValueError("hourly periodicities need minute or second resolution data")


class Classification(enum.Enum):
    FULL = "full"
    PARTIAL = "partial"


# --------------------------------------------------------------------------
# ticks: integer positions on the absolute timeline at a given resolution


def to_ticks(stamp: Stamp, res: Resolution) -> int:
    day = stamp.toordinal() * res.per_day
    if res is Resolution.DAY:
        return day
    if not isinstance(stamp, _dt.datetime):
        return day
    secs = stamp.hour * 3600 + stamp.minute * 60 + stamp.second
    return day + secs * res.per_day // Resolution.SECOND.per_day


def ordinal_days(year, month, day) -> np.ndarray:
    """Vectorised ``date.toordinal`` over arrays of Gregorian fields."""
    y = np.asarray(year, dtype=np.int64)
    m = np.asarray(month, dtype=np.int64)
    d = np.asarray(day, dtype=np.int64)
    y = y - (m <= 2)
    era = y // 400
    yoe = y - era * 400
    doy = (153 * ((m + 9) % 12) + 2) // 5 + d - 1
    doe = yoe * 365 + yoe // 4 - yoe // 100 + doy
    # days since 0000-03-01, shifted so that 0001-01-01 is 1
    return era * 146097 + doe - 305


def from_ticks(ticks: int, res: Resolution) -> Stamp:
    days, rem = divmod(ticks, res.per_day)
    date = _dt.date.fromordinal(days)
    if res is Resolution.DAY:
        return date
    secs = rem * (Resolution.SECOND.per_day // res.per_day)
    return _dt.datetime(date.year, date.month, date.day) + _dt.timedelta(seconds=secs)


def _truncate(stamp: Stamp, res: Resolution) -> bool:
    """True if ``stamp`` carries nothing finer than ``res``."""
    if res is Resolution.SECOND or not isinstance(stamp, _dt.datetime):
        return not (isinstance(stamp, _dt.datetime) and stamp.microsecond)
    if res is Resolution.DAY:
        return stamp.hour == stamp.minute == stamp.second == stamp.microsecond == 0
    if res is Resolution.HOUR:
        return stamp.minute == stamp.second == stamp.microsecond == 0
    return stamp.second == stamp.microsecond == 0


@dataclass(frozen=True, order=True)
class CalendarInterval:
    """Closed interval ``[start, end]`` of calendar stamps at ``resolution``."""

    start: Stamp
    end: Stamp
    resolution: Resolution = field(default=Resolution.DAY, compare=False)

    def __post_init__(self):
        if self.resolution is Resolution.DAY:
            for s in (self.start, self.end):
                if isinstance(s, _dt.datetime):
                    raise TypeError("day-resolution intervals take dates, not datetimes")
        else:
            for s in (self.start, self.end):
                if not isinstance(s, _dt.datetime):
                    raise TypeError(f"{self.resolution.name.lower()}-resolution intervals take datetimes")
        for s in (self.start, self.end):
            if not _truncate(s, self.resolution):
                raise ValueError(f"{s!r} is finer than {self.resolution.name.lower()} resolution")
        if self.end < self.start:
            raise ValueError(f"interval ends before it starts: {self.start} > {self.end}")

    @property
    def ticks(self) -> tuple[int, int]:
        return to_ticks(self.start, self.resolution), to_ticks(self.end, self.resolution)

    @classmethod
    def from_ticks(cls, lo: int, hi: int, res: Resolution) -> "CalendarInterval":
        return cls(from_ticks(lo, res), from_ticks(hi, res), res)

    def __str__(self) -> str:
        return f"{self.start.isoformat()} to {self.end.isoformat()}"

    def describe(self) -> str:
        """Long form, e.g. ``"18th Dec, 2001 to 31st Dec, 2001"``."""
        return f"{format_long_date(self.start)} to {format_long_date(self.end)}"


def _common_resolution(intervals: Sequence[CalendarInterval]) -> Resolution:
    resolutions = {iv.resolution for iv in intervals}
    if len(resolutions) > 1:
        raise ValueError(f"mixed resolutions: {sorted(r.name for r in resolutions)}")
    return resolutions.pop()


# --------------------------------------------------------------------------
# list discipline


def merge_overlapping(intervals: Iterable[CalendarInterval]) -> list[CalendarInterval]:
    """Union of the intervals as a sorted, pairwise disjoint list.

    Intervals that overlap or touch (one ends the tick before the other
    starts) are coalesced.
    """
    intervals = list(intervals)
    if not intervals:
        return []
    res = _common_resolution(intervals)
    spans = sorted(iv.ticks for iv in intervals)
    merged = [list(spans[0])]
    for lo, hi in spans[1:]:
        if lo <= merged[-1][1] + 1:
            merged[-1][1] = max(merged[-1][1], hi)
        else:
            merged.append([lo, hi])
    return [CalendarInterval.from_ticks(lo, hi, res) for lo, hi in merged]


def cycle_index(stamp: Stamp, level: PeriodLevel, res: Resolution = Resolution.DAY) -> int:
    """Absolute number of the level cycle containing ``stamp``."""
    if level is PeriodLevel.YEARLY:
        return stamp.year
    if level is PeriodLevel.MONTHLY:
        return stamp.year * 12 + stamp.month - 1
    level.check_resolution(res)
    ticks = to_ticks(stamp, res)
    if level is PeriodLevel.DAILY:
        return ticks // res.per_day
    return ticks // (res.per_day // 24)


def _cycle_first_tick(index: int, level: PeriodLevel, res: Resolution) -> int:
    if level is PeriodLevel.YEARLY:
        return _dt.date(index, 1, 1).toordinal() * res.per_day
    if level is PeriodLevel.MONTHLY:
        year, month0 = divmod(index, 12)
        return _dt.date(year, month0 + 1, 1).toordinal() * res.per_day
    if level is PeriodLevel.DAILY:
        return index * res.per_day
    return index * (res.per_day // 24)


def split_by_cycle(interval: CalendarInterval, level: PeriodLevel) -> list[CalendarInterval]:
    """Cut ``interval`` at every cycle boundary of ``level``.

    >>> from datetime import date
    >>> for piece in split_by_cycle(CalendarInterval(date(2001, 12, 18), date(2002, 1, 7)),
    ...                             PeriodLevel.YEARLY):
    ...     print(piece)
    2001-12-18 to 2001-12-31
    2002-01-01 to 2002-01-07
    """
    res = interval.resolution
    level.check_resolution(res)
    lo, hi = interval.ticks
    first = cycle_index(interval.start, level, res)
    last = cycle_index(interval.end, level, res)
    pieces = []
    for idx in range(first, last + 1):
        boundary = _cycle_first_tick(idx + 1, level, res)
        pieces.append(CalendarInterval.from_ticks(lo, min(hi, boundary - 1), res))
        lo = boundary
    return pieces


# --------------------------------------------------------------------------
# stripping


def cycle_length(level: PeriodLevel, res: Resolution = Resolution.DAY) -> int:
    level.check_resolution(res)
    if level is PeriodLevel.YEARLY:
        return 366 * res.per_day
    if level is PeriodLevel.MONTHLY:
        return 31 * res.per_day
    if level is PeriodLevel.DAILY:
        return res.per_day
    return res.per_day // 24


def day_slot(stamp: Stamp) -> int:
    """Day of year in the 366-day leap layout (Mar 1 is always slot 61)."""
    return _DAYS_BEFORE_MONTH[stamp.month - 1] + stamp.day


def strip(stamp: Stamp, level: PeriodLevel, res: Resolution = Resolution.DAY) -> int:
    """1-based position of ``stamp`` within its ``level`` cycle.

    >>> from datetime import date
    >>> strip(date(2003, 7, 12), PeriodLevel.YEARLY)
    194
    >>> strip(date(1999, 4, 10), PeriodLevel.MONTHLY)
    10
    """
    level.check_resolution(res)
    intra = to_ticks(stamp, res) - stamp.toordinal() * res.per_day
    if level is PeriodLevel.YEARLY:
        return (day_slot(stamp) - 1) * res.per_day + intra + 1
    if level is PeriodLevel.MONTHLY:
        return (stamp.day - 1) * res.per_day + intra + 1
    if level is PeriodLevel.DAILY:
        return intra + 1
    return intra % (res.per_day // 24) + 1


def strip_interval(piece: CalendarInterval, level: PeriodLevel) -> list[tuple[int, int]]:
    """Stripped ``(lo, hi)`` offsets of a piece lying within one cycle.

    In common years the yearly layout has no Feb 29, so a piece running
    across Feb 28/Mar 1 is returned as two spans around that slot.
    """
    res = piece.resolution
    lo = strip(piece.start, level, res)
    hi = strip(piece.end, level, res)
    if lo > hi:
        raise ValueError(f"{piece} spans more than one {level.value} cycle")
    if level is PeriodLevel.YEARLY and not _is_leap(piece.start.year):
        gap_lo = (FEB29_SLOT - 1) * res.per_day + 1
        gap_hi = FEB29_SLOT * res.per_day
        if lo < gap_lo and hi > gap_hi:
            return [(lo, gap_lo - 1), (gap_hi + 1, hi)]
    return [(lo, hi)]


def _is_leap(year: int) -> bool:
    return year % 4 == 0 and (year % 100 != 0 or year % 400 == 0)


def irregular_slots(level: PeriodLevel, res: Resolution = Resolution.DAY) -> list[tuple[int, int]]:
    """Offset ranges that not every cycle contains."""
    if level is PeriodLevel.YEARLY:
        return [((FEB29_SLOT - 1) * res.per_day + 1, FEB29_SLOT * res.per_day)]
    if level is PeriodLevel.MONTHLY:
        return [(28 * res.per_day + 1, 31 * res.per_day)]
    return []


# --------------------------------------------------------------------------
# lifespan and certainty


def lifespan_cycles(intervals: Sequence[CalendarInterval], level: PeriodLevel) -> int:
    """Number of ``level`` cycles touched by the span from the earliest start
    to the latest end (partially covered boundary cycles count)."""
    intervals = list(intervals)
    if not intervals:
        raise ValueError("lifespan of an empty interval list is undefined")
    res = _common_resolution(intervals)
    s = min(iv.start for iv in intervals)
    g = max(iv.end for iv in intervals)
    return cycle_index(g, level, res) - cycle_index(s, level, res) + 1


@dataclass(frozen=True)
class SeasonalProfile:
    """Occurrence function over one stripped cycle, plus the cycle count."""

    level: PeriodLevel
    resolution: Resolution
    cycles: int
    stripped: tuple[tuple[int, int], ...]
    changes: ChangeArray

    def occurrences(self, offset: int) -> int:
        return occurrence_at(self.changes, offset)

    def certainty(self, offset: int) -> Fraction:
        return Fraction(self.occurrences(offset), self.cycles)


def seasonal_profile(intervals: Iterable[CalendarInterval], level: PeriodLevel) -> SeasonalProfile:
    """Merge, split and strip ``intervals``; return their stripped profile."""
    disjoint = merge_overlapping(intervals)
    if not disjoint:
        raise ValueError("no intervals")
    res = disjoint[0].resolution
    level.check_resolution(res)
    pieces = [p for iv in disjoint for p in split_by_cycle(iv, level)]
    stripped = [span for p in pieces for span in strip_interval(p, level)]
    arr = IntervalArray.from_arrays(
        [lo for lo, _ in stripped], [hi for _, hi in stripped], TimeAxis.DISCRETE
    )
    changes = build_change_records(sort_endpoints(arr, TimeAxis.DISCRETE), TimeAxis.DISCRETE)
    return SeasonalProfile(level, res, lifespan_cycles(disjoint, level), tuple(stripped), changes)


@dataclass(frozen=True)
class PeriodicityReport:
    hill: LocalMaximum
    peak_certainty: Fraction
    classification: Classification
    cycles: int
    level: PeriodLevel
    resolution: Resolution = Resolution.DAY
    irregular_slot: bool = False

    @property
    def N(self) -> int:
        return self.cycles

    @property
    def span_text(self) -> str:
        return render_span(self.hill.peakstart, self.hill.peakend, self.level, self.resolution)


def _as_fraction(x) -> Fraction:
    if isinstance(x, float):
        return Fraction(str(x))
    return Fraction(x)


def mine_periodicities(
    intervals: Iterable[CalendarInterval],
    level: PeriodLevel,
    min_certainty=0,
) -> list[PeriodicityReport]:
    """Hills of the stripped occurrence function with their peak certainty.

    Hills whose peak certainty is below ``min_certainty`` are dropped.  A
    hill is FULL when its peak certainty is exactly one.
    """
    threshold = _as_fraction(min_certainty)
    if not 0 <= threshold <= 1:
        raise ValueError(f"min_certainty must lie in [0, 1], got {min_certainty!r}")
    intervals = list(intervals)
    if not intervals:
        return []
    profile = seasonal_profile(intervals, level)
    gaps = irregular_slots(level, profile.resolution)
    reports = []
    for hill in find_local_maxima(build_knot_records(profile.changes)):
        certainty = Fraction(hill.peakval, profile.cycles)
        if certainty < threshold:
            continue
        reports.append(
            PeriodicityReport(
                hill=hill,
                peak_certainty=certainty,
                classification=Classification.FULL if certainty == 1 else Classification.PARTIAL,
                cycles=profile.cycles,
                level=level,
                resolution=profile.resolution,
                irregular_slot=any(hill.peakstart <= hi and lo <= hill.peakend for lo, hi in gaps),
            )
        )
    return reports


# --------------------------------------------------------------------------
# rendering


def _ordinal_suffix(n: int) -> str:
    if 10 <= n % 100 <= 20:
        return "th"
    return {1: "st", 2: "nd", 3: "rd"}.get(n % 10, "th")


def format_long_date(stamp: Stamp) -> str:
    text = f"{stamp.day}{_ordinal_suffix(stamp.day)} {MONTH_ABBR[stamp.month - 1]}, {stamp.year}"
    if isinstance(stamp, _dt.datetime):
        text += f" {stamp:%H:%M:%S}"
    return text


def render_offset(offset: int, level: PeriodLevel, res: Resolution = Resolution.DAY) -> str:
    """Calendar wording for a stripped offset, e.g. ``"12 Jul"`` or ``"10th"``."""
    per_day = res.per_day
    if level in (PeriodLevel.YEARLY, PeriodLevel.MONTHLY):
        day_idx, intra = divmod(offset - 1, per_day)
        if level is PeriodLevel.YEARLY:
            slot = day_idx + 1
            month = max(i for i in range(12) if _DAYS_BEFORE_MONTH[i] < slot)
            text = f"{slot - _DAYS_BEFORE_MONTH[month]} {MONTH_ABBR[month]}"
        else:
            text = f"{day_idx + 1}{_ordinal_suffix(day_idx + 1)}"
        return text if res is Resolution.DAY else f"{text} {_clock(intra, res)}"
    if level is PeriodLevel.DAILY:
        return _clock(offset - 1, res)
    secs = (offset - 1) * (Resolution.SECOND.per_day // per_day)
    if res is Resolution.SECOND:
        return f":{secs // 60:02d}:{secs % 60:02d}"
    return f":{secs // 60:02d}"


def _clock(intra: int, res: Resolution) -> str:
    secs = intra * (Resolution.SECOND.per_day // res.per_day)
    h, rem = divmod(secs, 3600)
    m, s = divmod(rem, 60)
    return f"{h:02d}:{m:02d}:{s:02d}" if res is Resolution.SECOND else f"{h:02d}:{m:02d}"


def render_span(lo: int, hi: int, level: PeriodLevel, res: Resolution = Resolution.DAY) -> str:
    a = render_offset(lo, level, res)
    return a if lo == hi else f"{a} to {render_offset(hi, level, res)}"
