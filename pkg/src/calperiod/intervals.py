"""Occurrence function of a set of time intervals.

The occurrence function ``occ(t)`` counts how many input intervals contain
``t``.  It is piecewise constant between sorted endpoints, so it is captured
by a short array of *change records* built in one sweep over the sorted
endpoints.  Point queries binary-search that array; local maxima are found
by scanning *knot records*, each of which holds a single step of the
function.

Everything here works on two kinds of time axis:

* ``TimeAxis.DISCRETE`` -- integer timestamps; all intervals are closed
  (open endpoints are shifted one unit inward on ingestion).
* ``TimeAxis.CONTINUOUS`` -- finite float timestamps with independently
  open/closed endpoints.  Timestamps are compared exactly.

The bulk structures (``EndpointArray``, ``ChangeArray``, ``KnotArray``) keep
their columns as numpy arrays so that millions of intervals can be processed;
indexing or iterating them yields small named tuples.
"""

from __future__ import annotations

import bisect
import enum
import math
import numbers
import re
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Iterator, NamedTuple, Sequence, Union

import numpy as np

Timestamp = Union[int, float]

__all__ = [
    "TimeAxis",
    "Bound",
    "EndpointType",
    "Interval",
    "IntervalArray",
    "InvalidIntervalError",
    "MalformedEndpointsError",
    "EndpointRecord",
    "ChangeRecord",
    "KnotRecord",
    "LocalMaximum",
    "EndpointArray",
    "ChangeArray",
    "KnotArray",
    "radix_argsort",
    "sort_endpoints",
    "build_change_records",
    "occurrence_at",
    "occurrence_many",
    "build_knot_records",
    "find_local_maxima",
]


class TimeAxis(enum.Enum):
    DISCRETE = "discrete"
    CONTINUOUS = "continuous"

    @property
    def dtype(self):
        return np.int64 if self is TimeAxis.DISCRETE else np.float64

    def check_timestamp(self, t) -> Timestamp:
        """Return ``t`` as a plain Python scalar valid on this axis."""
        if isinstance(t, (bool, np.bool_)):
            raise TypeError(f"boolean is not a timestamp: {t!r}")
        if self is TimeAxis.DISCRETE:
            if isinstance(t, numbers.Integral):
                return int(t)
            if isinstance(t, numbers.Real) and float(t).is_integer():
                return int(t)
            raise TypeError(f"discrete timestamps must be integers, got {t!r}")
        if not isinstance(t, numbers.Real):
            raise TypeError(f"continuous timestamps must be real, got {t!r}")
        t = float(t)
        if not math.isfinite(t):
            raise ValueError(f"continuous timestamps must be finite, got {t!r}")
        return t


class Bound(enum.Enum):
    OPEN = "open"
    CLOSED = "closed"


class EndpointType(enum.IntEnum):
    """Endpoint kinds, numbered in the tie-break order used by the sort."""

    LEFT_CLOSED = 0
    LEFT_OPEN = 1
    RIGHT_OPEN = 2
    RIGHT_CLOSED = 3

    @property
    def short(self) -> str:
        return _ET_SHORT[self]


_ET_SHORT = {
    EndpointType.LEFT_CLOSED: "LC",
    EndpointType.LEFT_OPEN: "LO",
    EndpointType.RIGHT_OPEN: "RO",
    EndpointType.RIGHT_CLOSED: "RC",
}

LC = EndpointType.LEFT_CLOSED
LO = EndpointType.LEFT_OPEN
RO = EndpointType.RIGHT_OPEN
RC = EndpointType.RIGHT_CLOSED


class InvalidIntervalError(ValueError):
    """An input interval violates the interval invariants."""

    def __init__(self, index: int, reason: str):
        super().__init__(f"interval #{index}: {reason}")
        self.index = index
        self.reason = reason


class MalformedEndpointsError(ValueError):
    """Endpoint records that cannot come from a valid interval set."""


_INTERVAL_RE = re.compile(r"^\s*([\[(])\s*([^,\s]+)\s*,\s*([^,\s\])]+)\s*([\])])\s*$")


@dataclass(frozen=True)
class Interval:
    lo: Timestamp
    hi: Timestamp
    lo_kind: Bound = Bound.CLOSED
    hi_kind: Bound = Bound.CLOSED

    @classmethod
    def closed(cls, lo, hi) -> "Interval":
        return cls(lo, hi)

    @classmethod
    def parse(cls, text: str) -> "Interval":
        """Parse bracket notation such as ``"[0, 2)"`` or ``"(1,3]"``."""
        m = _INTERVAL_RE.match(text)
        if not m:
            raise ValueError(f"cannot parse interval {text!r}")
        lb, lo, hi, rb = m.groups()

        def num(s):
            try:
                return int(s)
            except ValueError:
                return float(s)

        return cls(
            num(lo),
            num(hi),
            Bound.CLOSED if lb == "[" else Bound.OPEN,
            Bound.CLOSED if rb == "]" else Bound.OPEN,
        )

    def contains(self, s) -> bool:
        left = self.lo <= s if self.lo_kind is Bound.CLOSED else self.lo < s
        right = s <= self.hi if self.hi_kind is Bound.CLOSED else s < self.hi
        return left and right

    def canonical(self, axis: TimeAxis) -> "Interval":
        """Validate on ``axis``; on a discrete axis also close open endpoints.

        Raises ValueError/TypeError describing the first violated invariant.
        """
        lo = axis.check_timestamp(self.lo)
        hi = axis.check_timestamp(self.hi)
        lo_kind, hi_kind = self.lo_kind, self.hi_kind
        if axis is TimeAxis.DISCRETE:
            if lo_kind is Bound.OPEN:
                lo += 1
            if hi_kind is Bound.OPEN:
                hi -= 1
            lo_kind = hi_kind = Bound.CLOSED
        if lo > hi:
            raise ValueError(f"empty interval: lo={lo!r} > hi={hi!r}")
        if lo == hi and not (lo_kind is Bound.CLOSED and hi_kind is Bound.CLOSED):
            raise ValueError(f"single-point interval at {lo!r} must be closed on both ends")
        return Interval(lo, hi, lo_kind, hi_kind)

    def __str__(self) -> str:
        lb = "[" if self.lo_kind is Bound.CLOSED else "("
        rb = "]" if self.hi_kind is Bound.CLOSED else ")"
        return f"{lb}{self.lo}, {self.hi}{rb}"


@dataclass(frozen=True, eq=False)
class IntervalArray:
    """Column form of a validated, canonical interval set.

    ``lo_open``/``hi_open`` are boolean arrays; on a discrete axis they are
    all False.
    """

    axis: TimeAxis
    lo: np.ndarray
    hi: np.ndarray
    lo_open: np.ndarray
    hi_open: np.ndarray

    def __len__(self) -> int:
        return len(self.lo)

    @classmethod
    def from_intervals(cls, intervals: Iterable[Interval], axis: TimeAxis) -> "IntervalArray":
        canon = []
        for i, iv in enumerate(intervals):
            if not isinstance(iv, Interval):
                try:
                    iv = Interval(*iv)
                except TypeError as exc:
                    raise InvalidIntervalError(i, f"not an interval: {iv!r}") from exc
            try:
                canon.append(iv.canonical(axis))
            except (TypeError, ValueError) as exc:
                raise InvalidIntervalError(i, str(exc)) from exc
        return cls(
            axis,
            np.array([c.lo for c in canon], dtype=axis.dtype),
            np.array([c.hi for c in canon], dtype=axis.dtype),
            np.array([c.lo_kind is Bound.OPEN for c in canon], dtype=bool),
            np.array([c.hi_kind is Bound.OPEN for c in canon], dtype=bool),
        )

    @classmethod
    def from_arrays(cls, lo, hi, axis: TimeAxis, lo_open=None, hi_open=None) -> "IntervalArray":
        """Vectorised ingestion; same canonicalisation as ``from_intervals``."""
        lo = np.asarray(lo)
        hi = np.asarray(hi)
        if lo.shape != hi.shape or lo.ndim != 1:
            raise ValueError("lo and hi must be 1-d arrays of equal length")
        n = len(lo)
        lo_open = np.zeros(n, bool) if lo_open is None else np.asarray(lo_open, bool)
        hi_open = np.zeros(n, bool) if hi_open is None else np.asarray(hi_open, bool)
        if axis is TimeAxis.DISCRETE:
            if n and not (np.issubdtype(lo.dtype, np.integer) and np.issubdtype(hi.dtype, np.integer)):
                bad = ~(np.equal(np.mod(lo, 1), 0) & np.equal(np.mod(hi, 1), 0))
                if bad.any():
                    i = int(np.flatnonzero(bad)[0])
                    raise InvalidIntervalError(i, "discrete timestamps must be integers")
            lo = lo.astype(np.int64) + lo_open
            hi = hi.astype(np.int64) - hi_open
            lo_open = np.zeros(n, bool)
            hi_open = np.zeros(n, bool)
        else:
            lo = lo.astype(np.float64)
            hi = hi.astype(np.float64)
            bad = ~(np.isfinite(lo) & np.isfinite(hi))
            if bad.any():
                i = int(np.flatnonzero(bad)[0])
                raise InvalidIntervalError(i, "continuous timestamps must be finite")
        bad = (lo > hi) | ((lo == hi) & (lo_open | hi_open))
        if bad.any():
            i = int(np.flatnonzero(bad)[0])
            raise InvalidIntervalError(i, f"empty interval lo={lo[i]!r} hi={hi[i]!r}")
        return cls(axis, lo, hi, lo_open, hi_open)

    def intervals(self) -> list[Interval]:
        kind = {False: Bound.CLOSED, True: Bound.OPEN}
        return [
            Interval(a, b, kind[lo_o], kind[hi_o])
            for a, b, lo_o, hi_o in zip(
                self.lo.tolist(), self.hi.tolist(), self.lo_open.tolist(), self.hi_open.tolist()
            )
        ]


class EndpointRecord(NamedTuple):
    t: Timestamp
    et: EndpointType


class ChangeRecord(NamedTuple):
    t: Timestamp
    u: int
    r: int


class KnotRecord(NamedTuple):
    t: Timestamp
    v: int


@dataclass(frozen=True)
class LocalMaximum:
    """One hill of the occurrence function.

    The function rises from ``startval`` at ``start`` to the plateau
    ``[peakstart, peakend]`` at ``peakval`` and falls to ``endval`` at ``end``.
    """

    start: Timestamp
    startval: int
    peakstart: Timestamp
    peakend: Timestamp
    peakval: int
    end: Timestamp
    endval: int

    def as_dict(self) -> dict:
        return {
            "start": self.start,
            "startval": self.startval,
            "peakstart": self.peakstart,
            "peakend": self.peakend,
            "peakval": self.peakval,
            "end": self.end,
            "endval": self.endval,
        }


def _scalar(axis: TimeAxis, x):
    return int(x) if axis is TimeAxis.DISCRETE else float(x)


class _Columns(Sequence):
    """Shared sequence behaviour for the column-oriented record arrays."""

    _record: type
    _fields: tuple[str, ...]

    def __len__(self) -> int:
        return len(self.t)

    def __getitem__(self, i):
        if isinstance(i, slice):
            return [self[j] for j in range(*i.indices(len(self)))]
        return self._make(i)

    def __iter__(self) -> Iterator:
        cols = [getattr(self, f).tolist() for f in self._fields]
        for row in zip(*cols):
            yield self._wrap(row)

    def __eq__(self, other) -> bool:
        if isinstance(other, _Columns):
            return self.axis is other.axis and list(self) == list(other)
        if isinstance(other, (list, tuple)):
            return list(self) == list(other)
        return NotImplemented

    __hash__ = None

    def __repr__(self) -> str:
        return f"{type(self).__name__}({list(self)!r})"

    def _make(self, i):
        return self._wrap(tuple(getattr(self, f)[i].item() for f in self._fields))

    def _wrap(self, row):
        return self._record(*row)

    def to_json(self) -> list[dict]:
        return [rec._asdict() for rec in self]


@dataclass(frozen=True, eq=False, repr=False)
class EndpointArray(_Columns):
    axis: TimeAxis
    t: np.ndarray
    et: np.ndarray

    _record = EndpointRecord
    _fields = ("t", "et")

    def _wrap(self, row):
        return EndpointRecord(row[0], EndpointType(row[1]))

    def to_json(self) -> list[dict]:
        return [{"t": rec.t, "et": rec.et.short} for rec in self]

    @classmethod
    def from_records(cls, records: Iterable, axis: TimeAxis) -> "EndpointArray":
        recs = list(records)
        return cls(
            axis,
            np.array([axis.check_timestamp(r[0]) for r in recs], dtype=axis.dtype),
            np.array([int(EndpointType(r[1])) for r in recs], dtype=np.int8),
        )


@dataclass(frozen=True, eq=False, repr=False)
class ChangeArray(_Columns):
    """Change records ``(t, u, r)``, strictly increasing in ``t``.

    ``u`` is the function value at ``t``; ``r`` is the value just right of
    ``t`` (continuous axis) or at ``t + 1`` (discrete axis).
    """

    axis: TimeAxis
    t: np.ndarray
    u: np.ndarray
    r: np.ndarray

    _record = ChangeRecord
    _fields = ("t", "u", "r")

    @classmethod
    def from_records(cls, records: Iterable, axis: TimeAxis) -> "ChangeArray":
        recs = list(records)
        return cls(
            axis,
            np.array([axis.check_timestamp(r[0]) for r in recs], dtype=axis.dtype),
            np.array([r[1] for r in recs], dtype=np.int64),
            np.array([r[2] for r in recs], dtype=np.int64),
        )

    # Python lists make scalar bisection several times faster than numpy.
    @cached_property
    def _t_list(self) -> list:
        return self.t.tolist()

    @cached_property
    def _u_list(self) -> list:
        return self.u.tolist()

    @cached_property
    def _r_list(self) -> list:
        return self.r.tolist()


@dataclass(frozen=True, eq=False, repr=False)
class KnotArray(_Columns):
    axis: TimeAxis
    t: np.ndarray
    v: np.ndarray

    _record = KnotRecord
    _fields = ("t", "v")

    @classmethod
    def from_records(cls, records: Iterable, axis: TimeAxis) -> "KnotArray":
        recs = list(records)
        return cls(
            axis,
            np.array([axis.check_timestamp(r[0]) for r in recs], dtype=axis.dtype),
            np.array([r[1] for r in recs], dtype=np.int64),
        )


# --------------------------------------------------------------------------
# sorting


def radix_argsort(*fields: np.ndarray) -> np.ndarray:
    """Stable LSD radix argsort over non-negative integer key fields.

    ``fields`` are given most significant first.  Each field is split into
    16-bit digits; every digit pass is a stable sort on a ``uint16`` array,
    for which numpy's ``kind="stable"`` is a counting/radix sort, so the
    total cost is linear in the number of keys times the number of digits.
    """
    if not fields:
        raise ValueError("need at least one key field")
    n = len(fields[0])
    order = np.arange(n, dtype=np.intp)
    for field in reversed(fields):
        field = np.asarray(field)
        if len(field) != n:
            raise ValueError("key fields must have equal length")
        if n == 0:
            continue
        if field.min() < 0:
            raise ValueError("radix keys must be non-negative")
        key = field.astype(np.uint64)
        top = int(key.max())
        shift = 0
        while True:
            digit = ((key[order] >> np.uint64(shift)) & np.uint64(0xFFFF)).astype(np.uint16)
            order = order[np.argsort(digit, kind="stable")]
            shift += 16
            if top >> shift == 0:
                break
    return order


def _as_interval_array(intervals, axis: TimeAxis) -> IntervalArray:
    if isinstance(intervals, IntervalArray):
        if intervals.axis is not axis:
            raise ValueError(f"interval array is on {intervals.axis}, expected {axis}")
        return intervals
    return IntervalArray.from_intervals(intervals, axis)


def sort_endpoints(intervals, axis: TimeAxis) -> EndpointArray:
    """Split intervals into ``2n`` endpoint records sorted by timestamp.

    Equal timestamps are ordered LC < LO < RO < RC.  Discrete timestamps use
    a counting sort when their range is dense and :func:`radix_argsort`
    otherwise; continuous ones use a comparison sort.
    Invalid intervals raise :class:`InvalidIntervalError` naming the index.
    """
    arr = _as_interval_array(intervals, axis)
    t = np.concatenate([arr.lo, arr.hi])
    et = np.concatenate(
        [
            np.where(arr.lo_open, int(LO), int(LC)),
            np.where(arr.hi_open, int(RO), int(RC)),
        ]
    ).astype(np.int8)
    if len(t) == 0:
        return EndpointArray(axis, t.astype(axis.dtype), et)
    if axis is TimeAxis.DISCRETE:
        base = t.min()
        span = int(t.max() - base) + 1
        if span * 4 <= 8 * len(t) + (1 << 16):
            # dense keys: records with equal (t, et) are identical, so a
            # counting sort can emit the sorted columns without a permutation
            counts = np.bincount((t - base) * 4 + et, minlength=span * 4)
            key = np.repeat(np.arange(span * 4, dtype=np.int64), counts)
            return EndpointArray(axis, (key >> 2) + base, (key & 3).astype(np.int8))
        order = radix_argsort(t - base, et)
    else:
        order = np.lexsort((et, t))
    return EndpointArray(axis, t[order], et[order])


# --------------------------------------------------------------------------
# change records


def build_change_records(endpoints, axis: TimeAxis) -> ChangeArray:
    """Sweep sorted endpoints and record every change of ``occ``.

    For each distinct timestamp with counts n1..n4 (LO, LC, RO, RC) and
    left-hand limit L::

        u = L + n2 - n3
        r = L + n1 + n2 - n3 - n4

    and a record is kept when either delta is nonzero.  On a discrete axis
    ``r`` is then replaced by the next record's ``u`` whenever that record
    sits at ``t + 1``.
    """
    if not isinstance(endpoints, EndpointArray):
        endpoints = EndpointArray.from_records(endpoints, axis)
    t = endpoints.t
    et = endpoints.et.astype(np.int64)
    if len(t) == 0:
        empty = np.zeros(0, np.int64)
        return ChangeArray(axis, t.astype(axis.dtype), empty, empty.copy())
    if np.any(t[1:] < t[:-1]):
        raise MalformedEndpointsError("endpoints are not sorted by timestamp")

    starts = np.flatnonzero(np.concatenate(([True], t[1:] != t[:-1])))
    group = np.cumsum(np.concatenate(([0], (t[1:] != t[:-1]).astype(np.int64))))
    counts = np.bincount(group * 4 + et, minlength=len(starts) * 4).reshape(-1, 4)
    n2, n1, n3, n4 = counts[:, LC], counts[:, LO], counts[:, RO], counts[:, RC]

    du = n2 - n3
    dr = n1 + n2 - n3 - n4
    right = np.cumsum(dr)
    left = right - dr
    keep = (du != 0) | (dr != 0)

    ct = t[starts][keep]
    u = (left + du)[keep]
    r = right[keep]
    if np.any(u < 0) or np.any(r < 0):
        raise MalformedEndpointsError("running occurrence count went negative")
    if right[-1] != 0:
        raise MalformedEndpointsError(
            f"left and right endpoint counts differ (final count {int(right[-1])})"
        )

    if axis is TimeAxis.DISCRETE and len(ct) > 1:
        adjacent = ct[1:] == ct[:-1] + 1
        r[:-1][adjacent] = u[1:][adjacent]
    return ChangeArray(axis, ct, u, r)


def occurrence_at(changes: ChangeArray, s, axis: TimeAxis | None = None) -> int:
    """Number of intervals containing ``s``, by binary search on ``changes``."""
    if axis is not None and axis is not changes.axis:
        raise ValueError(f"change records are on {changes.axis}, not {axis}")
    s = changes.axis.check_timestamp(s)
    ts = changes._t_list
    i = bisect.bisect_right(ts, s) - 1
    if i < 0:
        return 0
    if ts[i] == s:
        return changes._u_list[i]
    return changes._r_list[i]


def occurrence_many(changes: ChangeArray, probes) -> np.ndarray:
    """Vectorised :func:`occurrence_at` over an array of probe timestamps."""
    s = np.asarray(probes, dtype=changes.axis.dtype)
    if changes.axis is TimeAxis.CONTINUOUS and not np.all(np.isfinite(s)):
        raise ValueError("probe timestamps must be finite")
    out = np.zeros(s.shape, dtype=np.int64)
    if len(changes) == 0:
        return out
    i = np.searchsorted(changes.t, s, side="right") - 1
    valid = i >= 0
    iv = i[valid]
    hit = changes.t[iv] == s[valid]
    out[valid] = np.where(hit, changes.u[iv], changes.r[iv])
    return out


# --------------------------------------------------------------------------
# knots and maxima


def build_knot_records(changes: ChangeArray, axis: TimeAxis | None = None) -> KnotArray:
    """Flatten change records into single-step knots.

    Each change record emits ``(t, u)`` then ``(t, r)`` (continuous) or
    ``(t + 1, r)`` (discrete); a knot whose value repeats the previously
    emitted one is dropped.  The function is zero before the first record,
    so a leading zero-valued knot is dropped too.

    Knots do not keep the function value *at* a change point when the
    ``u`` knot is suppressed; use change records for point queries.
    """
    axis = changes.axis if axis is None else axis
    m = len(changes)
    if m == 0:
        return KnotArray(axis, changes.t.copy(), np.zeros(0, np.int64))
    t = np.empty(2 * m, dtype=changes.t.dtype)
    v = np.empty(2 * m, dtype=np.int64)
    t[0::2] = changes.t
    t[1::2] = changes.t + 1 if axis is TimeAxis.DISCRETE else changes.t
    v[0::2] = changes.u
    v[1::2] = changes.r
    keep = v != np.concatenate(([0], v[:-1]))
    return KnotArray(axis, t[keep], v[keep])


def find_local_maxima(knots: KnotArray, axis: TimeAxis | None = None) -> list[LocalMaximum]:
    """Scan knots with an increasing/decreasing state machine.

    A hill closes at the first knot after its peak where the function rises
    again (or at the last knot); the next hill starts right there.
    """
    axis = knots.axis if axis is None else axis
    ts = knots.t.tolist()
    vs = knots.v.tolist()
    p = len(ts)
    if p == 0:
        return []
    off = 1 if axis is TimeAxis.DISCRETE else 0

    hills: list[LocalMaximum] = []
    increasing = True
    start, startval = ts[0] - off, 0
    peakstart = peakend = peakval = None
    for i in range(p):
        last = i == p - 1
        if increasing and not last and vs[i + 1] < vs[i]:
            peakstart, peakend, peakval = ts[i], ts[i + 1] - off, vs[i]
            increasing = False
        if not increasing and (last or vs[i + 1] > vs[i]):
            hills.append(LocalMaximum(start, startval, peakstart, peakend, peakval, ts[i], vs[i]))
            if not last:
                start, startval = ts[i + 1] - off, vs[i]
                increasing = True
    if increasing and vs[-1] > startval:
        # Never came down: close the hill at the final knot.
        hills.append(LocalMaximum(start, startval, ts[-1], ts[-1], vs[-1], ts[-1], vs[-1]))
    return hills

