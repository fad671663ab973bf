"""CSV ingestion and serialisation for interval and series datasets."""

from __future__ import annotations

import csv
import datetime as _dt
import io
import math
from typing import IO, Iterable, Optional, Sequence

from .calendar import CalendarInterval, Resolution
from .dtw import Series


class InputParseError(ValueError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


def parse_stamp(text: str) -> _dt.date:
    """ISO-8601 date or naive datetime."""
    text = text.strip()
    if len(text) == 10:
        return _dt.date.fromisoformat(text)
    stamp = _dt.datetime.fromisoformat(text)
    if stamp.tzinfo is not None:
        raise ValueError(f"timezone-aware timestamps are not supported: {text!r}")
    return stamp


def infer_resolution(stamps: Iterable[_dt.date]) -> Resolution:
    """Coarsest resolution that represents every stamp exactly."""
    stamps = list(stamps)
    if not any(isinstance(s, _dt.datetime) for s in stamps):
        return Resolution.DAY
    if any(s.microsecond for s in stamps):
        raise ValueError("sub-second timestamps are not supported")
    if any(s.second for s in stamps):
        return Resolution.SECOND
    if any(s.minute for s in stamps):
        return Resolution.MINUTE
    return Resolution.HOUR


def _coerce(stamp, res: Resolution):
    if res is Resolution.DAY:
        if isinstance(stamp, _dt.datetime):
            if stamp.time() != _dt.time():
                raise ValueError(f"{stamp.isoformat()} carries a time of day at day resolution")
            return stamp.date()
        return stamp
    if not isinstance(stamp, _dt.datetime):
        return _dt.datetime(stamp.year, stamp.month, stamp.day)
    return stamp


def _open_text(source) -> IO[str]:
    if isinstance(source, io.TextIOBase) or hasattr(source, "read"):
        return source
    return open(source, newline="", encoding="utf-8")


def _rows(source, header: Sequence[str]):
    """Yield (line_number, row) for data rows after checking the header."""
    fh = _open_text(source)
    try:
        reader = csv.reader(fh)
        try:
            first = next(reader)
        except StopIteration:
            raise InputParseError(1, f"empty file; expected header {','.join(header)}") from None
        if [c.strip().lower() for c in first] != list(header):
            raise InputParseError(1, f"expected header {','.join(header)}, got {','.join(first)}")
        for row in reader:
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise InputParseError(reader.line_num, f"expected {len(header)} fields, got {len(row)}")
            yield reader.line_num, row
    finally:
        if fh is not source:
            fh.close()


def read_intervals_csv(
    source, resolution: Optional[Resolution] = None
) -> tuple[list[CalendarInterval], Resolution]:
    """Read ``start,end`` rows of ISO stamps as closed calendar intervals."""
    raw = []
    for line, (a, b) in _rows(source, ("start", "end")):
        try:
            raw.append((line, parse_stamp(a), parse_stamp(b)))
        except ValueError as exc:
            raise InputParseError(line, str(exc)) from None
    res = resolution or infer_resolution(s for _, a, b in raw for s in (a, b))
    out = []
    for line, a, b in raw:
        try:
            out.append(CalendarInterval(_coerce(a, res), _coerce(b, res), res))
        except (TypeError, ValueError) as exc:
            raise InputParseError(line, str(exc)) from None
    return out, res


def format_stamp(stamp, res: Resolution) -> str:
    if res is Resolution.DAY:
        return stamp.isoformat()
    spec = {Resolution.HOUR: "minutes", Resolution.MINUTE: "minutes", Resolution.SECOND: "seconds"}
    return stamp.isoformat(timespec=spec[res])


def write_intervals_csv(intervals: Sequence[CalendarInterval], dest: IO[str]) -> None:
    writer = csv.writer(dest, lineterminator="\n")
    writer.writerow(["start", "end"])
    for iv in intervals:
        writer.writerow([format_stamp(iv.start, iv.resolution), format_stamp(iv.end, iv.resolution)])


def intervals_to_csv(intervals: Sequence[CalendarInterval]) -> str:
    buf = io.StringIO()
    write_intervals_csv(intervals, buf)
    return buf.getvalue()


def read_series_csv(source, resolution: Optional[Resolution] = None) -> tuple[Series, Resolution]:
    """Read ``date,value`` rows; timestamps must be strictly ascending."""
    stamps, values = [], []
    for line, (a, v) in _rows(source, ("date", "value")):
        try:
            stamp = parse_stamp(a)
            value = float(v)
        except ValueError as exc:
            raise InputParseError(line, str(exc)) from None
        if not math.isfinite(value):
            raise InputParseError(line, f"non-finite value {v!r}")
        if stamps and not stamps[-1][1] < stamp:
            raise InputParseError(line, "timestamps must be strictly ascending")
        stamps.append((line, stamp))
        values.append(value)
    res = resolution or infer_resolution(s for _, s in stamps)
    coerced = []
    for line, s in stamps:
        try:
            coerced.append(_coerce(s, res))
        except ValueError as exc:
            raise InputParseError(line, str(exc)) from None
    return Series(coerced, values), res


def read_template(source) -> list[float]:
    """Single column of numbers; a non-numeric first line is taken as a header."""
    fh = _open_text(source)
    try:
        values = []
        for lineno, text in enumerate(fh, start=1):
            cell = text.strip().split(",")[0].strip()
            if not cell:
                continue
            try:
                value = float(cell)
            except ValueError:
                if lineno == 1:
                    continue
                raise InputParseError(lineno, f"not a number: {cell!r}") from None
            if not math.isfinite(value):
                raise InputParseError(lineno, f"non-finite value {cell!r}")
            values.append(value)
    finally:
        if fh is not source:
            fh.close()
    if len(values) < 2:
        raise InputParseError(0, "template needs at least two values")
    return values
