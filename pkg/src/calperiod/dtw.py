"""Template search in a time series by windowed dynamic time warping.

The cumulative cost grid follows

    gamma(i, j) = delta(i, j) + min(gamma(i-1, j-1), gamma(i-1, j), gamma(i, j-1))

over points with ``|i - j| <= window``.  Alongside the cost we carry the
number of grid points on the chosen path, so the raw cost can be normalised
by path length.  Among equal-cost predecessors the diagonal wins, then the
vertical step, then the horizontal one.

``find_matches`` slides over every start index, tries every candidate length
within the stretch bound, keeps candidates whose normalised cost is within
the threshold and merges overlapping hits into maximal matches.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Any, Callable, NamedTuple, Sequence

INF = math.inf


class DtwWarning(UserWarning):
    pass


class WindowInfeasibleError(ValueError):
    """No warping path fits inside the window for these lengths."""


class Alignment(NamedTuple):
    cost: float
    length: int

    @property
    def normalized(self) -> float:
        return self.cost / self.length


def _abs(x: float, y: float) -> float:
    return abs(x - y)


def _sq(x: float, y: float) -> float:
    return (x - y) * (x - y)


METRICS: dict[str, Callable[[float, float], float]] = {"abs": _abs, "squared": _sq}


def _metric(name: str) -> Callable[[float, float], float]:
    try:
        return METRICS[name]
    except KeyError:
        raise ValueError(f"unknown metric {name!r}; choose from {sorted(METRICS)}") from None


def _check_finite(values: Sequence[float], what: str) -> list[float]:
    out = [float(v) for v in values]
    if not all(math.isfinite(v) for v in out):
        raise ValueError(f"{what} contains non-finite values")
    return out


def _last_column(a: Sequence[float], b: Sequence[float], window: int, delta) -> list[Alignment]:
    """Optimal alignment of every prefix ``a[:k]`` against all of ``b``.

    Entry ``k - 1`` is infinite-cost when no windowed path reaches
    ``(k - 1, len(b) - 1)``.
    """
    n, m = len(a), len(b)
    prev_c: list[float] = []
    prev_l: list[int] = []
    out = []
    for i in range(n):
        cur_c = [INF] * m
        cur_l = [0] * m
        ai = a[i]
        for j in range(max(0, i - window), min(m, i + window + 1)):
            d = delta(ai, b[j])
            if i == 0 and j == 0:
                cur_c[0], cur_l[0] = d, 1
                continue
            best, blen = INF, 0
            if i > 0 and j > 0 and prev_c[j - 1] < best:
                best, blen = prev_c[j - 1], prev_l[j - 1]
            if i > 0 and prev_c[j] < best:
                best, blen = prev_c[j], prev_l[j]
            if j > 0 and cur_c[j - 1] < best:
                best, blen = cur_c[j - 1], cur_l[j - 1]
            if best < INF:
                cur_c[j], cur_l[j] = d + best, blen + 1
        out.append(Alignment(cur_c[m - 1], cur_l[m - 1]))
        prev_c, prev_l = cur_c, cur_l
    return out


def dtw_distance(a: Sequence[float], b: Sequence[float], window: int, metric: str = "abs") -> Alignment:
    """Minimum windowed warping cost between ``a`` and ``b``.

    Returns ``(cost, length)`` where ``length`` counts the grid points on the
    optimal path.  Raises :class:`WindowInfeasibleError` when the lengths
    differ by more than ``window``.
    """
    a = _check_finite(a, "a")
    b = _check_finite(b, "b")
    if not a or not b:
        raise ValueError("sequences must be non-empty")
    if int(window) != window or window < 1:
        raise ValueError(f"window must be a positive integer, got {window!r}")
    if abs(len(a) - len(b)) > window:
        raise WindowInfeasibleError(
            f"lengths {len(a)} and {len(b)} differ by more than window {window}"
        )
    return _last_column(a, b, int(window), _metric(metric))[-1]


# --------------------------------------------------------------------------
# subsequence search


@dataclass(frozen=True)
class Series:
    timestamps: Sequence[Any]
    values: Sequence[float]

    def __post_init__(self):
        if len(self.timestamps) != len(self.values):
            raise ValueError("timestamps and values differ in length")
        for k in range(1, len(self.timestamps)):
            if not self.timestamps[k - 1] < self.timestamps[k]:
                raise ValueError(f"timestamps not strictly ascending at position {k}")
        object.__setattr__(self, "values", tuple(_check_finite(self.values, "series")))

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class Template:
    values: Sequence[float]

    def __post_init__(self):
        vals = tuple(_check_finite(self.values, "template"))
        if len(vals) < 2:
            raise ValueError("template needs at least two values")
        object.__setattr__(self, "values", vals)

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class WarpConfig:
    window: int
    threshold: float
    stretch: float = 1.5
    metric: str = "abs"
    znormalize: bool = False

    def __post_init__(self):
        if int(self.window) != self.window or self.window < 1:
            raise ValueError(f"window must be a positive integer, got {self.window!r}")
        if not (self.threshold >= 0 and math.isfinite(self.threshold)):
            raise ValueError(f"threshold must be a finite non-negative number, got {self.threshold!r}")
        if not self.stretch >= 1:
            raise ValueError(f"stretch must be >= 1, got {self.stretch!r}")
        _metric(self.metric)

    def candidate_lengths(self, m: int) -> range:
        lo = max(math.ceil(m / self.stretch - 1e-12), m - self.window, 1)
        hi = min(math.floor(m * self.stretch + 1e-12), m + self.window)
        return range(lo, hi + 1)


class Hit(NamedTuple):
    start: int
    end: int
    score: float


@dataclass(frozen=True)
class Match:
    start_index: int
    end_index: int
    score: float
    interval: tuple[Any, Any]


def znormalize(values: Sequence[float]) -> list[float]:
    n = len(values)
    mean = sum(values) / n
    sd = math.sqrt(sum((v - mean) ** 2 for v in values) / n)
    if sd == 0:
        return [0.0] * n
    return [(v - mean) / sd for v in values]


def scan_hits(series: Series, template: Template, cfg: WarpConfig) -> list[Hit]:
    """Every candidate window whose normalised warping cost is within threshold."""
    values = list(series.values)
    tmpl = list(template.values)
    if cfg.znormalize:
        tmpl = znormalize(tmpl)
    delta = _metric(cfg.metric)
    lengths = cfg.candidate_lengths(len(tmpl))
    n = len(values)
    hits = []
    for s in range(n):
        room = n - s
        usable = [L for L in lengths if L <= room]
        if not usable:
            break
        if cfg.znormalize:
            for L in usable:
                al = _last_column(znormalize(values[s : s + L]), tmpl, cfg.window, delta)[-1]
                if al.cost < INF and al.normalized <= cfg.threshold:
                    hits.append(Hit(s, s + L - 1, al.normalized))
            continue
        column = _last_column(values[s : s + usable[-1]], tmpl, cfg.window, delta)
        for L in usable:
            al = column[L - 1]
            if al.cost < INF and al.normalized <= cfg.threshold:
                hits.append(Hit(s, s + L - 1, al.normalized))
    return hits


def merge_hits(hits: Sequence[Hit]) -> list[tuple[int, int, float]]:
    """Merge hits sharing at least one index; keep the best score per group."""
    merged: list[list] = []
    for h in sorted(hits):
        if merged and h.start <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], h.end)
            merged[-1][2] = min(merged[-1][2], h.score)
        else:
            merged.append([h.start, h.end, h.score])
    return [tuple(g) for g in merged]


def find_matches(series: Series, template: Template, cfg: WarpConfig) -> list[Match]:
    """Maximal index spans of ``series`` where ``template`` approximately occurs.

    Warns with :class:`DtwWarning` and returns ``[]`` when even the most
    compressed candidate is longer than the series.
    """
    shortest = cfg.candidate_lengths(len(template))
    if not shortest or shortest[0] > len(series):
        warnings.warn(
            f"template of length {len(template)} cannot fit a series of length {len(series)}",
            DtwWarning,
            stacklevel=2,
        )
        return []
    ts = series.timestamps
    return [
        Match(lo, hi, score, (ts[lo], ts[hi]))
        for lo, hi, score in merge_hits(scan_hits(series, template, cfg))
    ]
