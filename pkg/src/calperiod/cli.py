"""Command-line front end.

Subcommands:

``mine``
    Periodicity report from an interval CSV (``--mode intervals``) or from a
    series CSV plus template (``--mode series``).
``bounds``
    Derived coarse-level bounds for a fine-level periodicity.
``occurrence``
    Debug dump of change records, knots and hills for bracket-notation
    intervals, one per line.

Exit status: 0 on success (including reports with no hills), 1 on usage or
configuration errors, 2 when an input file cannot be parsed.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

from .calendar import (
    CalendarInterval,
    PeriodicityReport,
    PeriodLevel,
    Resolution,
    lifespan_cycles,
    merge_overlapping,
    mine_periodicities,
)
from .dtw import Template, WarpConfig, find_matches
from .hierarchy import HierarchySpec, HypothesisError, derived_pattern_bounds
from .intervals import (
    Interval,
    InvalidIntervalError,
    TimeAxis,
    build_change_records,
    build_knot_records,
    find_local_maxima,
    sort_endpoints,
)
from .io import InputParseError, format_stamp, read_intervals_csv, read_series_csv, read_template

EXIT_OK, EXIT_USAGE, EXIT_PARSE = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _fraction(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a rational number: {text!r}") from None


def percent(c: Fraction) -> str:
    """Certainty as a percentage with one decimal, rounding half up."""
    tenths = Fraction(c) * 1000
    r = int(tenths + Fraction(1, 2)) if tenths >= 0 else -int(-tenths + Fraction(1, 2))
    return f"{r // 10}.{r % 10}"


@dataclass
class RunConfig:
    mode: str
    levels: list[PeriodLevel]
    input: str
    min_certainty: Fraction = Fraction(0)
    template: Optional[str] = None
    warp: Optional[WarpConfig] = None
    output: Optional[str] = None
    format: str = "json"
    resolution: Optional[Resolution] = None

    def __post_init__(self):
        if self.mode not in ("intervals", "series"):
            raise UsageError(f"unknown mode {self.mode!r}")
        if not 0 <= self.min_certainty <= 1:
            raise UsageError("--min-certainty must lie in [0, 1]")
        if self.mode == "series" and (self.template is None or self.warp is None):
            raise UsageError("--mode series needs --template, --dtw-window and --dtw-threshold")
        if self.format not in ("json", "csv"):
            raise UsageError(f"unknown format {self.format!r}")


def hill_entry(rep: PeriodicityReport) -> dict:
    h = rep.hill
    return {
        "span": rep.span_text,
        "peakstart": h.peakstart,
        "peakend": h.peakend,
        "start": h.start,
        "end": h.end,
        "peakval": h.peakval,
        "certainty": str(rep.peak_certainty),
        "certainty_percent": percent(rep.peak_certainty),
        "classification": rep.classification.value,
        "irregular_slot": rep.irregular_slot,
    }


def _mine_level(intervals, level, min_certainty) -> dict:
    entry = {"level": level.value, "N": None, "hills": []}
    if intervals:
        entry["N"] = lifespan_cycles(intervals, level)
        entry["hills"] = [hill_entry(r) for r in mine_periodicities(intervals, level, min_certainty)]
    return entry


def build_report(cfg: RunConfig) -> dict:
    """Run the configured pipeline and return the report as plain data."""
    report: dict = {
        "mode": cfg.mode,
        "min_certainty": str(cfg.min_certainty),
    }
    if cfg.mode == "intervals":
        intervals, res = read_intervals_csv(cfg.input, cfg.resolution)
    else:
        series, res = read_series_csv(cfg.input, cfg.resolution)
        template = Template(read_template(cfg.template))
        matches = find_matches(series, template, cfg.warp)
        intervals = [CalendarInterval(m.interval[0], m.interval[1], res) for m in matches]
        report["dtw"] = {
            "window": cfg.warp.window,
            "threshold": cfg.warp.threshold,
            "stretch": cfg.warp.stretch,
            "metric": cfg.warp.metric,
            "znormalize": cfg.warp.znormalize,
        }
        report["matches"] = [
            {
                "start": format_stamp(m.interval[0], res),
                "end": format_stamp(m.interval[1], res),
                "score": m.score,
            }
            for m in matches
        ]
    for level in cfg.levels:
        try:
            level.check_resolution(res)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    report["resolution"] = res.name.lower()
    report["intervals"] = len(intervals)
    report["merged_intervals"] = len(merge_overlapping(intervals))
    with ThreadPoolExecutor(max_workers=max(1, len(cfg.levels))) as pool:
        report["levels"] = list(
            pool.map(lambda lv: _mine_level(intervals, lv, cfg.min_certainty), cfg.levels)
        )
    return report


def render_json(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True) + "\n"


CSV_COLUMNS = (
    "level", "span", "peakstart", "peakend", "certainty", "certainty_percent",
    "classification", "N", "irregular_slot",
)  # fmt: skip


def render_csv(report: dict) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for entry in report["levels"]:
        for hill in entry["hills"]:
            row = dict(hill, level=entry["level"], N=entry["N"])
            writer.writerow([row[c] for c in CSV_COLUMNS])
    return buf.getvalue()


def _emit(text: str, output: Optional[str]) -> None:
    if output and output != "-":
        with open(output, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# --------------------------------------------------------------------------


def _cmd_mine(args) -> int:
    warp = None
    if args.mode == "series":
        if args.dtw_window is None or args.dtw_threshold is None:
            raise UsageError("--mode series needs --dtw-window and --dtw-threshold")
        try:
            warp = WarpConfig(
                window=args.dtw_window,
                threshold=args.dtw_threshold,
                stretch=args.stretch,
                metric=args.metric,
                znormalize=args.znormalize,
            )
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    cfg = RunConfig(
        mode=args.mode,
        levels=[PeriodLevel(lv) for lv in (args.level or ["yearly"])],
        input=args.input,
        min_certainty=args.min_certainty,
        template=args.template,
        warp=warp,
        output=args.output,
        format=args.format,
        resolution=Resolution[args.resolution.upper()] if args.resolution != "auto" else None,
    )
    report = build_report(cfg)
    _emit(render_json(report) if cfg.format == "json" else render_csv(report), cfg.output)
    return EXIT_OK


def _cmd_bounds(args) -> int:
    try:
        bounds = derived_pattern_bounds(HierarchySpec(args.p, args.f, args.m_j))
    except (HypothesisError, ValueError) as exc:
        raise UsageError(str(exc)) from None
    out = {
        "p": args.p,
        "f": str(args.f),
        "m_j": args.m_j,
        "m_i": args.p * args.m_j,
        "min_periodicity": str(bounds.min_periodicity),
        "avg_periodicity": str(bounds.avg_periodicity),
        "count": bounds.count,
    }
    _emit(render_json(out), args.output)
    return EXIT_OK


def _cmd_occurrence(args) -> int:
    axis = TimeAxis(args.axis)
    intervals = []
    with open(args.input, encoding="utf-8") as fh:
        for lineno, text in enumerate(fh, start=1):
            if not text.strip() or text.lstrip().startswith("#"):
                continue
            try:
                intervals.append(Interval.parse(text))
            except ValueError as exc:
                raise InputParseError(lineno, str(exc)) from None
    try:
        endpoints = sort_endpoints(intervals, axis)
    except InvalidIntervalError as exc:
        raise UsageError(str(exc)) from None
    changes = build_change_records(endpoints, axis)
    knots = build_knot_records(changes)
    out = {
        "axis": axis.value,
        "changes": changes.to_json(),
        "knots": knots.to_json(),
        "maxima": [h.as_dict() for h in find_local_maxima(knots)],
    }
    _emit(render_json(out), args.output)
    return EXIT_OK


def make_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="calperiod", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    mine = sub.add_parser("mine", help="mine calendar periodicities")
    mine.add_argument("--mode", choices=["intervals", "series"], default="intervals")
    mine.add_argument(
        "--level", action="append", choices=[lv.value for lv in PeriodLevel],
        help="period level; repeat to mine several (default yearly)",
    )  # fmt: skip
    mine.add_argument("--min-certainty", type=_fraction, default=Fraction(0))
    mine.add_argument("--input", required=True)
    mine.add_argument("--template")
    mine.add_argument("--dtw-window", type=int)
    mine.add_argument("--dtw-threshold", type=float)
    mine.add_argument("--stretch", type=float, default=1.5)
    mine.add_argument("--metric", choices=["abs", "squared"], default="abs")
    mine.add_argument("--znormalize", action="store_true")
    mine.add_argument("--resolution", choices=["auto", "day", "hour", "minute", "second"], default="auto")
    mine.add_argument("--output", "-o")
    mine.add_argument("--format", choices=["json", "csv"], default="json")
    mine.set_defaults(func=_cmd_mine)

    bounds = sub.add_parser("bounds", help="coarse-level bounds from a fine-level periodicity")
    bounds.add_argument("--p", type=int, required=True)
    bounds.add_argument("--f", type=_fraction, required=True)
    bounds.add_argument("--m-j", type=int, default=1)
    bounds.add_argument("--output", "-o")
    bounds.set_defaults(func=_cmd_bounds)

    occ = sub.add_parser("occurrence", help="dump change records, knots and hills")
    occ.add_argument("--input", required=True, help="one interval per line, e.g. [0, 2)")
    occ.add_argument("--axis", choices=[a.value for a in TimeAxis], default="discrete")
    occ.add_argument("--output", "-o")
    occ.set_defaults(func=_cmd_occurrence)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = make_parser().parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"calperiod: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InputParseError as exc:
        print(f"calperiod: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except FileNotFoundError as exc:
        print(f"calperiod: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
