"""Calendar-based periodicities of interval-based temporal patterns."""

from .intervals import (
    Bound,
    ChangeArray,
    ChangeRecord,
    EndpointRecord,
    EndpointType,
    Interval,
    IntervalArray,
    KnotArray,
    KnotRecord,
    LocalMaximum,
    TimeAxis,
    build_change_records,
    build_knot_records,
    find_local_maxima,
    occurrence_at,
    occurrence_many,
    sort_endpoints,
)

__version__ = "0.1.0"
