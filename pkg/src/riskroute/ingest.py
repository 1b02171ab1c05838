"""Estimating edge travel-time profiles from origin/destination trip records.

Trips only record where and when they started and ended, so each trip is
assumed to follow the free-flow shortest path between its snapped endpoints
at a constant speed; its duration is split over the path's edges in
proportion to their lengths.  The per-edge samples are binned by day class
and by the hour in which the edge was entered.
"""
from collections import Counter
import csv
from dataclasses import dataclass, field
from datetime import datetime
import math

import numpy as np

from .dist import DiscreteDistribution, _GRID_EPS
from .exceptions import InvalidParameterError, ParseError, RiskRouteError
from .heuristic import shortest_path
from .network import DayClass, HOURS, ClockTime, TimeProfile, free_flow_distribution, haversine

TRIP_FIELDS = ("pickup_datetime", "dropoff_datetime", "pickup_lat", "pickup_lon", "dropoff_lat", "dropoff_lon")


@dataclass(frozen=True)
class TripRecord:
    pickup_time: datetime
    dropoff_time: datetime
    pickup_lat: float
    pickup_lon: float
    dropoff_lat: float
    dropoff_lon: float

    @property
    def duration(self):
        return (self.dropoff_time - self.pickup_time).total_seconds()

    @property
    def distance(self):
        """Straight-line distance between pickup and dropoff, in metres."""
        return float(haversine(self.pickup_lat, self.pickup_lon, self.dropoff_lat, self.dropoff_lon))


def read_trips_csv(path, columns=None):
    """Read trip records; returns ``(records, n_malformed)``.

    ``columns`` maps the standard field names in :data:`TRIP_FIELDS` to the
    file's own header names.  Rows that fail to parse are counted and skipped.
    """
    names = {f: (columns or {}).get(f, f) for f in TRIP_FIELDS}
    records, bad = [], 0
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            return records, bad
        missing = [c for c in names.values() if c not in reader.fieldnames]
        if missing:
            raise ParseError(f"missing column(s) {missing}", path, 1)
        for row in reader:
            try:
                records.append(TripRecord(
                    datetime.fromisoformat(row[names["pickup_datetime"]].strip()),
                    datetime.fromisoformat(row[names["dropoff_datetime"]].strip()),
                    float(row[names["pickup_lat"]]),
                    float(row[names["pickup_lon"]]),
                    float(row[names["dropoff_lat"]]),
                    float(row[names["dropoff_lon"]]),
                ))
            except (TypeError, ValueError, AttributeError):
                bad += 1
    return records, bad


def write_trips_csv(records, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TRIP_FIELDS)
        for r in records:
            w.writerow([r.pickup_time.isoformat(), r.dropoff_time.isoformat(),
                        repr(r.pickup_lat), repr(r.pickup_lon), repr(r.dropoff_lat), repr(r.dropoff_lon)])


@dataclass
class CleaningFilters:
    """Plausibility thresholds; trips failing any of them are dropped."""

    max_speed: float = 40.0          # m/s, straight-line
    min_duration: float = 30.0       # s
    max_duration: float = 4 * 3600.0
    min_distance: float = 50.0       # m, straight-line
    #: (min_lat, max_lat, min_lon, max_lon); defaults to the graph's extent
    bbox: tuple = None
    margin: float = 0.0              # degrees added around the default bbox


def clean(records, graph, filters=None):
    """Drop implausible trips.  Returns ``(kept, Counter of drop reasons)``."""
    f = filters or CleaningFilters()
    if f.bbox is not None:
        lat0, lat1, lon0, lon1 = f.bbox
    else:
        lat0, lat1, lon0, lon1 = graph.bounding_box()
        lat0, lat1, lon0, lon1 = lat0 - f.margin, lat1 + f.margin, lon0 - f.margin, lon1 + f.margin
    kept, dropped = [], Counter()
    for r in records:
        coords = (r.pickup_lat, r.pickup_lon, r.dropoff_lat, r.dropoff_lon)
        if not all(math.isfinite(c) for c in coords):
            dropped["non_finite"] += 1
            continue
        if not (lat0 <= r.pickup_lat <= lat1 and lon0 <= r.pickup_lon <= lon1
                and lat0 <= r.dropoff_lat <= lat1 and lon0 <= r.dropoff_lon <= lon1):
            dropped["outside_region"] += 1
            continue
        dur = r.duration
        if dur < 0:
            dropped["negative_duration"] += 1
            continue
        if dur < f.min_duration:
            dropped["too_short"] += 1
            continue
        if dur > f.max_duration:
            dropped["too_long"] += 1
            continue
        dist = r.distance
        if dist < f.min_distance:
            dropped["too_close"] += 1
            continue
        if dist / dur > f.max_speed:
            dropped["too_fast"] += 1
            continue
        kept.append(r)
    return kept, dropped


class UnassignableTrip(RiskRouteError):
    def __init__(self, reason):
        self.reason = reason
        super().__init__(reason)


def split_duration(total, lengths):
    """Share ``total`` among edges proportionally to ``lengths``.

    The last share absorbs rounding so that ``math.fsum(shares) == total``.
    """
    lp = math.fsum(lengths)
    shares = [total * le / lp for le in lengths[:-1]]
    # fsum is correctly rounded; a few one-ulp nudges of the last share reach
    # ``total`` unless they straddle it, in which case an earlier share moves
    for k in range(4 * len(shares) + 4):
        last = total - math.fsum(shares)
        for _ in range(4):
            got = math.fsum(shares + [last])
            if got == total:
                return shares + [last]
            last = math.nextafter(last, -math.inf if got > total else math.inf)
        i = k % len(shares)
        shares[i] = math.nextafter(shares[i], math.inf)
    raise ArithmeticError(f"cannot split {total!r} exactly")


class TripAssigner:
    """Snaps trip endpoints to nodes and maps trips onto free-flow shortest paths."""

    def __init__(self, graph, snap_radius=150.0):
        from sklearn.neighbors import BallTree

        self.graph = graph
        self.snap_radius = float(snap_radius)
        self._ids = list(graph.nodes)
        coords = np.radians([[graph.nodes[n].lat, graph.nodes[n].lon] for n in self._ids])
        self._tree = BallTree(coords, metric="haversine")
        self._paths = {}

    def snap(self, lat, lon):
        dist, idx = self._tree.query(np.radians([[lat, lon]]), k=1)
        if dist[0, 0] * 6371008.8 > self.snap_radius:
            return None
        return self._ids[int(idx[0, 0])]

    def path(self, origin, destination):
        key = (origin, destination)
        if key not in self._paths:
            self._paths[key] = shortest_path(self.graph, origin, destination, lambda e: e.free_flow)[1]
        return self._paths[key]

    def assign(self, record):
        """``[(edge_id, ClockTime entering the edge, duration)]`` for one trip."""
        o = self.snap(record.pickup_lat, record.pickup_lon)
        d = self.snap(record.dropoff_lat, record.dropoff_lon)
        if o is None or d is None:
            raise UnassignableTrip("snap_failed")
        if o == d:
            raise UnassignableTrip("same_node")
        path = self.path(o, d)
        if path is None:
            raise UnassignableTrip("disconnected")
        shares = split_duration(record.duration, [e.length for e in path])
        start = ClockTime.from_datetime(record.pickup_time)
        out = []
        elapsed = []
        for e, c in zip(path, shares):
            out.append((e.id, ClockTime(start.day_class, start.seconds + math.fsum(elapsed)), c))
            elapsed.append(c)
        return out


def assign_and_split(record, graph, assigner=None, snap_radius=150.0):
    """Per-edge samples of one trip; raises :class:`UnassignableTrip`."""
    assigner = assigner or TripAssigner(graph, snap_radius)
    return assigner.assign(record)


@dataclass
class SampleAccumulator:
    """Histogram counts per ``(edge, day class, hour)`` cell.

    Bin ``k`` holds durations in ``((k-1) * bin_width, k * bin_width]`` and
    is represented by ``k * bin_width``; anything past ``edge_cap`` lands in
    the cap bin.
    """

    bin_width: float = 6.0
    edge_cap: float = 600.0
    counts: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.bin_width <= 0 or self.edge_cap <= 0:
            raise InvalidParameterError("bin_width and edge_cap must be positive")
        self.n_bins = round(self.edge_cap / self.bin_width)
        if abs(self.n_bins * self.bin_width - self.edge_cap) > 1e-9 * self.edge_cap:
            raise InvalidParameterError("edge_cap must be a multiple of bin_width")

    def bin_of(self, duration):
        k = math.ceil(duration / self.bin_width - _GRID_EPS)
        return min(max(k, 0), self.n_bins)

    def add(self, edge_id, t, duration):
        key = (edge_id, t.day_class, t.hour)
        arr = self.counts.get(key)
        if arr is None:
            arr = self.counts[key] = np.zeros(self.n_bins + 1, dtype=np.int64)
        arr[self.bin_of(duration)] += 1

    def merge(self, other):
        if (other.bin_width, other.edge_cap) != (self.bin_width, self.edge_cap):
            raise InvalidParameterError("cannot merge accumulators on different grids")
        for key, arr in other.counts.items():
            if key in self.counts:
                self.counts[key] = self.counts[key] + arr
            else:
                self.counts[key] = arr.copy()
        return self

    def n_samples(self, edge_id, day_class, hour):
        arr = self.counts.get((edge_id, DayClass.parse(day_class), hour))
        return 0 if arr is None else int(arr.sum())

    @property
    def total(self):
        return int(sum(a.sum() for a in self.counts.values()))


def finalize(acc, graph, min_samples=5):
    """Turn histogram counts into a full :class:`TimeProfile` for ``graph``.

    Empty cells get the free-flow point mass; cells with fewer than
    ``min_samples`` samples are blended with it as one extra pseudo-sample.
    """
    bw = acc.bin_width
    table = {}
    for edge_id, edge in graph.edges.items():
        ff = free_flow_distribution(edge, bw, acc.edge_cap)
        ff_bin = ff.start
        cells = {}
        for dc in DayClass:
            hourly = []
            for h in range(HOURS):
                arr = acc.counts.get((edge_id, dc, h))
                n = 0 if arr is None else int(arr.sum())
                if n == 0:
                    hourly.append(ff)
                    continue
                counts = arr.astype(float)
                if n < min_samples:
                    counts[ff_bin] += 1.0
                hourly.append(DiscreteDistribution(counts, bin_width=bw, normalize=True))
            cells[dc] = hourly
        table[edge_id] = cells
    return TimeProfile(table, bw, acc.edge_cap)


def build_profile(records, graph, *, bin_width=6.0, edge_cap=600.0, min_samples=5,
                  filters=None, snap_radius=150.0):
    """Run cleaning, assignment and estimation.  Returns ``(profile, report)``."""
    records = list(records)
    kept, dropped = clean(records, graph, filters)
    assigner = TripAssigner(graph, snap_radius)
    acc = SampleAccumulator(bin_width, edge_cap)
    skipped = Counter()
    n_samples = 0
    for r in kept:
        try:
            samples = assigner.assign(r)
        except UnassignableTrip as exc:
            skipped[exc.reason] += 1
            continue
        for edge_id, t, c in samples:
            acc.add(edge_id, t, c)
            n_samples += 1
    report = {
        "records": len(records),
        "dropped": dict(dropped),
        "cleaned": len(kept),
        "skipped": dict(skipped),
        "assigned": len(kept) - sum(skipped.values()),
        "samples": n_samples,
    }
    return finalize(acc, graph, min_samples), report
