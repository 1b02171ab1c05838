"""Road graph and time-dependent edge cost profiles."""
from dataclasses import dataclass, field
from datetime import datetime
from enum import Enum
import math
import re

import numpy as np

from ._validation import check_positive, check_probability
from .dist import DiscreteDistribution, _GRID_EPS
from .exceptions import InvalidParameterError, MissingProfileError, ReferentialIntegrityError

HOURS = 24
HOUR = 3600.0
DAY = HOURS * HOUR


class DayClass(str, Enum):
    WEEKDAYS = "weekdays"
    WEEKENDS = "weekends"

    @classmethod
    def of(cls, when):
        """Day class of a ``date``/``datetime`` (Saturday and Sunday are weekends)."""
        return cls.WEEKENDS if when.weekday() >= 5 else cls.WEEKDAYS

    @classmethod
    def parse(cls, text):
        if isinstance(text, cls):
            return text
        key = str(text).strip().lower()
        for member in cls:
            if key in (member.value, member.name.lower(), member.value[:-1]):
                return member
        raise InvalidParameterError(f"unknown day class {text!r}")


_DAYS = {
    "mon": 0, "monday": 0, "tue": 1, "tues": 1, "tuesday": 1, "wed": 2, "wednesday": 2,
    "thu": 3, "thur": 3, "thurs": 3, "thursday": 3, "fri": 4, "friday": 4,
    "sat": 5, "saturday": 5, "sun": 6, "sunday": 6,
}
_DEPART_RE = re.compile(r"^\s*([a-z]+)\s+(\d{1,2}):(\d{2})(?::(\d{2}(?:\.\d*)?))?\s*$", re.I)


@dataclass(frozen=True)
class ClockTime:
    """A departure/arrival instant: day class plus seconds since midnight."""

    day_class: DayClass
    seconds: float

    def __post_init__(self):
        if not (math.isfinite(self.seconds) and self.seconds >= 0):
            raise InvalidParameterError(f"seconds must be finite and >= 0, got {self.seconds!r}")
        object.__setattr__(self, "day_class", DayClass.parse(self.day_class))

    @property
    def hour(self):
        return int(self.seconds // HOUR) % HOURS

    def __add__(self, seconds):
        return ClockTime(self.day_class, self.seconds + seconds)

    @classmethod
    def parse(cls, text):
        """Parse ``"<day> HH:MM[:SS]"``, e.g. ``"wed 08:00"``.

        ``ClockTime`` and ``datetime`` values are accepted as they are.
        """
        if isinstance(text, ClockTime):
            return text
        if isinstance(text, datetime):
            return cls.from_datetime(text)
        if not isinstance(text, str):
            raise InvalidParameterError(f"cannot parse departure time {text!r}")
        m = _DEPART_RE.match(text)
        if not m or m.group(1).lower() not in _DAYS:
            raise InvalidParameterError(f"cannot parse departure time {text!r} (expected e.g. 'wed 08:00')")
        hh, mm = int(m.group(2)), int(m.group(3))
        ss = float(m.group(4) or 0)
        if hh > 23 or mm > 59 or ss >= 60:
            raise InvalidParameterError(f"time of day out of range in {text!r}")
        day = DayClass.WEEKENDS if _DAYS[m.group(1).lower()] >= 5 else DayClass.WEEKDAYS
        return cls(day, hh * HOUR + mm * 60.0 + ss)

    @classmethod
    def from_datetime(cls, when):
        midnight = when.replace(hour=0, minute=0, second=0, microsecond=0)
        return cls(DayClass.of(when), (when - midnight).total_seconds())


@dataclass(frozen=True)
class Node:
    id: str
    lat: float
    lon: float


@dataclass(frozen=True)
class Edge:
    id: str
    tail: str
    head: str
    length: float
    speed_limit: float

    @property
    def free_flow(self):
        return self.length / self.speed_limit


def haversine(lat1, lon1, lat2, lon2):
    """Great-circle distance in metres."""
    r = 6371008.8
    p1, p2 = np.radians(lat1), np.radians(lat2)
    dp = p2 - p1
    dl = np.radians(np.asarray(lon2) - np.asarray(lon1))
    a = np.sin(dp / 2) ** 2 + np.cos(p1) * np.cos(p2) * np.sin(dl / 2) ** 2
    return 2 * r * np.arcsin(np.sqrt(np.minimum(a, 1.0)))


@dataclass(eq=False)
class Graph:
    """Directed road graph; treat as immutable once built."""

    nodes: dict
    edges: dict
    _out: dict = field(init=False, repr=False)
    _in: dict = field(init=False, repr=False)

    def __post_init__(self):
        if not self.nodes:
            raise InvalidParameterError("graph has no nodes")
        self._out = {n: [] for n in self.nodes}
        self._in = {n: [] for n in self.nodes}
        for e in self.edges.values():
            if e.tail not in self.nodes or e.head not in self.nodes:
                raise ReferentialIntegrityError(f"edge {e.id!r} references an unknown node")
            if not (e.length > 0 and e.speed_limit > 0):
                raise InvalidParameterError(f"edge {e.id!r} needs positive length and speed_limit")
            self._out[e.tail].append(e)
            self._in[e.head].append(e)

    @classmethod
    def from_lists(cls, nodes, edges):
        """Build from iterables of :class:`Node`/:class:`Edge` (or tuples)."""
        ns = {}
        for n in nodes:
            n = n if isinstance(n, Node) else Node(str(n[0]), float(n[1]), float(n[2]))
            if n.id in ns:
                raise InvalidParameterError(f"duplicate node id {n.id!r}")
            ns[n.id] = n
        es = {}
        for e in edges:
            if not isinstance(e, Edge):
                e = Edge(str(e[0]), str(e[1]), str(e[2]), float(e[3]), float(e[4]))
            if e.id in es:
                raise InvalidParameterError(f"duplicate edge id {e.id!r}")
            es[e.id] = e
        return cls(ns, es)

    def successors(self, node):
        return self._out[node]

    def predecessors(self, node):
        return self._in[node]

    @property
    def max_speed(self):
        return max(e.speed_limit for e in self.edges.values())

    def bounding_box(self):
        lats = [n.lat for n in self.nodes.values()]
        lons = [n.lon for n in self.nodes.values()]
        return min(lats), max(lats), min(lons), max(lons)

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        return self.nodes == other.nodes and self.edges == other.edges

    def __repr__(self):
        return f"Graph({len(self.nodes)} nodes, {len(self.edges)} edges)"


def free_flow_distribution(edge, bin_width, edge_cap=None):
    """Point mass at the edge's free-flow duration, rounded up to the grid."""
    k = max(0, math.ceil(edge.free_flow / bin_width - _GRID_EPS))
    if edge_cap is not None:
        k = min(k, round(edge_cap / bin_width))
    return DiscreteDistribution._from_grid(k, np.ones(1), bin_width)


class TimeProfile:
    """Per-edge, per-day-class table of 24 hourly cost distributions.

    Parameters
    ----------
    table : dict
        ``{edge_id: {DayClass: sequence of 24 DiscreteDistribution}}``.  A
        single sequence may be given instead of the inner dict, in which case
        both day classes share it.
    bin_width : float
    edge_cap : float or None
        Largest duration any edge distribution may put mass on.
    """

    def __init__(self, table, bin_width, edge_cap=600.0):
        self.bin_width = check_positive(bin_width, "bin_width")
        self.edge_cap = None if edge_cap is None else check_positive(edge_cap, "edge_cap")
        self._table = {}
        for edge_id, per_class in table.items():
            if not isinstance(per_class, dict):
                per_class = {DayClass.WEEKDAYS: per_class, DayClass.WEEKENDS: per_class}
            cells = {}
            for dc, hourly in per_class.items():
                hourly = tuple(hourly)
                if len(hourly) != HOURS:
                    raise InvalidParameterError(f"edge {edge_id!r}: expected {HOURS} hourly distributions, got {len(hourly)}")
                for d in hourly:
                    if d.bin_width != self.bin_width:
                        raise InvalidParameterError(f"edge {edge_id!r}: bin_width {d.bin_width} != {self.bin_width}")
                    if self.edge_cap is not None and d.max() > self.edge_cap * (1 + 1e-12):
                        raise InvalidParameterError(f"edge {edge_id!r}: support exceeds edge_cap {self.edge_cap}")
                cells[DayClass.parse(dc)] = hourly
            self._table[edge_id] = cells
        self._min_duration = {}
        self._min_mean = {}
        self._packed = {}

    @classmethod
    def constant(cls, dists, bin_width=None, edge_cap=None):
        """Profile where each edge has one distribution for every hour and day."""
        if bin_width is None:
            bin_width = next(iter(dists.values())).bin_width
        return cls({e: (d,) * HOURS for e, d in dists.items()}, bin_width, edge_cap)

    def __contains__(self, edge_id):
        return edge_id in self._table

    def __len__(self):
        return len(self._table)

    @property
    def edge_ids(self):
        return list(self._table)

    def items(self):
        """Yield ``(edge_id, day_class, hour, distribution)`` for every stored cell."""
        for edge_id, cells in self._table.items():
            for dc, hourly in cells.items():
                for h, d in enumerate(hourly):
                    yield edge_id, dc, h, d

    def hourly(self, edge_id, day_class):
        try:
            return self._table[edge_id][day_class]
        except KeyError:
            raise MissingProfileError(f"no profile for edge {edge_id!r} ({getattr(day_class, 'value', day_class)})") from None

    def packed(self, edge_id, day_class):
        """The 24 hourly pmfs as flat arrays ``(starts, lens, offsets, data)``.

        Hours with equal distributions point at the same slice of ``data``.
        """
        key = (edge_id, day_class)
        p = self._packed.get(key)
        if p is None:
            hourly = self.hourly(edge_id, day_class)
            starts = np.empty(HOURS, dtype=np.int64)
            lens = np.empty(HOURS, dtype=np.int64)
            offs = np.empty(HOURS, dtype=np.int64)
            chunks, seen, size = [], {}, 0
            for h, d in enumerate(hourly):
                k = (d.start, d.pmf.tobytes())
                if k not in seen:
                    seen[k] = size
                    chunks.append(d.pmf)
                    size += d.pmf.size
                starts[h], lens[h], offs[h] = d.start, d.pmf.size, seen[k]
            p = self._packed[key] = (starts, lens, offs, np.concatenate(chunks))
        return p

    def lookup(self, edge_id, t):
        """Distribution of ``edge_id`` for a departure at ``t`` (wraps past midnight)."""
        return self.hourly(edge_id, t.day_class)[t.hour]

    def edge_min_duration(self, edge_id):
        """Smallest support point over every hour and day class."""
        v = self._min_duration.get(edge_id)
        if v is None:
            cells = self._cells(edge_id)
            v = min(d.min() for hourly in cells.values() for d in hourly)
            self._min_duration[edge_id] = v
        return v

    def edge_min_mean(self, edge_id):
        """Smallest mean over every hour and day class."""
        v = self._min_mean.get(edge_id)
        if v is None:
            cells = self._cells(edge_id)
            v = min(d.mean() for hourly in cells.values() for d in hourly)
            self._min_mean[edge_id] = v
        return v

    def _cells(self, edge_id):
        try:
            return self._table[edge_id]
        except KeyError:
            raise MissingProfileError(f"no profile for edge {edge_id!r}") from None

    def check_graph(self, graph):
        """Raise :class:`ReferentialIntegrityError` for edges unknown to ``graph``."""
        unknown = [e for e in self._table if e not in graph.edges]
        if unknown:
            raise ReferentialIntegrityError(f"profile references unknown edge id(s): {unknown[:5]}")

    def with_fallback(self, graph):
        """Copy with free-flow point masses for every missing edge or day class."""
        self.check_graph(graph)
        table = {}
        for edge_id, edge in graph.edges.items():
            cells = dict(self._table.get(edge_id, {}))
            for dc in DayClass:
                if dc not in cells:
                    cells[dc] = (free_flow_distribution(edge, self.bin_width, self.edge_cap),) * HOURS
            table[edge_id] = cells
        return TimeProfile(table, self.bin_width, self.edge_cap)

    def __eq__(self, other):
        if not isinstance(other, TimeProfile):
            return NotImplemented
        return (
            self.bin_width == other.bin_width
            and self.edge_cap == other.edge_cap
            and self._table == other._table
        )

    def __repr__(self):
        return f"TimeProfile({len(self._table)} edges, bin_width={self.bin_width:g}, edge_cap={self.edge_cap})"


@dataclass(frozen=True)
class FifoViolation:
    edge_id: str
    day_class: DayClass
    hour: int
    next_hour: int
    alpha: float
    quantile_before: float
    quantile_after: float
    hard: bool


def validate_sfifo(profile, alpha_grid):
    """Check stochastic FIFO at every hour boundary.

    Departing just before a boundary must not arrive later, at any quantile
    level, than departing just after it.  Returns a violation per
    ``(edge, day class, hour pair, alpha)``; ``hard`` violations cannot be
    explained by the departure-time gap of up to one hour.
    """
    alphas = [check_probability(a) for a in alpha_grid]
    out = []
    for edge_id, cells in profile._table.items():
        for dc, hourly in cells.items():
            for h in range(HOURS):
                nh = (h + 1) % HOURS
                before, after = hourly[h], hourly[nh]
                if before is after:
                    continue
                for a in alphas:
                    qb, qa = before.quantile(a), after.quantile(a)
                    if qb > qa:
                        out.append(FifoViolation(edge_id, dc, h, nh, a, qb, qa, hard=qb > HOUR + qa))
    return out
