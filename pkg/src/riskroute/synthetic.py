"""Synthetic networks, profiles and trips for tests, benchmarks and demos."""
from dataclasses import dataclass
from datetime import datetime, timedelta
import math

import numpy as np

from .dist import DiscreteDistribution
from .ingest import TripRecord
from .network import HOURS, ClockTime, DayClass, Edge, Graph, Node, TimeProfile, haversine

# lower Manhattan, roughly
_LAT0, _LON0 = 40.70, -74.02
_M_PER_DEG_LAT = 111_195.0


def _offset(lat0, lon0, north_m, east_m):
    lat = lat0 + north_m / _M_PER_DEG_LAT
    lon = lon0 + east_m / (_M_PER_DEG_LAT * math.cos(math.radians(lat0)))
    return float(lat), float(lon)


# -- the VaR counterexample diamond ---------------------------------------

ON = {1: 0.95, 2: 0.05}        # o -> n via a
ON_ALT = {0: 0.9, 2: 0.1}      # o -> n via b
ND = {0: 0.8, 1: 0.1, 2: 0.1}  # n -> d


def nonmonotone_diamond():
    """Graph where the VaR-best subpath to ``n`` is not part of the VaR-best path.

    ``o -> a -> n`` costs ``ON`` (VaR95 = 1), ``o -> b -> n`` costs ``ON_ALT``
    (VaR95 = 2) and ``n -> d`` costs ``ND``.  Extending both by ``n -> d``
    flips the order: VaR95 becomes 3 via ``a`` and 2 via ``b``.  Costs do not
    depend on time; ``a -> n`` and ``b -> n`` take no time.
    """
    names = ["o", "a", "b", "n", "d"]
    nodes = [Node(k, *_offset(_LAT0, _LON0, 0.0, 0.5 * i)) for i, k in enumerate(names)]
    edges = [
        Edge("oa", "o", "a", 1.0, 1.0),
        Edge("an", "a", "n", 1.0, 1.0),
        Edge("ob", "o", "b", 1.0, 1.0),
        Edge("bn", "b", "n", 1.0, 1.0),
        Edge("nd", "n", "d", 1.0, 1.0),
    ]
    zero = DiscreteDistribution.degenerate(0.0, 1.0)
    dists = {
        "oa": DiscreteDistribution.from_mapping(ON, 1.0),
        "an": zero,
        "ob": DiscreteDistribution.from_mapping(ON_ALT, 1.0),
        "bn": zero,
        "nd": DiscreteDistribution.from_mapping(ND, 1.0),
    }
    return Graph.from_lists(nodes, edges), TimeProfile.constant(dists, 1.0, None)


# -- small random instances for oracle comparisons --------------------------

@dataclass
class Instance:
    graph: Graph
    profile: TimeProfile
    origin: str
    destination: str
    depart: ClockTime


def _random_pmf(rng, width):
    p = rng.random(width) + 0.05
    return p / p.sum()


def _fsd_chain(rng, base, n, max_support):
    """``n`` distributions, each stochastically no smaller than the previous."""
    out = [base]
    for _ in range(n - 1):
        prev = out[-1]
        # F**k <= F pointwise for k >= 1, so mass moves up
        cdf = prev.cdf_values ** rng.uniform(1.0, 3.0)
        pmf = np.diff(np.concatenate([[0.0], cdf]))
        pmf[-1] += max(0.0, 1.0 - pmf.sum())
        pmf = np.clip(pmf, 0.0, None)
        d = DiscreteDistribution(pmf, prev.bin_width, prev.offset, normalize=True)
        if rng.random() < 0.5 and len(d) < max_support:
            d = d.shift(prev.bin_width)
        out.append(d)
    return out


def random_instance(seed, max_nodes=10, max_hours=4, max_support=8, bin_width=300.0, max_start=3):
    """Small random network whose profile satisfies stochastic FIFO.

    Each edge has up to ``max_hours`` distinct hourly distributions starting at
    the departure hour, each FSD-no-smaller than the one before, then stays
    constant for the rest of the (non-wrapping) day.  Supports span at most
    ``max_support`` bins.
    """
    rng = np.random.default_rng(seed)
    n = int(rng.integers(3, max_nodes + 1))
    ids = [str(i) for i in range(n)]
    nodes = [Node(k, *_offset(_LAT0, _LON0, rng.uniform(0, 2000), rng.uniform(0, 2000))) for k in ids]
    pairs = set()
    # a random chain keeps most destinations reachable
    order = list(rng.permutation(n))
    for a, b in zip(order, order[1:]):
        if rng.random() < 0.8:
            pairs.add((int(a), int(b)))
    for _ in range(int(rng.integers(n, 3 * n + 1))):
        a, b = rng.integers(0, n, size=2)
        if a != b:
            pairs.add((int(a), int(b)))
    h0 = int(rng.integers(0, HOURS))
    n_hours = int(rng.integers(1, max_hours + 1))
    edges, table = [], {}
    for k, (a, b) in enumerate(sorted(pairs)):
        na, nb = nodes[a], nodes[b]
        length = max(float(haversine(na.lat, na.lon, nb.lat, nb.lon)), 10.0) * float(rng.uniform(1.0, 1.3))
        speed = float(rng.uniform(5.0, 25.0))
        eid = f"e{k}"
        edges.append(Edge(eid, na.id, nb.id, length, speed))
        width = int(rng.integers(1, max_support + 1))
        start = int(rng.integers(1, max_start + 1))
        base = DiscreteDistribution(_random_pmf(rng, width), bin_width, start * bin_width)
        chain = _fsd_chain(rng, base, n_hours, max_support)
        hourly = [None] * HOURS
        for i in range(HOURS):
            hourly[(h0 + i) % HOURS] = chain[min(i, n_hours - 1)]
        table[eid] = hourly
    graph = Graph.from_lists(nodes, edges)
    profile = TimeProfile(table, bin_width, edge_cap=None)
    o, d = rng.choice(n, size=2, replace=False)
    depart = ClockTime(DayClass.WEEKDAYS, h0 * 3600.0 + float(rng.uniform(0, 3600)))
    return Instance(graph, profile, ids[int(o)], ids[int(d)], depart)


# -- Manhattan-like grid for benchmarks --------------------------------------

def grid_network(rows=70, cols=72, spacing=80.0, seed=0):
    """Street grid: one-way cross streets (every third one two-way), two-way
    avenues, and a fast avenue every 12 columns.  Node ``r_c`` sits at row r,
    column c.  The defaults give 5,040 nodes and ~16,500 edges.
    """
    rng = np.random.default_rng(seed)
    nodes, edges = [], []

    def nid(r, c):
        return f"{r}_{c}"

    for r in range(rows):
        for c in range(cols):
            jitter_n, jitter_e = rng.normal(0, spacing * 0.05, size=2)
            nodes.append(Node(nid(r, c), *_offset(_LAT0, _LON0, r * spacing + jitter_n, c * spacing * 2.5 + jitter_e)))
    pos = {n.id: n for n in nodes}

    def add(a, b, speed):
        na, nb = pos[a], pos[b]
        length = float(haversine(na.lat, na.lon, nb.lat, nb.lon))
        edges.append(Edge(f"{a}>{b}", a, b, length, speed))

    for r in range(rows):
        for c in range(cols - 1):
            a, b = nid(r, c), nid(r, c + 1)
            if r % 3 == 0:
                add(a, b, 11.2)
                add(b, a, 11.2)
            elif r % 2 == 0:
                add(a, b, 11.2)
            else:
                add(b, a, 11.2)
    for c in range(cols):
        speed = 22.0 if c % 12 == 5 else 13.4
        for r in range(rows - 1):
            a, b = nid(r, c), nid(r + 1, c)
            add(a, b, speed)
            add(b, a, speed)
    return Graph.from_lists(nodes, edges)


def _congestion(hour, weekend):
    if weekend:
        return 0.3 + 0.4 * math.exp(-((hour - 14) / 4.0) ** 2)
    am = math.exp(-((hour - 8.5) / 1.5) ** 2)
    pm = math.exp(-((hour - 17.5) / 2.0) ** 2)
    return 0.2 + 1.2 * am + 1.0 * pm


def _travel_time_pmf(free_flow, congestion, spread, bin_width, n_bins):
    """Right-skewed pmf on bins ``1..n_bins`` above the free-flow time."""
    k = np.arange(1, n_bins + 1)
    x = k * bin_width
    ff = free_flow
    scale = max(ff * (0.15 + congestion) * spread, bin_width * 0.5)
    z = np.clip((x - ff) / scale, 0.0, None)
    w = np.where(x >= ff, z * np.exp(-z) + 1e-3 * np.exp(-z / 4), 0.0)
    if w.sum() <= 0:
        w = np.zeros(n_bins)
        w[min(n_bins - 1, max(0, math.ceil(ff / bin_width) - 1))] = 1.0
    w = w / w.sum()
    w[w < 1e-4] = 0.0
    return w / w.sum()


def grid_profile(graph, bin_width=6.0, edge_cap=600.0, seed=0):
    """Rush-hour shaped hourly distributions on a ``bin_width`` grid up to ``edge_cap``.

    Edge parameters are rounded (free-flow time to 0.5 s, sensitivities to
    0.1) so that edges with the same rounded parameters share distribution
    objects; this keeps a 16k-edge profile small and quick to build.
    """
    rng = np.random.default_rng(seed)
    n_bins = round(edge_cap / bin_width)
    shared = {}
    table = {}
    for eid, e in graph.edges.items():
        sens = round(rng.uniform(0.5, 1.5), 1)
        spread = round(rng.uniform(0.6, 1.4), 1)
        ff = round(e.free_flow * 2) / 2
        key = (ff, sens, spread)
        cells = shared.get(key)
        if cells is None:
            cells = {}
            for dc in DayClass:
                hourly = []
                for h in range(HOURS):
                    cong = _congestion(h + 0.5, dc is DayClass.WEEKENDS) * sens
                    pmf = _travel_time_pmf(ff, cong, spread, bin_width, n_bins)
                    hourly.append(DiscreteDistribution(pmf, bin_width, bin_width, normalize=True))
                cells[dc] = hourly
            shared[key] = cells
        table[eid] = cells
    return TimeProfile(table, bin_width, edge_cap)


# -- trips ------------------------------------------------------------------

def synthetic_trips(graph, profile, n_trips, seed=0, start=datetime(2015, 3, 2), days=14,
                    edges=None, whole_seconds=True):
    """Single-edge trips drawn from ``profile``.

    Each trip picks an edge (uniformly from ``edges`` or all edges), a pickup
    instant within ``days`` days of ``start``, and a duration sampled from the
    edge's distribution for that day class and hour.  Pickup/dropoff sit on
    the edge's tail/head nodes.
    """
    rng = np.random.default_rng(seed)
    pool = list(edges) if edges is not None else list(graph.edges)
    out = []
    for _ in range(n_trips):
        e = graph.edges[pool[int(rng.integers(len(pool)))]]
        secs = rng.uniform(0, days * 86400.0)
        if whole_seconds:
            secs = float(math.floor(secs))
        pickup = start + timedelta(seconds=secs)
        d = profile.lookup(e.id, ClockTime.from_datetime(pickup))
        i = int(np.searchsorted(d.cdf_values, rng.random(), side="right"))
        dur = float(d.support[min(i, len(d) - 1)])
        tail, head = graph.nodes[e.tail], graph.nodes[e.head]
        out.append(TripRecord(pickup, pickup + timedelta(seconds=dur), tail.lat, tail.lon, head.lat, head.lon))
    return out
