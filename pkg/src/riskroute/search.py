"""Risk-averse shortest paths by multi-label A*.

Each label carries the full cost distribution of one subpath from the origin.
Labels at the same node are compared by first-order stochastic dominance: a
label whose cost is stochastically no smaller than another's can never lead to
a better completion, so it is dropped.  The search stops when the first label
at the destination leaves the queue.
"""
from dataclasses import dataclass, field
import heapq
import math
import time

import numpy as np

from . import _kernels as K
from . import heuristic as heuristics_mod
from ._validation import check_node
from .dist import FSD, FSD_TOL, _GRID_EPS, DiscreteDistribution, _extend, _extend_bins, _horizon_bin, fsd_compare
from .exceptions import InvalidParameterError
from .network import DAY
from .risk import RiskSpec, evaluate, score_shifted

DEFAULT_HORIZON = DAY

OPEN, EXPANDED, PRUNED = "open", "expanded", "pruned"
PRUNE_RULES = ("ub", "expectation", "fsd", "superseded", "dead_end")


@dataclass
class SearchOptions:
    seed_ub: bool = True
    ub_prune: bool = True
    exp_prune: bool = True
    fsd_prune: bool = True
    #: path-level support cap in seconds (None disables it)
    horizon: float = DEFAULT_HORIZON
    #: re-check the Pareto property of every label store after each insertion
    check_invariants: bool = False


class Label:
    __slots__ = ("node", "cost", "exp_cost", "f", "parent", "edge", "status")

    def __init__(self, node, cost, f, parent=None, edge=None):
        self.node = node
        self.cost = cost
        self.exp_cost = cost.mean()
        self.f = f
        self.parent = parent
        self.edge = edge
        self.status = OPEN

    def __repr__(self):
        return f"Label({self.node!r}, f={self.f:g}, E={self.exp_cost:g}, {self.status})"


def reconstruct(label):
    """Node sequence from the origin to ``label.node``."""
    nodes = []
    while label is not None:
        nodes.append(label.node)
        label = label.parent
    return nodes[::-1]


def _chain(label):
    labels = []
    while label is not None:
        labels.append(label)
        label = label.parent
    return labels[::-1]


@dataclass
class SearchStats:
    generated: int = 0
    expanded: int = 0
    pruned: dict = field(default_factory=lambda: dict.fromkeys(PRUNE_RULES, 0))
    ub_history: list = field(default_factory=list)
    seeded_ub: float = math.inf
    capped_mass: float = 0.0
    max_open: int = 0
    dest_f_min: float = math.inf
    from_seed: bool = False
    elapsed: float = 0.0

    @property
    def total_pruned(self):
        return sum(self.pruned.values())

    def to_dict(self):
        return {
            "generated": self.generated,
            "expanded": self.expanded,
            "pruned": dict(self.pruned),
            "total_pruned": self.total_pruned,
            "ub_history": [_num(v) for v in self.ub_history],
            "seeded_ub": _num(self.seeded_ub),
            "capped_mass": self.capped_mass,
            "max_open": self.max_open,
            "from_seed": self.from_seed,
            "elapsed_s": self.elapsed,
        }


def _num(v):
    return None if not math.isfinite(v) else float(v)


@dataclass
class RouteResult:
    """Outcome of a query.  ``found`` is False when the destination is unreachable."""

    found: bool
    origin: str
    destination: str
    depart: object
    spec: RiskSpec
    value: float = math.inf
    nodes: list = field(default_factory=list)
    edges: list = field(default_factory=list)
    #: cumulative cost distribution on arrival at each node of ``nodes``
    arrivals: list = field(default_factory=list)
    stats: SearchStats = field(default_factory=SearchStats)

    @property
    def cost(self):
        return self.arrivals[-1] if self.arrivals else None

    def to_dict(self, quantiles=(0.5, 0.9, 0.95)):
        out = {
            "found": self.found,
            "origin": self.origin,
            "destination": self.destination,
            "depart": {"day_class": self.depart.day_class.value, "seconds": self.depart.seconds},
            "rho": str(self.spec),
            "value": _num(self.value),
            "nodes": list(self.nodes),
            "edges": list(self.edges),
            "arrivals": [
                {
                    "node": n,
                    "mean": d.mean(),
                    "min": d.min(),
                    "max": d.max(),
                    "quantiles": {f"{q:g}": d.quantile(q) for q in quantiles},
                }
                for n, d in zip(self.nodes, self.arrivals)
            ],
            "stats": self.stats.to_dict(),
        }
        return out

    def to_geojson(self, graph):
        coords = [[graph.nodes[n].lon, graph.nodes[n].lat] for n in self.nodes]
        if len(coords) == 1:
            coords = coords * 2
        props = {"rho": str(self.spec), "value": _num(self.value), "nodes": list(self.nodes)}
        if self.cost is not None:
            props["mean"] = self.cost.mean()
        return {
            "type": "Feature",
            "geometry": {"type": "LineString", "coordinates": coords},
            "properties": props,
        }


def _chain_costs(edges, t, profile, bin_width, horizon):
    cost = DiscreteDistribution.degenerate(0.0, bin_width)
    out = [cost]
    capped = 0.0
    for e in edges:
        cost, moved = _extend(cost, e.id, t, profile, horizon)
        capped += moved
        out.append(cost)
    return out, capped


def _seed(graph, profile, heuristics, spec, origin, destination, t, horizon):
    hfn = None if heuristics.mode == "euclidean" else heuristics.h.__getitem__
    _, path = heuristics_mod.shortest_path(graph, origin, destination, lambda e: e.free_flow, hfn)
    if path is None:
        return math.inf, None, None
    costs, _ = _chain_costs(path, t, profile, profile.bin_width, horizon)
    return evaluate(spec, costs[-1]), path, costs


def seed_upper_bound(graph, profile, heuristics, spec, origin, destination, t, horizon=DEFAULT_HORIZON):
    """Risk of the free-flow shortest path, evaluated on the stochastic costs."""
    spec = RiskSpec.parse(spec)
    return _seed(graph, profile, heuristics, spec, origin, destination, t, horizon)[0]


def _check_pareto(bucket):
    for i, a in enumerate(bucket):
        for b in bucket[i + 1:]:
            rel = fsd_compare(a.cost, b.cost)
            if rel is not FSD.INCOMPARABLE:
                raise AssertionError(f"label store not Pareto at {a.node!r}: {a} vs {b} -> {rel.value}")


def route(graph, profile, heuristics, spec, origin, destination, t, options=None):
    """Find a risk-minimal path from ``origin`` to ``destination`` departing at ``t``.

    Parameters
    ----------
    graph, profile
        Network and its time-dependent edge distributions.
    heuristics : HeuristicTable or None
        Lower bounds for ``destination``; built on the fly when None.
    spec : RiskSpec or str
        Criterion to minimise; must be monotone under FSD.
    t : ClockTime
        Departure time.
    options : SearchOptions, optional

    Returns
    -------
    RouteResult
    """
    started = time.perf_counter()
    spec = RiskSpec.parse(spec)
    opts = options or SearchOptions()
    check_node(graph, origin, "origin")
    check_node(graph, destination, "destination")
    if heuristics is None:
        heuristics = heuristics_mod.build(graph, profile, destination)
    elif heuristics.destination != destination:
        raise InvalidParameterError(
            f"heuristic table targets {heuristics.destination!r}, not {destination!r}"
        )
    bw = profile.bin_width
    horizon = opts.horizon
    hbin = _horizon_bin(horizon, bw)
    stats = SearchStats()
    result = RouteResult(False, origin, destination, t, spec, stats=stats)

    zero = DiscreteDistribution.degenerate(0.0, bw)
    if origin == destination:
        result.found, result.value = True, evaluate(spec, zero)
        result.nodes, result.arrivals = [origin], [zero]
        stats.elapsed = time.perf_counter() - started
        return result
    h = heuristics.h
    if h[origin] == math.inf:
        stats.elapsed = time.perf_counter() - started
        return result

    ub = math.inf
    seed_path = None
    if opts.seed_ub:
        ub, seed_path, seed_costs = _seed(graph, profile, heuristics, spec, origin, destination, t, horizon)
        stats.seeded_ub = ub
        stats.ub_history.append(ub)
    exp_prune = opts.exp_prune and spec.bounded_below_by_mean
    h_exp = heuristics.h_exp

    h_bins = {}

    def bins(node, hv):
        k = h_bins.get(node)
        if k is None:
            k = h_bins[node] = math.floor(hv / bw + _GRID_EPS)
        return k

    root = Label(origin, zero, score_shifted(spec, zero, bins(origin, h[origin])))
    store = {origin: [root]}
    heap = [(root.f, root.exp_cost, origin, 0, root)]
    seq = 1
    pruned = stats.pruned
    found = None
    fsd = K.fsd

    while heap:
        f, _, node, _, lab = heapq.heappop(heap)
        if lab.status != OPEN:
            continue
        if node == destination:
            found = lab
            break
        if opts.ub_prune and f >= ub:
            lab.status = PRUNED
            pruned["ub"] += 1
            store[node].remove(lab)
            continue
        lab.status = EXPANDED
        stats.expanded += 1
        for e in graph.successors(node):
            v = e.head
            hv = h[v]
            if hv == math.inf:
                pruned["dead_end"] += 1
                continue
            cost, moved = _extend_bins(lab.cost, e.id, t, profile, hbin)
            stats.generated += 1
            stats.capped_mass += moved
            fv = score_shifted(spec, cost, bins(v, hv))
            if v == destination:
                stats.dest_f_min = min(stats.dest_f_min, fv)
            if v == destination and fv < ub:
                ub = fv
                stats.ub_history.append(ub)
            else:
                if opts.ub_prune and fv >= ub:
                    pruned["ub"] += 1
                    continue
                if exp_prune and cost.mean() + h_exp[v] >= ub:
                    pruned["expectation"] += 1
                    continue
            bucket = store.get(v)
            if bucket is None:
                bucket = store[v] = []
            if opts.fsd_prune and bucket:
                beaten = None
                dominated = False
                c_start, c_cdf = cost.start, cost.cdf_values
                for other in bucket:
                    oc = other.cost
                    rel = fsd(c_start, c_cdf, oc.start, oc.cdf_values, FSD_TOL)
                    if rel < 2:  # equal, or the new cost is no better
                        dominated = True
                        break
                    if rel == 2:
                        if beaten is None:
                            beaten = []
                        beaten.append(other)
                if dominated:
                    pruned["fsd"] += 1
                    continue
                if beaten:
                    for other in beaten:
                        if other.status == OPEN:
                            other.status = PRUNED
                            pruned["superseded"] += 1
                    # dominated expanded labels leave the store too: the new
                    # label prunes everything they would have pruned
                    gone = set(map(id, beaten))
                    bucket[:] = [o for o in bucket if id(o) not in gone]
            new = Label(v, cost, fv, lab, e)
            bucket.append(new)
            if opts.check_invariants and opts.fsd_prune:
                _check_pareto(bucket)
            heapq.heappush(heap, (fv, new.exp_cost, v, seq, new))
            seq += 1
        if len(heap) > stats.max_open:
            stats.max_open = len(heap)

    if found is not None:
        chain = _chain(found)
        result.found = True
        result.value = evaluate(spec, found.cost)
        result.nodes = [lab.node for lab in chain]
        result.edges = [lab.edge.id for lab in chain[1:]]
        result.arrivals = [lab.cost for lab in chain]
    elif seed_path is not None:
        # every label tied or lost to the seeded path, which is therefore optimal
        stats.from_seed = True
        result.found = True
        result.value = ub
        result.nodes = [origin] + [e.head for e in seed_path]
        result.edges = [e.id for e in seed_path]
        result.arrivals = seed_costs
    stats.elapsed = time.perf_counter() - started
    return result
