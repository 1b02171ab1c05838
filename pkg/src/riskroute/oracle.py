"""Reference answers for small instances.

Nothing here touches the search code: :func:`enumerate_optimal` walks every
simple path depth-first and :func:`monte_carlo_cost` simulates traversals, so
a pruning bug in :mod:`riskroute.search` cannot hide behind shared logic.
"""
import math

import numpy as np

from ._validation import check_node
from .dist import DiscreteDistribution, _extend, _grid_index
from .exceptions import ExplosionGuardError, InvalidParameterError
from .network import HOUR, HOURS
from .risk import RiskSpec, evaluate
from .search import DEFAULT_HORIZON

PATH_LIMIT = 10**6


def enumerate_optimal(graph, profile, spec, origin, destination, t, max_hops=None,
                      limit=PATH_LIMIT, horizon=DEFAULT_HORIZON):
    """Best simple path by exhaustive search.

    Returns ``(value, nodes, edge_ids)``; ``(inf, None, None)`` when no path
    exists.  Equal values break ties on the node sequence, then edge ids.
    Raises :class:`ExplosionGuardError` after ``limit`` partial paths.
    """
    spec = RiskSpec.parse(spec)
    check_node(graph, origin, "origin")
    check_node(graph, destination, "destination")
    zero = DiscreteDistribution.degenerate(0.0, profile.bin_width)
    if origin == destination:
        return evaluate(spec, zero), [origin], []
    max_hops = len(graph.nodes) - 1 if max_hops is None else max_hops
    best = [math.inf, None, None]
    visited = {origin}
    nodes = [origin]
    edges = []
    seen = 0

    def dfs(node, cost):
        nonlocal seen
        for e in graph.successors(node):
            v = e.head
            if v in visited:
                continue
            seen += 1
            if seen > limit:
                raise ExplosionGuardError(limit, seen)
            nxt = _extend(cost, e.id, t, profile, horizon)[0]
            nodes.append(v)
            edges.append(e.id)
            if v == destination:
                val = evaluate(spec, nxt)
                key = (val, nodes, edges)
                if best[1] is None or key < tuple(best):
                    best[:] = [val, list(nodes), list(edges)]
            elif len(edges) < max_hops:
                visited.add(v)
                dfs(v, nxt)
                visited.discard(v)
            nodes.pop()
            edges.pop()

    dfs(origin, zero)
    return best[0], best[1], best[2]


def path_cost(graph, profile, edge_ids, t, horizon=DEFAULT_HORIZON):
    """Exact cost distribution of a fixed path departing at ``t``."""
    cost = DiscreteDistribution.degenerate(0.0, profile.bin_width)
    prev = None
    for eid in edge_ids:
        e = graph.edges[eid]
        if prev is not None and e.tail != prev:
            raise InvalidParameterError(f"edge {eid!r} does not continue the path at {prev!r}")
        prev = e.head
        cost = _extend(cost, eid, t, profile, horizon)[0]
    return cost


def monte_carlo_cost(graph, profile, edge_ids, t, n_samples, seed=0, horizon=DEFAULT_HORIZON):
    """Empirical cost distribution of a path from ``n_samples`` simulated trips.

    Each edge duration is drawn from the hour bin of the simulated arrival at
    the edge's tail.
    """
    if n_samples < 1:
        raise InvalidParameterError("n_samples must be >= 1")
    rng = np.random.default_rng(seed)
    bw = profile.bin_width
    hb = None if horizon is None else _grid_index(float(horizon), bw, "horizon")
    elapsed = np.zeros(n_samples, dtype=np.int64)  # in grid steps
    for eid in edge_ids:
        if eid not in graph.edges:
            raise InvalidParameterError(f"unknown edge {eid!r}")
        hourly = profile.hourly(eid, t.day_class)
        hours = (np.floor_divide(t.seconds + elapsed * bw, HOUR).astype(np.int64)) % HOURS
        step = np.empty(n_samples, dtype=np.int64)
        for hr in np.unique(hours):
            mask = hours == hr
            d = hourly[int(hr)]
            u = rng.random(int(mask.sum()))
            idx = np.searchsorted(d.cdf_values, u, side="right")
            step[mask] = d.start + np.minimum(idx, len(d) - 1)
        elapsed += step
        if hb is not None:
            np.minimum(elapsed, hb, out=elapsed)
    lo = int(elapsed.min())
    counts = np.bincount(elapsed - lo).astype(float)
    return DiscreteDistribution._from_grid(lo, counts, bw)


def dkw_epsilon(n, confidence=0.99):
    """Half-width of the Dvoretzky-Kiefer-Wolfowitz band for ``n`` samples."""
    return math.sqrt(math.log(2.0 / (1.0 - confidence)) / (2.0 * n))
