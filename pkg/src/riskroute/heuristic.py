"""Admissible lower bounds on the remaining travel time, and plain A*.

``h(n)`` bounds every realisable duration from ``n`` to the destination and is
used in label priorities; ``h_exp(n)`` bounds the *expected* remaining
duration and is used for pruning against the incumbent.
"""
from dataclasses import dataclass
import heapq
import math

from ._validation import check_node
from .exceptions import InvalidParameterError
from .network import haversine
from .risk import evaluate

MODES = ("network", "paper", "euclidean")


def edge_lower_bound(edge, profile):
    """Smallest duration ``edge`` can ever take: free flow or fastest sample."""
    if edge.id in profile:
        return min(edge.free_flow, profile.edge_min_duration(edge.id))
    return edge.free_flow


def edge_mean_lower_bound(edge, profile):
    if edge.id in profile:
        return profile.edge_min_mean(edge.id)
    return edge.free_flow


def reverse_dijkstra(graph, target, weight):
    """Distance from every node to ``target``; unreachable nodes get ``inf``."""
    dist = dict.fromkeys(graph.nodes, math.inf)
    dist[target] = 0.0
    heap = [(0.0, target)]
    while heap:
        du, u = heapq.heappop(heap)
        if du > dist[u]:
            continue
        for e in graph.predecessors(u):
            nd = du + weight(e)
            if nd < dist[e.tail]:
                dist[e.tail] = nd
                heapq.heappush(heap, (nd, e.tail))
    return dist


@dataclass(frozen=True)
class HeuristicTable:
    destination: str
    h: dict
    h_exp: dict
    mode: str = "network"

    def __getitem__(self, node):
        return self.h[node]

    def reachable(self, node):
        return self.h[node] < math.inf


def build(graph, profile, destination, mode="network"):
    """Lower-bound tables for routing to ``destination``.

    ``mode`` picks ``h``:

    * ``network`` -- shortest path over per-edge minimum durations
      (min of free flow and the fastest support point in the profile);
    * ``paper`` -- shortest network length divided by the network-wide
      maximum speed limit;
    * ``euclidean`` -- great-circle distance over the maximum speed limit.

    ``h_exp`` always uses per-edge minimum mean durations.
    """
    check_node(graph, destination, "destination")
    if mode not in MODES:
        raise InvalidParameterError(f"heuristic mode must be one of {MODES}, got {mode!r}")
    h_exp = reverse_dijkstra(graph, destination, lambda e: edge_mean_lower_bound(e, profile))
    if mode == "network":
        h = reverse_dijkstra(graph, destination, lambda e: edge_lower_bound(e, profile))
    elif mode == "paper":
        vmax = graph.max_speed
        lengths = reverse_dijkstra(graph, destination, lambda e: e.length)
        h = {n: v / vmax for n, v in lengths.items()}
    else:
        vmax = graph.max_speed
        dn = graph.nodes[destination]
        # reachability still comes from the network sweep
        reach = reverse_dijkstra(graph, destination, lambda e: e.length)
        h = {
            n: (float(haversine(node.lat, node.lon, dn.lat, dn.lon)) / vmax if reach[n] < math.inf else math.inf)
            for n, node in graph.nodes.items()
        }
    return HeuristicTable(destination, h, h_exp, mode)


def priority(label_cost, h, spec):
    """Risk of the label's cost plus the (grid-rounded-down) remaining bound."""
    return evaluate(spec, label_cost.shift(h))


def shortest_path(graph, origin, destination, weight, heuristic=None):
    """Deterministic A*.  Returns ``(cost, [edges])`` or ``(inf, None)``.

    ``heuristic`` maps node -> admissible, consistent lower bound (default 0).
    Ties break on node id so results are reproducible.
    """
    check_node(graph, origin, "origin")
    check_node(graph, destination, "destination")
    hfn = heuristic or (lambda n: 0.0)
    g = {origin: 0.0}
    parent = {origin: None}
    heap = [(hfn(origin), origin)]
    closed = set()
    while heap:
        _, u = heapq.heappop(heap)
        if u in closed:
            continue
        if u == destination:
            path = []
            while parent[u] is not None:
                e = parent[u]
                path.append(e)
                u = e.tail
            return g[destination], path[::-1]
        closed.add(u)
        for e in graph.successors(u):
            v = e.head
            if v in closed:
                continue
            nd = g[u] + weight(e)
            if nd < g.get(v, math.inf):
                g[v] = nd
                parent[v] = e
                heapq.heappush(heap, (nd + hfn(v), v))
    return math.inf, None
