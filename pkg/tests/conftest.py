import math

import numpy as np
import pytest
from hypothesis import settings
from hypothesis import strategies as st

from riskroute.dist import DiscreteDistribution
from riskroute.network import ClockTime, DayClass, Edge, Graph, Node, TimeProfile
from riskroute.synthetic import ND, ON, ON_ALT, nonmonotone_diamond

settings.register_profile("default", deadline=None, max_examples=200)
settings.load_profile("default")


@pytest.fixture
def pi_on():
    return DiscreteDistribution.from_mapping(ON, 1.0)


@pytest.fixture
def pi_on_alt():
    return DiscreteDistribution.from_mapping(ON_ALT, 1.0)


@pytest.fixture
def pi_nd():
    return DiscreteDistribution.from_mapping(ND, 1.0)


@pytest.fixture
def diamond():
    return nonmonotone_diamond()


@pytest.fixture
def wed8():
    return ClockTime.parse("wed 08:00")


def line_graph(n, length=300.0, speed=15.0, spacing=0.003):
    """``0 -> 1 -> ... -> n-1`` along a meridian."""
    nodes = [Node(str(i), 40.7 + i * spacing, -74.0) for i in range(n)]
    edges = [Edge(f"{i}-{i + 1}", str(i), str(i + 1), length, speed) for i in range(n - 1)]
    return Graph.from_lists(nodes, edges)


def constant_profile(graph, mapping, bin_width=6.0, edge_cap=None):
    """Same distribution for every hour of every edge (``mapping`` is ``{duration: p}``)."""
    d = DiscreteDistribution.from_mapping(mapping, bin_width)
    return TimeProfile.constant({e: d for e in graph.edges}, bin_width, edge_cap)


def random_dist(rng, bw=1.0, max_len=8, max_start=5, sparse=0.3):
    n = int(rng.integers(1, max_len + 1))
    p = rng.random(n)
    p[rng.random(n) < sparse] = 0.0
    if p.sum() == 0:
        p[0] = 1.0
    return DiscreteDistribution(p, bw, bw * int(rng.integers(0, max_start + 1)), normalize=True)


def dominating(rng, d):
    """A distribution that FSD-dominates ``d`` (stochastically no smaller)."""
    kind = rng.integers(3)
    if kind == 0:
        # F**k <= F
        cdf = d.cdf_values ** rng.uniform(1.0, 4.0)
        pmf = np.diff(np.concatenate([[0.0], cdf]))
        pmf[-1] += 1.0 - pmf.sum()
        return DiscreteDistribution(np.clip(pmf, 0, None), d.bin_width, d.offset, normalize=True)
    if kind == 1:
        return d.shift(d.bin_width * int(rng.integers(0, 4)))
    # move a chunk of each bin's mass one bin up
    moved = d.pmf * rng.random(d.pmf.size)
    pmf = np.concatenate([d.pmf - moved, [0.0]])
    pmf[1:] += moved
    return DiscreteDistribution(np.clip(pmf, 0, None), d.bin_width, d.offset, normalize=True)


@st.composite
def distributions(draw, bw=1.0, max_len=8, max_start=6):
    n = draw(st.integers(1, max_len))
    raw = draw(st.lists(st.integers(0, 20), min_size=n, max_size=n))
    if sum(raw) == 0:
        raw[0] = 1
    start = draw(st.integers(0, max_start))
    return DiscreteDistribution(np.array(raw, float), bw, start * bw, normalize=True)


def two_hour_profile(before, after, boundary_hour=1, bin_width=6.0):
    """One edge ``e`` whose distribution is ``before`` up to ``boundary_hour`` and ``after`` from then on."""
    hourly = [before if h < boundary_hour else after for h in range(24)]
    return TimeProfile({"e": hourly}, bin_width, None)


def finite(x):
    return x if math.isfinite(x) else None


def greedy_single_label(graph, profile, spec, origin, destination, t):
    """Label-setting search keeping only the lowest-risk label per node.

    Correct for the expectation; for VaR it can discard the prefix of the
    optimal path.  Used to show why the multi-label search is needed.
    """
    import heapq

    from riskroute.dist import extend_time_dependent
    from riskroute.risk import evaluate

    zero = DiscreteDistribution.degenerate(0.0, profile.bin_width)
    best = {origin: zero}
    heap = [(evaluate(spec, zero), origin)]
    done = set()
    while heap:
        val, u = heapq.heappop(heap)
        if u in done:
            continue
        if u == destination:
            return val
        done.add(u)
        for e in graph.successors(u):
            c = extend_time_dependent(best[u], e.id, t, profile)
            v = e.head
            if v not in done and (v not in best or evaluate(spec, c) < evaluate(spec, best[v])):
                best[v] = c
                heapq.heappush(heap, (evaluate(spec, c), v))
    return math.inf
