"""scikit-learn style wrappers around profile estimation and routing."""
from collections import Counter
from functools import lru_cache
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from . import heuristic as heuristics_mod
from .exceptions import InvalidParameterError
from .ingest import SampleAccumulator, TripAssigner, TripRecord, UnassignableTrip, clean, finalize, read_trips_csv
from .network import ClockTime, Graph, TimeProfile
from .risk import RiskSpec
from .search import DEFAULT_HORIZON, SearchOptions, route


def _check_trips(X):
    if isinstance(X, (str, Path)):
        X = read_trips_csv(X)[0]
    records = list(X)
    for r in records:
        if not isinstance(r, TripRecord):
            raise InvalidParameterError(f"expected TripRecord, got {type(r).__name__}")
    return records


def _check_graph(graph):
    if not isinstance(graph, Graph):
        raise InvalidParameterError(f"graph must be a Graph, got {type(graph).__name__}")
    return graph


class TimeProfileEstimator(TransformerMixin, BaseEstimator):
    """Learns hourly edge travel-time distributions from trip records.

    ``fit`` runs cleaning, path assignment and histogram estimation and
    leaves the result in ``profile_``.  ``transform`` maps trips to the
    per-edge samples they contribute.

    Parameters
    ----------
    graph : Graph
        Road network the trips are matched to.
    bin_width, edge_cap : float
        Grid spacing and per-edge duration cap, seconds.
    min_samples : int
        Cells with fewer samples are blended with the free-flow time.
    snap_radius : float
        Largest endpoint-to-node distance accepted, metres.
    filters : CleaningFilters, optional
    """

    def __init__(self, graph=None, bin_width=6.0, edge_cap=600.0, min_samples=5,
                 snap_radius=150.0, filters=None):
        self.graph = graph
        self.bin_width = bin_width
        self.edge_cap = edge_cap
        self.min_samples = min_samples
        self.snap_radius = snap_radius
        self.filters = filters

    def _validate(self):
        _check_graph(self.graph)
        if int(self.min_samples) < 0:
            raise InvalidParameterError("min_samples must be >= 0")

    def fit(self, X, y=None):
        self._validate()
        self.accumulator_ = SampleAccumulator(float(self.bin_width), float(self.edge_cap))
        self.assigner_ = TripAssigner(self.graph, self.snap_radius)
        self.report_ = Counter()
        return self.partial_fit(X)

    def partial_fit(self, X, y=None):
        """Add more trips to the histograms and refresh ``profile_``."""
        if not hasattr(self, "accumulator_"):
            return self.fit(X)
        records = _check_trips(X)
        kept, dropped = clean(records, self.graph, self.filters)
        rep = self.report_
        rep["records"] += len(records)
        rep["cleaned"] += len(kept)
        for reason, n in dropped.items():
            rep["dropped:" + reason] += n
        for r in kept:
            try:
                samples = self.assigner_.assign(r)
            except UnassignableTrip as exc:
                rep["skipped:" + exc.reason] += 1
                continue
            rep["assigned"] += 1
            for edge_id, t, c in samples:
                self.accumulator_.add(edge_id, t, c)
                rep["samples"] += 1
        self.profile_ = finalize(self.accumulator_, self.graph, self.min_samples)
        return self

    def transform(self, X):
        """Per-edge samples as a structured array with fields
        ``trip, edge_id, day_class, hour, duration``; unassignable trips are skipped."""
        check_is_fitted(self, "profile_")
        rows = []
        for i, r in enumerate(_check_trips(X)):
            try:
                samples = self.assigner_.assign(r)
            except UnassignableTrip:
                continue
            for edge_id, t, c in samples:
                rows.append((i, edge_id, t.day_class.value, t.hour, c))
        dtype = [("trip", "i8"), ("edge_id", "O"), ("day_class", "U8"), ("hour", "i8"), ("duration", "f8")]
        return np.array(rows, dtype=dtype)

    def predict(self, X):
        """Mean duration of each ``(edge_id, ClockTime)`` query under ``profile_``."""
        check_is_fitted(self, "profile_")
        return np.array([self.profile_.lookup(e, ClockTime.parse(t)).mean() for e, t in X])


class RiskAverseRouter(BaseEstimator):
    """Risk-averse router for one network and profile.

    ``fit(graph, profile)`` validates and stores the inputs; ``route`` answers
    single queries and ``predict`` scores a batch of them.
    """

    def __init__(self, rho="cvar:0.9", heuristic="network", seed_ub=True, fsd_prune=True,
                 exp_prune=True, ub_prune=True, horizon=DEFAULT_HORIZON):
        self.rho = rho
        self.heuristic = heuristic
        self.seed_ub = seed_ub
        self.fsd_prune = fsd_prune
        self.exp_prune = exp_prune
        self.ub_prune = ub_prune
        self.horizon = horizon

    def fit(self, graph, profile=None):
        _check_graph(graph)
        if profile is None:
            profile = TimeProfile({}, 6.0)
        if not isinstance(profile, TimeProfile):
            raise InvalidParameterError(f"profile must be a TimeProfile, got {type(profile).__name__}")
        if self.heuristic not in heuristics_mod.MODES:
            raise InvalidParameterError(f"heuristic must be one of {heuristics_mod.MODES}")
        self.spec_ = RiskSpec.parse(self.rho)
        self.graph_ = graph
        self.profile_ = profile.with_fallback(graph)
        self.options_ = SearchOptions(
            seed_ub=self.seed_ub, ub_prune=self.ub_prune, exp_prune=self.exp_prune,
            fsd_prune=self.fsd_prune, horizon=self.horizon,
        )
        g, p, mode = self.graph_, self.profile_, self.heuristic
        self._tables = lru_cache(maxsize=64)(lambda d: heuristics_mod.build(g, p, d, mode))
        return self

    def route(self, origin, destination, depart, rho=None):
        check_is_fitted(self, "graph_")
        spec = self.spec_ if rho is None else RiskSpec.parse(rho)
        if destination not in self.graph_.nodes:
            raise InvalidParameterError(f"destination {destination!r} is not in the graph")
        return route(self.graph_, self.profile_, self._tables(destination), spec,
                     origin, destination, ClockTime.parse(depart), self.options_)

    def predict(self, X):
        """Risk value for each ``(origin, destination, depart)``; ``inf`` when unreachable."""
        return np.array([self.route(o, d, t).value for o, d, t in X], dtype=float)
