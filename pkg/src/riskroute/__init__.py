"""Risk-averse shortest paths over time-dependent stochastic travel times."""
from .dist import FSD, DiscreteDistribution, cap, convolve, extend_time_dependent, fsd_compare
from .estimators import RiskAverseRouter, TimeProfileEstimator
from .exceptions import (
    ExplosionGuardError,
    InvalidParameterError,
    MissingProfileError,
    ParseError,
    ReferentialIntegrityError,
    RiskRouteError,
)
from .formats import load_graph, load_profile, save_graph, save_profile
from .heuristic import HeuristicTable
from .heuristic import build as build_heuristic
from .network import ClockTime, DayClass, Edge, Graph, Node, TimeProfile, validate_sfifo
from .risk import RiskSpec, UtilityFunction, evaluate
from .search import RouteResult, SearchOptions, route

__version__ = "0.1.0"

__all__ = [
    "FSD", "DiscreteDistribution", "cap", "convolve", "extend_time_dependent", "fsd_compare",
    "RiskAverseRouter", "TimeProfileEstimator",
    "ExplosionGuardError", "InvalidParameterError", "MissingProfileError", "ParseError",
    "ReferentialIntegrityError", "RiskRouteError",
    "load_graph", "load_profile", "save_graph", "save_profile",
    "HeuristicTable", "build_heuristic",
    "ClockTime", "DayClass", "Edge", "Graph", "Node", "TimeProfile", "validate_sfifo",
    "RiskSpec", "UtilityFunction", "evaluate",
    "RouteResult", "SearchOptions", "route",
]
