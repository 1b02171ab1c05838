"""Small argument checks shared by the public API."""
import math

from .exceptions import InvalidParameterError


def check_positive(value, name):
    value = float(value)
    if not math.isfinite(value) or value <= 0:
        raise InvalidParameterError(f"{name} must be a positive finite number, got {value!r}")
    return value


def check_non_negative(value, name):
    value = float(value)
    if not math.isfinite(value) or value < 0:
        raise InvalidParameterError(f"{name} must be a non-negative finite number, got {value!r}")
    return value


def check_probability(value, name="alpha", *, allow_zero=False, allow_one=True):
    value = float(value)
    lo_ok = value >= 0 if allow_zero else value > 0
    hi_ok = value <= 1 if allow_one else value < 1
    if not (lo_ok and hi_ok):
        lo = "[0" if allow_zero else "(0"
        hi = "1]" if allow_one else "1)"
        raise InvalidParameterError(f"{name} must lie in {lo}, {hi}, got {value!r}")
    return value


def check_same_grid(a, b):
    if a.bin_width != b.bin_width:
        raise InvalidParameterError(
            f"bin_width mismatch: {a.bin_width} vs {b.bin_width}"
        )


def check_node(graph, node, name="node"):
    if node not in graph.nodes:
        raise InvalidParameterError(f"{name} {node!r} is not in the graph")
    return node
