"""Risk measures over travel-time distributions.

Every measure here is monotone with first-order stochastic dominance, which is
what makes label pruning in :mod:`riskroute.search` sound.
"""
from dataclasses import dataclass, field
import math

import numpy as np

from . import _kernels as K
from ._validation import check_probability
from .dist import FSD_TOL
from .exceptions import InvalidParameterError

KINDS = ("expectation", "var", "cvar", "eu")


@dataclass(frozen=True)
class UtilityFunction:
    """Increasing disutility of a duration (in seconds).

    ``kind`` is one of ``linear`` (``u(x) = x``), ``exponential``
    (``u(x) = expm1(beta * x) / beta``, convex hence risk-averse for
    ``beta > 0``) or ``piecewise`` (linear interpolation through
    ``(xs, ys)``, extrapolated with the end slopes).
    """

    kind: str = "linear"
    beta: float = 0.0
    xs: tuple = ()
    ys: tuple = ()

    def __post_init__(self):
        if self.kind == "linear":
            return
        if self.kind == "exponential":
            if not (math.isfinite(self.beta) and self.beta > 0):
                raise InvalidParameterError("exponential utility needs beta > 0")
            return
        if self.kind == "piecewise":
            xs, ys = np.asarray(self.xs, float), np.asarray(self.ys, float)
            if xs.size < 2 or xs.size != ys.size:
                raise InvalidParameterError("piecewise utility needs >= 2 matching (x, y) points")
            if np.any(np.diff(xs) <= 0) or np.any(np.diff(ys) <= 0):
                raise InvalidParameterError("piecewise utility must be strictly increasing")
            return
        raise InvalidParameterError(f"unknown utility kind {self.kind!r}")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "linear":
            return x
        if self.kind == "exponential":
            return np.expm1(self.beta * x) / self.beta
        xs, ys = np.asarray(self.xs, float), np.asarray(self.ys, float)
        y = np.interp(x, xs, ys)
        lo_slope = (ys[1] - ys[0]) / (xs[1] - xs[0])
        hi_slope = (ys[-1] - ys[-2]) / (xs[-1] - xs[-2])
        y = np.where(x < xs[0], ys[0] + (x - xs[0]) * lo_slope, y)
        return np.where(x > xs[-1], ys[-1] + (x - xs[-1]) * hi_slope, y)

    def __str__(self):
        if self.kind == "linear":
            return "linear"
        if self.kind == "exponential":
            return f"exp:{self.beta:g}"
        pts = ";".join(f"{x:g},{y:g}" for x, y in zip(self.xs, self.ys))
        return f"pwl:{pts}"


@dataclass(frozen=True)
class RiskSpec:
    """A risk criterion: ``expectation``, ``var``, ``cvar`` or ``eu``."""

    kind: str
    alpha: float = None
    utility: UtilityFunction = field(default=None)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidParameterError(f"unknown risk measure {self.kind!r}; expected one of {KINDS}")
        if self.kind in ("var", "cvar"):
            if self.alpha is None:
                raise InvalidParameterError(f"{self.kind} needs alpha")
            # cvar at 0 is the expectation; var needs a proper quantile level
            check_probability(self.alpha, allow_zero=self.kind == "cvar", allow_one=False)
        elif self.alpha is not None:
            raise InvalidParameterError(f"{self.kind} takes no alpha")
        if self.kind == "eu":
            if self.utility is None:
                raise InvalidParameterError("eu needs a utility function")
        elif self.utility is not None:
            raise InvalidParameterError(f"{self.kind} takes no utility")

    @classmethod
    def parse(cls, text):
        """Parse ``expectation``, ``var:0.95``, ``cvar:0.9``, ``eu:exp:0.01``,
        ``eu:linear`` or ``eu:pwl:0,0;600,900``."""
        if isinstance(text, RiskSpec):
            return text
        parts = text.strip().lower().split(":")
        kind = parts[0]
        try:
            if kind in ("expectation", "mean", "e"):
                if len(parts) != 1:
                    raise ValueError
                return cls("expectation")
            if kind in ("var", "cvar"):
                if len(parts) != 2:
                    raise ValueError
                return cls(kind, alpha=float(parts[1]))
            if kind == "eu":
                if len(parts) == 2 and parts[1] == "linear":
                    return cls("eu", utility=UtilityFunction("linear"))
                if len(parts) == 3 and parts[1] in ("exp", "exponential"):
                    return cls("eu", utility=UtilityFunction("exponential", beta=float(parts[2])))
                if len(parts) == 3 and parts[1] in ("pwl", "piecewise"):
                    pts = [tuple(map(float, p.split(","))) for p in parts[2].split(";")]
                    xs, ys = zip(*pts)
                    return cls("eu", utility=UtilityFunction("piecewise", xs=xs, ys=ys))
        except ValueError:
            pass
        raise InvalidParameterError(f"cannot parse risk measure {text!r}")

    @property
    def bounded_below_by_mean(self):
        """True when the measure is never below the expectation, so an
        expected-duration lower bound is also a lower bound on the measure."""
        return self.kind in ("expectation", "cvar")

    def __str__(self):
        if self.kind == "expectation":
            return "expectation"
        if self.kind == "eu":
            return f"eu:{self.utility}"
        return f"{self.kind}:{self.alpha:g}"

    def __call__(self, d):
        return evaluate(self, d)


def value_at_risk(d, alpha):
    return d.quantile(alpha)


def conditional_value_at_risk(d, alpha):
    """Expected cost over the worst ``1 - alpha`` share of outcomes.

    Uses ``VaR + E[(X - VaR)+] / (1 - alpha)``, which splits the atom at VaR
    when it straddles ``alpha``.  ``alpha = 0`` gives the mean.
    """
    if alpha == 0:
        return d.mean()
    alpha = check_probability(alpha, allow_one=False)
    return K.cvar(d.pmf, d.cdf_values, d.start, d.bin_width, alpha, FSD_TOL)


def expected_utility(d, u):
    return float(np.dot(u(d.support), d.pmf))


def evaluate(spec, d):
    """Score ``d`` under ``spec`` (lower is better)."""
    return score_shifted(spec, d, 0)


def score_shifted(spec, d, k):
    """``evaluate(spec, d.shift(k * d.bin_width))`` without building the shifted copy."""
    kind = spec.kind
    bw = d.bin_width
    if kind == "cvar":
        if spec.alpha == 0:
            return K.mean(d.pmf, d.start + k, bw) if k else d.mean()
        return K.cvar(d.pmf, d.cdf_values, d.start + k, bw, spec.alpha, FSD_TOL)
    if kind == "var":
        return (d.start + k + K.quantile_index(d.cdf_values, spec.alpha, FSD_TOL)) * bw
    if kind == "expectation":
        return K.mean(d.pmf, d.start + k, bw) if k else d.mean()
    x = (d.start + k + np.arange(d.pmf.size)) * bw
    return float(np.dot(spec.utility(x), d.pmf))
