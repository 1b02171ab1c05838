"""Discrete travel-time distributions on a uniform grid.

A :class:`DiscreteDistribution` puts probability mass on the points
``offset + i * bin_width`` (``i = 0 .. len(pmf) - 1``).  Internally the offset
is stored as an integer grid index (``start``) so that shifts and convolutions
never accumulate rounding error in the support.
"""
from enum import Enum
import math

import numpy as np

from . import _kernels as K
from ._validation import check_non_negative, check_positive, check_probability, check_same_grid
from .exceptions import InvalidParameterError

#: Allowed deviation of total mass from one.
MASS_TOL = 1e-9
#: CDF differences inside this band count as equal in FSD comparisons and quantiles.
FSD_TOL = 1e-12
# slack (in bins) when snapping durations to the grid
_GRID_EPS = 1e-9


def _grid_index(value, bin_width, name):
    k = round(value / bin_width)
    if abs(k * bin_width - value) > _GRID_EPS * max(1.0, abs(value)):
        raise InvalidParameterError(
            f"{name}={value!r} is not a multiple of bin_width={bin_width!r}"
        )
    return int(k)


def _trim(arr):
    nz = np.flatnonzero(arr)
    if nz.size == 0:
        raise InvalidParameterError("distribution has no mass")
    return nz[0], arr[nz[0]:nz[-1] + 1]


class DiscreteDistribution:
    """Immutable pmf over non-negative durations on a uniform grid.

    Parameters
    ----------
    pmf : array-like
        Probability of each grid point, starting at ``offset``.
    bin_width : float
        Grid spacing in seconds.
    offset : float
        Duration of the first entry; must be a non-negative multiple of
        ``bin_width``.
    normalize : bool
        Rescale ``pmf`` to unit mass instead of requiring it already sums to 1.
    """

    __slots__ = ("bin_width", "start", "pmf", "_cdf", "_mean")

    def __init__(self, pmf, bin_width=6.0, offset=0.0, *, normalize=False):
        bin_width = check_positive(bin_width, "bin_width")
        offset = check_non_negative(offset, "offset")
        arr = np.array(pmf, dtype=np.float64).ravel()
        if arr.size == 0:
            raise InvalidParameterError("pmf must not be empty")
        if not np.all(np.isfinite(arr)) or np.any(arr < 0):
            raise InvalidParameterError("pmf entries must be finite and non-negative")
        total = arr.sum()
        if total <= 0:
            raise InvalidParameterError("distribution has no mass")
        if normalize:
            arr = arr / total
        elif abs(total - 1.0) > MASS_TOL:
            raise InvalidParameterError(f"pmf sums to {total!r}, expected 1")
        lead, arr = _trim(arr)
        self._init(_grid_index(offset, bin_width, "offset") + int(lead), arr, bin_width)

    def _init(self, start, arr, bin_width):
        arr.setflags(write=False)
        self.bin_width = bin_width
        self.start = start
        self.pmf = arr
        self._cdf = None
        self._mean = None

    @classmethod
    def _from_grid(cls, start, arr, bin_width):
        # trusted fast path: trims exact zeros and renormalizes
        s, pmf, cdf, _ = K._finish(np.asarray(arr, dtype=np.float64), start, -1)
        return cls._wrap(s, pmf, cdf, bin_width)

    @classmethod
    def _wrap(cls, start, pmf, cdf, bin_width):
        obj = cls.__new__(cls)
        pmf.setflags(write=False)
        cdf.setflags(write=False)
        obj.bin_width = bin_width
        obj.start = start
        obj.pmf = pmf
        obj._cdf = cdf
        obj._mean = None
        return obj

    @classmethod
    def degenerate(cls, value=0.0, bin_width=6.0):
        """Point mass at ``value`` (must lie on the grid)."""
        return cls([1.0], bin_width=bin_width, offset=value)

    @classmethod
    def from_mapping(cls, masses, bin_width=6.0, *, normalize=False):
        """Build from ``{duration: probability}``; durations must be on the grid."""
        if not masses:
            raise InvalidParameterError("empty mapping")
        bin_width = check_positive(bin_width, "bin_width")
        idx = {}
        for value, p in masses.items():
            check_non_negative(value, "duration")
            k = _grid_index(float(value), bin_width, "duration")
            idx[k] = idx.get(k, 0.0) + float(p)
        lo, hi = min(idx), max(idx)
        arr = np.zeros(hi - lo + 1)
        for k, p in idx.items():
            arr[k - lo] = p
        return cls(arr, bin_width=bin_width, offset=lo * bin_width, normalize=normalize)

    # -- basic accessors -------------------------------------------------
    @property
    def offset(self):
        return self.start * self.bin_width

    @property
    def support(self):
        """Durations carrying the entries of ``pmf``."""
        return (self.start + np.arange(self.pmf.size)) * self.bin_width

    @property
    def cdf_values(self):
        if self._cdf is None:
            c = K.cumsum(self.pmf)
            c.setflags(write=False)
            self._cdf = c
        return self._cdf

    @property
    def end(self):
        """One past the last grid index."""
        return self.start + self.pmf.size

    def __len__(self):
        return self.pmf.size

    def min(self):
        return self.start * self.bin_width

    def max(self):
        return (self.end - 1) * self.bin_width

    def __eq__(self, other):
        if not isinstance(other, DiscreteDistribution):
            return NotImplemented
        return (
            self.bin_width == other.bin_width
            and self.start == other.start
            and np.array_equal(self.pmf, other.pmf)
        )

    def __hash__(self):
        return hash((self.bin_width, self.start, self.pmf.tobytes()))

    def __repr__(self):
        items = ", ".join(
            f"{x:g}: {p:.6g}" for x, p in zip(self.support, self.pmf)
        )
        if len(self) > 8:
            items = f"{len(self)} bins from {self.min():g} to {self.max():g}"
        return f"DiscreteDistribution({{{items}}}, bin_width={self.bin_width:g})"

    def to_mapping(self):
        return {float(x): float(p) for x, p in zip(self.support, self.pmf) if p > 0}

    # -- statistics ------------------------------------------------------
    def cdf(self, x):
        """P(D <= x)."""
        k = math.floor(x / self.bin_width + _GRID_EPS) - self.start
        if k < 0:
            return 0.0
        if k >= self.pmf.size:
            return 1.0
        return float(self.cdf_values[k])

    def quantile(self, alpha):
        """Smallest grid duration whose CDF reaches ``alpha`` (pseudo-inverse)."""
        alpha = check_probability(alpha)
        i = K.quantile_index(self.cdf_values, alpha, FSD_TOL)
        return (self.start + i) * self.bin_width

    def mean(self):
        if self._mean is None:
            self._mean = K.mean(self.pmf, self.start, self.bin_width)
        return self._mean

    def shift(self, c):
        """Translate by ``c`` seconds, rounded down to the grid."""
        c = check_non_negative(c, "shift")
        k = math.floor(c / self.bin_width + _GRID_EPS)
        if k == 0:
            return self
        obj = DiscreteDistribution.__new__(DiscreteDistribution)
        obj._init(self.start + k, self.pmf, self.bin_width)
        return obj

    def cap(self, horizon):
        return cap(self, horizon)


class FSD(str, Enum):
    """Outcome of a first-order stochastic dominance comparison.

    Dominating means stochastically *larger*, i.e. the worse cost.
    """

    FIRST_DOMINATES = "D1_dominates"
    SECOND_DOMINATES = "D2_dominates"
    EQUAL = "equal"
    INCOMPARABLE = "incomparable"


def cdf_difference(d1, d2):
    """``F1 - F2`` evaluated on every grid point of the union of supports."""
    lo = min(d1.start, d2.start)
    hi = max(d1.end, d2.end)
    f1 = np.ones(hi - lo)
    f2 = np.ones(hi - lo)
    f1[: d1.start - lo] = 0.0
    f2[: d2.start - lo] = 0.0
    f1[d1.start - lo: d1.end - lo] = d1.cdf_values
    f2[d2.start - lo: d2.end - lo] = d2.cdf_values
    return f1 - f2


_FSD_CODES = (FSD.EQUAL, FSD.FIRST_DOMINATES, FSD.SECOND_DOMINATES, FSD.INCOMPARABLE)


def fsd_compare(d1, d2, tol=FSD_TOL):
    check_same_grid(d1, d2)
    return _FSD_CODES[K.fsd(d1.start, d1.cdf_values, d2.start, d2.cdf_values, tol)]


def convolve(d1, d2):
    """Distribution of the sum of two independent durations."""
    check_same_grid(d1, d2)
    s, pmf, cdf, _ = K.convolve(d1.pmf, d1.start, d2.pmf, d2.start, -1)
    return DiscreteDistribution._wrap(s, pmf, cdf, d1.bin_width)


def cap(d, horizon):
    """Move all mass above ``horizon`` onto the horizon point."""
    return _cap(d, horizon)[0]


def _horizon_bin(horizon, bin_width):
    if horizon is None:
        return -1
    check_positive(horizon, "horizon")
    return _grid_index(float(horizon), bin_width, "horizon")


def _cap(d, horizon):
    hb = _horizon_bin(horizon, d.bin_width)
    if d.end - 1 <= hb:
        return d, 0.0
    s, pmf, cdf, moved = K.cap(d.pmf, d.start, hb)
    return DiscreteDistribution._wrap(s, pmf, cdf, d.bin_width), moved


def extend_time_dependent(d, edge_id, t, profile, horizon=None):
    """Append an edge whose cost depends on the arrival time at its tail.

    ``d`` is the cost of a subpath departing at clock time ``t``; each support
    point ``x`` of ``d`` picks the edge distribution of the hour bin holding
    ``t + x``.  Mass beyond ``horizon`` (if given) is folded onto it.
    """
    return _extend(d, edge_id, t, profile, horizon)[0]


def _extend(d, edge_id, t, profile, horizon=None):
    if d.bin_width != profile.bin_width:
        raise InvalidParameterError(
            f"bin widths differ: {d.bin_width!r} vs profile {profile.bin_width!r}"
        )
    return _extend_bins(d, edge_id, t, profile, _horizon_bin(horizon, d.bin_width))


def _extend_bins(d, edge_id, t, profile, horizon_bin):
    # horizon already on the grid (-1 for none); no checks
    starts, lens, offs, data = profile.packed(edge_id, t.day_class)
    s, pmf, cdf, moved = K.extend(d.pmf, d.start, d.bin_width, float(t.seconds),
                                  starts, lens, offs, data, horizon_bin)
    return DiscreteDistribution._wrap(s, pmf, cdf, d.bin_width), moved


# functional spellings of the methods
def cdf(d, x):
    return d.cdf(x)


def quantile(d, alpha):
    return d.quantile(alpha)


def mean(d):
    return d.mean()


def shift(d, c):
    return d.shift(c)
