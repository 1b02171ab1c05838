"""Compiled inner loops.

All distribution arithmetic goes through these functions so that every code
path (search, oracle, plain ``convolve``) performs the same floating-point
operations in the same order.
"""
import math

import numba
import numpy as np

_FLAGS = dict(cache=True, nogil=True)

#: Combined mass of the leading and of the trailing tail that may be dropped
#: after a convolution.  Far below double precision relative to 1, so no CDF
#: value changes by more than rounding noise.
TAIL_MASS = 1e-18


@numba.njit(**_FLAGS)
def floor_hour(seconds):
    # exact floor(seconds / 3600), matching Python's float // semantics
    q = math.floor(seconds / 3600.0)
    if q * 3600.0 > seconds:
        q -= 1.0
    elif (q + 1.0) * 3600.0 <= seconds:
        q += 1.0
    return int(q)


@numba.njit(**_FLAGS)
def cumsum(pmf):
    out = np.empty(pmf.size)
    acc = 0.0
    for k in range(pmf.size):
        acc += pmf[k]
        out[k] = acc
    return out


@numba.njit(**_FLAGS)
def cap(pmf, start, horizon_bin):
    """Fold mass beyond ``horizon_bin`` onto it; returns ``(start, pmf, cdf, moved)``."""
    n = pmf.size
    if start + n - 1 <= horizon_bin:
        return start, pmf, cumsum(pmf), 0.0
    if start >= horizon_bin:
        one = np.ones(1)
        return horizon_bin, one, one.copy(), 1.0
    keep = horizon_bin - start + 1
    moved = 0.0
    for k in range(keep, n):
        moved += pmf[k]
    out = pmf[:keep].copy()
    out[keep - 1] += moved
    return start, out, cumsum(out), moved


@numba.njit(**_FLAGS)
def _finish(out, lo, horizon_bin):
    """Trim exact zeros, normalise, then cap at ``horizon_bin`` if it is >= 0."""
    first = 0
    while out[first] == 0.0:
        first += 1
    last = out.size - 1
    while out[last] == 0.0:
        last -= 1
    total = 0.0
    for k in range(first, last + 1):
        total += out[k]
    cut = TAIL_MASS * total
    acc = out[last]
    while last > first and acc < cut:
        last -= 1
        acc += out[last]
    acc = out[first]
    while first < last and acc < cut:
        first += 1
        acc += out[first]
    total = 0.0
    for k in range(first, last + 1):
        total += out[k]
    pmf = out[first:last + 1] / total
    if horizon_bin >= 0:
        return cap(pmf, lo + first, horizon_bin)
    return lo + first, pmf, cumsum(pmf), 0.0


@numba.njit(**_FLAGS)
def convolve(a, a_start, b, b_start, horizon_bin):
    na, nb = a.size, b.size
    out = np.zeros(na + nb - 1)
    for j in range(nb):
        q = b[j]
        for i in range(na):
            out[i + j] += a[i] * q
    return _finish(out, a_start + b_start, horizon_bin)


@numba.njit(**_FLAGS)
def extend(pmf, start, bin_width, t0, starts, lens, offs, data, horizon_bin):
    """Time-dependent convolution: support point ``i`` of ``pmf`` selects the
    hourly edge distribution for clock time ``t0 + (start + i) * bin_width``.

    ``starts/lens/offs`` describe the 24 hourly edge pmfs packed in ``data``;
    hours sharing one pmf must share its offset, so that a run of such hours
    is convolved in one pass exactly like :func:`convolve`.
    """
    n = pmf.size
    r0 = np.empty(n, np.int64)
    r1 = np.empty(n, np.int64)
    rh = np.empty(n, np.int64)
    n_runs = 0
    i = 0
    while i < n:
        q = floor_hour(t0 + (start + i) * bin_width)
        h = q % 24
        bound = (q + 1) * 3600.0
        i1 = i + 1
        while i1 < n:
            secs = t0 + (start + i1) * bin_width
            if secs >= bound:
                q2 = floor_hour(secs)
                if offs[q2 % 24] != offs[h]:
                    break
                bound = (q2 + 1) * 3600.0
            i1 += 1
        r0[n_runs] = i
        r1[n_runs] = i1
        rh[n_runs] = h
        n_runs += 1
        i = i1
    lo = np.iinfo(np.int64).max
    hi = np.iinfo(np.int64).min
    for r in range(n_runs):
        h = rh[r]
        a = start + r0[r] + starts[h]
        b = start + r1[r] - 1 + starts[h] + lens[h]
        if a < lo:
            lo = a
        if b > hi:
            hi = b
    out = np.zeros(hi - lo)
    for r in range(n_runs):
        h = rh[r]
        i0, i1 = r0[r], r1[r]
        base = start + i0 + starts[h] - lo
        o = offs[h]
        m = i1 - i0
        for j in range(lens[h]):
            q = data[o + j]
            dst = out[base + j:base + j + m]
            src = pmf[i0:i1]
            for k in range(m):
                dst[k] += src[k] * q
    return _finish(out, lo, horizon_bin)


@numba.njit(**_FLAGS)
def fsd(sa, ca, sb, cb, tol):
    """0 equal, 1 first dominates (F1 <= F2), 2 second dominates, 3 incomparable."""
    na, nb = ca.size, cb.size
    lo = min(sa, sb)
    hi = max(sa + na, sb + nb)
    below = True
    above = True
    for k in range(lo, hi):
        if k < sa:
            fa = 0.0
        elif k < sa + na:
            fa = ca[k - sa]
        else:
            fa = 1.0
        if k < sb:
            fb = 0.0
        elif k < sb + nb:
            fb = cb[k - sb]
        else:
            fb = 1.0
        d = fa - fb
        if d > tol:
            below = False
        elif d < -tol:
            above = False
        if not below and not above:
            return 3
    if below and above:
        return 0
    return 1 if below else 2


@numba.njit(**_FLAGS)
def quantile_index(cdf, alpha, tol):
    n = cdf.size
    for i in range(n):
        if cdf[i] >= alpha - tol:
            return i
    return n - 1


@numba.njit(**_FLAGS)
def mean(pmf, start, bin_width):
    acc = 0.0
    for i in range(pmf.size):
        acc += (start + i) * bin_width * pmf[i]
    return acc


@numba.njit(**_FLAGS)
def cvar(pmf, cdf, start, bin_width, alpha, tol):
    """VaR + E[(X - VaR)+] / (1 - alpha) on the grid."""
    i = quantile_index(cdf, alpha, tol)
    v = (start + i) * bin_width
    acc = 0.0
    for j in range(i + 1, pmf.size):
        acc += ((start + j) * bin_width - v) * pmf[j]
    return v + acc / (1.0 - alpha)
