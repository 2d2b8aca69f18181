"""Compiled inner loops of the frontier simulation.

All kernels draw from a ``numpy.random.Generator`` passed in by the caller,
so the random stream is fully determined by the caller's key.
"""

import numpy as np
from numba import njit

NO_CAP = np.iinfo(np.int64).max

# below this mean the binomial is drawn by inversion (one uniform)
_INVERSION_MEAN = 30.0


@njit(cache=True, nogil=True)
def binomial(rng, n, p):
    if n <= 0 or p <= 0.0:
        return 0
    if p >= 1.0:
        return n
    flip = p > 0.5
    q = 1.0 - p if flip else p
    if n * q < _INVERSION_MEAN:
        u = rng.random()
        pr = (1.0 - q) ** n
        r = q / (1.0 - q)
        k = 0
        cdf = pr
        while u > cdf and k < n:
            pr *= r * (n - k) / (k + 1)
            k += 1
            cdf += pr
    else:
        k = rng.binomial(n, q)
    return n - k if flip else k


@njit(cache=True, nogil=True)
def step_plain(rng, vals, c, floor):
    """Every accessible child of every frontier value, no truncation."""
    m = vals.size
    width = 1.0 - floor
    counts = np.empty(m, np.int64)
    total = 0
    for i in range(m):
        lo = max(vals[i], floor)
        k = binomial(rng, c, (1.0 - lo) / width)
        counts[i] = k
        total += k
    out = np.empty(total, np.float64)
    u = rng.random(total)
    j = 0
    for i in range(m):
        lo = max(vals[i], floor)
        for _ in range(counts[i]):
            out[j] = lo + (1.0 - lo) * u[j]
            j += 1
    return out


@njit(cache=True, nogil=True)
def expected_offspring(vals, c, floor):
    s = 0.0
    for i in range(vals.size):
        s += 1.0 - max(vals[i], floor)
    return c * s / (1.0 - floor)


@njit(cache=True, nogil=True)
def _threshold(vals, rem, used, width, lo_bound, target):
    # Newton from t=1 on the convex piecewise-linear expected count; a strided
    # subsample is enough since t only needs to be roughly right.
    m = vals.size
    stride = max(1, m // 2048)
    t = 1.0
    for _ in range(60):
        s = 0.0
        ds = 0.0
        for i in range(0, m, stride):
            lo = max(vals[i], lo_bound)
            if t > lo and rem[i] > 0:
                a = rem[i] / (width - used[i])
                s += a * (t - lo)
                ds += a
        s *= stride
        ds *= stride
        if s <= target or ds == 0.0:
            break
        tn = t - (s - target) / ds
        if t - tn <= 1e-12 * t:
            t = tn
            break
        t = tn
    return min(max(t, lo_bound), 1.0)


@njit(cache=True, nogil=True)
def step_capped(rng, vals, c, floor, cap):
    """The ``cap`` smallest accessible children, generated region by region.

    Children of a parent ``x`` are uniform on ``(floor, 1)`` and kept iff above
    ``x``. Sweeping thresholds ``floor = t_0 < t_1 < ...`` and drawing, for each
    parent, the number of its remaining children in ``(max(x, t_prev), t]``
    conditionally on the earlier regions reproduces the exact law of the kept
    children; the sweep stops once ``cap`` of them are known, which are then
    necessarily the smallest. Returns ``(values, capped)``.
    """
    m = vals.size
    width = 1.0 - floor
    rem = np.full(m, c, np.int64)
    used = np.zeros(m)
    buf = np.empty(0, np.float64)
    got = 0
    t_prev = floor
    t = floor
    while True:
        need = cap - got
        t = _threshold(vals, rem, used, width, t_prev, 1.05 * need + 10.0)
        if t <= t_prev:
            t = 1.0
        counts = np.zeros(m, np.int64)
        total = 0
        for i in range(m):
            lo = max(vals[i], t_prev)
            if t > lo and rem[i] > 0:
                ln = t - lo
                k = binomial(rng, rem[i], ln / (width - used[i]))
                counts[i] = k
                rem[i] -= k
                used[i] += ln
                total += k
        u = rng.random(total)
        grown = np.empty(got + total)
        grown[:got] = buf
        j = got
        for i in range(m):
            if counts[i] > 0:
                lo = max(vals[i], t_prev)
                for _ in range(counts[i]):
                    grown[j] = lo + (t - lo) * u[j - got]
                    j += 1
        buf = grown
        got += total
        if got >= cap or t >= 1.0:
            break
        t_prev = t
    capped = got > cap
    if got == cap and t < 1.0:
        # exactly cap found below t; truncation happened iff more exist above
        for i in range(m):
            lo = max(vals[i], t)
            if lo < 1.0 and rem[i] > 0:
                if binomial(rng, rem[i], (1.0 - lo) / (width - used[i])) > 0:
                    capped = True
                    break
    if got > cap:
        buf = np.partition(buf, cap - 1)[:cap].copy()
    return buf, capped


@njit(cache=True, nogil=True)
def advance(rng, vals, c, floor, cap):
    if vals.size == 0:
        return vals, False
    if cap < NO_CAP and expected_offspring(vals, c, floor) > 2.0 * cap:
        return step_capped(rng, vals, c, floor, cap)
    out = step_plain(rng, vals, c, floor)
    if out.size > cap:
        return np.partition(out, cap - 1)[:cap].copy(), True
    return out, False


@njit(cache=True, nogil=True)
def evolve(rng, vals, children, rho, cap, refresh_period):
    """Advance ``vals`` through ``children.size`` levels.

    Values are relative positions ``z = (x - a_k) / (1 - a_k)`` within the
    level's fitness range, which keeps full precision when the floors ``a_k``
    approach 1. A child at level ``k+1`` beats its parent iff its ``z`` exceeds
    ``1 - rho[k] * (1 - z_parent)`` with ``rho[k] = (1 - a_k) / (1 - a_{k+1})``.
    With ``refresh_period > 0`` every value is redrawn uniformly at each level
    ``n`` divisible by the period.
    Returns per-level counts, per-level capped flags and the final values.
    """
    depth = children.size
    counts = np.zeros(depth + 1, np.int64)
    capped = np.zeros(depth + 1, np.bool_)
    counts[0] = vals.size
    for n in range(depth):
        if vals.size == 0:
            break
        if refresh_period > 0 and n % refresh_period == 0:
            vals = rng.random(vals.size)
        if rho[n] != 1.0:
            vals = 1.0 - rho[n] * (1.0 - vals)
        vals, cp = advance(rng, vals, children[n], 0.0, cap)
        counts[n + 1] = vals.size
        capped[n + 1] = cp
    return counts, capped, vals
