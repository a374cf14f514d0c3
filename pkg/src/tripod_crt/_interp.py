"""Compiled Catmull-Rom interpolation helpers shared by the kernels.

Tap functions return plain tuples so that hot loops stay allocation free.
"""

import math

import numba

_SNAP = 1e-9


@numba.njit(cache=True, inline="always")
def _snap(t):
    r = math.floor(t + 0.5)
    if abs(t - r) < _SNAP:
        return r
    return t


@numba.njit(cache=True, inline="always")
def _cr_weights(t):
    t2 = t * t
    t3 = t2 * t
    return (0.5 * (-t3 + 2.0 * t2 - t),
            0.5 * (3.0 * t3 - 5.0 * t2 + 2.0),
            0.5 * (-3.0 * t3 + 4.0 * t2 + t),
            0.5 * (t3 - t2))


@numba.njit(cache=True)
def cr_taps(t, n):
    """Base index and four weights at fractional position ``t`` on ``0..n-1``.

    Taps sit at ``i - 1 .. i + 2``.  Ghost nodes beyond either end are linear
    extrapolations folded into the two nearest real nodes, so every returned
    index is valid after :func:`clamp_index`.  Requires ``n >= 2``.
    """
    t = _snap(t)
    i = int(math.floor(t))
    if i < 0:
        i = 0
    elif i > n - 2:
        i = n - 2
    w0, w1, w2, w3 = _cr_weights(t - i)
    if i == 0:
        # f[-1] = 2 f[0] - f[1]
        w1 += 2.0 * w0
        w2 -= w0
        w0 = 0.0
    if i + 2 > n - 1:
        w2 += 2.0 * w3
        w1 -= w3
        w3 = 0.0
    return i, w0, w1, w2, w3


@numba.njit(cache=True, inline="always")
def clamp_index(j, n):
    if j < 0:
        return 0
    if j > n - 1:
        return n - 1
    return j


@numba.njit(cache=True)
def cr_taps_periodic(t, n):
    t = _snap(t)
    i = int(math.floor(t))
    w0, w1, w2, w3 = _cr_weights(t - i)
    return i, w0, w1, w2, w3


@numba.njit(cache=True)
def sample_line(line, s0, hs, s):
    """Catmull-Rom value of a uniformly sampled line; zero outside its span."""
    n = line.shape[0]
    t = (s - s0) / hs
    if t < -_SNAP or t > n - 1 + _SNAP:
        return 0.0
    i, w0, w1, w2, w3 = cr_taps(t, n)
    return (w0 * line[clamp_index(i - 1, n)] + w1 * line[i]
            + w2 * line[i + 1] + w3 * line[clamp_index(i + 2, n)])


@numba.njit(cache=True)
def sample_grid3(arr, ty, tphi, ts):
    """Separable cubic interpolation of ``arr[y, phi, s]`` at fractional indices.

    ``phi`` is periodic.  Out-of-range ``ts`` gives zero.
    """
    ny, nphi, ns = arr.shape
    if ts < -_SNAP or ts > ns - 1 + _SNAP:
        return 0.0
    iy, a0, a1, a2, a3 = cr_taps(ty, ny)
    ip, b0, b1, b2, b3 = cr_taps_periodic(tphi, nphi)
    js, c0, c1, c2, c3 = cr_taps(ts, ns)
    wy = (a0, a1, a2, a3)
    wp = (b0, b1, b2, b3)
    s_m = clamp_index(js - 1, ns)
    s_p = clamp_index(js + 2, ns)
    acc = 0.0
    for a in range(4):
        if wy[a] == 0.0:
            continue
        yy = clamp_index(iy - 1 + a, ny)
        acc_p = 0.0
        for b in range(4):
            if wp[b] == 0.0:
                continue
            row = arr[yy, (ip - 1 + b) % nphi]
            acc_p += wp[b] * (c0 * row[s_m] + c1 * row[js] + c2 * row[js + 1] + c3 * row[s_p])
        acc += wy[a] * acc_p
    return acc


@numba.njit(cache=True)
def sample_grid2(arr, ta, tb):
    """Bicubic (Catmull-Rom) interpolation of ``arr[a, b]`` at fractional indices."""
    na, nb = arr.shape
    ia, a0, a1, a2, a3 = cr_taps(ta, na)
    ib, b0, b1, b2, b3 = cr_taps(tb, nb)
    wa = (a0, a1, a2, a3)
    b_m = clamp_index(ib - 1, nb)
    b_p = clamp_index(ib + 2, nb)
    acc = 0.0
    for a in range(4):
        if wa[a] == 0.0:
            continue
        row = arr[clamp_index(ia - 1 + a, na)]
        acc += wa[a] * (b0 * row[b_m] + b1 * row[ib] + b2 * row[ib + 1] + b3 * row[b_p])
    return acc


@numba.njit(cache=True)
def split_value(reg_line, slope_line, e_minus, e_plus, js, c0, c1, c2, c3, s):
    """Regular part plus the analytic edge terms of a filtered line at ``s``."""
    ns = reg_line.shape[0]
    s_m = clamp_index(js - 1, ns)
    s_p = clamp_index(js + 2, ns)
    val = c0 * reg_line[s_m] + c1 * reg_line[js] + c2 * reg_line[js + 1] + c3 * reg_line[s_p]
    a = 1.0 + s
    b = 1.0 - s
    if abs(a) < 1e-14 or abs(b) < 1e-14:
        return val
    slope = c0 * slope_line[s_m] + c1 * slope_line[js] + c2 * slope_line[js + 1] + c3 * slope_line[s_p]
    return val + (e_minus / a + e_plus / b + slope * math.log(abs(a / b))) / math.pi


@numba.njit(cache=True)
def sample_split3(reg, slope, edges, ty, tphi, s, s0, hs):
    """Like :func:`sample_grid3` for a grid stored as regular part, slope and edge values.

    ``edges[..., 0]`` and ``edges[..., 1]`` hold the line values at ``s = -1``
    and ``s = +1``.
    """
    ny, nphi, ns = reg.shape
    ts = (s - s0) / hs
    if ts < -_SNAP or ts > ns - 1 + _SNAP:
        return 0.0
    iy, a0, a1, a2, a3 = cr_taps(ty, ny)
    ip, b0, b1, b2, b3 = cr_taps_periodic(tphi, nphi)
    js, c0, c1, c2, c3 = cr_taps(ts, ns)
    wy = (a0, a1, a2, a3)
    wp = (b0, b1, b2, b3)
    acc = 0.0
    for a in range(4):
        if wy[a] == 0.0:
            continue
        yy = clamp_index(iy - 1 + a, ny)
        acc_p = 0.0
        for b in range(4):
            if wp[b] == 0.0:
                continue
            pp = (ip - 1 + b) % nphi
            acc_p += wp[b] * split_value(reg[yy, pp], slope[yy, pp], edges[yy, pp, 0],
                                         edges[yy, pp, 1], js, c0, c1, c2, c3, s)
        acc += wy[a] * acc_p
    return acc
