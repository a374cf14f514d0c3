"""Compiled kernels for the inversion stages.

Arms are passed as integers 1..3.  The reduced layout of a direction on arm
``a`` is ``(w[S0], w[S1])`` with ``w[MISS]`` left out; the Cauchy integral
runs over reduced slot ``CPOS``.  These tables mirror ``geometry.AXIS_SLOTS``.
"""

import math

import numba
import numpy as np

from ._interp import clamp_index, cr_taps, sample_split3

#            arm:  -   1  2  3
S0 = np.array([0, 0, 1, 0])
S1 = np.array([0, 2, 2, 2])
MISS = np.array([0, 1, 0, 1])
CPOS = np.array([0, 0, 0, 1])

FOUR_PI = 4.0 * math.pi


@numba.njit(cache=True)
def circle_sum(reg, slope, edges, ty, hphi, s0, hs, b1, b2, n_beta):
    """``(1/4pi) * trapezoid over beta of G(y, phi_j, beta_j . b)`` on one arm."""
    acc = 0.0
    dphi = 2.0 * math.pi / n_beta
    for j in range(n_beta):
        phi = j * dphi
        s = math.cos(phi) * b1 + math.sin(phi) * b2
        acc += sample_split3(reg, slope, edges, ty, phi / hphi, s, s0, hs)
    return acc * dphi / FOUR_PI


@numba.njit(cache=True)
def pk_direct(reg, slope, edges, ty, hphi, s0, hs, arm, wx, wy, wz, k, n_beta, clamp):
    w = (wx, wy, wz)
    wu = w[MISS[arm]]
    if clamp and wu <= 0.0:
        return 0.0
    nrm = math.sqrt(wx * wx + wy * wy + wz * wz)
    b1 = w[S0[arm]] / nrm
    b2 = w[S1[arm]] / nrm
    return wu / nrm ** (k + 2) * circle_sum(reg, slope, edges, ty, hphi, s0, hs, b1, b2, n_beta)


@numba.njit(cache=True)
def _has_chord(ux, uy, uz, wx, wy, wz):
    """True when ``u + r w`` (r >= 0) spends positive length inside the unit cube."""
    lo = 0.0
    hi = np.inf
    for o, d in ((ux, wx), (uy, wy), (uz, wz)):
        if d == 0.0:
            if o < 0.0 or o > 1.0:
                return False
            continue
        t0 = -o / d
        t1 = (1.0 - o) / d
        if t0 > t1:
            t0, t1 = t1, t0
        lo = max(lo, t0)
        hi = min(hi, t1)
    return hi > lo


@numba.njit(cache=True)
def assemble(arm, p, q, wmiss):
    """3-vector from reduced components on ``arm``."""
    if arm == 2:
        return wmiss, p, q
    return p, wmiss, q


@numba.njit(cache=True)
def _with_slot(a, slot, value):
    if slot == 0:
        return value, a[1], a[2]
    if slot == 1:
        return a[0], value, a[2]
    return a[0], a[1], value


@numba.njit(cache=True)
def omega_lower(ux, uy, uz, a, slot, cap):
    """Lower end of the Cauchy integral for direction ``a`` with slot ``slot`` varying.

    Returns ``nan`` when the ray along ``a`` itself misses the cube.
    """
    top = a[slot]
    wx, wy, wz = _with_slot(a, slot, top)
    if not _has_chord(ux, uy, uz, wx, wy, wz):
        return np.nan
    wx, wy, wz = _with_slot(a, slot, -cap)
    if _has_chord(ux, uy, uz, wx, wy, wz):
        return -cap
    lo = -cap
    hi = top
    for _ in range(64):
        mid = 0.5 * (lo + hi)
        wx, wy, wz = _with_slot(a, slot, mid)
        if _has_chord(ux, uy, uz, wx, wy, wz):
            hi = mid
        else:
            lo = mid
        if hi - lo <= 1e-14 * max(1.0, abs(lo)):
            break
    return lo


@numba.njit(cache=True)
def p1_direct(reg, slope, edges, ty, y, hphi, s0, hs, arm, ax, ay, az, k, n_beta, gl_x, gl_w, cap, inv_fact):
    """Cauchy repeated integration of ``pk_direct`` over the arm's own slot."""
    a = (ax, ay, az)
    slot = arm - 1
    u = (y if arm == 1 else 0.0, y if arm == 2 else 0.0, y if arm == 3 else 0.0)
    if a[MISS[arm]] <= 0.0:
        return 0.0
    lo = omega_lower(u[0], u[1], u[2], a, slot, cap)
    if math.isnan(lo):
        return 0.0
    hi = a[slot]
    c = 0.5 * (hi + lo)
    h = 0.5 * (hi - lo)
    acc = 0.0
    for q in range(gl_x.shape[0]):
        om = c + h * gl_x[q]
        wx, wy, wz = _with_slot(a, slot, om)
        weight = (hi - om) ** (k - 2) if k > 2 else 1.0
        acc += gl_w[q] * weight * pk_direct(reg, slope, edges, ty, hphi, s0, hs, arm, wx, wy, wz, k,
                                            n_beta, True)
    return acc * h * inv_fact


# ---------------------------------------------------------------------------
# Table path used by the volume backprojection.


@numba.njit(cache=True, parallel=True)
def _accumulate_disc(reg, slope, edges, jphi, inside, js, w, pm, pp, lg, out):
    """Add one beta node's contribution to every (arm, y) slab of the disc table."""
    n_arm, ny = reg.shape[0], reg.shape[1]
    ns = reg.shape[3]
    npts = inside.shape[0]
    for flat in numba.prange(n_arm * ny):
        ia = flat // ny
        iy = flat - ia * ny
        rl = reg[ia, iy, jphi]
        sl = slope[ia, iy, jphi]
        em = edges[ia, iy, jphi, 0]
        ep = edges[ia, iy, jphi, 1]
        slab = out[ia, iy]
        for n in range(npts):
            j = js[n]
            if j < 0:
                continue
            jm = clamp_index(j - 1, ns)
            jp = clamp_index(j + 2, ns)
            val = (w[n, 0] * rl[jm] + w[n, 1] * rl[j] + w[n, 2] * rl[j + 1] + w[n, 3] * rl[jp]
                   + lg[n] * (w[n, 0] * sl[jm] + w[n, 1] * sl[j] + w[n, 2] * sl[j + 1]
                              + w[n, 3] * sl[jp])
                   + em * pm[n] + ep * pp[n])
            slab[inside[n]] += val


@numba.njit(cache=True)
def _disc_taps(points, c, s_, s0, hs, ns):
    """Interpolation taps and analytic edge factors at ``s = c p + s_ q`` for each point."""
    npts = points.shape[0]
    js = np.empty(npts, dtype=np.int64)
    w = np.zeros((npts, 4))
    pm = np.zeros(npts)
    pp = np.zeros(npts)
    lg = np.zeros(npts)
    for n in range(npts):
        s = c * points[n, 0] + s_ * points[n, 1]
        t = (s - s0) / hs
        if t < -1e-9 or t > ns - 1 + 1e-9:
            js[n] = -1
            continue
        j, w0, w1, w2, w3 = cr_taps(t, ns)
        js[n] = j
        w[n, 0] = w0
        w[n, 1] = w1
        w[n, 2] = w2
        w[n, 3] = w3
        a = 1.0 + s
        b = 1.0 - s
        if abs(a) < 1e-14 or abs(b) < 1e-14:
            continue
        pm[n] = 1.0 / (math.pi * a)
        pp[n] = 1.0 / (math.pi * b)
        lg[n] = math.log(abs(a / b)) / math.pi
    return js, w, pm, pp, lg


def disc_table(reg, slope, edges, hphi, s0, hs, a_nodes, n_beta, margin):
    """``Q[arm, i_y, p, q] = circle_sum`` at reduced direction ``(a_p, a_q)``.

    Beta nodes must coincide with phi-grid nodes.  Entries farther than
    ``margin`` outside the unit disc are left at zero.
    """
    n_arm, ny, nphi, ns = reg.shape
    step = nphi // n_beta
    if step * n_beta != nphi:
        raise ValueError("n_phi_beta must divide the phi-grid size")
    nd = a_nodes.shape[0]
    pa, pb = np.meshgrid(a_nodes, a_nodes, indexing="ij")
    keep = (pa ** 2 + pb ** 2 <= (1.0 + margin) ** 2).ravel()
    inside = np.flatnonzero(keep)
    points = np.ascontiguousarray(np.stack([pa.ravel()[keep], pb.ravel()[keep]], axis=1))
    acc = np.zeros((n_arm, ny, nd * nd))
    dphi = 2.0 * math.pi / n_beta
    for j in range(n_beta):
        phi = j * dphi
        taps = _disc_taps(points, math.cos(phi), math.sin(phi), s0, hs, ns)
        _accumulate_disc(reg, slope, edges, j * step, inside, *taps, acc)
    return (acc * (dphi / FOUR_PI)).reshape(n_arm, ny, nd, nd)


@numba.njit(cache=True)
def disc_sample(tab, a0, da, b1, b2):
    return _bicubic(tab, (b1 - a0) / da, (b2 - a0) / da)


@numba.njit(cache=True)
def _bicubic(arr, ta, tb):
    na, nb = arr.shape
    ia, a0, a1, a2, a3 = cr_taps(ta, na)
    ib, b0, b1, b2, b3 = cr_taps(tb, nb)
    wa = (a0, a1, a2, a3)
    bm = clamp_index(ib - 1, nb)
    bp = clamp_index(ib + 2, nb)
    acc = 0.0
    for t in range(4):
        if wa[t] == 0.0:
            continue
        row = arr[clamp_index(ia - 1 + t, na)]
        acc += wa[t] * (b0 * row[bm] + b1 * row[ib] + b2 * row[ib + 1] + b3 * row[bp])
    return acc


@numba.njit(cache=True, parallel=True)
def p1_table(qtab, y_nodes, a_nodes, k, gl_x, gl_w, cap, inv_fact, margin):
    """``P_1(u, alpha)`` on ``[arm, i_y, p, q]`` for unit ``alpha``.

    ``qtab`` is the disc table of the y-differentiated data. The factor
    ``alpha_u`` is folded in because the bare integral blows up on the rim.
    """
    n_arm, ny, nd, _ = qtab.shape
    a0 = a_nodes[0]
    da = a_nodes[1] - a_nodes[0]
    out = np.zeros(qtab.shape)
    r2max = (1.0 + margin) ** 2
    for flat in numba.prange(n_arm * ny * nd):
        ia = flat // (ny * nd)
        rem = flat - ia * ny * nd
        iy = rem // nd
        ip = rem - iy * nd
        arm = ia + 1
        y = y_nodes[iy]
        ux = y if arm == 1 else 0.0
        uy = y if arm == 2 else 0.0
        uz = y if arm == 3 else 0.0
        tab = qtab[ia, iy]
        cpos = CPOS[arm]
        for iq in range(nd):
            p = a_nodes[ip]
            q = a_nodes[iq]
            r2 = p * p + q * q
            if r2 > r2max:
                continue
            au = math.sqrt(max(0.0, 1.0 - r2))
            at = assemble(arm, p, q, au)
            slot = arm - 1
            lo = omega_lower(ux, uy, uz, at, slot, cap)
            if math.isnan(lo):
                continue
            hi = at[slot]
            other = q if cpos == 0 else p
            rest2 = other * other + au * au
            c = 0.5 * (hi + lo)
            h = 0.5 * (hi - lo)
            acc = 0.0
            for n in range(gl_x.shape[0]):
                om = c + h * gl_x[n]
                nrm = math.sqrt(om * om + rest2)
                if nrm == 0.0:
                    continue
                if cpos == 0:
                    b1 = om / nrm
                    b2 = other / nrm
                else:
                    b1 = other / nrm
                    b2 = om / nrm
                weight = (hi - om) ** (k - 2) if k > 2 else 1.0
                acc += gl_w[n] * weight * disc_sample(tab, a0, da, b1, b2) / nrm ** (k + 2)
            out[ia, iy, ip, iq] = au * acc * h * inv_fact
    return out


@numba.njit(cache=True)
def lambda_arm(n0, n1, n2, s, eps):
    """Arm (1..3) and parameter of the tripod vertex on the plane ``x.n = s``; arm 0 if none."""
    best = 0
    best_abs = -1.0
    best_y = 0.0
    n = (n0, n1, n2)
    for i in range(3):
        ni = n[i]
        if abs(ni) <= eps:
            continue
        y = s / ni
        if -1e-12 <= y <= 1.0 + 1e-12 and abs(ni) > best_abs:
            best = i + 1
            best_abs = abs(ni)
            best_y = min(max(y, 0.0), 1.0)
    return best, best_y


@numba.njit(cache=True)
def _feasible_range(n0, n1, n2):
    lo = min(0.0, min(n0, min(n1, n2)))
    hi = max(0.0, max(n0, max(n1, n2)))
    return lo, hi


@numba.njit(cache=True)
def rf_from_table(ttab, scaled, hy, a0, da, n0, n1, n2, s, e1, e2, n_theta, eps):
    """Plane integral through ``Lambda`` from the P_1 table; great circle by trapezoid.

    ``scaled`` tables already hold ``alpha_u * T``.
    """
    lo, hi = _feasible_range(n0, n1, n2)
    s = min(max(s, lo), hi)
    arm, y = lambda_arm(n0, n1, n2, s, eps)
    if arm == 0:
        return 0.0
    ny = ttab.shape[1]
    iy, c0, c1, c2, c3 = cr_taps(y / hy, ny)
    wy = (c0, c1, c2, c3)
    s0i = S0[arm]
    s1i = S1[arm]
    mi = MISS[arm]
    dth = 2.0 * math.pi / n_theta
    acc = 0.0
    for j in range(n_theta):
        ct = math.cos(j * dth)
        st = math.sin(j * dth)
        a = (ct * e1[0] + st * e2[0], ct * e1[1] + st * e2[1], ct * e1[2] + st * e2[2])
        au = a[mi]
        if au <= 0.0:
            continue
        ta = (a[s0i] - a0) / da
        tb = (a[s1i] - a0) / da
        val = 0.0
        for t in range(4):
            if wy[t] == 0.0:
                continue
            val += wy[t] * _bicubic(ttab[arm - 1, clamp_index(iy - 1 + t, ny)], ta, tb)
        acc += val if scaled else au * val
    return acc * dth


@numba.njit(cache=True, parallel=True)
def plane_table(ttab, scaled, hy, a0, da, normals, frames1, frames2, s_start, ds, n_off, n_theta, eps):
    n_nodes = normals.shape[0]
    out = np.zeros((n_nodes, n_off))
    for l in numba.prange(n_nodes):
        n0, n1, n2 = normals[l, 0], normals[l, 1], normals[l, 2]
        e1 = (frames1[l, 0], frames1[l, 1], frames1[l, 2])
        e2 = (frames2[l, 0], frames2[l, 1], frames2[l, 2])
        for m in range(n_off):
            out[l, m] = rf_from_table(ttab, scaled, hy, a0, da, n0, n1, n2, s_start[l] + m * ds,
                                      e1, e2, n_theta, eps)
    return out


@numba.njit(cache=True, parallel=True)
def backproject_table(table, s_start, ds, normals, weights, points, out):
    """``out[v] = sum_l weights[l] * table_l(points[v] . n_l)``, summed in node order."""
    n_nodes, n_off = table.shape
    for v in numba.prange(points.shape[0]):
        x0, x1, x2 = points[v, 0], points[v, 1], points[v, 2]
        acc = 0.0
        for l in range(n_nodes):
            s = x0 * normals[l, 0] + x1 * normals[l, 1] + x2 * normals[l, 2]
            t = (s - s_start[l]) / ds
            i, w0, w1, w2, w3 = cr_taps(t, n_off)
            row = table[l]
            acc += weights[l] * (w0 * row[clamp_index(i - 1, n_off)] + w1 * row[i]
                                 + w2 * row[i + 1] + w3 * row[clamp_index(i + 2, n_off)])
        out[v] = acc
