"""Compiled kernels for simulating cone data.

Phantoms arrive packed by :meth:`PhantomSpec.as_array`.  Ray integrals are
closed forms: erf moments for truncated Gaussians, exact Gauss-Legendre on the
chord for polynomial balls.
"""

import math

import numba
import numpy as np

GAUSS_TRUNC = 4.0
_MAX_GL = 24


def gl_table(nmax=_MAX_GL):
    """Gauss-Legendre nodes/weights on [-1, 1] for orders 1..nmax, row ``n`` holds order ``n``."""
    nodes = np.zeros((nmax + 1, nmax))
    weights = np.zeros((nmax + 1, nmax))
    for n in range(1, nmax + 1):
        x, w = np.polynomial.legendre.leggauss(n)
        nodes[n, :n] = x
        weights[n, :n] = w
    return nodes, weights


@numba.njit(cache=True)
def _gauss_moments_poly(a, b, p, r0, k):
    """``int_a^b exp(-t^2/p^2) (t + r0)^k dt``."""
    pa = a / p
    pb = b / p
    if pa > 0.0:
        m0 = 0.5 * p * math.sqrt(math.pi) * (math.erfc(pa) - math.erfc(pb))
    elif pb < 0.0:
        m0 = 0.5 * p * math.sqrt(math.pi) * (math.erfc(-pb) - math.erfc(-pa))
    else:
        m0 = 0.5 * p * math.sqrt(math.pi) * (math.erf(pb) - math.erf(pa))
    ea = math.exp(-pa * pa)
    eb = math.exp(-pb * pb)
    half = 0.5 * p * p
    m_prev2 = m0
    m_prev1 = half * (ea - eb)
    # sum_j C(k, j) r0^(k-j) M_j
    total = r0 ** k * m0
    if k >= 1:
        total += k * r0 ** (k - 1) * m_prev1
    binom = float(k)
    for j in range(2, k + 1):
        mj = (j - 1) * half * m_prev2 + half * (a ** (j - 1) * ea - b ** (j - 1) * eb)
        binom = binom * (k - j + 1) / j
        total += binom * r0 ** (k - j) * mj
        m_prev2 = m_prev1
        m_prev1 = mj
    return total


@numba.njit(cache=True)
def box_clip(ux, uy, uz, wx, wy, wz):
    """Slab clip of ``u + r w`` (r >= 0) against the unit cube; empty gives lo > hi."""
    lo = 0.0
    hi = np.inf
    for o, d in ((ux, wx), (uy, wy), (uz, wz)):
        if d == 0.0:
            if o < 0.0 or o > 1.0:
                return 1.0, 0.0
            continue
        t0 = -o / d
        t1 = (1.0 - o) / d
        if t0 > t1:
            t0, t1 = t1, t0
        if t0 > lo:
            lo = t0
        if t1 < hi:
            hi = t1
    return lo, hi


@numba.njit(cache=True)
def ray_component(row, ux, uy, uz, wx, wy, wz, k, gl_nodes, gl_weights, r_lo, r_hi):
    """``int f_c(u + r w) r^k dr`` over ``[r_lo, r_hi]`` for one component and unit ``w``."""
    kind = row[0]
    p = row[4]
    amp = row[5]
    dx = ux - row[1]
    dy = uy - row[2]
    dz = uz - row[3]
    r0 = -(dx * wx + dy * wy + dz * wz)
    b2 = dx * dx + dy * dy + dz * dz - r0 * r0
    if b2 < 0.0:
        b2 = 0.0
    big_r = GAUSS_TRUNC * p if kind == 1.0 else p
    if b2 >= big_r * big_r:
        return 0.0
    half_len = math.sqrt(big_r * big_r - b2)
    lo = max(r0 - half_len, r_lo)
    hi = min(r0 + half_len, r_hi)
    if hi <= lo:
        return 0.0
    if kind == 1.0:
        return amp * math.exp(-b2 / (p * p)) * _gauss_moments_poly(lo - r0, hi - r0, p, r0, k)
    m = int(row[6])
    if m == 0:
        return amp * (hi ** (k + 1) - lo ** (k + 1)) / (k + 1)
    # polynomial of degree 2m + k in r: exact with m + k//2 + 1 nodes
    n = m + k // 2 + 1
    c = 0.5 * (hi + lo)
    h = 0.5 * (hi - lo)
    acc = 0.0
    for q in range(n):
        r = c + h * gl_nodes[n, q]
        t = r - r0
        v = 1.0 - (b2 + t * t) / (p * p)
        if v > 0.0:
            acc += gl_weights[n, q] * v ** m * r ** k
    return amp * h * acc


@numba.njit(cache=True)
def ray_all(comps, ux, uy, uz, wx, wy, wz, k, gl_nodes, gl_weights):
    """Sum over components, restricted to the unit-cube chord of the ray."""
    r_lo, r_hi = box_clip(ux, uy, uz, wx, wy, wz)
    if r_hi <= r_lo:
        return 0.0
    acc = 0.0
    for c in range(comps.shape[0]):
        acc += ray_component(comps[c], ux, uy, uz, wx, wy, wz, k, gl_nodes, gl_weights,
                             r_lo, r_hi)
    return acc


@numba.njit(cache=True)
def frame(bx, by, bz):
    """Least-aligned-axis Gram-Schmidt frame; mirrors ``geometry.great_circle_frame``."""
    ax = abs(bx)
    ay = abs(by)
    az = abs(bz)
    if ax <= ay and ax <= az:
        a = (1.0, 0.0, 0.0)
    elif ay <= az:
        a = (0.0, 1.0, 0.0)
    else:
        a = (0.0, 0.0, 1.0)
    d = a[0] * bx + a[1] * by + a[2] * bz
    e1x = a[0] - d * bx
    e1y = a[1] - d * by
    e1z = a[2] - d * bz
    nrm = math.sqrt(e1x * e1x + e1y * e1y + e1z * e1z)
    e1x /= nrm
    e1y /= nrm
    e1z /= nrm
    e2x = by * e1z - bz * e1y
    e2y = bz * e1x - bx * e1z
    e2z = bx * e1y - by * e1x
    return e1x, e1y, e1z, e2x, e2y, e2z


@numba.njit(cache=True)
def _cap_rejects(comps, ux, uy, uz, bx, by, bz, s):
    """True when the cone circle provably misses every component's support."""
    psi = math.acos(min(1.0, max(-1.0, s)))
    for c in range(comps.shape[0]):
        row = comps[c]
        big_r = GAUSS_TRUNC * row[4] if row[0] == 1.0 else row[4]
        dx = row[1] - ux
        dy = row[2] - uy
        dz = row[3] - uz
        dist = math.sqrt(dx * dx + dy * dy + dz * dz)
        if dist <= big_r * (1.0 + 1e-12):
            return False
        gamma = math.asin(big_r / dist)
        cos_t = (dx * bx + dy * by + dz * bz) / dist
        theta = math.acos(min(1.0, max(-1.0, cos_t)))
        if abs(psi - theta) <= gamma + 1e-9:
            return False
    return True


@numba.njit(cache=True, parallel=True)
def simulate_kernel(comps, arms, y_nodes, phi_nodes, s_nodes, n_cone, k, out, rows_mask,
                    gl_nodes, gl_weights):
    """Fill ``out[arm_index, i_y, j_phi, l_s]`` with conical transforms.

    One (arm, y, phi) triple per parallel iteration; each writes its own s-line.
    """
    n_arm = arms.shape[0]
    ny = y_nodes.shape[0]
    nphi = phi_nodes.shape[0]
    ns = s_nodes.shape[0]
    dphi = 2.0 * math.pi / n_cone
    total = n_arm * ny * nphi
    for flat in numba.prange(total):
        ia = flat // (ny * nphi)
        rem = flat - ia * ny * nphi
        iy = rem // nphi
        jp = rem - iy * nphi
        if not rows_mask[ia, iy]:
            continue
        arm = arms[ia]
        y = y_nodes[iy]
        ux = y if arm == 1 else 0.0
        uy = y if arm == 2 else 0.0
        uz = y if arm == 3 else 0.0
        cp = math.cos(phi_nodes[jp])
        sp = math.sin(phi_nodes[jp])
        if arm == 2:
            bx, by, bz = 0.0, cp, sp
        else:
            bx, by, bz = cp, 0.0, sp
        e1x, e1y, e1z, e2x, e2y, e2z = frame(bx, by, bz)
        for ls in range(ns):
            s = s_nodes[ls]
            if s < -1.0 or s > 1.0:
                out[ia, iy, jp, ls] = 0.0
                continue
            if _cap_rejects(comps, ux, uy, uz, bx, by, bz, s):
                out[ia, iy, jp, ls] = 0.0
                continue
            rho = math.sqrt(max(0.0, 1.0 - s * s))
            acc = 0.0
            for q in range(n_cone):
                ang = q * dphi
                c = math.cos(ang)
                d = math.sin(ang)
                wx = s * bx + rho * (c * e1x + d * e2x)
                wy = s * by + rho * (c * e1y + d * e2y)
                wz = s * bz + rho * (c * e1z + d * e2z)
                acc += ray_all(comps, ux, uy, uz, wx, wy, wz, k, gl_nodes, gl_weights)
            out[ia, iy, jp, ls] = acc * dphi


@numba.njit(cache=True)
def ray_batch(comps, u, w, k, gl_nodes, gl_weights):
    """Closed-form weighted ray transforms for rows of ``u`` and ``w`` (any norm)."""
    n = u.shape[0]
    out = np.empty(n)
    for i in range(n):
        wx, wy, wz = w[i, 0], w[i, 1], w[i, 2]
        nrm = math.sqrt(wx * wx + wy * wy + wz * wz)
        val = ray_all(comps, u[i, 0], u[i, 1], u[i, 2], wx / nrm, wy / nrm, wz / nrm, k,
                      gl_nodes, gl_weights)
        out[i] = val / nrm ** (k + 1)
    return out
