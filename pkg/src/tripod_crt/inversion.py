"""Staged inversion: processed cone data to the source distribution.

The chain is

    processed data  ->  P_k (weighted ray transform, via a beta-circle integral)
                    ->  P_1 (repeated integration in the arm's own slot)
                    ->  plane integrals Rf through the tripod point Lambda(x, n)
                    ->  f = -(1/8 pi^2) Laplacian of the sphere backprojection.

``pk_eval``, ``p1_eval`` and ``rf_eval`` evaluate single values exactly as the
formulas read and are what the stage tests compare against the forward
oracles.  ``backproject`` computes the same quantity for a whole volume
through lookup tables: the beta-circle sum on a grid over the reduced
direction disc, the repeated integral on the same grid, and Rf on a fine
grid of plane offsets per sphere node.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable

import numpy as np

from . import _inversion_kernels as ik
from ._interp import cr_taps
from .errors import InsufficientDerivOrder, ZeroDirection
from .forward import QuadratureConfig
from .geometry import NORMAL_EPS, Vertex, great_circle_frame, lambda_point
from .sigproc import ConeDataGrid, ProcessedGrid, diff_y, process_cone_data

__all__ = [
    "SphereGrid",
    "VolumeSpec",
    "VolumeGrid",
    "pk_eval",
    "p1_eval",
    "rf_eval",
    "backproject",
    "laplacian",
    "reconstruct",
    "radon_invert",
    "inversion_constant",
    "constant_factorization_holds",
    "RADON_SCALE",
    "StageTables",
    "build_tables",
]

# Sign included: the backprojection of a positive bump peaks at the bump, so
# its Laplacian is negative there.
RADON_SCALE = -1.0 / (8.0 * math.pi ** 2)


# ---------------------------------------------------------------------------
# Domain types


@dataclass(frozen=True)
class SphereGrid:
    """Gauss-Legendre in ``cos(theta)`` times a uniform azimuth grid on S^2."""

    n_polar: int = 48
    n_azimuth: int = 96

    def __post_init__(self):
        if self.n_polar < 2 or self.n_azimuth < 2:
            raise ValueError("sphere grid needs at least 2 nodes per direction")

    @classmethod
    def from_config(cls, q: QuadratureConfig) -> "SphereGrid":
        return cls(*q.sphere_grid)

    def nodes(self) -> tuple[np.ndarray, np.ndarray]:
        """Unit normals ``(N, 3)`` and weights ``(N,)`` summing to ``4 pi``."""
        return _sphere_nodes(self.n_polar, self.n_azimuth)


@lru_cache(maxsize=8)
def _sphere_nodes(n_polar: int, n_azimuth: int):
    ct, wt = np.polynomial.legendre.leggauss(n_polar)
    st = np.sqrt(1.0 - ct * ct)
    az = 2.0 * math.pi * np.arange(n_azimuth) / n_azimuth
    pts = np.stack([st[:, None] * np.cos(az)[None, :],
                    st[:, None] * np.sin(az)[None, :],
                    np.broadcast_to(ct[:, None], (n_polar, n_azimuth))], axis=-1).reshape(-1, 3)
    w = np.repeat(wt * (2.0 * math.pi / n_azimuth), n_azimuth)
    pts.setflags(write=False)
    w.setflags(write=False)
    return pts, w


@dataclass(frozen=True)
class VolumeSpec:
    """Regular voxel grid; ``origin`` is the centre of voxel ``(0, 0, 0)``."""

    origin: tuple[float, float, float]
    spacing: float
    dims: tuple[int, int, int]

    def __post_init__(self):
        object.__setattr__(self, "origin", tuple(float(v) for v in self.origin))
        object.__setattr__(self, "dims", tuple(int(v) for v in self.dims))
        if len(self.origin) != 3 or len(self.dims) != 3:
            raise ValueError("origin and dims need three entries")
        if not self.spacing > 0.0:
            raise ValueError("spacing must be positive")
        if min(self.dims) < 1:
            raise ValueError("dims must be positive")

    @classmethod
    def centered(cls, center, spacing: float, dims) -> "VolumeSpec":
        dims = tuple(int(d) for d in dims)
        origin = tuple(c - 0.5 * (d - 1) * spacing for c, d in zip(center, dims))
        return cls(origin, spacing, dims)

    def axes(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return tuple(o + self.spacing * np.arange(n) for o, n in zip(self.origin, self.dims))

    def centers(self) -> np.ndarray:
        """Voxel centres, shape ``dims + (3,)``."""
        return np.stack(np.meshgrid(*self.axes(), indexing="ij"), axis=-1)

    def hull_mask(self) -> np.ndarray:
        """Voxels whose centres lie in the tripod hull."""
        x = self.centers()
        return np.all(x >= 0.0, axis=-1) & np.all(x <= 1.0, axis=-1) & (x.sum(axis=-1) <= 1.0)

    def check_in_hull(self):
        """Raise unless every centre lies in the hull shrunk by one spacing."""
        h = self.spacing
        lo = np.array(self.origin)
        hi = lo + h * (np.array(self.dims) - 1)
        if np.any(lo < h) or np.any(hi > 1.0 - h) or hi.sum() > 1.0 - math.sqrt(3.0) * h:
            raise ValueError(
                f"volume {self} leaves the tripod hull shrunk by one spacing")

    def to_dict(self) -> dict:
        return {"origin": list(self.origin), "spacing": self.spacing, "dims": list(self.dims)}


@dataclass
class VolumeGrid:
    spec: VolumeSpec
    values: np.ndarray
    valid: np.ndarray | None = None
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.spec.dims:
            raise ValueError(f"values shape {self.values.shape} does not match {self.spec.dims}")
        if self.valid is None:
            self.valid = np.ones(self.spec.dims, dtype=bool)

    def with_values(self, values, valid=None) -> "VolumeGrid":
        return VolumeGrid(self.spec, values, self.valid if valid is None else valid,
                          dict(self.provenance))


# ---------------------------------------------------------------------------
# Constants


def cauchy_factor(k: int) -> float:
    """``1/(k-2)!``: prefactor of the ``(k-1)``-fold repeated integral."""
    return 1.0 / math.factorial(k - 2) if k >= 2 else 1.0


def inversion_constant(k: int) -> float:
    """``c_k = 1 / (2^2 (2 pi)^3 (k-1)!)``."""
    return 1.0 / (4.0 * (2.0 * math.pi) ** 3 * math.factorial(k - 1))


def constant_factorization_holds(k_max: int = 5) -> bool:
    """Exact check of ``(1/8pi^2)(1/4pi)(1/(k-1)!) == 1/(2^2 (2pi)^3 (k-1)!)``.

    Both sides are a rational times ``pi^-3``; the rationals are compared exactly.
    """
    for k in range(1, k_max + 1):
        lhs = Fraction(1, 8) * Fraction(1, 4) * Fraction(1, math.factorial(k - 1))
        rhs = Fraction(1, 4 * 2 ** 3 * math.factorial(k - 1))
        if lhs != rhs:
            return False
    return True


if not constant_factorization_holds():  # pragma: no cover
    raise AssertionError("constant factorization identity failed")


# ---------------------------------------------------------------------------
# Pointwise stage evaluators


def _arm_view(g: ProcessedGrid, v: Vertex):
    a = int(v.arm) - 1
    parts = tuple(np.ascontiguousarray(p[a]) for p in _split(g))
    return parts, v.y / g.ygrid.h


def _split(g) -> tuple:
    if isinstance(g, ProcessedGrid):
        return g.split_parts()
    return ProcessedGrid(g.data, g.ygrid, g.phigrid, g.sgrid, g.k).split_parts()


def pk_eval(g: ProcessedGrid, v: Vertex, w, q: QuadratureConfig = QuadratureConfig(),
            half_space: bool = True) -> float:
    """Weighted ray transform ``P_k f(u, w)`` (or its ``m``-th arm derivative) from processed data.

    ``half_space`` returns zero when the missing component ``w_u`` is not
    positive.  The circle formula is odd in ``w_u`` while the ray transform
    vanishes there, since the support lies on the positive side of the
    coordinate plane holding the arm's axes.
    """
    w = np.asarray(w, dtype=float)
    if np.linalg.norm(w) < 1e-14:
        raise ZeroDirection("direction must be non-zero")
    parts, ty = _arm_view(g, v)
    return float(ik.pk_direct(*parts, ty, g.phigrid.h, g.sgrid.s_min, g.sgrid.h, int(v.arm),
                              w[0], w[1], w[2], g.k, q.n_phi_beta, half_space))


@lru_cache(maxsize=16)
def _leggauss(n: int):
    return np.polynomial.legendre.leggauss(n)


def _check_order(g: ProcessedGrid, k: int):
    m = getattr(g, "deriv_order", 0)
    if m != k - 1:
        raise InsufficientDerivOrder(f"need {k - 1} y-derivatives for k={k}, grid has {m}")
    if g.k != k:
        raise InsufficientDerivOrder(f"grid holds k={g.k} data, requested k={k}")


def p1_eval(g_dy: ProcessedGrid, v: Vertex, alpha, k: int,
            q: QuadratureConfig = QuadratureConfig()) -> float:
    """``P_1 f(u, alpha)`` from data carrying ``k - 1`` arm derivatives."""
    _check_order(g_dy, k)
    alpha = np.asarray(alpha, dtype=float)
    if k == 1:
        return pk_eval(g_dy, v, alpha, q)
    parts, ty = _arm_view(g_dy, v)
    x, wt = _leggauss(q.n_omega)
    return float(ik.p1_direct(*parts, ty, v.y, g_dy.phigrid.h, g_dy.sgrid.s_min, g_dy.sgrid.h,
                              int(v.arm), alpha[0], alpha[1], alpha[2], k, q.n_phi_beta, x, wt,
                              q.omega_cap, cauchy_factor(k)))


def rf_eval(g_dy: ProcessedGrid, x, n, k: int, q: QuadratureConfig = QuadratureConfig(),
            theta_offset: float = 0.0) -> float:
    """Plane integral over ``{y : y.n = x.n}`` by polar coordinates about ``Lambda(x, n)``."""
    _check_order(g_dy, k)
    v = lambda_point(x, n)
    e1, e2 = great_circle_frame(n)
    th = theta_offset + 2.0 * math.pi * np.arange(q.n_theta_gc) / q.n_theta_gc
    acc = 0.0
    for t in th:
        acc += p1_eval(g_dy, v, math.cos(t) * e1 + math.sin(t) * e2, k, q)
    return acc * 2.0 * math.pi / q.n_theta_gc


# ---------------------------------------------------------------------------
# Table path


@dataclass
class StageTables:
    """Lookup tables over (arm, y node, reduced direction) for one processed grid.

    ``t`` satisfies ``P_1 f(u, alpha) = alpha_u * t`` for unit ``alpha``, or
    ``P_1 f(u, alpha) = t`` when ``scaled``.
    """

    a_nodes: np.ndarray
    q: np.ndarray
    t: np.ndarray
    hy: float
    scaled: bool = False

    @property
    def a0(self) -> float:
        return float(self.a_nodes[0])

    @property
    def da(self) -> float:
        return float(self.a_nodes[1] - self.a_nodes[0])

    def p1(self, v: Vertex, alpha) -> float:
        """Table lookup of ``P_1 f(u, alpha)`` for unit ``alpha``."""
        a = np.asarray(alpha, dtype=float)
        arm = int(v.arm)
        au = a[ik.MISS[arm]]
        if au <= 0.0:
            return 0.0
        iy, *wy = cr_taps(v.y / self.hy, self.t.shape[1])
        val = 0.0
        for j, wj in enumerate(wy):
            if wj == 0.0:
                continue
            row = min(max(iy - 1 + j, 0), self.t.shape[1] - 1)
            val += wj * ik._bicubic(self.t[arm - 1, row], (a[ik.S0[arm]] - self.a0) / self.da,
                                    (a[ik.S1[arm]] - self.a0) / self.da)
        return float(val if self.scaled else au * val)


_DISC_MARGIN = 3


def build_tables(g_dy: ProcessedGrid, k: int, q: QuadratureConfig = QuadratureConfig()) -> StageTables:
    _check_order(g_dy, k)
    a_nodes = np.linspace(-1.0, 1.0, q.n_disc)
    margin = _DISC_MARGIN * (a_nodes[1] - a_nodes[0])
    parts = tuple(np.ascontiguousarray(p) for p in _split(g_dy))
    qtab = ik.disc_table(*parts, g_dy.phigrid.h, g_dy.sgrid.s_min, g_dy.sgrid.h, a_nodes,
                         q.n_phi_beta, margin)
    if k == 1:
        ttab = qtab
    else:
        x, wt = _leggauss(q.n_omega)
        ttab = ik.p1_table(qtab, g_dy.ygrid.nodes, a_nodes, k, x, wt, q.omega_cap,
                           cauchy_factor(k), margin)
    return StageTables(a_nodes, qtab, ttab, g_dy.ygrid.h, scaled=k > 1)


def _frames(normals: np.ndarray):
    e1 = np.empty_like(normals)
    e2 = np.empty_like(normals)
    for i, n in enumerate(normals):
        e1[i], e2[i] = great_circle_frame(n)
    return e1, e2


def _offset_grid(vs: VolumeSpec, normals: np.ndarray, ds: float, pad: int = 3):
    """Per-node start offsets and a common count covering every voxel's ``x.n``."""
    lo = np.array(vs.origin)
    hi = lo + vs.spacing * (np.array(vs.dims) - 1)
    corners = np.array([[a, b, c] for a in (lo[0], hi[0]) for b in (lo[1], hi[1])
                        for c in (lo[2], hi[2])])
    proj = normals @ corners.T
    s_lo = proj.min(axis=1) - pad * ds
    n_off = int(math.ceil((proj.max(axis=1) - proj.min(axis=1)).max() / ds)) + 2 * pad + 1
    return np.ascontiguousarray(s_lo), n_off


def plane_table(tables: StageTables, vs: VolumeSpec, sphere: SphereGrid,
                q: QuadratureConfig = QuadratureConfig()):
    """Rf on ``n_off`` offsets per sphere node; returns ``(s_start, ds, table)``."""
    normals, _ = sphere.nodes()
    normals = np.ascontiguousarray(normals)
    e1, e2 = _frames(normals)
    ds = vs.spacing / q.plane_oversample
    s_start, n_off = _offset_grid(vs, normals, ds)
    tab = ik.plane_table(tables.t, tables.scaled, tables.hy, tables.a0, tables.da, normals, e1, e2,
                         s_start, ds, n_off, q.n_theta_gc, NORMAL_EPS)
    return s_start, ds, tab


def _backproject_table(s_start, ds, table, vs: VolumeSpec, sphere: SphereGrid) -> np.ndarray:
    normals, weights = sphere.nodes()
    pts = np.ascontiguousarray(vs.centers().reshape(-1, 3))
    out = np.empty(pts.shape[0])
    ik.backproject_table(np.ascontiguousarray(table), s_start, ds, np.ascontiguousarray(normals),
                         np.ascontiguousarray(weights), pts, out)
    return out.reshape(vs.dims)


def backproject(g_dy: ProcessedGrid, vs: VolumeSpec, sphere: SphereGrid, k: int,
                q: QuadratureConfig = QuadratureConfig(), tables: StageTables | None = None) -> VolumeGrid:
    """``B(x) = sum_n weight(n) Rf(n, x.n)`` on every voxel centre."""
    vs.check_in_hull()
    if tables is None:
        tables = build_tables(g_dy, k, q)
    s_start, ds, tab = plane_table(tables, vs, sphere, q)
    return VolumeGrid(vs, _backproject_table(s_start, ds, tab, vs, sphere))


def laplacian(b: VolumeGrid) -> VolumeGrid:
    """Seven-point Laplacian; the outermost voxel layer is zeroed and marked invalid."""
    v = b.values
    if min(v.shape) < 5:
        raise ValueError("laplacian needs at least 5 voxels per axis")
    out = np.zeros_like(v)
    c = v[1:-1, 1:-1, 1:-1]
    out[1:-1, 1:-1, 1:-1] = (v[2:, 1:-1, 1:-1] + v[:-2, 1:-1, 1:-1] + v[1:-1, 2:, 1:-1]
                             + v[1:-1, :-2, 1:-1] + v[1:-1, 1:-1, 2:] + v[1:-1, 1:-1, :-2]
                             - 6.0 * c) / b.spec.spacing ** 2
    valid = np.zeros(v.shape, dtype=bool)
    valid[1:-1, 1:-1, 1:-1] = True
    return b.with_values(out, valid & b.valid)


def reconstruct(c: ConeDataGrid, k: int, vs: VolumeSpec, sphere: SphereGrid | None = None,
                q: QuadratureConfig = QuadratureConfig(), stages: dict | None = None) -> VolumeGrid:
    """Full pipeline from raw cone data to the source on ``vs``.

    If ``stages`` is a dict it receives the intermediates under the keys
    ``processed``, ``processed_dy``, ``tables`` and ``backprojection``.
    """
    if c.k != k:
        raise InsufficientDerivOrder(f"data were simulated with k={c.k}, requested k={k}")
    vs.check_in_hull()
    sphere = sphere or SphereGrid.from_config(q)
    g = process_cone_data(c)
    g_dy = diff_y(g, k - 1)
    tables = build_tables(g_dy, k, q)
    b = backproject(g_dy, vs, sphere, k, q, tables)
    f = laplacian(b)
    f = f.with_values(RADON_SCALE * f.values)
    f.provenance = dict(c.provenance, k=k, volume=vs.to_dict(), quadrature=q.to_dict(),
                        sphere=[sphere.n_polar, sphere.n_azimuth])
    if stages is not None:
        stages.update(processed=g, processed_dy=g_dy, tables=tables, backprojection=b)
    return f


def _eval_rf(rf: Callable, normals: np.ndarray, s: np.ndarray) -> np.ndarray:
    try:
        out = np.asarray(rf(normals[:, None, :], s), dtype=float)
        if out.shape == s.shape:
            return out
    except (TypeError, ValueError):
        pass
    return np.array([[float(rf(n, si)) for si in row] for n, row in zip(normals, s)])


def radon_invert(rf: Callable, vs: VolumeSpec, sphere: SphereGrid | None = None,
                 q: QuadratureConfig = QuadratureConfig()) -> VolumeGrid:
    """Classical 3D Radon inversion from a plane-integral source ``rf(n, s)``.

    ``rf`` is sampled on a fine offset grid per sphere node and interpolated
    at each voxel's ``x.n``; the volume need not lie in the tripod hull.
    """
    sphere = sphere or SphereGrid.from_config(q)
    normals, _ = sphere.nodes()
    ds = vs.spacing / q.plane_oversample
    s_start, n_off = _offset_grid(vs, normals, ds)
    s = s_start[:, None] + ds * np.arange(n_off)[None, :]
    tab = _eval_rf(rf, normals, s)
    b = VolumeGrid(vs, _backproject_table(s_start, ds, tab, vs, sphere))
    f = laplacian(b)
    return f.with_values(RADON_SCALE * f.values)
