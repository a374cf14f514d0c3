"""Forward transforms: the cone-data simulator and brute-force oracles.

``ray_transform`` and ``plane_transform`` use plain tensor quadrature over
the unit support box and serve as references for every inversion stage.
``simulate_cone_data`` fills whole measurement grids with a compiled kernel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, asdict
from functools import lru_cache

import numpy as np

from . import _forward_kernels as fk
from .errors import ZeroDirection
from .geometry import Arm, Vertex, axis_direction, great_circle_frame, vertex_point
from .phantom import PhantomSpec, eval_phantom, support_radius
from .sigproc import ConeDataGrid, PhiGrid, SGrid, YGrid

__all__ = [
    "QuadratureConfig",
    "ray_transform",
    "cone_transform",
    "plane_transform",
    "simulate_cone_data",
    "ray_transform_exact",
]


@dataclass(frozen=True)
class QuadratureConfig:
    """Node counts and truncation bounds for every integral in the pipeline.

    ``n_disc`` and ``plane_oversample`` size the lookup tables used by the
    volume backprojection; the other fields follow the pointwise formulas.
    """

    n_ray: int = 256
    n_phi_cone: int = 128
    n_plane: int = 256
    omega_cap: float = 8.0
    n_omega: int = 128
    n_phi_beta: int = 128
    sphere_grid: tuple[int, int] = (48, 96)
    n_theta_gc: int = 96
    n_disc: int = 161
    plane_oversample: float = 2.0

    def __post_init__(self):
        object.__setattr__(self, "sphere_grid", tuple(int(v) for v in self.sphere_grid))
        counts = [self.n_ray, self.n_phi_cone, self.n_plane, self.n_omega, self.n_phi_beta,
                  self.n_theta_gc, self.n_disc, *self.sphere_grid]
        if min(counts) < 2:
            raise ValueError("all quadrature node counts must be >= 2")
        if not self.omega_cap > 1.0:
            raise ValueError("omega_cap must exceed 1")
        if not self.plane_oversample > 0.0:
            raise ValueError("plane_oversample must be positive")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["sphere_grid"] = list(self.sphere_grid)
        return d


@lru_cache(maxsize=16)
def _leggauss(n: int):
    return np.polynomial.legendre.leggauss(n)


@lru_cache(maxsize=1)
def _gl_table():
    return fk.gl_table()


def _box_clip_batch(u: np.ndarray, w: np.ndarray):
    """Vectorised slab clip of rays ``u + r w`` (r >= 0) against the unit cube."""
    with np.errstate(divide="ignore", invalid="ignore"):
        t0 = (0.0 - u) / w
        t1 = (1.0 - u) / w
    lo = np.minimum(t0, t1)
    hi = np.maximum(t0, t1)
    flat = w == 0.0
    inside = (u >= 0.0) & (u <= 1.0)
    lo = np.where(flat, np.where(inside, -np.inf, np.inf), lo)
    hi = np.where(flat, np.where(inside, np.inf, -np.inf), hi)
    r_in = np.maximum(lo.max(axis=-1), 0.0)
    r_out = hi.min(axis=-1)
    return r_in, r_out


def ray_transform(f: PhantomSpec, u, w, k: int, q: QuadratureConfig = QuadratureConfig()):
    """``int_0^inf f(u + r w) r^k dr`` by Gauss-Legendre over the unit-cube chord.

    ``u`` and ``w`` broadcast over leading axes.
    """
    u = np.asarray(u, dtype=float)
    w = np.asarray(w, dtype=float)
    u, w = np.broadcast_arrays(u, w)
    if np.any(np.linalg.norm(w, axis=-1) < 1e-14):
        raise ZeroDirection("ray direction must be non-zero")
    r_in, r_out = _box_clip_batch(u, w)
    r_out = np.maximum(r_out, r_in)
    # Break the chord where it crosses a component boundary so that each
    # panel sees a smooth integrand.
    cuts = [r_in, r_out]
    ww = np.sum(w * w, axis=-1)
    for comp in f.components:
        d = u - np.asarray(comp.center)
        b = np.sum(d * w, axis=-1) / ww
        rad = support_radius(comp)
        disc = b * b - (np.sum(d * d, axis=-1) - rad * rad) / ww
        h = np.sqrt(np.clip(disc, 0.0, None))
        for c in (-b - h, -b + h):
            cuts.append(np.clip(c, r_in, r_out))
    cuts = np.sort(np.stack(cuts, axis=-1), axis=-1)
    lo, hi = cuts[..., :-1], cuts[..., 1:]
    x, wt = _leggauss(q.n_ray)
    half = 0.5 * (hi - lo)
    r = (0.5 * (hi + lo))[..., None] + half[..., None] * x
    pts = u[..., None, None, :] + r[..., None] * w[..., None, None, :]
    vals = eval_phantom(f, pts) * r ** k
    out = np.sum(half * (vals @ wt), axis=-1)
    return out if out.ndim else float(out)


def cone_transform(f: PhantomSpec, v: Vertex, phi_beta: float, s: float, k: int,
                   q: QuadratureConfig = QuadratureConfig(), phi_offset: float = 0.0) -> float:
    """Integral of ``f`` over one cone, with the delta collapsed to its circle.

    The circle parameter runs over ``phi_offset + 2 pi j / n_phi_cone``.
    """
    if abs(s) > 1.0:
        return 0.0
    beta = axis_direction(v.arm, phi_beta)
    e1, e2 = great_circle_frame(beta)
    ang = phi_offset + 2.0 * math.pi * np.arange(q.n_phi_cone) / q.n_phi_cone
    rho = math.sqrt(max(0.0, 1.0 - s * s))
    alphas = s * beta + rho * (np.cos(ang)[:, None] * e1 + np.sin(ang)[:, None] * e2)
    vals = ray_transform(f, vertex_point(v), alphas, k, q)
    return float(np.sum(vals) * (2.0 * math.pi / q.n_phi_cone))


_CUBE_CORNERS = np.array([[i, j, l] for i in (0, 1) for j in (0, 1) for l in (0, 1)], dtype=float)


def plane_transform(f: PhantomSpec, n, s: float, q: QuadratureConfig = QuadratureConfig()) -> float:
    """``int_{x.n = s} f`` by tensor Gauss-Legendre on a patch covering the unit cube."""
    n = np.asarray(n, dtype=float)
    proj = _CUBE_CORNERS @ n
    if s < proj.min() or s > proj.max():
        return 0.0
    e1, e2 = great_circle_frame(n)
    a = _CUBE_CORNERS @ e1
    b = _CUBE_CORNERS @ e2
    x, wt = _leggauss(q.n_plane)
    ha, ca = 0.5 * (a.max() - a.min()), 0.5 * (a.max() + a.min())
    hb, cb = 0.5 * (b.max() - b.min()), 0.5 * (b.max() + b.min())
    aa = ca + ha * x
    bb = cb + hb * x
    pts = s * n + aa[:, None, None] * e1 + bb[None, :, None] * e2
    vals = eval_phantom(f, pts)
    return float(ha * hb * (wt @ vals @ wt))


def simulate_cone_data(f: PhantomSpec, grids=(YGrid(), PhiGrid(), SGrid()), k: int = 1,
                       q: QuadratureConfig = QuadratureConfig(), arms=(1, 2, 3),
                       y_rows=None) -> ConeDataGrid:
    """Sample the conical transform of ``f`` on the full measurement grid.

    Ray integrals along each cone use closed forms per phantom component; the
    circle integral is the periodic trapezoid rule with ``n_phi_cone`` nodes.
    ``arms`` and ``y_rows`` restrict which lines are filled (others stay zero),
    which keeps oracle checks at a few vertices cheap.
    """
    ygrid, phigrid, sgrid = grids
    data = np.zeros((3, ygrid.n_y, phigrid.n_phi, sgrid.n_s))
    mask = np.zeros((3, ygrid.n_y), dtype=np.bool_)
    for a in arms:
        if y_rows is None:
            mask[int(Arm(a)) - 1, :] = True
        else:
            mask[int(Arm(a)) - 1, np.asarray(y_rows, dtype=int)] = True
    comps = f.as_array()
    if comps.shape[0]:
        nodes, weights = _gl_table()
        fk.simulate_kernel(comps, np.array([1, 2, 3], dtype=np.int64), ygrid.nodes,
                           phigrid.nodes, sgrid.nodes, q.n_phi_cone, int(k), data, mask,
                           nodes, weights)
    prov = {"phantom": f.digest(), "phantom_json": f.to_json(), "quadrature": q.to_dict(),
            "simulator": "closed-form rays, trapezoid circle"}
    return ConeDataGrid(data, ygrid, phigrid, sgrid, int(k), prov)


def ray_transform_exact(f: PhantomSpec, u, w, k: int):
    """Closed-form weighted ray transform for rows of ``u`` and ``w``."""
    u = np.atleast_2d(np.asarray(u, dtype=float))
    w = np.atleast_2d(np.asarray(w, dtype=float))
    u, w = np.broadcast_arrays(u, w)
    nodes, weights = _gl_table()
    return fk.ray_batch(f.as_array(), np.ascontiguousarray(u), np.ascontiguousarray(w), int(k),
                        nodes, weights)
