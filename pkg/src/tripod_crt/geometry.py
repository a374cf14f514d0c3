"""Tripod detector geometry.

The vertex set is the union of three unit segments along the coordinate
axes, all starting at the origin.  Each arm carries a one-parameter family
of cone axes lying in a fixed coordinate plane.  This module holds the
arm-specific coordinate bookkeeping used by the forward and inverse
transforms.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import NoIntersection

__all__ = [
    "Arm",
    "Vertex",
    "ReducedDirection",
    "AXIS_SLOTS",
    "MISSING_SLOT",
    "NORMAL_EPS",
    "wrap_angle",
    "vertex_point",
    "axis_direction",
    "reduce_direction",
    "reassemble_direction",
    "in_support_region",
    "lambda_point",
    "great_circle_frame",
    "cone_circle_direction",
    "ray_box_clip",
    "UNIT_BOX",
]

NORMAL_EPS = 1e-9
UNIT_BOX = ((0.0, 0.0, 0.0), (1.0, 1.0, 1.0))


class Arm(enum.IntEnum):
    ONE = 1
    TWO = 2
    THREE = 3


# Zero-based coordinate slots spanned by the axis family of each arm, and the
# one slot left out.  Arm 3 deliberately reuses the layout of arm 1: its
# vertices have zero second coordinate, so the projection along x2 is the one
# that keeps every ray toward the support in a single half-space.
AXIS_SLOTS = {Arm.ONE: (0, 2), Arm.TWO: (1, 2), Arm.THREE: (0, 2)}
MISSING_SLOT = {Arm.ONE: 1, Arm.TWO: 0, Arm.THREE: 1}


@dataclass(frozen=True)
class Vertex:
    arm: Arm
    y: float

    def __post_init__(self):
        object.__setattr__(self, "arm", Arm(self.arm))
        if not 0.0 <= self.y <= 1.0:
            raise ValueError(f"vertex parameter must lie in [0, 1], got {self.y}")


@dataclass(frozen=True)
class ReducedDirection:
    wbar: tuple[float, float]
    wmiss: float


def wrap_angle(phi: float) -> float:
    return phi % (2.0 * math.pi)


def vertex_point(v: Vertex) -> np.ndarray:
    p = np.zeros(3)
    p[int(v.arm) - 1] = v.y
    return p


def axis_direction(arm: Arm | int, phi: float) -> np.ndarray:
    """Unit cone axis for ``arm`` at axis angle ``phi``."""
    phi = wrap_angle(phi)
    out = np.zeros(3)
    i, j = AXIS_SLOTS[Arm(arm)]
    out[i] = math.cos(phi)
    out[j] = math.sin(phi)
    return out


def reduce_direction(arm: Arm | int, w) -> ReducedDirection:
    w = np.asarray(w, dtype=float)
    i, j = AXIS_SLOTS[Arm(arm)]
    return ReducedDirection((float(w[i]), float(w[j])), float(w[MISSING_SLOT[Arm(arm)]]))


def reassemble_direction(arm: Arm | int, red: ReducedDirection) -> np.ndarray:
    out = np.empty(3)
    i, j = AXIS_SLOTS[Arm(arm)]
    out[i], out[j] = red.wbar
    out[MISSING_SLOT[Arm(arm)]] = red.wmiss
    return out


def in_support_region(x) -> bool:
    """True iff ``x`` lies in the convex hull of the tripod."""
    x = np.asarray(x, dtype=float)
    return bool(np.all(x >= 0.0) and np.all(x <= 1.0) and x.sum() <= 1.0)


def lambda_point(x, n, eps: float = NORMAL_EPS) -> Vertex:
    """Pick the tripod vertex lying in the plane through ``x`` with normal ``n``.

    Among arms whose segment is cut by the plane, the one with the largest
    ``|n_i|`` wins (ties go to the lower arm index), which keeps the division
    ``y = x.n / n_i`` well conditioned.
    """
    x = np.asarray(x, dtype=float)
    n = np.asarray(n, dtype=float)
    xn = float(x @ n)
    best = None
    for arm in Arm:
        ni = n[int(arm) - 1]
        if abs(ni) <= eps:
            continue
        y = xn / ni
        if -1e-12 <= y <= 1.0 + 1e-12 and (best is None or abs(ni) > best[0]):
            best = (abs(ni), arm, min(max(y, 0.0), 1.0))
    if best is None:
        raise NoIntersection(f"plane through {x.tolist()} with normal {n.tolist()} misses the tripod")
    return Vertex(best[1], best[2])


def great_circle_frame(n) -> tuple[np.ndarray, np.ndarray]:
    """Orthonormal pair spanning the plane perpendicular to unit ``n``.

    ``e1`` comes from the coordinate axis least aligned with ``n``;
    ``(e1, e2, n)`` is right-handed.
    """
    n = np.asarray(n, dtype=float)
    a = np.zeros(3)
    a[int(np.argmin(np.abs(n)))] = 1.0
    e1 = a - (a @ n) * n
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(n, e1)
    return e1, e2


def cone_circle_direction(beta_u, s: float, phi: float) -> np.ndarray:
    """Point at angle ``phi`` on the circle ``{alpha : alpha . beta_u = s}``."""
    beta_u = np.asarray(beta_u, dtype=float)
    phi = wrap_angle(phi)
    e1, e2 = great_circle_frame(beta_u)
    rho = math.sqrt(max(0.0, 1.0 - s * s))
    return s * beta_u + rho * (math.cos(phi) * e1 + math.sin(phi) * e2)


def ray_box_clip(origin, direction, box=UNIT_BOX):
    """Slab clip of ``origin + r * direction``, ``r >= 0``, against a box.

    Returns ``(r_in, r_out)`` or ``None`` when the ray misses the box.
    """
    lo, hi = box
    origin = np.asarray(origin, dtype=float)
    direction = np.asarray(direction, dtype=float)
    with np.errstate(over="ignore"):
        return _slab_clip(origin, direction, lo, hi)


def _slab_clip(origin, direction, lo, hi):
    # Tiny nonzero components overflow to +-inf, which the min/max logic handles.
    r_in, r_out = 0.0, math.inf
    for o, d, a, b in zip(origin, direction, lo, hi):
        if d == 0.0:
            if o < a or o > b:
                return None
            continue
        t0 = (a - o) / d
        t1 = (b - o) / d
        if t0 > t1:
            t0, t1 = t1, t0
        r_in = max(r_in, t0)
        r_out = min(r_out, t1)
        if r_in > r_out:
            return None
    return float(r_in), float(r_out)
