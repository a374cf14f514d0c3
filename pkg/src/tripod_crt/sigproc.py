"""Measurement grids and the one-dimensional operators applied along them.

Cone data live on a 4D array indexed ``[arm - 1, i_y, j_phi, l_s]``.  The
filtering stage differentiates along ``s`` and applies the Hilbert transform
``H g(s) = (1/pi) p.v. int g(t) / (s - t) dt``; the y-axis operator provides
derivatives along each arm.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np

from .errors import InsufficientGrid, OutOfRange
from . import _interp

__all__ = [
    "SGrid",
    "YGrid",
    "PhiGrid",
    "ConeDataGrid",
    "ProcessedGrid",
    "diff_s",
    "diff_y",
    "hilbert_s",
    "hilbert_matrix",
    "process_cone_data",
    "split_to_nodes",
    "sample_processed",
]


@dataclass(frozen=True)
class SGrid:
    s_min: float = -1.25
    s_max: float = 1.25
    n_s: int = 257

    def __post_init__(self):
        if not (self.s_min < -1.0 and self.s_max > 1.0):
            raise ValueError("s-grid must pad [-1, 1] on both sides")
        if self.n_s < 16:
            raise ValueError("s-grid needs at least 16 nodes")

    @property
    def h(self) -> float:
        return (self.s_max - self.s_min) / (self.n_s - 1)

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(self.s_min, self.s_max, self.n_s)


@dataclass(frozen=True)
class YGrid:
    n_y: int = 129

    def __post_init__(self):
        if self.n_y < 3:
            raise ValueError("y-grid needs at least 3 nodes")

    @property
    def h(self) -> float:
        return 1.0 / (self.n_y - 1)

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.n_y)


@dataclass(frozen=True)
class PhiGrid:
    n_phi: int = 128

    def __post_init__(self):
        if self.n_phi % 2:
            raise ValueError("phi-grid size must be even")

    @property
    def h(self) -> float:
        return 2.0 * math.pi / self.n_phi

    @property
    def nodes(self) -> np.ndarray:
        return np.arange(self.n_phi) * self.h


@dataclass
class ConeDataGrid:
    """Samples of the conical transform on ``arm x y x phi x s``."""

    data: np.ndarray
    ygrid: YGrid
    phigrid: PhiGrid
    sgrid: SGrid
    k: int
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        expected = (3, self.ygrid.n_y, self.phigrid.n_phi, self.sgrid.n_s)
        if self.data.shape != expected:
            raise ValueError(f"data shape {self.data.shape} does not match grids {expected}")
        if self.k < 1:
            raise ValueError("weight order k must be >= 1")

    @property
    def stage(self) -> str:
        return "raw"

    def with_data(self, data: np.ndarray, **changes):
        return replace(self, data=data, **changes)


@dataclass
class ProcessedGrid(ConeDataGrid):
    """Filtered data ``H_s d/ds C_k f`` with ``deriv_order`` y-derivatives applied.

    ``data`` holds node values.  Grids produced by :func:`process_cone_data`
    also carry the split form used for off-grid sampling: a smooth
    ``regular`` part and ``slope`` on the s-nodes, plus ``edges[..., 0:2]``,
    the raw line values at ``s = -1, +1``.  The filtered line is

        regular(s) + (edges0 / (1 + s) + edges1 / (1 - s)
                      + slope(s) log|(1 + s) / (1 - s)|) / pi.
    """

    deriv_order: int = 0
    regular: np.ndarray | None = None
    slope: np.ndarray | None = None
    edges: np.ndarray | None = None

    def __post_init__(self):
        super().__post_init__()
        parts = (self.regular, self.slope, self.edges)
        if any(p is None for p in parts) and not all(p is None for p in parts):
            raise ValueError("regular, slope and edges must be given together")
        if self.regular is not None:
            if self.regular.shape != self.data.shape or self.slope.shape != self.data.shape:
                raise ValueError("split parts must match the data shape")
            if self.edges.shape != self.data.shape[:-1] + (2,):
                raise ValueError("edges must have shape data.shape[:-1] + (2,)")

    @property
    def stage(self) -> str:
        return "processed" if self.deriv_order == 0 else "processed_dy"

    @property
    def has_split(self) -> bool:
        return self.regular is not None

    def split_parts(self):
        """``(regular, slope, edges)``; plain grids map to ``(data, 0, 0)``."""
        if self.has_split:
            return self.regular, self.slope, self.edges
        return self.data, np.zeros_like(self.data), np.zeros(self.data.shape[:-1] + (2,))

    def with_data(self, data: np.ndarray, **changes):
        changes.setdefault("regular", None)
        changes.setdefault("slope", None)
        changes.setdefault("edges", None)
        return replace(self, data=data, **changes)


def _diff4(a: np.ndarray, h: float, axis: int) -> np.ndarray:
    """Fourth-order first derivative along ``axis`` with one-sided end stencils."""
    a = np.moveaxis(a, axis, -1)
    if a.shape[-1] < 5:
        raise InsufficientGrid("fourth-order differences need at least 5 nodes")
    out = np.empty_like(a)
    c = 1.0 / (12.0 * h)
    out[..., 2:-2] = (a[..., :-4] - 8.0 * a[..., 1:-3] + 8.0 * a[..., 3:-1] - a[..., 4:]) * c
    a0, a1, a2, a3, a4 = (a[..., i] for i in range(5))
    out[..., 0] = (-25.0 * a0 + 48.0 * a1 - 36.0 * a2 + 16.0 * a3 - 3.0 * a4) * c
    out[..., 1] = (-3.0 * a0 - 10.0 * a1 + 18.0 * a2 - 6.0 * a3 + a4) * c
    b0, b1, b2, b3, b4 = (a[..., -1 - i] for i in range(5))
    out[..., -1] = (25.0 * b0 - 48.0 * b1 + 36.0 * b2 - 16.0 * b3 + 3.0 * b4) * c
    out[..., -2] = (3.0 * b0 + 10.0 * b1 - 18.0 * b2 + 6.0 * b3 - b4) * c
    return np.moveaxis(out, -1, axis)


def _processed(g: ConeDataGrid, data: np.ndarray, deriv_order: int | None = None,
               split=None) -> ProcessedGrid:
    m = getattr(g, "deriv_order", 0) if deriv_order is None else deriv_order
    regular, slope, edges = split if split is not None else (None, None, None)
    return ProcessedGrid(data, g.ygrid, g.phigrid, g.sgrid, g.k, dict(g.provenance), m,
                         regular, slope, edges)


def diff_s(g: ConeDataGrid) -> ConeDataGrid:
    """Derivative along ``s``; returns the same grid type."""
    return g.with_data(_diff4(g.data, g.sgrid.h, axis=-1))


def diff_y(g: ProcessedGrid, m: int) -> ProcessedGrid:
    """Apply ``m`` successive y-derivatives along every arm."""
    if m < 0:
        raise ValueError("derivative order must be non-negative")
    if g.ygrid.n_y < m + 5:
        raise InsufficientGrid(f"n_y={g.ygrid.n_y} is too small for {m} y-derivatives")
    arrays = [g.data]
    if getattr(g, "has_split", False):
        arrays += [g.regular, g.slope, g.edges]
    out = []
    for a in arrays:
        for _ in range(m):
            a = _diff4(a, g.ygrid.h, axis=1)
        out.append(a)
    split = tuple(out[1:]) if len(out) == 4 else None
    return _processed(g, out[0], getattr(g, "deriv_order", 0) + m, split)


def _hilbert_kernel(m: np.ndarray) -> np.ndarray:
    """``p.v. int hat(tau) / (m - tau) dtau`` for the unit hat at integer offset ``m``."""
    out = np.zeros(m.shape)
    a = np.abs(m).astype(float)
    big = a >= 2
    ab = a[big]
    out[big] = ab * np.log1p(-1.0 / ab ** 2) + np.log1p(2.0 / (ab - 1.0))
    out[a == 1] = 2.0 * math.log(2.0)
    return np.sign(m) * out


def _half_hat_kernel(m: np.ndarray) -> np.ndarray:
    """Kernel of the right half hat ``(1 - tau)`` on ``[0, 1]`` at offset ``m >= 0``.

    The log-divergent self term at ``m = 0`` is replaced by its finite part.
    """
    out = np.ones(m.shape)
    big = m >= 2
    mb = m[big].astype(float)
    out[big] = 1.0 - (mb - 1.0) * np.log1p(1.0 / (mb - 1.0))
    return out


@lru_cache(maxsize=8)
def hilbert_matrix(n: int) -> np.ndarray:
    """Dense matrix applying the Hilbert transform to the piecewise-linear interpolant.

    Entry ``[i, j]`` is the transform of the j-th basis function at node ``i``;
    the matrix is independent of the spacing.  End nodes carry half hats, so
    the interpolant vanishes outside the sampled interval.
    """
    i = np.arange(n)[:, None]
    j = np.arange(n)[None, :]
    mat = _hilbert_kernel(i - j)
    mat[:, 0] = _half_hat_kernel(np.arange(n))
    mat[:, -1] = -_half_hat_kernel(np.arange(n)[::-1])
    mat /= math.pi
    mat.setflags(write=False)
    return mat


def hilbert_s(g):
    """Hilbert transform along ``s`` (last axis) of a grid or a plain array."""
    data = g.data if isinstance(g, ConeDataGrid) else np.asarray(g, dtype=float)
    n = data.shape[-1]
    out = (data.reshape(-1, n) @ hilbert_matrix(n).T).reshape(data.shape)
    if isinstance(g, ConeDataGrid):
        return g.with_data(out)
    return out


def _lagrange_row(nodes: np.ndarray, x: float) -> np.ndarray:
    """Weights of the Lagrange interpolant through ``nodes`` evaluated at ``x``."""
    out = np.ones(len(nodes))
    for i, xi in enumerate(nodes):
        for j, xj in enumerate(nodes):
            if i != j:
                out[i] *= (x - xj) / (xi - xj)
    return out


# Catmull-Rom basis polynomials in the local cell coordinate, ascending powers.
_CR_POLY = np.array([[0.0, -0.5, 1.0, -0.5],
                     [1.0, 0.0, -2.5, 1.5],
                     [0.0, 0.5, 2.0, -1.5],
                     [0.0, 0.0, -0.5, 0.5]])
_GL16 = np.polynomial.legendre.leggauss(16)


def _cell_cauchy(poly: np.ndarray, ta: float, tb: float, d: np.ndarray) -> np.ndarray:
    """``p.v. int_ta^tb P(tau) / (d - tau) dtau`` for every entry of ``d``.

    Near the cell the polynomial is split as ``P(d) - (d - tau) Q(tau)``; a
    logarithm of zero (``d`` at a cell end) is dropped, which is the finite
    part that cancels against the neighbouring cell for continuous data.
    """
    out = np.empty(d.shape)
    dist = np.maximum(ta - d, 0.0) + np.maximum(d - tb, 0.0)
    far = dist >= 2.0
    x, w = _GL16
    tau = 0.5 * (tb - ta) * x + 0.5 * (tb + ta)
    pv = np.polynomial.polynomial.polyval(tau, poly)
    if np.any(far):
        out[far] = (0.5 * (tb - ta)) * ((w * pv) / (d[far, None] - tau)).sum(axis=1)
    near = ~far
    if np.any(near):
        dn = d[near]
        pd = np.polynomial.polynomial.polyval(dn, poly)
        la = np.abs(dn - ta)
        lb = np.abs(dn - tb)
        logs = np.where(la > 0, np.log(np.where(la > 0, la, 1.0)), 0.0) \
            - np.where(lb > 0, np.log(np.where(lb > 0, lb, 1.0)), 0.0)
        q_int = np.zeros(dn.shape)
        for p_deg, a in enumerate(poly):
            for qd in range(p_deg):
                q_int += a * dn ** (p_deg - 1 - qd) * (tb ** (qd + 1) - ta ** (qd + 1)) / (qd + 1)
        out[near] = pd * logs - q_int
    return out


@dataclass(frozen=True)
class _EdgeFilter:
    """Linear maps from the samples inside ``[-1, 1]`` to the split filtered line."""

    j0: int
    j1: int
    regular: np.ndarray   # (n_s, n_in)
    slope: np.ndarray     # (n_s, n_in)
    e_minus: np.ndarray   # (n_in,)
    e_plus: np.ndarray    # (n_in,)


@lru_cache(maxsize=8)
def _edge_filter(sgrid: SGrid) -> _EdgeFilter:
    s = sgrid.nodes
    h = sgrid.h
    inside = np.nonzero(np.abs(s) < 1.0)[0]
    j0, j1 = int(inside[0]), int(inside[-1])
    n_in = j1 - j0 + 1
    if n_in < 8 or j0 < 2 or j1 > sgrid.n_s - 3:
        raise InsufficientGrid("s-grid needs 8 nodes inside [-1, 1] and 2 beyond each end")
    t_in = np.arange(n_in, dtype=float)
    # derivative samples inside, then two extrapolated ghosts on each side
    fd = _diff4(np.eye(n_in), h, axis=0)
    band = np.arange(j0 - 2, j1 + 3)
    ext = np.zeros((len(band), n_in))
    ext[2:-2] = np.eye(n_in)
    for g, off in ((0, -2.0), (1, -1.0)):
        ext[g, :4] = _lagrange_row(t_in[:4], off)
    for g, off in ((-1, n_in + 1.0), (-2, float(n_in))):
        ext[g, -4:] = _lagrange_row(t_in[-4:], off)
    slope_band = ext @ fd
    # Cauchy integrals of the Catmull-Rom interpolant over [-1, 1], per band basis function
    d_all = (s - s[0]) / h
    cauchy = np.zeros((sgrid.n_s, len(band)))
    for c in range(j0 - 1, j1 + 1):
        ta = max(0.0, (-1.0 - s[c]) / h)
        tb = min(1.0, (1.0 - s[c]) / h)
        d = d_all - c
        for tap in range(4):
            cauchy[:, c - 1 + tap - (j0 - 2)] += _cell_cauchy(_CR_POLY[tap], ta, tb, d)
    with np.errstate(divide="ignore"):
        logs = np.log(np.abs((1.0 + s) / (1.0 - s)))
    diag = np.zeros((sgrid.n_s, len(band)))
    diag[band, np.arange(len(band))] = logs[band]
    regular = ((cauchy - diag) @ slope_band) / math.pi
    slope = np.zeros((sgrid.n_s, n_in))
    slope[band] = slope_band
    e_minus = np.zeros(n_in)
    e_minus[:4] = _lagrange_row(s[j0:j0 + 4], -1.0)
    e_plus = np.zeros(n_in)
    e_plus[-4:] = _lagrange_row(s[j1 - 3:j1 + 1], 1.0)
    for a in (regular, slope, e_minus, e_plus):
        a.setflags(write=False)
    return _EdgeFilter(j0, j1, regular, slope, e_minus, e_plus)


def split_to_nodes(regular, slope, edges, sgrid: SGrid) -> np.ndarray:
    """Node values of a split filtered line (infinite poles at ``s = +-1`` become 0)."""
    s = sgrid.nodes
    with np.errstate(divide="ignore", invalid="ignore"):
        a = 1.0 + s
        b = 1.0 - s
        sing = (edges[..., :1] / a + edges[..., 1:] / b + slope * np.log(np.abs(a / b))) / math.pi
    sing = np.where(np.isfinite(sing), sing, 0.0)
    return regular + sing


def process_cone_data(c: ConeDataGrid) -> ProcessedGrid:
    """``H_s d/ds`` of each s-line, treating the cut at ``s = +-1`` exactly.

    Cone data are smooth on ``[-1, 1]`` and vanish outside, with a jump at
    both ends.  Differentiating across the jump and filtering the result
    smears two delta spikes over a few nodes; instead the line is
    differentiated inside ``[-1, 1]`` only, its derivative is interpolated
    there, and the endpoint deltas contribute exact pole terms.
    """
    ef = _edge_filter(c.sgrid)
    lines = c.data[..., ef.j0:ef.j1 + 1].reshape(-1, ef.j1 - ef.j0 + 1)
    shape = c.data.shape
    regular = (lines @ ef.regular.T).reshape(shape)
    slope = (lines @ ef.slope.T).reshape(shape)
    edges = np.stack([lines @ ef.e_minus, lines @ ef.e_plus], axis=-1).reshape(shape[:-1] + (2,))
    data = split_to_nodes(regular, slope, edges, c.sgrid)
    return _processed(c, data, 0, (regular, slope, edges))


def sample_processed(g: ConeDataGrid, arm: int, y: float, phi: float, s: float) -> float:
    """Cubic interpolation of a grid at an off-grid ``(y, phi, s)`` on one arm."""
    if y < -1e-9 or y > 1.0 + 1e-9:
        raise OutOfRange(f"y={y} outside [0, 1]")
    if s < g.sgrid.s_min or s > g.sgrid.s_max:
        return 0.0
    y = min(max(y, 0.0), 1.0)
    a = int(arm) - 1
    if getattr(g, "has_split", False):
        return _interp.sample_split3(g.regular[a], g.slope[a], g.edges[a], y / g.ygrid.h,
                                     phi / g.phigrid.h, s, g.sgrid.s_min, g.sgrid.h)
    return _interp.sample_grid3(g.data[a], y / g.ygrid.h, phi / g.phigrid.h,
                                (s - g.sgrid.s_min) / g.sgrid.h)
