"""Analytic source distributions with closed-form projections.

Two component kinds are supported:

* ``ball`` of radius ``rho`` and smoothness order ``m``: ``A`` times the
  indicator (``m = 0``) or ``A (1 - |x - c|^2 / rho^2)^m`` inside the ball.
* ``gaussian``: ``A exp(-|x - c|^2 / sigma^2)``, hard-truncated at
  ``4 sigma`` so that it has compact support.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field

import numpy as np

GAUSS_TRUNCATION = 4.0

BALL = "ball"
GAUSSIAN = "gaussian"

__all__ = [
    "PhantomComponent",
    "PhantomSpec",
    "GAUSS_TRUNCATION",
    "default_phantom",
    "eval_phantom",
    "validate_support",
    "analytic_ray_p1",
    "analytic_radon",
    "support_radius",
]


@dataclass(frozen=True)
class PhantomComponent:
    kind: str
    center: tuple[float, float, float]
    radius_or_sigma: float
    amplitude: float = 1.0
    smooth_order: int = 0

    def __post_init__(self):
        if self.kind not in (BALL, GAUSSIAN):
            raise ValueError(f"unknown component kind {self.kind!r}")
        if not self.radius_or_sigma > 0:
            raise ValueError("radius_or_sigma must be positive")
        if self.smooth_order < 0:
            raise ValueError("smooth_order must be non-negative")
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))

    @classmethod
    def ball(cls, center, radius, amplitude=1.0, order=0):
        return cls(BALL, tuple(center), float(radius), float(amplitude), int(order))

    @classmethod
    def gaussian(cls, center, sigma, amplitude=1.0):
        return cls(GAUSSIAN, tuple(center), float(sigma), float(amplitude), 0)

    def scaled(self, factor: float) -> "PhantomComponent":
        return PhantomComponent(self.kind, self.center, self.radius_or_sigma,
                                self.amplitude * factor, self.smooth_order)

    def to_dict(self) -> dict:
        if self.kind == GAUSSIAN:
            return {"kind": GAUSSIAN, "center": list(self.center),
                    "sigma": self.radius_or_sigma, "amplitude": self.amplitude}
        return {"kind": BALL, "center": list(self.center), "radius": self.radius_or_sigma,
                "amplitude": self.amplitude, "order": self.smooth_order}

    @classmethod
    def from_dict(cls, d: dict) -> "PhantomComponent":
        kind = d["kind"]
        if kind == GAUSSIAN:
            extra = set(d) - {"kind", "center", "sigma", "amplitude"}
            if extra:
                raise ValueError(f"unknown gaussian fields {sorted(extra)}")
            return cls.gaussian(d["center"], d["sigma"], d.get("amplitude", 1.0))
        if kind == BALL:
            extra = set(d) - {"kind", "center", "radius", "amplitude", "order"}
            if extra:
                raise ValueError(f"unknown ball fields {sorted(extra)}")
            return cls.ball(d["center"], d["radius"], d.get("amplitude", 1.0), d.get("order", 0))
        raise ValueError(f"unknown component kind {kind!r}")


@dataclass(frozen=True)
class PhantomSpec:
    components: tuple[PhantomComponent, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(self.components))

    def __add__(self, other: "PhantomSpec") -> "PhantomSpec":
        return PhantomSpec(self.components + other.components)

    def scaled(self, factor: float) -> "PhantomSpec":
        return PhantomSpec(tuple(c.scaled(factor) for c in self.components))

    def to_json(self) -> str:
        return json.dumps({"components": [c.to_dict() for c in self.components]}, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "PhantomSpec":
        return cls.from_dict(json.loads(text))

    @classmethod
    def from_dict(cls, d: dict) -> "PhantomSpec":
        if set(d) - {"components"}:
            raise ValueError(f"unknown phantom fields {sorted(set(d) - {'components'})}")
        return cls(tuple(PhantomComponent.from_dict(c) for c in d.get("components", [])))

    def digest(self) -> str:
        return hashlib.sha256(self.to_json().encode()).hexdigest()[:16]

    def as_array(self) -> np.ndarray:
        """Pack as rows ``[kind, cx, cy, cz, radius_or_sigma, amplitude, order]``.

        ``kind`` is 0 for balls and 1 for Gaussians; used by compiled kernels.
        """
        out = np.zeros((len(self.components), 7))
        for i, c in enumerate(self.components):
            out[i] = (0.0 if c.kind == BALL else 1.0, *c.center, c.radius_or_sigma,
                      c.amplitude, c.smooth_order)
        return out


def default_phantom() -> PhantomSpec:
    return PhantomSpec((PhantomComponent.gaussian((0.22, 0.22, 0.22), 0.07),))


def support_radius(comp: PhantomComponent) -> float:
    if comp.kind == GAUSSIAN:
        return GAUSS_TRUNCATION * comp.radius_or_sigma
    return comp.radius_or_sigma


def _component_values(comp: PhantomComponent, x: np.ndarray) -> np.ndarray:
    r2 = np.sum((x - np.asarray(comp.center)) ** 2, axis=-1)
    p2 = comp.radius_or_sigma ** 2
    if comp.kind == GAUSSIAN:
        return np.where(r2 <= GAUSS_TRUNCATION ** 2 * p2, comp.amplitude * np.exp(-r2 / p2), 0.0)
    inside = r2 <= p2
    if comp.smooth_order == 0:
        return np.where(inside, comp.amplitude, 0.0)
    return np.where(inside, comp.amplitude * np.clip(1.0 - r2 / p2, 0.0, None) ** comp.smooth_order, 0.0)


def eval_phantom(spec: PhantomSpec, x) -> np.ndarray | float:
    """Evaluate the phantom at points ``x`` of shape ``(..., 3)``."""
    x = np.asarray(x, dtype=float)
    out = np.zeros(x.shape[:-1])
    for comp in spec.components:
        out = out + _component_values(comp, x)
    return out if out.ndim else float(out)


def validate_support(spec: PhantomSpec) -> list[str]:
    """One warning per component whose support leaves the tripod hull."""
    warnings = []
    for i, comp in enumerate(spec.components):
        c = np.asarray(comp.center)
        r = support_radius(comp)
        problems = []
        if np.any(c - r < 0.0):
            problems.append("extends below a coordinate plane")
        if np.any(c + r > 1.0):
            problems.append("extends beyond the unit cube")
        if c.sum() + r * math.sqrt(3.0) > 1.0:
            problems.append("crosses the face x1+x2+x3=1")
        if problems:
            warnings.append(f"component {i} ({comp.kind}, support radius {r:g}): " + ", ".join(problems))
    return warnings


def _chord(center, radius, u, w):
    """Parameter interval of the line ``u + r w`` inside a sphere, or None."""
    d = np.asarray(u, dtype=float) - np.asarray(center, dtype=float)
    ww = float(w @ w)
    b = float(d @ w) / ww
    disc = b * b - (float(d @ d) - radius * radius) / ww
    if disc <= 0.0:
        return None
    h = math.sqrt(disc)
    return -b - h, -b + h


def analytic_ray_p1(comp: PhantomComponent, u, w) -> float:
    """Closed-form ``int_0^inf f(u + r w) r dr`` for an indicator ball."""
    if comp.kind != BALL or comp.smooth_order != 0:
        raise ValueError("analytic_ray_p1 needs an order-0 ball")
    w = np.asarray(w, dtype=float)
    ch = _chord(comp.center, comp.radius_or_sigma, u, w)
    if ch is None:
        return 0.0
    r0, r1 = max(ch[0], 0.0), ch[1]
    if r1 <= r0:
        return 0.0
    return comp.amplitude * (r1 * r1 - r0 * r0) / 2.0


def analytic_radon(spec: PhantomSpec, n, s):
    """Closed-form plane integrals ``int_{x.n = s} f``.

    ``n`` may be a single unit vector or an array ``(..., 3)``; ``s`` is
    broadcast against it.  Gaussians use the untruncated closed form.
    """
    n = np.asarray(n, dtype=float)
    s = np.asarray(s, dtype=float)
    out = np.zeros(np.broadcast_shapes(n.shape[:-1], s.shape))
    for comp in spec.components:
        d = s - n @ np.asarray(comp.center)
        p = comp.radius_or_sigma
        if comp.kind == GAUSSIAN:
            out = out + comp.amplitude * math.pi * p * p * np.exp(-(d * d) / (p * p))
        else:
            m = comp.smooth_order
            q = np.clip(1.0 - (d * d) / (p * p), 0.0, None)
            out = out + comp.amplitude * math.pi * p * p * q ** (m + 1) / (m + 1)
    return out if out.ndim else float(out)

