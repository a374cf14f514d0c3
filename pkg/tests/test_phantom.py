import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tripod_crt.phantom import (PhantomComponent, PhantomSpec, analytic_radon, analytic_ray_p1,
                                default_phantom, eval_phantom, validate_support)

C = (0.25, 0.25, 0.25)


def test_eval_examples():
    assert eval_phantom(PhantomSpec(), (0.3, 0.1, 0.2)) == 0.0
    assert eval_phantom(PhantomSpec((PhantomComponent.ball(C, 0.1),)), C) == 1.0
    g = PhantomSpec((PhantomComponent.gaussian(C, 0.08),))
    assert abs(eval_phantom(g, (0.33, 0.25, 0.25)) - math.exp(-1)) < 1e-12


def test_gaussian_truncated_at_four_sigma():
    g = PhantomSpec((PhantomComponent.gaussian(C, 0.05),))
    assert eval_phantom(g, (0.25 + 0.199, 0.25, 0.25)) > 0.0
    assert eval_phantom(g, (0.25 + 0.201, 0.25, 0.25)) == 0.0


def test_smooth_ball_profile():
    b = PhantomSpec((PhantomComponent.ball(C, 0.2, amplitude=2.0, order=3),))
    assert eval_phantom(b, (0.35, 0.25, 0.25)) == pytest.approx(2.0 * 0.75 ** 3)
    assert eval_phantom(b, (0.46, 0.25, 0.25)) == 0.0


def test_eval_is_sum_of_components(rng):
    a = PhantomComponent.gaussian((0.2, 0.3, 0.1), 0.05)
    b = PhantomComponent.ball((0.3, 0.2, 0.2), 0.1, order=2)
    x = rng.uniform(0, 0.6, size=(50, 3))
    both = eval_phantom(PhantomSpec((a, b)), x)
    assert np.array_equal(both, eval_phantom(PhantomSpec((a,)), x) + eval_phantom(PhantomSpec((b,)), x))


def test_validate_support_examples():
    assert validate_support(PhantomSpec((PhantomComponent.ball(C, 0.1),))) == []
    assert len(validate_support(PhantomSpec((PhantomComponent.ball((0.4, 0.4, 0.4), 0.1),)))) == 1
    assert validate_support(PhantomSpec()) == []


def test_default_phantom_is_negligible_outside_hull():
    # The 4-sigma support ball of the default Gaussian pokes out of the hull, so
    # validate_support flags it; the value there is below 1e-4 of the peak.
    f = default_phantom()
    assert validate_support(f)
    assert math.exp(-((1 - 0.66) / math.sqrt(3) / 0.07) ** 2) < 1e-3
    assert math.exp(-(0.22 / 0.07) ** 2) < 1e-4


def test_json_round_trip():
    f = PhantomSpec((PhantomComponent.gaussian(C, 0.08, 0.5),
                     PhantomComponent.ball((0.2, 0.1, 0.3), 0.05, 2.0, 3)))
    g = PhantomSpec.from_json(f.to_json())
    assert g == f
    assert f.to_json() == g.to_json()


def test_json_field_names():
    d = {"components": [{"kind": "gaussian", "center": [0.22, 0.22, 0.22], "sigma": 0.07,
                         "amplitude": 1.0}]}
    assert PhantomSpec.from_dict(d) == default_phantom()


def test_json_rejects_unknown_fields():
    with pytest.raises(ValueError):
        PhantomSpec.from_dict({"components": [{"kind": "ball", "center": [0, 0, 0],
                                               "radius": 1, "sigma": 2}]})
    with pytest.raises(ValueError):
        PhantomSpec.from_dict({"components": [], "extra": 1})


def test_component_validation():
    with pytest.raises(ValueError):
        PhantomComponent.gaussian(C, 0.0)
    with pytest.raises(ValueError):
        PhantomComponent("cube", C, 0.1)


def test_analytic_ray_examples():
    unit = PhantomComponent.ball((0, 0, 0), 1.0)
    assert analytic_ray_p1(unit, (-2, 0, 0), (1, 0, 0)) == pytest.approx(4.0)
    assert analytic_ray_p1(unit, (-2, 5, 0), (1, 0, 0)) == 0.0
    b = PhantomComponent.ball(C, 0.1, amplitude=3.0)
    w = np.array([0.3, -0.4, 0.866])
    w /= np.linalg.norm(w)
    assert analytic_ray_p1(b, C, w) == pytest.approx(3.0 * 0.01 / 2)


def test_analytic_ray_needs_indicator_ball():
    with pytest.raises(ValueError):
        analytic_ray_p1(PhantomComponent.gaussian(C, 0.1), C, (1, 0, 0))


def test_analytic_radon_examples():
    b = PhantomSpec((PhantomComponent.ball(C, 0.1),))
    n = np.array([1.0, 0.0, 0.0])
    assert analytic_radon(b, n, 0.25) == pytest.approx(math.pi * 0.01)
    assert analytic_radon(b, n, 0.36) == 0.0
    g = PhantomSpec((PhantomComponent.gaussian(C, 0.08),))
    assert analytic_radon(g, n, 0.25) == pytest.approx(math.pi * 0.0064)


@given(st.integers(0, 5), st.floats(0.0, 0.999))
def test_analytic_radon_smooth_ball_matches_quadrature(m, frac):
    # Integrate the order-m profile over the disc cut at distance d directly.
    rho = 0.2
    d = frac * rho
    b = PhantomSpec((PhantomComponent.ball((0, 0, 0), rho, order=m),))
    a2 = rho * rho - d * d
    r, w = np.polynomial.legendre.leggauss(64)
    r = 0.5 * math.sqrt(a2) * (r + 1)
    w = 0.5 * math.sqrt(a2) * w
    ref = 2 * math.pi * np.sum(w * r * (1 - (d * d + r * r) / rho ** 2) ** m)
    assert analytic_radon(b, np.array([0, 0, 1.0]), d) == pytest.approx(ref, rel=1e-10, abs=1e-15)


def test_analytic_radon_broadcasts(rng):
    f = default_phantom()
    n = rng.normal(size=(4, 3))
    n /= np.linalg.norm(n, axis=1, keepdims=True)
    s = rng.uniform(0, 0.6, size=(4, 5))
    out = analytic_radon(f, n[:, None, :], s)
    assert out.shape == (4, 5)
    assert out[2, 3] == analytic_radon(f, n[2], s[2, 3])
