import math

import numpy as np
import pytest

from tripod_crt.errors import InsufficientGrid, OutOfRange
from tripod_crt.forward import QuadratureConfig, simulate_cone_data
from tripod_crt.sigproc import (ConeDataGrid, PhiGrid, ProcessedGrid, SGrid, YGrid, diff_s, diff_y,
                                hilbert_matrix, hilbert_s, process_cone_data, sample_processed,
                                split_to_nodes)

SG = SGrid()
YG = YGrid(17)
PG = PhiGrid(8)


def _grid(fn, yg=YG, pg=PG, sg=SG, k=1):
    y, p, s = np.meshgrid(yg.nodes, pg.nodes, sg.nodes, indexing="ij")
    data = np.stack([fn(y, p, s) * (a + 1) for a in range(3)])
    return ConeDataGrid(data, yg, pg, sg, k)


def test_grid_validation():
    with pytest.raises(ValueError):
        SGrid(-0.9, 1.25, 257)
    with pytest.raises(ValueError):
        SGrid(n_s=8)
    with pytest.raises(ValueError):
        PhiGrid(7)
    with pytest.raises(ValueError):
        ConeDataGrid(np.zeros((3, 4, 4, 4)), YG, PG, SG, 1)
    with pytest.raises(ValueError):
        ConeDataGrid(np.zeros((3, 17, 8, 257)), YG, PG, SG, 0)


def test_grid_nodes():
    assert SG.nodes[0] == -1.25 and SG.nodes[-1] == 1.25 and len(SG.nodes) == 257
    assert YG.nodes[-1] == 1.0
    assert PG.nodes[-1] == pytest.approx(2 * math.pi * 7 / 8)


def test_diff_s_examples():
    assert not diff_s(_grid(lambda y, p, s: 3.0 + 0 * s)).data.any()
    lin = diff_s(_grid(lambda y, p, s: s)).data
    assert np.allclose(lin[0], 1.0, atol=1e-12)
    quart = diff_s(_grid(lambda y, p, s: s ** 4)).data[0, ..., 2:-2]
    assert np.allclose(quart, 4 * SG.nodes[2:-2] ** 3, atol=1e-10)


def test_diff_s_one_sided_ends_exact_for_quartics():
    d = diff_s(_grid(lambda y, p, s: s ** 4 - s ** 3)).data[0]
    s = SG.nodes
    assert np.allclose(d, 4 * s ** 3 - 3 * s ** 2, atol=1e-9)


def test_diff_y_examples():
    g = ProcessedGrid(_grid(lambda y, p, s: y * s).data, YG, PG, SG, 1)
    assert diff_y(g, 0).data is g.data or np.array_equal(diff_y(g, 0).data, g.data)
    d1 = diff_y(g, 1)
    assert d1.deriv_order == 1
    assert np.allclose(d1.data[0], SG.nodes, atol=1e-12)
    g3 = ProcessedGrid(_grid(lambda y, p, s: y ** 3 + 0 * s).data, YG, PG, SG, 1)
    d2 = diff_y(g3, 2).data[0, 2:-2]
    assert np.allclose(d2, 6 * YG.nodes[2:-2, None, None], atol=1e-9)


def test_diff_y_insufficient():
    g = ProcessedGrid(np.zeros((3, 6, 8, 257)), YGrid(6), PG, SG, 2)
    with pytest.raises(InsufficientGrid):
        diff_y(g, 2)
    with pytest.raises(ValueError):
        diff_y(g, -1)


def test_diff_s_and_diff_y_commute(rng):
    data = rng.normal(size=(3, 17, 8, 257))
    g = ProcessedGrid(data, YG, PG, SG, 1)
    a = diff_y(diff_s(g), 1).data
    b = diff_s(diff_y(g, 1)).data
    assert np.allclose(a, b, rtol=0, atol=1e-12 * np.abs(a).max())


def test_hilbert_zero_and_all_ones():
    assert not hilbert_s(np.zeros(257)).any()
    s = SG.nodes
    out = hilbert_s(np.ones(257))
    ref = np.log(np.abs((s[1:-1] - s[0]) / (s[1:-1] - s[-1]))) / math.pi
    assert np.abs(out[1:-1] - ref).max() < 1e-10


def test_hilbert_matrix_is_cached_and_read_only():
    m = hilbert_matrix(33)
    assert m is hilbert_matrix(33)
    with pytest.raises(ValueError):
        m[0, 0] = 1.0


def test_hilbert_lorentzian_pair():
    # Sign convention: kernel 1/(s - t) maps 1/(1 + t^2) to s/(1 + s^2).
    t = np.linspace(-30.0, 30.0, 2401)
    out = hilbert_s(1.0 / (1.0 + t * t))
    m = np.abs(t) <= 1.0
    ref = t[m] / (1.0 + t[m] ** 2)
    assert np.abs(out[m] - ref).max() < 1e-3 * np.abs(ref).max()


def test_hilbert_twice_is_minus_identity_in_interior():
    s = SG.nodes
    f = s * np.exp(-(s / 0.15) ** 2)
    hh = hilbert_s(hilbert_s(f))
    m = np.abs(s) <= 0.8
    assert np.abs(hh[m] + f[m]).max() < 2e-2 * np.abs(f).max()


def test_hilbert_on_grid_keeps_type():
    g = _grid(lambda y, p, s: np.exp(-s * s))
    h = hilbert_s(g)
    assert isinstance(h, ConeDataGrid) and h.data.shape == g.data.shape


def _jump_line(s):
    return np.where(np.abs(s) < 1.0, (1.0 + s) ** 2, 0.0)


def _jump_line_filtered(s):
    # H d/ds of (1 + s)^2 on [-1, 1]: the smooth part plus the pole of the
    # jump of size -4 at s = 1.
    return (2 * (1 + s) * np.log(np.abs((1 + s) / (1 - s))) - 4.0 + 4.0 / (1 - s)) / math.pi


def test_process_matches_closed_form_across_jump():
    g = process_cone_data(_grid(lambda y, p, s: _jump_line(s)))
    s = SG.nodes
    m = np.abs(np.abs(s) - 1.0) > 1e-9
    ref = _jump_line_filtered(s[m])
    got = g.data[0, 3, 2, m]
    assert np.abs(got - ref).max() < 1e-8 * np.abs(ref).max()


def test_process_split_parts_reassemble():
    g = process_cone_data(_grid(lambda y, p, s: _jump_line(s) * np.cos(p)))
    assert g.has_split and g.deriv_order == 0 and g.stage == "processed"
    assert np.array_equal(split_to_nodes(g.regular, g.slope, g.edges, g.sgrid), g.data)
    assert g.edges[0, 0, 0, 1] == pytest.approx(4.0, rel=1e-12)
    assert g.edges[0, 0, 0, 0] == pytest.approx(0.0, abs=1e-12)


def test_process_zero_and_linear(rng):
    z = process_cone_data(_grid(lambda y, p, s: 0 * s))
    assert not z.data.any()
    c1 = _grid(lambda y, p, s: _jump_line(s) * (1 + y))
    c2 = _grid(lambda y, p, s: np.where(np.abs(s) < 1, np.cos(3 * s) * np.sin(p), 0.0))
    a = 2.5
    lhs = process_cone_data(c1.with_data(a * c1.data + c2.data)).data
    rhs = a * process_cone_data(c1).data + process_cone_data(c2).data
    assert np.allclose(lhs, rhs, rtol=0, atol=1e-12 * np.abs(rhs).max())


def test_process_on_simulated_data(phantom):
    c = simulate_cone_data(phantom, (YGrid(9), PhiGrid(16), SG), 1,
                           QuadratureConfig(n_phi_cone=64), arms=(1,), y_rows=[2])
    g = process_cone_data(c)
    assert np.all(np.isfinite(g.data))
    # the derivative stage vanishes beyond the stencil reach of the cut
    d = diff_s(c).data
    s = SG.nodes
    assert not d[..., np.abs(s) > 1.0 + 4 * SG.h].any()


def test_process_rejects_small_grid():
    with pytest.raises(InsufficientGrid):
        process_cone_data(_grid(lambda y, p, s: s, sg=SGrid(-1.05, 1.05, 16)))


def test_diff_y_carries_split_parts():
    g = process_cone_data(_grid(lambda y, p, s: _jump_line(s) * y ** 2))
    d = diff_y(g, 1)
    assert d.has_split
    assert np.allclose(split_to_nodes(d.regular, d.slope, d.edges, d.sgrid), d.data,
                       rtol=0, atol=1e-10 * np.abs(d.data).max())


def test_sample_processed_nodes_and_bounds():
    g = ProcessedGrid(_grid(lambda y, p, s: np.sin(p) * y * s).data, YG, PG, SG, 1)
    assert sample_processed(g, 2, YG.nodes[5], PG.nodes[3], SG.nodes[100]) == g.data[1, 5, 3, 100]
    assert sample_processed(g, 1, 0.5, 0.3, 2.0) == 0.0
    with pytest.raises(OutOfRange):
        sample_processed(g, 1, 1.1, 0.3, 0.0)


def test_sample_processed_smooth_accuracy():
    yg, pg = YGrid(), PhiGrid()
    fn = lambda y, p, s: np.sin(p) * y * s  # noqa: E731
    g = ProcessedGrid(_grid(fn, yg, pg).data, yg, pg, SG, 1)
    rng = np.random.default_rng(3)
    worst = 0.0
    for _ in range(200):
        i, j, l = rng.integers(1, 127), rng.integers(128), rng.integers(1, 255)
        y = yg.nodes[i] + 0.5 * yg.h
        p = pg.nodes[j] + 0.5 * pg.h
        s = SG.nodes[l] + 0.5 * SG.h
        worst = max(worst, abs(sample_processed(g, 1, y, p, s) - fn(y, p, s)))
    assert worst < 1e-4


def test_sample_split_matches_closed_form_off_grid():
    # Poles and logarithms are evaluated exactly; only the smooth remainder is
    # interpolated, with third-order error ~ h^3 ~ 1e-6.
    g = process_cone_data(_grid(lambda y, p, s: _jump_line(s)))
    for s in (-1.2, -0.97, -0.3, 0.41, 0.99, 0.9999, 1.1):
        assert sample_processed(g, 1, 0.37, 1.1, s) == pytest.approx(
            _jump_line_filtered(s), rel=1e-5, abs=1e-6)
