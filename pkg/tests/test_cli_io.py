import json
import math

import numpy as np
import pytest

from tripod_crt.cli_io import (RUN_CONFIG_SCHEMA, RunConfig, main, metrics, read_crt, selftest,
                               write_crt, write_slice_csv)
from tripod_crt.errors import BadMagic, CrcMismatch, SchemaMismatch, SpecMismatch
from tripod_crt.inversion import VolumeGrid, VolumeSpec
from tripod_crt.sigproc import ConeDataGrid, PhiGrid, SGrid, YGrid, process_cone_data

VS = VolumeSpec((0.1, 0.1, 0.1), 0.05, (4, 4, 4))
GRIDS = (YGrid(9), PhiGrid(8), SGrid(n_s=33))
TINY_CFG = {
    "grids": {"n_y": 17, "n_phi": 16, "n_s": 33},
    "quadrature": {"n_phi_beta": 16, "sphere_grid": [8, 16], "n_disc": 41, "n_theta_gc": 24,
                   "n_omega": 16, "n_phi_cone": 16},
    "volume": {"origin": [0.165, 0.165, 0.165], "spacing": 1 / 64, "dims": [8, 8, 8]},
    "k": 1,
}


def _volume(rng):
    valid = np.ones(VS.dims, dtype=bool)
    valid[0] = False
    return VolumeGrid(VS, rng.normal(size=VS.dims), valid, {"k": 2, "note": "x"})


def _cone(rng, k=1):
    return ConeDataGrid(rng.normal(size=(3, 9, 8, 33)), *GRIDS, k, {"phantom": "abc"})


def _write_cfg(tmp_path, **changes):
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(dict(TINY_CFG, **changes)))
    return str(p)


def test_volume_round_trip_is_bit_exact(tmp_path, rng):
    v = _volume(rng)
    write_crt(v, tmp_path / "v.crt")
    w = read_crt(tmp_path / "v.crt")
    assert w.spec == v.spec
    assert w.values.tobytes() == v.values.tobytes()
    assert np.array_equal(w.valid, v.valid)
    assert w.provenance["note"] == "x" and w.provenance["stage"] == "reconstruction"


def test_cone_round_trip_is_bit_exact(tmp_path, rng):
    c = _cone(rng, k=2)
    write_crt(c, tmp_path / "c.crt")
    d = read_crt(tmp_path / "c.crt")
    assert type(d) is ConeDataGrid and d.k == 2
    assert d.data.tobytes() == c.data.tobytes()
    assert (d.ygrid, d.phigrid, d.sgrid) == GRIDS
    assert d.provenance == c.provenance


def test_processed_round_trip_keeps_split_parts(tmp_path, rng):
    s = GRIDS[2].nodes
    c = _cone(rng).with_data(np.broadcast_to(np.where(np.abs(s) < 1, 1 + s, 0.0),
                                             (3, 9, 8, 33)).copy())
    g = process_cone_data(c)
    write_crt(g, tmp_path / "g.crt")
    h = read_crt(tmp_path / "g.crt")
    assert h.stage == "processed" and h.has_split
    for a, b in ((g.data, h.data), (g.regular, h.regular), (g.slope, h.slope),
                 (g.edges, h.edges)):
        assert a.tobytes() == b.tobytes()


def test_truncated_file_fails_crc(tmp_path, rng):
    write_crt(_volume(rng), tmp_path / "v.crt")
    raw = (tmp_path / "v.crt").read_bytes()
    (tmp_path / "t.crt").write_bytes(raw[:-9])
    with pytest.raises(CrcMismatch):
        read_crt(tmp_path / "t.crt")
    flipped = bytearray(raw)
    flipped[-20] ^= 1
    (tmp_path / "f.crt").write_bytes(bytes(flipped))
    with pytest.raises(CrcMismatch):
        read_crt(tmp_path / "f.crt")


def test_wrong_magic(tmp_path, rng):
    write_crt(_volume(rng), tmp_path / "v.crt")
    raw = (tmp_path / "v.crt").read_bytes()
    (tmp_path / "m.crt").write_bytes(b"XXXX" + raw[4:])
    with pytest.raises(BadMagic):
        read_crt(tmp_path / "m.crt")


def test_wrong_version(tmp_path, rng):
    write_crt(_volume(rng), tmp_path / "v.crt")
    raw = bytearray((tmp_path / "v.crt").read_bytes())
    raw[4] = 9
    (tmp_path / "x.crt").write_bytes(bytes(raw))
    with pytest.raises(SchemaMismatch):
        read_crt(tmp_path / "x.crt")


def test_unknown_stage_rejected(tmp_path, rng):
    with pytest.raises(SchemaMismatch):
        write_crt(_volume(rng), tmp_path / "v.crt", stage="bogus")


def test_metrics_examples(rng):
    v = _volume(rng)
    same = metrics(v, v)
    assert same["rel_l2"] == 0.0 and same["max_abs"] == 0.0 and same["psnr"] == math.inf
    double = VolumeGrid(VS, 2 * v.values, v.valid)
    assert metrics(double, v)["rel_l2"] == pytest.approx(1.0, rel=1e-15)
    eps = 1e-3
    shifted = VolumeGrid(VS, v.values + eps, v.valid)
    assert metrics(shifted, v)["max_abs"] == pytest.approx(eps, rel=1e-9)
    assert metrics(v, v)["n_voxels"] == 48
    other = VolumeGrid(VolumeSpec((0.1, 0.1, 0.1), 0.04, (4, 4, 4)), v.values)
    with pytest.raises(SpecMismatch):
        metrics(other, v)


def test_slice_csv(tmp_path, rng):
    v = _volume(rng)
    write_slice_csv(v, "z", 2, tmp_path / "s.csv")
    rows = (tmp_path / "s.csv").read_text().splitlines()
    assert rows[0] == "x,y,z,value,valid" and len(rows) == 17
    x, y, z, val, ok = rows[1].split(",")
    assert float(z) == VS.centers()[0, 0, 2, 2]
    assert float(val) == v.values[0, 0, 2] and ok == "0"
    with pytest.raises(IndexError):
        write_slice_csv(v, "x", 4, tmp_path / "s.csv")


def test_config_round_trip_and_defaults():
    cfg = RunConfig.from_dict(TINY_CFG)
    assert cfg.grids == (YGrid(17), PhiGrid(16), SGrid(n_s=33))
    assert cfg.quadrature.sphere_grid == (8, 16)
    assert RunConfig.from_dict(cfg.to_dict()).to_dict() == cfg.to_dict()
    d = RunConfig.from_dict({})
    assert d.k == 1 and d.volume.dims == (32, 32, 32)


@pytest.mark.parametrize("bad", [
    {"extra": 1},
    {"grids": {"n_y": 17, "nope": 2}},
    {"k": 0},
    {"quadrature": {"sphere_grid": [8]}},
    {"phantom": {"components": [{"kind": "cube", "center": [0, 0, 0]}]}},
    {"grids": {"n_phi": 7}},
])
def test_config_rejects_bad_input(bad):
    with pytest.raises(SchemaMismatch):
        RunConfig.from_dict(bad)


def test_shipped_schema_matches_code():
    from pathlib import Path
    shipped = Path(__file__).resolve().parents[1] / "docs" / "run_config.schema.json"
    assert json.loads(shipped.read_text()) == RUN_CONFIG_SCHEMA


def test_selftest_passes(capsys):
    assert all(selftest().values())
    assert main(["selftest"]) == 0
    assert all(json.loads(capsys.readouterr().out).values())


def test_invert_rejects_k_mismatch(tmp_path, rng, capsys):
    write_crt(ConeDataGrid(np.zeros((3, 17, 16, 33)), YGrid(17), PhiGrid(16), SGrid(n_s=33), 2),
              tmp_path / "c.crt")
    code = main(["invert", "--config", _write_cfg(tmp_path), "--in", str(tmp_path / "c.crt"),
                 "--out", str(tmp_path / "v.crt")])
    assert code == 2
    err = json.loads(capsys.readouterr().err)
    assert err["error"] == "SchemaMismatch"


def test_cli_reports_bad_files(tmp_path, capsys):
    (tmp_path / "junk.crt").write_bytes(b"nothing here")
    code = main(["compare", "--recon", str(tmp_path / "junk.crt"),
                 "--truth", str(tmp_path / "junk.crt")])
    assert code == 2
    assert json.loads(capsys.readouterr().err)["error"] == "BadMagic"


def test_compare_self_is_zero(tmp_path, rng, capsys):
    write_crt(_volume(rng), tmp_path / "v.crt")
    out = tmp_path / "m.json"
    assert main(["compare", "--recon", str(tmp_path / "v.crt"), "--truth",
                 str(tmp_path / "v.crt"), "--json", str(out)]) == 0
    m = json.loads(out.read_text())
    assert m["rel_l2"] == 0.0 and m["psnr"] is None


def test_oracle_plane(tmp_path, capsys):
    cfg = _write_cfg(tmp_path)
    assert main(["oracle", "plane", "--config", cfg, "--n", "1,1,1", "--s", "0.38"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["value"] == pytest.approx(out["analytic"], rel=1e-4)


def test_cli_pipeline_tiny(tmp_path, capsys):
    # Structure only: the tiny grids are too coarse for accuracy.
    cfg = _write_cfg(tmp_path)
    d = str(tmp_path)
    assert main(["phantom", "gen", "--config", cfg, "--out", d + "/ph.json"]) == 0
    assert main(["phantom", "voxelize", "--config", cfg, "--out", d + "/truth.crt"]) == 0
    assert main(["forward", "--config", cfg, "--out", d + "/c.crt"]) == 0
    capsys.readouterr()
    assert main(["process", "--in", d + "/c.crt", "--out", d + "/p.crt", "--dy"]) == 0
    assert json.loads(capsys.readouterr().out)["stage"] == "processed_dy"
    assert read_crt(d + "/p.crt").deriv_order == 0
    assert main(["invert", "--config", cfg, "--in", d + "/c.crt", "--out", d + "/v.crt",
                 "--dump-stages", d + "/st", "--slice", "z=4"]) == 0
    for name in ("processed.crt", "processed_dy.crt", "backprojection.crt", "tables.npz"):
        assert (tmp_path / "st" / name).exists()
    assert (tmp_path / "v.slice_z4.csv").exists()
    capsys.readouterr()
    assert main(["compare", "--recon", d + "/v.crt", "--truth", d + "/truth.crt"]) == 0
    m = json.loads(capsys.readouterr().out)
    assert m["n_voxels"] == 6 ** 3 and math.isfinite(m["rel_l2"])
