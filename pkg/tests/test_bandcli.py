import json
import subprocess
import sys

import numpy as np
import pytest

from mfdband.bandcli import (RunConfig, emit_outputs, exact_iso_eigs,
                             gap_ratio, read_band_csv, resolve_kpath,
                             run_bandstructure, verify_order)
from mfdband.errors import ConfigError, InvalidParameterError


def test_exact_iso_eigs_basic():
    vals = exact_iso_eigs(np.array([0.5, 0, 0]), 2 * np.pi, 6)
    assert np.allclose(vals, [0.25, 0.25, 0.25, 0.25, 1.25, 1.25])
    vals0 = exact_iso_eigs(np.zeros(3), 2 * np.pi, 2)
    assert np.allclose(vals0, [0.0, 0.0])


def test_exact_iso_eigs_brute_force_box(rng):
    l = 1.7
    g0 = 2 * np.pi / l
    for _ in range(10):
        k = rng.uniform(-g0, g0, 3)
        got = exact_iso_eigs(k, l, 12)
        rngv = np.arange(-3, 4)
        mx, my, mz = np.meshgrid(rngv, rngv, rngv, indexing="ij")
        m = np.stack([mx, my, mz], -1).reshape(-1, 3)
        vals = np.sort(np.sum((k[None] + g0 * m) ** 2, axis=1))
        want = np.repeat(vals[:6], 2)
        assert np.allclose(got, want)


def test_gap_ratio_flat_bands():
    bands = np.array([[1.0, 1.0, 1.0], [2.0, 2.0, 2.0]])
    g = gap_ratio(bands, 1)
    assert g["ratio"] == pytest.approx(2.0 / 3.0)
    assert g["omega_low"] == 1.0 and g["omega_up"] == 2.0


def test_gap_ratio_touching_bands():
    bands = np.array([[1.0, 2.0], [2.0, 3.0]])
    assert gap_ratio(bands, 1)["ratio"] == 0.0


def test_gap_ratio_scale_invariance(rng):
    bands = np.sort(rng.uniform(1.0, 5.0, (4, 7)), axis=0)
    g1 = gap_ratio(bands)
    g2 = gap_ratio(3.7 * bands)
    assert g1["n"] == g2["n"]
    assert g1["ratio"] == pytest.approx(g2["ratio"], rel=1e-12)


def test_gap_ratio_auto_selects_max():
    bands = np.array([[1.0, 1.1], [1.3, 1.25], [3.0, 2.9]])
    g = gap_ratio(bands)
    assert g["n"] == 2


def test_gap_ratio_band_index_guard():
    bands = np.ones((3, 2))
    with pytest.raises(InvalidParameterError):
        gap_ratio(bands, 3)


def test_config_rejects_unknown_keys():
    with pytest.raises(ConfigError, match="unknown config keys"):
        RunConfig.from_dict({"lattice": "sc", "banana": 1})
    with pytest.raises(ConfigError):
        RunConfig.from_dict({"order": 3})
    with pytest.raises(ConfigError):
        RunConfig.from_dict({"precond": "amg"})
    with pytest.raises(ConfigError):
        RunConfig.from_dict({"precond": "mg", "order": 4})


def test_resolve_kpath_labels_and_vectors():
    cfg = RunConfig.from_dict({"lattice": "bcc", "l": 2.0,
                               "kpath": ["H'", "Gamma", ["custom", [0.1, 0.2, 0.3]]]})
    path = resolve_kpath(cfg)
    labels = [v[0] for v in path.vertices]
    assert labels == ["H'", "Gamma", "custom"]
    assert np.allclose(path.vertices[2][1], [0.1, 0.2, 0.3])
    with pytest.raises(ConfigError):
        resolve_kpath(RunConfig.from_dict({"lattice": "sc", "kpath": ["Q"]}))


def _tiny_cfg(tmp_path, **over):
    raw = {
        "lattice": "sc", "l": 2 * np.pi, "geometry": "homogeneous",
        "eps_in": 1.0, "eps_out": 1.0, "N": 8, "order": 2,
        "kpath": ["Gamma", "L"], "samples_per_segment": 1,
        "nev": 4, "tol": 1e-6, "seed": 1,
        "csv": str(tmp_path / "b.csv"), "svg": str(tmp_path / "b.svg"),
        "manifest": str(tmp_path / "m.json"),
    }
    raw.update(over)
    return RunConfig.from_dict(raw)


def test_run_bandstructure_homogeneous_small(tmp_path):
    cfg = _tiny_cfg(tmp_path)
    bs = run_bandstructure(cfg)
    assert bs.bands.shape == (4, 3)
    # At the midpoint k = (pi/(2 l), 0, 0): omega_1 = |k|.
    kmid = np.pi / (2 * cfg.l)
    assert bs.bands[0, 1] == pytest.approx(kmid, rel=1e-3)
    # At Gamma the two lowest bands are zero (kernel handled by the shift,
    # surplus kernel mode dropped), band 3 approximates omega = 1.
    assert bs.bands[0, 0] < 1e-4 and bs.bands[1, 0] < 1e-4
    assert bs.bands[2, 0] == pytest.approx(1.0, rel=0.05)
    assert all(r.escalations == 0 for r in bs.reports)

    files = emit_outputs(bs, cfg)
    assert len(files) == 3
    absc, bands = read_band_csv(cfg.csv)
    assert np.array_equal(bands, bs.bands)
    assert np.array_equal(absc, bs.abscissa)
    svg = open(cfg.svg).read()
    assert svg.count("<polyline") == 4
    man = json.load(open(cfg.manifest))
    assert len(man["kpoints"]) == 3
    assert man["config"]["N"] == 8
    assert sum(r["escalations"] for r in man["kpoints"]) == 0


def test_csv_shape_columns(tmp_path):
    cfg = _tiny_cfg(tmp_path, nev=2, kpath=["Gamma", "L"], samples_per_segment=1)
    bs = run_bandstructure(cfg)
    emit_outputs(bs, cfg)
    lines = open(cfg.csv).read().strip().split("\n")
    header = lines[0].split(",")
    assert header[:5] == ["label", "kx", "ky", "kz", "abscissa"]
    assert len(header) == 5 + 2 * 2
    assert len(lines) == 1 + 3


def test_svg_gap_shading(tmp_path):
    cfg = _tiny_cfg(tmp_path)
    bs = run_bandstructure(cfg)
    bs.gap = {"n": 1, "omega_low": 0.2, "omega_up": 0.4, "ratio": 0.5}
    emit_outputs(bs, cfg)
    svg = open(cfg.svg).read()
    assert svg.count('class="gap"') == 1


def test_band_values_invariant_under_path_reversal(tmp_path):
    cfg = _tiny_cfg(tmp_path, kpath=["Gamma", "L"], samples_per_segment=1)
    fwd = run_bandstructure(cfg)
    cfg_rev = _tiny_cfg(tmp_path, kpath=["L", "Gamma"], samples_per_segment=1)
    rev = run_bandstructure(cfg_rev)
    assert np.abs(fwd.bands - rev.bands[:, ::-1]).max() < 1e-10


def test_verify_order_quick():
    table = verify_order([2], [8, 16], nev=6, tol=1e-7)
    rows = table["orders"][2]
    rates = rows[1]["rates"]
    assert rates[2] == pytest.approx(2.0, abs=0.1)
    assert rates[4] == pytest.approx(2.0, abs=0.1)
    assert rows[0]["errors"][0] < 1e-11


def _run_cli(*args):
    return subprocess.run([sys.executable, "-m", "mfdband.bandcli", *args],
                          capture_output=True, text=True)


def test_cli_exact():
    out = _run_cli("exact", "--k", "0.5,0,0", "--l", "6.283185307179586",
                   "--count", "6")
    assert out.returncode == 0
    assert "0.25" in out.stdout and "1.25" in out.stdout


def test_cli_eig_and_exit_codes(tmp_path):
    out = _run_cli("eig", "--lattice", "sc", "--l", "6.283185307179586",
                   "--k", "0.5,0,0", "--N", "8", "--order", "2", "--nev", "4",
                   "--tol", "1e-6")
    assert out.returncode == 0
    assert "omega^2" in out.stdout

    bad = _run_cli("bands", str(tmp_path / "missing.json"))
    assert bad.returncode == 3

    cfgfile = tmp_path / "bad.json"
    cfgfile.write_text(json.dumps({"lattice": "sc", "frobnicate": True}))
    bad2 = _run_cli("bands", str(cfgfile))
    assert bad2.returncode == 3
    assert "configuration error" in bad2.stderr


def test_cli_bands_with_dump(tmp_path):
    cfg = {
        "lattice": "sc", "l": 6.283185307179586, "geometry": "homogeneous",
        "N": 8, "order": 2, "kpath": [["A", [0.5, 0, 0]], ["B", [0.4, 0.1, 0]]],
        "samples_per_segment": 1, "nev": 3, "tol": 1e-6,
        "csv": str(tmp_path / "out.csv"),
        "dump_eigenvectors": str(tmp_path / "vec"),
    }
    cfgfile = tmp_path / "cfg.json"
    cfgfile.write_text(json.dumps(cfg))
    out = _run_cli("bands", str(cfgfile))
    assert out.returncode == 0, out.stderr
    from mfdband.grid_fields import Space, read_field
    vals, N, space = read_field(tmp_path / "vec_k000.mfdf")
    assert N == 8 and space is Space.FACE
    assert vals.shape == (3 * 3, 512)


def test_mg_precond_through_solve(tmp_path):
    cfg = _tiny_cfg(tmp_path, N=8, precond="mg",
                    kpath=[["A", [0.5, 0, 0]], ["B", [0.6, 0, 0]]],
                    samples_per_segment=1, nev=3)
    bs = run_bandstructure(cfg)
    assert bs.bands.shape == (3, 3)
    assert bs.bands[0, 0] == pytest.approx(0.5, rel=1e-3)
