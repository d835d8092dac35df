import numpy as np
import pytest

from mfdband.errors import InvalidParameterError
from mfdband.lattice import (KPath, LatticeKind, make_lattice, sample_kpath,
                             symmetry_points)


def test_sc_translation_vectors():
    l = 2 * np.pi
    lat = make_lattice("sc", l)
    assert np.allclose(lat.A, np.diag([l, l, l]))


def test_fcc_translation_vectors():
    lat = make_lattice("fcc", 1.0)
    expect = np.array([[0, 0.5, 0.5], [0.5, 0, 0.5], [0.5, 0.5, 0]]).T
    assert np.allclose(lat.A, expect)


def test_bcc_translation_vectors():
    lat = make_lattice("bcc", 2.0)
    expect = np.array([[-1, 1, 1], [1, -1, 1], [1, 1, -1]], dtype=float).T
    assert np.allclose(lat.A, expect)


def test_sc_unit_inverse_is_identity():
    lat = make_lattice("sc", 1.0)
    assert np.allclose(lat.B, np.eye(3))


@pytest.mark.parametrize("kind", ["sc", "fcc", "bcc"])
@pytest.mark.parametrize("l", [1.0, 2 * np.pi, 0.37])
def test_inverse_consistency(kind, l):
    lat = make_lattice(kind, l)
    assert np.abs(lat.A @ lat.B - np.eye(3)).max() < 1e-13
    assert np.abs(lat.B @ lat.A - np.eye(3)).max() < 1e-13
    # direct 3x3 inversion oracle
    assert np.allclose(lat.B, np.linalg.inv(lat.A), rtol=1e-13, atol=1e-15)


def test_nonpositive_l_rejected():
    with pytest.raises(InvalidParameterError):
        make_lattice("sc", 0.0)
    with pytest.raises(InvalidParameterError):
        make_lattice(LatticeKind.BCC, -1.0)


def test_symmetry_points_sc():
    l = 1.7
    p = np.pi / l
    pts = dict(symmetry_points("sc", l))
    assert set(pts) == {"Gamma", "L", "M", "N"}
    assert np.allclose(pts["Gamma"], [0, 0, 0])
    assert np.allclose(pts["L"], [p, 0, 0])
    assert np.allclose(pts["M"], [p, p, 0])
    assert np.allclose(pts["N"], [p, p, p])


def test_symmetry_points_bcc():
    l = 2.0
    p = np.pi / l
    labels, vecs = zip(*symmetry_points("bcc", l))
    assert list(labels) == ["H'", "Gamma", "P", "N", "H"]
    assert np.allclose(vecs[0], [0, 0, 2 * p])
    assert np.allclose(vecs[2], [p, p, p])
    assert np.allclose(vecs[3], [p, 0, p])
    assert np.allclose(vecs[4], [0, 2 * p, 0])


def test_symmetry_points_fcc():
    l = 1.0
    p = np.pi
    pts = dict(symmetry_points("fcc", l))
    assert len(pts) == 6
    assert np.allclose(pts["X"], [0, 2 * p, 0])
    assert np.allclose(pts["U"], [p / 2, 0, p / 2])
    assert np.allclose(pts["L"], [p, p, p])
    assert np.allclose(pts["W"], [p, 2 * p, 0])
    assert np.allclose(pts["K"], [1.5 * p, 1.5 * p, 0])


@pytest.mark.parametrize("kind", ["sc", "fcc", "bcc"])
def test_symmetry_points_scale_inversely_with_l(kind):
    a = dict(symmetry_points(kind, 1.0))
    b = dict(symmetry_points(kind, 2.0))
    for label, k in a.items():
        assert np.allclose(b[label], k / 2.0)


def test_sample_kpath_midpoint():
    path = KPath(vertices=(("G", np.zeros(3)), ("L", np.array([1.0, 0, 0]))),
                 samples_per_segment=1)
    pts, absc, markers = sample_kpath(path)
    assert len(pts) == 3
    assert np.allclose(pts[1], [0.5, 0, 0])
    assert markers == [(0, "G"), (2, "L")]


def test_sample_kpath_shared_vertex_not_duplicated():
    verts = (("G", np.zeros(3)), ("L", np.array([1.0, 0, 0])),
             ("M", np.array([1.0, 1.0, 0])))
    pts, absc, markers = sample_kpath(KPath(vertices=verts, samples_per_segment=1))
    assert len(pts) == 5
    mids = [tuple(np.round(p, 12)) for p in pts]
    assert len(set(mids)) == 5


def test_sample_kpath_uniform_spacing():
    verts = (("G", np.zeros(3)), ("L", np.array([2.0, 0, 0])))
    pts, absc, _ = sample_kpath(KPath(vertices=verts, samples_per_segment=3))
    steps = np.diff(absc)
    assert np.allclose(steps, 0.5)


@pytest.mark.parametrize("nverts,samples", [(2, 1), (3, 4), (5, 10), (4, 2)])
def test_sample_kpath_length_formula(nverts, samples, rng):
    verts = tuple((f"P{i}", rng.standard_normal(3)) for i in range(nverts))
    pts, absc, markers = sample_kpath(KPath(vertices=verts, samples_per_segment=samples))
    assert len(pts) == (nverts - 1) * (samples + 1) + 1
    assert len(absc) == len(pts)
    assert len(markers) == nverts


def test_kpath_needs_two_vertices():
    with pytest.raises(InvalidParameterError):
        KPath(vertices=(("G", np.zeros(3)),))
