import numpy as np
import pytest

from twistorlab import catalog
from twistorlab.curvature import (
    SingularMetricError,
    build_frame,
    christoffel,
    frame_curvature,
    point_geometry,
)
from twistorlab.dsl import metric_derivatives, parse_metric

DELTA = np.eye(4)
CONSTANT = np.einsum("ac,bd->abcd", DELTA, DELTA) - np.einsum("ad,bc->abcd", DELTA, DELTA)


def test_flat_vanishes():
    geo = point_geometry(catalog.get("flat").spec, [0.2, -0.1, 0.4, 0.3])
    assert not geo.Gamma.any() and not geo.dGamma.any() and not geo.R.any()


def test_sphere_origin():
    geo = point_geometry(catalog.get("sphere4").spec, [0, 0, 0, 0])
    assert np.abs(geo.Gamma).max() == 0
    assert geo.scalar == pytest.approx(12, abs=1e-8)
    assert np.abs(geo.frame_curvature().R - CONSTANT).max() < 1e-8


def test_sphere_random_points(rng):
    spec = catalog.get("sphere4").spec
    for x in catalog.sample_points(spec, 5, rng):
        geo = point_geometry(spec, x)
        assert geo.scalar == pytest.approx(12, abs=1e-8)
        assert np.abs(geo.frame_curvature().R - CONSTANT).max() < 1e-8


def test_product_of_spheres(rng):
    spec = catalog.get("s2xs2").spec
    for x in catalog.sample_points(spec, 3, rng):
        geo = point_geometry(spec, x)
        assert geo.scalar == pytest.approx(4, abs=1e-8)
        R = geo.frame_curvature()
        expected = catalog.product_sphere_oracle(1, 1).R
        assert np.abs(R.R - expected).max() < 1e-8


def test_christoffel_against_fd(rng):
    spec = catalog.get("perturbed_flat", {"eps": 0.2}).spec
    x = rng.uniform(-0.8, 0.8, 4)
    h = 1e-5

    def gamma(y):
        return christoffel(*metric_derivatives(spec, y))[0]

    G, dG = christoffel(*metric_derivatives(spec, x))
    g = spec.metric_value(x)
    dg_fd = np.array([(spec.metric_value(x + h * e) - spec.metric_value(x - h * e)) / (2 * h) for e in DELTA])
    Gl = 0.5 * (np.einsum("ijl->lij", dg_fd) + np.einsum("jil->lij", dg_fd) - dg_fd)
    assert np.abs(np.linalg.solve(g, Gl.reshape(4, 16)).reshape(4, 4, 4) - G).max() < 1e-6
    dG_fd = np.array([(gamma(x + h * e) - gamma(x - h * e)) / (2 * h) for e in DELTA])
    assert np.abs(dG_fd - dG).max() < 1e-6


@pytest.mark.parametrize("name", catalog.NAMES)
def test_symmetries(name, rng):
    spec = catalog.get(name).spec
    for x in catalog.sample_points(spec, 3, rng):
        R = point_geometry(spec, x).frame_curvature()
        assert R.symmetry_residual() < 1e-9
        assert R.bianchi_residual() < 1e-9


def test_build_frame_examples():
    assert np.array_equal(build_frame(np.eye(4)), np.eye(4))
    assert np.allclose(build_frame(4 * np.eye(4)), 0.5 * np.eye(4))
    assert np.array_equal(build_frame(np.eye(4), "reversed"), np.diag([1, 1, 1, -1]))


def test_frame_is_orthonormal(rng):
    spec = catalog.get("cp2_fs").spec
    for x in catalog.sample_points(spec, 3, rng):
        g = spec.metric_value(x)
        for orientation in ("standard", "reversed"):
            e = build_frame(g, orientation)
            assert np.abs(e.T @ g @ e - DELTA).max() < 1e-12
            assert np.sign(np.linalg.det(e)) == (1 if orientation == "standard" else -1)


def test_frame_curvature_is_tensorial(rng):
    geo = point_geometry(catalog.get("cp2_fs").spec, [0.3, -0.2, 0.1, 0.4])
    a = np.linalg.qr(rng.standard_normal((4, 4)))[0]
    direct = frame_curvature(geo.R, geo.frame @ a)
    assert np.abs(direct.R - geo.frame_curvature().rotated(a).R).max() < 1e-10


def test_singular_metric():
    spec = parse_metric("g11 = x1^2 g22 = 1 g33 = 1 g44 = 1")
    with pytest.raises(SingularMetricError):
        point_geometry(spec, [0, 0.1, 0.1, 0.1])
