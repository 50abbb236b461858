import numpy as np
import pytest

from twistorlab import catalog
from twistorlab.curvature import FrameCurvature, point_geometry
from twistorlab.lambda2 import (
    E_MINUS,
    E_PLUS,
    CurvatureBlocks,
    CurvatureSymmetryError,
    NotSO4Error,
    blocks_from_frame_curvature,
    frame_curvature_from_blocks,
    hodge_star,
    orientation_flip,
    random_so4,
    rotate_blocks,
    so4_split,
)


def test_basis_is_self_and_anti_self_dual():
    for Ep, Em in zip(E_PLUS, E_MINUS):
        assert np.allclose(hodge_star(Ep), Ep)
        assert np.allclose(hodge_star(Em), -Em)


def test_examples():
    flat = blocks_from_frame_curvature(catalog.constant_curvature_oracle(0))
    assert not (flat.A.any() or flat.B.any() or flat.C.any())
    sph = blocks_from_frame_curvature(catalog.constant_curvature_oracle(1))
    assert np.allclose(sph.A, np.eye(3)) and np.allclose(sph.C, np.eye(3)) and not sph.B.any()
    assert sph.s == pytest.approx(12)
    prod = blocks_from_frame_curvature(catalog.product_sphere_oracle(1, 1))
    assert np.allclose(prod.A, np.diag([1, 0, 0])) and np.allclose(prod.C, np.diag([1, 0, 0]))
    assert prod.s == pytest.approx(4) and np.abs(prod.B).max() == 0


def test_round_trip_blocks(rng, make_blocks):
    for _ in range(20):
        b = make_blocks(rng)
        again = blocks_from_frame_curvature(frame_curvature_from_blocks(b))
        assert np.allclose(again.A, b.A) and np.allclose(again.B, b.B) and np.allclose(again.C, b.C)


def test_rejects_non_curvature(rng):
    R = rng.standard_normal((4, 4, 4, 4))
    with pytest.raises(CurvatureSymmetryError):
        blocks_from_frame_curvature(FrameCurvature(R))


def test_orientation_flip():
    A, C = np.diag([1.0, 0, 0]), np.diag([0, 1.0, 0])
    B = np.zeros((3, 3))
    B[0, 1] = 1
    b = CurvatureBlocks(A, B, C)
    f = orientation_flip(b)
    assert np.array_equal(f.A, C) and np.array_equal(f.C, A) and np.array_equal(f.B, B.T)
    ff = orientation_flip(f)
    assert np.array_equal(ff.A, A) and np.array_equal(ff.B, B) and np.array_equal(ff.C, C)
    s4 = blocks_from_frame_curvature(catalog.constant_curvature_oracle(1))
    assert np.allclose(orientation_flip(s4).A, s4.A)


def test_orientation_flip_matches_reversed_frame(rng):
    spec = catalog.get("cp2_fs").spec
    x = catalog.sample_points(spec, 1, rng)[0]
    std = blocks_from_frame_curvature(point_geometry(spec, x).frame_curvature())
    rev = blocks_from_frame_curvature(point_geometry(spec.with_orientation("reversed"), x).frame_curvature())
    flipped = orientation_flip(std)
    # the reversed frame differs by e4 -> -e4, which flips signs inside the E-bases only
    for M, N in ((flipped.A, rev.A), (flipped.C, rev.C)):
        assert np.allclose(np.linalg.eigvalsh(M), np.linalg.eigvalsh(N), atol=1e-9)
    assert np.allclose(np.linalg.svd(flipped.B)[1], np.linalg.svd(rev.B)[1], atol=1e-9)


def test_so4_split_examples():
    for a in (np.eye(4), -np.eye(4)):
        ap, am = so4_split(a)
        assert np.allclose(ap, np.eye(3)) and np.allclose(am, np.eye(3))
    phi = 0.7
    a = np.eye(4)
    a[:2, :2] = [[np.cos(phi), -np.sin(phi)], [np.sin(phi), np.cos(phi)]]
    ap, am = so4_split(a)
    for M in (ap, am):
        assert np.allclose(M[0], [1, 0, 0]) and np.allclose(M[:, 0], [1, 0, 0])
        assert np.allclose(np.abs(M[1:, 1:]), np.abs([[np.cos(phi), np.sin(phi)], [np.sin(phi), np.cos(phi)]]))
        assert np.linalg.det(M) == pytest.approx(1)
    with pytest.raises(NotSO4Error):
        so4_split(np.diag([1, 1, 1, -1.0]))


def test_so4_split_homomorphism(rng):
    for _ in range(100):
        a, b = random_so4(rng), random_so4(rng)
        ap, am = so4_split(a)
        bp, bm = so4_split(b)
        cp, cm = so4_split(a @ b)
        assert np.abs(cp - ap @ bp).max() < 1e-9 and np.abs(cm - am @ bm).max() < 1e-9


def test_rotate_blocks_matches_rotated_frame(rng, make_blocks):
    for _ in range(100):
        b = make_blocks(rng)
        a = random_so4(rng)
        direct = blocks_from_frame_curvature(frame_curvature_from_blocks(b).rotated(a))
        via = rotate_blocks(b, a)
        for M, N in ((direct.A, via.A), (direct.B, via.B), (direct.C, via.C)):
            assert np.abs(M - N).max() < 1e-9


def test_rotation_invariants(rng, make_blocks):
    b = make_blocks(rng)
    s4 = blocks_from_frame_curvature(catalog.constant_curvature_oracle(1))
    for _ in range(10):
        a = random_so4(rng)
        r = rotate_blocks(b, a)
        assert np.allclose(np.linalg.eigvalsh(r.A), np.linalg.eigvalsh(b.A), atol=1e-9)
        assert np.allclose(np.linalg.eigvalsh(r.C), np.linalg.eigvalsh(b.C), atol=1e-9)
        assert np.allclose(np.linalg.svd(r.B)[1], np.linalg.svd(b.B)[1], atol=1e-9)
        assert np.allclose(rotate_blocks(s4, a).A, np.eye(3))
    assert np.allclose(rotate_blocks(b, np.eye(4)).A, b.A)


def test_defects_and_flags(rng, make_blocks):
    asd = make_blocks(rng, asd=True, einstein=True)
    assert asd.is_asd() and asd.is_einstein() and asd.asd_defect < 1e-12
    generic = make_blocks(rng)
    assert not generic.is_asd() and not generic.is_einstein()
    assert generic.einstein_defect == pytest.approx(np.linalg.norm(generic.B))
