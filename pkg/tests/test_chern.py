import numpy as np
import pytest

from twistorlab import catalog
from twistorlab.chern import (
    FIBER_COEFF,
    Definiteness,
    chern_data,
    classify_definiteness,
    connection_curvature_trace,
    definiteness_operator,
    one_one_defect,
    wedge_square_coeff,
)
from twistorlab.curvature import FrameCurvature
from twistorlab.lambda2 import (
    CurvatureBlocks,
    blocks_from_frame_curvature,
    frame_curvature_from_blocks,
    random_so4,
    rotate_blocks,
    sup_over_rotations,
)

SPHERE_R = catalog.constant_curvature_oracle(1)
PRODUCT_R = catalog.product_sphere_oracle(1, 1)
FLAT_R = catalog.constant_curvature_oracle(0)


def test_operator_examples():
    D = definiteness_operator(blocks_from_frame_curvature(SPHERE_R))
    assert np.allclose(D, np.eye(3)) and classify_definiteness(D).kind is Definiteness.positive_definite
    D = definiteness_operator(blocks_from_frame_curvature(PRODUCT_R))
    assert np.allclose(D, np.diag([1, 0, 0]), atol=1e-12)
    assert classify_definiteness(D).kind is Definiteness.semidefinite
    D = definiteness_operator(blocks_from_frame_curvature(FLAT_R))
    assert not D.any() and classify_definiteness(D).kind is Definiteness.semidefinite


def test_classify_examples():
    c = classify_definiteness(np.eye(3))
    assert c.kind is Definiteness.positive_definite and c.eigenvalues == (1, 1, 1) and c.definite
    assert classify_definiteness(-np.eye(3)).kind is Definiteness.negative_definite
    assert classify_definiteness(np.diag([1.0, -1, 2])).kind is Definiteness.indefinite
    assert classify_definiteness(np.diag([1.0, 1e-12, 2])).kind is Definiteness.semidefinite
    with pytest.raises(ValueError):
        classify_definiteness(np.triu(np.ones((3, 3))))


def test_asd_einstein_operator_is_scalar(rng, make_blocks):
    for _ in range(10):
        b = make_blocks(rng, asd=True, einstein=True)
        assert np.abs(definiteness_operator(b) - (b.s / 12) ** 2 * np.eye(3)).max() < 1e-9


def test_operator_conjugation_invariance(rng, make_blocks):
    b = make_blocks(rng)
    ev = np.linalg.eigvalsh(definiteness_operator(b))
    for _ in range(5):
        r = rotate_blocks(b, random_so4(rng))
        assert np.allclose(np.linalg.eigvalsh(definiteness_operator(r)), ev, atol=1e-9)


def test_one_one_defect_examples(rng, make_blocks):
    assert one_one_defect(make_blocks(rng, asd=True)) == 0
    A = np.eye(3)
    A[0, 1] = A[1, 0] = 3
    A[0, 2] = A[2, 0] = 4
    assert one_one_defect(CurvatureBlocks(A, np.zeros((3, 3)), A)) == pytest.approx(5)
    prod = blocks_from_frame_curvature(PRODUCT_R)
    assert one_one_defect(prod) == 0 and prod.asd_defect > 0
    assert sup_over_rotations(prod, one_one_defect, rng) > 1e-3


def test_wedge_square_examples(rng, make_blocks):
    assert wedge_square_coeff(SPHERE_R) == pytest.approx(2, abs=1e-12)
    assert wedge_square_coeff(FLAT_R) == 0
    assert wedge_square_coeff(PRODUCT_R) == pytest.approx(2, abs=1e-12)
    # rotating e1+ onto a zero eigendirection of A kills the horizontal square
    a = np.eye(4)[[0, 2, 1, 3]]
    a[3] *= -1
    a = a.T
    rotated = FrameCurvature(PRODUCT_R.rotated(a).R)
    assert abs(wedge_square_coeff(rotated)) < 1e-12
    for _ in range(5):
        b = make_blocks(rng, asd=True, einstein=True)
        assert wedge_square_coeff(frame_curvature_from_blocks(b)) == pytest.approx(b.s**2 / 72, abs=1e-9)


def test_chern_forms():
    flat = connection_curvature_trace(FLAT_R)
    assert not flat.horizontal.any()
    assert flat.c1_V_plus.coefficient((4, 5)) == pytest.approx(FIBER_COEFF)
    assert flat.c1_Z_plus.coefficient((4, 5)) == pytest.approx(2 * FIBER_COEFF)
    assert flat.c1_Z_minus.max_abs() == 0
    s4 = connection_curvature_trace(SPHERE_R)
    assert s4.c1_V_plus.coefficient((0, 1)) == pytest.approx(1 / (2 * np.pi))
    assert s4.c1_V_plus.coefficient((2, 3)) == pytest.approx(1 / (2 * np.pi))
    assert s4.c1_V_plus.coefficient((0, 2)) == 0
    assert s4.relation_residual() == 0
    prod = connection_curvature_trace(PRODUCT_R)
    assert prod.horizontal[0, 1] == pytest.approx(1 / (2 * np.pi))
    assert prod.horizontal[2, 3] == pytest.approx(1 / (2 * np.pi))
    assert prod.fiber_coeff == FIBER_COEFF


def test_chern_data_bundle():
    cd = chern_data(SPHERE_R)
    assert cd.definiteness.definite and cd.one_one_defect == 0 and cd.wedge_square_coeff == pytest.approx(2)
