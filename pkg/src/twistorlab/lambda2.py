"""Blocks of the curvature operator on self-dual and anti-self-dual 2-forms.

Two-forms on R^4 are stored as antisymmetric 4x4 arrays with the inner
product ``<phi, psi> = 1/2 phi_ab psi_ab``.  The curvature operator acts by
``(R phi)_ab = 1/2 R_abcd phi_cd`` and in the bases ``E+``/``E-`` below reads
``[[A, B^T], [B, C]]``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .curvature import FrameCurvature

ZERO_TOL = 1e-8


def _e(a: int, b: int) -> np.ndarray:
    m = np.zeros((4, 4))
    m[a - 1, b - 1] = 1.0
    m[b - 1, a - 1] = -1.0
    return m


def _basis(sign: int) -> np.ndarray:
    r = 1.0 / np.sqrt(2.0)
    return np.array(
        [
            r * (_e(1, 2) + sign * _e(3, 4)),
            r * (_e(1, 3) + sign * _e(4, 2)),
            r * (_e(1, 4) + sign * _e(2, 3)),
        ]
    )


E_PLUS = _basis(+1)
E_MINUS = _basis(-1)


def inner(phi: np.ndarray, psi: np.ndarray) -> float:
    return 0.5 * float(np.sum(phi * psi))


def hodge_star(phi: np.ndarray) -> np.ndarray:
    """Hodge star of a 2-form on oriented Euclidean R^4."""
    out = np.zeros((4, 4))
    for (a, b, c, d) in ((0, 1, 2, 3), (0, 2, 3, 1), (0, 3, 1, 2)):
        out[c, d] = phi[a, b]
        out[a, b] = phi[c, d]
    return out - out.T


def apply_curvature(R: np.ndarray, phi: np.ndarray) -> np.ndarray:
    return 0.5 * np.einsum("abcd,cd->ab", R, phi)


def zero_tol(scale: float, tol: float = ZERO_TOL) -> float:
    """Absolute threshold below which a defect counts as zero."""
    return tol * max(1.0, scale)


@dataclass(frozen=True)
class CurvatureBlocks:
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray

    @property
    def s(self) -> float:
        return 4.0 * float(np.trace(self.A))

    @property
    def w_plus(self) -> np.ndarray:
        return self.A - self.s / 12.0 * np.eye(3)

    @property
    def w_minus(self) -> np.ndarray:
        return self.C - self.s / 12.0 * np.eye(3)

    @property
    def asd_defect(self) -> float:
        return float(np.linalg.norm(self.w_plus))

    @property
    def einstein_defect(self) -> float:
        return float(np.linalg.norm(self.B))

    @property
    def norm(self) -> float:
        """Frobenius norm of the full 6x6 curvature operator."""
        return float(np.sqrt(np.sum(self.A**2) + 2 * np.sum(self.B**2) + np.sum(self.C**2)))

    def is_asd(self, tol: float = ZERO_TOL) -> bool:
        return self.asd_defect < zero_tol(self.norm, tol)

    def is_einstein(self, tol: float = ZERO_TOL) -> bool:
        return self.einstein_defect < zero_tol(self.norm, tol)

    def invariant_residual(self) -> float:
        """Largest violation of symmetry of A, C and of trace A = trace C."""
        return float(
            max(
                np.max(np.abs(self.A - self.A.T)),
                np.max(np.abs(self.C - self.C.T)),
                abs(np.trace(self.A) - np.trace(self.C)),
            )
        )


class CurvatureSymmetryError(ValueError):
    pass


def blocks_from_frame_curvature(R: FrameCurvature | np.ndarray, check: bool = True) -> CurvatureBlocks:
    Rarr = R.R if isinstance(R, FrameCurvature) else np.asarray(R)
    if check and isinstance(R, FrameCurvature):
        tol = 1e-9 * max(1.0, R.norm())
        res = max(R.symmetry_residual(), R.bianchi_residual())
        if res > tol:
            raise CurvatureSymmetryError(f"curvature symmetry violated by {res:.3e}")
    RP = np.array([apply_curvature(Rarr, E) for E in E_PLUS])
    RM = np.array([apply_curvature(Rarr, E) for E in E_MINUS])
    A = 0.5 * np.einsum("mab,nab->mn", E_PLUS, RP)
    B = 0.5 * np.einsum("mab,nab->mn", E_MINUS, RP)
    C = 0.5 * np.einsum("mab,nab->mn", E_MINUS, RM)
    return CurvatureBlocks(A, B, C)


def frame_curvature_from_blocks(blocks: CurvatureBlocks) -> FrameCurvature:
    """Algebraic curvature tensor whose operator has the given blocks."""
    A, B, C = blocks.A, blocks.B, blocks.C
    R = (
        np.einsum("mab,mn,ncd->abcd", E_PLUS, A, E_PLUS)
        + np.einsum("mab,mn,ncd->abcd", E_MINUS, B, E_PLUS)
        + np.einsum("mab,nm,ncd->abcd", E_PLUS, B, E_MINUS)
        + np.einsum("mab,mn,ncd->abcd", E_MINUS, C, E_MINUS)
    )
    return FrameCurvature(R)


def orientation_flip(blocks: CurvatureBlocks) -> CurvatureBlocks:
    return CurvatureBlocks(blocks.C.copy(), blocks.B.T.copy(), blocks.A.copy())


def act_on_two_form(a: np.ndarray, phi: np.ndarray) -> np.ndarray:
    return a @ phi @ a.T


class NotSO4Error(ValueError):
    pass


def check_so4(a: np.ndarray, tol: float = 1e-10) -> None:
    a = np.asarray(a, dtype=float)
    if a.shape != (4, 4):
        raise NotSO4Error("expected a 4x4 matrix")
    if np.max(np.abs(a.T @ a - np.eye(4))) > tol or abs(np.linalg.det(a) - 1.0) > tol:
        raise NotSO4Error("matrix is not in SO(4)")


def so4_split(a: np.ndarray, check: bool = True) -> tuple[np.ndarray, np.ndarray]:
    """The pair ``(a+, a-)`` of SO(3) matrices induced on the two halves of Lambda^2."""
    if check:
        check_so4(a)
    ap = np.array([[inner(Em, act_on_two_form(a, En)) for En in E_PLUS] for Em in E_PLUS])
    am = np.array([[inner(Em, act_on_two_form(a, En)) for En in E_MINUS] for Em in E_MINUS])
    return ap, am


def rotate_blocks(blocks: CurvatureBlocks, a: np.ndarray) -> CurvatureBlocks:
    """Blocks seen from the rotated frame ``e @ a``."""
    ap, am = so4_split(a)
    return CurvatureBlocks(ap.T @ blocks.A @ ap, am.T @ blocks.B @ ap, am.T @ blocks.C @ am)


def random_so4(rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed element of SO(4)."""
    q, r = np.linalg.qr(rng.standard_normal((4, 4)))
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


def sup_over_rotations(
    blocks: CurvatureBlocks,
    quantity: Callable[[CurvatureBlocks], float],
    rng: np.random.Generator,
    n: int = 200,
) -> float:
    """Largest value of a frame-dependent quantity over random frame rotations.

    The unrotated frame is always included.
    """
    best = quantity(blocks)
    for _ in range(n):
        best = max(best, quantity(rotate_blocks(blocks, random_so4(rng))))
    return float(best)
