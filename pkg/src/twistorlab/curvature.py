"""Levi-Civita curvature of a metric chart and its orthonormal-frame components.

Sign convention: ``R_ijkl = g(R(d_k, d_l) d_j, d_i)`` with
``R(X, Y) = [nabla_X, nabla_Y] - nabla_[X,Y]``, so that the round sphere of
radius one has ``R_1212 = +1`` in any orthonormal frame and ``s = +12``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .dsl import MetricSpec, metric_derivatives

SYMMETRY_TOL = 1e-9


class SingularMetricError(ArithmeticError):
    pass


class FrameError(ArithmeticError):
    """Gram-Schmidt hit a non-positive norm: the metric is not positive definite."""


def christoffel(g: np.ndarray, dg: np.ndarray, ddg: np.ndarray):
    """Christoffel symbols and their first derivatives.

    Returns ``(Gamma, dGamma)`` with ``Gamma[k,i,j]`` the coefficient
    ``Gamma^k_ij`` and ``dGamma[m,k,i,j] = d_m Gamma^k_ij``.
    """
    if abs(np.linalg.det(g)) < 1e-300 or np.linalg.cond(g) > 1e14:
        raise SingularMetricError("metric is singular at this point")
    ginv = np.linalg.inv(g)
    # first kind: Gl[l,i,j] = 1/2 (d_i g_jl + d_j g_il - d_l g_ij)
    Gl = 0.5 * (
        np.einsum("ijl->lij", dg) + np.einsum("jil->lij", dg) - dg
    )
    Gamma = np.einsum("kl,lij->kij", ginv, Gl)
    # d_m Gl[l,i,j]
    dGl = 0.5 * (
        np.einsum("mijl->mlij", ddg) + np.einsum("mjil->mlij", ddg) - ddg
    )
    dginv = -np.einsum("ka,mab,bl->mkl", ginv, dg, ginv)
    dGamma = np.einsum("mkl,lij->mkij", dginv, Gl) + np.einsum("kl,mlij->mkij", ginv, dGl)
    return Gamma, dGamma


def riemann_coord(Gamma: np.ndarray, dGamma: np.ndarray, g: np.ndarray) -> np.ndarray:
    """Fully covariant coordinate curvature ``R[i,j,k,l] = R_ijkl``."""
    # R^m_jkl = d_k Gamma^m_lj - d_l Gamma^m_kj + Gamma^m_kp Gamma^p_lj - Gamma^m_lp Gamma^p_kj
    t1 = np.einsum("kmlj->mjkl", dGamma)
    t3 = np.einsum("mkp,plj->mjkl", Gamma, Gamma)
    Rup = t1 - t1.transpose(0, 1, 3, 2) + t3 - t3.transpose(0, 1, 3, 2)
    return np.einsum("im,mjkl->ijkl", g, Rup)


def scalar_curvature_coord(R: np.ndarray, g: np.ndarray) -> float:
    ginv = np.linalg.inv(g)
    return float(np.einsum("ik,jl,ijkl->", ginv, ginv, R))


def build_frame(g: np.ndarray, orientation: str = "standard") -> np.ndarray:
    """Oriented orthonormal frame by Gram-Schmidt of the coordinate basis.

    Column ``a`` of the result holds the coordinate components of ``e_a``.
    The frame is upper triangular; for the ``reversed`` orientation (or a
    negative determinant under ``standard``) the fourth column is negated.
    """
    e = np.zeros((4, 4))
    for a in range(4):
        v = np.zeros(4)
        v[a] = 1.0
        for b in range(a):
            v = v - (e[:, b] @ g @ v) * e[:, b]
        n2 = v @ g @ v
        if not n2 > 0.0:
            raise FrameError(f"Gram-Schmidt norm {n2!r} at vector {a + 1}")
        e[:, a] = v / np.sqrt(n2)
    det = np.linalg.det(e)
    if (orientation == "standard") != (det > 0):
        e[:, 3] = -e[:, 3]
    return e


def frame_derivative(g: np.ndarray, dg: np.ndarray, e: np.ndarray) -> np.ndarray:
    """Coordinate derivatives ``de[k] = d_k e`` of the Gram-Schmidt frame.

    Uses ``e = L^{-T} D`` with ``g = L L^T`` the Cholesky factorisation and
    ``D`` the constant orientation sign matrix, differentiating the
    factorisation analytically.
    """
    L = np.linalg.cholesky(g)
    Linv = np.linalg.inv(L)
    e0 = Linv.T
    D = np.diag(np.sign(np.diag(np.linalg.solve(e0, e))))
    de = np.empty((4, 4, 4))
    for k in range(4):
        X = Linv @ dg[k] @ Linv.T
        Phi = np.tril(X)
        Phi[np.diag_indices(4)] *= 0.5
        dL = L @ Phi
        de[k] = -e0 @ dL.T @ e0 @ D
    return de


@dataclass(frozen=True)
class FrameCurvature:
    """Orthonormal-frame curvature components ``R[a,b,c,d] = R_abcd`` (0-based)."""

    R: np.ndarray

    def symmetry_residual(self) -> float:
        R = self.R
        return float(
            max(
                np.max(np.abs(R + R.transpose(1, 0, 2, 3))),
                np.max(np.abs(R + R.transpose(0, 1, 3, 2))),
                np.max(np.abs(R - R.transpose(2, 3, 0, 1))),
            )
        )

    def bianchi_residual(self) -> float:
        R = self.R
        return float(np.max(np.abs(R + R.transpose(0, 2, 3, 1) + R.transpose(0, 3, 1, 2))))

    def scalar(self) -> float:
        return float(np.einsum("abab->", self.R))

    def norm(self) -> float:
        return float(np.linalg.norm(self.R))

    def rotated(self, a: np.ndarray) -> "FrameCurvature":
        """Components in the rotated frame ``e @ a``."""
        return FrameCurvature(np.einsum("pqrs,pa,qb,rc,sd->abcd", self.R, a, a, a, a))


def frame_curvature(R: np.ndarray, e: np.ndarray) -> FrameCurvature:
    return FrameCurvature(np.einsum("ijkl,ia,jb,kc,ld->abcd", R, e, e, e, e))


@dataclass(frozen=True)
class PointGeometry:
    """Everything the engine derives from the metric at one chart point."""

    coords: np.ndarray
    g: np.ndarray
    dg: np.ndarray
    ddg: np.ndarray
    Gamma: np.ndarray
    dGamma: np.ndarray
    R: np.ndarray
    frame: np.ndarray
    orientation: str

    @property
    def scalar(self) -> float:
        return scalar_curvature_coord(self.R, self.g)

    def frame_curvature(self, frame: np.ndarray | None = None) -> FrameCurvature:
        return frame_curvature(self.R, self.frame if frame is None else frame)


def point_geometry(spec: MetricSpec, x: Sequence[float]) -> PointGeometry:
    x = np.asarray(x, dtype=float)
    g, dg, ddg = metric_derivatives(spec, x)
    Gamma, dGamma = christoffel(g, dg, ddg)
    R = riemann_coord(Gamma, dGamma, g)
    e = build_frame(g, spec.orientation)
    return PointGeometry(x, g, dg, ddg, Gamma, dGamma, R, e, spec.orientation)
