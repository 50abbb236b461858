"""First Chern forms of the natural unitary connections on the twistor space.

Real 2-forms on Z are written on the co-frame ``theta1..theta6`` as
:class:`NumericForm` objects of dimension 6; ``theta5, theta6`` span the
vertical directions.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .curvature import FrameCurvature
from .forms import NumericForm
from .lambda2 import CurvatureBlocks, blocks_from_frame_curvature

FIBER_COEFF = 4.0 / (2.0 * np.pi)


class Definiteness(str, enum.Enum):
    positive_definite = "positive_definite"
    negative_definite = "negative_definite"
    semidefinite = "semidefinite"
    indefinite = "indefinite"


@dataclass(frozen=True)
class DefinitenessClass:
    kind: Definiteness
    eigenvalues: tuple[float, float, float]

    @property
    def definite(self) -> bool:
        return self.kind in (Definiteness.positive_definite, Definiteness.negative_definite)


def definiteness_operator(blocks: CurvatureBlocks) -> np.ndarray:
    """``(W+ + s/12)^2 - Ric0* Ric0`` on the self-dual forms, i.e. ``A A - B^T B``."""
    D = blocks.A @ blocks.A - blocks.B.T @ blocks.B
    return 0.5 * (D + D.T)


def classify_definiteness(D: np.ndarray) -> DefinitenessClass:
    D = np.asarray(D, dtype=float)
    if np.max(np.abs(D - D.T)) > 1e-9 * max(1.0, float(np.max(np.abs(D)))):
        raise ValueError("operator is not symmetric")
    ev = np.linalg.eigvalsh(D)
    tau = 1e-8 * max(1.0, float(np.max(np.abs(ev))))
    pos = int(np.sum(ev > tau))
    neg = int(np.sum(ev < -tau))
    if pos == 3:
        kind = Definiteness.positive_definite
    elif neg == 3:
        kind = Definiteness.negative_definite
    elif pos and neg:
        kind = Definiteness.indefinite
    else:
        kind = Definiteness.semidefinite
    return DefinitenessClass(kind, tuple(float(x) for x in ev))


def one_one_defect(blocks: CurvatureBlocks) -> float:
    """``sqrt(A12^2 + A13^2)``: vanishes in every frame exactly when the metric is ASD."""
    return float(np.hypot(blocks.A[0, 1], blocks.A[0, 2]))


def horizontal_curvature(R: FrameCurvature | np.ndarray) -> np.ndarray:
    """``F[c,d] = R_12cd + R_34cd``, the components of ``Omega^1_2 + Omega^3_4``."""
    Rarr = R.R if isinstance(R, FrameCurvature) else np.asarray(R)
    return Rarr[0, 1] + Rarr[2, 3]


def wedge_square_coeff(R: FrameCurvature | np.ndarray) -> float:
    """Coefficient of ``theta1234`` in ``(Omega^1_2 + Omega^3_4)^2``."""
    F = horizontal_curvature(R)
    return float(2.0 * (F[0, 1] * F[2, 3] - F[0, 2] * F[1, 3] + F[0, 3] * F[1, 2]))


def _two_form6(F4: np.ndarray, fiber: float) -> NumericForm:
    T = np.zeros((6, 6))
    T[:4, :4] = F4
    T[4, 5], T[5, 4] = fiber, -fiber
    return NumericForm.from_dense(T)


@dataclass(frozen=True)
class ChernForms:
    """First Chern forms on ``theta1..theta6`` for both almost complex structures."""

    horizontal: np.ndarray  # antisymmetric 4x4, (1/2pi) F
    fiber_coeff: float
    c1_V_plus: NumericForm
    c1_H_plus: NumericForm
    c1_Z_plus: NumericForm
    c1_V_minus: NumericForm
    c1_H_minus: NumericForm
    c1_Z_minus: NumericForm

    def relation_residual(self) -> float:
        """Largest violation of ``c1(H)=c1(V)``, ``c1(Z,J+)=2c1(V)``, ``c1(Z,J-)=0``, ``c1(H,J-)=-c1(V,J-)``."""
        return max(
            (self.c1_H_plus - self.c1_V_plus).max_abs(),
            (self.c1_Z_plus - 2 * self.c1_V_plus).max_abs(),
            self.c1_Z_minus.max_abs(),
            (self.c1_H_minus + self.c1_V_minus).max_abs(),
        )


def connection_curvature_trace(R: FrameCurvature | np.ndarray) -> ChernForms:
    F = horizontal_curvature(R) / (2.0 * np.pi)
    c1V = _two_form6(F, FIBER_COEFF)
    out = ChernForms(
        horizontal=F,
        fiber_coeff=FIBER_COEFF,
        c1_V_plus=c1V,
        c1_H_plus=c1V,
        c1_Z_plus=c1V + c1V,
        c1_V_minus=-c1V,
        c1_H_minus=c1V,
        c1_Z_minus=c1V - c1V,
    )
    if out.relation_residual() > 1e-12 * max(1.0, c1V.max_abs()):
        raise ArithmeticError("Chern form relations violated")
    return out


@dataclass(frozen=True)
class ChernData:
    D: np.ndarray
    definiteness: DefinitenessClass
    one_one_defect: float
    wedge_square_coeff: float
    c1_fiber_coeff: float


def chern_data(R: FrameCurvature) -> ChernData:
    blocks = blocks_from_frame_curvature(R, check=False)
    D = definiteness_operator(blocks)
    return ChernData(D, classify_definiteness(D), one_one_defect(blocks), wedge_square_coeff(R), FIBER_COEFF)
