"""Metric conditions on the almost Hermitian twistor spaces (Z, g_t, J+/-).

Everything here is pointwise algebra on the curvature blocks seen from one
orthonormal frame.  Forms are written in the formal complex co-frame
``(phi1, phi2, phi3, phi1bar, phi2bar, phi3bar)`` (positions 0..5) where
``phi1 = theta1 + i theta2``, ``phi2 = theta3 + i theta4`` and
``phi3 = theta5 + i theta6``.  Five-forms are ordered as increasing
multi-indices of that co-frame.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .forms import NumericForm, multi_indices, project_type, wedge_all
from .lambda2 import ZERO_TOL, CurvatureBlocks, frame_curvature_from_blocks, zero_tol

P1, P2, P3, Q1, Q2, Q3 = range(6)

HOLOMORPHIC = {"+": (P1, P2, P3), "-": (P1, P2, Q3)}

LAMBDA3_SELFCHECK_TOL = 1e-9


def phi(i: int) -> NumericForm:
    """The basic 1-form in position ``i`` of the formal co-frame."""
    return NumericForm.basis(i)


def _check_sign(sign: str) -> None:
    if sign not in ("+", "-"):
        raise ValueError("sign must be '+' or '-'")


@dataclass(frozen=True)
class LambdaSet:
    """Coefficients of the curvature 2-form rho(Omega) in one frame.

    Attribute names spell the index pattern: ``l1b2b`` is the coefficient of
    ``phi1bar ^ phi2bar``, ``l1b2`` that of ``phi1bar ^ phi2`` and so on.
    """

    l12: complex
    l1b2b: complex
    l11b: complex
    l22b: complex
    l1b2: complex
    l12b: complex
    t: float
    Lambda1: float
    Lambda2: complex
    Lambda3: complex

    @property
    def mixed_sq(self) -> float:
        """``|l11b|^2 + |l22b|^2 + |l1b2|^2 + |l12b|^2``."""
        return float(abs(self.l11b) ** 2 + abs(self.l22b) ** 2 + abs(self.l1b2) ** 2 + abs(self.l12b) ** 2)

    def as_dict(self) -> dict[str, complex]:
        return {
            "l12": self.l12,
            "l1b2b": self.l1b2b,
            "l11b": self.l11b,
            "l22b": self.l22b,
            "l1b2": self.l1b2,
            "l12b": self.l12b,
            "Lambda1": self.Lambda1,
            "Lambda2": self.Lambda2,
            "Lambda3": self.Lambda3,
        }


class LambdaConsistencyError(ArithmeticError):
    pass


def lambda_from_blocks(blocks: CurvatureBlocks, t: float) -> LambdaSet:
    if not t > 0:
        raise ValueError("t must be positive")
    A, B = blocks.A, blocks.B
    a = lambda i, j: A[i - 1, j - 1]  # noqa: E731
    b = lambda i, j: B[i - 1, j - 1]  # noqa: E731
    l12 = 0.25 * (a(2, 2) + a(3, 3))
    l1b2b = 0.25 * (a(2, 2) - a(3, 3) + 2j * a(2, 3))
    l11b = 0.25 * (1j * (a(1, 2) + b(1, 2)) - a(1, 3) - b(1, 3))
    l22b = 0.25 * (1j * (a(1, 2) - b(1, 2)) - a(1, 3) + b(1, 3))
    l1b2 = 0.25 * (1j * (b(2, 3) - b(3, 2)) + b(2, 2) + b(3, 3))
    l12b = 0.25 * (1j * (b(2, 3) + b(3, 2)) + b(2, 2) - b(3, 3))
    t2 = t * t
    mixed = abs(l11b) ** 2 + abs(l22b) ** 2 + abs(l1b2) ** 2 + abs(l12b) ** 2
    Lambda1 = complex(l12 * (1 - 2 * t2 * l12) - 2 * t2 * mixed)
    if abs(Lambda1.imag) > LAMBDA3_SELFCHECK_TOL:
        raise LambdaConsistencyError(f"Lambda1 acquired an imaginary part {Lambda1.imag:.3e}")

    R = frame_curvature_from_blocks(blocks).R
    r = lambda i, j, k, l: R[i - 1, j - 1, k - 1, l - 1]  # noqa: E731
    Lambda2 = 0.5 * t2 * (
        r(1, 2, 1, 3) + r(3, 4, 1, 3) + r(1, 2, 2, 4) + r(3, 4, 2, 4)
        + 1j * (r(1, 2, 1, 4) + r(3, 4, 1, 4) - r(1, 2, 2, 3) - r(3, 4, 2, 3))
    )
    Lambda3 = t2 * (a(1, 2) - 1j * a(1, 3))
    Lambda3_raw = 0.5 * t2 * (
        r(1, 2, 1, 3) + r(3, 4, 1, 3) - r(1, 2, 2, 4) - r(3, 4, 2, 4)
        - 1j * (r(1, 2, 1, 4) + r(3, 4, 1, 4) + r(1, 2, 2, 3) + r(3, 4, 2, 3))
    )
    if abs(Lambda3 - Lambda3_raw) > LAMBDA3_SELFCHECK_TOL * max(1.0, t2 * blocks.norm):
        raise LambdaConsistencyError(
            f"Lambda3 block form and component form disagree by {abs(Lambda3 - Lambda3_raw):.3e}"
        )
    return LambdaSet(
        complex(l12), complex(l1b2b), complex(l11b), complex(l22b), complex(l1b2), complex(l12b),
        float(t), Lambda1.real, complex(Lambda2), complex(Lambda3),
    )


def block_coordinates(lam: LambdaSet) -> dict[str, float]:
    """Recover the block entries that determine the lambda coefficients."""
    s = lam.l11b + lam.l22b
    d = lam.l11b - lam.l22b
    p = lam.l1b2 + lam.l12b
    m = lam.l1b2 - lam.l12b
    return {
        "A12": 2 * s.imag,
        "A13": -2 * s.real,
        "A22": 2 * lam.l12.real + 2 * lam.l1b2b.real,
        "A23": 2 * lam.l1b2b.imag,
        "A33": 2 * lam.l12.real - 2 * lam.l1b2b.real,
        "B12": 2 * d.imag,
        "B13": -2 * d.real,
        "B22": 2 * p.real,
        "B23": 2 * p.imag,
        "B32": -2 * m.imag,
        "B33": 2 * m.real,
    }


# ---------------------------------------------------------------------------
# forms in the formal co-frame
# ---------------------------------------------------------------------------


def rho_form(lam: LambdaSet) -> NumericForm:
    return (
        lam.l12 * (phi(P1) ^ phi(P2))
        + lam.l1b2b * (phi(Q1) ^ phi(Q2))
        + lam.l11b * (phi(P1) ^ phi(Q1))
        + lam.l22b * (phi(P2) ^ phi(Q2))
        + lam.l1b2 * (phi(Q1) ^ phi(P2))
        + lam.l12b * (phi(P1) ^ phi(Q2))
    )


def big_lambda_form(lam: LambdaSet) -> NumericForm:
    """``rho(Omega) - l12 phi1 ^ phi2``."""
    return rho_form(lam) - lam.l12 * (phi(P1) ^ phi(P2))


def kahler_form(sign: str, t: float) -> NumericForm:
    _check_sign(sign)
    eps = 1.0 if sign == "+" else -1.0
    return 0.5j * (
        (phi(P1) ^ phi(Q1)) + (phi(P2) ^ phi(Q2)) + eps * 4 * t * t * (phi(P3) ^ phi(Q3))
    )


def dK_coefficients(lam: LambdaSet, sign: str) -> NumericForm:
    """Exterior derivative of the Kaehler form of (g_t, J+/-) as a 3-form."""
    _check_sign(sign)
    eps = 1.0 if sign == "+" else -1.0
    t2 = lam.t**2
    c = -1 + eps * 2 * t2 * lam.l12
    Lam = big_lambda_form(lam)
    return -1j * (phi(P3) ^ (c * (phi(Q1) ^ phi(Q2)) + eps * 2 * t2 * conj_form(Lam))) + 1j * (
        phi(Q3) ^ (c * (phi(P1) ^ phi(P2)) + eps * 2 * t2 * Lam)
    )


def kdk_form(lam: LambdaSet, sign: str) -> NumericForm:
    """``K ^ dK``, whose vanishing is the balanced condition."""
    return kahler_form(sign, lam.t) ^ dK_coefficients(lam, sign)


def kdk_expected(lam: LambdaSet, sign: str) -> NumericForm:
    """Closed form ``+/- t^2 {conj(s) phi1^phi1b^phi2b^phi2^phi3 + s phi1^phi1b^phi2b^phi2^phi3b}``."""
    eps = 1.0 if sign == "+" else -1.0
    s = lam.l11b + lam.l22b
    base = [P1, Q1, Q2, P2]
    return eps * lam.t**2 * (
        np.conj(s) * wedge_all(*(phi(i) for i in base + [P3]))
        + s * wedge_all(*(phi(i) for i in base + [Q3]))
    )


# ---------------------------------------------------------------------------
# scalar conditions
# ---------------------------------------------------------------------------


def balanced_defect(lam: LambdaSet) -> float:
    return float(abs(lam.l11b + lam.l22b))


def kahler_defect(lam: LambdaSet, sign: str) -> float:
    _check_sign(sign)
    eps = -1.0 if sign == "+" else 1.0
    return float(
        max(
            abs(1 + eps * 2 * lam.t**2 * lam.l12),
            abs(lam.l1b2b),
            abs(lam.l11b),
            abs(lam.l22b),
            abs(lam.l1b2),
            abs(lam.l12b),
        )
    )


def _r1212_r3434_2r1234(blocks: CurvatureBlocks) -> float:
    return 2.0 * float(blocks.A[0, 0])


def gauduchon1_plus(blocks: CurvatureBlocks, lam: LambdaSet) -> float:
    """Left side of the first-Gauduchon obstruction for J+.

    Meaningful as the obstruction only for anti-self-dual metrics with
    constant scalar curvature; see :func:`gauduchon_applicable`.
    """
    t2 = lam.t**2
    return float(
        (2 - 8 * t2 * lam.l12 + t2 * _r1212_r3434_2r1234(blocks) - 4 * t2 * lam.Lambda1).real
    )


def gauduchon1_minus(blocks: CurvatureBlocks, lam: LambdaSet) -> float:
    """Left side of the first-Gauduchon obstruction for J-; same validity caveat."""
    t2 = lam.t**2
    return float(
        (-4 * t2 * lam.l12 + t2 * _r1212_r3434_2r1234(blocks) - 8 * t2 * t2 * lam.mixed_sq).real
    )


def gauduchon_applicable(blocks_samples: list[CurvatureBlocks], tol: float = ZERO_TOL) -> bool:
    """ASD at every sample and scalar curvature constant across them."""
    if not blocks_samples:
        return False
    s = np.array([b.s for b in blocks_samples])
    const = (s.max() - s.min()) < 1e-6 * max(1.0, float(np.max(np.abs(s))))
    return bool(const and all(b.is_asd(tol) for b in blocks_samples))


# ---------------------------------------------------------------------------
# type decomposition
# ---------------------------------------------------------------------------


def type_decomposition_coeffs(lam: LambdaSet) -> dict[str, NumericForm]:
    """The four 4-forms obtained by applying d^{2,-1} after one type component of dK."""
    t2 = lam.t**2
    s = lam.l11b + lam.l22b
    return {
        "d21_dbar_Kplus": NumericForm.zero(4),
        "d21_dm12_Kplus": 2j * t2 * abs(lam.l1b2b) ** 2 * wedge_all(phi(P1), phi(P2), phi(Q1), phi(Q2)),
        "d21_dbar_Kminus": 2j * t2 * np.conj(s) * wedge_all(phi(P1), phi(P2), phi(Q3), phi(P3)),
        "d21_dm12_Kminus": 1j
        * (1 + 2 * t2 * lam.l12)
        * (
            lam.l12 * wedge_all(phi(Q1), phi(P1), phi(P2), phi(Q2))
            + wedge_all(phi(Q2), phi(P2), phi(Q3), phi(P3))
            + wedge_all(phi(P3), phi(Q3), phi(P1), phi(Q1))
        ),
    }


def d21(form: NumericForm, lam: LambdaSet, sign: str) -> NumericForm:
    """The algebraic operator d^{2,-1} for J+/- acting on a formal form.

    It is a graded derivation, linear over functions, fixed by its values on
    the (0,1) generators (read off the structure equations):

    * J+: ``phi3bar -> conj(l1b2b) phi1 ^ phi2``; the others vanish.
    * J-: ``phi1bar -> phi2 ^ phi3bar``, ``phi2bar -> phi3bar ^ phi1``,
      ``phi3 -> l12 phi1 ^ phi2``.
    """
    _check_sign(sign)
    if sign == "+":
        images = {Q3: np.conj(lam.l1b2b) * (phi(P1) ^ phi(P2))}
    else:
        images = {
            Q1: phi(P2) ^ phi(Q3),
            Q2: phi(Q3) ^ phi(P1),
            P3: lam.l12 * (phi(P1) ^ phi(P2)),
        }
    out = NumericForm.zero(form.degree + 1)
    for c, I in zip(form.coeffs, multi_indices(6, form.degree)):
        if c == 0:
            continue
        for pos, g in enumerate(I):
            img = images.get(g)
            if img is None:
                continue
            left = [phi(i) for i in I[:pos]]
            right = [phi(i) for i in I[pos + 1 :]]
            term = wedge_all(*left, img, *right) if (left or right) else img
            out = out + ((-1) ** pos) * c * term
    return out


def d12(form: NumericForm, lam: LambdaSet, sign: str) -> NumericForm:
    """d^{-1,2}, the complex conjugate of :func:`d21` (d is a real operator)."""
    return conj_form(d21(conj_form(form), lam, sign))


_CONJ_PERM = {P1: Q1, P2: Q2, P3: Q3, Q1: P1, Q2: P2, Q3: P3}


def conj_form(form: NumericForm) -> NumericForm:
    """Complex conjugate of a formal form (swaps phi_i and phi_i bar)."""
    out = NumericForm.zero(form.degree)
    for c, I in zip(form.coeffs, multi_indices(6, form.degree)):
        if c != 0:
            out = out + np.conj(c) * NumericForm.basis([_CONJ_PERM[i] for i in I])
    return out


def type_parts(form: NumericForm, sign: str) -> dict[tuple[int, int], NumericForm]:
    """All nonzero (p,q) components of a formal form for J+/-."""
    hol = HOLOMORPHIC[sign]
    k = form.degree
    return {(p, k - p): project_type(form, hol, (p, k - p)) for p in range(k + 1)}


# ---------------------------------------------------------------------------
# ASD Einstein specialisations
# ---------------------------------------------------------------------------


@dataclass
class AsdEinsteinReport:
    applicable: bool
    reason: str = ""
    s: float = float("nan")
    t: float = float("nan")
    dbar_Kminus: NumericForm | None = None
    d_Kminus: NumericForm | None = None
    ddbar_Kplus: NumericForm | None = None
    d12_d21_Kminus: NumericForm | None = None
    checks: dict[str, float] = field(default_factory=dict)

    def coefficient_table(self) -> dict[str, complex]:
        if not self.applicable:
            return {}
        f = self.ddbar_Kplus
        return {
            "phi2 phi2b phi3 phi3b": f.coefficient((P2, Q2, P3, Q3)) / 1j,
            "phi3 phi3b phi1 phi1b": f.coefficient((P3, Q3, P1, Q1)) / 1j,
            "phi1 phi1b phi2 phi2b": f.coefficient((P1, Q1, P2, Q2)) / 1j,
        }


def ddbar_kplus_asd_einstein(s: float, t: float) -> NumericForm:
    f = 1 - s * t * t / 12
    return 1j * f * (
        wedge_all(phi(P2), phi(Q2), phi(P3), phi(Q3))
        + wedge_all(phi(P3), phi(Q3), phi(P1), phi(Q1))
        - s / 24 * wedge_all(phi(P1), phi(Q1), phi(P2), phi(Q2))
    )


def asd_einstein_identities(blocks: CurvatureBlocks, t: float, tol: float = ZERO_TOL) -> AsdEinsteinReport:
    if not blocks.is_asd(tol):
        return AsdEinsteinReport(False, f"not anti-self-dual (asd_defect={blocks.asd_defect:.3e})")
    if not blocks.is_einstein(tol):
        return AsdEinsteinReport(False, f"not Einstein (einstein_defect={blocks.einstein_defect:.3e})")
    s = blocks.s
    lam = lambda_from_blocks(blocks, t)
    dKm = type_parts(dK_coefficients(lam, "-"), "-")
    dbar = dKm[(1, 2)]
    d = dKm[(2, 1)]
    ddbar = ddbar_kplus_asd_einstein(s, t)
    g = 1 + s * t * t / 12
    d12d21 = 1j * g * (
        wedge_all(phi(P2), phi(Q2), phi(Q3), phi(P3))
        + wedge_all(phi(Q3), phi(P3), phi(P1), phi(Q1))
        + s / 24 * wedge_all(phi(P1), phi(Q1), phi(P2), phi(Q2))
    )
    # consistency of the ASD Einstein table against the general formulas
    general = ddbar_kplus_general(blocks, lam)
    checks = {
        "dbar_Kminus": dbar.max_abs(),
        "d_Kminus": d.max_abs(),
        "ddbar_Kplus_vs_general": (ddbar - general).max_abs(),
        "d12_d21_Kminus_vs_operator": (
            d12d21 - d12(type_parts(dK_coefficients(lam, "-"), "-")[(3, 0)], lam, "-")
        ).max_abs(),
    }
    return AsdEinsteinReport(True, "", s, t, dbar, d, ddbar, d12d21, checks)


def ddbar_kplus_general(blocks: CurvatureBlocks, lam: LambdaSet) -> NumericForm:
    """``dd-bar K+`` for an anti-self-dual metric with constant scalar curvature."""
    R = frame_curvature_from_blocks(blocks).R
    t2 = lam.t**2
    c2 = 1 - 4 * t2 * lam.l12 + t2 * (R[2, 3, 2, 3] + R[0, 1, 2, 3])
    c1 = 1 - 4 * t2 * lam.l12 + t2 * (R[2, 3, 0, 1] + R[0, 1, 0, 1])
    return (
        1j * c2 * wedge_all(phi(P2), phi(Q2), phi(P3), phi(Q3))
        + 1j * c1 * wedge_all(phi(P1), phi(Q1), phi(P3), phi(Q3))
        + 1j * lam.Lambda1 * wedge_all(phi(P1), phi(P2), phi(Q1), phi(Q2))
        + lam.Lambda2 * wedge_all(phi(P1), phi(Q2), phi(P3), phi(Q3))
        + np.conj(lam.Lambda2) * wedge_all(phi(Q1), phi(P2), phi(P3), phi(Q3))
    )


def t_star(blocks: CurvatureBlocks) -> float | None:
    s = blocks.s
    return float(np.sqrt(12.0 / s)) if s > 0 else None


class SymplecticClass(str, enum.Enum):
    plus_and_minus = "plus_and_minus"
    minus_only = "minus_only"
    neither = "neither"


def classify_12_symplectic(blocks: CurvatureBlocks, t: float, tol: float = ZERO_TOL) -> SymplecticClass:
    if not t > 0:
        raise ValueError("t must be positive")
    if not (blocks.is_asd(tol) and blocks.is_einstein(tol)):
        return SymplecticClass.neither
    s = blocks.s
    if s > 0 and abs(t * t - 12.0 / s) < zero_tol(abs(12.0 / s), tol):
        return SymplecticClass.plus_and_minus
    return SymplecticClass.minus_only


@dataclass(frozen=True)
class TwistorDefects:
    t: float
    balanced_defect: float
    kahler_plus_defect: float
    kahler_minus_defect: float
    gauduchon1_plus: float
    gauduchon1_minus: float
    symplectic12_class: SymplecticClass


def twistor_defects(blocks: CurvatureBlocks, t: float, tol: float = ZERO_TOL) -> TwistorDefects:
    lam = lambda_from_blocks(blocks, t)
    return TwistorDefects(
        t=float(t),
        balanced_defect=balanced_defect(lam),
        kahler_plus_defect=kahler_defect(lam, "+"),
        kahler_minus_defect=kahler_defect(lam, "-"),
        gauduchon1_plus=gauduchon1_plus(blocks, lam),
        gauduchon1_minus=gauduchon1_minus(blocks, lam),
        symplectic12_class=classify_12_symplectic(blocks, t, tol),
    )
