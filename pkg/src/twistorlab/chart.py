"""A concrete 6-dimensional chart of the twistor space and numerical checks on it.

Chart coordinates are ``p = (x1, x2, x3, x4, y1, y2)``: ``x`` a point of the
base chart and ``y`` a stereographic coordinate on the fiber sphere of unit
self-dual 2-forms.  The local section is ``u(x, y) = e(x) a(n(y))`` with
``e`` the Gram-Schmidt frame and ``a`` a quaternion lift rotating ``E1+`` to
``n``.  Every pulled-back 1-form is stored by its values on the six
coordinate directions, and every derivative of ``u`` is analytic, so the only
discretisation error in the checks below comes from :func:`numerical_d`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .curvature import FrameCurvature, PointGeometry, frame_curvature, frame_derivative, point_geometry
from .dsl import MetricSpec
from .forms import NumericForm, numerical_d, project_type
from .lambda2 import E_PLUS, CurvatureBlocks, blocks_from_frame_curvature
from . import twistor as tw

DEFAULT_H = 1e-3
ROUNDOFF_FLOOR = 1e-10

# J2 = E12 + E34 with (1,2) entry -1 and (2,1) entry +1
J2 = np.array([[0.0, -1, 0, 0], [1, 0, 0, 0], [0, 0, 0, -1], [0, 0, 1, 0]])


class ChartError(ValueError):
    """Point outside the base domain or fiber chart."""


# ---------------------------------------------------------------------------
# fiber chart
# ---------------------------------------------------------------------------


def quaternion_matrix(q: Sequence[float]) -> np.ndarray:
    """Matrix of left multiplication by the quaternion ``q`` on R^4 = H."""
    q0, q1, q2, q3 = q
    return np.array(
        [
            [q0, -q1, -q2, -q3],
            [q1, q0, -q3, q2],
            [q2, q3, q0, -q1],
            [q3, -q2, q1, q0],
        ]
    )


def _half_angle(n: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Unit quaternion rotating E1+ to ``n`` and its Jacobian ``dq/dn`` (4x3)."""
    if 1.0 + n[0] < 1e-12:
        raise ChartError("fiber point is the antipode of the chart centre")
    v = np.array([1.0 + n[0], 0.0, -n[2], n[1]])
    N = np.sqrt(2.0 * (1.0 + n[0]))
    dq = np.zeros((4, 3))
    dq[:, 0] = np.array([1.0, 0, 0, 0]) / N - v / N**3
    dq[3, 1] = 1.0 / N
    dq[2, 2] = -1.0 / N
    return v / N, dq


def quaternion_lift(n: Sequence[float]) -> np.ndarray:
    """An element ``a`` of SO(4) whose action on Lambda+ sends ``E1+`` to ``n``."""
    n = np.asarray(n, dtype=float)
    if abs(np.linalg.norm(n) - 1.0) > 1e-9:
        raise ChartError("n must be a unit vector")
    q, _ = _half_angle(n)
    return quaternion_matrix(q)


def _lift_jac(n: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    q, dq = _half_angle(n)
    return quaternion_matrix(q), np.array([quaternion_matrix(dq[:, k]) for k in range(3)])


_LJ = quaternion_matrix([0.0, 0.0, 1.0, 0.0])
_FLIP = np.diag([-1.0, 1.0, -1.0])


def quaternion_lift_second(n: Sequence[float]) -> np.ndarray:
    """Lift for the second chart, smooth away from ``n = +E1+``."""
    n = np.asarray(n, dtype=float)
    return _LJ @ quaternion_lift(_FLIP @ n)


def _lift_jac_second(n: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    a, da = _lift_jac(_FLIP @ n)
    da = np.einsum("kij,km->mij", da, _FLIP)
    return _LJ @ a, np.array([_LJ @ d for d in da])


def stereographic(y: Sequence[float], chart: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """Point ``n(y)`` of the unit sphere and its Jacobian ``dn/dy`` (3x2).

    Chart 1 sends ``y = 0`` to ``+E1+``; chart 2 sends it to ``-E1+``.
    """
    y1, y2 = float(y[0]), float(y[1])
    if not (np.isfinite(y1) and np.isfinite(y2)):
        raise ChartError("fiber coordinate is not finite")
    r2 = y1 * y1 + y2 * y2
    d = 1.0 + r2
    n = np.array([(1.0 - r2) / d, 2 * y1 / d, 2 * y2 / d])
    dn = np.empty((3, 2))
    for k, yk in enumerate((y1, y2)):
        dn[0, k] = -4.0 * yk / d**2
        dn[1, k] = (2.0 * (k == 0)) / d - 4.0 * y1 * yk / d**2
        dn[2, k] = (2.0 * (k == 1)) / d - 4.0 * y2 * yk / d**2
    if chart == 2:
        n[0], dn[0] = -n[0], -dn[0]
    return n, dn


# ---------------------------------------------------------------------------
# section frame
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TwistorChartPoint:
    x: np.ndarray
    y: np.ndarray

    @classmethod
    def from_vector(cls, p: Sequence[float]) -> "TwistorChartPoint":
        p = np.asarray(p, dtype=float)
        return cls(p[:4].copy(), p[4:6].copy())

    def vector(self) -> np.ndarray:
        return np.concatenate([self.x, self.y])


@dataclass(frozen=True)
class SectionFrame:
    """The section ``u`` at one chart point and its pulled-back 1-forms.

    ``theta[a, i]`` is ``theta^a(d/dp^i)`` and ``omega[a, b, i]`` is
    ``omega^a_b(d/dp^i)``.
    """

    p: np.ndarray
    t: float
    u: np.ndarray
    du: np.ndarray
    theta: np.ndarray
    omega: np.ndarray
    geometry: PointGeometry = field(repr=False)

    @property
    def theta5(self) -> np.ndarray:
        w = self.omega
        return 0.5 * (w[0, 2] - w[1, 3])

    @property
    def theta6(self) -> np.ndarray:
        w = self.omega
        return 0.5 * (w[0, 3] + w[1, 2])

    @property
    def psi3(self) -> np.ndarray:
        w = self.omega
        return 0.5 * (w[0, 2] + w[1, 3] + 1j * (w[1, 2] - w[0, 3]))

    @property
    def phi(self) -> np.ndarray:
        th = self.theta
        return np.array(
            [th[0] + 1j * th[1], th[2] + 1j * th[3], self.theta5 + 1j * self.theta6]
        )

    @property
    def coframe(self) -> np.ndarray:
        """Rows ``phi1, phi2, phi3, phi1bar, phi2bar, phi3bar`` on the chart directions."""
        ph = self.phi
        return np.vstack([ph, ph.conj()])

    @property
    def real_coframe(self) -> np.ndarray:
        """Rows ``theta1..theta4, theta5, theta6``."""
        return np.vstack([self.theta, self.theta5, self.theta6])

    @property
    def orthonormal_coframe(self) -> np.ndarray:
        """Rows ``theta1..theta4, 2t theta5, 2t theta6``: orthonormal for g_t."""
        return np.vstack([self.theta, 2 * self.t * self.theta5, 2 * self.t * self.theta6])

    @property
    def curvature(self) -> FrameCurvature:
        return frame_curvature(self.geometry.R, self.u)

    @property
    def blocks(self) -> CurvatureBlocks:
        return blocks_from_frame_curvature(self.curvature)

    def lambdas(self) -> tw.LambdaSet:
        return tw.lambda_from_blocks(self.blocks, self.t)


class TwistorChart:
    """Section frames over one metric chart, with the base geometry cached per ``x``.

    ``corrupt_omega`` rescales the pulled-back connection; it exists only as
    a negative control for the structure-equation checks.
    """

    def __init__(self, spec: MetricSpec, t: float, chart: int = 1, corrupt_omega: float | None = None):
        if not t > 0:
            raise ValueError("t must be positive")
        if chart not in (1, 2):
            raise ValueError("chart must be 1 or 2")
        self.spec = spec
        self.t = float(t)
        self.chart = chart
        self.corrupt_omega = corrupt_omega
        self._geometry = lru_cache(maxsize=256)(self._base)

    def _base(self, x: tuple[float, ...]):
        geo = point_geometry(self.spec, x)
        de = frame_derivative(geo.g, geo.dg, geo.frame)
        return geo, de

    def section(self, p: Sequence[float]) -> SectionFrame:
        p = np.asarray(p, dtype=float)
        x, y = p[:4], p[4:6]
        if not self.spec.contains(x):
            raise ChartError(f"base point {x.tolist()} outside the chart domain")
        geo, de = self._geometry(tuple(float(v) for v in x))
        n, dn = stereographic(y, self.chart)
        a, da_dn = (_lift_jac if self.chart == 1 else _lift_jac_second)(n)
        e = geo.frame
        u = e @ a
        du = np.empty((6, 4, 4))
        for k in range(4):
            du[k] = de[k] @ a
        for j in range(2):
            du[4 + j] = e @ np.einsum("kab,k->ab", da_dn, dn[:, j])
        uinv = u.T @ geo.g
        theta = np.zeros((4, 6))
        theta[:, :4] = uinv
        omega = np.empty((4, 4, 6))
        for c in range(6):
            conn = du[c].copy()
            if c < 4:
                conn += geo.Gamma[:, c, :] @ u
            omega[:, :, c] = uinv @ conn
        if self.corrupt_omega is not None:
            omega = omega * self.corrupt_omega
        return SectionFrame(p.copy(), self.t, u, du, theta, omega, geo)

    # -- form fields -------------------------------------------------------

    def theta_forms(self, p) -> list[NumericForm]:
        sec = self.section(p)
        return [NumericForm.covector(r) for r in sec.theta]

    def omega_forms(self, p) -> list[list[NumericForm]]:
        sec = self.section(p)
        return [[NumericForm.covector(sec.omega[a, b]) for b in range(4)] for a in range(4)]

    def phi3_form(self, p) -> NumericForm:
        return NumericForm.covector(self.section(p).phi[2])

    def kform(self, p, sign: str) -> NumericForm:
        return kform(self.section(p), sign)


def section_frame(spec: MetricSpec, p: TwistorChartPoint | Sequence[float], t: float, chart: int = 1) -> SectionFrame:
    v = p.vector() if isinstance(p, TwistorChartPoint) else p
    return TwistorChart(spec, t, chart).section(v)


def kform(sec: SectionFrame, sign: str) -> NumericForm:
    """The Kaehler form of (g_t, J+/-) as a real 2-form on the chart."""
    eps = {"+": 1.0, "-": -1.0}[sign]
    ph = [NumericForm.covector(r) for r in sec.phi]
    K = 0.5j * (
        (ph[0] ^ ph[0].conj()) + (ph[1] ^ ph[1].conj()) + eps * 4 * sec.t**2 * (ph[2] ^ ph[2].conj())
    )
    return K.real


def type_project(F: NumericForm, sec: SectionFrame, sign: str, pq: tuple[int, int]) -> NumericForm:
    """The (p,q) component of a chart form for J+/- at the section point."""
    Z = sec.coframe
    if np.linalg.cond(Z) > 1e12:
        raise ChartError("degenerate complex co-frame")
    abstract = F.in_coframe(Z)
    return project_type(abstract, tw.HOLOMORPHIC[sign], pq).pullback_coeffs(Z)


def in_abstract(F: NumericForm, sec: SectionFrame) -> NumericForm:
    """A chart form re-expressed in the formal co-frame ``phi1..phi3bar``."""
    return F.in_coframe(sec.coframe)


# ---------------------------------------------------------------------------
# metric g_t and J realised independently of the co-frame
# ---------------------------------------------------------------------------


def _sigma_and_derivative(sec: SectionFrame) -> tuple[np.ndarray, np.ndarray]:
    """Coordinate components of the fiber 2-form ``sigma = u E1+ u^T`` (lowered) and its chart derivatives."""
    geo = sec.geometry
    g, u, E = geo.g, sec.u, E_PLUS[0]
    sigma = g @ u @ E @ u.T @ g
    dsig = np.empty((6, 4, 4))
    for c in range(6):
        dg = geo.dg[c] if c < 4 else np.zeros((4, 4))
        du = sec.du[c]
        dsig[c] = dg @ u @ E @ u.T @ g + g @ du @ E @ u.T @ g + g @ u @ E @ du.T @ g + g @ u @ E @ u.T @ dg
    return sigma, dsig


def metric_gt(sec: SectionFrame) -> np.ndarray:
    """``g_t = pi* g + t^2 |nabla sigma|^2`` on the six chart directions.

    ``sigma`` is the tautological unit self-dual 2-form; the fiber term uses
    the 2-form norm ``1/2 g^ik g^jl a_ij b_kl``.
    """
    geo = sec.geometry
    g, Gamma = geo.g, geo.Gamma
    ginv = np.linalg.inv(g)
    sigma, dsig = _sigma_and_derivative(sec)
    nab = np.empty((6, 4, 4))
    for c in range(6):
        nab[c] = dsig[c]
        if c < 4:
            G = Gamma[:, c, :]  # G[m, k] = Gamma^m_ck
            nab[c] -= G.T @ sigma + sigma @ G
    G6 = np.zeros((6, 6))
    G6[:4, :4] = g
    G6 += sec.t**2 * 0.5 * np.einsum("ik,jl,aij,bkl->ab", ginv, ginv, nab, nab)
    return G6


def gram_residual(sec: SectionFrame) -> float:
    """Deviation from the identity of the g_t-Gram matrix of the orthonormal co-frame."""
    Th = sec.orthonormal_coframe
    Thinv = np.linalg.inv(Th)
    return float(np.max(np.abs(Thinv.T @ metric_gt(sec) @ Thinv - np.eye(6))))


def almost_complex_structure(sec: SectionFrame, sign: str) -> np.ndarray:
    """``J+/-`` on chart vectors, from the declared (1,0) co-frame."""
    J0 = np.zeros((6, 6))
    for i in (0, 2, 4):
        J0[i, i + 1], J0[i + 1, i] = -1.0, 1.0
    if sign == "-":
        J0[4:, 4:] *= -1
    Th = sec.orthonormal_coframe
    return np.linalg.solve(Th, J0 @ Th)


def compatibility_residual(sec: SectionFrame, sign: str) -> dict[str, float]:
    """Checks ``K(X, Y) = g_t(JX, Y)``, ``J^2 = -1`` and ``K|horizontal = sqrt2 sigma``."""
    J = almost_complex_structure(sec, sign)
    G = metric_gt(sec)
    K = kform(sec, sign).to_dense().real
    sigma, _ = _sigma_and_derivative(sec)
    # horizontal lifts of the coordinate vectors d/dx^k: kill theta5, theta6
    V = np.vstack([sec.theta5, sec.theta6])
    hor = np.zeros((6, 4))
    for k in range(4):
        v = np.zeros(6)
        v[k] = 1.0
        corr, *_ = np.linalg.lstsq(V[:, 4:], -V @ v, rcond=None)
        v[4:] = corr
        hor[:, k] = v
    return {
        "kahler_vs_metric": float(np.max(np.abs(K - J.T @ G))),
        "j_squared": float(np.max(np.abs(J @ J + np.eye(6)))),
        "horizontal_vs_sigma": float(np.max(np.abs(hor.T @ K @ hor - np.sqrt(2.0) * sigma))),
    }


# ---------------------------------------------------------------------------
# numerical checks
# ---------------------------------------------------------------------------


@dataclass
class Residual:
    name: str
    h: float
    residual: float
    residual_half: float | None = None
    threshold: float = float("nan")

    @property
    def ratio(self) -> float | None:
        if self.residual_half is None or self.residual_half <= 0:
            return None
        return self.residual / self.residual_half

    @property
    def converges(self) -> bool:
        """Second-order convergence, or a residual already at the roundoff floor."""
        if self.residual < ROUNDOFF_FLOOR:
            return True
        r = self.ratio
        return r is not None and 3.5 <= r <= 4.5

    @property
    def passed(self) -> bool:
        return self.residual < self.threshold

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "h": self.h,
            "residual": self.residual,
            "residual_half": self.residual_half,
            "ratio": self.ratio,
            "threshold": self.threshold,
            "passed": self.passed,
            "converges": self.converges,
        }


def coframe_size(F: NumericForm, sec: SectionFrame) -> float:
    """Largest coefficient of a chart form in the formal co-frame ``phi1..phi3bar``.

    Residuals are measured here rather than on raw chart coefficients so
    that they do not depend on how the chart coordinates are scaled.
    """
    return F.in_coframe(sec.coframe).max_abs()


def _residual(name: str, compute: Callable[[float], float], h: float, refine: bool) -> Residual:
    r = compute(h)
    rh = compute(h / 2) if refine else None
    return Residual(name, h, r, rh, 10 * h * h)


def _check_stencil(chart: TwistorChart, p: np.ndarray, h: float) -> None:
    lo = np.array([a for a, _ in chart.spec.domain])
    hi = np.array([b for _, b in chart.spec.domain])
    if np.any(p[:4] - 2 * h <= lo) or np.any(p[:4] + 2 * h >= hi):
        raise ChartError("stencil leaves the chart domain")


def predicted_dK(sec: SectionFrame, sign: str) -> NumericForm:
    return tw.dK_coefficients(sec.lambdas(), sign).pullback_coeffs(sec.coframe)


def compare_dK(
    spec: MetricSpec, p: Sequence[float], t: float, sign: str, h: float = DEFAULT_H, refine: bool = True, chart: int = 1
) -> Residual:
    ch = TwistorChart(spec, t, chart)
    p = np.asarray(p, dtype=float)
    _check_stencil(ch, p, h)
    sec = ch.section(p)
    pred = predicted_dK(sec, sign)

    def run(hh: float) -> float:
        return coframe_size(numerical_d(lambda q: ch.kform(q, sign), p, hh) - pred, sec)

    return _residual(f"dK{sign}", run, h, refine)


def _structure_residuals(ch: TwistorChart, p: np.ndarray, hh: float) -> dict[str, float]:
    sec = ch.section(p)
    th = [NumericForm.covector(r) for r in sec.theta]
    om = [[NumericForm.covector(sec.omega[a, b]) for b in range(4)] for a in range(4)]
    dth = [numerical_d(lambda q, a=a: ch.theta_forms(q)[a], p, hh) for a in range(4)]
    first = max(
        coframe_size(dth[a] + sum((om[a][b] ^ th[b] for b in range(4)), NumericForm.zero(2)), sec)
        for a in range(4)
    )
    R = sec.curvature.R
    Omega = [
        [NumericForm.from_dense(np.einsum("cd,ci,dj->ij", R[a, b], sec.theta, sec.theta)) for b in range(4)]
        for a in range(4)
    ]
    second = 0.0
    for a in range(4):
        for b in range(a + 1, 4):
            dom = numerical_d(lambda q, a=a, b=b: ch.omega_forms(q)[a][b], p, hh)
            ww = sum((om[a][c] ^ om[c][b] for c in range(4)), NumericForm.zero(2))
            second = max(second, coframe_size(dom + ww - Omega[a][b], sec))
    phi3 = NumericForm.covector(sec.phi[2])
    rho = 0.5 * (Omega[0][2] - Omega[1][3] + 1j * (Omega[1][2] + Omega[0][3]))
    dphi3 = numerical_d(ch.phi3_form, p, hh)
    third = coframe_size(dphi3 - 1j * ((om[0][1] + om[2][3]) ^ phi3) - rho, sec)
    return {"dtheta": first, "domega": second, "dphi3": third}


def verify_structure_equations(
    spec: MetricSpec, p: Sequence[float], t: float, h: float = DEFAULT_H, refine: bool = True,
    corrupt_omega: float | None = None, chart: int = 1,
) -> list[Residual]:
    ch = TwistorChart(spec, t, chart, corrupt_omega)
    p = np.asarray(p, dtype=float)
    _check_stencil(ch, p, h)
    r1 = _structure_residuals(ch, p, h)
    r2 = _structure_residuals(ch, p, h / 2) if refine else {}
    return [Residual(k, h, v, r2.get(k), 10 * h * h) for k, v in r1.items()]


def numerical_ddbar_kplus(ch: TwistorChart, p: np.ndarray, h: float) -> NumericForm:
    """``dd-bar K+`` as the (2,2) part of d of the (1,2) part of dK+, both by stencils."""

    def dbar_K(q):
        sec = ch.section(q)
        return type_project(numerical_d(lambda r: ch.kform(r, "+"), q, h), sec, "+", (1, 2))

    sec = ch.section(p)
    return type_project(numerical_d(dbar_K, p, h), sec, "+", (2, 2))


@dataclass
class DdbarReport:
    residual: Residual
    measured: NumericForm  # in the formal co-frame
    predicted: NumericForm
    gauduchon_measured: float
    gauduchon_formula: float


def check_ddbar_kplus(spec: MetricSpec, p: Sequence[float], t: float, h: float = DEFAULT_H, refine: bool = True) -> DdbarReport:
    """Compare the stencil ``dd-bar K+`` with the closed form valid for ASD metrics of constant ``s``.

    Also returns ``dd-bar K+ ^ K+`` expressed through the Gauduchon left side
    (``-1/2`` times it on ``phi1 phi1b phi2 phi2b phi3 phi3b``).
    """
    ch = TwistorChart(spec, t)
    p = np.asarray(p, dtype=float)
    _check_stencil(ch, p, 2 * h)
    sec = ch.section(p)
    blocks = sec.blocks
    lam = sec.lambdas()
    pred = tw.ddbar_kplus_general(blocks, lam)
    pred_chart = pred.pullback_coeffs(sec.coframe)
    measured = numerical_ddbar_kplus(ch, p, h)

    def run(hh: float) -> float:
        m = measured if hh == h else numerical_ddbar_kplus(ch, p, hh)
        return coframe_size(m - pred_chart, sec)

    res = _residual("ddbar_K+", run, h, refine)
    abstract = in_abstract(measured, sec)
    six = abstract ^ tw.kahler_form("+", t)
    gm = float((-2.0 * six.coefficient((0, 3, 1, 4, 2, 5))).real)
    return DdbarReport(res, abstract, pred, gm, tw.gauduchon1_plus(blocks, lam))


def numerical_wedge_square(spec: MetricSpec, p: Sequence[float], t: float = 1.0, h: float = DEFAULT_H) -> float:
    """Coefficient of ``theta1234`` in ``(Omega^1_2 + Omega^3_4)^2`` with the curvature from stencils of omega."""
    ch = TwistorChart(spec, t)
    p = np.asarray(p, dtype=float)
    _check_stencil(ch, p, h)
    sec = ch.section(p)
    om = [[NumericForm.covector(sec.omega[a, b]) for b in range(4)] for a in range(4)]

    def curv(a, b):
        dom = numerical_d(lambda q: ch.omega_forms(q)[a][b], p, h)
        return dom + sum((om[a][c] ^ om[c][b] for c in range(4)), NumericForm.zero(2))

    F = curv(0, 1) + curv(2, 3)
    sq = (F ^ F).in_coframe(sec.real_coframe)
    return float(sq.coefficient((0, 1, 2, 3)).real)


def overlap_residual(spec: MetricSpec, x: Sequence[float], n: Sequence[float], t: float = 1.0) -> float:
    """Both fiber charts describe the same complex structure at a fiber point ``n``.

    Returns the mismatch of the tautological 2-form ``u E1+ u^T`` between the
    two sections (they differ by a U(2) rotation only).
    """
    n = np.asarray(n, dtype=float) / np.linalg.norm(n)
    us = []
    for chart in (1, 2):
        m = n.copy()
        if chart == 2:
            m[0] = -m[0]
        y = m[1:] / (1.0 + m[0])
        sec = TwistorChart(spec, t, chart).section(np.concatenate([x, y]))
        us.append(sec.u @ E_PLUS[0] @ sec.u.T)
    return float(np.max(np.abs(us[0] - us[1])))
