"""Exterior forms with constant coefficients on a finite co-basis.

A :class:`NumericForm` of degree ``k`` on an ``n``-dimensional space stores
one complex coefficient per strictly increasing multi-index, so
antisymmetry holds by construction.  The same class serves both for forms
on a coordinate chart (co-basis ``dz^1..dz^n``) and for formal forms in an
abstract co-frame such as ``(phi1, phi2, phi3, phi1bar, phi2bar, phi3bar)``.
"""

from __future__ import annotations

from functools import lru_cache
from itertools import combinations, permutations
from typing import Callable, Sequence

import numpy as np


@lru_cache(maxsize=None)
def multi_indices(n: int, k: int) -> tuple[tuple[int, ...], ...]:
    return tuple(combinations(range(n), k))


@lru_cache(maxsize=None)
def _position(n: int, k: int) -> dict[tuple[int, ...], int]:
    return {I: p for p, I in enumerate(multi_indices(n, k))}


def _sort_sign(idx: Sequence[int]) -> tuple[int, tuple[int, ...]]:
    """Sign of the permutation sorting ``idx`` (0 if an index repeats)."""
    idx = list(idx)
    if len(set(idx)) != len(idx):
        return 0, ()
    sign = 1
    for i in range(len(idx)):
        for j in range(len(idx) - 1 - i):
            if idx[j] > idx[j + 1]:
                idx[j], idx[j + 1] = idx[j + 1], idx[j]
                sign = -sign
    return sign, tuple(idx)


@lru_cache(maxsize=None)
def _wedge_table(n: int, k: int, l: int):
    """Triples (i, j, p, sign): basis_i ^ basis_j = sign * basis_p."""
    pos = _position(n, k + l)
    out = []
    for i, I in enumerate(multi_indices(n, k)):
        for j, J in enumerate(multi_indices(n, l)):
            sign, K = _sort_sign(I + J)
            if sign:
                out.append((i, j, pos[K], sign))
    return out


def compound(M: np.ndarray, k: int) -> np.ndarray:
    """k-th compound matrix: minors ``det M[I, J]`` over increasing multi-indices."""
    n = M.shape[0]
    if k == 0:
        return np.ones((1, 1), dtype=M.dtype)
    idx = multi_indices(n, k)
    out = np.empty((len(idx), len(idx)), dtype=np.result_type(M, float))
    for a, I in enumerate(idx):
        rows = M[list(I)]
        for b, J in enumerate(idx):
            out[a, b] = np.linalg.det(rows[:, list(J)])
    return out


class NumericForm:
    __slots__ = ("degree", "dim", "coeffs")

    def __init__(self, degree: int, coeffs: np.ndarray, dim: int = 6):
        coeffs = np.asarray(coeffs, dtype=complex)
        if coeffs.shape != (len(multi_indices(dim, degree)),):
            raise ValueError(f"expected {len(multi_indices(dim, degree))} coefficients")
        self.degree = degree
        self.dim = dim
        self.coeffs = coeffs

    # -- construction ------------------------------------------------------

    @classmethod
    def zero(cls, degree: int, dim: int = 6) -> "NumericForm":
        return cls(degree, np.zeros(len(multi_indices(dim, degree)), dtype=complex), dim)

    @classmethod
    def covector(cls, values: Sequence[complex]) -> "NumericForm":
        v = np.asarray(values, dtype=complex)
        return cls(1, v.copy(), v.shape[0])

    @classmethod
    def basis(cls, index: Sequence[int] | int, dim: int = 6, coeff: complex = 1.0) -> "NumericForm":
        """``coeff * e^{i1} ^ ... ^ e^{ik}`` for an arbitrary-order multi-index."""
        index = (index,) if isinstance(index, int) else tuple(index)
        out = cls.zero(len(index), dim)
        sign, K = _sort_sign(index)
        if sign:
            out.coeffs[_position(dim, len(index))[K]] = sign * coeff
        return out

    @classmethod
    def from_dense(cls, T: np.ndarray) -> "NumericForm":
        """From a fully antisymmetric tensor ``T[i1..ik] = F(e_i1, .., e_ik)``."""
        k, n = T.ndim, T.shape[0]
        return cls(k, np.array([T[I] for I in multi_indices(n, k)], dtype=complex), n)

    def to_dense(self) -> np.ndarray:
        n, k = self.dim, self.degree
        T = np.zeros((n,) * k, dtype=complex)
        for c, I in zip(self.coeffs, multi_indices(n, k)):
            if c == 0:
                continue
            for perm in permutations(range(k)):
                sign, _ = _sort_sign(perm)
                T[tuple(I[p] for p in perm)] = sign * c
        return T

    # -- algebra -----------------------------------------------------------

    def _check(self, other: "NumericForm") -> None:
        if self.dim != other.dim or self.degree != other.degree:
            raise ValueError("forms of different degree or dimension")

    def __add__(self, other: "NumericForm") -> "NumericForm":
        self._check(other)
        return NumericForm(self.degree, self.coeffs + other.coeffs, self.dim)

    def __sub__(self, other: "NumericForm") -> "NumericForm":
        self._check(other)
        return NumericForm(self.degree, self.coeffs - other.coeffs, self.dim)

    def __neg__(self) -> "NumericForm":
        return NumericForm(self.degree, -self.coeffs, self.dim)

    def __mul__(self, c: complex) -> "NumericForm":
        return NumericForm(self.degree, self.coeffs * c, self.dim)

    __rmul__ = __mul__

    def __truediv__(self, c: complex) -> "NumericForm":
        return NumericForm(self.degree, self.coeffs / c, self.dim)

    def __xor__(self, other: "NumericForm") -> "NumericForm":
        return self.wedge(other)

    def wedge(self, other: "NumericForm") -> "NumericForm":
        if self.dim != other.dim:
            raise ValueError("forms live on different spaces")
        n, k, l = self.dim, self.degree, other.degree
        out = np.zeros(len(multi_indices(n, k + l)), dtype=complex)
        a, b = self.coeffs, other.coeffs
        for i, j, p, sign in _wedge_table(n, k, l):
            if a[i] != 0 and b[j] != 0:
                out[p] += sign * a[i] * b[j]
        return NumericForm(k + l, out, n)

    def conj(self) -> "NumericForm":
        return NumericForm(self.degree, self.coeffs.conj(), self.dim)

    @property
    def real(self) -> "NumericForm":
        return NumericForm(self.degree, self.coeffs.real.astype(complex), self.dim)

    @property
    def imag(self) -> "NumericForm":
        return NumericForm(self.degree, self.coeffs.imag.astype(complex), self.dim)

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.coeffs))) if self.coeffs.size else 0.0

    def coefficient(self, index: Sequence[int]) -> complex:
        """Coefficient of ``e^{i1} ^ ... ^ e^{ik}`` for any ordering of the indices."""
        sign, K = _sort_sign(tuple(index))
        if not sign:
            return 0.0
        return sign * self.coeffs[_position(self.dim, self.degree)[K]]

    def evaluate(self, vectors: Sequence[Sequence[complex]]) -> complex:
        V = np.asarray(vectors, dtype=complex).T  # columns are the vectors
        idx = multi_indices(self.dim, self.degree)
        return complex(sum(c * np.linalg.det(V[list(I)]) for c, I in zip(self.coeffs, idx) if c != 0))

    # -- change of co-basis ------------------------------------------------

    def pullback_coeffs(self, coframe: np.ndarray) -> "NumericForm":
        """Re-express a form written in the co-frame ``zeta`` on the chart basis.

        ``coframe[a, i]`` is the chart component ``zeta^a(d/dz^i)``.
        """
        C = compound(np.asarray(coframe, dtype=complex), self.degree)
        return NumericForm(self.degree, self.coeffs @ C, self.dim)

    def in_coframe(self, coframe: np.ndarray) -> "NumericForm":
        """Inverse of :meth:`pullback_coeffs`: components in the co-frame ``zeta``."""
        V = np.linalg.inv(np.asarray(coframe, dtype=complex))
        C = compound(V, self.degree)
        return NumericForm(self.degree, self.coeffs @ C, self.dim)

    def __repr__(self) -> str:
        terms = [
            f"{c:.6g}*e{''.join(str(i + 1) for i in I)}"
            for c, I in zip(self.coeffs, multi_indices(self.dim, self.degree))
            if abs(c) > 0
        ]
        return f"NumericForm({self.degree}, {' + '.join(terms) or '0'})"


def wedge_all(*forms: NumericForm) -> NumericForm:
    out = forms[0]
    for f in forms[1:]:
        out = out.wedge(f)
    return out


def type_counts(index: Sequence[int], holomorphic: Sequence[int]) -> tuple[int, int]:
    p = sum(1 for i in index if i in holomorphic)
    return p, len(index) - p


def project_type(form: NumericForm, holomorphic: Sequence[int], pq: tuple[int, int]) -> NumericForm:
    """Keep only the terms with ``pq`` holomorphic/antiholomorphic factors.

    ``form`` must already be written in a complex co-frame whose entries
    with positions in ``holomorphic`` are the (1,0)-forms.
    """
    keep = np.array(
        [type_counts(I, holomorphic) == tuple(pq) for I in multi_indices(form.dim, form.degree)]
    )
    return NumericForm(form.degree, np.where(keep, form.coeffs, 0), form.dim)


def numerical_d(
    field: Callable[[np.ndarray], NumericForm], p: Sequence[float], h: float = 1e-3
) -> NumericForm:
    """Exterior derivative of a form field by central differences of its coefficients."""
    p = np.asarray(p, dtype=float)
    n = p.shape[0]
    derivs = []
    for i in range(n):
        step = np.zeros(n)
        step[i] = h
        fp, fm = field(p + step), field(p - step)
        derivs.append((fp.coeffs - fm.coeffs) / (2 * h))
    k = fp.degree
    pos = _position(n, k)
    out = np.zeros(len(multi_indices(n, k + 1)), dtype=complex)
    for q, J in enumerate(multi_indices(n, k + 1)):
        total = 0j
        for m, j in enumerate(J):
            rest = J[:m] + J[m + 1 :]
            total += (-1) ** m * derivs[j][pos[rest]]
        out[q] = total
    return NumericForm(k + 1, out, n)
