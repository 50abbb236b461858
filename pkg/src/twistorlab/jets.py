"""Second-order forward jets over four real variables.

A :class:`Jet2` carries a value together with its exact gradient and Hessian
with respect to the chart coordinates.  Arithmetic propagates all three by
the usual chain and product rules, so derivatives of metric components are
exact up to floating point rounding.
"""

from __future__ import annotations

import math

import numpy as np

NVARS = 4


class JetDomainError(ArithmeticError):
    """A jet operation was evaluated outside the domain of the function."""


def _sym_outer(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    # a_i b_j + b_i a_j is bit-for-bit symmetric because addition commutes
    return np.outer(a, b) + np.outer(b, a)


class Jet2:
    """Value, gradient and Hessian of a scalar function of four variables."""

    __slots__ = ("value", "grad", "hess")

    def __init__(self, value: float, grad: np.ndarray, hess: np.ndarray):
        self.value = float(value)
        self.grad = grad
        self.hess = hess

    @classmethod
    def constant(cls, c: float) -> "Jet2":
        return cls(c, np.zeros(NVARS), np.zeros((NVARS, NVARS)))

    @classmethod
    def variable(cls, x: float, index: int) -> "Jet2":
        """Seed the coordinate with zero-based ``index``."""
        grad = np.zeros(NVARS)
        grad[index] = 1.0
        return cls(x, grad, np.zeros((NVARS, NVARS)))

    def __repr__(self) -> str:
        return f"Jet2(value={self.value!r}, grad={self.grad.tolist()!r})"

    # -- arithmetic -------------------------------------------------------

    def __neg__(self) -> "Jet2":
        return Jet2(-self.value, -self.grad, -self.hess)

    def __add__(self, other: "Jet2 | float") -> "Jet2":
        if not isinstance(other, Jet2):
            return Jet2(self.value + other, self.grad, self.hess)
        return Jet2(self.value + other.value, self.grad + other.grad, self.hess + other.hess)

    __radd__ = __add__

    def __sub__(self, other: "Jet2 | float") -> "Jet2":
        if not isinstance(other, Jet2):
            return Jet2(self.value - other, self.grad, self.hess)
        return Jet2(self.value - other.value, self.grad - other.grad, self.hess - other.hess)

    def __rsub__(self, other: float) -> "Jet2":
        return Jet2(other - self.value, -self.grad, -self.hess)

    def __mul__(self, other: "Jet2 | float") -> "Jet2":
        if not isinstance(other, Jet2):
            return Jet2(self.value * other, self.grad * other, self.hess * other)
        u, v = self, other
        return Jet2(
            u.value * v.value,
            u.value * v.grad + v.value * u.grad,
            u.value * v.hess + v.value * u.hess + _sym_outer(u.grad, v.grad),
        )

    __rmul__ = __mul__

    def reciprocal(self) -> "Jet2":
        v = self.value
        if v == 0.0:
            raise JetDomainError("division by zero")
        return self._chain(1.0 / v, -1.0 / v**2, 2.0 / v**3)

    def __truediv__(self, other: "Jet2 | float") -> "Jet2":
        if not isinstance(other, Jet2):
            if other == 0:
                raise JetDomainError("division by zero")
            return self * (1.0 / other)
        return self * other.reciprocal()

    def __rtruediv__(self, other: float) -> "Jet2":
        return self.reciprocal() * other

    def __pow__(self, n: int) -> "Jet2":
        if not isinstance(n, int) or n < 0:
            raise ValueError("jet powers take nonnegative integer exponents")
        if n == 0:
            return Jet2.constant(1.0)
        if n == 1:
            return self
        v = self.value
        return self._chain(v**n, n * v ** (n - 1), n * (n - 1) * v ** (n - 2))

    # -- elementary functions ---------------------------------------------

    def _chain(self, f0: float, f1: float, f2: float) -> "Jet2":
        g = self.grad
        return Jet2(f0, f1 * g, f1 * self.hess + f2 * np.outer(g, g))

    def sin(self) -> "Jet2":
        s, c = math.sin(self.value), math.cos(self.value)
        return self._chain(s, c, -s)

    def cos(self) -> "Jet2":
        s, c = math.sin(self.value), math.cos(self.value)
        return self._chain(c, -s, -c)

    def tan(self) -> "Jet2":
        c = math.cos(self.value)
        if c == 0.0:
            raise JetDomainError("tan evaluated at a pole")
        tv = math.tan(self.value)
        sec2 = 1.0 + tv * tv
        return self._chain(tv, sec2, 2.0 * tv * sec2)

    def exp(self) -> "Jet2":
        e = math.exp(self.value)
        return self._chain(e, e, e)

    def log(self) -> "Jet2":
        v = self.value
        if v <= 0.0:
            raise JetDomainError(f"log of nonpositive value {v!r}")
        return self._chain(math.log(v), 1.0 / v, -1.0 / v**2)

    def sqrt(self) -> "Jet2":
        v = self.value
        if v <= 0.0:
            raise JetDomainError(f"sqrt of nonpositive value {v!r} (derivatives undefined)")
        r = math.sqrt(v)
        return self._chain(r, 0.5 / r, -0.25 / (r * v))

    def sinh(self) -> "Jet2":
        s, c = math.sinh(self.value), math.cosh(self.value)
        return self._chain(s, c, s)

    def cosh(self) -> "Jet2":
        s, c = math.sinh(self.value), math.cosh(self.value)
        return self._chain(c, s, c)


UNARY_FUNCTIONS = ("sin", "cos", "tan", "exp", "log", "sqrt", "sinh", "cosh")
