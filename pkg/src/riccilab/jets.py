"""Batched forward-mode jets carrying value, gradient, and Hessian.

A :class:`Jet2` is a degree-2 truncated Taylor expansion in ``n`` seed
variables, evaluated simultaneously at a batch of ``B`` points.  Pushing a
closed-form expression through jet arithmetic yields its exact first and
second derivatives (to machine rounding), which is what keeps the curvature
identity residuals far below any finite-difference noise floor.

Metric components, potentials, and 1-forms are written as ordinary Python
expressions over the coordinate objects; the module-level math functions
(:func:`sin`, :func:`exp`, ...) dispatch on the argument type so the same
callable serves plain ``numpy`` evaluation and jet evaluation.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "Jet2",
    "seed_variables",
    "sin", "cos", "tan", "exp", "log", "sqrt",
    "sinh", "cosh", "tanh", "arctan", "arcsin", "arccos",
]


class Jet2:
    """Second-order jet: value ``(B,)``, gradient ``(B,n)``, Hessian ``(B,n,n)``."""

    __slots__ = ("val", "grad", "hess")

    def __init__(self, val: np.ndarray, grad: np.ndarray, hess: np.ndarray):
        self.val = val
        self.grad = grad
        self.hess = hess

    @property
    def nvars(self) -> int:
        return self.grad.shape[-1]

    @classmethod
    def constant(cls, value, batch: int, nvars: int) -> "Jet2":
        val = np.broadcast_to(np.asarray(value, dtype=float), (batch,)).copy()
        return cls(val, np.zeros((batch, nvars)), np.zeros((batch, nvars, nvars)))

    @classmethod
    def variable(cls, values: np.ndarray, index: int, nvars: int) -> "Jet2":
        values = np.asarray(values, dtype=float)
        b = values.shape[0]
        grad = np.zeros((b, nvars))
        grad[:, index] = 1.0
        return cls(values.copy(), grad, np.zeros((b, nvars, nvars)))

    def _coerce(self, other) -> "Jet2":
        if isinstance(other, Jet2):
            return other
        return Jet2.constant(other, self.val.shape[0], self.nvars)

    # -- arithmetic -------------------------------------------------------

    def __add__(self, other):
        o = self._coerce(other)
        return Jet2(self.val + o.val, self.grad + o.grad, self.hess + o.hess)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        return Jet2(self.val - o.val, self.grad - o.grad, self.hess - o.hess)

    def __rsub__(self, other):
        o = self._coerce(other)
        return Jet2(o.val - self.val, o.grad - self.grad, o.hess - self.hess)

    def __neg__(self):
        return Jet2(-self.val, -self.grad, -self.hess)

    def __mul__(self, other):
        o = self._coerce(other)
        cross = self.grad[:, :, None] * o.grad[:, None, :]
        return Jet2(
            self.val * o.val,
            self.val[:, None] * o.grad + o.val[:, None] * self.grad,
            self.val[:, None, None] * o.hess
            + o.val[:, None, None] * self.hess
            + cross + np.swapaxes(cross, 1, 2),
        )

    __rmul__ = __mul__

    def _reciprocal(self) -> "Jet2":
        inv = 1.0 / self.val
        return self._chain(inv, -inv * inv, 2.0 * inv * inv * inv)

    def __truediv__(self, other):
        o = self._coerce(other)
        return self * o._reciprocal()

    def __rtruediv__(self, other):
        return self._coerce(other) * self._reciprocal()

    def __pow__(self, p):
        if isinstance(p, Jet2):
            return exp(p * log(self))
        p = float(p)
        if p == 0:
            return Jet2.constant(1.0, self.val.shape[0], self.nvars)
        v = self.val
        return self._chain(v ** p, p * v ** (p - 1.0), p * (p - 1.0) * v ** (p - 2.0))

    def __rpow__(self, base):
        return exp(self * float(np.log(base)))

    def _chain(self, f, fp, fpp) -> "Jet2":
        """Compose with a scalar function given f(v), f'(v), f''(v)."""
        outer = self.grad[:, :, None] * self.grad[:, None, :]
        return Jet2(
            f,
            fp[:, None] * self.grad,
            fp[:, None, None] * self.hess + fpp[:, None, None] * outer,
        )

    def __repr__(self):  # pragma: no cover - debugging aid
        return f"Jet2(val={self.val!r})"


def seed_variables(points: np.ndarray) -> list[Jet2]:
    """Seed one jet variable per coordinate for a ``(B, n)`` batch of points."""
    points = np.asarray(points, dtype=float)
    if points.ndim != 2:
        raise ValueError("points must have shape (batch, nvars)")
    n = points.shape[1]
    return [Jet2.variable(points[:, k], k, n) for k in range(n)]


def _dispatch(x, f, fp, fpp):
    if isinstance(x, Jet2):
        v = x.val
        return x._chain(f(v), fp(v), fpp(v))
    return f(np.asarray(x, dtype=float))


def sin(x):
    return _dispatch(x, np.sin, np.cos, lambda v: -np.sin(v))


def cos(x):
    return _dispatch(x, np.cos, lambda v: -np.sin(v), lambda v: -np.cos(v))


def tan(x):
    return _dispatch(
        x, np.tan,
        lambda v: 1.0 / np.cos(v) ** 2,
        lambda v: 2.0 * np.tan(v) / np.cos(v) ** 2,
    )


def exp(x):
    return _dispatch(x, np.exp, np.exp, np.exp)


def log(x):
    return _dispatch(x, np.log, lambda v: 1.0 / v, lambda v: -1.0 / v ** 2)


def sqrt(x):
    return _dispatch(
        x, np.sqrt,
        lambda v: 0.5 / np.sqrt(v),
        lambda v: -0.25 / v ** 1.5,
    )


def sinh(x):
    return _dispatch(x, np.sinh, np.cosh, np.sinh)


def cosh(x):
    return _dispatch(x, np.cosh, np.sinh, np.cosh)


def tanh(x):
    return _dispatch(
        x, np.tanh,
        lambda v: 1.0 / np.cosh(v) ** 2,
        lambda v: -2.0 * np.tanh(v) / np.cosh(v) ** 2,
    )


def arctan(x):
    return _dispatch(
        x, np.arctan,
        lambda v: 1.0 / (1.0 + v ** 2),
        lambda v: -2.0 * v / (1.0 + v ** 2) ** 2,
    )


def arcsin(x):
    return _dispatch(
        x, np.arcsin,
        lambda v: 1.0 / np.sqrt(1.0 - v ** 2),
        lambda v: v / (1.0 - v ** 2) ** 1.5,
    )


def arccos(x):
    return _dispatch(
        x, np.arccos,
        lambda v: -1.0 / np.sqrt(1.0 - v ** 2),
        lambda v: -v / (1.0 - v ** 2) ** 1.5,
    )
