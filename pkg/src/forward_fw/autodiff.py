"""Forward-mode differentiation with dual numbers.

A :class:`Dual` carries a primal value and a tangent of the same shape.
Both may be numpy arrays, in which case every operation acts elementwise
(or as the matching linear map for ``@``), so one pass of a program over
``Dual(x, u)`` yields ``f(x)`` and the directional derivative
``<grad f(x), u>`` together. There is no tape: intermediates are dropped as
soon as the program moves past them.

Programs are written once against the functions in this module (``exp``,
``log``, ``maximum``, ``logsumexp`` ...) which fall through to numpy for
plain arrays, and against ordinary operators.

At the kinks of ``maximum``/``max``/``abs`` the tangent follows the branch
picked by comparing primals, ties going to the first argument (lowest
index for reductions).
"""

from __future__ import annotations

from typing import Callable, Tuple

import numpy as np


class DomainError(ValueError):
    """An elementary function was evaluated outside its domain."""


class Dual:
    __slots__ = ("primal", "tangent")
    # make numpy defer binary operators (ndarray @ Dual, float * Dual, ...) to us
    __array_ufunc__ = None

    def __init__(self, primal, tangent):
        self.primal = primal
        self.tangent = tangent

    def __repr__(self):
        return f"Dual({self.primal!r}, {self.tangent!r})"

    @property
    def shape(self):
        return np.shape(self.primal)

    @property
    def ndim(self):
        return np.ndim(self.primal)

    @property
    def T(self):
        return Dual(np.transpose(self.primal), np.transpose(self.tangent))

    def reshape(self, *shape):
        return Dual(np.reshape(self.primal, shape if len(shape) > 1 else shape[0]),
                    np.reshape(self.tangent, shape if len(shape) > 1 else shape[0]))

    def __getitem__(self, idx):
        return Dual(self.primal[idx], self.tangent[idx])

    def __len__(self):
        return len(self.primal)

    def __neg__(self):
        return Dual(-self.primal, -self.tangent)

    def __pos__(self):
        return self

    def __add__(self, other):
        if isinstance(other, Dual):
            return Dual(self.primal + other.primal, self.tangent + other.tangent)
        return Dual(self.primal + other, _broadcast_tangent(self.tangent, self.primal + other))

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Dual):
            return Dual(self.primal - other.primal, self.tangent - other.tangent)
        return Dual(self.primal - other, _broadcast_tangent(self.tangent, self.primal - other))

    def __rsub__(self, other):
        return Dual(other - self.primal, _broadcast_tangent(-self.tangent, other - self.primal))

    def __mul__(self, other):
        if isinstance(other, Dual):
            return Dual(self.primal * other.primal,
                        self.primal * other.tangent + self.tangent * other.primal)
        return Dual(self.primal * other, self.tangent * other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Dual):
            _nonzero(other.primal, "division")
            q = self.primal / other.primal
            return Dual(q, (self.tangent - q * other.tangent) / other.primal)
        _nonzero(other, "division")
        return Dual(self.primal / other, self.tangent / other)

    def __rtruediv__(self, other):
        _nonzero(self.primal, "division")
        q = other / self.primal
        return Dual(q, -q * self.tangent / self.primal)

    def __pow__(self, exponent):
        if isinstance(exponent, Dual):
            raise TypeError("only constant exponents are supported; use exp(log(a) * b)")
        if exponent == 0:
            return Dual(np.ones_like(self.primal) if np.ndim(self.primal) else 1.0,
                        np.zeros_like(self.tangent) if np.ndim(self.tangent) else 0.0)
        return Dual(self.primal ** exponent,
                    exponent * self.primal ** (exponent - 1) * self.tangent)

    def __matmul__(self, other):
        if isinstance(other, Dual):
            return Dual(self.primal @ other.primal,
                        self.tangent @ other.primal + self.primal @ other.tangent)
        return Dual(self.primal @ other, self.tangent @ other)

    def __rmatmul__(self, other):
        return Dual(other @ self.primal, other @ self.tangent)

    def sum(self, axis=None, keepdims=False):
        return Dual(np.sum(self.primal, axis=axis, keepdims=keepdims),
                    np.sum(self.tangent, axis=axis, keepdims=keepdims))

    def mean(self, axis=None, keepdims=False):
        return Dual(np.mean(self.primal, axis=axis, keepdims=keepdims),
                    np.mean(self.tangent, axis=axis, keepdims=keepdims))


def _broadcast_tangent(tangent, like):
    # adding a constant array may broadcast the primal; the tangent must follow
    if np.shape(tangent) == np.shape(like):
        return tangent
    return np.broadcast_to(tangent, np.shape(like)).copy()


def _nonzero(a, op):
    if np.any(a == 0):
        raise DomainError(f"{op} by a zero primal")


def primal(a):
    return a.primal if isinstance(a, Dual) else a


def exp(a):
    if isinstance(a, Dual):
        e = np.exp(a.primal)
        return Dual(e, e * a.tangent)
    return np.exp(a)


def log(a):
    p = primal(a)
    if np.any(np.asarray(p) <= 0):
        raise DomainError("log of a non-positive value")
    if isinstance(a, Dual):
        return Dual(np.log(a.primal), a.tangent / a.primal)
    return np.log(a)


def sqrt(a):
    p = primal(a)
    if np.any(np.asarray(p) < 0):
        raise DomainError("sqrt of a negative value")
    if isinstance(a, Dual):
        r = np.sqrt(a.primal)
        _nonzero(r, "sqrt derivative: division")
        return Dual(r, 0.5 * a.tangent / r)
    return np.sqrt(a)


def maximum(a, b):
    """Elementwise max; where primals tie the first argument's tangent wins."""
    if not isinstance(a, Dual) and not isinstance(b, Dual):
        return np.maximum(a, b)
    pa, pb = primal(a), primal(b)
    ta = a.tangent if isinstance(a, Dual) else np.zeros_like(np.asarray(pa, dtype=float))
    tb = b.tangent if isinstance(b, Dual) else np.zeros_like(np.asarray(pb, dtype=float))
    first = pa >= pb
    return Dual(np.where(first, pa, pb), np.where(first, ta, tb))


def abs(a):  # noqa: A001 - mirrors numpy's name
    if isinstance(a, Dual):
        return maximum(a, -a)
    return np.abs(a)


def max(a, axis=None, keepdims=False):  # noqa: A001
    """Reduction max; the tangent of the first maximal entry is propagated."""
    if not isinstance(a, Dual):
        return np.max(a, axis=axis, keepdims=keepdims)
    if axis is None:
        i = int(np.argmax(a.primal))
        p, t = a.primal.flat[i], a.tangent.flat[i]
        if keepdims:
            shape = (1,) * np.ndim(a.primal)
            return Dual(np.reshape(p, shape), np.reshape(t, shape))
        return Dual(p, t)
    idx = np.expand_dims(np.argmax(a.primal, axis=axis), axis)
    p = np.take_along_axis(a.primal, idx, axis)
    t = np.take_along_axis(a.tangent, idx, axis)
    if not keepdims:
        p, t = np.squeeze(p, axis), np.squeeze(t, axis)
    return Dual(p, t)


def sum(a, axis=None, keepdims=False):  # noqa: A001
    if isinstance(a, Dual):
        return a.sum(axis=axis, keepdims=keepdims)
    return np.sum(a, axis=axis, keepdims=keepdims)


def mean(a, axis=None, keepdims=False):
    if isinstance(a, Dual):
        return a.mean(axis=axis, keepdims=keepdims)
    return np.mean(a, axis=axis, keepdims=keepdims)


def logsumexp(a, axis=None):
    """``log(sum(exp(a)))`` with max-subtraction for overflow safety.

    The shift is exact for any constant, so it is taken from the primal
    alone and carries no tangent.
    """
    top = np.max(primal(a), axis=axis, keepdims=True)
    shifted = exp(a - top)
    out = log(sum(shifted, axis=axis, keepdims=True)) + top
    if axis is None:
        return out.reshape(()) if isinstance(out, Dual) else np.reshape(out, ())
    if isinstance(out, Dual):
        return Dual(np.squeeze(out.primal, axis), np.squeeze(out.tangent, axis))
    return np.squeeze(out, axis)


def value_and_jvp(f: Callable, x, u) -> Tuple[float, float]:
    """Evaluate ``f`` once on ``Dual(x, u)``; return ``(f(x), <grad f(x), u>)``."""
    x = np.asarray(x, dtype=np.float64)
    u = np.asarray(u, dtype=np.float64)
    if x.shape != u.shape:
        raise ValueError(f"dimension mismatch: x{x.shape} vs u{u.shape}")
    out = f(Dual(x, u))
    if isinstance(out, Dual):
        return float(out.primal), float(out.tangent)
    # f ignores its input
    return float(out), 0.0


def jvp(f: Callable, x, u) -> float:
    """Directional derivative of ``f`` at ``x`` along ``u`` in one forward pass."""
    return value_and_jvp(f, x, u)[1]
