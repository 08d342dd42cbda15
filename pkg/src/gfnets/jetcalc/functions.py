"""Smooth functions evaluated together with their derivatives.

Every object in the workbench that behaves like a smooth function of one real
variable implements :meth:`SmoothFunction.derivs`, which returns the stack
``[f(x), f'(x), ..., f^(k)(x)]`` for an array of points.  Parsed expressions,
regularized distributions, Seeley extensions and quadrature-defined solutions
all share this interface, so semi-norms and classifications treat them alike.
"""
from __future__ import annotations

import math

import numpy as np

from ..errors import DomainError

_INF = float("inf")


def _binom_row(n):
    return [math.comb(n, i) for i in range(n + 1)]


class SmoothFunction:
    """Base class. Subclasses implement ``_derivs(x, k)`` for 1-D ``x``."""

    #: closed interval on which evaluation is valid
    domain: tuple[float, float] = (-_INF, _INF)

    def derivs(self, x, k: int = 0) -> np.ndarray:
        """Derivatives of order ``0..k`` at ``x``; result shape ``(k + 1,) + x.shape``."""
        x = np.asarray(x, dtype=float)
        flat = x.reshape(-1)
        lo, hi = self.domain
        if flat.size and (lo > -_INF or hi < _INF):
            if flat.min() < lo or flat.max() > hi:
                raise DomainError(
                    f"evaluation on [{flat.min():g}, {flat.max():g}] leaves the valid range "
                    f"[{lo:g}, {hi:g}]"
                )
        out = self._derivs(flat, int(k))
        return out.reshape((k + 1,) + x.shape)

    def _derivs(self, x, k):
        raise NotImplementedError

    def __call__(self, x):
        return self.derivs(x, 0)[0]

    # combinators -------------------------------------------------------

    def __add__(self, other):
        return Sum([(1.0, self), (1.0, as_function(other))])

    def __radd__(self, other):
        return Sum([(1.0, as_function(other)), (1.0, self)])

    def __sub__(self, other):
        return Sum([(1.0, self), (-1.0, as_function(other))])

    def __rsub__(self, other):
        return Sum([(1.0, as_function(other)), (-1.0, self)])

    def __neg__(self):
        return Sum([(-1.0, self)])

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            return Sum([(float(other), self)])
        return Product(self, as_function(other))

    def __rmul__(self, other):
        if isinstance(other, (int, float)):
            return Sum([(float(other), self)])
        return Product(as_function(other), self)

    def shifted(self, omega: float) -> "SmoothFunction":
        """``x -> f(x + omega)``."""
        return Shifted(self, omega) if omega else self

    def derivative(self, order: int = 1) -> "SmoothFunction":
        return Derived(self, order) if order else self


def as_function(obj) -> SmoothFunction:
    if isinstance(obj, SmoothFunction):
        return obj
    if isinstance(obj, (int, float)):
        return Constant(float(obj))
    raise TypeError(f"cannot use {type(obj).__name__} as a smooth function")


def _intersect(*domains):
    lo = max(d[0] for d in domains)
    hi = min(d[1] for d in domains)
    return (lo, hi)


class Constant(SmoothFunction):
    def __init__(self, value: float):
        self.value = float(value)

    def _derivs(self, x, k):
        out = np.zeros((k + 1, x.size))
        out[0] = self.value
        return out

    def __repr__(self):
        return f"Constant({self.value!r})"


class Sum(SmoothFunction):
    """Linear combination ``sum_i c_i f_i``."""

    def __init__(self, terms):
        self.terms = [(float(c), f) for c, f in terms]
        self.domain = _intersect(*(f.domain for _, f in self.terms))

    def _derivs(self, x, k):
        out = np.zeros((k + 1, x.size))
        for c, f in self.terms:
            if c:
                out += c * f.derivs(x, k)
        return out


class Product(SmoothFunction):
    """Pointwise product, differentiated with the Leibniz rule."""

    def __init__(self, f: SmoothFunction, g: SmoothFunction):
        self.f, self.g = f, g
        self.domain = _intersect(f.domain, g.domain)

    def _derivs(self, x, k):
        df = self.f.derivs(x, k)
        dg = self.g.derivs(x, k)
        out = np.zeros((k + 1, x.size))
        for n in range(k + 1):
            for i, c in enumerate(_binom_row(n)):
                out[n] += c * df[i] * dg[n - i]
        return out


class Shifted(SmoothFunction):
    def __init__(self, f: SmoothFunction, omega: float):
        self.f, self.omega = f, float(omega)
        lo, hi = f.domain
        self.domain = (lo - self.omega, hi - self.omega)

    def _derivs(self, x, k):
        return self.f.derivs(x + self.omega, k)


class Derived(SmoothFunction):
    def __init__(self, f: SmoothFunction, order: int):
        if order < 0:
            raise ValueError("derivative order must be non-negative")
        self.f, self.order = f, int(order)
        self.domain = f.domain

    def _derivs(self, x, k):
        return self.f.derivs(x, k + self.order)[self.order :]


class Restricted(SmoothFunction):
    """``f`` with an explicit validity interval (used to model tabulated data)."""

    def __init__(self, f: SmoothFunction, lo: float = -_INF, hi: float = _INF):
        self.f = f
        self.domain = _intersect(f.domain, (float(lo), float(hi)))

    def _derivs(self, x, k):
        return self.f.derivs(x, k)


def sup_derivatives(f: SmoothFunction, grid, k: int) -> np.ndarray:
    """``max |f^(j)|`` over ``grid`` for ``j = 0..k``."""
    d = f.derivs(np.asarray(grid, dtype=float), k)
    with np.errstate(invalid="ignore"):
        return np.abs(d).max(axis=1)
