"""Point jets: derivative stacks of a function at a single point."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .. import _kernels as kern
from .expr import Expression
from .functions import SmoothFunction

#: default bound on jet orders used across the workbench
K_MAX = 8


@dataclass(frozen=True)
class Jet:
    """Derivatives ``d[j] = f^(j)(x)`` for ``j = 0..order``."""

    x: float
    order: int
    d: tuple

    def __post_init__(self):
        if len(self.d) != self.order + 1:
            raise ValueError("jet must carry order + 1 derivatives")

    @property
    def taylor(self) -> np.ndarray:
        """Normalized coefficients ``d[j] / j!``."""
        return np.array([v / math.factorial(j) for j, v in enumerate(self.d)])

    @classmethod
    def from_taylor(cls, x, coeffs):
        d = tuple(float(c) * math.factorial(j) for j, c in enumerate(coeffs))
        return cls(float(x), len(d) - 1, d)

    def __mul__(self, other: "Jet") -> "Jet":
        """Leibniz product (Cauchy product of Taylor coefficients)."""
        if self.order != other.order:
            raise ValueError("jet orders differ")
        c = kern.series_mul(self.taylor[:, None], other.taylor[:, None])[:, 0]
        return Jet.from_taylor(self.x, c)


def jet(f, x: float, k: int) -> Jet:
    """Jet of ``f`` (an :class:`Expression` or any smooth function) at ``x``."""
    if k < 0:
        raise ValueError("order must be non-negative")
    if isinstance(f, Expression):
        c = f.series(np.array([float(x)]), k)[:, 0]
        return Jet.from_taylor(x, c)
    if isinstance(f, SmoothFunction):
        d = f.derivs(np.array([float(x)]), k)[:, 0]
        return Jet(float(x), k, tuple(float(v) for v in d))
    raise TypeError(f"cannot take the jet of {type(f).__name__}")


def compose_jets(outer: Jet, inner: Jet) -> Jet:
    """Jet of ``F ∘ u`` from the jet of ``F`` at ``u(x)`` and the jet of ``u`` at ``x``.

    Taylor composition: the series ``sum_r F^(r)(u0)/r! (u - u0)^r`` is
    expanded by Horner's rule in truncated-series arithmetic.
    """
    k = min(outer.order, inner.order)
    if abs(outer.x - inner.d[0]) > 1e-12 * max(1.0, abs(inner.d[0])):
        raise ValueError("outer jet must be taken at the inner function's value")
    c = kern.series_compose(outer.taylor[: k + 1, None], inner.taylor[: k + 1, None])[:, 0]
    return Jet.from_taylor(inner.x, c)
