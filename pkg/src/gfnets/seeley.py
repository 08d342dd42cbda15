"""Truncated Seeley sequences and the extension operator from ``J = [0, ∞)`` to ``ℝ``.

For ``x < 0`` the extension is ``Eu(x) = Σ_l a_l u(b_l x)`` with nodes
``b_l = -2^l`` and weights solving ``Σ_l a_l b_l^n = 1`` for ``n < L``.  Each
solved moment condition makes the ``n``-th derivative continuous at 0; the
truncation leaves orders ``n ≥ L`` unmatched.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction

import mpmath
import numpy as np

from .errors import ConditioningFailure, DomainError
from .jetcalc import Restricted, SmoothFunction, as_function
from .nets import J_WINDOW, Net, seminorm

MAX_L = 16
RATIONAL_MAX_L = 12
WORK_PREC = 256  # bits
RESIDUAL_TOL = 1e-8
STORAGE_DIGITS = 50


@dataclass(frozen=True)
class SeeleySequence:
    """Nodes, stored weights and their post-rounding moment residuals.

    ``a_stored`` holds the weights rounded to ``digits`` significant decimal
    digits; residuals and smoothness gaps are computed from these in extended
    precision.  ``a`` is the double-precision copy used for grid evaluation.
    """

    L: int
    b: tuple
    a: tuple
    a_stored: tuple  # decimal strings
    residuals: tuple  # r_n = |Σ a_l b_l^n - 1|, n < L
    method: str
    digits: int

    @property
    def max_residual(self) -> float:
        return max(self.residuals)

    def weights_mp(self):
        return [mpmath.mpf(v) for v in self.a_stored]

    def moment_sum(self, n: int) -> float:
        """``S_n = Σ_l |a_l| |b_l|^n``."""
        return float(sum(abs(a) * abs(b) ** n for a, b in zip(self.a, self.b)))

    def growth_constant(self, k: int) -> float:
        """``C_k = Σ_{n≤k} max(1, S_n)``."""
        return float(sum(max(1.0, self.moment_sum(n)) for n in range(k + 1)))

    def growth_constants(self, k_max: int) -> list:
        return [self.growth_constant(k) for k in range(k_max + 1)]

    def residual(self, n: int) -> float:
        """``r_n`` for any ``n`` (beyond ``L - 1`` the condition is not imposed)."""
        if n < self.L:
            return self.residuals[n]
        return _residual_mp(self.a_stored, self.b, n)

    def rounding_bound(self, n: int) -> float:
        """Upper bound on ``r_n`` caused by rounding the weights to ``digits`` digits."""
        return 0.5 * 10.0 ** (1 - self.digits) * self.moment_sum(n)

    def negative_window(self, u_range: float = J_WINDOW[1]) -> float:
        """Largest ``X`` with ``|b_{L-1}| X ≤ u_range``."""
        return u_range / abs(self.b[-1])

    def to_dict(self, k_max: int = 8):
        return {
            "L": self.L,
            "b": list(self.b),
            "a": list(self.a),
            "a_decimal": list(self.a_stored),
            "residuals": list(self.residuals),
            "C": self.growth_constants(k_max),
            "method": self.method,
            "digits": self.digits,
        }

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), sort_keys=True, **kw)


def _solve_rational(b):
    """Gauss-Jordan elimination on ``Σ a_l b_l^n = 1`` over the rationals."""
    L = len(b)
    rows = [[Fraction(bl) ** n for bl in b] + [Fraction(1)] for n in range(L)]
    for col in range(L):
        piv = next(r for r in range(col, L) if rows[r][col] != 0)
        rows[col], rows[piv] = rows[piv], rows[col]
        p = rows[col][col]
        rows[col] = [v / p for v in rows[col]]
        for r in range(L):
            if r != col and rows[r][col] != 0:
                f = rows[r][col]
                rows[r] = [v - f * w for v, w in zip(rows[r], rows[col])]
    return [rows[l][L] for l in range(L)]


def _solve_mp(b):
    with mpmath.workprec(WORK_PREC):
        A = mpmath.matrix([[mpmath.mpf(bl) ** n for bl in b] for n in range(len(b))])
        rhs = mpmath.matrix([1] * len(b))
        return list(mpmath.lu_solve(A, rhs))


def _residual_mp(a, b, n):
    with mpmath.workprec(WORK_PREC):
        s = mpmath.fsum(mpmath.mpf(al) * mpmath.mpf(bl) ** n for al, bl in zip(a, b))
        return float(abs(s - 1))


def build_sequence(L: int, method: str = "auto", digits: int = STORAGE_DIGITS) -> SeeleySequence:
    """Solve the truncated moment system with nodes ``b_l = -2^l``.

    Parameters
    ----------
    L : int
        Truncation length, ``1 ≤ L ≤ 16``.
    method : {"auto", "rational", "mpmath"}
        Exact rational elimination (default for ``L ≤ 12``) or a 256-bit
        LU solve.
    digits : int
        Significant decimal digits kept when rounding the solved weights.
        Double precision corresponds to about 17 and is not enough beyond
        ``L ≈ 8``: ``Σ|a_l||b_l|^{L-1}`` reaches ``3e18`` at ``L = 12``.

    Raises
    ------
    ConditioningFailure
        If a moment residual after rounding the weights exceeds ``1e-8``.
    """
    if not 1 <= L <= MAX_L:
        raise ValueError(f"L must lie in 1..{MAX_L}")
    if method == "auto":
        method = "rational" if L <= RATIONAL_MAX_L else "mpmath"
    b = [-(2**l) for l in range(L)]
    with mpmath.workprec(WORK_PREC):
        if method == "rational":
            sol = [mpmath.mpf(v.numerator) / v.denominator for v in _solve_rational(b)]
        elif method == "mpmath":
            sol = _solve_mp(b)
        else:
            raise ValueError(f"unknown method {method!r}")
        stored = tuple(mpmath.nstr(v, digits, strip_zeros=True) for v in sol)
    res = tuple(_residual_mp(stored, b, n) for n in range(L))
    a = tuple(float(mpmath.mpf(v)) for v in stored)
    seq = SeeleySequence(L, tuple(float(v) for v in b), a, stored, res, method, digits)
    worst = max(res)
    if worst > RESIDUAL_TOL:
        raise ConditioningFailure(
            f"L={L}: post-rounding moment residual {worst:.3g} exceeds {RESIDUAL_TOL:g} "
            f"at {digits} digits"
        )
    return seq


class SeeleyExtension(SmoothFunction):
    """``Eu``: equal to ``u`` on ``J`` and to ``Σ a_l u(b_l x)`` on ``x < 0``."""

    def __init__(self, u, seq: SeeleySequence, u_range: float = J_WINDOW[1]):
        self.u = as_function(u)
        self.seq = seq
        self.u_range = float(u_range)
        self.domain = (-seq.negative_window(self.u_range), self.u_range)

    def _derivs(self, x, k):
        out = np.empty((k + 1, x.size))
        pos = x >= 0
        if pos.any():
            out[:, pos] = self.u.derivs(x[pos], k)
        neg = ~pos
        if neg.any():
            xn = x[neg]
            acc = np.zeros((k + 1, xn.size))
            n = np.arange(k + 1)[:, None]
            for a, b in zip(self.seq.a, self.seq.b):
                acc += a * b**n * self.u.derivs(b * xn, k)
            out[:, neg] = acc
        return out


def extend(u, seq: SeeleySequence, u_range: float = J_WINDOW[1]) -> SeeleyExtension:
    """Seeley extension of ``u`` (given on ``[0, u_range]``) to ``[-X, u_range]``.

    Evaluating outside that window raises :class:`DomainError`, since some
    ``b_l x`` would leave the range where ``u`` is trusted.
    """
    return SeeleyExtension(u, seq, u_range)


def smoothness_gap(u, seq: SeeleySequence, n_max: int) -> list:
    """``g_n = |Σ_l a_l b_l^n u^{(n)}(0) - u^{(n)}(0)|`` for ``n ≤ n_max``.

    The left limit is summed in extended precision so that the result is the
    exact image of the rounded weights, i.e. ``r_n |u^{(n)}(0)|``.
    """
    if n_max > seq.L - 1:
        raise ValueError("n_max must not exceed L - 1")
    d0 = as_function(u).derivs(np.array([0.0]), n_max)[:, 0]
    gaps = []
    with mpmath.workprec(WORK_PREC):
        for n in range(n_max + 1):
            dn = mpmath.mpf(float(d0[n]))
            left = mpmath.fsum(a * mpmath.mpf(b) ** n * dn for a, b in zip(seq.weights_mp(), seq.b))
            gaps.append(float(abs(left - dn)))
    return gaps


@dataclass
class BoundCheck:
    holds: bool
    lhs: float
    rhs: float
    C_k: float
    u_seminorm: float

    def __bool__(self):
        return self.holds


def default_grids(seq: SeeleySequence, u_range: float = J_WINDOW[1], points: int = 4001):
    X = seq.negative_window(u_range)
    neg = np.linspace(-X, 0.0, points // 4, endpoint=False)
    pos = np.linspace(0.0, u_range, points)
    return np.concatenate([neg, pos]), pos


def extension_bound_check(u, seq: SeeleySequence, k: int, r_grid=None, j_grid=None,
                          u_range: float = J_WINDOW[1], rtol: float = 1e-12) -> BoundCheck:
    """Check ``|Eu|_{k,ℝ} ≤ C_k |u|_{k,J}`` on grids.

    The ``J`` side is sampled on ``j_grid`` together with every point
    ``b_l x`` hit by the negative part of ``r_grid``, so the inequality is the
    exact grid image of the continuous estimate.
    """
    if r_grid is None or j_grid is None:
        dr, dj = default_grids(seq, u_range)
        r_grid = dr if r_grid is None else r_grid
        j_grid = dj if j_grid is None else j_grid
    r_grid = np.asarray(r_grid, dtype=float)
    j_grid = np.asarray(j_grid, dtype=float)
    if j_grid.min() < 0:
        raise DomainError("J-grid must lie in [0, +inf)")
    E = extend(u, seq, u_range)
    lhs = seminorm(E, k, r_grid)
    neg = r_grid[r_grid < 0]
    images = np.concatenate([b * neg for b in seq.b]) if neg.size else np.empty(0)
    u_norm = seminorm(Restricted(as_function(u), 0.0, u_range), k, np.concatenate([j_grid, images]))
    Ck = seq.growth_constant(k)
    rhs = Ck * u_norm
    return BoundCheck(lhs <= rhs * (1 + rtol) + 1e-300, lhs, rhs, Ck, u_norm)


def extend_net(net: Net, seq: SeeleySequence, u_range: float = J_WINDOW[1], schedule=None,
               j_max: int = 2) -> Net:
    """ε-wise Seeley extension of a net on ``J``.

    When ``schedule`` is given, every ``u_ε`` on it is tested for vanishing of
    derivatives ``0..j_max`` at ``+∞``; the result is stored in
    ``meta["vanishing_at_infinity"]`` (membership evidence for nets vanishing at infinity).
    """
    if net.domain != "J":
        raise ValueError("extend_net expects a net on J")
    out = Net(lambda eps: extend(net(eps), seq, u_range), "R", label=f"E[{net.label}]")
    X = seq.negative_window(u_range)
    out.grid = np.concatenate([np.linspace(-X, 0.0, 1000, endpoint=False), np.linspace(0.0, u_range, 4001)])
    out.meta["seeley_L"] = seq.L
    if schedule is not None:
        from .aaa import check_vanishing

        out.meta["vanishing_at_infinity"] = all(
            check_vanishing(net(eps), j_max) for eps in schedule.values
        )
    return out
