"""Expression trees over the variable ``x`` and their truncated Taylor evaluation.

Evaluation never differentiates symbolically and never uses finite
differences: each node maps the Taylor series of its children to its own
series with the recurrences in :mod:`gfnets._kernels`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .. import _kernels as kern
from ..errors import EvaluationError
from .functions import SmoothFunction

FUNCTIONS = ("sin", "cos", "exp", "sqrt")


def _factorials(k):
    return np.array([math.factorial(j) for j in range(k + 1)], dtype=float)


class Expression(SmoothFunction):
    """Base node. Concrete nodes are frozen dataclasses, hence hashable and comparable."""

    # -- evaluation ------------------------------------------------------

    def _derivs(self, x, k):
        with np.errstate(over="ignore", invalid="ignore"):
            s = self.series(x, k)
        return s * _factorials(k)[:, None]

    def series(self, x, k):
        """Normalized Taylor coefficients, shape ``(k + 1, len(x))``."""
        x = np.asarray(x, dtype=float).reshape(-1)
        with np.errstate(over="ignore", invalid="ignore"):
            s = self._series(x, k)
        if isinstance(s, float):
            out = np.zeros((k + 1, x.size))
            out[0] = s
            return out
        return s

    def _series(self, x, k):
        raise NotImplementedError

    @cached_property
    def has_var(self) -> bool:
        return any(c.has_var for c in self.children())

    @cached_property
    def params(self) -> frozenset:
        out = frozenset()
        for c in self.children():
            out |= c.params
        return out

    def children(self):
        return ()

    # -- structure -------------------------------------------------------

    def __str__(self):
        return to_string(self)

    def substitute(self, inner: "Expression") -> "Expression":
        """Replace the variable by ``inner``: the composition ``self ∘ inner``."""
        return _substitute(self, inner)

    def bind(self, **values) -> "Expression":
        """Replace named parameters by constants."""
        return _bind(self, {k: float(v) for k, v in values.items()})

    # arithmetic stays symbolic between expressions
    def __add__(self, other):
        o = _lift(other)
        return Add(self, o) if o is not None else super().__add__(other)

    def __radd__(self, other):
        o = _lift(other)
        return Add(o, self) if o is not None else super().__radd__(other)

    def __sub__(self, other):
        o = _lift(other)
        return Sub(self, o) if o is not None else super().__sub__(other)

    def __rsub__(self, other):
        o = _lift(other)
        return Sub(o, self) if o is not None else super().__rsub__(other)

    def __mul__(self, other):
        o = _lift(other)
        return Mul(self, o) if o is not None else super().__mul__(other)

    def __rmul__(self, other):
        o = _lift(other)
        return Mul(o, self) if o is not None else super().__rmul__(other)

    def __truediv__(self, other):
        o = _lift(other)
        if o is None:
            return NotImplemented
        return Div(self, o)

    def __rtruediv__(self, other):
        o = _lift(other)
        if o is None:
            return NotImplemented
        return Div(o, self)

    def __neg__(self):
        return Neg(self)

    def __pow__(self, n):
        if not isinstance(n, int):
            return NotImplemented
        return Pow(self, n)


def _lift(obj):
    if isinstance(obj, Expression):
        return obj
    if isinstance(obj, (int, float)) and not isinstance(obj, bool):
        return Const(float(obj))
    return None


# ---------------------------------------------------------------------------
# series helpers; a python float stands for an x-independent series


def _var_series(x, k):
    s = np.zeros((k + 1, x.size))
    s[0] = x
    if k >= 1:
        s[1] = 1.0
    return s


def _as_series(v, k, n):
    s = np.zeros((k + 1, n))
    s[0] = v
    return s


def _add(a, b, sign=1.0):
    if isinstance(a, float) and isinstance(b, float):
        return a + sign * b
    if isinstance(b, float):
        out = a.copy()
        out[0] += sign * b
        return out
    if isinstance(a, float):
        out = sign * b
        out[0] += a
        return out
    return a + sign * b


def _mul(a, b):
    if isinstance(a, float) or isinstance(b, float):
        return a * b
    return kern.series_mul(a, b)


def _check_denominator(b):
    zero = b == 0.0 if isinstance(b, float) else np.any(b[0] == 0.0)
    if zero:
        raise EvaluationError("division by zero")


def _div(a, b):
    _check_denominator(b)
    if isinstance(b, float):
        return a / b
    if isinstance(a, float):
        a = _as_series(a, b.shape[0] - 1, b.shape[1])
    return kern.series_div(a, b)


def _pow(a, n):
    if isinstance(a, float):
        if a == 0.0 and n < 0:
            raise EvaluationError("division by zero in negative power")
        return float(a**n)
    if n == 0:
        return 1.0
    if n < 0:
        return _div(1.0, _pow(a, -n))
    result = None
    base = a
    while n:
        if n & 1:
            result = base if result is None else kern.series_mul(result, base)
        n >>= 1
        if n:
            base = kern.series_mul(base, base)
    return result


# ---------------------------------------------------------------------------
# nodes


@dataclass(frozen=True, eq=True)
class Const(Expression):
    value: float

    def __post_init__(self):
        if not math.isfinite(self.value):
            raise ValueError("constants must be finite")

    @cached_property
    def has_var(self):
        return False

    def _series(self, x, k):
        return float(self.value)


@dataclass(frozen=True, eq=True)
class Var(Expression):
    @cached_property
    def has_var(self):
        return True

    def _series(self, x, k):
        return _var_series(x, k)


@dataclass(frozen=True, eq=True)
class Param(Expression):
    name: str

    @cached_property
    def has_var(self):
        return False

    @cached_property
    def params(self):
        return frozenset([self.name])

    def _series(self, x, k):
        raise EvaluationError(f"parameter '{self.name}' is unbound")


@dataclass(frozen=True, eq=True)
class Neg(Expression):
    arg: Expression

    def children(self):
        return (self.arg,)

    def _series(self, x, k):
        return -self.arg._series(x, k)


@dataclass(frozen=True, eq=True)
class Add(Expression):
    left: Expression
    right: Expression

    def children(self):
        return (self.left, self.right)

    def _series(self, x, k):
        return _add(self.left._series(x, k), self.right._series(x, k))


@dataclass(frozen=True, eq=True)
class Sub(Expression):
    left: Expression
    right: Expression

    def children(self):
        return (self.left, self.right)

    def _series(self, x, k):
        return _add(self.left._series(x, k), self.right._series(x, k), -1.0)


@dataclass(frozen=True, eq=True)
class Mul(Expression):
    left: Expression
    right: Expression

    def children(self):
        return (self.left, self.right)

    def _series(self, x, k):
        return _mul(self.left._series(x, k), self.right._series(x, k))


@dataclass(frozen=True, eq=True)
class Div(Expression):
    left: Expression
    right: Expression

    def children(self):
        return (self.left, self.right)

    def _series(self, x, k):
        return _div(self.left._series(x, k), self.right._series(x, k))


@dataclass(frozen=True, eq=True)
class Pow(Expression):
    base: Expression
    exponent: int

    def children(self):
        return (self.base,)

    def _series(self, x, k):
        return _pow(self.base._series(x, k), self.exponent)


@dataclass(frozen=True, eq=True)
class Func(Expression):
    name: str
    arg: Expression

    def __post_init__(self):
        if self.name not in FUNCTIONS:
            raise ValueError(f"unknown function {self.name!r}")

    def children(self):
        return (self.arg,)

    def _series(self, x, k):
        a = self.arg._series(x, k)
        name = self.name
        if isinstance(a, float):
            if name == "sqrt":
                if not a > 0.0:
                    raise EvaluationError(f"sqrt of non-positive constant {a!r}")
                return math.sqrt(a)
            return float(getattr(np, name)(a))
        if name == "sqrt":
            raise EvaluationError("sqrt is only defined on positive constants")
        if name == "exp":
            return kern.series_exp(a)
        s, c = kern.series_sincos(a)
        return s if name == "sin" else c


@dataclass(frozen=True, eq=True)
class Shift(Expression):
    """``arg(x + omega)``."""

    arg: Expression
    omega: float

    def children(self):
        return (self.arg,)

    def _series(self, x, k):
        return self.arg._series(x + self.omega, k)


X = Var()


# ---------------------------------------------------------------------------
# structural transforms


def _rebuild(node, kids):
    if isinstance(node, (Neg,)):
        return Neg(kids[0])
    if isinstance(node, (Add, Sub, Mul, Div)):
        return type(node)(kids[0], kids[1])
    if isinstance(node, Pow):
        return Pow(kids[0], node.exponent)
    if isinstance(node, Func):
        return Func(node.name, kids[0])
    if isinstance(node, Shift):
        return Shift(kids[0], node.omega)
    return node


def _substitute(node, inner):
    if isinstance(node, Var):
        return inner
    if isinstance(node, Shift):
        # arg(y + omega) with y := inner
        return _substitute(node.arg, Add(inner, Const(node.omega)))
    kids = node.children()
    if not kids:
        return node
    return _rebuild(node, [_substitute(c, inner) for c in kids])


def _bind(node, values):
    if isinstance(node, Param):
        return Const(values[node.name]) if node.name in values else node
    kids = node.children()
    if not kids:
        return node
    return _rebuild(node, [_bind(c, values) for c in kids])


def translate(expr: Expression, omega: float) -> Expression:
    """Return the expression ``x -> expr(x + omega)``.

    Shifts are merged, so translating twice equals translating once by the sum,
    and a zero shift (or an ``x``-free expression) is returned unchanged.
    """
    omega = float(omega)
    if omega == 0.0 or not expr.has_var:
        return expr
    if isinstance(expr, Shift):
        total = expr.omega + omega
        return expr.arg if total == 0.0 else Shift(expr.arg, total)
    return Shift(expr, omega)


# ---------------------------------------------------------------------------
# printing

_PREC_ADD, _PREC_MUL, _PREC_UNARY, _PREC_POW, _PREC_ATOM = 1, 2, 3, 4, 5


def _fmt_number(v):
    if v == int(v) and abs(v) < 1e15:
        return str(int(v)) if v != 0 or math.copysign(1.0, v) > 0 else "0"
    return repr(float(v))


def _prec(node):
    if isinstance(node, (Add, Sub)):
        return _PREC_ADD
    if isinstance(node, (Mul, Div)):
        return _PREC_MUL
    if isinstance(node, Neg):
        return _PREC_UNARY
    if isinstance(node, Const) and node.value < 0:
        return _PREC_UNARY
    if isinstance(node, Pow):
        return _PREC_POW
    return _PREC_ATOM


def _wrap(node, min_prec):
    s = to_string(node)
    return f"({s})" if _prec(node) < min_prec else s


def to_string(node: Expression) -> str:
    """Canonical text; ``parse(to_string(e)) == e`` for every parsed ``e``."""
    if isinstance(node, Const):
        return _fmt_number(node.value)
    if isinstance(node, Var):
        return "x"
    if isinstance(node, Param):
        return node.name
    if isinstance(node, Neg):
        arg = node.arg
        if isinstance(arg, Const) or _prec(arg) < _PREC_UNARY:
            return f"-({to_string(arg)})"
        return f"-{to_string(arg)}"
    if isinstance(node, (Add, Sub)):
        op = "+" if isinstance(node, Add) else "-"
        return f"{_wrap(node.left, _PREC_ADD)} {op} {_wrap(node.right, _PREC_ADD + 1)}"
    if isinstance(node, (Mul, Div)):
        op = "*" if isinstance(node, Mul) else "/"
        return f"{_wrap(node.left, _PREC_MUL)}{op}{_wrap(node.right, _PREC_MUL + 1)}"
    if isinstance(node, Pow):
        return f"{_wrap(node.base, _PREC_ATOM)}^{node.exponent}"
    if isinstance(node, Func):
        return f"{node.name}({to_string(node.arg)})"
    if isinstance(node, Shift):
        return f"shift({to_string(node.arg)}, {_fmt_number(node.omega)})"
    raise TypeError(f"unknown node {node!r}")
