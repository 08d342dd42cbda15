"""Expression language and arbitrary-order jet arithmetic."""
from .expr import (
    Add,
    Const,
    Div,
    Expression,
    Func,
    Mul,
    Neg,
    Param,
    Pow,
    Shift,
    Sub,
    Var,
    X,
    to_string,
    translate,
)
from .functions import (
    Constant,
    Derived,
    Product,
    Restricted,
    Shifted,
    SmoothFunction,
    Sum,
    as_function,
    sup_derivatives,
)
from .jet import K_MAX, Jet, compose_jets, jet
from .parser import parse

__all__ = [
    "Add",
    "Const",
    "Constant",
    "Derived",
    "Div",
    "Expression",
    "Func",
    "Jet",
    "K_MAX",
    "Mul",
    "Neg",
    "Param",
    "Pow",
    "Product",
    "Restricted",
    "Shift",
    "Shifted",
    "SmoothFunction",
    "Sub",
    "Sum",
    "Var",
    "X",
    "as_function",
    "compose_jets",
    "jet",
    "parse",
    "sup_derivatives",
    "to_string",
    "translate",
]
