"""ε-indexed nets of smooth functions and their moderate/negligible classification.

A net is probed on a geometric schedule of ε values.  For each semi-norm
order ``k`` the sup-norm sums ``|u_ε|_k = Σ_{j≤k} sup|u_ε^(j)|`` are fitted
by a straight line in log-log coordinates; the slope estimates the exponent
``m`` in ``|u_ε|_k = O(ε^m)``.  Verdicts only certify a finite rectangle of
orders ``k ≤ k_max`` and exponents ``m ≤ ceiling``, and the report says so.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field, replace
from typing import Callable

import numpy as np

from .errors import DegenerateFit, DomainError, InconsistentEvidence
from .jetcalc import Expression, SmoothFunction, as_function, parse

R_WINDOW = (-50.0, 50.0)
J_WINDOW = (0.0, 100.0)
GRID_POINTS = 4001

MODERATE = "Moderate"
NEGLIGIBLE = "Negligible"
NEITHER = "Neither"


def default_grid(domain: str = "R", points: int = GRID_POINTS) -> np.ndarray:
    lo, hi = R_WINDOW if domain == "R" else J_WINDOW
    return np.linspace(lo, hi, points)


@dataclass(frozen=True)
class EpsSchedule:
    """Geometric schedule ``ε_i = eps0 * ratio**i`` inside ``I = (0, 1]``."""

    eps0: float = 0.5
    ratio: float = 0.7
    n: int = 12

    def __post_init__(self):
        if not 0.0 < self.eps0 <= 1.0:
            raise ValueError("eps0 must lie in (0, 1]")
        if not 0.0 < self.ratio < 1.0:
            raise ValueError("ratio must lie in (0, 1)")
        if self.n < 6:
            raise ValueError("a slope fit needs at least 6 schedule points")

    @property
    def values(self) -> np.ndarray:
        return self.eps0 * self.ratio ** np.arange(self.n)

    def halved(self) -> "EpsSchedule":
        return replace(self, eps0=self.eps0 / 2)

    def to_dict(self):
        return {"eps0": self.eps0, "ratio": self.ratio, "n": self.n}


class Net:
    """A family ``ε -> u_ε`` of smooth functions on ``R`` or on ``J = [0, ∞)``."""

    def __init__(self, generator: Callable[[float], SmoothFunction], domain: str = "R", label=None):
        if domain not in ("R", "J"):
            raise ValueError("domain must be 'R' or 'J'")
        self.generator = generator
        self.domain = domain
        self.label = label
        self.meta = {}
        self.grid = None  # preferred evaluation grid, if the default window does not fit

    @classmethod
    def from_expression(cls, expr, domain="R", param="eps"):
        """Net from an expression whose parameter ``param`` is bound to ε."""
        e = parse(expr, params=(param,)) if isinstance(expr, str) else expr
        if e.params - {param}:
            raise ValueError(f"unbound parameters {sorted(e.params - {param})}")
        return cls(lambda eps: e.bind(**{param: eps}), domain, label=str(e))

    @classmethod
    def constant(cls, f, domain="R"):
        f = as_function(f)
        return cls(lambda eps: f, domain, label=str(f) if isinstance(f, Expression) else None)

    def __call__(self, eps: float) -> SmoothFunction:
        return self.generator(float(eps))

    at = __call__

    def default_grid(self) -> np.ndarray:
        return default_grid(self.domain) if self.grid is None else self.grid

    def check_grid(self, grid):
        if self.domain == "J" and np.min(grid) < 0.0:
            raise DomainError("grid leaves J = [0, +inf) for a net defined on J")

    def _combine(self, other, op, label_op):
        dom = "J" if "J" in (self.domain, getattr(other, "domain", "R")) else "R"
        if isinstance(other, Net):
            gen = lambda e: op(self(e), other(e))
            label = f"({self.label}) {label_op} ({other.label})"
        else:
            gen = lambda e: op(self(e), other)
            label = f"({self.label}) {label_op} {other}"
        return Net(gen, dom, label=label)

    def __add__(self, other):
        return self._combine(other, lambda a, b: a + b, "+")

    def __sub__(self, other):
        return self._combine(other, lambda a, b: a - b, "-")

    def __mul__(self, other):
        return self._combine(other, lambda a, b: a * b, "*")

    __radd__ = __add__
    __rmul__ = __mul__

    def __neg__(self):
        return Net(lambda e: -self(e), self.domain, label=f"-({self.label})")

    def seminorm_table(self, schedule: EpsSchedule, k_max: int, grid=None) -> np.ndarray:
        """Rows are schedule values, columns ``k = 0..k_max``."""
        grid = self.default_grid() if grid is None else np.asarray(grid, dtype=float)
        self.check_grid(grid)
        rows = []
        for eps in schedule.values:
            d = self(eps).derivs(grid, k_max)
            with np.errstate(invalid="ignore"):
                sups = np.abs(d).max(axis=1)
            rows.append(np.cumsum(np.nan_to_num(sups, nan=np.inf)))
        return np.array(rows)


def seminorm(f: SmoothFunction, k: int, grid) -> float:
    """``|f|_{k,∞} = Σ_{j≤k} max_grid |f^(j)|``."""
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise ValueError("empty grid")
    d = as_function(f).derivs(grid, k)
    return float(np.abs(d).max(axis=1).sum())


# ---------------------------------------------------------------------------
# order fitting


def slope_tolerance(m: float) -> float:
    return 0.05 * abs(m) + 0.1


@dataclass
class OrderFit:
    k: int
    slope: float | None
    intercept: float | None
    r2: float | None
    identically_negligible: bool = False
    tail_slope: float | None = None  # slope over the smaller-ε half of the schedule

    def to_dict(self):
        return asdict(self)


def fit_loglog(eps, values, floor=1e-300, cap=1e300, k=0, mask=None) -> OrderFit:
    """Least-squares line through ``(log ε, log clip(s))``.

    ``mask`` marks the entries to fit; the others were unresolvable (below a
    noise floor).  Fewer than four resolvable entries count as degenerate.
    """
    s = np.nan_to_num(np.asarray(values, dtype=float), nan=cap, posinf=cap)
    eps = np.asarray(eps, dtype=float)
    if mask is not None:
        mask = np.asarray(mask, dtype=bool)
        if mask.sum() < 4:
            raise DegenerateFit(f"fewer than 4 resolvable semi-norms of order {k}")
        s, eps = s[mask], eps[mask]
    if np.all(s <= floor):
        raise DegenerateFit(f"all semi-norms of order {k} are below {floor:g}")
    x = np.log(eps)
    y = np.log(np.clip(s, floor, cap))
    A = np.vstack([x, np.ones_like(x)]).T
    (slope, intercept), *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    ss_res = float(np.sum(resid**2))
    # a flat series (sampling jitter only) is a perfect fit of slope 0
    r2 = 1.0 if ss_tot <= 1e-8 * len(y) else 1.0 - ss_res / ss_tot
    h = len(x) // 2
    tail = float(np.polyfit(x[h:], y[h:], 1)[0])
    return OrderFit(k, float(slope), float(intercept), max(0.0, r2), tail_slope=tail)


def fit_order(net: Net, k: int, schedule: EpsSchedule | None = None, grid=None, floor=1e-300) -> OrderFit:
    """Fit the ε-exponent of the order-``k`` semi-norm of ``net``."""
    schedule = schedule or EpsSchedule()
    table = net.seminorm_table(schedule, k, grid)
    return fit_loglog(schedule.values, table[:, k], floor=floor, k=k)


# ---------------------------------------------------------------------------
# classification


@dataclass(frozen=True)
class Thresholds:
    m_cap: float = 12.0  # largest admissible growth exponent for moderateness
    ceiling: int = 6  # certification level for negligibility
    r2_min: float = 0.9
    floor: float = 1e-300
    cap: float = 1e300

    def to_dict(self):
        return asdict(self)


@dataclass
class Classification:
    verdict: str
    per_k: list
    thresholds: Thresholds
    schedule: EpsSchedule
    moderate_k: list = field(default_factory=list)
    negligible_k: list = field(default_factory=list)
    certified_level: int = 0
    seminorms: np.ndarray | None = None

    @property
    def is_moderate(self):
        return self.verdict in (MODERATE, NEGLIGIBLE)

    @property
    def is_negligible(self):
        return self.verdict == NEGLIGIBLE

    def slopes(self):
        return [f.slope for f in self.per_k]

    def to_dict(self):
        return {
            "verdict": self.verdict,
            "per_k": [
                {
                    "k": f.k,
                    "slope": f.slope,
                    "r2": f.r2,
                    "tail_slope": f.tail_slope,
                    "identically_negligible": f.identically_negligible,
                    "moderate": mod,
                    "negligible": neg,
                }
                for f, mod, neg in zip(self.per_k, self.moderate_k, self.negligible_k)
            ],
            "thresholds": self.thresholds.to_dict(),
            "schedule": self.schedule.to_dict(),
            "certified_level": self.certified_level,
            "probed_levels": list(range(1, self.thresholds.ceiling + 1)),
        }

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), sort_keys=True, **kw)


def _moderate_at(fit: OrderFit, th: Thresholds) -> bool:
    if fit.identically_negligible:
        return True
    bound = -th.m_cap - slope_tolerance(th.m_cap)
    if fit.slope < bound or fit.tail_slope < bound:
        return False
    # a poor R² is harmless when growth is not accelerating towards ε -> 0
    # (bounded nets approaching a limit, super-polynomial decay)
    return fit.r2 >= th.r2_min or fit.tail_slope >= fit.slope - slope_tolerance(fit.slope)


def _passes_level(fit: OrderFit, m: float) -> bool:
    return fit.identically_negligible or fit.slope >= m - slope_tolerance(m)


def classify_table(eps, table, thresholds: Thresholds | None = None, schedule=None,
                   mask=None) -> Classification:
    """Classify a precomputed semi-norm table (rows ε, columns order)."""
    th = thresholds or Thresholds()
    fits = []
    for k in range(table.shape[1]):
        try:
            fits.append(fit_loglog(eps, table[:, k], th.floor, th.cap, k,
                                   None if mask is None else mask[:, k]))
        except DegenerateFit:
            fits.append(OrderFit(k, None, None, None, identically_negligible=True))
    moderate = [_moderate_at(f, th) for f in fits]
    negligible = [m and _passes_level(f, th.ceiling) for f, m in zip(fits, moderate)]
    if all(negligible):
        verdict = NEGLIGIBLE
    elif all(moderate):
        verdict = MODERATE
    else:
        verdict = NEITHER
    level = 0
    for m in range(1, th.ceiling + 1):
        if all(mod and _passes_level(f, m) for f, mod in zip(fits, moderate)):
            level = m
    return Classification(
        verdict, fits, th, schedule, moderate, negligible, level, seminorms=np.asarray(table)
    )


def classify(net: Net, k_max: int = 2, schedule: EpsSchedule | None = None, grid=None,
             thresholds: Thresholds | None = None) -> Classification:
    """Moderate / Negligible / Neither verdict for ``net`` on orders ``0..k_max``."""
    schedule = schedule or EpsSchedule()
    table = net.seminorm_table(schedule, k_max, grid)
    return classify_table(schedule.values, table, thresholds, schedule)


def write_seminorm_csv(path, classification: Classification):
    """Semi-norm table as CSV: one row per ε, one column per order."""
    table = classification.seminorms
    eps = classification.schedule.values
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["eps"] + [f"k{k}" for k in range(table.shape[1])])
        for e, row in zip(eps, table):
            w.writerow([repr(float(e))] + [repr(float(v)) for v in row])


# ---------------------------------------------------------------------------
# Landau-Kolmogorov and the null characterization


def lk_bound(f: SmoothFunction, p: int, n: int, grid):
    """Both sides of ``‖f^(p)‖ ≤ 2π ‖f‖^(1-p/n) ‖f^(n)‖^(p/n)`` with grid sups."""
    if not 0 < p < n:
        raise ValueError("need 0 < p < n")
    d = np.abs(as_function(f).derivs(np.asarray(grid, dtype=float), n)).max(axis=1)
    lhs = float(d[p])
    rhs = float(2 * math.pi * d[0] ** (1 - p / n) * d[n] ** (p / n))
    return lhs, rhs


def lk_check(f: SmoothFunction, p: int, n: int, grid) -> bool:
    lhs, rhs = lk_bound(f, p, n, grid)
    return lhs <= rhs * (1 + 1e-12)


@dataclass
class NullReport:
    order0_negligible: bool
    per_k_negligible: list
    moderate: bool
    consistent: bool
    classification: Classification
    lk_holds: bool

    def to_dict(self):
        return {
            "order0_negligible": self.order0_negligible,
            "per_k_negligible": self.per_k_negligible,
            "moderate": self.moderate,
            "consistent": self.consistent,
            "lk_holds": self.lk_holds,
            "classification": self.classification.to_dict(),
        }


def null_characterization(net: Net, k_max: int = 2, schedule: EpsSchedule | None = None,
                          grid=None, thresholds: Thresholds | None = None) -> NullReport:
    """Check that order-0 negligibility plus moderateness gives negligibility at every order.

    Moderateness is probed up to order ``2 k_max`` because the interpolation
    argument bounds ``‖u^(j)‖`` by ``‖u‖`` and ``‖u^(2j)‖``; the Landau-Kolmogorov
    inequality itself is checked on every schedule value.
    """
    schedule = schedule or EpsSchedule()
    th = thresholds or Thresholds()
    grid = net.default_grid() if grid is None else np.asarray(grid, dtype=float)
    table = net.seminorm_table(schedule, 2 * k_max, grid)
    wide = classify_table(schedule.values, table, th, schedule)
    cls = classify_table(schedule.values, table[:, : k_max + 1], th, schedule)
    per_k = list(cls.negligible_k)
    order0 = per_k[0]
    moderate = wide.is_moderate
    consistent = not (order0 and moderate) or all(per_k)

    lk_ok = True
    for eps in schedule.values:
        f = net(eps)
        for j in range(1, k_max + 1):
            lhs, rhs = lk_bound(f, j, 2 * j, grid)
            if lhs > rhs * (1 + 1e-12) and lhs > th.floor:
                lk_ok = False
    report = NullReport(order0, per_k, moderate, consistent, cls, lk_ok)
    if not consistent:
        raise InconsistentEvidence(
            f"order-0 negligible and moderate, but orders {[k for k, v in enumerate(per_k) if not v]} "
            "are not negligible on this schedule/grid"
        )
    return report
