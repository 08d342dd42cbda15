"""Asymptotic almost automorphy: vanishing checks, Bochner probes, decompositions, composition.

Almost automorphy cannot be decided from finitely many samples.  Everything
here is evidence at a finite horizon: decompositions act on specs that carry
their principal/corrective structure, and probes verify that structure.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as kern
from .errors import NoConvergentSubsequence, OrderTooHigh, UniquenessViolation
from .jetcalc import (
    Add,
    Const,
    Expression,
    Func,
    Jet,
    Mul,
    Sub,
    X,
    as_function,
    compose_jets,
    jet,
    parse,
)
from .nets import EpsSchedule, Net, Thresholds, classify, default_grid

TAIL_WINDOWS = tuple((float(a), float(a + 20)) for a in range(0, 100, 20))
TAIL_TOL = 1e-4
FDB_MAX_ORDER = 8
PROBE_TOL = 0.1  # return-limit residual, relative to sup|g| on the probe grid
UNIQUENESS_TOL = 1e-6
# a weight exponent one short of the true growth doubles the weighted sup; sampling jitter stays far below 10%
GROWTH_SLACK = 1.1


# ---------------------------------------------------------------------------
# vanishing at +infinity


def tail_profile(h, j_max: int, windows=TAIL_WINDOWS, points: int = 401) -> np.ndarray:
    """``sup_{window} |h^{(j)}|``; shape ``(j_max + 1, len(windows))``."""
    h = as_function(h)
    out = np.empty((j_max + 1, len(windows)))
    for w, (a, b) in enumerate(windows):
        d = h.derivs(np.linspace(a, b, points), j_max)
        out[:, w] = np.abs(d).max(axis=1)
    return out


def check_vanishing(h, j_max: int = 0, windows=TAIL_WINDOWS, tol: float = TAIL_TOL) -> bool:
    """Whether ``h^{(j)} -> 0`` at ``+∞`` for ``j ≤ j_max``, judged on tail windows.

    Each order must end below ``tol`` on the last window, and window sups may
    not rise by more than ``tol`` from one window to the next.
    """
    prof = tail_profile(h, j_max, windows)
    if not np.all(np.isfinite(prof)):
        return False
    last_ok = np.all(prof[:, -1] < tol)
    trend_ok = np.all(np.diff(prof, axis=1) <= tol)
    return bool(last_ok and trend_ok)


# ---------------------------------------------------------------------------
# Bochner probes


@dataclass
class BochnerProbe:
    """Result of a subsequence extraction along ``s``.

    Attributes
    ----------
    indices : ndarray
        Increasing indices ``m_k`` of the selected subsequence.
    g_tilde : ndarray
        Limit estimate on the probe grid (mean of the selected translates).
    residuals : ndarray
        ``max_k |g̃(x - s_{m_k}) - g(x)|`` at each probe grid point.
    """

    s: np.ndarray
    indices: np.ndarray
    grid: np.ndarray
    g_tilde: np.ndarray
    residuals: np.ndarray
    delta: float
    scale: float
    trace: list = field(default_factory=list)

    @property
    def residual(self) -> float:
        return float(self.residuals.max()) if self.residuals.size else 0.0

    def passed(self, tol: float = PROBE_TOL) -> bool:
        return self.residual <= tol * max(self.scale, 1e-300) + 1e-12

    def to_dict(self):
        return {
            "sequence_length": int(self.s.size),
            "indices": [int(i) for i in self.indices],
            "delta": self.delta,
            "scale": self.scale,
            "residual": self.residual,
            "residuals": [float(r) for r in self.residuals],
            "grid": [float(x) for x in self.grid],
            "g_tilde": [float(v) for v in self.g_tilde],
            "trace": self.trace,
        }


def period_sequence(n: int = 4000, step: float = 2 * math.pi) -> np.ndarray:
    """``s_m = step * m`` for ``m = 1..n``."""
    return step * np.arange(1, n + 1, dtype=float)


def bochner_probe(g, s, grid=None, target: float = 1e-2, floor: float = 1e-13,
                  min_size: int = 8, max_centers: int = 256) -> BochnerProbe:
    """Greedy Cauchy clustering of the translates ``g(· + s_m)``.

    Starting from the sup-norm diameter, the radius ``δ`` is halved; at each
    level the candidate center with the most translates within ``δ`` is kept
    together with those translates, so clusters are nested.  Halving stops
    once ``δ ≤ floor·scale`` or when a further halving would leave fewer than
    ``min_size`` members.

    Raises
    ------
    NoConvergentSubsequence
        If the cluster falls below ``min_size`` before ``δ ≤ target·scale``:
        the sequence is too short to exhibit recurrence at that precision.
    """
    g = as_function(g)
    s = np.asarray(s, dtype=float)
    grid = np.linspace(0.0, 2 * math.pi, 64) if grid is None else np.asarray(grid, dtype=float)
    T = g((grid[None, :] + s[:, None]).ravel()).reshape(s.size, grid.size)
    scale = float(np.abs(T).max()) if T.size else 0.0
    if scale == 0.0:
        members = np.arange(s.size)
        delta = 0.0
        trace = []
    else:
        members = np.arange(s.size)
        delta = float((T.max(axis=0) - T.min(axis=0)).max())
        trace = [{"delta": delta, "size": int(members.size)}]
        while delta > floor * scale:
            trial = delta / 2
            stride = max(1, members.size // max_centers)
            centers = members[::stride]
            counts = kern.cluster_counts(T, centers, members, trial)
            best = int(np.argmax(counts))
            if counts[best] < min_size:
                if delta > target * scale:
                    raise NoConvergentSubsequence(
                        f"no cluster of {min_size} translates within {trial:.3g} "
                        f"among {s.size} sequence terms"
                    )
                break
            c = centers[best]
            close = np.abs(T[members] - T[c][None, :]).max(axis=1) <= trial
            members = members[close]
            delta = trial
            trace.append({"delta": delta, "size": int(members.size)})
    members = np.sort(members)
    g_tilde = T[members].mean(axis=0)
    # return limit: g̃(x - s_k) = mean_m g(x - s_k + s_m)
    diff = s[members][None, :] - s[members][:, None]  # [k, m]
    pts = grid[None, None, :] + diff[:, :, None]
    back = g(pts.ravel()).reshape(pts.shape).mean(axis=1)
    residuals = np.abs(back - g(grid)[None, :]).max(axis=0)
    return BochnerProbe(s, members, grid, g_tilde, residuals, delta, scale, trace)


# ---------------------------------------------------------------------------
# specs and decompositions


def _expr(obj, params=("eps",)):
    if isinstance(obj, Expression):
        return obj
    if isinstance(obj, (int, float)):
        return Const(float(obj))
    return parse(obj, params=params)


@dataclass(frozen=True)
class AAASpec:
    """``f = g + h`` on ``J`` with principal ``g`` and corrective ``h``.

    Both parts may depend on the parameter ``eps``.
    """

    principal: Expression
    corrective: Expression

    def __post_init__(self):
        object.__setattr__(self, "principal", _expr(self.principal))
        object.__setattr__(self, "corrective", _expr(self.corrective))

    @classmethod
    def from_config(cls, d):
        return cls(d["principal"], d["corrective"])

    @property
    def total(self) -> Expression:
        return Add(self.principal, self.corrective)

    def parts(self, eps: float | None = None):
        g, h = self.principal, self.corrective
        if eps is not None:
            g, h = g.bind(eps=eps), h.bind(eps=eps)
        return g, h

    def at(self, eps: float | None = None) -> Expression:
        g, h = self.parts(eps)
        return Add(g, h)

    def net(self) -> Net:
        n = Net(lambda eps: self.at(eps), "J", label=str(self.total))
        n.meta["spec"] = self
        return n

    def to_dict(self):
        return {"principal": str(self.principal), "corrective": str(self.corrective)}


@dataclass
class UniquenessReport:
    principal_diff: float
    corrective_diff: float
    sum_diff: float
    probes: list

    def to_dict(self):
        return {
            "principal_diff": self.principal_diff,
            "corrective_diff": self.corrective_diff,
            "sum_diff": self.sum_diff,
            "probes": [p.to_dict() for p in self.probes],
        }


def decompose_uniqueness_test(spec1: AAASpec, spec2: AAASpec, r_grid=None, j_grid=None,
                              eps: float | None = None, s=None, probe_grid=None,
                              tol: float = UNIQUENESS_TOL, probe_tol: float = PROBE_TOL):
    """Check that two decompositions of the same sum have equal parts.

    Both principal parts are probed first; a failed return limit means one of
    them is not almost automorphic, i.e. the decomposition was corrupted.

    Raises
    ------
    ValueError
        If the two sums differ on the ``J`` grid by more than ``1e-12``.
    UniquenessViolation
        On a failed probe or part differences above ``tol``.
    """
    r_grid = default_grid("R") if r_grid is None else np.asarray(r_grid, dtype=float)
    j_grid = default_grid("J") if j_grid is None else np.asarray(j_grid, dtype=float)
    g1, h1 = spec1.parts(eps)
    g2, h2 = spec2.parts(eps)
    sum_diff = float(np.abs((g1(j_grid) + h1(j_grid)) - (g2(j_grid) + h2(j_grid))).max())
    scale = max(1.0, float(np.abs(g1(j_grid) + h1(j_grid)).max()))
    if sum_diff > 1e-12 * scale:
        raise ValueError(f"the specs have different sums (gap {sum_diff:.3g})")
    s = period_sequence() if s is None else s
    probes = []
    for name, g in (("spec1", g1), ("spec2", g2)):
        p = bochner_probe(g, s, probe_grid)
        probes.append(p)
        if not p.passed(probe_tol):
            raise UniquenessViolation(
                f"principal part of {name} fails the Bochner return limit "
                f"(residual {p.residual:.3g}, scale {p.scale:.3g})"
            )
    pd = float(np.abs(g1(r_grid) - g2(r_grid)).max())
    cd = float(np.abs(h1(j_grid) - h2(j_grid)).max())
    if pd >= tol or cd >= tol:
        raise UniquenessViolation(f"part differences {pd:.3g} (principal), {cd:.3g} (corrective)")
    return UniquenessReport(pd, cd, sum_diff, probes)


@dataclass
class Decomposition:
    principal: Net
    corrective: Net
    diagnostics: dict

    def to_dict(self):
        return self.diagnostics


def _probe_eps(schedule: EpsSchedule, n: int = 3):
    vals = schedule.values
    idx = sorted({0, len(vals) // 2, len(vals) - 1})[:n]
    return [float(vals[i]) for i in idx]


def decompose_net(spec: AAASpec, schedule: EpsSchedule | None = None, k_max: int = 2,
                  j_max: int = 2, s=None, probe_grid=None, thresholds: Thresholds | None = None,
                  probe_tol: float = PROBE_TOL) -> Decomposition:
    """ε-wise split of the net built from ``spec`` into principal and corrective nets.

    Diagnostics record the principal classification, Bochner residuals on the
    first, middle and last schedule values, per-ε vanishing of the corrective
    part, and the reassembly error on ``J``.
    """
    schedule = schedule or EpsSchedule()
    s = period_sequence() if s is None else s
    principal = Net(lambda eps: spec.parts(eps)[0], "R", label=str(spec.principal))
    corrective = Net(lambda eps: spec.parts(eps)[1], "J", label=str(spec.corrective))
    cls_p = classify(principal, k_max, schedule, thresholds=thresholds)
    cls_c = classify(corrective, k_max, schedule, thresholds=thresholds)
    probes = {}
    for eps in _probe_eps(schedule):
        p = bochner_probe(spec.parts(eps)[0], s, probe_grid)
        probes[repr(eps)] = {"residual": p.residual, "scale": p.scale, "passed": p.passed(probe_tol),
                             "subsequence_size": int(p.indices.size)}
    vanishing = {repr(float(e)): check_vanishing(spec.parts(e)[1], j_max) for e in schedule.values}
    jg = default_grid("J")
    roundtrip = max(
        float(np.abs(spec.parts(e)[0](jg) + spec.parts(e)[1](jg) - spec.at(e)(jg)).max())
        for e in schedule.values
    )
    diagnostics = {
        "spec": spec.to_dict(),
        "principal_classification": cls_p.to_dict(),
        "corrective_classification": cls_c.to_dict(),
        "bochner": probes,
        "corrective_vanishing": vanishing,
        "roundtrip_error": roundtrip,
        "passed": bool(
            cls_p.is_moderate
            and all(p["passed"] for p in probes.values())
            and all(vanishing.values())
            and roundtrip <= 1e-12
        ),
    }
    return Decomposition(principal, corrective, diagnostics)


# ---------------------------------------------------------------------------
# Faà di Bruno


def partitions(j: int):
    """All ``(l_1, ..., l_j)`` with ``Σ i l_i = j``."""

    def rec(i, rest):
        if i == 0:
            if rest == 0:
                yield ()
            return
        for li in range(rest // i + 1):
            for tail in rec(i - 1, rest - i * li):
                yield tail + (li,)

    return list(rec(j, j))


def faa_di_bruno_terms(Fjet: Jet, ujet: Jet, j: int) -> list:
    """The individual partition terms of ``(F∘u)^{(j)}``."""
    if j > FDB_MAX_ORDER:
        raise OrderTooHigh(f"partition enumeration is limited to order {FDB_MAX_ORDER}")
    if Fjet.order < j or ujet.order < j:
        raise ValueError("jets must have order at least j")
    if j == 0:
        return [Fjet.d[0]]
    terms = []
    for ls in partitions(j):
        r = sum(ls)
        t = Fjet.d[r]
        for i, li in enumerate(ls, start=1):
            t *= (ujet.d[i] / math.factorial(i)) ** li / math.factorial(li)
        terms.append(math.factorial(j) * t)
    return terms


def faa_di_bruno(Fjet: Jet, ujet: Jet, j: int) -> float:
    """``(F∘u)^{(j)}(x)`` from the jet of ``F`` at ``u(x)`` and the jet of ``u`` at ``x``.

    Raises
    ------
    OrderTooHigh
        For ``j > 8``.
    """
    return float(math.fsum(faa_di_bruno_terms(Fjet, ujet, j)))


_LEAVES = ("x", "1", "2", "0.5", "-1.5", "3")


def random_expression(rng, depth: int = 3, leaf_ok: bool = False) -> Expression:
    """A random DSL expression that is defined on all of ``ℝ``."""
    if depth == 0 or (leaf_ok and rng.random() < 0.25):
        return parse(rng.choice(_LEAVES)) if rng.random() < 0.6 else X
    kind = rng.choice(["add", "sub", "mul", "sin", "cos", "exp", "pow", "div"])
    a = random_expression(rng, depth - 1, True)
    if kind in ("sin", "cos"):
        return Func(kind, a)
    if kind == "exp":
        return Func("exp", Func("sin", a))  # keep magnitudes moderate
    if kind == "pow":
        return a ** int(rng.integers(2, 4))
    b = random_expression(rng, depth - 1, True)
    if kind == "add":
        return Add(a, b)
    if kind == "sub":
        return Sub(a, b)
    if kind == "mul":
        return Mul(a, b)
    # denominator bounded away from zero
    return a / (Const(2.0) + Func("cos", b))


@dataclass
class FdbCase:
    F: str
    u: str
    x: float
    j: int
    partition_value: float
    jet_value: float
    scale: float

    @property
    def rel_error(self) -> float:
        return abs(self.partition_value - self.jet_value) / max(self.scale, 1e-300)


def faa_di_bruno_check(n_cases: int = 200, j_max: int = 6, seed: int = 0) -> list:
    """Compare the partition sum against Taylor-series composition on random cases.

    The relative error is measured against ``Σ |partition terms|``, the
    natural size of the sum when terms cancel.
    """
    rng = np.random.default_rng(seed)
    cases = []
    while len(cases) < n_cases:
        F, u = random_expression(rng), random_expression(rng)
        if not (F.has_var and u.has_var):
            continue
        x = float(rng.uniform(-2, 2))
        j = int(rng.integers(1, j_max + 1))
        uj = jet(u, x, j)
        Fj = jet(F, uj.d[0], j)
        if not (np.all(np.isfinite(uj.d)) and np.all(np.isfinite(Fj.d))):
            continue
        terms = faa_di_bruno_terms(Fj, uj, j)
        if not any(terms):
            continue
        comp = compose_jets(Fj, uj).d[j]
        cases.append(FdbCase(str(F), str(u), x, j, float(math.fsum(terms)), float(comp),
                             float(sum(abs(t) for t in terms))))
    return cases


# ---------------------------------------------------------------------------
# tempered functions and composition


@dataclass
class TemperedSpec:
    """Expression ``F`` with polynomial growth certificates on ``[-W, W]``.

    ``certificates[j] = N_j`` is the least ``N ≤ 8`` for which
    ``sup (1+|y|)^{-N} |F^{(j)}(y)|`` grows by at most 10% when the window is doubled.
    """

    F: Expression
    k_max: int = 4
    window: float = 100.0
    certificates: list = field(default_factory=list)
    max_exponent: int = 8

    def __post_init__(self):
        self.F = _expr(self.F, params=())
        self.certificates = growth_certificates(self.F, self.k_max, self.window, self.max_exponent)

    @property
    def certified(self) -> bool:
        return all(c is not None for c in self.certificates)

    def covers(self, lo: float, hi: float) -> bool:
        return -self.window <= lo and hi <= self.window

    def to_dict(self):
        return {"F": str(self.F), "window": self.window, "certificates": self.certificates}


def growth_certificates(F, k_max: int, window: float, max_exponent: int = 8, points: int = 4001):
    F = as_function(F)
    small = np.linspace(-window, window, points)
    big = np.linspace(-2 * window, 2 * window, 2 * points - 1)
    with np.errstate(over="ignore", invalid="ignore"):
        ds = np.abs(F.derivs(small, k_max))
        db = np.abs(F.derivs(big, k_max))
    out = []
    for j in range(k_max + 1):
        cert = None
        for N in range(max_exponent + 1):
            ws = np.max(ds[j] / (1 + np.abs(small)) ** N)
            wb = np.max(db[j] / (1 + np.abs(big)) ** N)
            if np.isfinite(ws) and np.isfinite(wb) and wb <= GROWTH_SLACK * ws + 1e-300:
                cert = N
                break
        out.append(cert)
    return out


@dataclass
class Composition:
    composed: Net
    principal: Net
    corrective: Net
    diagnostics: dict


def compose(F, u: AAASpec, schedule: EpsSchedule | None = None, k_max: int = 2, j_max: int = 2,
            s=None, probe_grid=None, thresholds: Thresholds | None = None,
            probe_tol: float = PROBE_TOL) -> Composition:
    """``F∘u`` with principal ``F(g)`` and corrective ``F(g + h) - F(g)``.

    ``F`` is a :class:`TemperedSpec` or an expression; in the latter case the
    growth window is fitted to the observed range of ``u`` on ``J``.
    """
    schedule = schedule or EpsSchedule()
    jg = default_grid("J")
    lo = min(float(u.at(e)(jg).min()) for e in schedule.values)
    hi = max(float(u.at(e)(jg).max()) for e in schedule.values)
    if not isinstance(F, TemperedSpec):
        F = TemperedSpec(_expr(F, params=()), k_max=k_max, window=max(1.0, abs(lo), abs(hi)))
    if not F.certified:
        raise ValueError(f"{F.F} has no growth certificate up to order {F.k_max} on its window")
    if not F.covers(lo, hi):
        raise ValueError(f"range [{lo:g}, {hi:g}] of u leaves the certified window")
    s = period_sequence() if s is None else s

    def parts(eps):
        g, h = u.parts(eps)
        comp = F.F.substitute(Add(g, h))
        prin = F.F.substitute(g)
        return comp, prin, Sub(comp, prin)

    composed = Net(lambda e: parts(e)[0], "J", label="F∘u")
    principal = Net(lambda e: parts(e)[1], "R", label="F(u_aa)")
    corrective = Net(lambda e: parts(e)[2], "J", label="F(u) - F(u_aa)")
    cls = classify(composed, k_max, schedule, thresholds=thresholds)
    probes, vanishing, identity = {}, {}, 0.0
    for e in schedule.values:
        comp, prin, corr = parts(e)
        vanishing[repr(float(e))] = check_vanishing(corr, j_max)
        identity = max(identity, float(np.abs(prin(jg) + corr(jg) - comp(jg)).max()))
    for e in _probe_eps(schedule):
        p = bochner_probe(parts(e)[1], s, probe_grid)
        probes[repr(e)] = {"residual": p.residual, "scale": p.scale, "passed": p.passed(probe_tol)}
    diagnostics = {
        "F": F.to_dict(),
        "u": u.to_dict(),
        "u_range": [lo, hi],
        "classification": cls.to_dict(),
        "bochner": probes,
        "corrective_vanishing": vanishing,
        "identity_error": identity,
        "passed": bool(
            cls.is_moderate
            and all(p["passed"] for p in probes.values())
            and all(vanishing.values())
            and identity <= 1e-12
        ),
    }
    return Composition(composed, principal, corrective, diagnostics)


def report_json(d) -> str:
    return json.dumps(d, sort_keys=True, indent=2)
