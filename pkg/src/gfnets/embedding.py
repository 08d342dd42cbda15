"""Moment-vanishing mollifiers and the regularization embedding ``T -> (T * ρ_ε)_ε``.

The mollifier is defined through its Fourier profile

    ρ̂(ξ) = e^{-t} Σ_{j<M} t^j / j!,      t = ξ² / (2σ²),

a Gaussian times a truncated exponential series.  Its Taylor expansion at 0 is
``1 - t^M/M! + ...``, so ``ρ̂^{(k)}(0) = 0`` for ``1 ≤ k < 2M`` and every moment
``μ_k = ∫ x^k ρ`` with ``1 ≤ k < 2M`` vanishes identically.  The width ``σ`` is
chosen so that ``ρ̂`` stays within ``plateau_tol`` of 1 on ``[-1, 1]``.  Unlike a
compactly supported plateau, this profile makes ``ρ`` decay like a Gaussian,
which keeps the high moments computable in double precision.

``ρ`` and its derivatives are produced by quadrature of the inverse Fourier
integral ``ρ^{(n)}(y) = (1/π) ∫_0^Ξ ρ̂(ξ) ξ^n cos(yξ + nπ/2) dξ``.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.special import gammainc, gammaincc, gammainccinv

from .errors import MomentFailure
from .jetcalc import SmoothFunction, as_function, parse
from .nets import EpsSchedule, Net
from .quadrature import composite_rule, refine

DEFAULT_K = 8
#: quadrature tolerance for regularization integrals
QUAD_TOL = 1e-10
_T_MAX = 100.0  # spectral cutoff: ρ̂ < e^{-100} t^{M-1} beyond it
_CHUNK = 1 << 21


class Mollifier:
    """Even Schwartz mollifier with moments ``1..K`` vanishing.

    Parameters
    ----------
    K : int
        Number of vanishing moments to guarantee (``K ≥ 1``).
    plateau_tol : float
        Maximal deviation of ``ρ̂`` from 1 on ``[-1, 1]``.
    spectral_panels : int
        Gauss-Legendre panels used for the inverse Fourier integral.
    """

    def __init__(self, K: int = DEFAULT_K, plateau_tol: float = 1e-10, spectral_panels: int = 64):
        if K < 1:
            raise ValueError("K must be at least 1")
        self.K = int(K)
        self.M = (self.K + 2) // 2  # flat through order 2M - 1 >= K
        self.plateau_tol = float(plateau_tol)
        t1 = float(_gammaincinv_lower(self.M, self.plateau_tol))
        self.sigma = math.sqrt(1.0 / (2.0 * t1))
        self.cutoff = self.sigma * math.sqrt(2.0 * _T_MAX)
        self.radius = 12.0 / self.sigma
        self.spectral_panels = int(spectral_panels)
        self.moments = np.zeros(self.K + 1)

    # spectral side -----------------------------------------------------

    def hat(self, xi) -> np.ndarray:
        """Fourier profile ``ρ̂(ξ)``."""
        t = np.asarray(xi, dtype=float) ** 2 / (2 * self.sigma**2)
        return gammaincc(self.M, t)

    @cached_property
    def _spectral_nodes(self):
        xi, w = composite_rule(0.0, self.cutoff, self.spectral_panels)
        return xi, w * self.hat(xi) / math.pi

    def derivs_at(self, y, n: int) -> np.ndarray:
        """``ρ^{(j)}(y)`` for ``j = 0..n``; shape ``(n + 1, len(y))``."""
        y = np.asarray(y, dtype=float).reshape(-1)
        xi, w = self._spectral_nodes
        powers = w[:, None] * xi[:, None] ** np.arange(n + 1)[None, :]
        c = np.empty((y.size, n + 1))
        s = np.empty((y.size, n + 1))
        step = max(1, (1 << 22) // xi.size)
        for a in range(0, y.size, step):
            phase = np.outer(y[a : a + step], xi)
            c[a : a + step] = np.cos(phase) @ powers
            s[a : a + step] = np.sin(phase) @ powers
        out = np.empty((n + 1, y.size))
        for j in range(n + 1):
            # cos(a + jπ/2) cycles through cos, -sin, -cos, sin
            out[j] = (c[:, j], -s[:, j], -c[:, j], s[:, j])[j % 4]
        return out

    def __call__(self, y):
        y = np.asarray(y, dtype=float)
        return self.derivs_at(y.reshape(-1), 0)[0].reshape(y.shape)

    def as_function(self) -> "MollifierFunction":
        return MollifierFunction(self)

    # moments -----------------------------------------------------------

    def compute_moments(self, panels: int = 32) -> np.ndarray:
        """``μ_k = ∫ x^k ρ`` for ``k = 0..K`` by composite Gauss-Legendre over ``[-R, R]``."""

        def evaluate(p):
            x, w = composite_rule(-self.radius, self.radius, p)
            r = self(x)
            pw = x[None, :] ** np.arange(self.K + 1)[:, None]
            terms = pw * (w * r)[None, :]
            return terms.sum(axis=1), np.abs(terms).sum(axis=1)

        mu, _ = refine(evaluate, panels=panels, tol=1e-13, max_panels=1024)
        return mu

    def residuals(self):
        """``(|μ_0 - 1|, |μ_1|, ..., |μ_K|)``."""
        r = np.abs(self.moments.copy())
        r[0] = abs(self.moments[0] - 1.0)
        return r

    def tail_bound(self) -> float:
        """``max |ρ|`` on a band just outside ``[-R, R]``."""
        x = np.linspace(self.radius, 1.5 * self.radius, 64)
        return float(np.abs(self(x)).max())

    def header(self) -> dict:
        return {
            "K": self.K,
            "M": self.M,
            "sigma": self.sigma,
            "radius": self.radius,
            "plateau_tol": self.plateau_tol,
            "spectral_panels": self.spectral_panels,
            "spectral_cutoff": self.cutoff,
            "hat_at_1": float(self.hat(1.0)),
            "moments": [float(m) for m in self.moments],
            "residuals": [float(r) for r in self.residuals()],
            "tail_bound": self.tail_bound(),
        }

    # tabulation --------------------------------------------------------

    def table(self, h: float = 0.01):
        n = int(round(self.radius / h))
        x = h * np.arange(-n, n + 1)
        return x, self(x)

    def export(self, csv_path, json_path, h: float = 0.01):
        """Write ``(x, ρ(x))`` rows to ``csv_path`` and the header to ``json_path``."""
        x, r = self.table(h)
        with open(csv_path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x", "rho"])
            for a, b in zip(x, r):
                w.writerow([repr(float(a)), repr(float(b))])
        hdr = dict(self.header(), h=h, points=int(x.size))
        with open(json_path, "w") as fh:
            json.dump(hdr, fh, indent=2, sort_keys=True)

    @classmethod
    def load(cls, csv_path, json_path) -> "Mollifier":
        """Rebuild from an exported header and check the table against it."""
        with open(json_path) as fh:
            hdr = json.load(fh)
        m = build_mollifier(hdr["K"], hdr["plateau_tol"], hdr["spectral_panels"])
        data = np.loadtxt(csv_path, delimiter=",", skiprows=1, ndmin=2)
        if data.size and np.max(np.abs(m(data[:, 0]) - data[:, 1])) > 1e-12:
            raise ValueError("tabulated ρ does not match its header")
        return m

    # Peano kernel ------------------------------------------------------

    def peano_kernel(self, z, m: int, panels: int = 8) -> np.ndarray:
        """Kernel ``κ_m`` of the order-``m`` Taylor remainder of ``f * ρ_ε - f``.

        ``κ_m(z) = (-1)^m/(m-1)! ∫_z^∞ (y-z)^{m-1} ρ(y) dy`` for ``z > 0`` and
        ``(-1)^{m+1}/(m-1)! ∫_{-∞}^z (y-z)^{m-1} ρ(y) dy`` for ``z < 0``.
        Valid for ``m ≤ 2M`` since it uses that moments ``1..m-1`` vanish.
        """
        if m > 2 * self.M:
            raise ValueError(f"Taylor order {m} exceeds the flat order {2 * self.M}")
        z = np.asarray(z, dtype=float).reshape(-1)
        u, wu = composite_rule(0.0, 1.0, panels)
        R = self.radius
        pos = z >= 0
        lo = np.where(pos, z, -R)
        hi = np.where(pos, R, z)
        span = hi - lo
        y = lo[:, None] + span[:, None] * u[None, :]
        rho = self(y.ravel()).reshape(y.shape)
        integ = ((y - z[:, None]) ** (m - 1) * rho * wu[None, :]).sum(axis=1) * span
        sign = np.where(pos, (-1.0) ** m, (-1.0) ** (m + 1))
        return sign * integ / math.factorial(m - 1)


def _gammaincinv_lower(a, p):
    # solve P(a, t) = p, i.e. Q(a, t) = 1 - p, without losing p to rounding
    from scipy.special import gammaincinv

    t = gammaincinv(a, p)
    if not np.isfinite(t) or t <= 0:
        t = gammainccinv(a, 1.0 - p)
    # one Newton step on log P for extra accuracy
    for _ in range(3):
        P = gammainc(a, t)
        dens = math.exp((a - 1) * math.log(t) - t - math.lgamma(a))
        t = t - (P - p) / dens
    return t


def build_mollifier(K: int = DEFAULT_K, plateau_tol: float = 1e-10, spectral_panels: int = 64,
                    mu0_tol: float = 1e-8, moment_tol: float = 1e-6) -> Mollifier:
    """Build a mollifier and verify its moment residuals.

    Raises
    ------
    MomentFailure
        If ``|μ_0 - 1| ≥ mu0_tol`` or ``|μ_k| ≥ moment_tol`` for some ``1 ≤ k ≤ K``.
    """
    m = Mollifier(K, plateau_tol, spectral_panels)
    coarse = Mollifier(K, plateau_tol, spectral_panels // 2)
    probe = np.linspace(-m.radius, m.radius, 41)
    if np.max(np.abs(m(probe) - coarse(probe))) > 1e-12 * np.max(np.abs(m(probe))):
        raise MomentFailure(0, float("nan"), 1e-12)
    m.moments = m.compute_moments()
    res = m.residuals()
    if res[0] >= mu0_tol:
        raise MomentFailure(0, float(res[0]), mu0_tol)
    for k in range(1, K + 1):
        if res[k] >= moment_tol:
            raise MomentFailure(k, float(res[k]), moment_tol)
    return m


class MollifierFunction(SmoothFunction):
    """``ρ`` viewed as a smooth function, for use as a convolution kernel."""

    def __init__(self, mollifier: Mollifier):
        self.mollifier = mollifier

    def _derivs(self, x, k):
        return self.mollifier.derivs_at(x, k)


# ---------------------------------------------------------------------------
# distributions and regularization


@dataclass(frozen=True)
class DistributionRep:
    """``T = Σ f_i^{(i)}`` given by pairs ``(i, f_i)`` with bounded continuous ``f_i``."""

    terms: tuple = field(default_factory=tuple)

    def __post_init__(self):
        terms = tuple((int(i), as_function(f)) for i, f in self.terms)
        for i, _ in terms:
            if not 0 <= i <= 4:
                raise ValueError("derivative order of a representative must lie in 0..4")
        object.__setattr__(self, "terms", terms)

    @classmethod
    def smooth(cls, f):
        return cls(((0, f),))

    @classmethod
    def from_config(cls, items):
        """``[{"order": i, "f": "<expr>"}, ...]`` or a bare expression string."""
        if isinstance(items, str):
            return cls.smooth(parse(items))
        return cls(tuple((it.get("order", 0), parse(it["f"])) for it in items))

    @property
    def order(self):
        return max((i for i, _ in self.terms), default=0)

    def derivative(self) -> "DistributionRep":
        return DistributionRep(tuple((i + 1, f) for i, f in self.terms))

    def __add__(self, other):
        return DistributionRep(self.terms + other.terms)

    def scaled(self, c: float) -> "DistributionRep":
        return DistributionRep(tuple((i, c * f) for i, f in self.terms))

    def check_bounded(self, grid) -> bool:
        return all(np.all(np.isfinite(f(np.asarray(grid, dtype=float)))) for _, f in self.terms)


class Regularized(SmoothFunction):
    """``x -> Σ_i ε^{-i} ∫ f_i(x - εy) ρ^{(i)}(y) dy`` with derivatives moved onto ``ρ``."""

    def __init__(self, rep: DistributionRep, mollifier: Mollifier, eps: float, tol: float = QUAD_TOL):
        if not 0.0 < eps <= 1.0:
            raise ValueError("ε must lie in (0, 1]")
        self.rep = rep if isinstance(rep, DistributionRep) else DistributionRep.smooth(rep)
        self.mollifier = mollifier
        self.eps = float(eps)
        self.tol = tol
        self.panels_used = None

    def _derivs(self, x, k):
        R, eps = self.mollifier.radius, self.eps
        top = self.rep.order + k

        def evaluate(panels):
            y, w = composite_rule(-R, R, panels)
            rho = self.mollifier.derivs_at(y, top)
            out = np.zeros((k + 1, x.size))
            scale = np.zeros((k + 1, x.size))
            step = max(1, _CHUNK // y.size)
            for i, f in self.rep.terms:
                for a in range(0, x.size, step):
                    xs = x[a : a + step]
                    vals = f((xs[:, None] - eps * y[None, :]).ravel()).reshape(xs.size, y.size)
                    for j in range(k + 1):
                        c = eps ** -(i + j)
                        kern = w * rho[i + j]
                        out[j, a : a + step] += c * (vals @ kern)
                        scale[j, a : a + step] += c * (np.abs(vals) @ np.abs(kern))
            return out, scale

        value, self.panels_used = refine(evaluate, panels=8, tol=self.tol, max_panels=512)
        return value


def regularize(T, mollifier: Mollifier, eps: float, tol: float = QUAD_TOL) -> Regularized:
    """Regularization ``T * ρ_ε`` of a finite-order representative ``T``."""
    return Regularized(T, mollifier, eps, tol)


def embed(T, mollifier: Mollifier, domain: str = "R") -> Net:
    """The net ``ε -> T * ρ_ε``."""
    rep = T if isinstance(T, DistributionRep) else DistributionRep.smooth(T)
    return Net(lambda eps: Regularized(rep, mollifier, eps), domain, label="embed")


class TaylorResidual(SmoothFunction):
    """``f * ρ_ε - f`` through its integral Taylor remainder.

    With ``m`` Taylor terms killed by the vanishing moments,
    ``(f * ρ_ε - f)^{(j)}(x) = ε^m ∫ f^{(m+j)}(x - εz) κ_m(z) dz``.
    Evaluating the remainder directly avoids the cancellation in
    ``f * ρ_ε - f``, which would drown the ``O(ε^m)`` signal in rounding.
    The kernel itself carries rounding noise of about ``1e-10`` relative to
    ``∫|κ_m|``, hence the looser default refinement tolerance.
    """

    def __init__(self, f, mollifier: Mollifier, eps: float, m: int | None = None, tol: float = 1e-8):
        self.f = as_function(f)
        self.mollifier = mollifier
        self.eps = float(eps)
        self.m = mollifier.K + 1 if m is None else int(m)
        self.tol = tol

    def _derivs(self, x, k):
        R, eps, m = self.mollifier.radius, self.eps, self.m

        def evaluate(panels):
            z, w = composite_rule(-R, R, panels)
            kern = w * _kernel_cache(self.mollifier, m, panels)
            out = np.zeros((k + 1, x.size))
            scale = np.zeros((k + 1, x.size))
            step = max(1, _CHUNK // (z.size * (m + k + 1)))
            for a in range(0, x.size, step):
                xs = x[a : a + step]
                d = self.f.derivs((xs[:, None] - eps * z[None, :]).ravel(), m + k)
                d = d.reshape(m + k + 1, xs.size, z.size)
                for j in range(k + 1):
                    out[j, a : a + step] = d[m + j] @ kern
                    scale[j, a : a + step] = np.abs(d[m + j]) @ np.abs(kern)
            return eps**m * out, eps**m * scale

        value, _ = refine(evaluate, panels=4, tol=self.tol, max_panels=256)
        return value


_KERNELS: dict = {}


def _kernel_cache(mollifier, m, panels):
    key = (id(mollifier), m, panels)
    if key not in _KERNELS:
        z, _ = composite_rule(-mollifier.radius, mollifier.radius, panels)
        _KERNELS[key] = mollifier.peano_kernel(z, m)
    return _KERNELS[key]


def consistency_residual(f, mollifier: Mollifier, schedule: EpsSchedule | None = None,
                         domain: str = "R") -> Net:
    """The residual net ``ε -> f * ρ_ε - f``; negligible for smooth bounded ``f``."""
    f = parse(f) if isinstance(f, str) else as_function(f)
    net = Net(lambda eps: TaylorResidual(f, mollifier, eps), domain, label="consistency residual")
    net.meta["taylor_order"] = mollifier.K + 1
    if schedule is not None:
        net.meta["schedule"] = schedule.to_dict()
    return net


def direct_residual(f, mollifier: Mollifier, eps: float) -> SmoothFunction:
    """``regularize(f) - f`` evaluated directly (cancellation-prone reference route)."""
    f = as_function(f)
    return Regularized(DistributionRep.smooth(f), mollifier, eps) - f
