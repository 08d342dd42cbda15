import math

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gfnets.embedding import (
    DistributionRep,
    Mollifier,
    TaylorResidual,
    build_mollifier,
    consistency_residual,
    direct_residual,
    regularize,
)
from gfnets.errors import MomentFailure
from gfnets.jetcalc import parse
from gfnets.nets import EpsSchedule, classify, fit_order

SIN, COS = parse("sin(x)"), parse("cos(x)")
X10 = np.linspace(-10, 10, 401)


def rho_oracle(m, x):
    """``ρ(x) = (1/π) ∫_0^∞ ρ̂(ξ) cos(xξ) dξ`` by mpmath quadrature, ``ρ̂ = Q(M, ξ²/2σ²)``."""
    mpmath.mp.dps = 30
    M, s = m.M, mpmath.mpf(m.sigma)
    hat = lambda xi: mpmath.gammainc(M, xi**2 / (2 * s**2), mpmath.inf, regularized=True)
    return float(mpmath.quad(lambda xi: hat(xi) * mpmath.cos(x * xi), [0, s, 4 * s, 12 * s, 30 * s]) / mpmath.pi)


def test_moments(mollifier):
    r = mollifier.residuals()
    assert r[0] < 1e-8
    assert r[1] < 1e-12
    assert np.all(r[1:] < 1e-6)
    assert r[6] < 1e-6


def test_even_and_real(mollifier):
    y = np.linspace(0, mollifier.radius, 50)
    assert np.max(np.abs(mollifier(y) - mollifier(-y))) < 1e-15


@pytest.mark.parametrize("x", [0.0, 0.13, 0.4, 1.0])
def test_density_matches_independent_quadrature(mollifier, x):
    assert mollifier(np.array([x]))[0] == pytest.approx(rho_oracle(mollifier, x), abs=1e-12)


def test_plateau(mollifier):
    xi = np.linspace(-1, 1, 101)
    assert np.max(np.abs(mollifier.hat(xi) - 1)) <= mollifier.plateau_tol * (1 + 1e-6)


def test_tail_bound(mollifier):
    assert mollifier.tail_bound() < 1e-12


def test_moment_failure_reported():
    with pytest.raises(MomentFailure):
        build_mollifier(K=8, moment_tol=1e-30)


def test_export_load_roundtrip(tmp_path, mollifier):
    c, j = tmp_path / "rho.csv", tmp_path / "rho.json"
    mollifier.export(c, j, h=0.05)
    m2 = Mollifier.load(c, j)
    assert m2.sigma == mollifier.sigma and np.allclose(m2.moments, mollifier.moments, atol=1e-15)


def test_regularize_constant(mollifier):
    for eps in (1.0, 0.3, 0.01):
        r = regularize(parse("2.5"), mollifier, eps)
        assert np.max(np.abs(r(X10) - 2.5)) < 1e-8


def test_regularize_sin(mollifier):
    r = regularize(SIN, mollifier, 0.05)
    assert np.max(np.abs(r(X10) - np.sin(X10))) < 1e-4


def test_regularize_distributional_derivative(mollifier):
    d = regularize(DistributionRep(((1, SIN),)), mollifier, 0.05)
    c = regularize(COS, mollifier, 0.05)
    assert np.max(np.abs(d(X10) - c(X10))) < 1e-3
    assert np.max(np.abs(d(X10) - np.cos(X10))) < 1e-3


@given(st.floats(0.02, 1.0))
def test_commutes_with_derivatives(eps):
    m = _shared()
    f = parse("sin(x)*cos(2*x) + cos(x/3)")
    rep = DistributionRep.smooth(f)
    dT = regularize(rep.derivative(), m, eps)(X10)
    Td = regularize(rep, m, eps).derivs(X10, 1)[1]
    assert np.max(np.abs(dT - Td)) < 1e-8


@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(0.05, 1.0))
def test_linearity(a, b, eps):
    m = _shared()
    T, S = DistributionRep.smooth(SIN), DistributionRep(((1, COS),))
    lhs = regularize(T.scaled(a) + S.scaled(b), m, eps)(X10)
    rhs = a * regularize(T, m, eps)(X10) + b * regularize(S, m, eps)(X10)
    assert np.max(np.abs(lhs - rhs)) < 1e-12 * max(1, abs(a), abs(b))


_CACHE = {}


def _shared():
    if "m" not in _CACHE:
        _CACHE["m"] = build_mollifier()
    return _CACHE["m"]


def test_spectral_identity(mollifier):
    # ρ * sin(ω·) = ρ̂(ω) sin(ω·); at ε the frequency seen is εω
    eps = 1.0
    f = parse("sin(5*x)")
    r = direct_residual(f, mollifier, eps)(X10)
    ref = (mollifier.hat(5 * eps) - 1) * np.sin(5 * X10)
    assert np.max(np.abs(r - ref)) < 1e-12


def test_taylor_route_matches_direct_route(mollifier):
    f = parse("sin(3*x)")
    for eps in (1.0, 0.5):
        a = TaylorResidual(f, mollifier, eps)(X10)
        b = direct_residual(f, mollifier, eps)(X10)
        assert np.max(np.abs(a - b)) < 1e-12


def test_polynomial_residual_vanishes(mollifier):
    f = parse("x^6 - 3*x^2 + 1")
    net = consistency_residual(f, mollifier)
    for eps in EpsSchedule().values:
        assert np.max(np.abs(net(eps)(X10))) < 1e-8


def test_constant_residual_is_zero(mollifier):
    net = consistency_residual(parse("4"), mollifier)
    assert np.all(net(0.1)(X10) == 0)


def test_sin_residual_order(mollifier):
    fit = fit_order(consistency_residual(SIN, mollifier), 0)
    assert fit.slope >= 4 and fit.r2 >= 0.95
    assert fit.slope == pytest.approx(mollifier.K + 2, abs=0.1)  # odd f: order K + 1 term vanishes too


def test_low_order_mollifier():
    m = build_mollifier(K=4)
    fit = fit_order(consistency_residual(SIN, m), 0)
    assert fit.slope >= 4


def test_diagram_commutes(mollifier):
    c = classify(consistency_residual(parse("cos(x)+sin(2*x)"), mollifier), 1)
    assert c.verdict == "Negligible"


def test_distribution_rep_validation():
    with pytest.raises(ValueError):
        DistributionRep(((5, SIN),))
    rep = DistributionRep.from_config([{"order": 2, "f": "sin(x)"}])
    assert rep.order == 2 and rep.check_bounded(X10)
    assert math.isclose(DistributionRep.from_config("cos(x)").terms[0][1](np.array([0.0]))[0], 1.0)
