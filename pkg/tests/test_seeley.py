import json
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gfnets.errors import ConditioningFailure, DomainError
from gfnets.jetcalc import parse
from gfnets.nets import EpsSchedule, Net, Thresholds, classify, seminorm
from gfnets.seeley import (
    build_sequence,
    extend,
    extend_net,
    extension_bound_check,
    smoothness_gap,
)

U = parse("exp(-x)*sin(x)")


def test_L1():
    s = build_sequence(1)
    assert s.b == (-1.0,) and s.a == (1.0,) and s.residuals == (0.0,)


def test_L2_reflection_weights():
    s = build_sequence(2)
    assert s.a == (3.0, -2.0) and s.method == "rational"
    assert max(s.residuals) == 0.0


def test_L12_residual_and_agreement_of_solvers():
    r = build_sequence(12, method="rational")
    m = build_sequence(12, method="mpmath")
    assert r.max_residual < 1e-8 and m.max_residual < 1e-8
    assert all(mpmath.almosteq(mpmath.mpf(a), mpmath.mpf(b), 1e-45) for a, b in zip(r.a_stored, m.a_stored))


def test_rational_weights_lagrange_oracle():
    # Σ a_l p(b_l) = p(1) for deg p < L, so a_l is the Lagrange basis ℓ_l evaluated at 1
    L = 7
    b = [Fraction(-(2**l)) for l in range(L)]
    ref = []
    for l in range(L):
        v = Fraction(1)
        for m in range(L):
            if m != l:
                v *= (1 - b[m]) / (b[l] - b[m])
        ref.append(v)
    s = build_sequence(L)
    assert [str(float(v)) for v in ref] == [str(a) for a in s.a]
    assert all(mpmath.almosteq(mpmath.mpf(v.numerator) / v.denominator, mpmath.mpf(a), 1e-45)
               for v, a in zip(ref, s.a_stored))


def test_sequence_invariants():
    for L in (3, 8, 16):
        s = build_sequence(L)
        assert all(b < 0 for b in s.b) and all(np.diff(s.b) < 0)
        assert s.max_residual < 1e-8
        C = s.growth_constants(6)
        assert all(np.isfinite(C)) and all(np.diff(C) >= 0)


def test_double_precision_storage_fails_at_L12():
    with pytest.raises(ConditioningFailure):
        build_sequence(12, digits=17)


def test_json_roundtrip():
    d = json.loads(build_sequence(4).to_json())
    assert d["L"] == 4 and len(d["a"]) == 4 and len(d["C"]) == 9


def test_extend_constant_and_identity():
    x = np.linspace(-2, 2, 41)
    E1 = extend(parse("1"), build_sequence(6))
    assert np.max(np.abs(E1(x) - 1)) < 1e-12
    Ex = extend(parse("x"), build_sequence(3))
    assert np.max(np.abs(Ex(x[x < 0]) - x[x < 0])) < 1e-13


def test_extend_direct_summation():
    s = build_sequence(4)
    ref = sum(a * np.exp(0.25 * b) for a, b in zip(s.a, s.b))
    assert extend(parse("exp(-x)"), s)(np.array([-0.25]))[0] == pytest.approx(ref, rel=1e-14)


def test_extension_window():
    s = build_sequence(8)
    E = extend(U, s, u_range=100.0)
    with pytest.raises(DomainError):
        E(np.array([-1.0]))  # b_7 · (-1) = 128 > 100


def test_restriction_identity():
    x = np.linspace(0, 100, 1001)
    assert np.array_equal(extend(U, build_sequence(8))(x), U(x))


@given(st.floats(-3, 3), st.floats(-3, 3))
def test_linearity(a, b):
    s = build_sequence(6)
    f, g = parse("exp(-x)"), parse("cos(x)")
    x = np.linspace(-1, 1, 41)
    lhs = extend(a * f + b * g, s)(x)
    rhs = a * extend(f, s)(x) + b * extend(g, s)(x)
    assert np.max(np.abs(lhs - rhs)) <= 1e-12 * max(1, abs(a), abs(b)) * s.moment_sum(0)


def test_gaps_L8():
    gaps = smoothness_gap(U, build_sequence(8), 5)
    assert max(gaps) < 1e-6
    assert max(smoothness_gap(parse("exp(-x)"), build_sequence(8), 5)) < 1e-8


def test_gap_examples():
    s = build_sequence(6)
    g = smoothness_gap(parse("1"), s, 3)
    assert g[0] == pytest.approx(s.residual(0), abs=1e-60) and g[1:] == [0.0, 0.0, 0.0]
    assert smoothness_gap(parse("x^2"), s, 2)[2] < 1e-7


@pytest.mark.parametrize("L", [3, 6, 8, 12])
def test_residual_transfer(L):
    s = build_sequence(L)
    d0 = U.derivs(np.array([0.0]), L - 1)[:, 0]
    gaps = smoothness_gap(U, s, L - 1)
    for n, g in enumerate(gaps):
        assert g == pytest.approx(s.residual(n) * abs(d0[n]), rel=1e-6, abs=1e-300)


def test_gaps_stay_at_rounding_level():
    # exact weights give zero gaps; stored weights leave at most the rounding bound
    for L in (4, 6, 8, 12):
        s = build_sequence(L)
        d0 = np.abs(U.derivs(np.array([0.0]), 3)[:, 0])
        for n, g in enumerate(smoothness_gap(U, s, 3)):
            assert g <= s.rounding_bound(n) * max(d0[n], 1e-300)
    for L in (1, 2, 3):
        s = build_sequence(L)
        assert max(smoothness_gap(U, s, L - 1)) == 0.0


@pytest.mark.parametrize("k", [0, 1, 2, 3])
def test_bound_check_L8(k):
    assert extension_bound_check(U, build_sequence(8), k)


def test_bound_check_examples():
    c = extension_bound_check(parse("exp(-x)"), build_sequence(4), 2)
    assert c and c.lhs <= c.C_k * 3 * (1 + 1e-12)
    c1 = extension_bound_check(parse("1"), build_sequence(5), 3)
    assert c1 and c1.u_seminorm == 1.0
    assert extension_bound_check(U, build_sequence(6), 3)


def test_extend_net_negligible_slope():
    s = build_sequence(4)
    th = Thresholds(ceiling=2)
    E = extend_net(Net.from_expression("eps^2*exp(-x)", "J"), s, schedule=EpsSchedule())
    c = classify(E, 2, grid=E.grid, thresholds=th)
    assert c.verdict == "Negligible" and c.certified_level == 2
    assert all(abs(v - 2) < 1e-6 for v in c.slopes())
    assert E.meta["vanishing_at_infinity"]


def test_extend_net_constant():
    E = extend_net(Net.from_expression("1", "J"), build_sequence(4))
    assert classify(E, 1, grid=E.grid).verdict == "Moderate"
    assert np.max(np.abs(E(0.3)(E.grid) - 1)) < 1e-12


def test_extend_net_oscillatory():
    s = build_sequence(4)
    u = Net.from_expression("exp(-x)*sin(x/eps)", "J")
    E = extend_net(u, s)
    cu = classify(u, 2)
    cE = classify(E, 2, grid=E.grid)
    assert cu.is_moderate and cE.is_moderate
    # per-ε sandwich: |u|_k ≤ |Eu|_k ≤ C_k |u|_k
    j0 = np.linspace(0, 100, 4001)
    images = np.outer(s.b, E.grid[E.grid < 0]).ravel()
    jg = np.concatenate([j0, images[images <= 100]])
    for eps in EpsSchedule().values[::3]:
        for k in range(3):
            sE = seminorm(E(eps), k, E.grid)
            assert seminorm(u(eps), k, j0) * (1 - 1e-12) <= sE
            assert sE <= s.growth_constant(k) * seminorm(u(eps), k, jg) * (1 + 1e-12)
