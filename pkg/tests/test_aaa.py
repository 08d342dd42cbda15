import math

import numpy as np
import pytest
import sympy as sp
from hypothesis import given
from hypothesis import strategies as st

from gfnets.aaa import (
    AAASpec,
    TemperedSpec,
    bochner_probe,
    check_vanishing,
    compose,
    decompose_net,
    decompose_uniqueness_test,
    faa_di_bruno,
    faa_di_bruno_check,
    partitions,
    period_sequence,
)
from gfnets.embedding import regularize
from gfnets.errors import NoConvergentSubsequence, OrderTooHigh, UniquenessViolation
from gfnets.jetcalc import jet, parse
from gfnets.nets import EpsSchedule, Thresholds

AA = "sin(1/(2+cos(x)+cos(sqrt(2)*x)))"
JG = np.linspace(0, 100, 4001)


# -- vanishing -------------------------------------------------------------


def test_vanishing_examples():
    assert check_vanishing(parse("exp(-x)"), 3)
    assert not check_vanishing(parse("sin(x)"), 0)


def test_algebraic_decay_needs_a_longer_horizon():
    h = parse("1/(1+x^2)")
    # sup on [80, 100] is 1/6401 ≈ 1.56e-4, just above the default tolerance
    assert not check_vanishing(h, 2)
    far = tuple((float(a), float(a + 20)) for a in range(0, 140, 20))
    assert check_vanishing(h, 2, windows=far)


def test_vanishing_rejects_growth():
    assert not check_vanishing(parse("x*exp(-x) + 1e-5*x"), 0)


# -- Bochner probes --------------------------------------------------------


def test_probe_exact_periods():
    p = bochner_probe(parse("sin(x)"), period_sequence(64))
    assert p.residual < 1e-12
    assert np.max(np.abs(p.g_tilde - np.sin(p.grid))) < 1e-12


def test_probe_integer_shifts():
    p = bochner_probe(parse("sin(x)"), np.arange(1, 10_001, dtype=float))
    assert p.residual < 1e-2 and p.passed()
    # oracle: members are near multiples of 2π, so translates agree with sin
    d = np.mod(p.s[p.indices] - np.round(p.s[p.indices] / (2 * math.pi)) * 2 * math.pi, 2 * math.pi)
    spread = np.abs(np.sin(p.grid[None, :] + d[:, None]) - np.sin(p.grid + d[0])[None, :]).max()
    assert spread <= 2 * p.delta + 1e-12


def test_probe_constant():
    p = bochner_probe(parse("2.5"), np.arange(1, 50, dtype=float))
    assert p.residual == 0 and np.all(p.g_tilde == 2.5)


def test_probe_classical_aa_function():
    p = bochner_probe(parse(AA), period_sequence())
    assert p.passed()


def test_probe_rejects_decaying_addition():
    with pytest.raises(NoConvergentSubsequence):
        bochner_probe(parse("x"), period_sequence(64))


# -- decompositions --------------------------------------------------------


def test_uniqueness_genuine():
    a = AAASpec("sin(x)", "exp(-x)")
    r = decompose_uniqueness_test(a, a)
    assert r.principal_diff == 0 and r.corrective_diff == 0
    b = AAASpec("sin(x) + 0", "exp(-x)")
    c = AAASpec("sin(x)", "exp(-x) + 0")
    r = decompose_uniqueness_test(b, c)
    assert max(r.principal_diff, r.corrective_diff) < 1e-6


def test_uniqueness_violation():
    a = AAASpec("sin(x)", "exp(-x)")
    bad = AAASpec("sin(x) + exp(-x)/2", "exp(-x)/2")
    with pytest.raises(UniquenessViolation, match="Bochner"):
        decompose_uniqueness_test(a, bad)


def test_uniqueness_requires_equal_sums():
    with pytest.raises(ValueError):
        decompose_uniqueness_test(AAASpec("sin(x)", "0"), AAASpec("cos(x)", "0"))


def test_decompose_structure_directed():
    d = decompose_net(AAASpec("sin(x)", "eps*exp(-x)"), thresholds=Thresholds(ceiling=1))
    diag = d.diagnostics
    assert diag["passed"] and diag["roundtrip_error"] == 0.0
    assert diag["corrective_classification"]["verdict"] == "Negligible"


def test_decompose_scaled_principal():
    d = decompose_net(AAASpec("sin(x/eps)/eps", "exp(-x)"))
    assert d.diagnostics["passed"]
    assert abs(d.diagnostics["principal_classification"]["per_k"][0]["slope"] + 1) <= 0.1
    assert d.diagnostics["corrective_classification"]["per_k"][0]["slope"] == pytest.approx(0, abs=1e-9)


def test_decompose_aa_principal():
    d = decompose_net(AAASpec(AA, "exp(-x)/eps"))
    diag = d.diagnostics
    assert diag["passed"] and all(diag["corrective_vanishing"].values())
    assert diag["principal_classification"]["verdict"] == "Moderate"
    assert diag["corrective_classification"]["verdict"] == "Moderate"


@given(st.sampled_from(["sin(x)", "cos(2*x)+sin(sqrt(2)*x)", AA]),
       st.sampled_from(["exp(-x)", "x*exp(-x)", "exp(-2*x)*cos(x)"]))
def test_roundtrip(principal, corrective):
    s = AAASpec(principal, corrective)
    g, h = s.parts()
    assert np.max(np.abs(g(JG) + h(JG) - s.at()(JG))) <= 1e-12


def test_product_closure():
    # AAA times AA: the corrective part of the product is h·g2
    s = AAASpec("sin(x)", "exp(-x)")
    g2 = parse("cos(sqrt(2)*x)")
    g, h = s.parts()
    assert check_vanishing(h * g2, 2)
    assert bochner_probe(g * g2, period_sequence()).passed()


def test_convolution_closure(mollifier):
    s = AAASpec("sin(x)", "exp(-x)")
    g, h = s.parts()
    gs = regularize(g, mollifier, 0.5)
    hs = regularize(h, mollifier, 0.5)
    assert check_vanishing(hs, 1)
    assert bochner_probe(gs, period_sequence(256)).passed()


# -- Faà di Bruno ----------------------------------------------------------


def test_partition_counts():
    assert [len(partitions(j)) for j in range(1, 9)] == [1, 2, 3, 5, 7, 11, 15, 22]


def _fdb(F, u, x, j):
    uj = jet(parse(u), x, j)
    return faa_di_bruno(jet(parse(F), uj.d[0], j), uj, j)


def test_fdb_worked_examples():
    assert _fdb("exp(x)", "x^2", 0.0, 4) == 12.0
    assert _fdb("x^2", "sin(x)", 0.0, 4) == -8.0
    for j in range(1, 7):
        assert _fdb("x", "sin(x)*exp(x)", 0.7, j) == jet(parse("sin(x)*exp(x)"), 0.7, j).d[j]


def test_fdb_order_limit():
    with pytest.raises(OrderTooHigh):
        _fdb("exp(x)", "sin(x)", 0.0, 9)


def test_fdb_random_agreement():
    cases = faa_di_bruno_check(200, 6, seed=0)
    assert len(cases) == 200 and {c.j for c in cases} == set(range(1, 7))
    assert max(c.rel_error for c in cases) < 1e-10


@pytest.mark.parametrize("F,u,x,j", [
    ("exp(sin(x))", "x^2 + cos(x)", 0.3, 5),
    ("cos(x)/(2+sin(x))", "exp(-x)*x", -0.4, 4),
    ("x^3", "sin(2*x)+x", 1.1, 6),
])
def test_fdb_symbolic_oracle(F, u, x, j):
    x_ = sp.Symbol("x")
    Fs = sp.sympify(F.replace("^", "**"))
    us = sp.sympify(u.replace("^", "**"))
    ref = float(sp.diff(Fs.subs(x_, us), x_, j).subs(x_, x).evalf(30))
    assert _fdb(F, u, x, j) == pytest.approx(ref, rel=1e-12)


# -- tempered composition --------------------------------------------------


def test_growth_certificates():
    assert TemperedSpec(parse("x^3"), k_max=4).certificates == [3, 2, 1, 0, 0]
    assert TemperedSpec(parse("sin(x)"), k_max=3).certificates == [0, 0, 0, 0]
    assert not TemperedSpec(parse("exp(x)"), k_max=2, window=100).certified


def test_compose_exp():
    u = AAASpec("sin(x)", "exp(-x)")
    c = compose("exp(x)", u, k_max=2)
    d = c.diagnostics
    assert d["passed"] and d["identity_error"] <= 1e-12
    ref = np.exp(np.sin(JG)) * (np.exp(np.exp(-JG)) - 1)
    assert np.max(np.abs(c.corrective(0.5)(JG) - ref)) < 1e-12
    assert check_vanishing(c.corrective(0.5), 2)
    comp = np.exp(np.sin(JG) + np.exp(-JG))
    assert np.max(np.abs(c.principal(0.5)(JG) + c.corrective(0.5)(JG) - comp)) <= 1e-12


def test_compose_square():
    c = compose("x^2", AAASpec("sin(x)", "exp(-x)"), k_max=2)
    ref = 2 * np.sin(JG) * np.exp(-JG) + np.exp(-2 * JG)
    assert np.max(np.abs(c.corrective(0.3)(JG) - ref)) < 1e-14 and c.diagnostics["passed"]


def test_compose_identity():
    u = AAASpec("cos(x)", "x*exp(-x)")
    c = compose("x", u, k_max=1)
    g, h = u.parts()
    assert np.max(np.abs(c.principal(0.2)(JG) - g(JG))) == 0
    assert np.max(np.abs(c.corrective(0.2)(JG) - h(JG))) < 1e-15


def test_compose_eps_dependent():
    c = compose("exp(x)", AAASpec("sin(x)", "eps*exp(-x)"), EpsSchedule(), k_max=1)
    assert c.diagnostics["passed"]
