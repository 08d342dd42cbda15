import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gfnets import _kernels
from gfnets._kernels import available_backends

BACKENDS = available_backends()
needs_cython = pytest.mark.skipif("cython" not in BACKENDS, reason="compiled core not built")


def series(seed, K=7, N=13):
    rng = np.random.default_rng(seed)
    return rng.standard_normal((K, N))


@needs_cython
@settings(max_examples=25)
@given(st.integers(0, 2**31))
def test_series_kernels_agree(seed):
    py, cy = BACKENDS["numpy"], BACKENDS["cython"]
    a, b = series(seed), series(seed + 1)
    b[0] += 3.0 * np.sign(b[0])
    for name, args in [("series_mul", (a, b)), ("series_div", (a, b)), ("series_exp", (a * 0.3,)),
                       ("series_compose", (a, b))]:
        np.testing.assert_allclose(getattr(cy, name)(*args), getattr(py, name)(*args), rtol=1e-12, atol=1e-12)
    for x, y in zip(cy.series_sincos(a), py.series_sincos(a)):
        np.testing.assert_allclose(x, y, rtol=1e-12, atol=1e-12)


@needs_cython
def test_cluster_counts_agree():
    rng = np.random.default_rng(3)
    T = rng.uniform(-1, 1, (300, 20))
    centers = np.arange(0, 300, 3, dtype=np.int64)
    members = np.arange(300, dtype=np.int64)
    for delta in (0.5, 1.0, 1.5):
        a = BACKENDS["cython"].cluster_counts(T, centers, members, delta)
        b = BACKENDS["numpy"].cluster_counts(T, centers, members, delta)
        assert np.array_equal(a, b)


def test_series_identities():
    # exp(a) * exp(-a) = 1 and sin^2 + cos^2 = 1 as truncated series
    a = series(0) * 0.5
    one = _kernels.series_mul(_kernels.series_exp(a), _kernels.series_exp(-a))
    ref = np.zeros_like(a)
    ref[0] = 1.0
    np.testing.assert_allclose(one, ref, atol=1e-12)
    s, c = _kernels.series_sincos(a)
    np.testing.assert_allclose(_kernels.series_mul(s, s) + _kernels.series_mul(c, c), ref, atol=1e-12)
    b = series(1)
    b[0] += 4.0
    np.testing.assert_allclose(_kernels.series_mul(_kernels.series_div(a, b), b), a, atol=1e-12)


def test_pure_python_fallback():
    env = dict(os.environ, GFNETS_PURE_PYTHON="1")
    code = ("import numpy as np; from gfnets import _kernels as k; from gfnets.jetcalc import parse;"
            "x=np.linspace(0,1,5); print(k.BACKEND, float(abs(parse('exp(sin(x))').derivs(x,3)[3]).max()))")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    name, val = out.stdout.split()
    assert name == "numpy"
    env["GFNETS_PURE_PYTHON"] = "0"
    out2 = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    name2, val2 = out2.stdout.split()
    assert name2 == ("cython" if "cython" in BACKENDS else "numpy")
    assert abs(float(val) - float(val2)) < 1e-12 * max(1.0, abs(float(val)))
