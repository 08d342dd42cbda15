"""Numpy reference implementation of the hot kernels.

Truncated Taylor series are stored as float64 arrays of shape ``(K + 1, N)``:
row ``n`` holds the n-th normalized coefficient ``f^(n)(x) / n!`` at each of
the ``N`` evaluation points.
"""
import numpy as np


def series_mul(a, b):
    K = a.shape[0]
    c = np.empty_like(a)
    for n in range(K):
        c[n] = np.einsum("ij,ij->j", a[: n + 1], b[n::-1])
    return c


def series_div(a, b):
    K = a.shape[0]
    c = np.empty_like(a)
    b0 = b[0]
    for n in range(K):
        acc = a[n].copy()
        for i in range(1, n + 1):
            acc -= b[i] * c[n - i]
        c[n] = acc / b0
    return c


def series_exp(a):
    K = a.shape[0]
    e = np.empty_like(a)
    e[0] = np.exp(a[0])
    for n in range(1, K):
        acc = np.zeros_like(a[0])
        for i in range(1, n + 1):
            acc += i * a[i] * e[n - i]
        e[n] = acc / n
    return e


def series_sincos(a):
    K = a.shape[0]
    s = np.empty_like(a)
    c = np.empty_like(a)
    s[0] = np.sin(a[0])
    c[0] = np.cos(a[0])
    for n in range(1, K):
        acc_s = np.zeros_like(a[0])
        acc_c = np.zeros_like(a[0])
        for i in range(1, n + 1):
            ia = i * a[i]
            acc_s += ia * c[n - i]
            acc_c += ia * s[n - i]
        s[n] = acc_s / n
        c[n] = -acc_c / n
    return s, c


def series_compose(outer, inner):
    """Horner evaluation of ``sum_r outer[r] * (inner - inner[0])**r``."""
    K = outer.shape[0]
    d = inner.copy()
    d[0] = 0.0
    res = np.zeros_like(outer)
    res[0] = outer[K - 1]
    for r in range(K - 2, -1, -1):
        res = series_mul(res, d)
        res[0] += outer[r]
    return res


def cluster_counts(T, centers, members, delta):
    """For each center row, count member rows within ``delta`` in sup norm."""
    sub = T[members]
    m = len(centers)
    counts = np.empty(m, dtype=np.int64)
    chunk = max(1, 4_000_000 // max(1, sub.shape[0] * sub.shape[1]))
    for start in range(0, m, chunk):
        block = T[centers[start : start + chunk]]
        dist = np.abs(block[:, None, :] - sub[None, :, :]).max(axis=2)
        counts[start : start + chunk] = (dist <= delta).sum(axis=1)
    return counts
