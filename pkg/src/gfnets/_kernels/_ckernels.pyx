# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels; same contracts as ``_pykernels``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport exp, sin, cos, fabs

cnp.import_array()


def series_mul(double[:, ::1] a, double[:, ::1] b):
    cdef Py_ssize_t K = a.shape[0], N = a.shape[1]
    cdef Py_ssize_t n, i, p
    out = np.zeros((K, N))
    cdef double[:, ::1] c = out
    for n in range(K):
        for i in range(n + 1):
            for p in range(N):
                c[n, p] += a[i, p] * b[n - i, p]
    return out


def series_div(double[:, ::1] a, double[:, ::1] b):
    cdef Py_ssize_t K = a.shape[0], N = a.shape[1]
    cdef Py_ssize_t n, i, p
    out = np.empty((K, N))
    cdef double[:, ::1] c = out
    for n in range(K):
        for p in range(N):
            c[n, p] = a[n, p]
        for i in range(1, n + 1):
            for p in range(N):
                c[n, p] -= b[i, p] * c[n - i, p]
        for p in range(N):
            c[n, p] /= b[0, p]
    return out


def series_exp(double[:, ::1] a):
    cdef Py_ssize_t K = a.shape[0], N = a.shape[1]
    cdef Py_ssize_t n, i, p
    out = np.zeros((K, N))
    cdef double[:, ::1] e = out
    for p in range(N):
        e[0, p] = exp(a[0, p])
    for n in range(1, K):
        for i in range(1, n + 1):
            for p in range(N):
                e[n, p] += i * a[i, p] * e[n - i, p]
        for p in range(N):
            e[n, p] /= n
    return out


def series_sincos(double[:, ::1] a):
    cdef Py_ssize_t K = a.shape[0], N = a.shape[1]
    cdef Py_ssize_t n, i, p
    cdef double ia
    s_out = np.zeros((K, N))
    c_out = np.zeros((K, N))
    cdef double[:, ::1] s = s_out
    cdef double[:, ::1] c = c_out
    for p in range(N):
        s[0, p] = sin(a[0, p])
        c[0, p] = cos(a[0, p])
    for n in range(1, K):
        for i in range(1, n + 1):
            for p in range(N):
                ia = i * a[i, p]
                s[n, p] += ia * c[n - i, p]
                c[n, p] -= ia * s[n - i, p]
        for p in range(N):
            s[n, p] /= n
            c[n, p] /= n
    return s_out, c_out


def series_compose(double[:, ::1] outer, double[:, ::1] inner):
    cdef Py_ssize_t K = outer.shape[0], N = outer.shape[1]
    cdef Py_ssize_t r, n, i, p
    res_arr = np.zeros((K, N))
    tmp_arr = np.zeros((K, N))
    cdef double[:, ::1] res = res_arr
    cdef double[:, ::1] tmp = tmp_arr
    for p in range(N):
        res[0, p] = outer[K - 1, p]
    for r in range(K - 2, -1, -1):
        # tmp = res * (inner - inner[0]); the shifted inner series has no constant term
        for n in range(K):
            for p in range(N):
                tmp[n, p] = 0.0
            for i in range(1, n + 1):
                for p in range(N):
                    tmp[n, p] += inner[i, p] * res[n - i, p]
        for n in range(K):
            for p in range(N):
                res[n, p] = tmp[n, p]
        for p in range(N):
            res[0, p] += outer[r, p]
    return res_arr


def cluster_counts(double[:, ::1] T, cnp.int64_t[::1] centers, cnp.int64_t[::1] members, double delta):
    cdef Py_ssize_t m = centers.shape[0], n = members.shape[0], P = T.shape[1]
    cdef Py_ssize_t a, b, q, ia, ib
    cdef bint close
    out = np.zeros(m, dtype=np.int64)
    cdef cnp.int64_t[::1] counts = out
    for a in range(m):
        ia = centers[a]
        for b in range(n):
            ib = members[b]
            close = True
            for q in range(P):
                if fabs(T[ia, q] - T[ib, q]) > delta:
                    close = False
                    break
            if close:
                counts[a] += 1
    return out
