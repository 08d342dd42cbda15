"""Kernel backend selection.

The compiled Cython module is used when it was built; otherwise, or when the
environment variable ``GFNETS_PURE_PYTHON`` is set to a non-empty value other
than ``0``, the numpy implementation is used.  ``BACKEND`` names the active
choice.
"""
import os

import numpy as np

from . import _pykernels

_force_pure = os.environ.get("GFNETS_PURE_PYTHON", "") not in ("", "0")

_compiled = None
if not _force_pure:
    try:
        from . import _ckernels as _compiled
    except ImportError:
        _compiled = None

_impl = _compiled if _compiled is not None else _pykernels
BACKEND = "cython" if _compiled is not None else "numpy"


def available_backends():
    """Mapping of backend name to kernel module, for comparisons and benchmarks."""
    out = {"numpy": _pykernels}
    if _compiled is not None:
        out["cython"] = _compiled
    else:
        try:
            from . import _ckernels

            out["cython"] = _ckernels
        except ImportError:
            pass
    return out


def _c(a):
    return np.ascontiguousarray(a, dtype=np.float64)


def series_mul(a, b):
    return _impl.series_mul(_c(a), _c(b))


def series_div(a, b):
    return _impl.series_div(_c(a), _c(b))


def series_exp(a):
    return _impl.series_exp(_c(a))


def series_sincos(a):
    return _impl.series_sincos(_c(a))


def series_compose(outer, inner):
    return _impl.series_compose(_c(outer), _c(inner))


def cluster_counts(T, centers, members, delta):
    """Number of ``members`` rows of ``T`` within sup-distance ``delta`` of each ``centers`` row."""
    return _impl.cluster_counts(
        _c(T),
        np.ascontiguousarray(centers, dtype=np.int64),
        np.ascontiguousarray(members, dtype=np.int64),
        float(delta),
    )
