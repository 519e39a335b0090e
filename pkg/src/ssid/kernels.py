"""Recursion kernels with a compiled core and a pure-Python fallback.

The compiled extension (ssid._kernels, Cython) is picked at import time when
available; otherwise ssid._kernels_py is used. Both expose the identical
contract, and ``BACKEND`` reports which one is live. benchmarks/bench_kernels.py
compares the two.
"""
from __future__ import annotations

import numpy as np

try:  # pragma: no cover - exercised indirectly depending on the install
    from . import _kernels as _impl

    BACKEND = "compiled"
except ImportError:  # pragma: no cover
    from . import _kernels_py as _impl

    BACKEND = "python"


def _as_c64(x: np.ndarray) -> np.ndarray:
    return np.ascontiguousarray(x, dtype=np.float64)


def driven_recursion(a: np.ndarray, b: np.ndarray, u: np.ndarray,
                     x0: np.ndarray | None = None) -> np.ndarray:
    """States of x_{k+1} = a x_k + b u_k, x_0 included: shape (len(u)+1, n)."""
    a = _as_c64(a)
    b = _as_c64(b)
    u = _as_c64(u)
    if x0 is None:
        x0 = np.zeros(a.shape[0])
    return _impl.driven_recursion(a, b, u, _as_c64(x0))


def filter_recursion(a: np.ndarray, c: np.ndarray, gain: np.ndarray,
                     y: np.ndarray, x0: np.ndarray | None = None):
    """Innovations and filter states of the recursion driven by outputs y.

    e_k = y_k - c xhat_k, xhat_{k+1} = a xhat_k + gain e_k.
    Returns (e, xhat) with shapes (len(y), m) and (len(y)+1, n).
    """
    a = _as_c64(a)
    c = _as_c64(c)
    gain = _as_c64(gain)
    y = _as_c64(y)
    if x0 is None:
        x0 = np.zeros(a.shape[0])
    return _impl.filter_recursion(a, c, gain, y, _as_c64(x0))
