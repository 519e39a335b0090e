"""Pure-numpy fallback for the compiled recursion kernels.

Same contracts as ssid._kernels; used when the extension is not built.
"""
from __future__ import annotations

import numpy as np


def driven_recursion(a: np.ndarray, b: np.ndarray, u: np.ndarray,
                     x0: np.ndarray) -> np.ndarray:
    """Run x_{k+1} = a x_k + b u_k and return all states, x_0 included."""
    steps = u.shape[0]
    x = np.empty((steps + 1, a.shape[0]))
    cur = x0
    x[0] = cur
    for k in range(steps):
        cur = a @ cur + b @ u[k]
        x[k + 1] = cur
    return x


def filter_recursion(a: np.ndarray, c: np.ndarray, gain: np.ndarray,
                     y: np.ndarray, x0: np.ndarray):
    """Run the innovation filter on outputs y; returns (e, xhat)."""
    steps = y.shape[0]
    e = np.empty((steps, c.shape[0]))
    xhat = np.empty((steps + 1, a.shape[0]))
    cur = x0
    xhat[0] = cur
    for k in range(steps):
        innov = y[k] - c @ cur
        e[k] = innov
        cur = a @ cur + gain @ innov
        xhat[k + 1] = cur
    return e, xhat
