"""Structured matrices: observability, controllability, Toeplitz, Hankel,
and the batch past/future data matrices.

Column-time alignment convention: column k (0-based) of the batch matrices
corresponds to trajectory time p + k, i.e. the past window of column k is
y_k..y_{p+k-1} and the future window is y_{p+k}..y_{p+k+f-1}. Everything is
dense; the target dimensions (a few hundred rows at most) never justify
sparsity.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InsufficientSamples
from .model import SteadyKalman
from .simulate import Trajectory

__all__ = ["HankelParams", "DataMatrices", "observability",
           "controllability_rev", "toeplitz", "hankel_true",
           "build_data_matrices"]


@dataclass(frozen=True)
class HankelParams:
    """Past horizon p and future horizon f.

    Construction only requires both to be positive; theorem-facing runs
    need p, f >= n + 1, which the experiment config and the realization
    step enforce where the order n is known.
    """

    p: int
    f: int

    def __post_init__(self):
        if self.p < 1 or self.f < 1:
            raise ValueError("p and f must be >= 1")


@dataclass(frozen=True)
class DataMatrices:
    """Batch past/future output blocks plus optional diagnostics.

    yplus is (m f, N), yminus is (m p, N). eplus/eminus mirror the output
    stacking for the innovations, xhat_block holds the filter states
    xhat_0..xhat_{N-1} as columns; all three are None when the source
    trajectory carries no diagnostics.
    """

    yplus: np.ndarray
    yminus: np.ndarray
    eplus: np.ndarray | None
    eminus: np.ndarray | None
    xhat_block: np.ndarray | None
    N: int

    @property
    def has_diagnostics(self) -> bool:
        return self.eminus is not None and self.xhat_block is not None


def observability(A: np.ndarray, C: np.ndarray, k: int) -> np.ndarray:
    """Extended observability matrix: rows C, CA, ..., CA^{k-1}."""
    if k < 1:
        raise ValueError("k must be >= 1")
    A = np.atleast_2d(np.asarray(A, dtype=float))
    C = np.atleast_2d(np.asarray(C, dtype=float))
    blocks = []
    power = np.eye(A.shape[0])
    for _ in range(k):
        blocks.append(C @ power)
        power = power @ A
    return np.vstack(blocks)


def controllability_rev(A: np.ndarray, K: np.ndarray, C: np.ndarray,
                        k: int) -> np.ndarray:
    """Reversed extended controllability matrix of the innovation form.

    Horizontal stack [(A-KC)^{k-1} K, ..., (A-KC) K, K]; the rightmost
    block is K.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    A = np.atleast_2d(np.asarray(A, dtype=float))
    K = np.atleast_2d(np.asarray(K, dtype=float))
    C = np.atleast_2d(np.asarray(C, dtype=float))
    closed = A - K @ C
    blocks = [K]
    power = np.eye(A.shape[0])
    for _ in range(k - 1):
        power = closed @ power
        blocks.append(power @ K)
    return np.hstack(blocks[::-1])


def toeplitz(A: np.ndarray, C: np.ndarray, K: np.ndarray, s: int) -> np.ndarray:
    """Block lower-triangular Toeplitz matrix of the innovation response.

    Identity blocks on the diagonal; block (i, j) for i > j equals
    C A^{i-j-1} K.
    """
    if s < 2:
        raise ValueError("s must be >= 2")
    A = np.atleast_2d(np.asarray(A, dtype=float))
    C = np.atleast_2d(np.asarray(C, dtype=float))
    K = np.atleast_2d(np.asarray(K, dtype=float))
    m = C.shape[0]
    markov = []
    power = np.eye(A.shape[0])
    for _ in range(s - 1):
        markov.append(C @ power @ K)
        power = power @ A
    out = np.eye(m * s)
    for i in range(s):
        for j in range(i):
            out[i * m:(i + 1) * m, j * m:(j + 1) * m] = markov[i - j - 1]
    return out


def hankel_true(kf: SteadyKalman, hp: HankelParams) -> np.ndarray:
    """Exact Hankel-like matrix: observability(f) @ controllability_rev(p)."""
    return (observability(kf.A, kf.C, hp.f)
            @ controllability_rev(kf.A, kf.K, kf.C, hp.p))


def toeplitz_weight(A: np.ndarray, C: np.ndarray, K: np.ndarray,
                    s: int) -> np.ndarray:
    """Toeplitz weighting for s stacked blocks; degenerates to I_m at s = 1."""
    if s == 1:
        return np.eye(np.atleast_2d(np.asarray(C)).shape[0])
    return toeplitz(A, C, K, s)


def _stack_windows(series: np.ndarray, start: int, depth: int,
                   n_cols: int) -> np.ndarray:
    # block row i holds series[start+i .. start+i+n_cols-1] transposed
    return np.vstack([series[start + i:start + i + n_cols].T
                      for i in range(depth)])


def build_data_matrices(traj: Trajectory, hp: HankelParams) -> DataMatrices:
    """Stack a trajectory into batch past/future matrices.

    N = nbar - p - f + 1 columns; raises InsufficientSamples when the
    trajectory is shorter than p + f. Diagnostics are stacked with the same
    index pattern whenever the trajectory carries them.
    """
    p, f = hp.p, hp.f
    n_cols = traj.nbar - p - f + 1
    if n_cols < 1:
        raise InsufficientSamples(
            f"need at least p + f = {p + f} samples, got {traj.nbar}")
    yminus = _stack_windows(traj.y, 0, p, n_cols)
    yplus = _stack_windows(traj.y, p, f, n_cols)
    eminus = eplus = xhat_block = None
    if traj.e is not None:
        eminus = _stack_windows(traj.e, 0, p, n_cols)
        eplus = _stack_windows(traj.e, p, f, n_cols)
    if traj.xhat is not None:
        xhat_block = traj.xhat[:n_cols].T.copy()
    return DataMatrices(yplus=yplus, yminus=yminus, eplus=eplus,
                        eminus=eminus, xhat_block=xhat_block, N=n_cols)
