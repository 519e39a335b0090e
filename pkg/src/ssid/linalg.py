"""Small shared linear-algebra helpers."""
from __future__ import annotations

import numpy as np

from .errors import CholeskyFailure, EigenFailure


def spectral_norm(m: np.ndarray) -> float:
    """Largest singular value."""
    if m.size == 0:
        return 0.0
    return float(np.linalg.norm(m, 2))


def min_eig(sym: np.ndarray) -> float:
    """Smallest eigenvalue of a symmetric matrix."""
    return float(np.linalg.eigvalsh(sym)[0])


def symmetrize(m: np.ndarray) -> np.ndarray:
    return (m + m.T) / 2.0


def spectral_radius(m: np.ndarray) -> float:
    """Largest eigenvalue modulus of a square matrix."""
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    try:
        ev = np.linalg.eigvals(m)
    except np.linalg.LinAlgError as exc:
        raise EigenFailure(str(exc)) from exc
    return float(np.max(np.abs(ev))) if ev.size else 0.0


def cholesky_lower(m: np.ndarray, what: str = "matrix") -> np.ndarray:
    """Lower Cholesky factor; CholeskyFailure when m is not positive definite."""
    try:
        return np.linalg.cholesky(m)
    except np.linalg.LinAlgError as exc:
        raise CholeskyFailure(f"{what} is not positive definite: {exc}") from exc


def symmetric_sqrt_psd(m: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Symmetric square root of a PSD matrix (eigenvalues clipped at zero)."""
    w, v = np.linalg.eigh(symmetrize(m))
    scale = max(1.0, float(w[-1]))
    if w[0] < -tol * scale:
        raise CholeskyFailure(f"matrix has negative eigenvalue {w[0]:.3e}")
    return (v * np.sqrt(np.clip(w, 0.0, None))) @ v.T


def matrix_rank_svd(m: np.ndarray, rel_tol: float) -> int:
    """Rank by counting singular values above rel_tol * sigma_max."""
    s = np.linalg.svd(m, compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.sum(s > rel_tol * s[0]))
