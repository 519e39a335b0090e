"""Two-stage subspace identification.

Stage one regresses stacked future outputs on stacked past outputs to
estimate the Hankel-like matrix G. Stage two factors the rank-n SVD
truncation of the estimate into balanced observability/controllability
factors and reads off (A, C, K).
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import PersistenceFailure, PinvFailure, RankGapWarning
from .simulate import Trajectory
from .structmats import DataMatrices, HankelParams, build_data_matrices

__all__ = ["HankelEstimate", "Realization", "regress_hankel",
           "balanced_realization", "identify"]

PINV_CUTOFF = 1e-10
GRAM_FLOOR_SCALE = 1e-10


@dataclass(frozen=True)
class HankelEstimate:
    """Least-squares Hankel estimate with Gram diagnostics.

    gram_min_eig is the smallest eigenvalue of the *unridged* Gram matrix
    Y_- Y_-^T; singular_values are those of ghat, descending.
    """

    ghat: np.ndarray
    gram_min_eig: float
    singular_values: np.ndarray

    def __post_init__(self):
        if not self.gram_min_eig > 0.0:
            raise PersistenceFailure(
                f"Gram matrix minimum eigenvalue {self.gram_min_eig:.3e} "
                "is not positive")

    @classmethod
    def from_exact(cls, g: np.ndarray) -> "HankelEstimate":
        """Wrap an exactly known Hankel matrix (no regression involved)."""
        return cls(ghat=np.asarray(g, dtype=float), gram_min_eig=np.inf,
                   singular_values=np.linalg.svd(g, compute_uv=False))


@dataclass(frozen=True)
class Realization:
    """Balanced realization (ahat, chat, khat) and its SVD factors.

    obs_f @ ctrl_p reproduces the rank-n truncation of the source estimate;
    chat is the first output-block row of obs_f and khat the last
    output-block column of ctrl_p. sigma1 holds the n retained singular
    values, sigma_np1 the first discarded one (0 when absent).
    """

    ahat: np.ndarray
    chat: np.ndarray
    khat: np.ndarray
    obs_f: np.ndarray
    ctrl_p: np.ndarray
    sigma1: np.ndarray
    sigma_np1: float

    @property
    def n(self) -> int:
        return self.ahat.shape[0]

    @property
    def m(self) -> int:
        return self.chat.shape[0]

    @property
    def f(self) -> int:
        return self.obs_f.shape[0] // self.m

    @property
    def p(self) -> int:
        return self.ctrl_p.shape[1] // self.m

    def obs_upper(self) -> np.ndarray:
        """obs_f without its last output block (the pseudo-inverse target)."""
        return self.obs_f[:-self.m]

    def markov(self, i: int) -> np.ndarray:
        """Markov parameter chat @ ahat^i @ khat."""
        return self.chat @ np.linalg.matrix_power(self.ahat, i) @ self.khat

    def to_json(self) -> dict:
        return {
            "n": self.n, "m": self.m, "f": self.f, "p": self.p,
            "ahat": self.ahat.tolist(),
            "chat": self.chat.tolist(),
            "khat": self.khat.tolist(),
            "obs_f": self.obs_f.tolist(),
            "ctrl_p": self.ctrl_p.tolist(),
            "sigma1": self.sigma1.tolist(),
            "sigma_np1": self.sigma_np1,
        }


def regress_hankel(dm: DataMatrices, ridge: float = 0.0) -> HankelEstimate:
    """Least-squares estimate ghat = Y+ Y-^T (Y- Y-^T + ridge I)^{-1}.

    The Gram diagnostics always come from the unridged matrix. With
    ridge = 0 the minimum Gram eigenvalue must clear GRAM_FLOOR_SCALE * N,
    otherwise PersistenceFailure is raised (the regression is ill posed,
    e.g. when N < m p).
    """
    if ridge < 0.0:
        raise ValueError("ridge must be nonnegative")
    gram = dm.yminus @ dm.yminus.T
    gram = (gram + gram.T) / 2.0
    gram_min_eig = float(np.linalg.eigvalsh(gram)[0])
    if ridge == 0.0 and gram_min_eig < GRAM_FLOOR_SCALE * dm.N:
        raise PersistenceFailure(
            f"Gram minimum eigenvalue {gram_min_eig:.3e} below floor "
            f"{GRAM_FLOOR_SCALE * dm.N:.3e}; outputs are not persistently "
            "exciting (is N >= m*p?)")
    lhs = gram + ridge * np.eye(gram.shape[0])
    ghat = np.linalg.solve(lhs, dm.yminus @ dm.yplus.T).T
    return HankelEstimate(ghat=ghat, gram_min_eig=gram_min_eig,
                          singular_values=np.linalg.svd(ghat, compute_uv=False))


def _signed_svd(mat: np.ndarray):
    """SVD with deterministic signs.

    Each left singular vector is flipped so its largest-magnitude entry
    (first index on ties) is positive; the matching right vector is flipped
    with it, so the product is unchanged.
    """
    u, s, vt = np.linalg.svd(mat, full_matrices=False)
    for i in range(s.shape[0]):
        j = int(np.argmax(np.abs(u[:, i])))
        if u[j, i] < 0.0:
            u[:, i] = -u[:, i]
            vt[i, :] = -vt[i, :]
    return u, s, vt


def balanced_realization(he: HankelEstimate, n: int, m: int, f: int, p: int,
                         gap_floor: float | None = None) -> Realization:
    """Rank-n balanced realization of a Hankel estimate.

    The top-n SVD gives obs_f = U1 S1^{1/2} and ctrl_p = S1^{1/2} V1^T;
    chat is the first m rows of obs_f, khat the last m columns of ctrl_p,
    and ahat solves obs_upper @ ahat = obs_lower in least squares, where
    obs_upper/obs_lower drop the last/first m rows of obs_f.

    Emits RankGapWarning when the singular-value gap at order n falls below
    ``gap_floor`` (default 1e-10 * sigma_1) and raises PinvFailure when
    obs_upper is rank deficient below the pseudo-inverse cutoff.
    """
    ghat = he.ghat
    if ghat.shape != (m * f, m * p):
        raise ValueError(f"estimate shape {ghat.shape} does not match "
                         f"(m*f, m*p) = {(m * f, m * p)}")
    if min(m * f, m * p) < n:
        raise ValueError("min(m*f, m*p) must be at least the order n")
    if m * (f - 1) < n:
        raise ValueError("m*(f-1) must be at least n to extract ahat")
    u, s, vt = _signed_svd(ghat)
    sigma_np1 = float(s[n]) if s.shape[0] > n else 0.0
    if gap_floor is None:
        gap_floor = 1e-10 * float(s[0])
    if float(s[n - 1]) - sigma_np1 < gap_floor:
        warnings.warn(
            f"singular-value gap at order {n} is "
            f"{float(s[n - 1]) - sigma_np1:.3e}; the realization may be "
            "unreliable", RankGapWarning, stacklevel=2)
    sqrt_s = np.sqrt(s[:n])
    obs_f = u[:, :n] * sqrt_s
    ctrl_p = sqrt_s[:, None] * vt[:n, :]
    obs_upper = obs_f[:-m]
    obs_lower = obs_f[m:]
    su = np.linalg.svd(obs_upper, compute_uv=False)
    if su[-1] <= PINV_CUTOFF * su[0]:
        raise PinvFailure(
            f"sigma_n(obs_upper) = {su[-1]:.3e} is below the pseudo-inverse "
            f"cutoff {PINV_CUTOFF:.1e} * sigma_max")
    ahat = np.linalg.pinv(obs_upper, rcond=PINV_CUTOFF) @ obs_lower
    return Realization(ahat=ahat, chat=obs_f[:m].copy(),
                       khat=ctrl_p[:, -m:].copy(), obs_f=obs_f, ctrl_p=ctrl_p,
                       sigma1=s[:n].copy(), sigma_np1=sigma_np1)


def identify(traj: Trajectory, hp: HankelParams, n: int,
             ridge: float = 0.0) -> tuple[HankelEstimate, Realization]:
    """Full pipeline: stack data, regress the Hankel matrix, realize."""
    dm = build_data_matrices(traj, hp)
    he = regress_hankel(dm, ridge=ridge)
    real = balanced_realization(he, n=n, m=traj.m, f=hp.f, p=hp.p)
    return he, real
