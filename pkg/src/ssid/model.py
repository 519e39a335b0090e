"""Generative and innovation-form system models.

A model is a discrete-time linear system driven purely by Gaussian noise,

    x_{k+1} = A x_k + w_k,      w_k ~ N(0, Q),
    y_k     = C x_k + v_k,      v_k ~ N(0, R),

together with its steady-state Kalman filter in innovation form,

    xhat_{k+1} = A xhat_k + K e_k,
    y_k        = C xhat_k + e_k,

where K is the steady-state gain from the filtering Riccati equation and the
innovations e_k are i.i.d. N(0, Rbar) with Rbar = C P C^T + R.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import NonConvergence, NotDetectable
from .linalg import (cholesky_lower, matrix_rank_svd, min_eig, spectral_norm,
                     spectral_radius, symmetric_sqrt_psd, symmetrize)

__all__ = [
    "StateSpace",
    "SteadyKalman",
    "AssumptionReport",
    "solve_dare",
    "check_assumptions",
    "spectral_radius",
]

_SYM_TOL = 1e-10


def _as_matrix(x, rows: int, cols: int, name: str) -> np.ndarray:
    m = np.atleast_2d(np.asarray(x, dtype=float))
    if m.shape != (rows, cols):
        raise ValueError(f"{name} must be {rows}x{cols}, got {m.shape}")
    return m


@dataclass(frozen=True)
class StateSpace:
    """Generative model (A, C, Q, R) with no exogenous inputs.

    Construction validates shapes, symmetry of the covariances, Q >= 0 and
    R > 0. Observability/controllability are *not* enforced here; they are
    reported by :func:`check_assumptions`.
    """

    n: int
    m: int
    A: np.ndarray
    C: np.ndarray
    Q: np.ndarray
    R: np.ndarray

    def __post_init__(self):
        if self.n < 1 or self.m < 1:
            raise ValueError("state and output dimensions must be positive")
        object.__setattr__(self, "A", _as_matrix(self.A, self.n, self.n, "A"))
        object.__setattr__(self, "C", _as_matrix(self.C, self.m, self.n, "C"))
        object.__setattr__(self, "Q", _as_matrix(self.Q, self.n, self.n, "Q"))
        object.__setattr__(self, "R", _as_matrix(self.R, self.m, self.m, "R"))
        for name, mat in (("Q", self.Q), ("R", self.R)):
            scale = max(1.0, spectral_norm(mat))
            if spectral_norm(mat - mat.T) > _SYM_TOL * scale:
                raise ValueError(f"{name} must be symmetric")
        qmin = min_eig(symmetrize(self.Q))
        if qmin < -_SYM_TOL * max(1.0, spectral_norm(self.Q)):
            raise ValueError("Q must be positive semidefinite")
        if min_eig(symmetrize(self.R)) <= 0.0:
            raise ValueError("R must be strictly positive definite")

    def to_json(self) -> dict:
        """JSON document with row-major matrix arrays and explicit n, m."""
        return {
            "n": self.n,
            "m": self.m,
            "A": self.A.tolist(),
            "C": self.C.tolist(),
            "Q": self.Q.tolist(),
            "R": self.R.tolist(),
        }

    @classmethod
    def from_json(cls, doc: dict) -> "StateSpace":
        return cls(n=int(doc["n"]), m=int(doc["m"]), A=doc["A"], C=doc["C"],
                   Q=doc["Q"], R=doc["R"])

    @classmethod
    def from_file(cls, path: str | Path) -> "StateSpace":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_json(json.load(fh))


@dataclass(frozen=True)
class SteadyKalman:
    """Innovation-form model: base system plus (K, P, Rbar).

    P is the positive definite Riccati solution, K the steady-state gain and
    Rbar = C P C^T + R the innovation covariance. A - K C is strictly stable.
    """

    base: StateSpace
    K: np.ndarray
    P: np.ndarray
    Rbar: np.ndarray

    def __post_init__(self):
        n, m = self.base.n, self.base.m
        object.__setattr__(self, "K", _as_matrix(self.K, n, m, "K"))
        object.__setattr__(self, "P", _as_matrix(self.P, n, n, "P"))
        object.__setattr__(self, "Rbar", _as_matrix(self.Rbar, m, m, "Rbar"))
        if min_eig(symmetrize(self.P)) <= 0.0:
            raise ValueError("P must be strictly positive definite")
        if min_eig(symmetrize(self.Rbar)) <= 0.0:
            raise ValueError("Rbar must be strictly positive definite")
        if spectral_radius(self.closed_loop) >= 1.0:
            raise ValueError("A - K C must be strictly stable")

    @property
    def A(self) -> np.ndarray:
        return self.base.A

    @property
    def C(self) -> np.ndarray:
        return self.base.C

    @property
    def n(self) -> int:
        return self.base.n

    @property
    def m(self) -> int:
        return self.base.m

    @property
    def closed_loop(self) -> np.ndarray:
        """A - K C (the filter error dynamics)."""
        return self.base.A - self.K @ self.base.C

    def innovation_factor(self) -> np.ndarray:
        """Lower Cholesky factor of Rbar, used to draw innovations."""
        return cholesky_lower(self.Rbar, "Rbar")

    def to_json(self) -> dict:
        return {
            "system": self.base.to_json(),
            "K": self.K.tolist(),
            "P": self.P.tolist(),
            "Rbar": self.Rbar.tolist(),
            "closed_loop_spectral_radius": spectral_radius(self.closed_loop),
        }


@dataclass(frozen=True)
class AssumptionReport:
    """Findings of the standing-assumption checks (flags, never raises)."""

    observable: bool
    q_controllable: bool
    k_controllable: bool
    spectral_radius: float
    r_pos_def: bool
    marginally_stable: bool

    def all_satisfied(self) -> bool:
        return (self.observable and self.q_controllable and self.k_controllable
                and self.r_pos_def and self.marginally_stable)

    def to_json(self) -> dict:
        return {
            "observable": self.observable,
            "q_controllable": self.q_controllable,
            "k_controllable": self.k_controllable,
            "spectral_radius": self.spectral_radius,
            "r_pos_def": self.r_pos_def,
            "marginally_stable": self.marginally_stable,
        }


def _riccati_step(A: np.ndarray, C: np.ndarray, Q: np.ndarray, R: np.ndarray,
                  P: np.ndarray) -> np.ndarray:
    S = C @ P @ C.T + R
    gain_t = np.linalg.solve(S, C @ P @ A.T)  # S^{-1} C P A^T
    return symmetrize(A @ P @ A.T + Q - A @ P @ C.T @ gain_t)


def solve_dare(ss: StateSpace, tol: float = 1e-12, max_iter: int = 100_000,
               divergence_window: int = 50) -> SteadyKalman:
    """Solve the filtering Riccati equation by fixed-point iteration.

    Iterates P <- A P A^T + Q - A P C^T (C P C^T + R)^{-1} C P A^T from
    P_0 = Q, re-symmetrizing each step, until the update is below ``tol``
    in spectral norm.

    Raises
    ------
    NonConvergence
        Residual still above ``tol`` after ``max_iter`` iterations.
    NotDetectable
        Residual grew monotonically for ``divergence_window`` consecutive
        iterations (the iteration is running away).
    """
    if tol <= 0.0 or max_iter < 1:
        raise ValueError("tol must be positive and max_iter >= 1")
    A, C, Q, R = ss.A, ss.C, ss.Q, ss.R
    P = symmetrize(Q.copy())
    prev_res = np.inf
    growth = 0
    for _ in range(max_iter):
        P_next = _riccati_step(A, C, Q, R, P)
        res = spectral_norm(P_next - P)
        P = P_next
        if res <= tol:
            break
        if res > prev_res:
            growth += 1
            if growth >= divergence_window:
                raise NotDetectable(
                    f"Riccati residual grew for {growth} consecutive "
                    f"iterations (last {res:.3e})")
        else:
            growth = 0
        prev_res = res
    else:
        raise NonConvergence(
            f"Riccati residual {res:.3e} > tol {tol:.1e} after {max_iter} "
            "iterations")
    S = C @ P @ C.T + R
    K = A @ P @ C.T @ np.linalg.inv(S)
    return SteadyKalman(base=ss, K=K, P=P, Rbar=symmetrize(S))


def riccati_residual(kf: SteadyKalman) -> float:
    """Spectral norm of P minus one application of the Riccati map."""
    ss = kf.base
    return spectral_norm(kf.P - _riccati_step(ss.A, ss.C, ss.Q, ss.R, kf.P))


def check_assumptions(kf: SteadyKalman, tol: float = 1e-9) -> AssumptionReport:
    """Rank/definiteness checks behind the standing assumptions.

    Rank decisions count singular values above ``tol`` relative to the
    largest one. Observability uses the order-n extended observability
    matrix of (A, C); q-controllability the controllability matrix of
    (A, Q^{1/2}); k-controllability the order-n reversed controllability
    matrix built on (A - K C, K), whose rank equals that of (A, K).
    """
    from .structmats import controllability_rev, observability

    ss = kf.base
    n = ss.n
    obs_rank = matrix_rank_svd(observability(ss.A, ss.C, n), tol)
    q_sqrt = symmetric_sqrt_psd(ss.Q)
    ctrb = np.hstack([np.linalg.matrix_power(ss.A, i) @ q_sqrt
                      for i in range(n)])
    q_rank = matrix_rank_svd(ctrb, tol)
    k_rank = matrix_rank_svd(controllability_rev(ss.A, kf.K, ss.C, n), tol)
    rho = spectral_radius(ss.A)
    return AssumptionReport(
        observable=obs_rank == n,
        q_controllable=q_rank == n,
        k_controllable=k_rank == n,
        spectral_radius=rho,
        r_pos_def=min_eig(symmetrize(ss.R)) > 0.0,
        marginally_stable=rho <= 1.0 + tol,
    )
