"""Finite-sample bound quantities for the identification pipeline.

Everything the error analysis needs is computed here: the state covariance
sequence, the past-noise covariance and its least singular value, the
confidence decay delta_N, the Gram condition proxy kappa_N, the system
constants C1/C2, the three sample-size thresholds N0/N1/N2, the Hankel
error envelope (simplified and full forms), the self-normalized martingale
envelope, and the realization robustness bounds.

All logarithms are natural. Quantities prone to under/overflow (delta_N,
terms like 5^m f / delta) are evaluated in log space.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NotDominated, RobustnessViolated, ScanLimit
from .linalg import min_eig, spectral_norm, symmetrize
from .model import SteadyKalman
from .structmats import (HankelParams, observability, toeplitz_weight)

__all__ = ["BoundInputs", "BoundReport", "state_covariance", "gamma_trace",
           "sigma_e_matrix", "delta_n", "kappa_n", "constants_c1_c2",
           "thresholds", "hankel_error_bound", "martingale_bound",
           "realization_error_bounds"]

_LOG5 = math.log(5.0)


@dataclass(frozen=True)
class BoundInputs:
    """Everything a bound evaluation depends on.

    c_universal is the unnamed universal constant of the noise-excitation
    lemma; it is unspecified by the theory, defaults to 1.0, and is echoed
    into every report.
    """

    kf: SteadyKalman
    hp: HankelParams
    N: int
    delta: float
    c_universal: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.delta < 1.0:
            raise ValueError("delta must lie in (0, 1)")
        if self.N < 1:
            raise ValueError("N must be >= 1")
        if self.c_universal <= 0.0:
            raise ValueError("c_universal must be positive")


@dataclass(frozen=True)
class BoundReport:
    """All named intermediates of the Hankel error envelope.

    total_bound = cross_term_bound + truncation_bound holds with probability
    at least total_probability = 1 - delta_n - 6 delta (clamped to [0, 1];
    the raw value, which can be negative at desk scale, is kept in
    total_probability_raw for honesty).
    """

    sigma_e: float
    sigma_min_R: float
    delta_n: float
    kappa_n: float
    c1: float
    c2: float
    n0: int
    n1: int
    n2: int
    cross_term_bound: float
    truncation_bound: float
    total_bound: float
    total_probability: float
    total_probability_raw: float
    trace_gamma: float
    trace_sigma_e: float
    N: int
    delta: float
    c_universal: float
    simplified: bool

    def to_json(self) -> dict:
        return {
            "sigma_e": self.sigma_e,
            "sigma_min_R": self.sigma_min_R,
            "delta_n": self.delta_n,
            "kappa_n": self.kappa_n,
            "c1": self.c1,
            "c2": self.c2,
            "n0": self.n0,
            "n1": self.n1,
            "n2": self.n2,
            "cross_term_bound": self.cross_term_bound,
            "truncation_bound": self.truncation_bound,
            "total_bound": self.total_bound,
            "total_probability": self.total_probability,
            "total_probability_raw": self.total_probability_raw,
            "trace_gamma": self.trace_gamma,
            "trace_sigma_e": self.trace_sigma_e,
            "N": self.N,
            "delta": self.delta,
            "c_universal": self.c_universal,
            "simplified": self.simplified,
        }


def _innovation_gram(kf: SteadyKalman) -> np.ndarray:
    return kf.K @ kf.Rbar @ kf.K.T


def state_covariance(kf: SteadyKalman, k: int) -> np.ndarray:
    """Filter-state covariance after k steps from a zero initial state.

    Gamma_0 = 0 and Gamma_k = A Gamma_{k-1} A^T + K Rbar K^T, re-symmetrized
    each step.
    """
    if k < 0:
        raise ValueError("k must be >= 0")
    qbar = _innovation_gram(kf)
    gamma = np.zeros((kf.n, kf.n))
    for _ in range(k):
        gamma = symmetrize(kf.A @ gamma @ kf.A.T + qbar)
    return gamma


def _gamma_doubling(a: np.ndarray, qbar: np.ndarray, k: int) -> np.ndarray:
    # Gamma_{i+j} = Gamma_j + A^j Gamma_i (A^j)^T lets k decompose in binary,
    # keeping the scan over huge N at O(log k) matrix products.
    acc = np.zeros_like(qbar)
    block = qbar.copy()           # Gamma_{2^j}
    power = a.copy()              # A^{2^j}
    while k > 0:
        if k & 1:
            acc = symmetrize(block + power @ acc @ power.T)
        k >>= 1
        if k:
            block = symmetrize(block + power @ block @ power.T)
            power = power @ power
    return acc


def gamma_trace(kf: SteadyKalman, k: int) -> float:
    """Trace of the k-step state covariance, in O(log k) matrix products."""
    if k < 0:
        raise ValueError("k must be >= 0")
    return float(np.trace(_gamma_doubling(kf.A, _innovation_gram(kf), k)))


def sigma_e_matrix(kf: SteadyKalman, p: int) -> tuple[np.ndarray, float]:
    """Weighted past-noise covariance and its least singular value.

    Sigma_E = T_p diag(Rbar, ..., Rbar) T_p^T for the block Toeplitz T_p
    (identity when p = 1); sigma_E = sigma_min(Sigma_E), which is bounded
    below by sigma_min(R).
    """
    if p < 1:
        raise ValueError("p must be >= 1")
    m = kf.m
    tp = toeplitz_weight(kf.A, kf.C, kf.K, p)
    sig = symmetrize(tp @ np.kron(np.eye(p), kf.Rbar) @ tp.T)
    assert sig.shape == (m * p, m * p)
    return sig, min_eig(sig)


def delta_n(N: int, p: int, m: int) -> float:
    """Confidence decay (2(N+p-1)m)^(-log^2(2pm) log(2(N+p-1)m)).

    Evaluated in log space; the returned value may underflow to exactly 0.0
    for moderate N, which downstream consumers treat as negligible.
    """
    if N < 1 or p < 1 or m < 1:
        raise ValueError("N, p, m must all be >= 1")
    log_base = math.log(2.0 * (N + p - 1) * m)
    log_value = -(math.log(2.0 * p * m) ** 2) * log_base * log_base
    return math.exp(log_value)


def _log_delta_n(N: int, p: int, m: int) -> float:
    log_base = math.log(2.0 * (N + p - 1) * m)
    return -(math.log(2.0 * p * m) ** 2) * log_base * log_base


def kappa_n(bi: BoundInputs) -> float:
    """Over-approximation of the condition number of E[Y- Y-^T].

    (4 / sigma_E) (||O_p||^2 Tr Gamma_{N-1} + Tr Sigma_E) + delta.
    """
    kf, p = bi.kf, bi.hp.p
    sig_e_mat, sig_e = sigma_e_matrix(kf, p)
    obs_norm = spectral_norm(observability(kf.A, kf.C, p))
    tr_gamma = gamma_trace(kf, bi.N - 1)
    return (4.0 / sig_e) * (obs_norm ** 2 * tr_gamma
                            + float(np.trace(sig_e_mat))) + bi.delta


def constants_c1_c2(kf: SteadyKalman, hp: HankelParams) -> tuple[float, float]:
    """System constants of the error envelope.

    C1 = 8 sqrt(||Rbar|| / sigma_E) ||T_f||; C2 = 4 ||O_f|| / sigma_n(O_p)
    (the pseudo-inverse norm of a full-column-rank O_p is 1/sigma_n).
    """
    _, sig_e = sigma_e_matrix(kf, hp.p)
    tf_norm = spectral_norm(toeplitz_weight(kf.A, kf.C, kf.K, hp.f))
    obs_f = observability(kf.A, kf.C, hp.f)
    obs_p = observability(kf.A, kf.C, hp.p)
    sn_obs_p = float(np.linalg.svd(obs_p, compute_uv=False)[-1])
    c1 = 8.0 * math.sqrt(spectral_norm(kf.Rbar) / sig_e) * tf_norm
    c2 = 4.0 * spectral_norm(obs_f) / sn_obs_p
    return c1, c2


def _first_true(pred, cap: int, what: str) -> int:
    """Smallest N with pred(N) true: doubling bracket, then bisection.

    Every predicate here is eventually monotone (true for all large N), so
    the first crossing inside the bracket is the threshold. pred(hi) holds
    and pred(hi - 1) fails on return.
    """
    n = 1
    if pred(n):
        return n
    lo = 1
    while True:
        n *= 2
        if n > cap:
            raise ScanLimit(f"{what}: no N <= {cap} satisfies the condition")
        if pred(n):
            break
        lo = n
    hi = n
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if pred(mid):
            hi = mid
        else:
            lo = mid
    return hi


def _cross_log_term(p: int, m: int, delta: float) -> float:
    # log(p 5^m / delta), assembled from logs
    return math.log(p) + m * _LOG5 - math.log(delta)


def thresholds(bi: BoundInputs, cap: int = 10 ** 12) -> tuple[int, int, int]:
    """Sample-size thresholds (n0, n1, n2) found by upward scans.

    n0: noise excitation needs N >= 2 c p m log^2(2pm) log^2(2(N+p-1)m).
    n1: the state/noise cross term gamma_N = 2 ||T_p|| sqrt(C_XE ||Rbar||/N)
        must drop below min(1, sigma_E / 4), where
        C_XE = 8p ((n/2) log(||O_p||^2 Tr Gamma_{N-1}/delta + 1)
                    + log(p 5^m / delta)).
    n2: the truncation cross ratio 8 sqrt(||Rbar||/sigma_E) ||T_p|| C_N /
        sqrt(N) must drop below 1, where
        C_N = sqrt((m p^2 / 2) log(2 ||O_p||^2 Tr Gamma_{N-1} /
                    (delta sigma_E) + 1) + p log(p 5^m / delta)).

    Raises ScanLimit when a condition is not met by ``cap``.
    """
    kf, p, delta, c = bi.kf, bi.hp.p, bi.delta, bi.c_universal
    n, m = kf.n, kf.m
    _, sig_e = sigma_e_matrix(kf, p)
    obs_sq = spectral_norm(observability(kf.A, kf.C, p)) ** 2
    tp_norm = spectral_norm(toeplitz_weight(kf.A, kf.C, kf.K, p))
    rbar_norm = spectral_norm(kf.Rbar)
    qbar = _innovation_gram(kf)

    def tr_gamma(N: int) -> float:
        return float(np.trace(_gamma_doubling(kf.A, qbar, N - 1)))

    def pred_n0(N: int) -> bool:
        rhs = (2.0 * c * p * m * math.log(2.0 * p * m) ** 2
               * math.log(2.0 * (N + p - 1) * m) ** 2)
        return N >= rhs

    def pred_n1(N: int) -> bool:
        c_xe = 8.0 * p * ((n / 2.0) * math.log1p(obs_sq * tr_gamma(N) / delta)
                          + _cross_log_term(p, m, delta))
        gamma_cross = 2.0 * tp_norm * math.sqrt(c_xe * rbar_norm / N)
        return gamma_cross <= min(1.0, sig_e / 4.0)

    def pred_n2(N: int) -> bool:
        c_n = math.sqrt(
            (m * p * p / 2.0)
            * math.log1p(2.0 * obs_sq * tr_gamma(N) / (delta * sig_e))
            + p * _cross_log_term(p, m, delta))
        return 8.0 * math.sqrt(rbar_norm / sig_e) * tp_norm * c_n <= math.sqrt(N)

    n0 = _first_true(pred_n0, cap, "N0 scan")
    n1 = _first_true(pred_n1, cap, "N1 scan")
    n2 = _first_true(pred_n2, cap, "N2 scan")
    return n0, n1, n2


def hankel_error_bound(bi: BoundInputs, simplified: bool = False) -> BoundReport:
    """High-probability envelope for the Hankel estimation error.

    cross_term_bound is, with kappa = kappa_n(bi),

        simplified: C1 sqrt((f m p / N) log(5 f kappa / delta))
        full:       (C1 / sqrt(N)) sqrt((f m p / 2) log(kappa / delta)
                                        + f log(5^m f / delta))

    and truncation_bound = C2 ||(A - K C)^p||. Their sum holds with
    probability at least 1 - delta_n - 6 delta once N clears the three
    thresholds. The simplified form always dominates the full form.
    """
    kf, hp, N, delta = bi.kf, bi.hp, bi.N, bi.delta
    p, f, m = hp.p, hp.f, kf.m
    sig_e_mat, sig_e = sigma_e_matrix(kf, p)
    c1, c2 = constants_c1_c2(kf, hp)
    tr_gamma = gamma_trace(kf, N - 1)
    kappa = kappa_n(bi)
    if simplified:
        cross = c1 * math.sqrt((f * m * p / N) * math.log(5.0 * f * kappa / delta))
    else:
        log_tail = m * _LOG5 + math.log(f) - math.log(delta)
        cross = (c1 / math.sqrt(N)) * math.sqrt(
            (f * m * p / 2.0) * math.log(kappa / delta) + f * log_tail)
    closed_pow = np.linalg.matrix_power(kf.closed_loop, p)
    truncation = c2 * spectral_norm(closed_pow)
    d_n = delta_n(N, p, m)
    prob_raw = 1.0 - d_n - 6.0 * delta
    n0, n1, n2 = thresholds(bi)
    return BoundReport(
        sigma_e=sig_e,
        sigma_min_R=min_eig(symmetrize(kf.base.R)),
        delta_n=d_n,
        kappa_n=kappa,
        c1=c1,
        c2=c2,
        n0=n0,
        n1=n1,
        n2=n2,
        cross_term_bound=cross,
        truncation_bound=truncation,
        total_bound=cross + truncation,
        total_probability=min(1.0, max(0.0, prob_raw)),
        total_probability_raw=prob_raw,
        trace_gamma=tr_gamma,
        trace_sigma_e=float(np.trace(sig_e_mat)),
        N=N,
        delta=delta,
        c_universal=bi.c_universal,
        simplified=simplified,
    )


def martingale_bound(r: int, m: int, delta: float, v: np.ndarray,
                     vbar: np.ndarray, tol: float = 1e-10) -> float:
    """Squared-norm envelope of the self-normalized martingale.

    8 r (log(r 5^m / delta) + (1/2) logdet(vbar v^{-1})); holds with
    probability at least 1 - delta uniformly over time once vbar is the
    regressor-accumulated normalization. Requires vbar >= v in the PSD
    order (NotDominated otherwise).
    """
    if r < 1 or m < 1:
        raise ValueError("r and m must be >= 1")
    if delta <= 0.0:
        raise ValueError("delta must be positive")
    v = np.atleast_2d(np.asarray(v, dtype=float))
    vbar = np.atleast_2d(np.asarray(vbar, dtype=float))
    if v.shape != vbar.shape or v.shape[0] != v.shape[1]:
        raise ValueError("v and vbar must be square with matching shapes")
    gap_min = min_eig(symmetrize(vbar - v))
    if gap_min < -tol * max(1.0, spectral_norm(v)):
        raise NotDominated(
            f"vbar - v has negative eigenvalue {gap_min:.3e}")
    sign_v, logdet_v = np.linalg.slogdet(v)
    sign_vb, logdet_vb = np.linalg.slogdet(vbar)
    if sign_v <= 0.0 or sign_vb <= 0.0:
        raise ValueError("v and vbar must be positive definite")
    log_head = math.log(r) + m * _LOG5 - math.log(delta)
    return 8.0 * r * (log_head + 0.5 * (logdet_vb - logdet_v))


def realization_error_bounds(g_norm: float, sigma_n_g: float, err_g: float,
                             n: int, sigma_o: float
                             ) -> tuple[float, float, float, float]:
    """Realization robustness bounds given the Hankel error.

    Under the robustness condition err_g <= sigma_n(G)/4 there is an
    orthonormal alignment for which the observability-factor, C and K
    errors are all bounded by 2 sqrt(10 n / sigma_n(G)) err_g, and the A
    error by (sqrt(||G||) + sigma_o) / sigma_o^2 times that, where sigma_o
    is the smaller n-th singular value of the two upper observability
    blocks.

    Returns (obs_bound, c_bound, a_bound, k_bound); raises
    RobustnessViolated when the condition fails.
    """
    if sigma_n_g <= 0.0 or sigma_o <= 0.0:
        raise ValueError("sigma_n_g and sigma_o must be positive")
    if err_g < 0.0:
        raise ValueError("err_g must be nonnegative")
    if err_g > sigma_n_g / 4.0:
        raise RobustnessViolated(
            f"err_g = {err_g:.3e} exceeds sigma_n(G)/4 = {sigma_n_g / 4.0:.3e}")
    base = 2.0 * math.sqrt(10.0 * n / sigma_n_g) * err_g
    a_bound = (math.sqrt(g_norm) + sigma_o) / sigma_o ** 2 * base
    return base, base, a_bound, base
