"""Estimation-error measurement up to similarity, and excitation events.

Estimates are compared against the reference realization obtained by
running the balanced realization on the exact Hankel matrix; the inherent
similarity ambiguity is removed by an orthogonal Procrustes alignment of
the observability factors. Markov parameters and spectra provide
transform-free error channels alongside.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import (DimensionMismatch, MissingDiagnostics, SingularGram,
                     SvdFailure)
from .identify import HankelEstimate, Realization, balanced_realization
from .linalg import min_eig, spectral_norm, symmetrize
from .model import SteadyKalman
from .structmats import (DataMatrices, HankelParams, hankel_true,
                         observability, toeplitz_weight)

__all__ = ["ErrorRecord", "reference_realization", "procrustes_align",
           "error_metrics", "pe_events", "truncation_diagnostic"]

#: Column order used when an ErrorRecord is flattened into a CSV row.
ERROR_RECORD_FIELDS = ("err_g", "err_a", "err_c", "err_k", "err_markov",
                       "err_spectrum", "pe_y", "pe_e", "pe_margin")


@dataclass(frozen=True)
class ErrorRecord:
    """Per-trial estimation errors and excitation events.

    Spectral-norm errors are measured after orthogonal alignment;
    err_markov is the worst Markov-parameter deviation over lags up to
    f + p, err_spectrum the min-cost eigenvalue matching distance. The PE
    fields are None until pe_events fills them.
    """

    err_g: float
    err_a: float
    err_c: float
    err_k: float
    err_markov: float
    err_spectrum: float
    pe_y: bool | None = None
    pe_e: bool | None = None
    pe_margin: float | None = None

    def __post_init__(self):
        for name in ("err_g", "err_a", "err_c", "err_k", "err_markov",
                     "err_spectrum"):
            if getattr(self, name) < 0.0:
                raise ValueError(f"{name} must be nonnegative")

    def with_pe(self, pe_y: bool, pe_e: bool, pe_margin: float) -> "ErrorRecord":
        return ErrorRecord(self.err_g, self.err_a, self.err_c, self.err_k,
                           self.err_markov, self.err_spectrum,
                           pe_y=pe_y, pe_e=pe_e, pe_margin=pe_margin)


def reference_realization(kf: SteadyKalman, hp: HankelParams) -> Realization:
    """Balanced realization of the exact Hankel matrix.

    This is the target the estimates are compared against: it is similar
    to (A, C, K), so its Markov parameters and spectrum match the true
    ones exactly.
    """
    g = hankel_true(kf, hp)
    return balanced_realization(HankelEstimate.from_exact(g), n=kf.n, m=kf.m,
                                f=hp.f, p=hp.p)


def procrustes_align(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Orthonormal T minimizing ||x - y T||_F.

    Computed from the SVD of y^T x; the orthogonal factor is not
    constrained to a rotation (reflections are allowed).
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise DimensionMismatch(f"shapes differ: {x.shape} vs {y.shape}")
    try:
        u, _, vt = np.linalg.svd(y.T @ x)
    except np.linalg.LinAlgError as exc:
        raise SvdFailure(str(exc)) from exc
    return u @ vt


def _spectrum_distance(a_est: np.ndarray, a_ref: np.ndarray) -> float:
    """Min-cost bipartite matching distance between the two spectra.

    Cost of a pairing is the modulus of the complex eigenvalue difference;
    the Hungarian method makes the matching exact. Returns the total cost
    of the optimal matching.
    """
    ev_est = np.linalg.eigvals(a_est)
    ev_ref = np.linalg.eigvals(a_ref)
    cost = np.abs(ev_est[:, None] - ev_ref[None, :])
    rows, cols = linear_sum_assignment(cost)
    return float(cost[rows, cols].sum())


def error_metrics(est: Realization, ref: Realization, ghat: np.ndarray,
                  g: np.ndarray) -> ErrorRecord:
    """Spectral-norm errors of an estimate against the reference.

    The alignment T comes from Procrustes on the observability factors;
    err_a = ||ahat - T^T aref T||, err_c = ||chat - cref T||,
    err_k = ||khat - T^T kref||, err_g = ||ghat - g||. PE fields stay unset.
    """
    if (est.n, est.m, est.f, est.p) != (ref.n, ref.m, ref.f, ref.p):
        raise DimensionMismatch(
            f"estimate dims {(est.n, est.m, est.f, est.p)} do not match "
            f"reference dims {(ref.n, ref.m, ref.f, ref.p)}")
    ghat = np.asarray(ghat, dtype=float)
    g = np.asarray(g, dtype=float)
    if ghat.shape != g.shape:
        raise DimensionMismatch(f"Hankel shapes differ: {ghat.shape} vs {g.shape}")
    t = procrustes_align(est.obs_f, ref.obs_f)
    err_a = spectral_norm(est.ahat - t.T @ ref.ahat @ t)
    err_c = spectral_norm(est.chat - ref.chat @ t)
    err_k = spectral_norm(est.khat - t.T @ ref.khat)
    err_markov = max(spectral_norm(est.markov(i) - ref.markov(i))
                     for i in range(est.f + est.p + 1))
    return ErrorRecord(
        err_g=spectral_norm(ghat - g),
        err_a=err_a,
        err_c=err_c,
        err_k=err_k,
        err_markov=err_markov,
        err_spectrum=_spectrum_distance(est.ahat, ref.ahat),
    )


def pe_events(dm: DataMatrices, kf: SteadyKalman, hp: HankelParams,
              tol: float | None = None) -> tuple[bool, bool, float]:
    """Persistence-of-excitation events of one data batch.

    pe_e: the weighted past-noise Gram dominates N/2 times its expectation
    per sample. pe_y: the output Gram dominates half the state plus noise
    contributions. pe_margin: lambda_min(Y- Y-^T) - N sigma_E / 4 (positive
    when the output PE conclusion holds outright).

    Semidefiniteness is decided up to ``tol``, default 1e-8 ||Y- Y-^T||.
    """
    if not dm.has_diagnostics:
        raise MissingDiagnostics(
            "data matrices lack eminus/xhat_block diagnostics")
    sig_e_mat, sig_e = _sigma_e_local(kf, hp.p)
    gram = symmetrize(dm.yminus @ dm.yminus.T)
    if tol is None:
        tol = 1e-8 * spectral_norm(gram)
    tp = toeplitz_weight(kf.A, kf.C, kf.K, hp.p)
    noise_part = tp @ dm.eminus
    noise_gram = symmetrize(noise_part @ noise_part.T)
    pe_e = min_eig(noise_gram - (dm.N / 2.0) * sig_e_mat) >= -tol
    obs_p = observability(kf.A, kf.C, hp.p)
    state_part = obs_p @ dm.xhat_block
    state_gram = symmetrize(state_part @ state_part.T)
    pe_y = min_eig(gram - 0.5 * state_gram - 0.5 * noise_gram) >= -tol
    pe_margin = min_eig(gram) - dm.N * sig_e / 4.0
    return pe_y, pe_e, pe_margin


def _sigma_e_local(kf: SteadyKalman, p: int):
    from .bounds import sigma_e_matrix

    return sigma_e_matrix(kf, p)


def truncation_diagnostic(dm: DataMatrices, kf: SteadyKalman,
                          hp: HankelParams) -> tuple[float, float]:
    """The two ratios controlled by the truncation-bias analysis.

    Returns (||T_p E- E-^T T_p^T (Y- Y-^T)^{-1}||,
             ||T_p E- Xhat^T O_p^T (Y- Y-^T)^{-1}||); on batches where both
    PE events hold the first is at most 2, and the second shrinks like
    1/sqrt(N).
    """
    if not dm.has_diagnostics:
        raise MissingDiagnostics(
            "data matrices lack eminus/xhat_block diagnostics")
    gram = symmetrize(dm.yminus @ dm.yminus.T)
    if min_eig(gram) <= 0.0:
        raise SingularGram("output Gram matrix is singular")
    tp = toeplitz_weight(kf.A, kf.C, kf.K, hp.p)
    obs_p = observability(kf.A, kf.C, hp.p)
    noise_part = tp @ dm.eminus
    first = noise_part @ noise_part.T
    second = noise_part @ dm.xhat_block.T @ obs_p.T
    # M gram^{-1} computed as solve(gram, M^T)^T; gram is symmetric
    first_ratio = spectral_norm(np.linalg.solve(gram, first.T).T)
    second_ratio = spectral_norm(np.linalg.solve(gram, second.T).T)
    return first_ratio, second_ratio
