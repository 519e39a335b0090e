"""Shared fixtures and random-system factories."""
from __future__ import annotations

import numpy as np
import pytest

from ssid import (HankelParams, StateSpace, hankel_true, observability,
                  solve_dare)


def make_random_system(rng: np.random.Generator, n: int | None = None,
                       m: int | None = None, rho_max: float = 0.95
                       ) -> StateSpace:
    """Random admissible system: rho(A) <= rho_max, Q and R positive definite."""
    if n is None:
        n = int(rng.integers(1, 6))
    if m is None:
        m = int(rng.integers(1, 4))
    a = rng.standard_normal((n, n))
    rho = float(np.max(np.abs(np.linalg.eigvals(a)))) if n else 0.0
    if rho > 0.0:
        a *= float(rng.uniform(0.3, rho_max)) / rho
    c = rng.standard_normal((m, n))
    mq = rng.standard_normal((n, n))
    mr = rng.standard_normal((m, m))
    return StateSpace(n=n, m=m, A=a, C=c,
                      Q=mq @ mq.T + 0.1 * np.eye(n),
                      R=mr @ mr.T + 0.1 * np.eye(m))


def make_conditioned_system(rng: np.random.Generator, n: int, m: int,
                            hp: HankelParams, cond_floor: float = 1e-3):
    """Random system whose exact Hankel matrix is numerically rank n.

    Draws are rejected until sigma_n(G) >= cond_floor * sigma_1(G); the
    realization theory assumes controllability, and draws arbitrarily close
    to losing rank n are excluded on purpose.
    """
    for _ in range(200):
        ss = make_random_system(rng, n=n, m=m)
        kf = solve_dare(ss)
        g = hankel_true(kf, hp)
        s = np.linalg.svd(g, compute_uv=False)
        obs_u = observability(ss.A, ss.C, hp.f - 1)
        su = np.linalg.svd(obs_u, compute_uv=False)
        if (s[n - 1] >= cond_floor * s[0]
                and su[min(n, su.size) - 1] >= cond_floor * su[0]):
            return ss, kf, g
    raise RuntimeError("no well-conditioned draw in 200 attempts")


@pytest.fixture(scope="session")
def scalar_system() -> StateSpace:
    return StateSpace(n=1, m=1, A=[[0.9]], C=[[1.0]], Q=[[1.0]], R=[[1.0]])


@pytest.fixture(scope="session")
def scalar_kf(scalar_system):
    return solve_dare(scalar_system)


@pytest.fixture(scope="session")
def jordan_system() -> StateSpace:
    return StateSpace(n=2, m=1, A=[[1.0, 1.0], [0.0, 1.0]], C=[[1.0, 0.0]],
                      Q=np.eye(2), R=[[1.0]])


@pytest.fixture(scope="session")
def jordan_kf(jordan_system):
    return solve_dare(jordan_system)


def scalar_dare_oracle() -> tuple[float, float, float]:
    """Scalar steady-state filter for A=0.9, C=1, Q=R=1 by the quadratic
    formula: the fixed point reduces to P^2 = 0.81 P + 1."""
    p = (0.81 + np.sqrt(0.81 ** 2 + 4.0)) / 2.0
    k = 0.9 * p / (p + 1.0)
    rbar = p + 1.0
    return p, k, rbar
