"""Riccati solver, assumption checks and model validation."""
import numpy as np
import pytest

from conftest import make_random_system, scalar_dare_oracle
from ssid import (StateSpace, SteadyKalman, check_assumptions, solve_dare,
                  spectral_radius)
from ssid.errors import EigenFailure, NonConvergence, NotDetectable
from ssid.model import riccati_residual


class TestSolveDare:
    def test_zero_dynamics(self):
        # with A = 0 the Riccati map returns P = Q immediately and K = 0
        ss = StateSpace(n=1, m=1, A=[[0.0]], C=[[1.0]], Q=[[2.0]], R=[[3.0]])
        kf = solve_dare(ss)
        assert kf.P[0, 0] == pytest.approx(2.0, abs=1e-14)
        assert kf.K[0, 0] == pytest.approx(0.0, abs=1e-14)
        assert kf.Rbar[0, 0] == pytest.approx(5.0, abs=1e-14)

    def test_scalar_quadratic_oracle(self, scalar_kf):
        p, k, rbar = scalar_dare_oracle()
        assert scalar_kf.P[0, 0] == pytest.approx(p, abs=1e-10)
        assert scalar_kf.K[0, 0] == pytest.approx(k, abs=1e-10)
        assert scalar_kf.Rbar[0, 0] == pytest.approx(rbar, abs=1e-10)

    def test_random_system_residual(self):
        rng = np.random.default_rng(31337)
        ss = make_random_system(rng, n=3, m=2)
        kf = solve_dare(ss)
        assert riccati_residual(kf) <= 1e-10

    def test_scipy_cross_check(self):
        # independent solver route for the same fixed point
        from scipy.linalg import solve_discrete_are

        rng = np.random.default_rng(99)
        for _ in range(5):
            ss = make_random_system(rng)
            kf = solve_dare(ss)
            p_ref = solve_discrete_are(ss.A.T, ss.C.T, ss.Q, ss.R)
            assert np.allclose(kf.P, p_ref, rtol=1e-8, atol=1e-8)

    def test_invariants_random(self):
        rng = np.random.default_rng(4242)
        for _ in range(20):
            ss = make_random_system(rng)
            kf = solve_dare(ss)
            assert np.linalg.eigvalsh(kf.P)[0] > 0.0
            assert np.linalg.eigvalsh(kf.Rbar - ss.R)[0] >= -1e-10
            assert spectral_radius(kf.closed_loop) < 1.0
            assert riccati_residual(kf) <= 1e-10

    def test_deterministic(self):
        rng = np.random.default_rng(7)
        ss = make_random_system(rng, n=4, m=2)
        kf1 = solve_dare(ss)
        kf2 = solve_dare(ss)
        assert np.array_equal(kf1.P, kf2.P)
        assert np.array_equal(kf1.K, kf2.K)
        assert np.array_equal(kf1.Rbar, kf2.Rbar)

    def test_marginally_stable_converges(self, jordan_kf):
        assert riccati_residual(jordan_kf) <= 1e-10
        assert spectral_radius(jordan_kf.closed_loop) < 1.0

    def test_non_convergence(self, scalar_system):
        with pytest.raises(NonConvergence):
            solve_dare(scalar_system, tol=1e-12, max_iter=1)

    def test_not_detectable(self):
        # unstable mode invisible from the output: the iteration runs away
        ss = StateSpace(n=1, m=1, A=[[2.0]], C=[[0.0]], Q=[[1.0]], R=[[1.0]])
        with pytest.raises(NotDetectable):
            solve_dare(ss)


class TestCheckAssumptions:
    def test_scalar_all_true(self, scalar_kf):
        report = check_assumptions(scalar_kf, tol=1e-9)
        assert report.all_satisfied()
        assert report.spectral_radius == pytest.approx(0.9, abs=1e-12)

    def test_jordan_marginal(self, jordan_kf):
        report = check_assumptions(jordan_kf, tol=1e-9)
        assert report.marginally_stable
        assert report.observable
        assert report.spectral_radius == pytest.approx(1.0, abs=1e-12)

    def test_unobservable(self):
        ss = StateSpace(n=1, m=1, A=[[0.5]], C=[[0.0]], Q=[[1.0]], R=[[1.0]])
        kf = solve_dare(ss)
        report = check_assumptions(kf, tol=1e-9)
        assert not report.observable


class TestSpectralRadius:
    def test_zero(self):
        assert spectral_radius(np.zeros((2, 2))) == 0.0

    def test_nilpotent(self):
        assert spectral_radius(np.array([[0.0, 1.0], [0.0, 0.0]])) == 0.0

    def test_triangular(self):
        m = np.array([[0.9, 1.0], [0.0, 0.8]])
        assert spectral_radius(m) == pytest.approx(0.9, abs=1e-14)

    def test_rejects_non_square(self):
        with pytest.raises(ValueError):
            spectral_radius(np.zeros((2, 3)))


class TestValidation:
    def test_bad_shape(self):
        with pytest.raises(ValueError):
            StateSpace(n=2, m=1, A=[[0.5]], C=[[1.0, 0.0]],
                       Q=np.eye(2), R=[[1.0]])

    def test_indefinite_q(self):
        with pytest.raises(ValueError):
            StateSpace(n=1, m=1, A=[[0.5]], C=[[1.0]], Q=[[-1.0]], R=[[1.0]])

    def test_singular_r(self):
        with pytest.raises(ValueError):
            StateSpace(n=1, m=1, A=[[0.5]], C=[[1.0]], Q=[[1.0]], R=[[0.0]])

    def test_kalman_requires_pd_p(self, scalar_system):
        with pytest.raises(ValueError):
            SteadyKalman(base=scalar_system, K=[[0.0]], P=[[0.0]],
                         Rbar=[[1.0]])

    def test_kalman_requires_stable_closed_loop(self, scalar_system):
        with pytest.raises(ValueError):
            SteadyKalman(base=scalar_system, K=[[-1.0]], P=[[1.0]],
                         Rbar=[[1.0]])

    def test_json_round_trip(self):
        rng = np.random.default_rng(11)
        ss = make_random_system(rng, n=3, m=2)
        back = StateSpace.from_json(ss.to_json())
        assert np.array_equal(back.A, ss.A)
        assert np.array_equal(back.Q, ss.Q)
        assert (back.n, back.m) == (ss.n, ss.m)
