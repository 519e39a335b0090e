"""Regression and balanced-realization stages."""
import numpy as np
import pytest

from conftest import make_random_system, scalar_dare_oracle
from ssid import (HankelEstimate, HankelParams, SimConfig,
                  balanced_realization, build_data_matrices, hankel_true,
                  identify, regress_hankel, simulate_innovation, solve_dare)
from ssid.errors import (InsufficientSamples, PersistenceFailure, PinvFailure,
                         RankGapWarning)
from ssid.structmats import DataMatrices


def _dm_from_arrays(yplus, yminus):
    return DataMatrices(yplus=yplus, yminus=yminus, eplus=None, eminus=None,
                        xhat_block=None, N=yminus.shape[1])


class TestRegressHankel:
    def test_exact_linear_map_recovered(self):
        rng = np.random.default_rng(1)
        yminus = rng.standard_normal((3, 40))
        mapping = rng.standard_normal((4, 3))
        he = regress_hankel(_dm_from_arrays(mapping @ yminus, yminus))
        assert np.allclose(he.ghat, mapping, atol=1e-10)

    def test_matches_normal_equations_oracle(self, scalar_kf):
        hp = HankelParams(p=2, f=2)
        traj = simulate_innovation(scalar_kf, SimConfig(nbar=10_003, seed=55))
        dm = build_data_matrices(traj, hp)
        he = regress_hankel(dm)
        # independent route: explicit pseudo-inverse of the normal equations
        oracle = dm.yplus @ dm.yminus.T @ np.linalg.pinv(
            dm.yminus @ dm.yminus.T)
        assert np.linalg.norm(he.ghat - oracle, 2) <= 1e-8 * np.linalg.norm(
            oracle, 2)

    def test_rank_deficient_gram_rejected(self, scalar_kf):
        # N < m p cannot produce a full-rank Gram
        traj = simulate_innovation(scalar_kf, SimConfig(nbar=8, seed=3))
        dm = build_data_matrices(traj, HankelParams(p=4, f=2))
        assert dm.N < 4
        with pytest.raises(PersistenceFailure):
            regress_hankel(dm)

    def test_ridge_keeps_unridged_diagnostics(self):
        rng = np.random.default_rng(2)
        yminus = rng.standard_normal((2, 50))
        yplus = rng.standard_normal((2, 50))
        dm = _dm_from_arrays(yplus, yminus)
        plain = regress_hankel(dm)
        ridged = regress_hankel(dm, ridge=5.0)
        assert ridged.gram_min_eig == plain.gram_min_eig
        assert not np.allclose(ridged.ghat, plain.ghat)

    def test_singular_values_sorted(self, scalar_kf):
        traj = simulate_innovation(scalar_kf, SimConfig(nbar=500, seed=4))
        he = regress_hankel(build_data_matrices(traj, HankelParams(p=2, f=2)))
        assert np.all(np.diff(he.singular_values) <= 0.0)


class TestBalancedRealization:
    def test_exact_scalar_markov_parameters(self, scalar_kf):
        p_val, k_val, _ = scalar_dare_oracle()
        hp = HankelParams(p=2, f=2)
        he = HankelEstimate.from_exact(hankel_true(scalar_kf, hp))
        real = balanced_realization(he, n=1, m=1, f=2, p=2)
        for i in range(4):
            truth = 1.0 * (0.9 ** i) * k_val  # C A^i K from the oracle
            assert real.markov(i)[0, 0] == pytest.approx(truth, abs=1e-8)

    def test_exact_factorization_reproduces_g(self):
        rng = np.random.default_rng(5)
        ss = make_random_system(rng, n=2, m=2)
        kf = solve_dare(ss)
        hp = HankelParams(p=3, f=3)
        g = hankel_true(kf, hp)
        real = balanced_realization(HankelEstimate.from_exact(g), n=2, m=2,
                                    f=3, p=3)
        assert np.linalg.norm(real.obs_f @ real.ctrl_p - g, 2) <= 1e-10

    def test_exact_spectrum_recovered(self):
        rng = np.random.default_rng(6)
        ss = make_random_system(rng, n=3, m=2)
        kf = solve_dare(ss)
        hp = HankelParams(p=4, f=4)
        real = balanced_realization(
            HankelEstimate.from_exact(hankel_true(kf, hp)), n=3, m=2, f=4, p=4)
        got = np.sort_complex(np.linalg.eigvals(real.ahat))
        want = np.sort_complex(np.linalg.eigvals(ss.A))
        assert np.allclose(got, want, atol=1e-8)

    def test_truncation_optimality(self, scalar_kf):
        # rank-n SVD truncation beats 100 random rank-n competitors
        traj = simulate_innovation(scalar_kf, SimConfig(nbar=2_003, seed=7))
        he = regress_hankel(build_data_matrices(traj, HankelParams(p=2, f=2)))
        real = balanced_realization(he, n=1, m=1, f=2, p=2)
        best = np.linalg.norm(he.ghat - real.obs_f @ real.ctrl_p, 2)
        rng = np.random.default_rng(8)
        for _ in range(100):
            cand = np.outer(rng.standard_normal(2), rng.standard_normal(2))
            assert best <= np.linalg.norm(he.ghat - cand, 2) + 1e-12

    def test_sign_convention_deterministic(self, scalar_kf):
        traj = simulate_innovation(scalar_kf, SimConfig(nbar=1_003, seed=9))
        he = regress_hankel(build_data_matrices(traj, HankelParams(p=2, f=2)))
        r1 = balanced_realization(he, n=1, m=1, f=2, p=2)
        r2 = balanced_realization(he, n=1, m=1, f=2, p=2)
        assert np.array_equal(r1.obs_f, r2.obs_f)
        assert np.array_equal(r1.ctrl_p, r2.ctrl_p)
        assert np.array_equal(r1.ahat, r2.ahat)

    def test_rank_gap_warning(self):
        he = HankelEstimate.from_exact(np.eye(2))
        with pytest.warns(RankGapWarning):
            balanced_realization(he, n=1, m=1, f=2, p=2)

    def test_pinv_failure(self):
        # top singular vector concentrated on the last row: the upper
        # observability block is exactly zero
        he = HankelEstimate.from_exact(np.array([[0.0, 0.0], [0.0, 1.0]]))
        with pytest.raises(PinvFailure):
            balanced_realization(he, n=1, m=1, f=2, p=2)

    def test_sigma_fields(self, scalar_kf):
        hp = HankelParams(p=3, f=2)
        he = HankelEstimate.from_exact(hankel_true(scalar_kf, hp))
        real = balanced_realization(he, n=1, m=1, f=2, p=3)
        assert real.sigma1.shape == (1,)
        assert real.sigma_np1 <= 1e-12  # exact G has rank n = 1

    def test_requires_f_rows_for_a(self, scalar_kf):
        he = HankelEstimate.from_exact(hankel_true(scalar_kf,
                                                   HankelParams(p=2, f=1)))
        with pytest.raises(ValueError):
            balanced_realization(he, n=1, m=1, f=1, p=2)


class TestPipeline:
    def test_scalar_error_within_frozen_budget(self, scalar_kf):
        hp = HankelParams(p=2, f=2)
        traj = simulate_innovation(scalar_kf, SimConfig(nbar=10_003, seed=11))
        he, real = identify(traj, hp, n=1)
        g = hankel_true(scalar_kf, hp)
        assert np.linalg.norm(he.ghat - g, 2) < 0.2

    def test_short_trajectory(self, scalar_kf):
        traj = simulate_innovation(scalar_kf, SimConfig(nbar=3, seed=1))
        with pytest.raises(InsufficientSamples):
            identify(traj, HankelParams(p=2, f=2), n=1)

    def test_deterministic(self, scalar_kf):
        hp = HankelParams(p=2, f=2)
        traj1 = simulate_innovation(scalar_kf, SimConfig(nbar=503, seed=13))
        traj2 = simulate_innovation(scalar_kf, SimConfig(nbar=503, seed=13))
        he1, r1 = identify(traj1, hp, n=1)
        he2, r2 = identify(traj2, hp, n=1)
        assert np.array_equal(he1.ghat, he2.ghat)
        assert np.array_equal(r1.ahat, r2.ahat)
        assert np.array_equal(r1.khat, r2.khat)

    def test_realization_json(self, scalar_kf):
        hp = HankelParams(p=2, f=2)
        traj = simulate_innovation(scalar_kf, SimConfig(nbar=503, seed=14))
        _, real = identify(traj, hp, n=1)
        doc = real.to_json()
        assert doc["n"] == 1 and doc["f"] == 2 and doc["p"] == 2
        assert np.allclose(doc["ahat"], real.ahat)
