import numpy as np
import pytest

from choldag.cdcf import CdcfConfig, cdcf
from choldag.oracle import (
    brute_force_order,
    build_marginalization_witness,
    finite_diff_grad,
    verify_cholesky_perturbation,
    verify_marginalization_identities,
)
from conftest import random_pd


class TestBruteForceOrder:
    def test_identity_tie_break(self):
        assert brute_force_order(np.eye(3)).tolist() == [0, 1, 2]

    def test_chain(self):
        assert brute_force_order(np.array([[1.0, 2.0], [2.0, 5.0]])).tolist() == [0, 1]

    def test_rejects_large(self):
        with pytest.raises(ValueError):
            brute_force_order(np.eye(9))

    def test_agrees_with_cdcf_criterion_v(self, rng):
        for _ in range(100):
            p = int(rng.integers(2, 7))
            S = random_pd(rng, p)
            assert np.array_equal(brute_force_order(S), cdcf(S, CdcfConfig(omega=0.0)).ordering)


class TestFiniteDiffGrad:
    def test_quadratic(self, rng):
        S = np.triu(rng.normal(size=(4, 4)), 1)
        g = finite_diff_grad(lambda M: float((M * M).sum()), S, 1e-6)
        assert np.allclose(g, 2 * S, atol=1e-6)

    def test_constant(self):
        g = finite_diff_grad(lambda M: 3.0, np.zeros((3, 3)), 1e-5)
        assert np.all(g == 0)

    def test_rejects_bad_step(self):
        with pytest.raises(ValueError):
            finite_diff_grad(lambda M: 0.0, np.zeros((2, 2)), 0.0)


class TestMarginalizationIdentities:
    def test_no_children_latent(self, rng):
        # y_hat = 0: the trailing factor block is untouched
        U11 = np.triu(rng.normal(size=(3, 3))) + 3 * np.eye(3)
        U22h = np.triu(rng.normal(size=(3, 3))) + 3 * np.eye(3)
        Up = np.zeros((7, 7))
        Up[:3, :3] = U11
        Up[:3, 3] = rng.normal(size=3)
        Up[3, 3] = 2.0
        Up[3, 4:] = 0.0  # y_hat = 0
        Up[:3, 4:] = rng.normal(size=(3, 3))
        Up[4:, 4:] = U22h
        witness = build_marginalization_witness(Up.T @ Up, 3)
        res_a, res_b, res_c = verify_marginalization_identities(witness)
        assert max(res_a, res_b, res_c) < 1e-10
        assert np.allclose(witness.U22, witness.U22_hat, atol=1e-10)

    def test_random_instances(self, rng):
        for _ in range(100):
            q = int(rng.integers(3, 11))
            witness = build_marginalization_witness(random_pd(rng, q), int(rng.integers(0, q)))
            res_a, res_b, res_c = verify_marginalization_identities(witness)
            assert res_a < 1e-10
            assert res_b < 1e-10
            assert res_c < 1e-10

    def test_single_nonzero_w_localizes_growth(self, rng):
        # only the diagonal entry matching the nonzero of w grows
        p1, p2 = 2, 4
        U11 = np.triu(rng.normal(size=(p1, p1))) + 3 * np.eye(p1)
        U22h = np.triu(rng.normal(size=(p2, p2))) + 3 * np.eye(p2)
        w = np.zeros(p2)
        k = 2
        w[k] = 1.3
        y_hat = U22h.T @ w  # so that w = U22h^{-T} y_hat
        Up = np.zeros((p1 + 1 + p2, p1 + 1 + p2))
        Up[:p1, :p1] = U11
        Up[:p1, p1] = rng.normal(size=p1)
        Up[p1, p1] = 1.7
        Up[p1, p1 + 1:] = y_hat
        Up[:p1, p1 + 1:] = rng.normal(size=(p1, p2))
        Up[p1 + 1:, p1 + 1:] = U22h
        witness = build_marginalization_witness(Up.T @ Up, p1)
        assert np.allclose(witness.w, w, atol=1e-10)
        growth = np.diag(witness.U22) / np.diag(witness.U22_hat)
        assert growth[k] > 1.0 + 1e-6
        others = np.delete(growth, k)
        assert np.allclose(others, 1.0, atol=1e-9)


class TestCholeskyPerturbation:
    def test_identical_matrices(self, rng):
        S = random_pd(rng, 6)
        rep = verify_cholesky_perturbation(S, S)
        assert rep.eps_d == 0.0
        assert rep.entry_max_diff == 0.0
        assert rep.diag_identity_holds

    def test_small_random_perturbation(self, rng):
        for _ in range(100):
            p = int(rng.integers(2, 11))
            S = random_pd(rng, p)
            E = rng.normal(size=(p, p)) * 1e-6
            E = (E + E.T) / 2
            rep = verify_cholesky_perturbation(S, S + E)
            assert rep.diag_identity_holds
            assert rep.entry_bound_holds
            assert rep.slack > 0

    def test_diagonal_only_perturbation_identity(self, rng):
        # the column-norm gap equals the diagonal perturbation entrywise
        S = random_pd(rng, 5)
        d = rng.uniform(1e-4, 5e-4, size=5)
        rep = verify_cholesky_perturbation(S, S + np.diag(d))
        assert rep.diag_identity_holds
        assert np.isclose(rep.eps_d, d.max())

    def test_rejects_non_pd(self, rng):
        S = random_pd(rng, 4)
        with pytest.raises(np.linalg.LinAlgError):
            verify_cholesky_perturbation(S, -S)
