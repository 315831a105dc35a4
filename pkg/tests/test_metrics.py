import numpy as np
import pytest
from scipy.special import exp1

from volarray import (
    CorrelationMatrix,
    ChannelEnsemble,
    InvalidArgumentError,
    ModelTag,
    dof_rank,
    edof,
    edof_capacity_approx,
    ergodic_capacity,
    iid_ensemble,
    kronecker_capacity,
)
from volarray.errors import TrialCountWarning


def diag_psi(values):
    return CorrelationMatrix(np.diag(np.asarray(values, dtype=float)))


class TestEdof:
    def test_identity(self):
        assert edof(CorrelationMatrix(np.eye(6))) == pytest.approx(6.0)

    def test_rank_one(self):
        v = np.ones((4, 1))
        psi = CorrelationMatrix(v @ v.T / 4)
        assert edof(psi) == pytest.approx(1.0)

    def test_hand_eigenvalues(self):
        # (2+1+1)^2 / (4+1+1) = 16/6
        assert edof(diag_psi([2, 1, 1])) == pytest.approx(16 / 6)

    def test_zero_matrix_rejected(self):
        with pytest.raises(InvalidArgumentError):
            edof(CorrelationMatrix(np.zeros((3, 3))))

    def test_scale_invariance(self):
        rng = np.random.default_rng(0)
        a = rng.normal(size=(5, 5)) + 1j * rng.normal(size=(5, 5))
        psi = CorrelationMatrix(a @ a.conj().T)
        for c in (1e-6, 0.5, 7.0, 1e6):
            assert edof(CorrelationMatrix(c * psi.entries)) == pytest.approx(edof(psi))

    def test_bounds(self):
        rng = np.random.default_rng(1)
        for _ in range(10):
            a = rng.normal(size=(6, 3)) + 1j * rng.normal(size=(6, 3))
            psi = CorrelationMatrix(a @ a.conj().T)  # rank <= 3
            e = edof(psi)
            rank = dof_rank(psi, 1e-9)
            assert 1.0 - 1e-9 <= e <= rank + 1e-9 <= psi.n


class TestDofRank:
    def test_identity(self):
        assert dof_rank(CorrelationMatrix(np.eye(5)), 0.01) == 5

    def test_threshold_cut(self):
        assert dof_rank(diag_psi([1.0, 0.5, 1e-6]), 0.01) == 2

    def test_single(self):
        assert dof_rank(diag_psi([1.0]), 0.5) == 1

    def test_threshold_domain(self):
        with pytest.raises(InvalidArgumentError):
            dof_rank(diag_psi([1.0]), 1.5)


class TestErgodicCapacity:
    def test_siso_rayleigh_against_integral_oracle(self):
        # E[log2(1 + gamma * X)], X ~ Exp(1): closed form e^{1/g} E1(1/g) / ln 2
        gamma = 100.0
        oracle = np.exp(1 / gamma) * exp1(1 / gamma) / np.log(2)
        assert oracle == pytest.approx(5.884, abs=5e-3)  # frozen oracle value
        ens = iid_ensemble(1, 1, 20000, seed=42)
        rep = ergodic_capacity(ens, 20.0)
        assert rep.capacity == pytest.approx(oracle, abs=4 * rep.ci95)

    def test_fixed_identity_channel(self):
        h = np.broadcast_to(np.eye(2), (100, 2, 2))
        ens = ChannelEnsemble(h.copy(), 0, 2, 2, ModelTag.CLARKE_IID)
        rep = ergodic_capacity(ens, 20.0)
        assert rep.capacity == pytest.approx(2 * np.log2(1 + 50.0), rel=1e-12)
        assert rep.ci95 == pytest.approx(0.0, abs=1e-12)

    def test_zero_snr_limit(self):
        ens = iid_ensemble(2, 2, 200, seed=1)
        rep = ergodic_capacity(ens, -100.0)
        assert rep.capacity == pytest.approx(0.0, abs=1e-6)

    def test_monotone_in_snr_shared_draws(self):
        ens = iid_ensemble(3, 3, 150, seed=3)
        caps = [ergodic_capacity(ens, s).capacity for s in (-10, 0, 10, 20, 30)]
        assert all(b > a for a, b in zip(caps, caps[1:]))

    def test_few_trials_warns(self):
        ens = iid_ensemble(2, 2, 10, seed=4)
        with pytest.warns(TrialCountWarning):
            ergodic_capacity(ens, 10.0)

    def test_edof_reported_from_sample_when_no_psi(self):
        ens = iid_ensemble(4, 4, 2000, seed=5)
        rep = ergodic_capacity(ens, 10.0)
        assert rep.edof == pytest.approx(4.0, rel=0.1)


class TestKroneckerCapacity:
    def test_identity_matches_iid(self):
        r = CorrelationMatrix(np.eye(4))
        k = kronecker_capacity(r, 4, 20.0, 2000, seed=11)
        e = ergodic_capacity(iid_ensemble(4, 4, 2000, seed=23), 20.0)
        assert abs(k.capacity - e.capacity) <= k.ci95 + e.ci95

    def test_lossy_diagonal_below_identity(self):
        r_full = CorrelationMatrix(np.eye(3))
        r_half = CorrelationMatrix(0.5 * np.eye(3))
        c_full = kronecker_capacity(r_full, 3, 20.0, 500, seed=2).capacity
        c_half = kronecker_capacity(r_half, 3, 20.0, 500, seed=2).capacity
        assert c_half < c_full

    def test_rank_one_matches_single_branch_combining(self):
        # R = u u^H picks one spatial branch: capacity equals the brute-force
        # simulation of log2(1 + gamma/n_t * ||u^H H_w||^2)
        n, n_t, trials = 3, 4, 4000
        u = np.array([1.0, 1.0, 1.0]) / np.sqrt(3)
        r = CorrelationMatrix(3.0 * np.outer(u, u.conj()))
        rep = kronecker_capacity(r, n_t, 10.0, trials, seed=9)
        from volarray.seeding import derive_rng
        gamma = 10.0
        acc = np.empty(trials)
        for t in range(trials):
            rng = derive_rng(9, 0, t)
            hw = (rng.standard_normal((n, n_t)) + 1j * rng.standard_normal((n, n_t))) / np.sqrt(2)
            acc[t] = np.log2(1 + gamma / n_t * 3.0 * np.linalg.norm(u.conj() @ hw) ** 2)
        assert rep.capacity == pytest.approx(acc.mean(), rel=1e-12)


class TestCapacityApprox:
    def test_single_branch(self):
        assert edof_capacity_approx(1.0, 20.0) == pytest.approx(np.log2(101), rel=1e-12)

    def test_four_branches(self):
        assert edof_capacity_approx(4.0, 20.0) == pytest.approx(4 * np.log2(26), rel=1e-12)

    def test_zero_snr(self):
        assert edof_capacity_approx(3.0, -300.0) == pytest.approx(0.0, abs=1e-12)

    def test_increasing_in_both_arguments(self):
        vals = [edof_capacity_approx(e, 20.0) for e in (1, 2, 4, 8)]
        assert all(b > a for a, b in zip(vals, vals[1:]))
        vals = [edof_capacity_approx(4.0, s) for s in (0, 10, 20, 30)]
        assert all(b > a for a, b in zip(vals, vals[1:]))

    def test_iid_sanity_envelope(self):
        # the EDOF shortcut tracks the Monte-Carlo mean within 15% for small
        # arrays (the gap grows with N, so this is a sanity check, not a law)
        for n in (2, 3):
            rep = ergodic_capacity(iid_ensemble(n, n, 3000, seed=8), 20.0)
            approx = edof_capacity_approx(float(n), 20.0)
            assert abs(approx - rep.capacity) / rep.capacity < 0.15


class TestCorrelationMatrix:
    def test_rejects_non_hermitian(self):
        with pytest.raises(InvalidArgumentError):
            CorrelationMatrix(np.array([[1.0, 0.5], [0.2, 1.0]]))

    def test_eigenvalues_sorted_clamped(self):
        psi = diag_psi([0.5, 2.0, 1.0])
        assert np.all(np.diff(psi.eigenvalues) <= 0)
        tiny = CorrelationMatrix(np.array([[1.0, 1.0], [1.0, 1.0]]))
        assert tiny.eigenvalues[-1] >= 0.0

    def test_sqrt_squares_back(self):
        rng = np.random.default_rng(6)
        a = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        psi = CorrelationMatrix(a @ a.conj().T)
        s = psi.sqrt()
        assert np.allclose(s @ s.conj().T, psi.entries, atol=1e-10)
