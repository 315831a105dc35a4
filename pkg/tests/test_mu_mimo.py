import numpy as np
import pytest

from volarray import (
    DropDistribution,
    InvalidArgumentError,
    MultiuserChannel,
    PrecoderKind,
    SingularMatrixError,
    drop_users,
    mmse_precoder,
    sinr_per_user,
    sum_capacity,
)


def random_channel(k, u, seed, sigma2=0.01):
    rng = np.random.default_rng(seed)
    h = (rng.standard_normal((k, u)) + 1j * rng.standard_normal((k, u))) / np.sqrt(2)
    return MultiuserChannel(h, sigma2, k, u)


def orthonormal_channel(k, u, sigma2=0.01):
    rng = np.random.default_rng(0)
    a = rng.standard_normal((u, k)) + 1j * rng.standard_normal((u, k))
    q, _ = np.linalg.qr(a)
    return MultiuserChannel(q[:, :k].conj().T, sigma2, k, u)


class TestDropUsers:
    def test_disc_radius_and_mean_range(self):
        drop = drop_users(4000, 200.0, DropDistribution.DISC_2D, 1.5, seed=1)
        r = np.hypot(drop.positions[:, 0], drop.positions[:, 1])
        assert r.max() <= 200.0
        # uniform-disc mean range is 2R/3; CI ~ R/(3 sqrt(K))
        assert r.mean() == pytest.approx(2 * 200 / 3, abs=5 * 200 / (3 * np.sqrt(4000)))
        assert np.all(drop.positions[:, 2] == 1.5)

    def test_single_user(self):
        drop = drop_users(1, 50.0, DropDistribution.DISC_2D, 1.5, seed=2)
        assert drop.positions.shape == (1, 3)

    def test_seed_reproducibility(self):
        a = drop_users(20, 100.0, DropDistribution.VOLUME_3D, (1.5, 30.0), seed=3)
        b = drop_users(20, 100.0, DropDistribution.VOLUME_3D, (1.5, 30.0), seed=3)
        assert np.array_equal(a.positions, b.positions)

    def test_volume_height_range(self):
        drop = drop_users(500, 100.0, DropDistribution.VOLUME_3D, (2.0, 40.0), seed=4)
        assert drop.positions[:, 2].min() >= 2.0
        assert drop.positions[:, 2].max() <= 40.0

    def test_bad_radius(self):
        with pytest.raises(InvalidArgumentError):
            drop_users(5, 0.0, DropDistribution.DISC_2D, 1.5, seed=0)


class TestPrecoders:
    def test_orthonormal_rows_zf_is_hermitian_transpose(self):
        ch = orthonormal_channel(3, 8)
        w = mmse_precoder(ch, alpha=0.0)
        assert w.kind is PrecoderKind.ZF
        assert np.allclose(w.w_cols, ch.h_rows.conj().T, atol=1e-10)

    def test_large_alpha_matches_matched_filter(self):
        ch = random_channel(4, 16, seed=5)
        w = mmse_precoder(ch, alpha=1e9)
        mf = ch.h_rows.conj().T / np.linalg.norm(ch.h_rows, axis=1)
        # compare up to the common normalization
        for k in range(4):
            c = np.vdot(w.w_cols[:, k], mf[:, k])
            assert abs(c) == pytest.approx(1.0, abs=1e-6)

    def test_zero_alpha_diagonalizes(self):
        ch = random_channel(4, 12, seed=6)
        w = mmse_precoder(ch, alpha=0.0)
        prod = ch.h_rows @ w.w_cols
        off = prod - np.diag(np.diag(prod))
        assert np.abs(off).max() < 1e-10

    def test_rank_deficient_zf_rejected(self):
        rng = np.random.default_rng(7)
        row = rng.standard_normal(8) + 1j * rng.standard_normal(8)
        h = np.stack([row, 2 * row, row + row])
        ch = MultiuserChannel(h, 0.01, 3, 8)
        with pytest.raises(SingularMatrixError):
            mmse_precoder(ch, alpha=0.0)

    def test_columns_unit_norm(self):
        ch = random_channel(5, 9, seed=8)
        w = mmse_precoder(ch, alpha=0.3)
        assert np.allclose(np.linalg.norm(w.w_cols, axis=0), 1.0)


class TestSinrAndCapacity:
    def test_orthonormal_zf_no_interference(self):
        ch = orthonormal_channel(4, 12, sigma2=0.01)
        w = mmse_precoder(ch, alpha=0.0)
        sinr = sinr_per_user(ch, w)  # P = K -> unit power per user
        assert np.allclose(sinr, 100.0, rtol=1e-9)

    def test_single_user_matched_filter_snr(self):
        rng = np.random.default_rng(9)
        h = (rng.standard_normal((1, 6)) + 1j * rng.standard_normal((1, 6))) / np.sqrt(2)
        ch = MultiuserChannel(h, 0.05, 1, 6)
        w = mmse_precoder(ch, alpha=0.0)
        sinr = sinr_per_user(ch, w, total_power=1.0)
        assert sinr[0] == pytest.approx(np.linalg.norm(h) ** 2 / 0.05, rel=1e-9)

    def test_orthogonal_beam_gives_zero_signal(self):
        h = np.array([[1.0 + 0j, 0.0]])
        ch = MultiuserChannel(h, 0.01, 1, 2)
        from volarray.mu_mimo import Precoder

        w = Precoder(np.array([[0.0], [1.0 + 0j]]), PrecoderKind.ZF, 0.0)
        assert sinr_per_user(ch, w)[0] == 0.0

    def test_sum_capacity_examples(self):
        assert sum_capacity([0.0, 0.0]) == 0.0
        assert sum_capacity([3.0, 1.0]) == pytest.approx(3.0)
        assert sum_capacity(np.full(50, 100.0)) == pytest.approx(50 * np.log2(101), rel=1e-12)

    def test_sum_capacity_rejects_negative(self):
        with pytest.raises(InvalidArgumentError):
            sum_capacity([-0.5])

    def test_user_permutation_permutes_sinrs(self):
        ch = random_channel(5, 10, seed=10)
        w = mmse_precoder(ch, alpha=0.1)
        sinr = sinr_per_user(ch, w)
        perm = np.array([3, 1, 4, 0, 2])
        ch_p = MultiuserChannel(ch.h_rows[perm], ch.noise_power, 5, 10)
        w_p = mmse_precoder(ch_p, alpha=0.1)
        sinr_p = sinr_per_user(ch_p, w_p)
        assert np.allclose(sinr_p, sinr[perm], rtol=1e-9)
        assert sum_capacity(sinr_p) == pytest.approx(sum_capacity(sinr), rel=1e-12)

    def test_mmse_continuity_toward_zf(self):
        ch = random_channel(6, 24, seed=11)
        zf = sinr_per_user(ch, mmse_precoder(ch, alpha=0.0))
        prev_err = np.inf
        for alpha in (1e-2, 1e-4, 1e-6, 1e-8):
            s = sinr_per_user(ch, mmse_precoder(ch, alpha=alpha))
            err = np.abs(s / zf - 1).max()
            assert err < prev_err + 1e-12
            prev_err = err
        assert prev_err < 1e-3
