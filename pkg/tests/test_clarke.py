import numpy as np
import pytest

from volarray import (
    ArrayGeometry,
    DensifyAxis,
    InvalidArgumentError,
    Layout,
    clarke_correlation_closed_form,
    clarke_correlation_monte_carlo,
    edof,
    make_linear_staggered,
    make_planar,
    sweep_linear,
    sweep_planar,
    synthesize_correlated_channels,
)
from volarray.metrics import CorrelationMatrix


def two_element_line(d):
    return make_linear_staggered(d, 2, 0.0)


def random_cloud(rng, n=6, scale=2.0):
    pts = rng.uniform(0, scale, size=(n, 3))
    return ArrayGeometry(pts, Layout.PLANAR, (scale, scale), (0.0, 0.0),
                         offset_h=float(pts[:, 2].max()))


class TestClosedForm:
    def test_coincident_limit_is_unity(self):
        psi = clarke_correlation_closed_form(two_element_line(1e-9))
        assert psi.entries[0, 1] == pytest.approx(1.0, abs=1e-12)

    def test_half_wavelength_null(self):
        psi = clarke_correlation_closed_form(two_element_line(0.5))
        assert psi.entries[0, 1] == pytest.approx(0.0, abs=1e-15)

    def test_quarter_wavelength(self):
        psi = clarke_correlation_closed_form(two_element_line(0.25))
        # sin(pi/2)/(pi/2) = 2/pi
        assert psi.entries[0, 1] == pytest.approx(2 / np.pi, rel=1e-12)

    def test_depends_only_on_distances(self):
        rng = np.random.default_rng(2)
        g = random_cloud(rng)
        q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
        pts = g.elements @ q.T + np.array([5.0, -3.0, 9.0])
        pts = pts - pts.min(axis=0)
        g2 = ArrayGeometry(pts, Layout.PLANAR,
                           (np.ptp(pts[:, 0]) + 1e-9, np.ptp(pts[:, 1]) + 1e-9),
                           (0, 0), offset_h=float(pts[:, 2].max()))
        a = clarke_correlation_closed_form(g)
        b = clarke_correlation_closed_form(g2)
        assert np.allclose(a.entries, b.entries, atol=1e-10)

    def test_psd_after_clamp(self):
        rng = np.random.default_rng(3)
        for _ in range(10):
            psi = clarke_correlation_closed_form(random_cloud(rng))
            assert psi.min_eigenvalue_raw() >= -1e-8
            assert psi.eigenvalues[-1] >= 0.0

    def test_edof_permutation_invariant(self):
        rng = np.random.default_rng(4)
        g = random_cloud(rng, n=7)
        psi = clarke_correlation_closed_form(g)
        perm = rng.permutation(7)
        permuted = CorrelationMatrix(psi.entries[np.ix_(perm, perm)])
        assert edof(permuted) == pytest.approx(edof(psi), rel=1e-12)


class TestMonteCarlo:
    def test_single_element(self):
        g = make_linear_staggered(1.0, 2, 0.0)
        sub = ArrayGeometry(g.elements[:1], Layout.LINEAR, (1, 0), (1, 0), 0.0)
        psi = clarke_correlation_monte_carlo(sub, 2000, seed=0)
        assert psi.entries.shape == (1, 1)
        assert psi.entries[0, 0] == pytest.approx(1.0)

    def test_half_wavelength_near_zero(self):
        psi = clarke_correlation_monte_carlo(two_element_line(0.5), 100_000, seed=1)
        assert abs(psi.entries[0, 1]) < 0.02

    def test_quarter_wavelength_matches_oracle(self):
        psi = clarke_correlation_monte_carlo(two_element_line(0.25), 100_000, seed=2)
        assert abs(psi.entries[0, 1] - 2 / np.pi) < 0.01

    def test_agreement_with_closed_form_random_geometries(self):
        rng = np.random.default_rng(5)
        n_waves = 20_000
        for trial in range(8):
            g = random_cloud(rng, n=5)
            ref = clarke_correlation_closed_form(g)
            est = clarke_correlation_monte_carlo(g, n_waves, seed=100 + trial)
            err = np.abs(est.entries - ref.entries).max()
            assert err <= 3.0 / np.sqrt(n_waves)

    def test_small_wave_count_flags_warning(self):
        psi = clarke_correlation_monte_carlo(two_element_line(0.3), 500, seed=3)
        assert psi.warning is not None

    def test_diagonal_exact(self):
        psi = clarke_correlation_monte_carlo(two_element_line(0.3), 5000, seed=4)
        assert np.all(np.diag(psi.entries) == 1.0)


class TestSynthesis:
    def test_identity_sample_covariance(self):
        psi = CorrelationMatrix(np.eye(4))
        ens = synthesize_correlated_channels(psi, 4, 4000, seed=0)
        h = ens.matrices
        cov = np.einsum("tij,tkj->ik", h, h.conj()) / (h.shape[0] * 4)
        assert np.abs(cov - np.eye(4)).max() < 5 / np.sqrt(4000)

    def test_rank_one_rows_fully_correlated(self):
        n = 3
        psi = CorrelationMatrix(np.ones((n, n)))
        ens = synthesize_correlated_channels(psi, 2, 50, seed=1)
        for h in ens.matrices[:10]:
            # every row is proportional to the first
            for k in range(1, n):
                c = np.vdot(h[0], h[k]) / (np.linalg.norm(h[0]) * np.linalg.norm(h[k]))
                assert abs(c) == pytest.approx(1.0, abs=1e-10)

    def test_seed_reproducibility_bitwise(self):
        psi = clarke_correlation_closed_form(make_linear_staggered(3, 5, 1.0))
        a = synthesize_correlated_channels(psi, 5, 20, seed=7)
        b = synthesize_correlated_channels(psi, 5, 20, seed=7)
        assert np.array_equal(a.matrices, b.matrices)

    def test_sample_statistic_matches_psi(self):
        g = make_linear_staggered(3.0, 5, 1.0)
        psi = clarke_correlation_closed_form(g)
        trials = 3000
        ens = synthesize_correlated_channels(psi, 5, trials, seed=2)
        h = ens.matrices
        cov = np.einsum("tij,tkj->ik", h, h.conj()) / (trials * 5)
        assert np.abs(cov - psi.entries).max() < 5 / np.sqrt(trials)


class TestSweeps:
    def test_linear_flat_saturation(self):
        reports = sweep_linear(3.0, 0.0, [7, 13], n_trials=100, seed=0)
        e = {r.sweep_n: r.edof for r in reports}
        assert e[13] <= 1.02 * e[7]

    def test_linear_raised_keeps_growing(self):
        reports = sweep_linear(3.0, 1.0, [7, 13], n_trials=100, seed=0)
        e = {r.sweep_n: r.edof for r in reports}
        assert e[13] >= 1.25 * e[7]

    def test_planar_zero_offset_layouts_coincide(self):
        kw = dict(offset=0.0, n_values=[3, 5], n_trials=100, seed=3)
        planar = sweep_planar(Layout.PLANAR, **kw)
        case1 = sweep_planar(Layout.CASE1, **kw)
        case2 = sweep_planar(Layout.CASE2, **kw)
        for a, b, c in zip(planar, case1, case2):
            assert a.edof == pytest.approx(b.edof, rel=1e-12)
            assert a.edof == pytest.approx(c.edof, rel=1e-12)

    def test_monotone_edof_in_n(self):
        reports = sweep_linear(3.0, 1.0, list(range(2, 14)), n_trials=100, seed=1)
        e = [r.edof for r in reports]
        assert all(b >= a - 1e-9 for a, b in zip(e, e[1:]))

    def test_trials_floor_enforced(self):
        with pytest.raises(InvalidArgumentError):
            sweep_linear(3.0, 0.0, [3], n_trials=50, seed=0)

    def test_xy_densify_square_counts(self):
        reports = sweep_planar(Layout.CASE2, DensifyAxis.XY, n_values=[4],
                               n_trials=100, seed=0)
        assert reports[0].n_elements == 16

    def test_fingerprint_stable_and_parameter_sensitive(self):
        a = sweep_linear(3.0, 0.0, [3], n_trials=100, seed=0)
        b = sweep_linear(3.0, 0.0, [3], n_trials=100, seed=0)
        c = sweep_linear(3.0, 0.0, [3], n_trials=100, seed=1)
        assert a[0].scenario_fingerprint == b[0].scenario_fingerprint
        assert a[0].scenario_fingerprint != c[0].scenario_fingerprint
