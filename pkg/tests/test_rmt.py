import math

import numpy as np
import pytest

from injlab.constants import mu_p_cdf, mu_p_radius, omega, solve_e0
from injlab.rmt import (
    EnsembleMatrix,
    eigenvalues,
    esd_w1,
    log_abs_det,
    sample_bhgoe,
    sample_tbhgoe,
    spectral_gap_ok,
    stieltjes_empirical,
    stieltjes_mp,
)


class TestSampleBhgoe:
    def test_structure(self):
        m = sample_bhgoe(4, 3, None, seed=1)
        w = m.data
        assert np.array_equal(w, w.T)
        for b in range(3):
            blk = w[b * 4:(b + 1) * 4, b * 4:(b + 1) * 4]
            assert np.all(blk == 0.0)
        assert m.n == 12 and m.sigma2 == pytest.approx(1.0 / 12)

    def test_deterministic(self):
        a = sample_bhgoe(5, 2, 0.3, seed=9, trial=4)
        b = sample_bhgoe(5, 2, 0.3, seed=9, trial=4)
        assert np.array_equal(a.data, b.data)
        c = sample_bhgoe(5, 2, 0.3, seed=9, trial=5)
        assert not np.array_equal(a.data, c.data)

    def test_p2_chiral_spectrum(self):
        m = sample_bhgoe(6, 2, None, seed=3)
        lam = eigenvalues(m).eigenvalues
        assert np.max(np.abs(lam + lam[::-1])) <= 1e-10
        sv = np.linalg.svd(m.data[6:, :6], compute_uv=False)
        assert np.allclose(np.sort(lam[6:]), np.sort(sv), atol=1e-10)

    def test_entry_variance_monte_carlo(self):
        n, sigma2 = 10**5, 0.7
        vals = np.empty(n)
        for i in range(n):
            vals[i] = sample_bhgoe(1, 2, sigma2, seed=17, trial=i).data[0, 1]
        stderr = sigma2 * math.sqrt(2.0 / n)
        assert abs(np.var(vals) - sigma2) <= 3 * stderr

    def test_rejects_bad_args(self):
        with pytest.raises(ValueError):
            sample_bhgoe(0, 3)
        with pytest.raises(ValueError):
            sample_bhgoe(3, 3, -1.0)
        with pytest.raises(ValueError):
            sample_bhgoe(4000, 3)


class TestSampleTbhgoe:
    def test_structure(self):
        t = sample_tbhgoe(4, 3, seed=2)
        w = t.data
        m = 12
        assert t.n == 2 * m + 1
        assert np.array_equal(w, w.T)
        assert w[-1, -1] == 0.0
        # theta zero pattern: first block-size entries of each half
        assert np.all(w[-1, :4] == 0.0)
        assert np.all(w[-1, m:m + 4] == 0.0)
        assert np.any(w[-1, 4:m] != 0.0)
        # top-left minus bottom-middle reads back 2B
        b = w[:m, :m]
        assert np.allclose(w[:m, :m] - w[m:2 * m, m:2 * m], 2 * b)
        # off-diagonal coupling blocks agree
        assert np.allclose(w[:m, m:2 * m], w[m:2 * m, :m])

    def test_operator_norm_bound(self):
        ops = []
        for i in range(100):
            spec = eigenvalues(sample_tbhgoe(50, 3, seed=8, trial=i))
            ops.append(spec.op_norm)
        assert np.mean(ops) <= 2 * math.sqrt(2.0 / 3.0) + 0.25


class TestEigenvalues:
    def test_zero_matrix(self):
        m = EnsembleMatrix(None, 1, 3, 1.0, 3, np.zeros((3, 3)), 0)
        spec = eigenvalues(m)
        assert np.all(spec.eigenvalues == 0.0)
        assert spec.op_norm == 0.0

    def test_two_by_two(self):
        spec = eigenvalues(np.array([[0.0, 1.7], [1.7, 0.0]]))
        assert np.allclose(spec.eigenvalues, [-1.7, 1.7])

    def test_trace_zero(self):
        spec = eigenvalues(sample_bhgoe(30, 3, None, seed=4))
        assert abs(np.sum(spec.eigenvalues)) <= 1e-9

    def test_reconstruction_residual(self):
        m = sample_bhgoe(20, 3, None, seed=5)
        lam, q = np.linalg.eigh(m.data)
        resid = np.linalg.norm(m.data - q @ np.diag(lam) @ q.T) / np.linalg.norm(m.data)
        assert resid <= 1e-10
        assert np.allclose(np.sort(lam), eigenvalues(m).eigenvalues)

    def test_rejects_nonfinite(self):
        with pytest.raises(ValueError):
            eigenvalues(np.array([[np.nan, 0.0], [0.0, 0.0]]))


class TestEsdW1:
    def test_quantile_spectrum_near_zero(self):
        # spectrum placed at the exact quantiles of the target measure
        p, n = 3, 1000
        r = mu_p_radius(p)
        qs = (np.arange(n) + 0.5) / n
        xs = np.empty(n)
        from scipy.optimize import brentq
        for i, q in enumerate(qs):
            xs[i] = brentq(lambda x: mu_p_cdf(p, 0.0, x) - q, -r, r, xtol=1e-13)
        spec = eigenvalues(np.diag(xs))
        assert esd_w1(spec, p) <= 5e-3

    def test_translation_invariance(self):
        m = sample_bhgoe(40, 3, None, seed=6)
        spec0 = eigenvalues(m)
        u = 0.9
        spec_shift = eigenvalues(m.data + u * np.eye(m.n))
        assert esd_w1(spec_shift, 3, u) == pytest.approx(esd_w1(spec0, 3, 0.0), abs=1e-10)

    def test_against_riemann_oracle(self):
        # independent check: |F_emp - F| integrated on a dense grid
        m = sample_bhgoe(50, 3, None, seed=7)
        spec = eigenvalues(m)
        lam = spec.eigenvalues
        grid = np.linspace(lam[0] - 0.2, lam[-1] + 0.2, 200001)
        femp = np.searchsorted(lam, grid, side="right") / len(lam)
        fmu = np.array([mu_p_cdf(3, 0.0, x) for x in grid])
        riemann = np.trapezoid(np.abs(femp - fmu), grid)
        assert abs(esd_w1(spec, 3) - riemann) <= 1e-4

    def test_support_fraction(self):
        spec = eigenvalues(sample_bhgoe(400, 3, None, seed=8))
        edge = 2 * math.sqrt(2.0 / 3.0) + 0.1
        outside = np.mean(np.abs(spec.eigenvalues) > edge)
        assert outside <= 1e-3


class TestStieltjes:
    def test_mde_residual_on_grid(self):
        c = 2.0 / 3.0
        for e in np.linspace(-3, 3, 25):
            for eta in (0.05, 0.3, 1.0):
                z = complex(e, eta)
                m = stieltjes_mp(3, z)
                assert abs(1 + (z + c * m) * m) <= 1e-12
                assert m.imag > 0

    def test_empirical_close_to_limit(self):
        spec = eigenvalues(sample_bhgoe(400, 3, None, seed=9))
        z = complex(0.7, 0.1)
        assert abs(stieltjes_empirical(spec, z) - stieltjes_mp(3, z)) <= 0.02

    def test_rejects_lower_half_plane(self):
        with pytest.raises(ValueError):
            stieltjes_mp(3, complex(0.0, -0.1))
        spec = eigenvalues(np.zeros((2, 2)))
        with pytest.raises(ValueError):
            stieltjes_empirical(spec, complex(0.0, 0.0))


class TestSpectralGap:
    def test_beyond_op_norm(self):
        spec = eigenvalues(sample_bhgoe(20, 3, None, seed=10))
        assert spectral_gap_ok(spec, spec.op_norm + 1.0, 0.5)

    def test_at_eigenvalue(self):
        spec = eigenvalues(sample_bhgoe(20, 3, None, seed=11))
        u = float(spec.eigenvalues[7])
        assert not spectral_gap_ok(spec, u, 1e-8)

    def test_wegner_instance(self):
        # shifted spectra avoid a stretched-exponentially small window
        u = solve_e0(3) + 0.1
        hits = 0
        for i in range(100):
            spec = eigenvalues(sample_bhgoe(200, 3, None, seed=12, trial=i))
            gap = math.exp(-spec.n ** 0.3)
            hits += spectral_gap_ok(spec, u, gap)
        assert hits == 100


class TestLogAbsDet:
    def test_zero_matrix(self):
        spec = eigenvalues(np.zeros((3, 3)))
        assert log_abs_det(spec, 2.0) == pytest.approx(3 * math.log(2.0))

    def test_against_lu_determinant(self):
        for i in range(10):
            m = sample_bhgoe(5, 2, 0.4, seed=13, trial=i).data[:5, :5]
            m = (m + m.T) / 2 + 0.3 * np.eye(5)
            spec = eigenvalues(m)
            ratio = math.exp(log_abs_det(spec, 0.0)) / abs(np.linalg.det(m))
            assert abs(ratio - 1.0) <= 1e-8

    def test_singular_sentinel(self):
        spec = eigenvalues(np.zeros((2, 2)))
        assert log_abs_det(spec, 0.0) == -math.inf

    def test_per_coordinate_limit(self):
        spec = eigenvalues(sample_bhgoe(400, 3, None, seed=14))
        rate = log_abs_det(spec, 3.0) / spec.n
        target = math.log(math.sqrt(2.0 / 3.0)) + omega(3.0 * math.sqrt(1.5))
        assert abs(rate - target) <= 0.02


class TestOpNormEnvelope:
    @pytest.mark.parametrize("d,p", [(200, 3), (100, 8)])
    def test_all_draws_inside(self, d, p):
        bound = 2 * math.sqrt((p - 1.0) / p) + 0.15
        for i in range(100):
            spec = eigenvalues(sample_bhgoe(d, p, None, seed=15, trial=i))
            assert spec.op_norm <= bound

    def test_esd_w1_decreasing_in_d(self):
        medians = []
        for d in (50, 100, 200, 400):
            vals = [esd_w1(eigenvalues(sample_bhgoe(d, 3, None, seed=16, trial=i)), 3)
                    for i in range(20)]
            medians.append(np.median(vals))
        assert medians[0] > medians[1] > medians[2] > medians[3]
