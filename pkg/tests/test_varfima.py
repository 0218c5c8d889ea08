import math

import numpy as np
import pytest
from scipy import special

from longmem import spectral, varfima
from longmem.varfima import VarfimaSpec


def psi_gamma(d, k):
    """psi_k = Gamma(k + d) / (Gamma(d) Gamma(k + 1)) through log-gamma with signs."""
    if d == 0:
        return (k == 0) * 1.0
    num, s1 = special.gammaln(k + d), np.sign(special.gamma(k + d)) if k + d < 1 else 1.0
    den, s2 = special.gammaln(d), np.sign(special.gamma(d))
    return s1 * s2 * np.exp(num - den - special.gammaln(k + 1))


class TestCoefficients:
    @pytest.mark.parametrize("d", [-0.4, -0.1, 0.1, 0.3, 0.45])
    def test_against_gamma_ratio(self, d):
        psi = varfima.frac_ma_coeffs(d, 10_000)
        for k in [0, 1, 2, 3, 10, 57, 500, 4321, 10_000]:
            assert abs(psi[k] - psi_gamma(d, k)) < 1e-10

    def test_first_terms(self):
        psi = varfima.frac_ma_coeffs(0.3, 3)
        np.testing.assert_allclose(psi, [1.0, 0.3, 0.3 * 1.3 / 2, 0.3 * 1.3 * 2.3 / 6], rtol=1e-15)

    def test_zero_d(self):
        psi = varfima.frac_ma_coeffs(0.0, 20)
        assert psi[0] == 1.0 and np.all(psi[1:] == 0)

    def test_variance_limit(self):
        # sum psi_k^2 -> Gamma(1 - 2d) / Gamma(1 - d)^2; the omitted tail is
        # asymptotically K**(2d - 1) / ((1 - 2d) Gamma(d)**2)
        d, K = 0.3, 200_000
        v = varfima.truncated_variance(d, K)
        tail = K ** (2 * d - 1) / ((1 - 2 * d) * math.gamma(d) ** 2)
        assert v < 1.3164560621300043
        assert abs(v + tail - 1.3164560621300043) < 1e-6

    def test_negative_K(self):
        with pytest.raises(ValueError):
            varfima.frac_ma_coeffs(0.2, -1)


class TestSpec:
    @pytest.mark.parametrize("kw", [
        dict(d=[0.5]), dict(d=[0.1, 0.2], innovation_corr=np.eye(3)),
        dict(d=[0.1, 0.2], innovation_corr=[[1, 0.5], [0.4, 1]]),
        dict(d=[0.1, 0.2], innovation_corr=[[2, 0], [0, 1]]),
        dict(d=[0.1, 0.2], innovation_corr=[[1, 1], [1, 1]]),
        dict(d=[0.1], n=1),
    ])
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            VarfimaSpec(**kw)

    def test_bivariate(self):
        s = VarfimaSpec.bivariate(0.1, 0.4, 0.8)
        assert s.q == 2 and s.innovation_corr[0, 1] == 0.8
        assert s.with_seed(9).seed == 9 and s.with_seed(9).n == s.n


class TestSimulate:
    def test_fft_matches_direct(self):
        spec = VarfimaSpec.bivariate(0.35, -0.2, 0.5, truncation=3000, seed=4, n=300)
        a = varfima.simulate(spec, "fft").values
        b = varfima.simulate(spec, "direct").values
        assert np.max(np.abs(a - b)) < 1e-10

    def test_deterministic_and_seed_sensitive(self):
        spec = VarfimaSpec.bivariate(0.2, 0.3, 0.0, truncation=1000, seed=5, n=200)
        a = varfima.simulate(spec).values
        assert np.array_equal(a, varfima.simulate(spec).values)
        assert not np.allclose(a, varfima.simulate(spec.with_seed(6)).values)
        assert a.shape == (200, 2)

    def test_zero_d_is_innovations(self):
        spec = VarfimaSpec([0.0, 0.0], truncation=50, seed=8, n=100)
        eps = varfima.gaussian_stream(8, 150, np.eye(2))
        assert np.array_equal(varfima.simulate(spec).values, eps[50:])

    def test_unknown_method(self):
        with pytest.raises(ValueError):
            varfima.simulate(VarfimaSpec([0.1], truncation=5, n=10), "magic")

    def test_equal_d_correlation(self):
        x = varfima.simulate(VarfimaSpec.bivariate(0.2, 0.2, 0.6, truncation=5000, seed=1, n=20_000)).values
        assert abs(np.corrcoef(x.T)[0, 1] - 0.6) < 0.05

    def test_lag_one_autocorrelation(self):
        d = 0.3
        r = []
        for seed in range(4):
            x = varfima.simulate(VarfimaSpec([d], truncation=10_000, seed=seed, n=5000)).values[:, 0]
            x = x - x.mean()
            r.append(np.dot(x[1:], x[:-1]) / np.dot(x, x))
        assert abs(np.mean(r) - d / (1 - d)) < 0.05

    def test_variance(self):
        d, K = 0.25, 2000
        v = [varfima.simulate(VarfimaSpec([d], truncation=K, seed=s, n=4000)).values.var()
             for s in range(10)]
        target = varfima.truncated_variance(d, K)
        assert abs(np.mean(v) / target - 1) < 0.05

    def test_periodogram_slope(self):
        d, n = 0.4, 8192
        x = varfima.simulate(VarfimaSpec([d], truncation=20_000, seed=3, n=n))
        m = int(n ** 0.6)
        est = spectral.periodogram(x, spectral.fourier_grid(n, m))
        logI = np.log(est.matrices[:, 0, 0].real)
        slope = np.polyfit(np.log(est.grid.lambdas), logI, 1)[0]
        assert abs(slope + 2 * d) < 0.15


class TestGaussianStream:
    def test_correlation(self):
        L = np.linalg.cholesky(np.array([[1.0, -0.7], [-0.7, 1.0]]))
        z = varfima.gaussian_stream(2, 50_000, L)
        C = np.cov(z.T)
        assert abs(C[0, 1] + 0.7) < 0.02 and np.all(np.abs(np.diag(C) - 1) < 0.03)

    def test_prefix_stable(self):
        a = varfima.gaussian_stream(7, 100, np.eye(3))
        b = varfima.gaussian_stream(7, 300, np.eye(3))
        assert np.array_equal(a, b[:100])

    def test_distinct_seeds(self):
        a = varfima.gaussian_stream(1, 1000, np.eye(1))
        b = varfima.gaussian_stream(2, 1000, np.eye(1))
        assert abs(np.corrcoef(a[:, 0], b[:, 0])[0, 1]) < 0.1
