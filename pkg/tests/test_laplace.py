import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose
from scipy import integrate, special

from ultraslow import laplace, weight


def uniform_cut(r):
    """Closed-form symbol of mu = 1 on the negative axis."""
    L = np.log(r)
    d = L**2 + np.pi**2
    return -(r + 1.0) * L / d, (r + 1.0) * np.pi / d


class TestSymbol:
    def test_uniform_on_cut(self, uniform):
        r = np.geomspace(1e-8, 1e8, 41)
        c, n = laplace.symbol_on_cut(uniform, r)
        c_ref, n_ref = uniform_cut(r)
        assert_allclose(c, c_ref, rtol=1e-12, atol=1e-15)
        assert_allclose(n, n_ref, rtol=1e-12)

    def test_positive_axis(self, uniform):
        r = np.array([0.5, 2.0, 10.0])
        val = laplace.phi(uniform, r)
        assert_allclose(val.re, (r - 1) / np.log(r), rtol=1e-13)
        assert_allclose(val.im, 0.0, atol=1e-15)

    def test_log_parametrization_far_tail(self, linear):
        # r**alpha underflows for every node but the scaled evaluation stays finite
        u = np.array([-1e6, -1e10, 1e2])
        c, n = laplace.symbol_on_cut_log(linear, u)
        assert np.all(np.isfinite(c)) and np.all(np.isfinite(n))

    def test_rejects_bad_arguments(self, uniform):
        with pytest.raises(ValueError):
            laplace.phi(uniform, [0.0])
        with pytest.raises(ValueError):
            laplace.phi(uniform, [1.0], angle=4.0)

    def test_resolvent_density_uniform(self, uniform):
        r = np.geomspace(1e-6, 1e6, 25)
        assert_allclose(laplace.resolvent_density(uniform, r), np.pi / (r + 1.0), rtol=1e-12)

    def test_G_at_one(self, uniform):
        assert_allclose(laplace.spectral_density_G(uniform, 1.0, 1.0), 2 * np.pi / (np.pi**2 + 4), rtol=1e-13)

    def test_G_positive(self, weights):
        r = np.geomspace(1e-10, 1e10, 50)
        for mu in weights.values():
            assert np.all(laplace.spectral_density_G(mu, 1.0, r) > 0)


class TestKernels:
    def test_k_uniform_at_one(self, uniform):
        ref = integrate.quad(special.rgamma, 0, 1, epsabs=0, epsrel=1e-13)[0]
        assert_allclose(laplace.k_kernel(uniform, 1.0), ref, rtol=1e-13)

    def test_k_integral_matches_quadrature(self, linear):
        # K(s) = int 2 alpha s**(1-alpha) / Gamma(2-alpha) d alpha, integrated by scipy
        for s in (0.01, 1.0, 50.0):
            ref = integrate.quad(lambda a: 2 * a * s ** (1 - a) * special.rgamma(2 - a), 0, 1, epsabs=0, epsrel=1e-13)[0]
            assert_allclose(laplace.k_integral(linear, s), ref, rtol=1e-12)

    def test_second_integral(self, uniform):
        ref = integrate.quad(lambda x: laplace.k_integral(uniform, x), 0, 2.0, epsabs=0, epsrel=1e-12)[0]
        assert_allclose(laplace.k_integral(uniform, 2.0, order=2), ref, rtol=1e-10)

    def test_k_integral_zero(self, uniform):
        assert laplace.k_integral(uniform, 0.0) == 0.0

    def test_g_uniform_closed_form(self, uniform):
        t = np.geomspace(1e-6, 100.0, 40)
        assert_allclose(laplace.g_kernel(uniform, t), np.exp(t) * special.exp1(t), rtol=1e-12)

    def test_g_rejects_zero(self, uniform):
        with pytest.raises(ValueError):
            laplace.g_kernel(uniform, [0.0])

    def test_kernel_pair_envelope(self, linear):
        pair = laplace.kernel_pair(linear)
        t = np.geomspace(1e-5, 1e5, 37)
        assert np.all(pair.g(t) <= pair.g_envelope_const * laplace.g_envelope(t, pair.gamma))


class TestBranchCutInversion:
    def test_inverse_square_root(self):
        # F(p) = p**-1/2  ->  f(t) = t**-1/2 / Gamma(1/2)
        t = np.array([1e-3, 0.1, 1.0, 30.0])
        f = laplace.branch_cut_ilt(lambda r: r**-0.5, t)
        assert_allclose(f, t**-0.5 / np.sqrt(np.pi), rtol=1e-10)

    def test_log_transform(self):
        # F(p) = log(1 + 1/p): Im on the cut is pi on (0, 1) -> f(t) = (1 - e^-t)/t
        t = np.array([0.5, 2.0, 10.0])
        f = laplace.branch_cut_ilt(lambda r: np.where(r < 1, np.pi, 0.0), t, rtol=1e-12)
        assert_allclose(f, -np.expm1(-t) / t, rtol=1e-8)

    def test_negative_time(self):
        with pytest.raises(ValueError):
            laplace.branch_cut_ilt(lambda r: r, [-1.0])


class TestSonine:
    @pytest.mark.parametrize("mu", [weight.constant(1.0), weight.supported(0.5), weight.power_near_zero(2.0, 1.0)])
    def test_identity(self, mu):
        t = np.geomspace(0.01, 10.0, 7)
        assert_allclose(laplace.sonine_convolution(mu, t), 1.0, atol=1e-5)


class TestLogLogTable:
    def test_reproduces_kernel(self, weights):
        s = np.geomspace(1e-9, 1e12, 2001)
        for mu in weights.values():
            table = laplace.LogLogTable(lambda x: laplace.k_integral(mu, x), 1e-9, 1e12)
            assert_allclose(table(s), laplace.k_integral(mu, s), rtol=1e-12)

    def test_out_of_range(self, uniform):
        table = laplace.LogLogTable(lambda x: laplace.k_kernel(uniform, x), 1.0, 2.0)
        with pytest.raises(ValueError):
            table(3.0)


@settings(max_examples=20, deadline=None)
@given(delta=st.floats(0.0, 0.9), lam=st.floats(1e-2, 1e2))
def test_G_bounded_by_symbol(delta, lam):
    # G = N / ((lam + C)^2 + N^2) <= 1 / N and <= N / lam^2 when C >= 0
    mu = weight.supported(delta)
    r = np.geomspace(1e-6, 1e6, 30)
    c, n = laplace.symbol_on_cut(mu, r)
    G = laplace.spectral_density_G(mu, lam, r)
    assert np.all(G > 0)
    assert np.all(G <= 1.0 / n * (1 + 1e-12))
