import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import i0e, i1e

from tikmix.dirstat import (TikhonovComponent, WrappedGaussianStep, bessel_ratio, cmvm,
                            convolve_wrapped_gaussian, inverse_bessel_ratio, log_bessel_i0,
                            tikhonov_kl, tikhonov_product, wrapped_gaussian_pdf)

from .conftest import random_z
from .oracles import (bessel_ratio_mp, convolve_density, grid, i0_power_series, kl_quadrature,
                      log_i0_mp, mixture_logpdf, quad, tikhonov_logpdf, wrapped_normal_direct)

finite_z = st.builds(lambda k, a: k * np.exp(1j * a),
                     st.floats(0, 200), st.floats(-math.pi, math.pi))


class TestLogBesselI0:
    def test_zero(self):
        assert log_bessel_i0(0.0) == 0.0

    def test_one_against_power_series(self):
        expected = math.log(float(i0_power_series(1.0)))
        assert expected == pytest.approx(0.235914, abs=1e-6)
        assert log_bessel_i0(1.0) == pytest.approx(expected, rel=1e-12)

    def test_large_argument_against_mpmath(self):
        assert log_bessel_i0(500.0) == pytest.approx(log_i0_mp(500.0), rel=1e-10)

    def test_relative_error_over_range(self):
        xs = np.concatenate([np.logspace(-10, 6, 400), np.linspace(0.5, 60, 120)])
        got = log_bessel_i0(xs)
        want = np.array([log_i0_mp(x) for x in xs])
        assert np.all(np.abs(got - want) <= 1e-10 * np.abs(want))

    def test_monotone_and_finite(self):
        xs = np.linspace(0, 1e6, 200001)
        vals = log_bessel_i0(xs)
        assert np.all(np.isfinite(vals))
        assert np.all(np.diff(vals) >= 0)
        # dense check around the switch between series and asymptotic branches
        xs = np.linspace(14.9, 15.1, 20001)
        assert np.all(np.diff(log_bessel_i0(xs)) >= 0)

    @pytest.mark.parametrize("bad", [-1e-9, -3.0, math.nan, math.inf])
    def test_domain(self, bad):
        with pytest.raises(ValueError):
            log_bessel_i0(bad)


class TestBesselRatio:
    def test_zero(self):
        assert bessel_ratio(0.0) == 0.0

    def test_two_against_series(self):
        assert bessel_ratio(2.0) == pytest.approx(0.697774, abs=1e-6)
        assert bessel_ratio(2.0) == pytest.approx(bessel_ratio_mp(2.0), rel=1e-13)

    def test_large_kappa_asymptote(self):
        assert abs(bessel_ratio(1000.0) - (1 - 1 / 2000.0)) <= 1e-6

    def test_against_mpmath(self):
        xs = np.concatenate([np.logspace(-8, 5, 300)])
        got = bessel_ratio(xs)
        want = np.array([bessel_ratio_mp(x) for x in xs])
        np.testing.assert_allclose(got, want, rtol=1e-12)

    def test_strictly_increasing_below_one(self):
        vals = bessel_ratio(np.linspace(0, 2000, 100001))
        assert np.all(np.diff(vals) > 0)
        assert np.all(vals < 1)

    def test_domain(self):
        with pytest.raises(ValueError):
            bessel_ratio(-0.5)


def _bisection_inverse(rho):
    lo, hi = 0.0, 1e7
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if i1e(mid) / i0e(mid) < rho:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


class TestInverseBesselRatio:
    def test_zero(self):
        assert inverse_bessel_ratio(0.0) == 0.0

    def test_round_trip_five(self):
        assert inverse_bessel_ratio(bessel_ratio(5.0)) == pytest.approx(5.0, abs=1e-6)

    def test_matches_bisection(self):
        assert inverse_bessel_ratio(0.95) == pytest.approx(_bisection_inverse(0.95), abs=1e-6)

    def test_round_trip_over_range(self):
        kappas = np.concatenate([[0.0], np.logspace(-6, 4, 600)])
        back = np.array([inverse_bessel_ratio(bessel_ratio(k)) for k in kappas])
        assert np.max(np.abs(back - kappas)) <= 1e-6

    def test_forward_residual(self):
        rhos = np.linspace(0, 1 - 1e-9, 3001)
        resid = [abs(bessel_ratio(inverse_bessel_ratio(r)) - r) for r in rhos]
        assert max(resid) <= 1e-9

    def test_continuity(self):
        rhos = np.linspace(0.1, 0.99, 5000)
        k = np.array([inverse_bessel_ratio(r) for r in rhos])
        assert np.all(np.diff(k) > 0)

    @pytest.mark.parametrize("bad", [-0.1, 1.0, 1.5])
    def test_domain(self, bad):
        with pytest.raises(ValueError):
            inverse_bessel_ratio(bad)


class TestProduct:
    def test_uniform_factor(self):
        b = TikhonovComponent(3 * np.exp(0.5j))
        c, s = tikhonov_product(TikhonovComponent(0), b)
        assert c.z == b.z
        assert s == pytest.approx(-math.log(2 * math.pi))

    def test_antipodal_cancellation(self):
        c, s = tikhonov_product(TikhonovComponent(5), TikhonovComponent(-5))
        assert c.z == 0
        assert s == pytest.approx(-2 * log_i0_mp(5.0) - math.log(2 * math.pi), rel=1e-12)

    def test_pointwise_identity(self, rng):
        theta = rng.uniform(0, 2 * np.pi, 100)
        for _ in range(20):
            a, b = (TikhonovComponent(z) for z in random_z(rng, 2, kmax=50))
            c, s = tikhonov_product(a, b)
            lhs = tikhonov_logpdf(a.z, theta) + tikhonov_logpdf(b.z, theta)
            rhs = s + tikhonov_logpdf(c.z, theta)
            np.testing.assert_allclose(np.exp(lhs - rhs), 1.0, rtol=1e-9)


class TestConvolve:
    def test_identity_at_zero_noise(self):
        c = TikhonovComponent(40 * np.exp(1j * np.pi / 3))
        assert convolve_wrapped_gaussian(c, WrappedGaussianStep(0.0)) == c

    def test_formula(self):
        out = convolve_wrapped_gaussian(TikhonovComponent(100), WrappedGaussianStep(0.1))
        assert abs(out.z) == pytest.approx(50.0)
        assert out.mean_direction == pytest.approx(0.0)

    @pytest.mark.parametrize("z,sd", [(20 * np.exp(1j), 0.1), (200 * np.exp(-2j), 0.15),
                                      (5 * np.exp(0.3j), 0.15), (200.0, 0.01), (1.0, 0.15)])
    def test_against_numeric_convolution(self, z, sd):
        theta = grid()
        dens = np.exp(tikhonov_logpdf(z, theta))
        numeric = convolve_density(dens, sd)
        approx = convolve_wrapped_gaussian(TikhonovComponent(z), WrappedGaussianStep(sd))
        assert kl_quadrature(np.log(numeric), tikhonov_logpdf(approx.z, theta)) <= 0.01

    def test_shrinks(self, rng):
        for z in random_z(rng, 50, kmax=300):
            out = convolve_wrapped_gaussian(TikhonovComponent(z), WrappedGaussianStep(rng.uniform(0.01, 0.5)))
            if abs(z) > 0:
                assert abs(out.z) < abs(z)
                assert np.angle(out.z) == pytest.approx(np.angle(z))

    def test_negative_step_rejected(self):
        with pytest.raises(ValueError):
            WrappedGaussianStep(-0.1)


class TestKL:
    def test_equal_is_zero(self, rng):
        for z in random_z(rng, 20):
            assert tikhonov_kl(TikhonovComponent(z), TikhonovComponent(z)) == 0.0

    def test_antipodal_against_quadrature(self):
        p, q = 10.0, 10 * np.exp(1j * np.pi)
        theta = grid()
        want = kl_quadrature(tikhonov_logpdf(p, theta), tikhonov_logpdf(q, theta))
        assert tikhonov_kl(TikhonovComponent(p), TikhonovComponent(q)) == pytest.approx(want, abs=1e-8)

    def test_uniform_p(self):
        assert tikhonov_kl(TikhonovComponent(0), TikhonovComponent(2)) == pytest.approx(log_i0_mp(2.0), rel=1e-12)

    def test_nonnegative_random_pairs(self, rng):
        zs = random_z(rng, (1000, 2), kmax=300)
        assert all(tikhonov_kl(TikhonovComponent(a), TikhonovComponent(b)) >= 0 for a, b in zs)

    def test_random_pairs_against_quadrature(self, rng):
        theta = grid()
        for a, b in random_z(rng, (100, 2), kmax=100):
            want = kl_quadrature(tikhonov_logpdf(a, theta), tikhonov_logpdf(b, theta))
            assert tikhonov_kl(TikhonovComponent(a), TikhonovComponent(b)) == pytest.approx(want, abs=1e-8)

    @settings(max_examples=200, deadline=None)
    @given(finite_z, finite_z)
    def test_zero_only_when_equal(self, a, b):
        d = tikhonov_kl(TikhonovComponent(a), TikhonovComponent(b))
        assert d >= 0
        if abs(a - b) > 1e-3:
            assert d > 0


class TestCMVM:
    def test_single_component_fixed_point(self, rng):
        for z in random_z(rng, 20, kmax=500):
            out = cmvm([1.0], [TikhonovComponent(z)])
            assert abs(out.z) == pytest.approx(abs(z), abs=1e-6)
            if abs(z) > 1e-6:
                assert np.angle(out.z) == pytest.approx(np.angle(z), abs=1e-6)

    def test_symmetric_pair(self):
        k, phi = 7.0, 0.8
        out = cmvm([0.5, 0.5], [TikhonovComponent(k * np.exp(1j * phi)), TikhonovComponent(k * np.exp(-1j * phi))])
        assert out.mean_direction == pytest.approx(0.0, abs=1e-12)

    def test_moment_against_quadrature(self):
        w = [0.7, 0.3]
        z = [8 * np.exp(0.2j), 3 * np.exp(2.0j)]
        out = cmvm(w, [TikhonovComponent(v) for v in z])
        theta = grid()
        mix = np.exp(mixture_logpdf(z, w, theta))
        want = quad(mix * np.exp(1j * theta))
        assert abs(out.first_moment() - want) <= 1e-8

    def test_moment_preserved_random(self, rng):
        theta = grid()
        for _ in range(50):
            n = rng.integers(1, 8)
            w = rng.dirichlet(np.ones(n))
            z = random_z(rng, n, kmax=200)
            out = cmvm(w, [TikhonovComponent(v) for v in z])
            analytic = sum(wi * TikhonovComponent(v).first_moment() for wi, v in zip(w, z))
            assert abs(out.first_moment() - analytic) <= 1e-8
            numeric = quad(np.exp(mixture_logpdf(z, w, theta)) * np.exp(1j * theta))
            assert abs(out.first_moment() - numeric) <= 1e-8

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            cmvm([], [])

    def test_unnormalized_rejected(self):
        with pytest.raises(ValueError):
            cmvm([0.5, 0.6], [TikhonovComponent(1), TikhonovComponent(2)])


class TestWrappedGaussian:
    def test_peak(self):
        assert wrapped_gaussian_pdf(0.0, 0.1) == pytest.approx(1 / (0.1 * math.sqrt(2 * math.pi)), rel=1e-14)

    @pytest.mark.parametrize("sigma", [0.01, 0.1, 1.0, 3.0, 20.0])
    def test_normalized(self, sigma):
        n = 1 << 16
        assert quad(wrapped_gaussian_pdf(grid(n), sigma)) == pytest.approx(1.0, abs=1e-9)

    def test_symmetric_and_periodic(self, rng):
        theta = rng.uniform(0, 2 * np.pi, 100)
        for sigma in (0.1, 1.0, 4.0):
            np.testing.assert_allclose(wrapped_gaussian_pdf(theta, sigma), wrapped_gaussian_pdf(2 * np.pi - theta, sigma),
                                       rtol=1e-12)
            np.testing.assert_allclose(wrapped_gaussian_pdf(theta, sigma), wrapped_gaussian_pdf(theta + 6 * np.pi, sigma),
                                       rtol=1e-12)

    def test_matches_direct_sum(self, rng):
        theta = rng.uniform(-np.pi, np.pi, 200)
        for sigma in (0.1, 1.0, 2.5):
            np.testing.assert_allclose(wrapped_gaussian_pdf(theta, sigma),
                                       wrapped_normal_direct(theta, sigma, wraps=20), rtol=1e-13)

    @pytest.mark.parametrize("bad", [0.0, -1.0])
    def test_domain(self, bad):
        with pytest.raises(ValueError):
            wrapped_gaussian_pdf(0.0, bad)


def test_returned_components_integrate_to_one(rng):
    theta = grid()
    out = []
    for a, b in random_z(rng, (30, 2), kmax=200):
        ca, cb = TikhonovComponent(a), TikhonovComponent(b)
        out.append(tikhonov_product(ca, cb)[0])
        out.append(convolve_wrapped_gaussian(ca, WrappedGaussianStep(0.1)))
        out.append(cmvm([0.4, 0.6], [ca, cb]))
    for c in out:
        assert quad(c.pdf(theta)) == pytest.approx(1.0, abs=1e-8)
