import math
import warnings

import numpy as np
import pytest
from scipy import special as sp
from scipy.linalg import expm

from uavcov import (
    ChannelParams,
    NetworkConfig,
    cond_cov_los,
    cond_cov_nlos,
    coverage_probability,
    gauss_legendre,
    log_laplace_los,
    log_laplace_nlos,
    nlos_interference_factor,
    quad_fixed,
    serving_dist_pdf,
    toeplitz_coeffs,
    toeplitz_exp_l1,
)
from uavcov.model import LinkClass
from uavcov.validate import finite_difference_gate

from conftest import mc_conditional_los, mc_conditional_nlos


def rayleigh_cfg(density=1e-6, altitude=50.0, los_radius=200.0) -> NetworkConfig:
    """m_los = 1 with identical LoS/NLoS channels: the blockage boundary is
    then invisible and everything collapses to the classical Rayleigh case."""
    ch = ChannelParams(alpha_los=4.0, alpha_nlos=4.0, a_los=10.0 ** -3.29,
                       a_nlos=10.0 ** -3.29, m_los=1)
    return NetworkConfig(density=density, altitude=altitude, los_radius=los_radius, channel=ch)


class TestInterferenceFactor:
    def test_zero_threshold_limit(self, desk_cfg):
        assert nlos_interference_factor(1e-12, desk_cfg.channel) == pytest.approx(1.0, abs=1e-9)

    def test_quartic_closed_form(self, desk_cfg):
        for tau in (0.1, 1.0, 10.0):
            expected = 1.0 + math.sqrt(tau) * math.atan(math.sqrt(tau))
            got = nlos_interference_factor(tau, desk_cfg.channel)
            assert got == pytest.approx(expected, rel=1e-12)

    def test_monotone_and_bounded_below(self, desk_cfg):
        taus = np.logspace(-3, 2, 40)
        vals = [nlos_interference_factor(t, desk_cfg.channel) for t in taus]
        assert all(v >= 1.0 for v in vals)
        assert all(b > a for a, b in zip(vals, vals[1:]))

    def test_requires_positive_tau(self, desk_cfg):
        with pytest.raises(ValueError):
            nlos_interference_factor(0.0, desk_cfg.channel)


class TestCondCovNlos:
    def test_no_interference_limits(self, desk_cfg):
        zero = desk_cfg.with_density(0.0)
        assert cond_cov_nlos(1.1 * zero.los_radius ** 2, 1.0, zero) == 1.0
        assert cond_cov_nlos(
            1.1 * desk_cfg.los_radius ** 2, 1e-12, desk_cfg
        ) == pytest.approx(1.0, abs=1e-8)

    def test_scalar_example(self):
        cfg = NetworkConfig(density=1e-5, altitude=50.0, los_radius=200.0)
        got = cond_cov_nlos(4.0e4, 1.0, cfg)
        expected = math.exp(math.pi * 1e-5 * 42500.0 * (-math.pi / 4.0))
        assert got == pytest.approx(expected, rel=1e-12)

    def test_against_conditional_simulation(self, desk_cfg):
        u = 1.6 * desk_cfg.los_radius ** 2
        analytic = cond_cov_nlos(u, 1.0, desk_cfg)
        mc, se = mc_conditional_nlos(u, 1.0, desk_cfg, trials=40_000, seed=101)
        assert abs(analytic - mc) <= 3.0 * max(se, 1e-4), (analytic, mc, se)

    def test_domain(self, desk_cfg):
        with pytest.raises(ValueError):
            cond_cov_nlos(0.5 * desk_cfg.los_radius ** 2, 1.0, desk_cfg)


class TestToeplitzCoeffs:
    def test_zero_threshold_limit(self, desk_cfg):
        u = 0.4 * desk_cfg.los_radius ** 2
        h2 = desk_cfg.altitude ** 2
        coeffs = toeplitz_coeffs(u, 1e-9, desk_cfg)
        assert coeffs.entries[0] == pytest.approx(-(u + h2), rel=1e-5)
        for c in coeffs.entries[1:]:
            assert abs(c) < 1e-4 * (u + h2)

    def test_rayleigh_single_entry(self):
        # equal channels, m_los = 1: c_0 must equal -(u + h^2) * N
        cfg = rayleigh_cfg()
        u = 0.5 * cfg.los_radius ** 2
        n0 = nlos_interference_factor(1.0, cfg.channel)
        coeffs = toeplitz_coeffs(u, 1.0, cfg)
        assert len(coeffs.entries) == 1
        assert coeffs.entries[0] == pytest.approx(-(u + cfg.altitude ** 2) * n0, rel=1e-12)

    def test_positive_higher_coefficients(self, desk_cfg):
        coeffs = toeplitz_coeffs(0.3 * desk_cfg.los_radius ** 2, 2.0, desk_cfg)
        assert all(c > 0 for c in coeffs.entries[1:])
        assert coeffs.entries[0] < 0

    def test_domain(self, desk_cfg):
        with pytest.raises(ValueError):
            toeplitz_coeffs(1.5 * desk_cfg.los_radius ** 2, 1.0, desk_cfg)
        with pytest.raises(ValueError):
            toeplitz_coeffs(100.0, -1.0, desk_cfg)

    def test_finite_difference_gate_sample(self):
        res = finite_difference_gate(n_scenarios=8, seed=42)
        assert res.passed, res.line()

    def test_mutation_hook_fails_gate(self):
        res = finite_difference_gate(n_scenarios=4, seed=42, corrupt_c1=True)
        assert not res.passed


class TestToeplitzExpL1:
    def test_scalar(self):
        assert toeplitz_exp_l1((-0.7,), 2.0) == pytest.approx(math.exp(-1.4), rel=1e-14)

    def test_two_by_two_nilpotent(self):
        assert toeplitz_exp_l1((0.0, -3.5), 1.0) == pytest.approx(1.0 + 3.5, rel=1e-14)

    def test_against_dense_expm(self):
        rng = np.random.default_rng(17)
        for _ in range(25):
            m = int(rng.integers(2, 9))
            col = rng.normal(0.0, 1.5, m)
            scale = rng.uniform(0.2, 2.0)
            dense = np.zeros((m, m))
            for i in range(m):
                for j in range(i + 1):
                    dense[i, j] = col[i - j]
            oracle = float(np.abs(expm(scale * dense)).sum(axis=0).max())
            got = toeplitz_exp_l1(tuple(col), scale)
            assert got == pytest.approx(oracle, rel=1e-10)


class TestLogLaplace:
    def test_trivial_zeroes(self, desk_cfg):
        r2 = desk_cfg.los_radius ** 2
        assert log_laplace_los(0.0, 0.3 * r2, desk_cfg) == 0.0
        assert log_laplace_los(1e8, r2, desk_cfg) == 0.0
        assert log_laplace_nlos(0.0, desk_cfg) == 0.0
        zero = desk_cfg.with_density(0.0)
        assert log_laplace_nlos(1e8, zero) == 0.0

    def test_nonpositive(self, desk_cfg):
        r2 = desk_cfg.los_radius ** 2
        for s in (1e6, 1e8, 1e10):
            assert log_laplace_los(s, 0.2 * r2, desk_cfg) <= 0.0
            assert log_laplace_nlos(s, desk_cfg) <= 0.0

    def test_los_against_nested_quadrature(self, desk_cfg):
        # brute force: outer Gauss-Legendre in r, inner Gamma expectation with
        # the density written out (generalized Gauss-Laguerre after g = theta x)
        ch = desk_cfg.channel
        u = 0.25 * desk_cfg.los_radius ** 2
        s = 2.0e9
        h2 = desk_cfg.altitude ** 2
        theta = ch.a_los / ch.m_los
        nodes, weights = sp.roots_genlaguerre(96, ch.m_los - 1)
        norm = math.exp(sp.gammaln(ch.m_los))

        def one_minus_laplace(r):
            x = s * (r * r + h2) ** (-ch.alpha_los / 2.0)
            inner = np.array([np.dot(weights, np.exp(-xi * theta * nodes)) for xi in np.atleast_1d(x)])
            return (1.0 - inner / norm) * r

        oracle = -2.0 * math.pi * desk_cfg.density * quad_fixed(
            one_minus_laplace, math.sqrt(u), desk_cfg.los_radius, gauss_legendre(160)
        )
        assert log_laplace_los(s, u, desk_cfg) == pytest.approx(oracle, rel=1e-9)

    def test_nlos_against_nested_quadrature(self, desk_cfg):
        # outer integral mapped to (0, 1] by t = T/w (far tail handled exactly),
        # inner expectation with the explicit exponential density
        ch = desk_cfg.channel
        s = 2.0e9
        big_t = desk_cfg.los_radius ** 2 + desk_cfg.altitude ** 2
        theta = ch.a_nlos
        nodes, weights = sp.roots_genlaguerre(96, 0)

        def integrand(w):
            t = big_t / w
            x = s * t ** (-ch.alpha_nlos / 2.0)
            inner = np.array([np.dot(weights, np.exp(-xi * theta * nodes)) for xi in np.atleast_1d(x)])
            return (1.0 - inner) * big_t / (w * w)

        oracle = -math.pi * desk_cfg.density * quad_fixed(
            integrand, 1e-12, 1.0, gauss_legendre(240)
        )
        assert log_laplace_nlos(s, desk_cfg) == pytest.approx(oracle, rel=1e-6)

    def test_domain(self, desk_cfg):
        with pytest.raises(ValueError):
            log_laplace_los(1.0, 1.5 * desk_cfg.los_radius ** 2, desk_cfg)
        with pytest.raises(ValueError):
            log_laplace_los(-1.0, 100.0, desk_cfg)
        with pytest.raises(ValueError):
            log_laplace_nlos(-1.0, desk_cfg)


class TestCondCovLos:
    def test_no_interference(self, desk_cfg):
        zero = desk_cfg.with_density(0.0)
        assert cond_cov_los(0.5 * zero.los_radius ** 2, 1.0, zero) == 1.0

    def test_bounds_and_tau_monotonicity(self, desk_cfg):
        r2 = desk_cfg.los_radius ** 2
        for frac in (0.05, 0.35, 0.75, 0.999):
            prev = 1.0 + 1e-6
            for tau in np.logspace(-2, 2, 25):
                val = cond_cov_los(frac * r2, tau, desk_cfg)
                assert -1e-6 <= val <= 1.0 + 1e-6
                assert val <= prev + 1e-12
                prev = val

    def test_rayleigh_reduction(self):
        # equal channels + m_los = 1 collapse to the classical conditional law
        cfg = rayleigh_cfg()
        n0 = nlos_interference_factor(1.0, cfg.channel)
        for frac in (0.1, 0.5, 0.9):
            u = frac * cfg.los_radius ** 2
            expected = math.exp(-math.pi * cfg.density * (u + cfg.altitude ** 2) * (n0 - 1.0))
            assert cond_cov_los(u, 1.0, cfg) == pytest.approx(expected, rel=1e-12)

    def test_against_conditional_simulation(self, desk_cfg):
        u = 0.4 * desk_cfg.los_radius ** 2
        analytic = cond_cov_los(u, 1.0, desk_cfg)
        mc, se = mc_conditional_los(u, 1.0, desk_cfg, trials=40_000, seed=77)
        assert abs(analytic - mc) <= 3.0 * max(se, 1e-4), (analytic, mc, se)


class TestCoverageProbability:
    def test_zero_density(self, desk_cfg):
        res = coverage_probability(1.0, desk_cfg.with_density(0.0))
        assert (res.total, res.los_term, res.nlos_term) == (1.0, 0.0, 1.0)

    def test_no_ball(self, desk_cfg):
        cfg = NetworkConfig(density=desk_cfg.density, altitude=desk_cfg.altitude,
                            los_radius=0.0, channel=desk_cfg.channel)
        res = coverage_probability(1.0, cfg)
        n0 = nlos_interference_factor(1.0, cfg.channel)
        h2 = cfg.altitude ** 2
        assert res.los_term == 0.0
        assert res.total == pytest.approx(
            math.exp(math.pi * cfg.density * h2 * (1.0 - n0)) / n0, rel=1e-12
        )

    def test_monotone_in_tau(self, desk_cfg):
        taus = np.logspace(-1.5, 1.5, 15)
        vals = [coverage_probability(t, desk_cfg).total for t in taus]
        assert all(b <= a + 1e-12 for a, b in zip(vals, vals[1:]))
        assert all(-1e-6 <= v <= 1.0 + 1e-6 for v in vals)

    def test_refinement_error_small(self, desk_cfg):
        res = coverage_probability(1.0, desk_cfg, order=64)
        assert res.quadrature_order == 64
        assert res.refinement_error < 1e-9

    def test_decomposition_consistency(self, desk_cfg):
        # independent r-space quadrature of the two conditional branches
        # against the u-space pipeline
        tau = 2.0
        res = coverage_probability(tau, desk_cfg, order=96)
        lam = desk_cfg.density
        radius = desk_cfg.los_radius
        p_los = 1.0 - math.exp(-math.pi * lam * radius ** 2)
        rule = gauss_legendre(192)
        los_branch = p_los * quad_fixed(
            lambda r: np.array([
                cond_cov_los(ri * ri, tau, desk_cfg)
                * serving_dist_pdf(LinkClass.LOS, ri, desk_cfg)
                for ri in np.atleast_1d(r)
            ]),
            0.0, radius, rule,
        )
        r_hi = math.sqrt(radius ** 2 + 42.0 / (math.pi * lam))
        nlos_branch = (1.0 - p_los) * quad_fixed(
            lambda r: np.array([
                cond_cov_nlos(ri * ri, tau, desk_cfg)
                * serving_dist_pdf(LinkClass.NLOS, ri, desk_cfg)
                for ri in np.atleast_1d(r)
            ]),
            radius, r_hi, rule,
        )
        assert los_branch == pytest.approx(res.los_term, rel=1e-8)
        assert nlos_branch == pytest.approx(res.nlos_term, rel=1e-8)
        assert los_branch + nlos_branch == pytest.approx(res.total, rel=1e-8)

    def test_pole_perturbation_warns(self):
        ch = ChannelParams(alpha_los=2.0, alpha_nlos=4.0)  # 2/alpha_los on a pole
        cfg = NetworkConfig(density=1e-6, altitude=50.0, los_radius=200.0, channel=ch)
        with pytest.warns(RuntimeWarning):
            res = coverage_probability(1.0, cfg)
        assert 0.0 <= res.total <= 1.0

    def test_requires_positive_tau(self, desk_cfg):
        with pytest.raises(ValueError):
            coverage_probability(-2.0, desk_cfg)
