import math

import numpy as np
import pytest

from sg2d.chaos import (
    ChaosField,
    RenormConstants,
    chaos_smooth_sup_norm,
    mean_one_estimate,
    mean_one_sweep,
    regularity_scan,
    sample_stationary_chaos,
    truncated_variance,
    two_point_estimate,
    wick_exponential,
    wick_factor,
)
from sg2d.fourier import CutoffProfile, FourierField, GridSpec, truncated_green
from sg2d.sampling import RngStream, sample_mu

# brute-force oracle values (independent pure-python lattice summation,
# frozen before the implementation was written)
SIGMA_8_BUMP = 0.277238976225689
SIGMA_8_POLY = 0.275497918083974
SIGMA_1 = 0.025330295910584


class TestRenormConstants:
    def test_sigma_single_mode(self):
        # only the zero mode survives at cutoff 1
        assert truncated_variance(1) == pytest.approx(SIGMA_1, abs=1e-14)
        assert truncated_variance(1) == pytest.approx(1.0 / (4 * math.pi**2), rel=1e-12)

    def test_sigma_frozen_regression(self):
        assert truncated_variance(8) == pytest.approx(SIGMA_8_BUMP, abs=1e-13)
        assert truncated_variance(8, CutoffProfile("poly")) == pytest.approx(
            SIGMA_8_POLY, abs=1e-13)

    def test_sigma_doubling_increment(self):
        # successive doublings approach log(2)/2pi
        target = math.log(2.0) / (2 * math.pi)
        d = truncated_variance(256) - truncated_variance(128)
        assert d == pytest.approx(target, rel=0.005)

    def test_sigma_monotone(self):
        vals = [truncated_variance(n) for n in (1, 2, 4, 8, 16, 32)]
        assert all(b > a for a, b in zip(vals, vals[1:]))

    def test_gamma_trivial_and_monotone(self):
        assert wick_factor(16, 0.0) == 1.0
        vals = [wick_factor(n, math.pi) for n in (4, 8, 16, 32)]
        assert all(b > a for a, b in zip(vals, vals[1:]))

    def test_gamma_power_law_growth(self):
        # per-mode variance sum grows like log N / 2pi, so gamma ~ N^{beta_sq/4pi}
        beta_sq = math.pi
        ns = [32, 64, 128, 256]
        logs = [math.log(wick_factor(n, beta_sq)) for n in ns]
        slope = np.polyfit(np.log(ns), logs, 1)[0]
        assert slope == pytest.approx(beta_sq / (4 * math.pi), rel=0.1)

    def test_constants_bundle(self):
        c = RenormConstants.compute(8, 2.0)
        assert c.gamma == pytest.approx(math.exp(c.sigma), rel=1e-14)
        g = GridSpec(32, 8, 2.0)
        assert RenormConstants.for_grid(g) == c


class TestWickExponential:
    def test_zero_field_gives_constant_gamma(self):
        g = GridSpec(32, 8, math.pi)
        c = RenormConstants.for_grid(g)
        theta = wick_exponential(FourierField.zeros(g), c)
        assert np.allclose(theta.values, c.gamma)

    def test_unit_modulus_scaled(self):
        g = GridSpec(32, 8, 2 * math.pi)
        c = RenormConstants.for_grid(g)
        theta = sample_stationary_chaos(g, c, RngStream(3).generator())
        assert np.abs(np.abs(theta.values) - c.gamma).max() < 1e-12 * c.gamma

    def test_rejects_unprojected_field(self):
        g = GridSpec(32, 8, math.pi)
        c = RenormConstants.for_grid(g)
        u = sample_mu(g, 1.0, RngStream(4).generator())  # full band
        with pytest.raises(ValueError, match="band-limited"):
            wick_exponential(u, c)
        wick_exponential(u.project(), c)  # projected input accepted

    def test_mean_one(self):
        g = GridSpec(32, 8, math.pi)
        c = RenormConstants.for_grid(g)
        mean, (se_re, se_im) = mean_one_estimate(g, c, 1500, RngStream(5))
        assert abs(mean.real - 1.0) <= 3 * se_re
        assert abs(mean.imag) <= 3 * se_im

    def test_mean_one_sweep_matches_single(self):
        sweep = mean_one_sweep(8, [math.pi, 3 * math.pi], 800, RngStream(6))
        for b, (mean, (se_re, se_im)) in sweep.items():
            assert abs(mean.real - 1.0) <= 3.5 * se_re, b
            assert abs(mean.imag) <= 3.5 * se_im, b

    def test_two_point_matches_exponentiated_green(self):
        g = GridSpec(64, 16, math.pi)
        c = RenormConstants.for_grid(g)
        seps = [(0.3, 0.0), (0.7, 0.2), (1.5, 0.0)]
        rows = two_point_estimate(g, c, seps, 1200, RngStream(7))
        m = g.m_points
        step = 2 * math.pi / m
        for (dist, est, (se_re, _)), sep in zip(rows, seps):
            snapped = (round(sep[0] / step) * step, round(sep[1] / step) * step)
            ref = math.exp(g.beta_sq * truncated_green(snapped, 16))
            assert abs(est.real - ref) <= 3.5 * se_re

    def test_two_point_power_law_envelope(self):
        # log two-point vs log(|r| + 1/N) has slope near -beta_sq/2pi
        g = GridSpec(64, 16, math.pi)
        c = RenormConstants.for_grid(g)
        rs = np.linspace(0.25, 1.2, 5)
        rows = two_point_estimate(g, c, [(r, 0.0) for r in rs], 1200, RngStream(8))
        x = np.log([d + 1 / 16 for d, _, _ in rows])
        y = np.log([est.real for _, est, _ in rows])
        slope = np.polyfit(x, y, 1)[0]
        assert slope == pytest.approx(-g.beta_sq / (2 * math.pi), rel=0.25)


class TestRegularityScan:
    def test_degenerate_zero_coupling_exponent(self):
        # beta_sq -> 0: the field is identically 1, every smoothed sup norm is 1
        g = GridSpec(32, 8, 1e-12)
        c = RenormConstants.for_grid(g)
        theta = sample_stationary_chaos(g, c, RngStream(9).generator())
        for alpha in (0.1, 0.5):
            assert chaos_smooth_sup_norm(theta, alpha) == pytest.approx(1.0, abs=1e-5)

    def test_scan_shapes_and_increment_contrast(self):
        rows, incs = regularity_scan(math.pi, [0.1, 0.5], [8, 16, 32], 40, RngStream(10))
        assert len(rows) == 6 and len(incs) == 4
        # increments shrink with N above the threshold, not below
        inc_high = [r for r in incs if r[0] == 0.5]
        inc_low = [r for r in incs if r[0] == 0.1]
        assert inc_high[1][2] < inc_high[0][2]
        assert inc_low[1][2] > 0.8 * inc_low[0][2]
