import math

import numpy as np
import pytest
from scipy import integrate

from hypmix._general import ConfigError, DomainError, RejectionBudgetError
from hypmix.map_family import MapFamily, modular_family
from hypmix.measure import (
    DensitySpec,
    SamplingWindow,
    conditional_y,
    density_m,
    invariance_mc,
    m_rho_normalizer,
    marginal,
    marginal_quadrature,
    mu_hat_chi2,
    nu_invariance_chi2,
    omitted_mass,
    preimage_rects,
    rect_mass,
    rho_marginal,
    rng_stream,
    sample_m,
    sample_m_rho,
    sample_m_rho_array,
    sample_nu,
    sample_nu_r,
    strip_mass,
    strip_quadrature,
    transfer_residual,
)
from hypmix.roof import rho_eval
from hypmix.skew import PlanePoint


@pytest.fixture(name="spec", scope="module")
def fixture_spec():
    return DensitySpec(modular_family())


class TestDensity:
    def test_density(self, spec):
        assert density_m(spec, (1, 1)) == 0.25
        assert density_m(spec, PlanePoint(0.5, 1.5)) == 0.25
        assert marginal(spec, 4.0) == 0.25
        assert marginal_quadrature(spec, 2.0) == pytest.approx(0.5, rel=1e-9)

    def test_strip(self, spec):
        assert strip_mass(0.5, 1.0) == pytest.approx(math.log(2))
        assert strip_quadrature(spec, 0.5, 1.0) == pytest.approx(
            math.log(2), abs=1e-8
        )
        with pytest.raises(DomainError):
            strip_mass(1.0, 0.5)

    def test_normalizers(self, spec):
        assert spec.delta == (0.5, 1.0)
        assert spec.nu_normalizer == pytest.approx(math.log(2))
        assert spec.mu_hat_normalizer == spec.nu_normalizer

    def test_rect_mass(self):
        assert rect_mass(((0.5, 1.0), (0.0, math.inf))) == pytest.approx(
            math.log(2)
        )
        assert rect_mass(((1.0, 2.0), (1.0, 2.0))) == pytest.approx(
            math.log(1.5) - math.log(4 / 3)
        )
        with pytest.raises(DomainError):
            rect_mass(((1.0, 0.5), (0.0, 1.0)))
        with pytest.raises(DomainError):
            rect_mass(((0.0, 1.0), (0.0, 1.0)))

    def test_rho_closed_form(self, spec):
        for x, y in ((0.3, 0.7), (0.9, 5.0), (1.5, 2.0), (7.0, 0.1)):
            assert float(spec.rho(x, y)) == pytest.approx(
                rho_eval(spec.family, PlanePoint(x, y)), rel=1e-12
            )
        assert spec.rho_max() >= float(spec.rho(0.5, 1.0))

    def test_rho_marginal(self, spec):
        for x in (0.4, 3.0):
            value, _ = integrate.quad(
                lambda y, x=x: float(spec.rho(x, y)) / (x + y) ** 2,
                0.0,
                math.inf,
            )
            assert float(rho_marginal(spec, x)) == pytest.approx(
                value, rel=1e-6
            )

    def test_m_rho_normalizer(self, spec):
        result = m_rho_normalizer(spec)
        assert 0.0 < result.window < result.full
        assert result.sensitivity == pytest.approx(result.full - result.window)

    def test_non_modular(self):
        with pytest.raises(ConfigError, match="family should be modular"):
            DensitySpec(MapFamily(f0_coeffs=(2, 0, -1, 1), name="mobius"))


class TestWindow:
    def test_window(self):
        window = SamplingWindow()
        left, right = window.x_pieces()
        assert left == pytest.approx((0.05, 0.999))
        assert right == pytest.approx((1.001, 20.0))
        assert window.x_mass() == pytest.approx(
            math.log(0.999 / 0.05) + math.log(20.0 / 1.001)
        )
        assert 0.0 < window.mass() < window.x_mass()
        assert len(window.corners()) == 8

    def test_invalid(self):
        with pytest.raises(ConfigError, match="x_window"):
            SamplingWindow(x_window=(0.05, 0.9))
        with pytest.raises(ConfigError, match="y_window"):
            SamplingWindow(y_window=(2.0, 1.0))


class TestTransfer:
    def test_residual(self, spec):
        result = transfer_residual(spec, 0.7, 50, 50)
        assert result.passed
        assert result.residual <= result.tail_bound + result.rounding
        assert result.residual == pytest.approx(result.tail_bound, rel=1e-9)
        assert result.partial < 1 / 0.7
        assert result.rate == pytest.approx(0.5, abs=0.05)
        finer = transfer_residual(spec, 0.7, 200, 200)
        assert finer.residual < result.residual
        assert finer.record()["pass"] is True

    def test_omitted_mass(self):
        assert omitted_mass(0.5, 1, 1) == pytest.approx(2.0)
        assert omitted_mass(0.7, 400, 400) < omitted_mass(0.7, 200, 200)

    def test_wrong_density(self, spec):
        result = transfer_residual(
            spec, 0.55, density=lambda y: 1 / np.asarray(y) ** 2
        )
        assert not result.passed
        assert result.residual > result.tail_bound
        assert result.rate > 0.9
        assert result.record()["pass"] is False

    def test_coarsest(self, spec):
        result = transfer_residual(spec, 0.7, 2, 1)
        assert result.coarse_residual == 0.0
        assert result.rate == 0.0
        assert result.passed

    def test_outside_delta(self, spec):
        with pytest.raises(DomainError):
            transfer_residual(spec, 0.3)
        with pytest.raises(ConfigError):
            transfer_residual(spec, 0.7, 1, 5)


class TestInvariance:
    def test_preimage_mass(self, spec):
        for rect in (
            ((0.3, 0.6), (0.5, 2.0)),
            ((1.5, 3.0), (0.2, 1.0)),
            ((0.6, 0.9), (1.0, 4.0)),
        ):
            pieces = preimage_rects(spec, rect)
            total = math.fsum(rect_mass(piece) for piece in pieces)
            assert total == pytest.approx(rect_mass(rect), rel=1e-12)

    def test_preimage_pieces(self, spec):
        left, right = preimage_rects(spec, ((0.3, 0.6), (0.5, 2.0)))
        assert left[1] == (1.0, math.inf)
        assert left[0][1] == pytest.approx(0.375)
        assert right[0] == pytest.approx((1.3, 1.6))
        assert right[1] == (0.0, 1.0)

    def test_mc(self, spec):
        rects = (
            ((0.3, 0.6), (0.5, 2.0)),
            ((1.5, 3.0), (0.2, 1.0)),
            ((0.6, 0.9), (1.0, 4.0)),
        )
        for rect in rects:
            report = invariance_mc(spec, rect)
            assert report.n == 1_000_000
            assert report.n_sigma == 3.0
            assert report.passed, rect
            assert abs(report.m_rect - report.exact) < 3 * report.se_rect
        assert report.record()["check"] == "invariance"

    def test_mc_invalid(self, spec):
        with pytest.raises(DomainError):
            invariance_mc(spec, ((0.3, 0.6), (0.5, math.inf)))
        with pytest.raises(ConfigError):
            invariance_mc(spec, ((0.3, 0.6), (0.5, 2.0)), n=1)

    def test_chi2(self, spec):
        nu_report = nu_invariance_chi2(spec, n=100_000, seed=2)
        assert nu_report.cells == 8 * 6
        assert nu_report.n == 100_000
        assert nu_report.p_value > 1e-4
        hat_report = mu_hat_chi2(spec, n=100_000, seed=2)
        assert hat_report.cells == 20
        assert hat_report.p_value > 1e-4
        assert hat_report.record()["reference"] == 0.01


class TestSamplers:
    def test_streams(self):
        a = rng_stream(42, 7).random(5)
        assert np.array_equal(a, rng_stream(42, 7).random(5))
        assert not np.array_equal(a, rng_stream(42, 8).random(5))
        assert not np.array_equal(a, rng_stream(43, 7).random(5))

    def test_conditional_y(self):
        assert conditional_y(1.0, 0.5) == 1.0
        assert conditional_y(2.0, 0.75) == pytest.approx(6.0)

    def test_sample_m(self, spec):
        x, y = sample_m(spec, rng_stream(0, 10), 10_000)
        assert np.all((x > 0.05) & (x < 20.0))
        assert not np.any((x > 0.999) & (x < 1.001))
        assert np.all(y > 0)
        left = np.mean(x < 1)
        masses = spec.window.log_masses()
        assert left == pytest.approx(masses[0] / masses.sum(), abs=0.02)

    def test_sample_nu(self, spec):
        x, y = sample_nu(spec, rng_stream(0, 11), 20_000)
        assert np.all((x > 0.5) & (x < 1.0))
        # the conditional median of y given x is x
        assert np.mean(y < x) == pytest.approx(0.5, abs=0.015)

    def test_sample_m_rho(self, spec):
        x, y, s = sample_m_rho_array(spec, rng_stream(0, 12), 2_000)
        assert x.size == y.size == s.size == 2_000
        assert np.all((y > 0.05) & (y < 20.0))
        assert np.all((s >= 0) & (s < spec.rho(x, y)))
        point = sample_m_rho(spec, rng_stream(0, 13))
        assert point.space == "sigma_rho"

    def test_sample_nu_r(self, spec):
        sample = sample_nu_r(spec, rng_stream(0, 14), 500)
        assert len(sample) == 500
        assert sample.kind == "birkhoff"
        assert np.all(sample.s < sample.roof)
        assert np.all((sample.x > 0.5) & (sample.x < 1.0))
        assert sample.proposals >= 500
        assert sample.points()[0].space == "sigma_r"
        other = sample_nu_r(spec, rng_stream(0, 14), 100, kind="r")
        assert other.kind == "r"

    def test_sample_nu_r_many_streams(self, spec):
        singular = 0
        for seed in range(20):
            sample = sample_nu_r(spec, rng_stream(seed, 100), 20_000)
            assert len(sample) == 20_000
            assert np.all(np.isfinite(sample.roof))
            singular += sample.singular
        assert singular < 1e-3 * 20 * 20_000

    def test_rejection_budget(self):
        spec = DensitySpec(
            modular_family(),
            SamplingWindow(y_window=(0.05, 0.0500001)),
            rejection_cap=1,
        )
        with pytest.raises(RejectionBudgetError):
            sample_m_rho_array(spec, rng_stream(0, 15), 10)
