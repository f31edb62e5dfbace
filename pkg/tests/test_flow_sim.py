import math

import numpy as np
import pytest

from hypmix._general import ConfigError, DomainError, InsufficientSignalError
from hypmix.flow_sim import (
    CorrelationEstimate,
    DecayCurve,
    Observable,
    correlate,
    default_observables,
    fit_decay,
    flow_advance,
    flow_r_array,
    flow_rho_array,
    project_pi,
    project_pi_array,
    return_count,
    return_count_array,
    return_count_decay,
    roof_tail,
    time_grid,
    transport_check,
)
from hypmix.inducing import Ftilde_eval
from hypmix.map_family import modular_family
from hypmix.measure import DensitySpec, rng_stream, sample_nu_r
from hypmix.roof import induced_roof_array, r_eval, rho_eval
from hypmix.skew import FlowPoint, P_step, PlanePoint

FAMILY = modular_family()
# irrational, so no Fhat orbit point is a partition endpoint
SUITABLE_X = math.sqrt(0.4)


@pytest.fixture(name="spec", scope="module")
def fixture_spec():
    return DensitySpec(FAMILY)


def _flow_by_steps(point, total):
    n = 0
    while True:
        roof = rho_eval(FAMILY, point)
        if total < roof:
            return point, total, n
        total -= roof
        point = P_step(FAMILY, point)
        n += 1


class TestTimeGrid:
    def test_grid(self):
        assert time_grid(1.0, 0.25).tolist() == [0.0, 0.25, 0.5, 0.75, 1.0]
        assert time_grid(0.9, 0.3).size == 4
        assert time_grid(0.0, 1.0).tolist() == [0.0]

    def test_invalid(self):
        with pytest.raises(ConfigError, match="t_step"):
            time_grid(1.0, 0.0)
        with pytest.raises(ConfigError, match="t_max"):
            time_grid(-1.0, 0.5)


class TestSigmaRho:
    def test_right_run(self):
        start = FlowPoint(PlanePoint(3.5, 1.0), 0.0, "sigma_rho")
        end, steps = flow_advance(FAMILY, start, 0.6)
        assert steps == 1
        assert end.base == (2.5, 2.0)
        assert end.s == pytest.approx(0.6 - 0.5 * math.log(3.5 / 1.25))

    def test_zero_time(self):
        start = FlowPoint(PlanePoint(0.7, 1.0), 0.2, "sigma_rho")
        assert flow_advance(FAMILY, start, 0.0) == (start, 0)
        with pytest.raises(ConfigError, match="t should be"):
            flow_advance(FAMILY, start, -1.0)

    def test_matches_steps(self):
        for x, y, t in ((3.37, 1.0, 4.0), (0.41, 0.8, 3.0), (7.2, 0.3, 2.5)):
            start = FlowPoint(PlanePoint(x, y), 0.0, "sigma_rho")
            end, steps = flow_advance(FAMILY, start, t)
            point, height, n = _flow_by_steps(PlanePoint(x, y), t)
            assert steps == n
            assert end.base.x == pytest.approx(point.x, rel=1e-9)
            assert end.base.y == pytest.approx(point.y, rel=1e-9)
            assert end.s == pytest.approx(height, abs=1e-9)
            assert 0.0 <= end.s < rho_eval(FAMILY, end.base)

    def test_semigroup(self):
        start = FlowPoint(PlanePoint(0.63, 1.7), 0.1, "sigma_rho")
        middle, first = flow_advance(FAMILY, start, 1.0)
        end, second = flow_advance(FAMILY, middle, 1.5)
        direct, steps = flow_advance(FAMILY, start, 2.5)
        assert first + second == steps
        assert end.base.x == pytest.approx(direct.base.x, rel=1e-9)
        assert end.s == pytest.approx(direct.s, abs=1e-9)

    def test_array(self):
        rng = np.random.default_rng(21)
        x = rng.uniform(0.1, 5.0, 8)
        y = rng.uniform(0.1, 5.0, 8)
        fx, fy, fs, steps, valid = flow_rho_array(
            FAMILY, x, y, np.zeros(8), 3.0
        )
        for i in np.flatnonzero(valid):
            start = FlowPoint(PlanePoint(x[i], y[i]), 0.0, "sigma_rho")
            end, n = flow_advance(FAMILY, start, 3.0)
            assert steps[i] == n
            assert fx[i] == pytest.approx(end.base.x, rel=1e-9)
            assert fy[i] == pytest.approx(end.base.y, rel=1e-9)
            assert fs[i] == pytest.approx(end.s, abs=1e-9)


class TestSigmaR:
    def test_below_roof(self):
        start = FlowPoint(PlanePoint(SUITABLE_X, 1.0), 0.1, "sigma_r")
        end, steps = flow_advance(FAMILY, start, 0.05)
        assert steps == 0
        assert end.base == start.base
        assert end.s == pytest.approx(0.15)

    def test_returns(self):
        start = FlowPoint(PlanePoint(SUITABLE_X, 1.0), 0.1, "sigma_r")
        end, steps = flow_advance(FAMILY, start, 6.0)
        assert steps >= 1
        assert 0.5 < end.base.x < 1.0
        roof, _, _ = induced_roof_array(
            FAMILY, np.array([end.base.x]), np.array([end.base.y])
        )
        assert 0.0 <= end.s < roof[0]

    def test_above_roof(self):
        over = FlowPoint(PlanePoint(0.5, 1.0), 1.0, "sigma_rho")
        with pytest.raises(DomainError, match="should be <"):
            flow_advance(FAMILY, over, 0.5)
        tall = FlowPoint(PlanePoint(SUITABLE_X, 1.0), 50.0, "sigma_r")
        with pytest.raises(DomainError, match="the roof at"):
            flow_advance(FAMILY, tall, 0.0)
        with pytest.raises(DomainError, match="should be <"):
            project_pi(FAMILY, tall)

    def test_array(self):
        x = np.sqrt([0.3, 0.4, 0.65])
        y = np.array([0.5, 1.0, 2.0])
        s = np.array([0.1, 0.2, 0.3])
        fx, fy, fs, steps, valid = flow_r_array(FAMILY, x, y, s, 4.0)
        assert np.all(valid)
        for i in range(3):
            start = FlowPoint(PlanePoint(x[i], y[i]), s[i], "sigma_r")
            end, n = flow_advance(FAMILY, start, 4.0)
            assert steps[i] == n
            assert fx[i] == pytest.approx(end.base.x, rel=1e-12)
            assert fy[i] == pytest.approx(end.base.y, rel=1e-12)
            assert fs[i] == pytest.approx(end.s, abs=1e-12)


class TestProjection:
    def test_project(self):
        start = FlowPoint(PlanePoint(math.sqrt(0.5), 1.0), 0.25, "sigma_r")
        image = project_pi(FAMILY, start)
        assert image.space == "sigma_rho"
        assert image.base == start.base
        assert image.s == 0.25
        with pytest.raises(DomainError, match="sigma_r"):
            project_pi(FAMILY, image)

    def test_intertwines_flows(self):
        # Pi o P_t = phi_t o Pi with the birkhoff roof
        cases = ((SUITABLE_X, 1.0, 0.3, 2.0), (math.sqrt(0.5), 0.4, 0.1, 5.0))
        for x, y, s, t in cases:
            start = FlowPoint(PlanePoint(x, y), s, "sigma_r")
            left = project_pi(FAMILY, flow_advance(FAMILY, start, t)[0])
            right = flow_advance(FAMILY, project_pi(FAMILY, start), t)[0]
            assert left.base.x == pytest.approx(right.base.x, rel=1e-6)
            assert left.base.y == pytest.approx(right.base.y, rel=1e-6)
            assert left.s == pytest.approx(right.s, abs=1e-6)

    def test_array(self):
        x = np.sqrt([0.4, 0.5, 0.82])
        y = np.array([0.5, 1.0, 3.0])
        s = np.array([0.2, 1.5, 3.0])
        px, py, ps, valid = project_pi_array(FAMILY, x, y, s)
        assert np.all(valid)
        for i in range(3):
            image = project_pi(
                FAMILY, FlowPoint(PlanePoint(x[i], y[i]), s[i], "sigma_r")
            )
            assert px[i] == pytest.approx(image.base.x, rel=1e-9)
            assert py[i] == pytest.approx(image.base.y, rel=1e-9)
            assert ps[i] == pytest.approx(image.s, abs=1e-9)


class TestReturnCount:
    def test_first_returns(self):
        x = SUITABLE_X
        r1 = r_eval(FAMILY, x)
        r2 = r1 + r_eval(FAMILY, Ftilde_eval(FAMILY, x)[0])
        assert return_count(FAMILY, x, 0.0, r1 - 1e-6) == 0
        assert return_count(FAMILY, x, 0.0, r1 + 1e-6) == 1
        assert return_count(FAMILY, x, 0.0, r2 - 1e-6) == 1
        assert return_count(FAMILY, x, 0.0, r2 + 1e-6) == 2
        assert return_count(FAMILY, x, 0.5, r1 - 0.5 + 1e-6) == 1

    def test_array(self):
        x = np.sqrt([0.3, 0.4, 0.82])
        a = np.array([0.0, 0.3, 1.0])
        grid = time_grid(10.0, 0.5)
        counts = return_count_array(FAMILY, x, a, grid)
        assert counts.shape == (3, grid.size)
        assert np.all(np.diff(counts, axis=1) >= 0)
        for i in range(3):
            assert counts[i, -1] == return_count(
                FAMILY, float(x[i]), float(a[i]), 10.0
            )


class TestObservable:
    def test_values(self):
        center = FlowPoint(PlanePoint(0.7, 0.8), 0.25, "sigma_r")
        bump = Observable(center, (0.15, 0.6, 0.2))
        assert float(bump(0.7, 0.8, 0.25)) == 1.0
        assert float(bump(0.9, 0.8, 0.25)) == 0.0
        assert 0.0 < float(bump(0.75, 1.0, 0.3)) < 1.0
        assert bump.space == "sigma_r"
        assert bump.support() == pytest.approx(
            (0.55, 0.85, 0.2, 1.4, 0.05, 0.45)
        )

    def test_biweight(self):
        center = FlowPoint(PlanePoint(0.7, 0.8), 0.25, "sigma_r")
        bump = Observable(center, (0.1, 0.5, 0.2), "biweight", 2.0)
        assert float(bump(0.75, 0.8, 0.25)) == pytest.approx(2.0 * 0.75**2)
        bound = 2.0 * 8.0 / (3.0 * math.sqrt(3.0))
        assert bump.derivative_bounds() == pytest.approx(
            (bound / 0.1, bound / 0.5, bound / 0.2)
        )

    def test_constant(self):
        center = FlowPoint(PlanePoint(0.7, 0.8), 0.0, "sigma_r")
        one = Observable(center, (1.0, 1.0, 1.0), "constant")
        assert np.all(one(np.array([0.1, 5.0]), 1.0, 0.0) == 1.0)
        assert one.derivative_bounds() == (0.0, 0.0, 0.0)
        one.validate(FAMILY)

    def test_invalid(self):
        center = FlowPoint(PlanePoint(0.95, 1.0), 0.25, "sigma_rho")
        with pytest.raises(DomainError, match="avoid x = 1"):
            Observable(center, (0.1, 0.5, 0.2))
        low = FlowPoint(PlanePoint(0.7, 1.0), 0.1, "sigma_rho")
        with pytest.raises(DomainError, match="s > 0"):
            Observable(low, (0.1, 0.5, 0.2))
        with pytest.raises(ConfigError, match="profile"):
            Observable(low, (0.1, 0.5, 0.05), "box")
        with pytest.raises(ConfigError, match="rx"):
            Observable(low, (0.0, 0.5, 0.05))

    def test_validate(self):
        for space in ("sigma_r", "sigma_rho"):
            for observable in default_observables(space):
                observable.validate(FAMILY)
        tall = Observable(
            FlowPoint(PlanePoint(0.7, 0.8), 1.0, "sigma_rho"), (0.1, 0.1, 0.5)
        )
        with pytest.raises(DomainError, match="under the roof"):
            tall.validate(FAMILY)
        outside = Observable(
            FlowPoint(PlanePoint(0.4, 1.0), 0.2, "sigma_r"), (0.05, 0.5, 0.1)
        )
        with pytest.raises(DomainError, match="Delta"):
            outside.validate(FAMILY)
        with pytest.raises(ConfigError, match="space"):
            default_observables("sigma")


class TestFit:
    def test_exact(self):
        t = np.arange(10, dtype=float)
        exact = CorrelationEstimate(t, 0.5 * np.exp(-0.7 * t), np.zeros(10))
        delta, prefactor, r_squared = fit_decay(exact)
        assert delta == pytest.approx(0.7)
        assert prefactor == pytest.approx(0.5)
        assert r_squared == pytest.approx(1.0)
        assert exact.fit().delta_hat == pytest.approx(0.7)

    def test_noisy(self):
        rng = np.random.default_rng(2)
        t = np.arange(12, dtype=float)
        clean = 0.8 * np.exp(-0.4 * t)
        noisy = clean * (1.0 + 0.02 * rng.standard_normal(12))
        estimate = CorrelationEstimate(t, noisy, 0.01 * clean)
        delta, prefactor, r_squared = fit_decay(estimate)
        assert delta == pytest.approx(0.4, abs=0.02)
        assert prefactor == pytest.approx(0.8, rel=0.05)
        assert r_squared > 0.99

    def test_noise_floor(self):
        rng = np.random.default_rng(3)
        t = np.arange(30, dtype=float)
        values = 0.8 * np.exp(-0.4 * t) + 1e-3 * rng.standard_normal(30)
        estimate = CorrelationEstimate(t, values, np.full(30, 1e-3))
        delta, _, _ = fit_decay(estimate)
        assert delta == pytest.approx(0.4, abs=0.05)

    def test_short_signal(self):
        t = np.arange(6, dtype=float)
        estimate = CorrelationEstimate(
            t, [1.0, 0.5, 0.25, 1e-4, 0.1, 0.05], np.full(6, 0.01)
        )
        with pytest.raises(InsufficientSignalError, match="3 leading"):
            fit_decay(estimate)
        assert math.isnan(estimate.fit().delta_hat)

    def test_estimate(self):
        with pytest.raises(DomainError, match="same length"):
            CorrelationEstimate([0.0, 1.0], [1.0], [0.1, 0.1])
        estimate = CorrelationEstimate([0.0, 1.0], [1.0, 0.5], [0.1, 0.1])
        assert [row["t"] for row in estimate.records()] == [0.0, 1.0]
        assert set(estimate.summary()) == {
            "delta_hat",
            "prefactor",
            "r_squared",
            "rejected_samples",
        }

    def test_decay_curve(self):
        t = np.arange(6, dtype=float)
        values = 2.0 * np.exp(-0.3 * t)
        curve = DecayCurve(t, values, np.full(6, 0.01), np.ones(6, bool))
        assert curve.rate == pytest.approx(0.3)
        assert curve.prefactor == pytest.approx(2.0)
        assert curve.fit_window == (0.0, 5.0)
        assert len(curve.records()) == 6
        with pytest.raises(InsufficientSignalError):
            DecayCurve(t, values, np.full(6, 0.01), t < 2)


class TestCorrelate:
    @pytest.fixture(name="pair", scope="class")
    def fixture_pair(self):
        return default_observables("sigma_r")

    def test_small_run(self, spec, pair):
        u, v = pair
        estimate = correlate(spec, u, v, [0.0, 0.5, 1.0], 2000, 1, streams=4)
        assert estimate.c_hat.shape == (3,)
        assert np.all(np.isfinite(estimate.c_hat))
        assert np.all(estimate.stderr >= 0)
        assert np.all(estimate.n_effective <= 2000)
        assert estimate.streams == 4
        again = correlate(spec, u, v, [0.0, 0.5, 1.0], 2000, 1, streams=4)
        assert np.array_equal(estimate.c_hat, again.c_hat)

    def test_long_run(self, spec, pair):
        _, v = pair
        t_grid = [0.0, 2.0, 5.0, 10.0]
        estimate = correlate(spec, v, v, t_grid, 40_000, 5, streams=8)
        assert np.all(np.isfinite(estimate.c_hat))
        assert estimate.rejected < 40

    def test_variance_at_zero(self, spec, pair):
        u, _ = pair
        estimate = correlate(spec, u, u, [0.0, 1.0, 2.0], 8000, 5, streams=4)
        variance = estimate.c_hat[0]
        assert variance > 0.0
        slack = 3.0 * estimate.stderr
        assert np.all(np.abs(estimate.c_hat[1:]) <= variance + slack[1:])

    def test_stderr_scaling(self, spec, pair):
        u, _ = pair
        small = correlate(spec, u, u, [0.0], 16_000, 6, streams=32)
        large = correlate(spec, u, u, [0.0], 64_000, 6, streams=32)
        # four times the samples halve the standard error
        ratio = small.stderr[0] / large.stderr[0]
        assert 1.2 < ratio < 3.3

    def test_stationarity(self, spec, pair):
        u, _ = pair
        sample = sample_nu_r(spec, rng_stream(7, 0), 20_000)
        means = []
        for t in (0.0, 1.5, 4.0):
            fx, fy, fs, _, valid = flow_r_array(
                FAMILY, sample.x, sample.y, sample.s, t
            )
            values = np.asarray(u(fx[valid], fy[valid], fs[valid]))
            se = np.std(values, ddof=1) / math.sqrt(values.size)
            means.append((np.mean(values), se))
        base, base_se = means[0]
        assert base > 0.0
        for mean, se in means[1:]:
            assert abs(mean - base) <= 3.0 * math.hypot(base_se, se)

    def test_threads_agree(self, spec, pair):
        u, v = pair
        single = correlate(spec, u, v, [0.0, 1.0], 400, 2, streams=4)
        double = correlate(
            spec, u, v, [0.0, 1.0], 400, 2, streams=4, threads=2
        )
        assert np.array_equal(single.c_hat, double.c_hat)

    def test_constant_is_uncorrelated(self, spec, pair):
        _, v = pair
        one = Observable(
            FlowPoint(PlanePoint(0.7, 0.8), 0.0, "sigma_r"),
            (1.0, 1.0, 1.0),
            "constant",
        )
        estimate = correlate(spec, one, v, [0.0, 0.5], 400, 3, streams=2)
        assert np.allclose(estimate.c_hat, 0.0, atol=1e-12)

    def test_birkhoff_mode(self, spec, pair):
        u, v = pair
        estimate = correlate(
            spec, u, v, [0.0, 0.5, 1.0], 400, 4, mode="birkhoff", streams=2
        )
        assert estimate.mode == "birkhoff"
        assert np.all(estimate.n_effective == 400)
        with pytest.raises(DomainError, match="multiples"):
            correlate(spec, u, v, [0.0, 0.3, 1.0], 400, mode="birkhoff")

    def test_invalid(self, spec, pair):
        u, v = pair
        with pytest.raises(ConfigError, match="mode"):
            correlate(spec, u, v, [0.0, 1.0], 400, mode="bogus")
        with pytest.raises(ConfigError, match="streams"):
            correlate(spec, u, v, [0.0, 1.0], 400, streams=1)
        with pytest.raises(DomainError, match="increasing"):
            correlate(spec, u, v, [1.0, 0.5], 400)
        rho_u, _ = default_observables("sigma_rho")
        with pytest.raises(DomainError, match="sigma_r"):
            correlate(spec, rho_u, v, [0.0, 1.0], 400)


class TestDecay:
    def test_return_count_decay(self, spec):
        curve = return_count_decay(spec, time_grid(8.0, 1.0), 500, seed=1)
        assert curve.values[0] == 1.0
        assert np.all(np.diff(curve.values) <= 0)
        assert curve.rate > 0
        with pytest.raises(ConfigError, match="k should be"):
            return_count_decay(spec, time_grid(8.0, 1.0), 10, k=1.0)

    def test_roof_tail(self, spec):
        curve = roof_tail(spec, time_grid(10.0, 0.5), 2000, seed=1)
        assert curve.values[0] == 1.0
        assert np.all(np.diff(curve.values) <= 0)
        assert curve.rate > 0


class TestTransport:
    def test_transport(self, spec):
        u, v = default_observables("sigma_rho")
        for t in (0.0, 2.0):
            report = transport_check(spec, u, v, t, 20_000)
            assert report.n_sigma == 3.0
            assert report.passed
            assert report.se_r > 0 and report.se_rho > 0
            assert abs(report.z) < 3.0
        assert report.record()["check"] == "transport"

    def test_no_signal(self, spec):
        u, v = default_observables("sigma_rho")
        with pytest.raises(InsufficientSignalError, match="vanishes"):
            transport_check(spec, u, v, 1.0, 20_000)

    def test_invalid(self, spec):
        u, v = default_observables("sigma_r")
        with pytest.raises(DomainError, match="sigma_rho"):
            transport_check(spec, u, v, 1.0, 100)
        far = Observable(
            FlowPoint(PlanePoint(0.7, 25.0), 0.2, "sigma_rho"),
            (0.1, 1.0, 0.1),
        )
        rho_u, _ = default_observables("sigma_rho")
        with pytest.raises(DomainError, match="sampling window"):
            transport_check(spec, rho_u, far, 1.0, 100)
