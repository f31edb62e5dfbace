from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hypmix._general import (
    BoundaryError,
    ConfigError,
    DomainError,
    SingularityError,
)
from hypmix.inducing import BranchIndex, QuadIndex, inverse_branch
from hypmix.map_family import modular_family
from hypmix.skew import (
    FlowPoint,
    P_step,
    Phat_step,
    PlanePoint,
    Ptilde_step,
    ghat_eval,
    ghat_image,
    gtilde_deriv,
    gtilde_eval,
    ptilde_array,
)

FAMILY = modular_family()
F = Fraction


class TestPoints:
    def test_plane_point(self):
        assert PlanePoint(0.5, 2.0).region == "left"
        assert PlanePoint(F(3, 2), 1).region == "right"
        assert PlanePoint(F(1, 2), 1) == (F(1, 2), 1)
        with pytest.raises(DomainError, match="should be positive"):
            PlanePoint(0, 1)
        with pytest.raises(DomainError):
            PlanePoint(0.5, -1.0)
        with pytest.raises(SingularityError):
            PlanePoint(1, 2)

    def test_flow_point(self):
        pt = FlowPoint(PlanePoint(0.5, 1.0), 0.25, "sigma_rho")
        assert pt.s == 0.25
        with pytest.raises(ConfigError, match="space should be"):
            FlowPoint(PlanePoint(0.5, 1.0), 0.25, "sigma")
        with pytest.raises(ConfigError, match="s should be"):
            FlowPoint(PlanePoint(0.5, 1.0), -0.1, "sigma_r")


class TestSkew:
    def test_P_step(self):
        assert P_step(FAMILY, PlanePoint(F(3, 2), F(2))) == (F(1, 2), F(3))
        assert P_step(FAMILY, PlanePoint(F(1, 3), F(1))) == (
            F(1, 2),
            F(1, 2),
        )
        image = P_step(FAMILY, PlanePoint(0.25, 1.0))
        assert (image.x, image.y) == pytest.approx((1 / 3, 0.5))

    def test_P_step_singular(self):
        with pytest.raises(SingularityError):
            P_step(FAMILY, PlanePoint(F(1, 2), F(1)))
        with pytest.raises(SingularityError):
            P_step(FAMILY, PlanePoint(F(2), F(1)))

    def test_Phat(self):
        image, idx = Phat_step(FAMILY, PlanePoint(F(11, 20), F(1)))
        assert image == (F(2, 3), F(3, 11))
        assert idx == BranchIndex(2, 4)

    def test_Phat_is_P_iterate(self):
        # theta = 5 steps of P
        pt = PlanePoint(F(11, 20), F(1))
        for _ in range(5):
            pt = P_step(FAMILY, pt)
        assert pt == Phat_step(FAMILY, PlanePoint(F(11, 20), F(1)))[0]

    @settings(max_examples=40, deadline=None)
    @given(
        s=st.integers(2, 12),
        q=st.integers(1, 12),
        z=st.fractions(F(51, 100), F(99, 100), max_denominator=500),
        y=st.fractions(F(1, 100), F(50), max_denominator=500),
    )
    def test_return_time(self, s, q, z, y):
        x = inverse_branch(FAMILY, [(s, q)], z)[0]
        pt = PlanePoint(x, y)
        for _ in range(s + q - 1):
            pt = P_step(FAMILY, pt)
        image, idx = Phat_step(FAMILY, PlanePoint(x, y))
        assert idx == (s, q)
        assert pt == image
        assert image.x == z

    def test_Ptilde(self):
        image, quad = Ptilde_step(FAMILY, PlanePoint(F(28, 51), F(1)))
        assert image == (F(2, 3), F(17, 14))
        assert quad == QuadIndex(2, 4, 2, 1)


class TestFiber:
    def test_ghat_image(self):
        assert tuple(ghat_image(FAMILY, 2, 4)) == (F(1, 4), F(2, 7))
        assert ghat_image(FAMILY, 2, 1).width == 1
        for s, q in ((2, 1), (5, 3), (30, 30)):
            assert ghat_image(FAMILY, s, q).width <= 1

    def test_ghat_eval(self):
        value, d1, _ = ghat_eval(FAMILY, BranchIndex(2, 4), F(1))
        assert value == F(3, 11)
        image = ghat_image(FAMILY, 2, 4)
        assert image.contains(value)
        assert 0 < d1 <= F(1, 4)
        with pytest.raises(DomainError):
            ghat_eval(FAMILY, BranchIndex(2, 4), 0.0)

    def test_gtilde(self):
        quad = QuadIndex(2, 1, 2, 1)
        assert gtilde_deriv(FAMILY, quad, F(1)) == F(1, 25)
        value, _ = gtilde_eval(FAMILY, quad, F(1))
        # Ghat_{2,1}(y) = g0(y) + 1
        assert value == F(8, 5)


class TestArrays:
    def test_ptilde_array(self):
        rng = np.random.default_rng(11)
        x = rng.uniform(0.51, 0.98, 40)
        y = rng.uniform(0.1, 5.0, 40)
        new_x, new_y, log_f, log_g, quads = ptilde_array(FAMILY, x, y)
        for i in range(0, 40, 3):
            image, quad = Ptilde_step(FAMILY, PlanePoint(x[i], y[i]))
            assert tuple(quads[i]) == quad.as_tuple()
            assert new_x[i] == pytest.approx(image.x, rel=1e-6)
            assert new_y[i] == pytest.approx(image.y, rel=1e-10)
            d1 = gtilde_eval(FAMILY, quad, float(y[i]))[1]
            assert log_g[i] == pytest.approx(np.log(d1), rel=1e-10)
        assert np.all(log_f > 0)
        assert np.all(log_g < 0)

    def test_ptilde_array_rejection(self):
        # Fhat(8/13) = 3/5, an endpoint of {J_s^q}
        x = np.array([0.6, 8 / 13, np.sqrt(0.5)])
        new_x, new_y, log_f, log_g, quads = ptilde_array(FAMILY, x, np.ones(3))
        for values in (new_x, new_y, log_f, log_g):
            assert np.isnan(values[:2]).all()
            assert np.isfinite(values[2])
        assert quads[:2].tolist() == [[0, 0, 0, 0], [0, 0, 0, 0]]
        image, quad = Ptilde_step(FAMILY, PlanePoint(float(x[2]), 1.0))
        assert tuple(quads[2]) == quad.as_tuple()
        assert new_x[2] == pytest.approx(image.x, rel=1e-6)
        with pytest.raises(BoundaryError):
            Ptilde_step(FAMILY, PlanePoint(8 / 13, 1.0))
        with pytest.raises(DomainError):
            ptilde_array(FAMILY, np.array([0.3]), np.ones(1))
