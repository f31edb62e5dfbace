import pickle
from fractions import Fraction

import numpy as np
import pytest

from hypmix._general import ConfigError, DomainError
from hypmix.map_family import (
    MapFamily,
    OmegaSequence,
    Verdict,
    check_assumptions,
    default_grid,
    f0_eval,
    family_from_settings,
    g0_eval,
    modular_family,
)
from hypmix.parameters_settings import FamilySettings


@pytest.fixture(name="family", scope="module")
def fixture_family():
    return modular_family()


class TestMaps:
    def test_f0_exact(self, family):
        assert f0_eval(family, Fraction(1, 2)) == (1, 4, 16)
        assert f0_eval(family, Fraction(2, 3)) == (2, 9, 54)
        assert all(
            isinstance(v, Fraction) for v in f0_eval(family, Fraction(1, 3))
        )

    def test_f0_float(self, family):
        assert f0_eval(family, 0.5) == (1.0, 4.0, 16.0)
        value, d1, _ = f0_eval(family, np.array([0.25, 0.5]))
        np.testing.assert_allclose(value, [1.0 / 3.0, 1.0])
        np.testing.assert_allclose(d1, [16.0 / 9.0, 4.0])

    def test_g0(self, family):
        assert g0_eval(family, Fraction(1)) == (
            Fraction(1, 2),
            Fraction(1, 4),
            Fraction(-1, 4),
        )
        assert g0_eval(family, 1.0) == (0.5, 0.25, -0.25)
        # g0 inverts f0
        assert family.g0(family.f0(Fraction(3, 7))[0])[0] == Fraction(3, 7)

    def test_domain(self, family):
        for x in (0, 1, Fraction(3, 2), -0.1, 1.0):
            with pytest.raises(DomainError, match="x should be in"):
                family.f0(x)
        with pytest.raises(DomainError, match="y should be > 0"):
            family.g0(0.0)
        with pytest.raises(ValueError):
            family.g0(Fraction(-1, 2))

    def test_powers(self, family):
        assert family.g0_power(9)(Fraction(1)) == Fraction(1, 10)
        assert family.f0_power(2)(Fraction(1, 3)) == Fraction(1)
        orbit = family.g0_orbit()
        np.testing.assert_allclose(orbit[:4], [1.0, 0.5, 1.0 / 3.0, 0.25])
        assert np.all(np.diff(orbit) < 0)

    def test_constants(self, family):
        assert family.is_modular()
        assert family.exact_rational
        assert family.adler_constant() == 2.0
        assert family.delta_lo() == Fraction(1, 2)

    def test_mobius_family(self):
        family = MapFamily(f0_coeffs=(2, 0, -1, 1), name="mobius")
        assert not family.is_modular()
        assert family.f0(Fraction(1, 2))[0] == 2
        assert family.adler_constant() == pytest.approx(1.0)

    def test_invalid_coefficients(self):
        with pytest.raises(ConfigError, match="b = 0, c = -d"):
            MapFamily(f0_coeffs=(1, 1, -1, 1))
        with pytest.raises(ConfigError, match="rho0 should be"):
            MapFamily(rho0=-1.0)

    def test_pickle(self, family):
        family.g0_power(5)
        clone = pickle.loads(pickle.dumps(family))
        assert clone.f0(0.5) == family.f0(0.5)
        assert clone.g0_power(5)(Fraction(1)) == Fraction(1, 6)

    def test_from_settings(self):
        settings = FamilySettings(
            name="mobius", f0_coeffs=(3, 0, -2, 2), rho0=0.25
        )
        family = family_from_settings(settings)
        assert family.name == "mobius"
        assert family.rho0 == 0.25
        assert family.f0(Fraction(1, 2))[0] == Fraction(3, 2)


class TestOmega:
    def test_named(self):
        omega1 = OmegaSequence("inverse_square", 1)
        omega2 = OmegaSequence("inverse_square", 2)
        assert omega1.first == 2
        assert omega2.first == 1
        assert omega1.value(3) == 0.25
        assert omega2.value(1) == 0.25
        assert omega1.value_exact(4) == Fraction(1, 9)
        assert omega2.value_exact(4) == Fraction(1, 25)
        # sum_{n >= 2} 1/(n-1)^2
        assert omega1.total() == pytest.approx(np.pi**2 / 6)
        assert omega2.total() == pytest.approx(np.pi**2 / 6 - 1)
        assert omega1.partial_sum(3) == pytest.approx(1.25)
        assert omega1.partial_sum(1) == 0.0
        assert omega1.tail(3) == pytest.approx(np.pi**2 / 6 - 1)

    def test_divergent_tail(self):
        assert OmegaSequence("inverse_square", 1).total(0.5) == np.inf

    def test_table(self):
        omega = OmegaSequence((0.5, 0.25, 0.125), 1)
        assert omega.name == "table"
        assert omega.value(2) == 0.5
        np.testing.assert_allclose(omega.value([3, 4]), [0.25, 0.125])
        assert omega.partial_sum(4) == pytest.approx(0.875)
        with pytest.raises(ConfigError, match="at least 4 values"):
            omega.value(5)
        with pytest.raises(ConfigError, match="named sequence"):
            omega.total()

    def test_unknown_name(self):
        with pytest.raises(ConfigError):
            OmegaSequence("harmonic", 1)


class TestAssumptions:
    def test_modular_passes(self, family):
        report = check_assumptions(family, n_max=100)
        assert report.passed
        verdicts = report.verdicts
        for name in ("A2", "A4", "A5", "A6", "B(ii)", "B(iii)"):
            assert verdicts[name].status == "pass", name
        assert verdicts["A1"].status == "ungraded-trend"
        assert verdicts["A3"].status == "ungraded-trend"
        assert verdicts["B(i) omega1"].status == "pass"
        assert report.adler_estimate == pytest.approx(2.0, rel=1e-6)

    def test_records(self, family):
        records = check_assumptions(family, n_max=10).records()
        assert [r["assumption"] for r in records][:2] == ["A1", "A2"]
        assert set(records[0]) == {"assumption", "verdict", "witness", "value"}

    def test_a3_fails_off_modular(self):
        family = MapFamily(f0_coeffs=(2, 0, -1, 1), name="mobius")
        report = check_assumptions(family, n_max=20)
        assert not report.passed
        assert report.verdicts["A3"].status == "fail"
        assert report.verdicts["A3"].witness is not None
        assert report.verdicts["A4"].status == "pass"

    def test_a4_fails_at_injected_point(self, monkeypatch):
        grid = default_grid(n=100)
        witness = float(grid[40])
        convex_f0 = MapFamily.f0

        def dented_f0(self, x):
            value, d1, d2 = convex_f0(self, x)
            return value, d1, np.where(np.asarray(x) == witness, -1.0, d2)

        monkeypatch.setattr(MapFamily, "f0", dented_f0)
        report = check_assumptions(MapFamily(), grid, n_max=10)
        assert not report.passed
        assert report.verdicts["A4"].status == "fail"
        assert report.verdicts["A4"].witness == witness
        assert report.verdicts["A2"].status == "pass"

    def test_b_ii_fails_with_small_constant(self):
        # g0'(1) = 1/4 > ci1 omega^(1)_2 when ci1 < 1/4
        report = check_assumptions(MapFamily(ci1=0.2), n_max=10)
        assert report.verdicts["B(ii)"].status == "fail"
        assert report.verdicts["B(ii)"].witness == 2

    def test_b_iii_tight(self):
        # the product equals 4 / (n+1)^2 exactly
        report = check_assumptions(MapFamily(ci2=3.99), n_max=10)
        assert report.verdicts["B(iii)"].status == "fail"
        assert report.verdicts["B(iii)"].witness == 1

    def test_table_is_trend_only(self):
        table = tuple(1.0 / (n - 1) ** 2 for n in range(2, 101))
        family = MapFamily(omega1=table)
        report = check_assumptions(family, n_max=100)
        assert report.verdicts["B(i) omega1"].status == "ungraded-trend"
        assert report.verdicts["B(ii)"].status == "pass"
        with pytest.raises(ConfigError, match="omega table"):
            check_assumptions(family, n_max=200)

    def test_n_max(self, family):
        with pytest.raises(ConfigError, match="n_max should be >= 2"):
            check_assumptions(family, n_max=1)

    def test_grid(self):
        grid = default_grid(n=100)
        assert grid.size == 100
        assert np.all(np.diff(grid) > 0)
        assert grid[0] == pytest.approx(1e-8)
        assert grid[-1] == pytest.approx(1 - 1e-8)

    def test_verdict(self):
        with pytest.raises(ValueError, match="needs a witness"):
            Verdict("fail")
        assert repr(Verdict("pass")) == "Verdict(pass, witness=None)"
