from fractions import Fraction
from pathlib import Path

import pytest

from hypmix._general import ConfigError
from hypmix.parameters_settings import (
    FamilySettings,
    MeasureSettings,
    RunConfig,
    SimulateSettings,
    VerifySettings,
    hm_params,
    read_config,
    read_config_text,
    threads_from_env,
)


class TestParameters:
    def test_defaults(self):
        assert hm_params.inverse_tol == 1e-12
        assert hm_params.boundary_ulps == 4
        assert hm_params.singularity_margin == 1e-10
        assert hm_params.boundary_slack_cap == 1e-9
        assert hm_params.closed_form_tol == 1e-9
        assert hm_params.extended_precision_q == 1000
        assert hm_params.orbit_table_size == 2**16
        assert hm_params.rejection_cap == 10_000


class TestFamilySettings:
    def test_modular(self):
        settings = FamilySettings()
        assert settings.name == "modular"
        assert settings.f0_coeffs == (1, 0, -1, 1)
        assert settings.rho0 == 0.5
        assert (settings.ci1, settings.ci2) == (1.0, 4.0)

    def test_mobius(self):
        settings = FamilySettings(name="mobius", f0_coeffs=(2, 0, -1, 1))
        assert settings.f0_coeffs == (2, 0, -1, 1)
        with pytest.raises(
            ValueError,
            match="Input Error: f0_coeffs should satisfy b = 0, c = -d",
        ):
            FamilySettings(name="mobius", f0_coeffs=(1, 1, -1, 1))
        with pytest.raises(ConfigError, match="should be 4 numbers"):
            FamilySettings(name="mobius")
        with pytest.raises(ConfigError, match="should be omitted"):
            FamilySettings(f0_coeffs=(2, 0, -1, 1))

    def test_name(self):
        with pytest.raises(
            ValueError,
            match="Input Error: name should be modular or mobius, got XXX.",
        ):
            FamilySettings(name="XXX")

    def test_ranges(self):
        with pytest.raises(ConfigError, match="Input Error: rho0 should be"):
            FamilySettings(rho0=0.0)
        with pytest.raises(ConfigError, match="Input Error: sigma1 should"):
            FamilySettings(sigma1=1.0)

    def test_omega(self):
        settings = FamilySettings(omega1=(1.0, 0.5, 0.25))
        assert settings.omega1 == (1.0, 0.5, 0.25)
        with pytest.raises(ConfigError, match="strictly decreasing"):
            FamilySettings(omega2=(0.5, 0.5))
        with pytest.raises(ConfigError, match="omega1 should be"):
            FamilySettings(omega1="harmonic")


class TestMeasureSettings:
    def test_defaults(self):
        settings = MeasureSettings()
        assert settings.x_window == (0.05, 20.0)
        assert settings.rejection_cap == hm_params.rejection_cap
        assert settings.roof_cap == hm_params.roof_cap
        assert settings.seed is None

    def test_window(self):
        with pytest.raises(ConfigError, match="x_window"):
            MeasureSettings(x_window=(0.05, 1.0005))
        with pytest.raises(ConfigError, match="y_window"):
            MeasureSettings(y_window=(2.0, 1.0))


class TestVerifySettings:
    def test_defaults(self):
        settings = VerifySettings()
        assert settings.uni_n == (1, 2, 3, 4)
        assert settings.tails_smax == 100
        assert settings.sigma is None
        assert settings.truncation_n == 20

    def test_ranges(self):
        with pytest.raises(ConfigError, match="uni_n should be non-empty"):
            VerifySettings(uni_n=())
        with pytest.raises(ConfigError, match="tails_smax"):
            VerifySettings(tails_smax=3)
        with pytest.raises(ConfigError, match="sigma"):
            VerifySettings(sigma=-0.1)


class TestSimulateSettings:
    def test_defaults(self):
        settings = SimulateSettings()
        assert settings.mode == "ensemble"
        assert settings.streams == 16

    def test_ranges(self):
        with pytest.raises(ConfigError, match="streams"):
            SimulateSettings(streams=1)
        with pytest.raises(ConfigError, match="budget"):
            SimulateSettings(budget=3, streams=4)
        with pytest.raises(ConfigError, match="mode should be"):
            SimulateSettings(mode="XXX")


class TestRunConfig:
    def test_threads(self, monkeypatch):
        monkeypatch.setenv("HYPMIX_THREADS", "3")
        assert threads_from_env() == 3
        assert RunConfig().threads == 3
        monkeypatch.setenv("HYPMIX_THREADS", "x")
        with pytest.raises(ConfigError, match="HYPMIX_THREADS"):
            threads_from_env()
        monkeypatch.delenv("HYPMIX_THREADS")
        assert RunConfig().threads == 1

    def test_measure_seed(self):
        assert RunConfig(seed=5).measure_seed == 5
        config = RunConfig(measure=MeasureSettings(seed=9), seed=5)
        assert config.measure_seed == 9


TEXT = """\
[family]
name = mobius
f0_coeffs = 2,0,-1,1   # the family f0(x) = 2x/(1-x)
rho0 = 0.5

[measure]
x_window = 0.1, 10

[verify]
uni_n = 1,2
sigma = 0.3

[simulate]
budget = 1e5
mode = birkhoff

[run]
seed = 42
threads = 2
output_dir = out
"""


class TestReadConfig:
    def test_full(self):
        config = read_config_text(TEXT)
        assert config.family.name == "mobius"
        assert config.family.f0_coeffs == (2, 0, -1, 1)
        assert config.family.rho0 == 0.5
        assert config.measure.x_window == (0.1, 10.0)
        assert config.verify.uni_n == (1, 2)
        assert config.verify.sigma == 0.3
        assert config.simulate.budget == 100_000
        assert config.simulate.mode == "birkhoff"
        assert config.seed == 42
        assert config.threads == 2
        assert config.output_dir == Path("out")

    def test_defaults(self):
        config = read_config_text("[family]\nname = modular\n")
        assert config.family.f0_coeffs == (1, 0, -1, 1)
        assert config.verify.n_max == 1000

    def test_diagnostics(self):
        with pytest.raises(
            ConfigError, match="line 2: unknown key foo in \\[family\\]"
        ):
            read_config_text("[family]\nfoo = 1\n")
        with pytest.raises(ConfigError, match="line 1: unknown section"):
            read_config_text("[bar]\nx = 1\n")
        with pytest.raises(ConfigError, match="missing section header"):
            read_config_text("x = 1\n")
        with pytest.raises(ConfigError, match="line 3, \\[family\\]"):
            read_config_text("[family]\nname = modular\nrho0 = -1\n")
        with pytest.raises(ConfigError, match="line 2: cannot read budget"):
            read_config_text("[simulate]\nbudget = 2.5\n")

    def test_file(self, tmp_path):
        path = tmp_path / "run.ini"
        path.write_text(TEXT, encoding="utf-8")
        assert read_config(path).seed == 42
        with pytest.raises(ConfigError, match="cannot read"):
            read_config(tmp_path / "missing.ini")
