import pytest

from torsionzeta.config import (
    SYSTEM_CONFIGS,
    VerificationConfig,
    get_system_config,
    with_tolerance_overrides,
)


def test_presets():
    assert set(SYSTEM_CONFIGS) == {"standard", "quick", "thorough"}
    assert get_system_config("quick").suites.trials["detline"] == 20
    assert get_system_config("thorough").zeta.truncation == 90
    assert get_system_config("standard").zeta.truncation == 60


def test_unknown_preset_falls_back():
    assert get_system_config("nonsense") is SYSTEM_CONFIGS["standard"]


def test_env_preset(monkeypatch):
    monkeypatch.setenv("TORSIONZETA_PRESET", "quick")
    assert get_system_config().preset == "quick"


def test_env_log_level(monkeypatch):
    monkeypatch.setenv("TORSIONZETA_LOG_LEVEL", "debug")
    assert VerificationConfig().suites.log_level == "DEBUG"


def test_tolerance_overrides_copy():
    base = VerificationConfig()
    updated = with_tolerance_overrides(base, {"gluing": 1e-6, "zeta": 1e-7})
    assert updated.tolerances.gluing == 1e-6
    assert updated.tolerances.zeta == 1e-7
    assert base.tolerances.gluing == 1e-8


def test_unknown_tolerance_rejected():
    with pytest.raises(KeyError):
        with_tolerance_overrides(VerificationConfig(), {"bogus": 1.0})


def test_full_config_sections():
    full = VerificationConfig("quick").get_full_config()
    assert full["preset"] == "quick"
    assert set(full) == {"preset", "numerics", "variation", "zeta", "tolerances", "suites"}
    assert full["tolerances"]["algebraic"] == 1e-12
    assert full["suites"]["max_degree_span"] == 4


def test_print_config(capsys):
    VerificationConfig().print_config()
    out = capsys.readouterr().out
    assert "Preset: STANDARD" in out
    assert "Truncation K: 60" in out
