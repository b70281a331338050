import pytest
from pydantic import ValidationError

from src.config import QUBIT_CAP, Settings, get_settings


def test_defaults():
    settings = get_settings()
    assert settings.log_level == "INFO"
    assert settings.max_qubits == QUBIT_CAP
    assert settings.psd_tol == pytest.approx(1e-9)
    assert settings.report_schema_version == "1"


def test_environment_overrides(monkeypatch):
    monkeypatch.setenv("TWOCOPY_LOG_LEVEL", "DEBUG")
    monkeypatch.setenv("TWOCOPY_PSD_TOL", "1e-7")
    settings = Settings()
    assert settings.log_level == "DEBUG"
    assert settings.psd_tol == pytest.approx(1e-7)


def test_cap_cannot_be_raised(monkeypatch):
    monkeypatch.setenv("TWOCOPY_MAX_QUBITS", "7")
    with pytest.raises(ValidationError):
        Settings()


def test_settings_are_cached():
    assert get_settings() is get_settings()
