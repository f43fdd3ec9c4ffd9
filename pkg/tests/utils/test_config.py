"""
Tests for config, scenario and manifest loading.
"""

import os
from pathlib import Path
from unittest.mock import patch

import pytest
import yaml

from csivital.utils.config import (
    CONFIG_ENV_VAR,
    default_scenario,
    load_config,
    load_manifest,
    load_scenario,
)
from csivital.utils.config_models import AppConfig
from csivital.utils.data_models import Posture
from csivital.utils.errors import ConfigError

PROJECT_ROOT = Path(__file__).resolve().parents[2]


@pytest.fixture
def workdir(tmp_path, monkeypatch):
    """An empty working directory with no CSIVITAL_* variables set."""
    monkeypatch.chdir(tmp_path)
    with patch.dict(os.environ, {k: v for k, v in os.environ.items() if not k.startswith("CSIVITAL")}, clear=True):
        yield tmp_path


def test_shipped_config_matches_the_defaults():
    """Tests that configs/default.yaml spells out the built-in defaults."""
    assert load_config(str(PROJECT_ROOT / "configs" / "default.yaml")) == AppConfig()


def test_defaults_without_any_file(workdir):
    assert load_config() == AppConfig()


def test_config_path_from_environment(workdir):
    path = workdir / "custom.yaml"
    path.write_text(yaml.safe_dump({"pipeline": {"zero_padding": 8}, "stream": {"update_interval": 2.0}}))
    os.environ[CONFIG_ENV_VAR] = str(path)

    config = load_config()
    assert config.pipeline.zero_padding == 8
    assert config.stream.update_interval == 2.0
    # The stream section runs the top-level pipeline settings.
    assert config.stream.pipeline.zero_padding == 8


def test_config_path_from_dotenv(workdir):
    path = workdir / "from_dotenv.yaml"
    path.write_text(yaml.safe_dump({"noise": {"snr_db": 10.0}}))
    (workdir / ".env").write_text(f"{CONFIG_ENV_VAR}={path}\n")
    assert load_config().noise.snr_db == 10.0


def test_default_config_file_in_working_directory(workdir):
    (workdir / "configs").mkdir()
    (workdir / "configs" / "default.yaml").write_text(yaml.safe_dump({"pipeline": {"min_confidence": 6.0}}))
    assert load_config().pipeline.min_confidence == 6.0


@pytest.mark.parametrize(
    "content",
    [
        "pipeline: [unclosed",
        yaml.safe_dump({"pipeline": {"hampel_window": 4}}),
        yaml.safe_dump({"pipeline": {"breath_band": {"low": 0.5, "high": 0.25}}}),
        yaml.safe_dump({"pipeline": {"fft_window": 5.0}}),
        yaml.safe_dump({"stream": {"threshold": 10.0}}),
    ],
    ids=["yaml", "even-hampel", "band-order", "short-window", "short-threshold"],
)
def test_invalid_config(workdir, content):
    path = workdir / "bad.yaml"
    path.write_text(content)
    with pytest.raises(ConfigError):
        load_config(str(path))


def test_missing_config_file(workdir):
    with pytest.raises(ConfigError):
        load_config("nope.yaml")


def test_scenario_falls_back_to_built_in(workdir):
    scenario = load_scenario()
    assert scenario == default_scenario()
    assert [r.name for r in scenario.receivers] == ["R1", "R2", "R3"]
    assert scenario.resolved_wavelength == pytest.approx(0.05635, abs=1e-5)


def test_shipped_scenarios_load():
    scenario = load_scenario(str(PROJECT_ROOT / "scenarios" / "default.yaml"))
    assert scenario.candidates[-1].posture == Posture.LEFT_RECUMBENT
    assert len(load_scenario(str(PROJECT_ROOT / "scenarios" / "sweep.yaml")).candidates) == 12


def test_load_manifest(workdir):
    path = workdir / "manifest.yaml"
    path.write_text(
        yaml.safe_dump({"entries": [{"trace": "a.csit", "breath_truth": "a.csv", "posture": "prone"}]})
    )
    manifest = load_manifest(str(path))
    assert manifest.entries[0].posture == Posture.PRONE
    assert manifest.entries[0].pulse_truth is None


def test_empty_manifest(workdir):
    path = workdir / "manifest.yaml"
    path.write_text(yaml.safe_dump({"entries": []}))
    with pytest.raises(ConfigError):
        load_manifest(str(path))
