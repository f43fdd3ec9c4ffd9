"""
Configuration loading utility for csivital.

This module loads and validates the YAML config and scenario files. The
default config path can be set through the CSIVITAL_CONFIG environment
variable (a `.env` file is honoured).
"""

import logging
import os
from pathlib import Path
from typing import Optional, Type, TypeVar

import yaml
from dotenv import find_dotenv, load_dotenv
from pydantic import BaseModel, ValidationError

from .config_models import AppConfig, EvalManifest, ScenarioConfig
from .errors import ConfigError

logger = logging.getLogger(__name__)

CONFIG_ENV_VAR = "CSIVITAL_CONFIG"
DEFAULT_CONFIG_PATH = "configs/default.yaml"
DEFAULT_SCENARIO_PATH = "scenarios/default.yaml"

ModelT = TypeVar("ModelT", bound=BaseModel)


def default_config_path() -> Optional[str]:
    """Returns the config path from the environment, the default file, or None."""
    load_dotenv(find_dotenv(usecwd=True))
    env_path = os.getenv(CONFIG_ENV_VAR)
    if env_path:
        return env_path
    if Path(DEFAULT_CONFIG_PATH).is_file():
        return DEFAULT_CONFIG_PATH
    return None


def _load_yaml_model(path: Path, model: Type[ModelT]) -> ModelT:
    if not path.is_file():
        raise ConfigError(f"Configuration file not found or is not a file: '{path}'")

    logger.debug(f"Attempting to load and validate {model.__name__} from: {path}")
    try:
        with open(path, "r", encoding="utf-8") as f:
            raw = yaml.safe_load(f)
    except (yaml.YAMLError, IOError) as e:
        raise ConfigError(f"Error reading or parsing YAML file '{path}': {e}") from e

    try:
        # Pydantic provides detailed, user-friendly error messages.
        validated = model.model_validate(raw or {})
    except ValidationError as e:
        raise ConfigError(f"Configuration validation failed for '{path}':\n{e}") from e

    logger.info(f"Successfully loaded and validated configuration from: '{path}'")
    return validated


def load_config(config_path: Optional[str] = None) -> AppConfig:
    """
    Loads and validates the application config.

    Args:
        config_path (Optional[str]): Explicit path. When None, the path from
            `default_config_path()` is used, and built-in defaults apply if
            there is none.

    Returns:
        AppConfig: The validated configuration.

    Raises:
        ConfigError: If the file is missing, unreadable or invalid.
    """
    path = config_path or default_config_path()
    if path is None:
        logger.debug("No config file found; using built-in defaults.")
        return AppConfig()
    return _load_yaml_model(Path(path), AppConfig)


def load_scenario(scenario_path: Optional[str] = None) -> ScenarioConfig:
    """
    Loads and validates a geometry scenario file.

    Without a path, scenarios/default.yaml is used if present, else the
    built-in default scenario.
    """
    if scenario_path is None:
        if not Path(DEFAULT_SCENARIO_PATH).is_file():
            logger.debug("No scenario file found; using the built-in default scenario.")
            return default_scenario()
        scenario_path = DEFAULT_SCENARIO_PATH
    return _load_yaml_model(Path(scenario_path), ScenarioConfig)


def load_manifest(manifest_path: str) -> EvalManifest:
    """Loads and validates an evaluation manifest."""
    return _load_yaml_model(Path(manifest_path), EvalManifest)


# Three receivers around a bed, matching the bench layout the defaults are tuned for.
DEFAULT_SCENARIO = {
    "carrier_freq": 5.32e9,
    "transmitter": [0.0, 0.0, 0.6],
    "receivers": [
        {"name": "R1", "position": [1.2, 0.0, 0.6]},
        {"name": "R2", "position": [1.0, 0.5, 0.6]},
        {"name": "R3", "position": [0.8, 0.0, 0.6]},
    ],
    "body_point": [0.4, 0.13, 0.47],
    "profile": {
        "breath_rate": 18.0,
        "breath_depth": 0.005,
        "heart_rate": 72.0,
        "heart_amplitude": 0.0005,
        "posture": "supine",
    },
    "candidates": [
        {"name": "R1", "tx": [0.0, 0.0, 0.6], "rx": [1.2, 0.0, 0.6], "body_point": [0.4, 0.13, 0.47]},
        {"name": "R2", "tx": [0.0, 0.0, 0.6], "rx": [1.0, 0.5, 0.6], "body_point": [0.4, 0.13, 0.47]},
        {"name": "R3", "tx": [0.0, 0.0, 0.6], "rx": [0.8, 0.0, 0.6], "body_point": [0.4, 0.13, 0.47]},
        {
            "name": "R3-side",
            "tx": [0.0, 0.0, 0.6],
            "rx": [0.8, 0.0, 0.6],
            "body_point": [0.4, 0.13, 0.47],
            "posture": "left-recumbent",
        },
    ],
}


def default_scenario() -> ScenarioConfig:
    return ScenarioConfig.model_validate(DEFAULT_SCENARIO)
