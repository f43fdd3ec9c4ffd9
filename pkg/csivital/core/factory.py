"""
Component Factory for csivital.

This module implements the factory pattern for the pluggable components.
Registries map configuration strings (e.g., 'raised_cosine') to component
classes, so pulse shapes, frame sources and estimate sinks can be chosen
from YAML or from the command line.
"""

import logging
from typing import Union

from ..components.pulses import RaisedCosinePulse, SinusoidPulse
from ..components.sinks import CsvSink, TextSink
from ..components.sources import StdinSource, TraceFileSource
from ..utils.config_models import ComponentConfig
from ..utils.errors import ConfigError

logger = logging.getLogger(__name__)

# A registry mapping 'type' strings to heartbeat pulse shapes.
PULSE_REGISTRY = {
    "raised_cosine": RaisedCosinePulse,
    "sinusoid": SinusoidPulse,
}

# A registry mapping 'type' strings to frame sources.
SOURCE_REGISTRY = {
    "file": TraceFileSource,
    "stdin": StdinSource,
}

# A registry mapping 'type' strings to estimate sinks.
SINK_REGISTRY = {
    "text": TextSink,
    "csv": CsvSink,
}


def build_component(component_config: Union[dict, ComponentConfig], registry: dict):
    """
    Builds a component instance from a configuration and a registry.

    The configuration must name a 'type' found in the registry; the
    parameters under 'config' are passed to the component's constructor.

    Args:
        component_config (Union[dict, ComponentConfig]): Has 'type' and
            optionally 'config' keys.
        registry (dict): The registry (e.g., PULSE_REGISTRY) to look up the
            component class.

    Returns:
        An instance of the component class.

    Raises:
        ConfigError: If the type is missing or unknown, or the parameters do
            not fit the constructor.
    """
    if isinstance(component_config, ComponentConfig):
        component_config = component_config.model_dump()
    component_type = component_config.get("type", "")
    config = component_config.get("config") or {}

    if not component_type:
        raise ConfigError("Component 'type' not specified in configuration.")

    component_class = registry.get(component_type)
    if not component_class:
        raise ConfigError(
            f"'{component_type}' is not a valid component type "
            f"(choose from {', '.join(sorted(registry))})."
        )

    logger.debug(f"Building component '{component_class.__name__}' with config: {config}")
    try:
        return component_class(**config)
    except TypeError as e:
        raise ConfigError(f"Invalid parameters for '{component_type}': {e}") from e
