import pytest

from csivital.components.pulses import RaisedCosinePulse, SinusoidPulse
from csivital.components.sinks import CsvSink, TextSink
from csivital.components.sources import StdinSource, TraceFileSource
from csivital.core.factory import (
    PULSE_REGISTRY,
    SINK_REGISTRY,
    SOURCE_REGISTRY,
    build_component,
)
from csivital.utils.config_models import ComponentConfig
from csivital.utils.errors import ConfigError


def test_build_pulse_component():
    """Tests if the factory correctly builds a pulse shape."""
    config = {"type": "raised_cosine", "config": {"duty": 0.4}}
    component = build_component(config, PULSE_REGISTRY)
    assert isinstance(component, RaisedCosinePulse)
    assert component.duty == 0.4


def test_build_component_from_model():
    """Tests that a validated ComponentConfig works as well as a dict."""
    component = build_component(ComponentConfig(type="sinusoid"), PULSE_REGISTRY)
    assert isinstance(component, SinusoidPulse)


def test_build_source_component(tmp_path):
    """Tests if the factory correctly builds a frame source."""
    config = {"type": "file", "config": {"path": str(tmp_path / "trace.csit"), "follow": True}}
    component = build_component(config, SOURCE_REGISTRY)
    assert isinstance(component, TraceFileSource)
    assert component.follow


def test_build_stdin_source_component():
    component = build_component({"type": "stdin"}, SOURCE_REGISTRY)
    assert isinstance(component, StdinSource)


@pytest.mark.parametrize("kind, cls", [("text", TextSink), ("csv", CsvSink)])
def test_build_sink_component(kind, cls):
    """Tests if the factory correctly builds an estimate sink."""
    assert isinstance(build_component({"type": kind}, SINK_REGISTRY), cls)


def test_build_component_invalid_type():
    """Tests if the factory raises a ConfigError for an invalid component type."""
    with pytest.raises(ConfigError):
        build_component({"type": "invalid_type", "config": {}}, SOURCE_REGISTRY)


def test_build_component_missing_type():
    with pytest.raises(ConfigError):
        build_component({"config": {}}, PULSE_REGISTRY)


def test_build_component_bad_parameters():
    """Tests that constructor argument errors surface as ConfigError."""
    with pytest.raises(ConfigError):
        build_component({"type": "raised_cosine", "config": {"width": 3}}, PULSE_REGISTRY)
