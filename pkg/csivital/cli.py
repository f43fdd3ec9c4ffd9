"""
Command-Line Interface for csivital.
"""

import logging
from contextlib import contextmanager
from pathlib import Path
from typing import Any, Dict, Optional

import numpy as np
import pandas as pd
import typer
import yaml
from pydantic import ValidationError
from typing_extensions import Annotated

from .core.channel import ChannelSimulator, build_placements, build_scene, synth_ground_truth
from .core.evaluation import Evaluator
from .core.factory import (
    PULSE_REGISTRY,
    SINK_REGISTRY,
    SOURCE_REGISTRY,
    build_component,
)
from .core.geometry import rank_placements
from .core.pipeline import analyse_vitals
from .core.streaming import StreamingEstimator
from .utils.config import (
    DEFAULT_CONFIG_PATH,
    DEFAULT_SCENARIO,
    DEFAULT_SCENARIO_PATH,
    load_config,
    load_scenario,
)
from .utils.config_models import AppConfig, NoiseSpec
from .utils.data_models import Posture, SessionRecord, VitalProfile
from .utils.errors import ConfigError, CsiVitalError, DataError
from .utils.session_store import append_session, file_checksum, list_sessions
from .utils.trace_io import (
    export_amplitude_csv,
    export_spectrum_csv,
    read_trace,
    write_ground_truth,
    write_trace,
)

logger = logging.getLogger(__name__)

EXIT_USAGE = 2
EXIT_DATA = 3
DEFAULT_STORE = ".csivital_sessions"


def setup_logging(level: str = "INFO"):
    log_level = getattr(logging, level.upper(), logging.INFO)
    logging.basicConfig(
        level=log_level, format="%(asctime)s - %(name)s - %(levelname)s - %(message)s"
    )


app = typer.Typer(help="Contactless vital-sign monitoring from WiFi CSI: simulate, analyse, stream.")


@contextmanager
def _exit_codes():
    """Maps library errors to exit codes: 3 for data problems, 2 for everything the user must fix."""
    try:
        yield
    except (DataError, FileNotFoundError) as e:
        logger.error(f"{type(e).__name__}: {e}")
        raise typer.Exit(code=EXIT_DATA)
    except CsiVitalError as e:
        logger.error(f"{type(e).__name__}: {e}")
        raise typer.Exit(code=EXIT_USAGE)


# Options shared by the commands that run the pipeline.
ConfigOpt = Annotated[
    Optional[str],
    typer.Option("--config", "-c", help="YAML config (default: $CSIVITAL_CONFIG or configs/default.yaml)."),
]
LogLevelOpt = Annotated[
    str, typer.Option("--log-level", "-l", help="Logging level (DEBUG, INFO, WARNING, ERROR).")
]
HampelWindowOpt = Annotated[Optional[int], typer.Option(help="Hampel window in samples (odd).")]
HampelSigmaOpt = Annotated[Optional[float], typer.Option(help="Hampel threshold in robust sigmas.")]
OrderOpt = Annotated[Optional[int], typer.Option(help="Butterworth order.")]
BreathLowOpt = Annotated[Optional[float], typer.Option(help="Breath band low edge, Hz.")]
BreathHighOpt = Annotated[Optional[float], typer.Option(help="Breath band high edge, Hz.")]
HeartLowOpt = Annotated[Optional[float], typer.Option(help="Heart band low edge, Hz.")]
HeartHighOpt = Annotated[Optional[float], typer.Option(help="Heart band high edge, Hz.")]
FftWindowOpt = Annotated[Optional[float], typer.Option(help="Seconds analysed per estimate.")]
PaddingOpt = Annotated[Optional[int], typer.Option(help="FFT zero-padding factor.")]
GuardOpt = Annotated[Optional[float], typer.Option(help="Harmonic guard half-width in FFT bins.")]
MinConfOpt = Annotated[Optional[float], typer.Option(help="Confidence below which a rate is flagged.")]
AntennaOpt = Annotated[Optional[int], typer.Option(help="Receive antenna to use (default: best stream).")]
FormatOpt = Annotated[str, typer.Option("--format", help="Output format: text or csv.")]


def _with_overrides(
    config: AppConfig, pipeline: Dict[str, Any], stream: Optional[Dict[str, Any]] = None
) -> AppConfig:
    data = config.model_dump(mode="json", exclude={"stream": {"pipeline"}})
    for key, value in pipeline.items():
        if value is None:
            continue
        if key in ("breath_low", "breath_high", "heart_low", "heart_high"):
            band, edge = key.split("_")
            data["pipeline"][f"{band}_band"][edge] = value
        else:
            data["pipeline"][key] = value
    if stream is None:
        # Unused by batch commands, but it must still cover the analysis window.
        data["stream"]["threshold"] = max(data["stream"]["threshold"], data["pipeline"]["fft_window"])
    for key, value in (stream or {}).items():
        if value is not None:
            data["stream"][key] = value
    try:
        return AppConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigError(f"Invalid option values:\n{e}") from e


def _check_format(fmt: str):
    if fmt not in SINK_REGISTRY:
        raise ConfigError(f"Unknown format '{fmt}' (choose from {', '.join(sorted(SINK_REGISTRY))}).")


def _store_session(store: str, session_id: str, scenario: Dict[str, Any], trace_path: str, estimates=()):
    record = SessionRecord(
        session_id=session_id,
        scenario=scenario,
        trace_path=str(trace_path),
        trace_checksum=file_checksum(trace_path),
        estimates=[e.to_dict() for e in estimates],
    )
    append_session(store, record)


@app.command()
def synth(
    out: Annotated[str, typer.Option("--out", "-o", help="Trace file to write.")],
    scenario_path: Annotated[
        Optional[str], typer.Option("--scenario", "-s", help="Scenario YAML (default: built-in scenario).")
    ] = None,
    duration: Annotated[float, typer.Option(help="Seconds to synthesize.")] = 60.0,
    seed: Annotated[int, typer.Option(help="Random seed.")] = 0,
    breath_rate: Annotated[Optional[float], typer.Option(help="Breaths per minute.")] = None,
    heart_rate: Annotated[Optional[float], typer.Option(help="Beats per minute.")] = None,
    breath_depth: Annotated[Optional[float], typer.Option(help="Chest excursion, meters.")] = None,
    heart_amplitude: Annotated[Optional[float], typer.Option(help="Heartbeat excursion, meters.")] = None,
    posture: Annotated[Optional[Posture], typer.Option(help="Sleeping posture.")] = None,
    snr_db: Annotated[Optional[float], typer.Option(help="Noise SNR in dB.")] = None,
    no_noise: Annotated[bool, typer.Option("--no-noise", help="Disable Gaussian noise.")] = False,
    outlier_rate: Annotated[Optional[float], typer.Option(help="Outlier spikes per sample.")] = None,
    truth_dir: Annotated[Optional[str], typer.Option(help="Also write accelerometer and pulse CSVs here.")] = None,
    store: Annotated[Optional[str], typer.Option(help="Session store directory to record the trace in.")] = None,
    session_id: Annotated[Optional[str], typer.Option(help="Session id (default: trace file stem).")] = None,
    config_path: ConfigOpt = None,
    log_level: LogLevelOpt = "INFO",
):
    """Synthesizes a CSI trace from a scenario and a breathing/heartbeat profile."""
    setup_logging(level=log_level)
    with _exit_codes():
        config = load_config(config_path)
        scenario = load_scenario(scenario_path)
        overrides = {
            "breath_rate": breath_rate,
            "heart_rate": heart_rate,
            "breath_depth": breath_depth,
            "heart_amplitude": heart_amplitude,
            "posture": posture,
        }
        profile_data = scenario.profile.model_dump()
        profile_data.update({k: v for k, v in overrides.items() if v is not None})
        profile = VitalProfile(**profile_data)

        noise_data = config.noise.model_dump()
        if snr_db is not None:
            noise_data["snr_db"] = snr_db
        if no_noise:
            noise_data["snr_db"] = None
        if outlier_rate is not None:
            noise_data["outlier_rate"] = outlier_rate
        try:
            noise = NoiseSpec.model_validate(noise_data)
        except ValidationError as e:
            raise ConfigError(f"Invalid noise options:\n{e}") from e

        pulse = build_component(config.simulation.pulse, PULSE_REGISTRY)
        simulator = ChannelSimulator.from_config(build_scene(scenario), config.simulation, pulse)
        result = simulator.synthesize(profile, duration, noise, seed)
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        write_trace(out, result.trace)

        if truth_dir:
            truth = synth_ground_truth(
                profile, duration, recumbent_depth_factor=config.simulation.recumbent_depth_factor
            )
            truth_path = Path(truth_dir)
            truth_path.mkdir(parents=True, exist_ok=True)
            stem = Path(out).stem
            write_ground_truth(truth_path / f"{stem}_accel.csv", truth.breath)
            write_ground_truth(truth_path / f"{stem}_pulse.csv", truth.pulse)
            logger.info(f"Wrote ground truth for '{stem}' to '{truth_path}'")

        if store:
            description = {
                "scenario": scenario_path or "built-in",
                "profile": {**profile_data, "posture": profile.posture.value},
                "noise": noise.model_dump(),
                "duration": duration,
                "seed": seed,
            }
            _store_session(store, session_id or Path(out).stem, description, out)

        print(f"Wrote {result.trace.n_frames} frames to {out}")


@app.command()
def analyze(
    trace_path: Annotated[str, typer.Argument(help="Trace file to analyse.")],
    spectrum_dir: Annotated[Optional[str], typer.Option(help="Write breath/heart spectra CSVs here.")] = None,
    amplitude_out: Annotated[Optional[str], typer.Option(help="Write the analysed amplitude stream as CSV.")] = None,
    output_format: FormatOpt = "text",
    store: Annotated[Optional[str], typer.Option(help="Session store to log the estimate in.")] = None,
    session_id: Annotated[Optional[str], typer.Option(help="Session id (default: '<trace stem>-analysis').")] = None,
    hampel_window: HampelWindowOpt = None,
    hampel_nsigma: HampelSigmaOpt = None,
    butterworth_order: OrderOpt = None,
    breath_low: BreathLowOpt = None,
    breath_high: BreathHighOpt = None,
    heart_low: HeartLowOpt = None,
    heart_high: HeartHighOpt = None,
    fft_window: FftWindowOpt = None,
    zero_padding: PaddingOpt = None,
    harmonic_guard_bins: GuardOpt = None,
    min_confidence: MinConfOpt = None,
    antenna: AntennaOpt = None,
    config_path: ConfigOpt = None,
    log_level: LogLevelOpt = "INFO",
):
    """Estimates breathing and heart rate from the last analysis window of a trace."""
    setup_logging(level=log_level)
    with _exit_codes():
        _check_format(output_format)
        config = _with_overrides(
            load_config(config_path),
            {
                "hampel_window": hampel_window,
                "hampel_nsigma": hampel_nsigma,
                "butterworth_order": butterworth_order,
                "breath_low": breath_low,
                "breath_high": breath_high,
                "heart_low": heart_low,
                "heart_high": heart_high,
                "fft_window": fft_window,
                "zero_padding": zero_padding,
                "harmonic_guard_bins": harmonic_guard_bins,
                "min_confidence": min_confidence,
                "antenna": antenna,
            },
        )
        trace = read_trace(trace_path)
        analysis = analyse_vitals(trace, config.pipeline)
        estimate = analysis.estimate

        sink_config = {"type": output_format, "config": {"detailed": True} if output_format == "text" else {}}
        sink = build_component(sink_config, SINK_REGISTRY)
        sink.write(estimate)
        sink.close()

        if spectrum_dir and analysis.breath is not None:
            directory = Path(spectrum_dir)
            directory.mkdir(parents=True, exist_ok=True)
            export_spectrum_csv(directory / "breath_spectrum.csv", analysis.breath)
            export_spectrum_csv(directory / "heart_spectrum.csv", analysis.heart)
        if amplitude_out:
            export_amplitude_csv(amplitude_out, trace, estimate.antenna, estimate.subcarrier)
        if store:
            scenario = {"analysis": config.pipeline.model_dump(mode="json")}
            _store_session(store, session_id or f"{Path(trace_path).stem}-analysis", scenario, trace_path, [estimate])


@app.command()
def stream(
    source: Annotated[str, typer.Argument(help="Trace file to read, or '-' for standard input.")],
    follow: Annotated[bool, typer.Option(help="Keep reading as the file grows.")] = False,
    output_format: FormatOpt = "text",
    out: Annotated[Optional[str], typer.Option("--out", "-o", help="CSV output file (csv format).")] = None,
    threshold: Annotated[Optional[float], typer.Option(help="Seconds buffered before the first estimate.")] = None,
    update_interval: Annotated[Optional[float], typer.Option(help="Seconds between estimates.")] = None,
    hampel_window: HampelWindowOpt = None,
    hampel_nsigma: HampelSigmaOpt = None,
    butterworth_order: OrderOpt = None,
    breath_low: BreathLowOpt = None,
    breath_high: BreathHighOpt = None,
    heart_low: HeartLowOpt = None,
    heart_high: HeartHighOpt = None,
    fft_window: FftWindowOpt = None,
    zero_padding: PaddingOpt = None,
    harmonic_guard_bins: GuardOpt = None,
    min_confidence: MinConfOpt = None,
    antenna: AntennaOpt = None,
    config_path: ConfigOpt = None,
    log_level: LogLevelOpt = "INFO",
):
    """Estimates vital signs frame by frame, printing `t_end, breath_bpm, heart_bpm, conf_b, conf_h`."""
    setup_logging(level=log_level)
    with _exit_codes():
        _check_format(output_format)
        config = _with_overrides(
            load_config(config_path),
            {
                "hampel_window": hampel_window,
                "hampel_nsigma": hampel_nsigma,
                "butterworth_order": butterworth_order,
                "breath_low": breath_low,
                "breath_high": breath_high,
                "heart_low": heart_low,
                "heart_high": heart_high,
                "fft_window": fft_window,
                "zero_padding": zero_padding,
                "harmonic_guard_bins": harmonic_guard_bins,
                "min_confidence": min_confidence,
                "antenna": antenna,
            },
            {"threshold": threshold, "update_interval": update_interval},
        )
        if source == "-":
            source_config = {"type": "stdin"}
        else:
            source_config = {"type": "file", "config": {"path": source, "follow": follow}}
        frame_source = build_component(source_config, SOURCE_REGISTRY)
        sink_config = {"type": output_format, "config": {"path": out} if output_format == "csv" else {}}
        sink = build_component(sink_config, SINK_REGISTRY)

        estimator = StreamingEstimator.for_header(config.stream, frame_source.header)
        emitted = 0
        try:
            for frame in frame_source.frames():
                estimate = estimator.push_frame(frame)
                if estimate is not None:
                    sink.write(estimate)
                    emitted += 1
        finally:
            sink.close()
            frame_source.close()
        logger.info(f"Stream ended after {estimator.state.samples_seen} frames, {emitted} estimates.")


@app.command()
def plan(
    scenario_path: Annotated[
        Optional[str], typer.Argument(help="Scenario YAML with candidate placements.")
    ] = None,
    out: Annotated[Optional[str], typer.Option("--out", "-o", help="Also write the table as CSV.")] = None,
    config_path: ConfigOpt = None,
    log_level: LogLevelOpt = "INFO",
):
    """Ranks candidate antenna placements by Fresnel-zone placement score."""
    setup_logging(level=log_level)
    with _exit_codes():
        config = load_config(config_path)
        scenario = load_scenario(scenario_path)
        placements = build_placements(scenario, config.simulation.recumbent_depth_factor)
        if not placements:
            logger.warning(f"Scenario '{scenario_path}' has no candidates.")
            print("No candidate placements in scenario.")
            return

        ranked = rank_placements(placements)
        table = pd.DataFrame(
            {
                "rank": np.arange(1, len(ranked) + 1),
                "name": [r.name for r in ranked],
                "zone_index": [r.zone_index for r in ranked],
                "effective_displacement_mm": [r.effective_displacement * 1e3 for r in ranked],
                "parity_factor": [r.parity_factor for r in ranked],
                "score_mm": [r.score * 1e3 for r in ranked],
            }
        )
        print(table.to_string(index=False, float_format="%.4f"))
        if out:
            table.to_csv(out, index=False)
            logger.info(f"Wrote placement table to '{out}'")


@app.command()
def eval(
    manifest_path: Annotated[str, typer.Argument(help="Evaluation manifest YAML.")],
    out: Annotated[Optional[str], typer.Option("--out", "-o", help="Per-window CSV report.")] = None,
    workers: Annotated[Optional[int], typer.Option(help="Worker processes (default: up to 4).")] = None,
    output_format: FormatOpt = "text",
    fft_window: FftWindowOpt = None,
    antenna: AntennaOpt = None,
    min_confidence: MinConfOpt = None,
    config_path: ConfigOpt = None,
    log_level: LogLevelOpt = "INFO",
):
    """Evaluates estimates against accelerometer and pulse-oximeter ground truth."""
    setup_logging(level=log_level)
    with _exit_codes():
        _check_format(output_format)
        config = _with_overrides(
            load_config(config_path),
            {"fft_window": fft_window, "antenna": antenna, "min_confidence": min_confidence},
        )
        report = Evaluator(config.pipeline, max_workers=workers).evaluate(manifest_path)
        if output_format == "csv":
            print(report.summary.to_csv(index=False), end="")
        else:
            print(report.to_text())
        if out:
            report.to_csv(out)


@app.command()
def init():
    """Writes the default config and scenario files into the current directory."""
    setup_logging()
    logger.info("Initializing new csivital project...")
    files = {
        Path(DEFAULT_CONFIG_PATH): AppConfig().model_dump(mode="json", exclude={"stream": {"pipeline"}}),
        Path(DEFAULT_SCENARIO_PATH): DEFAULT_SCENARIO,
    }
    for path, content in files.items():
        if path.exists():
            logger.warning(f"'{path}' already exists.")
            continue
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(yaml.safe_dump(content, sort_keys=False))
        logger.info(f"Created default '{path}'.")
    logger.info("Project initialized.")


@app.command()
def sessions(
    store: Annotated[str, typer.Option(help="Session store directory.")] = DEFAULT_STORE,
    log_level: LogLevelOpt = "INFO",
):
    """Lists the sessions recorded in a session store."""
    setup_logging(level=log_level)
    with _exit_codes():
        records = list_sessions(store)
        if not records:
            logger.warning(f"No sessions in '{store}'.")
            return
        print("\n--- Sessions ---")
        for record in records:
            print(
                f"  - {record.session_id}  {record.created_at}  {record.trace_path}  "
                f"({len(record.estimates)} estimates)"
            )


@app.command(name="list-components")
def list_components():
    """Lists all available components."""

    def print_registry(title, names):
        print(f"\n--- {title} ---")
        for name in sorted(names):
            print(f"  - {name}")

    print_registry("Pulse shapes", PULSE_REGISTRY.keys())
    print_registry("Frame sources", SOURCE_REGISTRY.keys())
    print_registry("Output formats", SINK_REGISTRY.keys())
    print_registry("Postures", [p.value for p in Posture])
