"""
Evaluation harness.

Compares pipeline estimates with reference sensors: an accelerometer on the
abdomen for breathing (its rate is read with the same FFT estimator) and a
pulse oximeter for heart rate (bpm readings, averaged per window). Each
trace is cut into consecutive, non-overlapping analysis windows; every
window contributes one row per vital sign.

Accuracy of one window is (1 - |estimate - truth| / truth) * 100, clamped to
[0, 100]. A window without an estimate (a flat stream) scores 0 % and counts
with an absolute error equal to the truth, so both metrics include it; reports
also count such windows as `failed`. Report figures are means over windows.
"""

import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from ..utils.config import load_manifest
from ..utils.config_models import BandSpec, ManifestEntry, PipelineConfig
from ..utils.data_models import AmplitudeSeries, CsiTrace, TruthSeries
from ..utils.errors import AlignmentError, DomainError, InsufficientDataError
from ..utils.trace_io import read_ground_truth, read_trace
from .pipeline import bandpass, breathing_waveform, estimate_rate_fft, estimate_vitals

logger = logging.getLogger(__name__)

ROW_COLUMNS = [
    "entry",
    "participant",
    "posture",
    "signal",
    "window_start",
    "window_end",
    "truth_bpm",
    "estimate_bpm",
    "abs_error",
    "accuracy",
    "failed",
]
ALIGNMENT_SLACK = 1.0


def accuracy_percent(truth: float, estimate: float) -> float:
    """Accuracy of one estimate in percent, clamped to [0, 100]."""
    if not (math.isfinite(truth) and truth > 0):
        raise DomainError(f"Truth must be a positive rate, got {truth}")
    if not math.isfinite(estimate):
        return 0.0
    return float(min(max((1.0 - abs(estimate - truth) / truth) * 100.0, 0.0), 100.0))


def absolute_error(truth: float, estimate: float) -> float:
    """|estimate - truth| in bpm; a missing estimate counts as the whole truth."""
    if not math.isfinite(estimate):
        return float(truth)
    return float(abs(estimate - truth))


def _uniform(series: TruthSeries) -> Tuple[float, np.ndarray]:
    steps = np.diff(series.times)
    step = float(np.median(steps))
    if np.all(np.abs(steps - step) <= 0.01 * step):
        return 1.0 / step, series.values
    grid = np.arange(series.times[0], series.times[-1] + 0.5 * step, step)
    return 1.0 / step, np.interp(grid, series.times, series.values)


def truth_breath_bpm(series: TruthSeries, band: BandSpec, zero_padding: int = 4) -> float:
    """
    Breathing rate of an accelerometer series, in bpm.

    Irregularly sampled series are first interpolated onto a uniform grid.

    Raises:
        InsufficientDataError: If the series is too short for the band.
    """
    if len(series) < 2:
        raise InsufficientDataError("Accelerometer series has fewer than two samples.")
    rate, values = _uniform(series)
    return estimate_rate_fft(AmplitudeSeries(rate, values), band, zero_padding).peak_bpm


def waveform_agreement(
    csi: AmplitudeSeries, accel: TruthSeries, band: BandSpec, order: int = 4
) -> float:
    """
    Absolute correlation between a breath-band CSI waveform and the accelerometer.

    The accelerometer is interpolated onto the CSI sample times and passed
    through the same bandpass. The sign of the correlation depends on the
    geometry, so its magnitude is reported.
    """
    t = csi.start_time + np.arange(len(csi)) / csi.sample_rate
    overlap = (t >= accel.times[0]) & (t <= accel.times[-1])
    if overlap.sum() < 2:
        raise AlignmentError("CSI waveform and accelerometer series do not overlap.")
    reference = np.interp(t[overlap], accel.times, accel.values)
    reference = bandpass(AmplitudeSeries(csi.sample_rate, reference), band, order).samples
    corr = np.corrcoef(csi.samples[overlap], reference)[0, 1]
    return float(abs(corr)) if np.isfinite(corr) else 0.0


def _check_alignment(trace: CsiTrace, end: float, series: TruthSeries, name: str):
    start = float(trace.timestamps[0])
    if (
        len(series) == 0
        or series.times[0] > start + ALIGNMENT_SLACK
        or series.times[-1] < end - ALIGNMENT_SLACK
    ):
        covered = f"{series.times[0]:.2f}-{series.times[-1]:.2f}s" if len(series) else "nothing"
        raise AlignmentError(
            f"{name} covers {covered} but the trace is analysed over {start:.2f}-{end:.2f}s"
        )


def _resolve(base_dir: Path, path: str) -> Path:
    p = Path(path)
    return p if p.is_absolute() else base_dir / p


def evaluate_entry(
    index: int, entry: ManifestEntry, base_dir: Path, config: PipelineConfig
) -> Tuple[List[Dict[str, Any]], Dict[str, Any]]:
    """
    Evaluates one manifest entry.

    Returns:
        The per-window rows and a summary record with the waveform agreement.

    Raises:
        AlignmentError: If a ground-truth series does not cover the analysed windows.
        InsufficientDataError: If the trace is shorter than one window.
    """
    trace = read_trace(_resolve(base_dir, entry.trace))
    breath = read_ground_truth(_resolve(base_dir, entry.breath_truth)) if entry.breath_truth else None
    pulse = read_ground_truth(_resolve(base_dir, entry.pulse_truth)) if entry.pulse_truth else None

    window_frames = int(round(config.fft_window * trace.sample_rate))
    n_windows = trace.n_frames // window_frames
    if n_windows == 0:
        raise InsufficientDataError(
            f"'{entry.trace}' spans {trace.duration:.2f}s, shorter than one {config.fft_window}s window"
        )
    analysed_end = float(trace.timestamps[0]) + n_windows * window_frames / trace.sample_rate
    for series, name in ((breath, entry.breath_truth), (pulse, entry.pulse_truth)):
        if series is not None:
            _check_alignment(trace, analysed_end, series, name)

    rows = []
    base = {"entry": index, "participant": entry.participant, "posture": entry.posture.value}
    for k in range(n_windows):
        window = trace.slice(k * window_frames, (k + 1) * window_frames)
        estimate = estimate_vitals(window, config)
        start = float(window.timestamps[0])
        end = start + window.n_frames / window.sample_rate

        truths = []
        if breath is not None:
            breath_truth = truth_breath_bpm(
                breath.between(start, end), config.breath_band, config.zero_padding
            )
            truths.append(("breath", breath_truth, estimate.breath_bpm))
        if pulse is not None:
            readings = pulse.between(start, end).values
            pulse_truth = float(readings.mean()) if readings.size else float("nan")
            truths.append(("heart", pulse_truth, estimate.heart_bpm))

        for signal, truth, value in truths:
            if not (math.isfinite(truth) and truth > 0):
                logger.warning(f"Entry {index} window {k}: no usable {signal} truth; skipped.")
                continue
            rows.append(
                {
                    **base,
                    "signal": signal,
                    "window_start": start,
                    "window_end": end,
                    "truth_bpm": truth,
                    "estimate_bpm": value,
                    "abs_error": absolute_error(truth, value),
                    "accuracy": accuracy_percent(truth, value),
                    "failed": not math.isfinite(value),
                }
            )

    agreement = float("nan")
    if breath is not None:
        agreement = waveform_agreement(
            breathing_waveform(trace, config), breath, config.breath_band, config.butterworth_order
        )
    summary = {**base, "windows": n_windows, "waveform_agreement": agreement}
    logger.info(f"Entry {index} ('{entry.trace}'): {n_windows} windows, agreement {agreement:.3f}")
    return rows, summary


def _evaluate_job(job: Tuple[int, Dict[str, Any], str, Dict[str, Any]]):
    index, entry, base_dir, config = job
    return evaluate_entry(
        index, ManifestEntry.model_validate(entry), Path(base_dir), PipelineConfig.model_validate(config)
    )


@dataclass
class EvalReport:
    """
    Per-window rows plus per-entry waveform agreement.

    Attributes:
        rows (pd.DataFrame): One row per window and vital sign (see ROW_COLUMNS).
        entries (pd.DataFrame): One row per manifest entry.
    """

    rows: pd.DataFrame
    entries: pd.DataFrame

    @classmethod
    def from_records(
        cls, rows: Sequence[Dict[str, Any]], entries: Sequence[Dict[str, Any]] = ()
    ) -> "EvalReport":
        frame = pd.DataFrame(list(rows), columns=ROW_COLUMNS)
        estimates = pd.to_numeric(frame["estimate_bpm"], errors="coerce").astype(float)
        failed = ~np.isfinite(estimates.to_numpy())
        frame["failed"] = failed
        frame.loc[failed, "abs_error"] = frame.loc[failed, "truth_bpm"]
        return cls(frame, pd.DataFrame(list(entries)))

    def for_signal(self, signal: str) -> pd.DataFrame:
        return self.rows[self.rows["signal"] == signal]

    def mean_abs_error(self, signal: str) -> float:
        return float(self.for_signal(signal)["abs_error"].mean())

    def accuracy(self, signal: str) -> float:
        return float(self.for_signal(signal)["accuracy"].mean())

    @property
    def summary(self) -> pd.DataFrame:
        """Mean error and accuracy per signal, participant and posture, plus overall rows."""
        if self.rows.empty:
            return pd.DataFrame(
                columns=["signal", "participant", "posture", "windows", "failed", "mean_abs_error", "accuracy"]
            )
        aggregations = {
            "windows": ("abs_error", "size"),
            "failed": ("failed", "sum"),
            "mean_abs_error": ("abs_error", "mean"),
            "accuracy": ("accuracy", "mean"),
        }
        grouped = (
            self.rows.groupby(["signal", "participant", "posture"], sort=True)
            .agg(**aggregations)
            .reset_index()
        )
        overall = self.rows.groupby("signal", sort=True).agg(**aggregations).reset_index()
        overall["participant"] = "all"
        overall["posture"] = "all"
        return pd.concat([grouped, overall[grouped.columns]], ignore_index=True)

    def to_text(self) -> str:
        lines = ["--- Evaluation Summary ---", self.summary.to_string(index=False, float_format="%.3f")]
        if not self.entries.empty:
            lines += ["", "--- Waveform Agreement ---", self.entries.to_string(index=False, float_format="%.3f")]
        return "\n".join(lines)

    def to_csv(self, path: str):
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        self.rows.to_csv(path, index=False)
        logger.info(f"Wrote {len(self.rows)} evaluation rows to '{path}'")


class Evaluator:
    """
    Evaluates the pipeline against the ground truth listed in a manifest.
    """

    def __init__(self, config: Optional[PipelineConfig] = None, max_workers: Optional[int] = None):
        """
        Initializes the Evaluator.

        Args:
            config: Pipeline parameters used for every window.
            max_workers: Worker processes; entries run in-process when 1.
        """
        self.config = config or PipelineConfig()
        self.max_workers = max_workers if max_workers is not None else min(4, os.cpu_count() or 1)

    def evaluate(self, manifest_path: str) -> EvalReport:
        """
        Evaluates every entry of a manifest.

        Relative paths in the manifest are resolved against its directory.
        """
        logger.info(f"Starting evaluation for manifest: '{manifest_path}'")
        manifest = load_manifest(manifest_path)
        base_dir = str(Path(manifest_path).parent)
        config = self.config.model_dump(mode="json")
        jobs = [
            (i, entry.model_dump(mode="json"), base_dir, config)
            for i, entry in enumerate(manifest.entries)
        ]

        if self.max_workers > 1 and len(jobs) > 1:
            logger.info(f"Using {self.max_workers} workers for {len(jobs)} entries.")
            with ProcessPoolExecutor(max_workers=self.max_workers) as executor:
                results = list(executor.map(_evaluate_job, jobs))
        else:
            results = [_evaluate_job(job) for job in jobs]

        rows = [row for entry_rows, _ in results for row in entry_rows]
        report = EvalReport.from_records(rows, [summary for _, summary in results])
        for signal in ("breath", "heart"):
            if not report.for_signal(signal).empty:
                logger.info(
                    f"{signal}: mean abs error {report.mean_abs_error(signal):.3f} bpm, "
                    f"accuracy {report.accuracy(signal):.3f}%"
                )
        return report
