"""
Vital-sign extraction pipeline.

The chain applied to a trace is: pick the most variable subcarrier of the
best antenna, remove outliers with a Hampel filter, split the cleaned
amplitude into a breathing band and a heartbeat band with zero-phase
Butterworth filters, and read each rate off the FFT peak inside its band.
"""

import logging
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.fft import rfft
from scipy.ndimage import median_filter
from scipy.signal import butter, get_window, sosfiltfilt

from ..utils.config_models import BandSpec, PipelineConfig
from ..utils.data_models import AmplitudeSeries, CsiTrace, SpectrumEstimate, VitalEstimate
from ..utils.errors import DomainError, InsufficientDataError

logger = logging.getLogger(__name__)

MAD_SCALE = 1.4826
FLAT_TOLERANCE = 1e-9
MAD_BLOCK_ROWS = 4096


def _check_not_empty(trace: CsiTrace):
    if trace.n_frames == 0:
        raise DomainError("Trace has no frames.")


def select_subcarrier(trace: CsiTrace, antenna: int = 0) -> int:
    """Index of the subcarrier whose amplitude varies most on `antenna` (lowest index on ties)."""
    _check_not_empty(trace)
    variances = np.var(trace.amplitudes(antenna), axis=0)
    return int(np.argmax(variances))


def select_stream(trace: CsiTrace) -> int:
    """Receive antenna whose best subcarrier has the largest amplitude variance."""
    _check_not_empty(trace)
    variances = np.var(np.abs(trace.values).astype(np.float64), axis=0)
    return int(np.argmax(variances.max(axis=1)))


def amplitude_series(trace: CsiTrace, antenna: int, subcarrier: int) -> AmplitudeSeries:
    _check_not_empty(trace)
    if not 0 <= subcarrier < trace.n_subcarriers:
        raise DomainError(f"Subcarrier {subcarrier} out of range (0..{trace.n_subcarriers - 1})")
    return AmplitudeSeries(
        trace.sample_rate,
        trace.amplitudes(antenna)[:, subcarrier],
        start_time=float(trace.timestamps[0]),
    )


def _window_mad(x: np.ndarray, median: np.ndarray, window: int) -> np.ndarray:
    """median(|w - median(w)|) over the edge-extended window centred on each sample."""
    windows = sliding_window_view(np.pad(x, window // 2, mode="edge"), window)
    mad = np.empty_like(median)
    for start in range(0, len(x), MAD_BLOCK_ROWS):
        stop = start + MAD_BLOCK_ROWS
        mad[start:stop] = np.median(np.abs(windows[start:stop] - median[start:stop, None]), axis=1)
    return mad


def hampel_filter(series: AmplitudeSeries, window: int, nsigma: float = 3.0) -> AmplitudeSeries:
    """
    Replaces outliers by the local median.

    A sample is an outlier when it deviates from the median of the `window`
    samples centred on it by more than nsigma * 1.4826 * MAD, the MAD being
    taken over that same window around its median. The series is extended
    with its end values.

    Raises:
        DomainError: If window is even or below 3, or nsigma is not positive.
    """
    if window < 3 or window % 2 == 0:
        raise DomainError(f"Hampel window must be odd and >= 3, got {window}")
    if not nsigma > 0:
        raise DomainError(f"nsigma must be positive, got {nsigma}")

    x = np.asarray(series.samples, dtype=np.float64)
    median = median_filter(x, size=window, mode="nearest")
    mad = _window_mad(x, median, window)
    outliers = np.abs(x - median) > nsigma * MAD_SCALE * mad
    logger.debug(f"Hampel filter replaced {int(outliers.sum())} of {len(x)} samples")
    return series.with_samples(np.where(outliers, median, x))


def bandpass(series: AmplitudeSeries, band: BandSpec, order: int = 4) -> AmplitudeSeries:
    """
    Zero-phase Butterworth bandpass (forward-backward, second-order sections).

    The mean is removed first, so the output is invariant to a constant offset.

    Raises:
        DomainError: If the band is not below Nyquist or the order is not positive.
    """
    band.check_nyquist(series.sample_rate)
    if order < 1:
        raise DomainError(f"Filter order must be positive, got {order}")
    sos = butter(order, [band.low, band.high], btype="bandpass", fs=series.sample_rate, output="sos")
    centred = series.samples - series.samples.mean()
    return series.with_samples(sosfiltfilt(sos, centred))


def estimate_rate_fft(
    series: AmplitudeSeries,
    band: BandSpec,
    zero_padding: int = 4,
    exclude: Sequence[float] = (),
    exclude_halfwidth: float = 0.0,
) -> SpectrumEstimate:
    """
    Finds the strongest spectral line inside `band`.

    The mean-removed series is Hann-windowed and zero-padded by
    `zero_padding`; bins with low <= f <= high are searched, skipping any
    within `exclude_halfwidth` Hz of a frequency in `exclude`. Confidence is
    the peak magnitude over the median magnitude of the whole band, excluded
    bins included. A series with no
    spectral content gives a NaN peak and confidence 0.

    Raises:
        InsufficientDataError: If the series is shorter than two periods of band.low.
        DomainError: On a band above Nyquist or zero_padding < 1.
    """
    band.check_nyquist(series.sample_rate)
    if zero_padding < 1:
        raise DomainError(f"zero_padding must be >= 1, got {zero_padding}")
    min_duration = 2.0 / band.low
    if series.duration < min_duration - 0.5 / series.sample_rate:
        raise InsufficientDataError(
            f"Need at least {min_duration:.1f}s of samples for a {band.low} Hz band edge, "
            f"got {series.duration:.2f}s"
        )

    n = len(series)
    n_fft = n * zero_padding
    x = (series.samples - series.samples.mean()) * get_window("hann", n)
    magnitudes = np.abs(rfft(x, n=n_fft))
    frequencies = np.arange(magnitudes.size) * series.sample_rate / n_fft

    in_band = (frequencies >= band.low) & (frequencies <= band.high)
    allowed = in_band.copy()
    for f in exclude:
        if np.isfinite(f):
            allowed &= np.abs(frequencies - f) > exclude_halfwidth

    band_freqs = frequencies[in_band]
    band_mags = magnitudes[in_band]
    candidates = magnitudes[allowed]
    if candidates.size == 0 or not np.max(candidates) > 0:
        return SpectrumEstimate(band_freqs, band_mags, float("nan"), 0.0)

    peak_index = int(np.flatnonzero(allowed)[np.argmax(candidates)])
    peak = magnitudes[peak_index]
    median = float(np.median(band_mags))
    confidence = float(peak / median) if median > 0 else float("inf")
    return SpectrumEstimate(band_freqs, band_mags, float(frequencies[peak_index]), confidence)


def _is_flat(series: AmplitudeSeries) -> bool:
    return float(np.std(series.samples)) <= FLAT_TOLERANCE * abs(float(np.mean(series.samples)))


def _check_bands(config: PipelineConfig, sample_rate: float):
    config.breath_band.check_nyquist(sample_rate)
    config.heart_band.check_nyquist(sample_rate)


def _analysis_window(trace: CsiTrace, fft_window: float) -> CsiTrace:
    needed = int(round(fft_window * trace.sample_rate))
    if trace.n_frames < needed:
        raise InsufficientDataError(
            f"Trace spans {trace.duration:.2f}s, the analysis window needs {fft_window}s"
        )
    return trace.slice(trace.n_frames - needed, trace.n_frames)


def _select(trace: CsiTrace, config: PipelineConfig) -> tuple:
    antenna = config.antenna if config.antenna is not None else select_stream(trace)
    if antenna >= trace.n_antennas:
        raise DomainError(f"Antenna {antenna} out of range (0..{trace.n_antennas - 1})")
    return antenna, select_subcarrier(trace, antenna)


@dataclass(frozen=True)
class VitalAnalysis:
    """An estimate together with the band spectra it was read from (None for a flat stream)."""

    estimate: VitalEstimate
    breath: Optional[SpectrumEstimate]
    heart: Optional[SpectrumEstimate]


def analyse_vitals(trace: CsiTrace, config: Optional[PipelineConfig] = None) -> VitalAnalysis:
    """
    Runs the full chain on the last `fft_window` seconds of a trace.

    Args:
        trace (CsiTrace): At least `config.fft_window` seconds of frames.
        config (Optional[PipelineConfig]): Pipeline parameters; defaults apply when None.

    Returns:
        VitalAnalysis: The estimate and both band spectra. A stream that is
            flat after outlier removal yields NaN rates with confidence 0.

    Raises:
        InsufficientDataError: If the trace is shorter than the analysis window.
    """
    config = config or PipelineConfig()
    _check_not_empty(trace)
    _check_bands(config, trace.sample_rate)
    window = _analysis_window(trace, config.fft_window)
    antenna, subcarrier = _select(window, config)

    raw = amplitude_series(window, antenna, subcarrier)
    cleaned = hampel_filter(raw, config.resolve_hampel_window(window.sample_rate), config.hampel_nsigma)
    start, end = float(window.timestamps[0]), float(window.timestamps[-1])

    if _is_flat(cleaned):
        logger.warning(f"Stream antenna {antenna}/subcarrier {subcarrier} is flat; no vital signs.")
        nan = float("nan")
        estimate = VitalEstimate(
            nan, nan, 0.0, 0.0, start, end, antenna, subcarrier, config.min_confidence
        )
        return VitalAnalysis(estimate, None, None)

    breath = estimate_rate_fft(
        bandpass(cleaned, config.breath_band, config.butterworth_order),
        config.breath_band,
        config.zero_padding,
    )
    # Breathing harmonics can land inside the heartbeat band.
    harmonics = [2.0 * breath.peak_freq, 3.0 * breath.peak_freq]
    heart = estimate_rate_fft(
        bandpass(cleaned, config.heart_band, config.butterworth_order),
        config.heart_band,
        config.zero_padding,
        exclude=harmonics,
        exclude_halfwidth=config.harmonic_guard_bins / cleaned.duration,
    )

    estimate = VitalEstimate(
        breath_bpm=float(breath.peak_bpm),
        heart_bpm=float(heart.peak_bpm),
        breath_confidence=breath.confidence,
        heart_confidence=heart.confidence,
        window_start=start,
        window_end=end,
        antenna=antenna,
        subcarrier=subcarrier,
        min_confidence=config.min_confidence,
    )
    logger.debug(
        f"Window {start:.3f}-{end:.3f}s: breath {estimate.breath_bpm:.2f} bpm "
        f"(conf {breath.confidence:.1f}), heart {estimate.heart_bpm:.2f} bpm "
        f"(conf {heart.confidence:.1f})"
    )
    return VitalAnalysis(estimate, breath, heart)


def estimate_vitals(trace: CsiTrace, config: Optional[PipelineConfig] = None) -> VitalEstimate:
    """Breathing and heart rate over the last `fft_window` seconds of a trace."""
    return analyse_vitals(trace, config).estimate


def breathing_waveform(trace: CsiTrace, config: Optional[PipelineConfig] = None) -> AmplitudeSeries:
    """Breath-band waveform of the selected stream over the whole trace."""
    config = config or PipelineConfig()
    _check_not_empty(trace)
    antenna, subcarrier = _select(trace, config)
    cleaned = hampel_filter(
        amplitude_series(trace, antenna, subcarrier),
        config.resolve_hampel_window(trace.sample_rate),
        config.hampel_nsigma,
    )
    return bandpass(cleaned, config.breath_band, config.butterworth_order)
