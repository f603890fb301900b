"""Core sampled-signal data model plus CSV/WAV ingestion and spectra.

A Trace is the universal currency of the toolkit: a uniformly sampled,
real-valued signal with an explicit sample rate and start time. Traces are
immutable after construction (the sample buffer is marked read-only), so
they can be shared freely across threads.
"""

from __future__ import annotations

import os
import wave
from dataclasses import dataclass, field

import numpy as np

from .exceptions import TraceFormatError

# Relative timestamp jitter tolerated before a CSV is rejected as non-uniform.
CSV_JITTER_TOLERANCE = 1e-6

# 16-bit PCM full scale; -32768..32767 maps into [-1, 1).
PCM16_SCALE = 32768.0


@dataclass(frozen=True)
class Trace:
    """Uniformly sampled real signal.

    samples are volts for simulated signals, or dimensionless for imported
    audio. t0 is the time of the first sample in seconds.
    """

    samples: np.ndarray
    sample_rate: float
    t0: float = 0.0

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1 or samples.size == 0:
            raise ValueError("trace requires a non-empty 1-D sample sequence")
        if not np.isfinite(samples).all():
            raise ValueError("trace samples must be finite (no NaN/Inf)")
        if not (self.sample_rate > 0):
            raise ValueError(f"sample_rate must be > 0, got {self.sample_rate}")
        samples = samples.copy()
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)

    def __len__(self):
        return self.samples.size

    @property
    def duration(self) -> float:
        """Length of the sampled span in seconds (n / sample_rate)."""
        return self.samples.size / self.sample_rate

    @property
    def times(self) -> np.ndarray:
        return self.t0 + np.arange(self.samples.size) / self.sample_rate


@dataclass(frozen=True)
class Spectrum:
    """Single-sided amplitude spectrum up to Nyquist.

    Interior bin magnitudes are calibrated so that a pure tone of amplitude A
    at an exact bin frequency reports magnitude A. Under that normalization
    the signal energy identity is

        sum(x**2) == n*(m[0]**2 + m[-1]**2) + (n/2)*sum(m[1:-1]**2)

    for even-length input (odd lengths have no Nyquist bin), which is what
    energy() evaluates.
    """

    frequencies: np.ndarray
    magnitudes: np.ndarray
    resolution: float
    _n_samples: int = field(repr=False, default=0)

    def __post_init__(self):
        freqs = np.asarray(self.frequencies, dtype=np.float64)
        mags = np.asarray(self.magnitudes, dtype=np.float64)
        if freqs.shape != mags.shape:
            raise ValueError("frequency/magnitude length mismatch")
        if np.any(np.diff(freqs) <= 0):
            raise ValueError("frequencies must be strictly increasing")
        if np.any(mags < 0):
            raise ValueError("magnitudes must be non-negative")
        freqs.setflags(write=False)
        mags.setflags(write=False)
        object.__setattr__(self, "frequencies", freqs)
        object.__setattr__(self, "magnitudes", mags)

    @property
    def bins(self):
        """Bins as (frequency_hz, magnitude) pairs."""
        return list(zip(self.frequencies.tolist(), self.magnitudes.tolist()))

    def energy(self) -> float:
        """Total energy under the declared normalization (equals sum(x**2))."""
        n = self._n_samples
        weights = np.full(self.magnitudes.size, n / 2.0)
        weights[0] = n
        if n % 2 == 0:
            weights[-1] = n
        return float(np.sum(weights * self.magnitudes**2))

    def magnitude_at(self, frequency: float) -> float:
        """Magnitude of the bin nearest to the requested frequency."""
        idx = int(np.argmin(np.abs(self.frequencies - frequency)))
        return float(self.magnitudes[idx])

    def peak_frequency(self, exclude_dc: bool = True) -> float:
        """Frequency of the strongest bin, optionally ignoring DC."""
        mags = self.magnitudes.copy()
        if exclude_dc:
            mags[0] = 0.0
        return float(self.frequencies[int(np.argmax(mags))])

    def to_csv(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("frequency_hz,magnitude\n")
            for f, m in zip(self.frequencies, self.magnitudes):
                fh.write(f"{float(f)!r},{float(m)!r}\n")


def spectrum(trace: Trace, window: str = "rect") -> Spectrum:
    """Magnitude spectrum of a trace up to Nyquist.

    Rectangular windowing by default; pass window="hann" to taper (with
    amplitude correction). Bin resolution is sample_rate / len(trace).
    """
    x = trace.samples
    n = x.size
    if n < 2:
        raise ValueError("spectrum requires at least 2 samples")
    if window == "hann":
        w = np.hanning(n)
        scale = n / np.sum(w)
        x = x * w * scale
    elif window != "rect":
        raise ValueError(f"unknown window {window!r}")
    raw = np.abs(np.fft.rfft(x))
    mags = raw * (2.0 / n)
    mags[0] = raw[0] / n
    if n % 2 == 0:
        mags[-1] = raw[-1] / n
    freqs = np.fft.rfftfreq(n, d=1.0 / trace.sample_rate)
    return Spectrum(freqs, mags, trace.sample_rate / n, _n_samples=n)


def _parse_csv(path) -> tuple[np.ndarray, np.ndarray]:
    times, values = [], []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped:
                continue
            parts = stripped.split(",")
            if len(parts) != 2:
                raise TraceFormatError(
                    f"{path}:{lineno}: expected 'time,value', got {stripped!r}"
                )
            try:
                t, v = float(parts[0]), float(parts[1])
            except ValueError:
                if lineno == 1:  # optional header row
                    continue
                raise TraceFormatError(
                    f"{path}:{lineno}: non-numeric row {stripped!r}"
                ) from None
            times.append(t)
            values.append(v)
    if len(values) < 2:
        raise TraceFormatError(f"{path}: need at least 2 data rows, got {len(values)}")
    return np.asarray(times), np.asarray(values)


def _read_csv(path) -> Trace:
    times, values = _parse_csv(path)
    dt = np.diff(times)
    mean_dt = (times[-1] - times[0]) / (times.size - 1)
    if mean_dt <= 0:
        raise TraceFormatError(f"{path}: timestamps must be strictly increasing")
    jitter = np.max(np.abs(dt - mean_dt)) / mean_dt
    if jitter > CSV_JITTER_TOLERANCE:
        raise TraceFormatError(
            f"{path}: non-uniform timestamps (relative jitter {jitter:.3g} "
            f"exceeds {CSV_JITTER_TOLERANCE:g})"
        )
    return Trace(values, sample_rate=1.0 / mean_dt, t0=float(times[0]))


def _read_wav(path) -> Trace:
    try:
        with wave.open(str(path), "rb") as wf:
            if wf.getnchannels() != 1:
                raise TraceFormatError(f"{path}: only mono WAV supported")
            if wf.getsampwidth() != 2:
                raise TraceFormatError(f"{path}: only 16-bit PCM WAV supported")
            rate = wf.getframerate()
            frames = wf.readframes(wf.getnframes())
    except wave.Error as exc:
        raise TraceFormatError(f"{path}: byte offset 0: {exc}") from exc
    pcm = np.frombuffer(frames, dtype="<i2").astype(np.float64)
    if pcm.size == 0:
        raise TraceFormatError(f"{path}: WAV contains no frames")
    return Trace(pcm / PCM16_SCALE, sample_rate=float(rate))


def read_trace(path, format: str | None = None) -> Trace:
    """Read a trace from CSV (time_seconds,value) or mono 16-bit PCM WAV.

    CSV sample values are taken verbatim; the rate comes from the timestamp
    grid. WAV integer samples are scaled linearly into [-1, 1].
    """
    if format is None:
        format = os.path.splitext(str(path))[1].lstrip(".").lower()
    if format == "csv":
        return _read_csv(path)
    if format == "wav":
        return _read_wav(path)
    raise ValueError(f"unsupported trace format {format!r}")


def write_trace(trace: Trace, path, format: str = "csv") -> None:
    """Write a trace as CSV; values use repr so a read round-trips exactly."""
    if format != "csv":
        raise ValueError(f"unsupported output format {format!r}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("time_seconds,value\n")
        dt = 1.0 / trace.sample_rate
        for i, v in enumerate(trace.samples):
            fh.write(f"{trace.t0 + i * dt!r},{float(v)!r}\n")
