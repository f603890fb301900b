"""Waveform similarity: Pearson correlation after cross-correlation alignment.

Correlation alone is blind to scaling and DC shift but sensitive to time
offset, so the measured signal is first aligned to the ideal by scanning
lags of a zero-padded (linear, not circular) cross-correlation, then the
two are correlated over their overlap.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import DegenerateInputError
from .trace import Trace


@dataclass(frozen=True)
class SimilarityResult:
    rho: float
    lag: int
    aligned_length: int


def pearson(x, y) -> float:
    """Covariance over the product of standard deviations."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.size != y.size or x.size < 2:
        raise ValueError("pearson requires equal-length sequences of >= 2 items")
    dx = x - x.mean()
    dy = y - y.mean()
    sx = np.sqrt(np.sum(dx * dx))
    sy = np.sqrt(np.sum(dy * dy))
    if sx == 0 or sy == 0:
        raise DegenerateInputError("pearson undefined for zero-variance input")
    return float(np.sum(dx * dy) / (sx * sy))


def best_lag(a, b, max_lag: int | None = None) -> int:
    """Lag of b relative to a maximizing their linear cross-correlation.

    Positive lag means b is delayed: b[n + lag] lines up with a[n]. The scan
    window is +/- half the longer signal unless max_lag narrows it; exact
    ties resolve toward the smallest |lag|.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.size < 2 or b.size < 2:
        raise ValueError("best_lag requires sequences of >= 2 items")
    corr = np.correlate(a, b, mode="full")
    # index i corresponds to displacement d = i - (len(b) - 1) of a past b,
    # i.e. b[n + d] aligned with a[n] has correlation corr[len(b) - 1 - d].
    lags = (b.size - 1) - np.arange(corr.size)
    if max_lag is None:
        max_lag = max(a.size, b.size) // 2
    window = np.abs(lags) <= max_lag
    if not window.any():
        return 0
    corr = corr[window]
    lags = lags[window]
    peak = corr.max()
    candidates = lags[corr == peak]
    order = np.lexsort((candidates, np.abs(candidates)))
    return int(candidates[order[0]])


def _overlap(measured: np.ndarray, ideal: np.ndarray, lag: int):
    lo = max(0, -lag)
    hi = min(measured.size, ideal.size - lag)
    return measured[lo:hi], ideal[lo + lag : hi + lag]


def similarity(measured: Trace, ideal: Trace) -> SimilarityResult:
    """Pearson correlation of measured against the lag-aligned ideal.

    The ideal is resampled to the measured rate first; after shifting by the
    best lag the signals are truncated to their overlap (no wrap-around).
    """
    m = np.asarray(measured.samples)
    i = np.asarray(ideal.samples)
    if ideal.sample_rate != measured.sample_rate:
        n_out = int(round(ideal.duration * measured.sample_rate))
        t_out = np.arange(n_out) / measured.sample_rate
        i = np.interp(t_out, np.arange(i.size) / ideal.sample_rate, i)
    # lag scan on detrended copies so a DC pedestal cannot drag the peak
    lag = best_lag(m - m.mean(), i - i.mean())
    m_seg, i_seg = _overlap(m, i, lag)
    if m_seg.size < 2:
        raise ValueError(f"aligned overlap too short ({m_seg.size} samples)")
    return SimilarityResult(rho=pearson(m_seg, i_seg), lag=lag,
                            aligned_length=m_seg.size)
