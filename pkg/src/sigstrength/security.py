"""Security predicates and critical-threshold estimation.

Sampling error at a conversion instant is the absolute difference between
the digitized value and the true analog signal. A system is universally
secure at confidence eps if those errors stay inside the quantization plus
noise budget with probability at least (1+eps)/2; it is selectively secure
against a target waveform if the errors versus signal-plus-target exceed
that budget often enough, i.e. the injection fails. Both predicates are
monotone in eps, so each has a critical threshold separating secure from
insecure verdicts; find_critical_epsilon locates the selective one by the
binary search below, and compare() drives the whole estimation procedure
from repeated measurements.

Two threshold modes exist. strict_pseudocode normalizes errors by the
noise deviation alone; eq5_with_q additionally adds the quantization bound
q to the threshold, which is the definitional form and the default (the
difference is negligible whenever q << sigma).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .exceptions import DegenerateInputError
from .noise import NoiseModel
from .adcmodel import DigitizedTrace
from .similarity import best_lag
from .trace import Trace

MODES = ("strict_pseudocode", "eq5_with_q")

SEARCH_DELTA = 1e-4
MAX_SEARCH_ITERATIONS = 200


@dataclass(frozen=True)
class MeasurementSet:
    """Repeated captures: one reference, >= 1 estimation, optional validation.

    All traces must share rate and length. Estimation traces feed the noise
    estimate; validation traces are held out (typically re-used as target
    waveforms to sanity check that the system injects itself well).
    """

    reference: Trace
    estimation: tuple
    validation: tuple = ()

    def __post_init__(self):
        estimation = tuple(self.estimation)
        validation = tuple(self.validation)
        if len(estimation) < 1:
            raise ValueError("need at least one estimation trace")
        for t in (*estimation, *validation):
            if t.sample_rate != self.reference.sample_rate or len(t) != len(
                self.reference
            ):
                raise ValueError("all traces must share rate and length")
        object.__setattr__(self, "estimation", estimation)
        object.__setattr__(self, "validation", validation)

    @classmethod
    def from_traces(cls, traces, n_estimation: int | None = None) -> "MeasurementSet":
        """First trace is the reference; next n_estimation estimate noise."""
        traces = list(traces)
        if len(traces) < 2:
            raise ValueError("need at least 2 traces")
        if n_estimation is None:
            n_estimation = len(traces) - 1
        if not 1 <= n_estimation <= len(traces) - 1:
            raise ValueError("n_estimation out of range")
        return cls(
            reference=traces[0],
            estimation=tuple(traces[1 : 1 + n_estimation]),
            validation=tuple(traces[1 + n_estimation :]),
        )


@dataclass(frozen=True)
class CriticalEpsilon:
    """Binary-search outcome; converged is False when the iteration cap hit
    and the best bracketed value was returned instead."""

    eps: float
    iterations: int
    converged: bool


@dataclass(frozen=True)
class SecurityReport:
    sigma_noise: float
    q: float
    eps_selective: dict
    eps_universal: float
    iterations: int
    mode: str
    noise_kind: str = "gaussian"

    def to_dict(self) -> dict:
        from . import __version__

        return {
            "sigma_noise": self.sigma_noise,
            "q": self.q,
            "eps_selective": dict(self.eps_selective),
            "eps_universal": self.eps_universal,
            "iterations": self.iterations,
            "mode": self.mode,
            "noise_kind": self.noise_kind,
            "toolkit_version": __version__,
        }


def sampling_error(s: Trace, digitized: DigitizedTrace, tau: float | None = None):
    """Per-conversion errors |digitized(t_k + tau) - s(t_k)|.

    Returned sparse as (conversion_times, errors); the error is defined as 0
    between conversions. s is evaluated at conversion starts by linear
    interpolation, so it must be sampled densely enough to support that.
    """
    if tau is None:
        tau = 0.0
    starts = (digitized.t0 - tau) + np.arange(len(digitized)) / digitized.sample_rate
    if starts[0] < s.t0 - 1e-12 or starts[-1] > s.t0 + s.duration:
        raise ValueError("digitized conversions fall outside the span of s")
    true_values = np.interp(starts, s.times, s.samples)
    return starts, np.abs(digitized.volts - true_values)


def _band_threshold(q: float, noise: NoiseModel, prob: float) -> float:
    # the infimum convention sends N^-1(1) to +inf for unbounded noise,
    # which makes selective security at eps = 0 unattainable, as it must be
    if prob >= 1.0:
        if noise.kind == "zero":
            return q
        if noise.kind == "empirical":
            return q + float(np.max(np.abs(noise.samples)))
        return math.inf
    return q + noise.inverse(prob)


def is_universally_secure(errors, q: float, noise: NoiseModel, eps: float,
                          slack: float = 0.0) -> bool:
    """True iff the fraction of errors >= q + N^-1((1+eps)/2) is <= (1+eps)/2.

    slack loosens the probability bound for finite-sample checks.
    """
    if not 0 <= eps < 1:
        raise ValueError("eps must be in [0, 1)")
    errors = np.asarray(errors, dtype=np.float64)
    if errors.size == 0:
        raise ValueError("empty error sequence")
    threshold = _band_threshold(q, noise, (1.0 + eps) / 2.0)
    p_error = float(np.mean(errors >= threshold))
    return p_error <= (1.0 + eps) / 2.0 + slack


def is_selectively_secure(errors, q: float, noise: NoiseModel, eps: float,
                          slack: float = 0.0) -> bool:
    """True iff the fraction of errors >= q + N^-1(1 - eps/2) exceeds 1 - eps/2.

    Large errors mean the output does not carry the target waveform, so the
    injection failed and the system counts as secure against it.
    """
    if not 0 <= eps < 1:
        raise ValueError("eps must be in [0, 1)")
    errors = np.asarray(errors, dtype=np.float64)
    if errors.size == 0:
        raise ValueError("empty error sequence")
    threshold = _band_threshold(q, noise, 1.0 - eps / 2.0)
    p_error = float(np.mean(errors >= threshold))
    return p_error > 1.0 - eps / 2.0 - slack


def _normalized_threshold(n_inv: float, sigma: float, q: float, mode: str) -> float:
    if mode == "strict_pseudocode":
        return n_inv
    return q / sigma + n_inv


def find_critical_epsilon(
    measured,
    ideal,
    sigma: float,
    q: float = 0.0,
    delta: float = SEARCH_DELTA,
    mode: str = "eq5_with_q",
    max_iterations: int = MAX_SEARCH_ITERATIONS,
) -> CriticalEpsilon:
    """Critical selective threshold for one target waveform.

    Normalizes |measured - ideal| by sigma and binary-searches mid in
    [0.5, 1], where mid plays the role of (2 - eps)/2: at each step the
    standard-normal percentile point n_inv = ppf((1 + mid)/2) sets the
    threshold, p_error is the fraction of normalized errors at or above it,
    and the search stops once |p_error - mid| < delta with p_error <= mid,
    returning eps = 2 - 2*mid. The loop is capped; on cap the best
    bracketed mid seen is returned with converged=False.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    if sigma <= 0:
        raise DegenerateInputError(
            "sigma must be > 0; a noiseless system is scored by direct comparison"
        )
    measured = np.asarray(measured, dtype=np.float64)
    ideal = np.asarray(ideal, dtype=np.float64)
    if measured.shape != ideal.shape:
        raise ValueError("measured and ideal must have equal length")
    errors = np.abs(measured - ideal) / sigma

    lo, hi = 0.5, 1.0
    iterations = 0
    best_gap, best_mid = np.inf, None
    while lo < hi and iterations < max_iterations:
        iterations += 1
        mid = (lo + hi) / 2.0
        n_inv = float(special.ndtri((1.0 + mid) / 2.0))
        p_error = float(np.mean(errors >= _normalized_threshold(n_inv, sigma, q, mode)))
        gap = abs(p_error - mid)
        if p_error <= mid and gap < best_gap:
            best_gap, best_mid = gap, mid
        if gap < delta and p_error <= mid:
            return CriticalEpsilon(eps=2.0 - 2.0 * mid, iterations=iterations,
                                   converged=True)
        if p_error < mid:
            hi = mid
        else:
            lo = mid
    mid = best_mid if best_mid is not None else (lo + hi) / 2.0
    return CriticalEpsilon(eps=2.0 - 2.0 * mid, iterations=iterations,
                           converged=False)


def find_critical_epsilon_universal(
    measured,
    ideal,
    sigma: float,
    q: float = 0.0,
    delta: float = SEARCH_DELTA,
    mode: str = "eq5_with_q",
    max_iterations: int = MAX_SEARCH_ITERATIONS,
) -> CriticalEpsilon:
    """Critical universal threshold, searched directly.

    Runs its own binary search over m = (1 + eps)/2 in [0.5, 1] against the
    universal predicate (fraction of normalized errors >= threshold(m)
    compared to m) and returns eps = 2*m - 1. Kept independent of the
    selective search so the duality eps_c = 1 - eps_c(zero waveform) can be
    verified by computing both sides separately.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    if sigma <= 0:
        raise DegenerateInputError("sigma must be > 0")
    measured = np.asarray(measured, dtype=np.float64)
    ideal = np.asarray(ideal, dtype=np.float64)
    if measured.shape != ideal.shape:
        raise ValueError("measured and ideal must have equal length")
    errors = np.abs(measured - ideal) / sigma

    lo, hi = 0.5, 1.0
    iterations = 0
    best_gap, best_m = np.inf, None
    while lo < hi and iterations < max_iterations:
        iterations += 1
        m = (lo + hi) / 2.0
        n_inv = float(special.ndtri((1.0 + m) / 2.0))
        p_error = float(np.mean(errors >= _normalized_threshold(n_inv, sigma, q, mode)))
        gap = abs(p_error - m)
        if p_error <= m and gap < best_gap:
            best_gap, best_m = gap, m
        if gap < delta and p_error <= m:
            return CriticalEpsilon(eps=2.0 * m - 1.0, iterations=iterations,
                                   converged=True)
        if p_error < m:
            hi = m
        else:
            lo = m
    m = best_m if best_m is not None else (lo + hi) / 2.0
    return CriticalEpsilon(eps=2.0 * m - 1.0, iterations=iterations,
                           converged=False)


def _detrend(x: np.ndarray) -> np.ndarray:
    return x - x.mean()


def _rms(x: np.ndarray) -> float:
    return float(np.sqrt(np.mean(np.square(x))))


def _scale_to(x: np.ndarray, target_rms: float) -> np.ndarray:
    rms = _rms(x)
    if rms == 0:
        raise DegenerateInputError("cannot RMS-scale an all-zero signal")
    return x * (target_rms / rms)


def _align_to(x: np.ndarray, ref: np.ndarray):
    lag = best_lag(ref, x)
    lo = max(0, -lag)
    hi = min(ref.size, x.size - lag)
    if hi - lo < 2:
        raise ValueError("aligned overlap too short")
    return ref[lo:hi], x[lo + lag : hi + lag]


def compare(
    measurements: MeasurementSet,
    ideals,
    mode: str = "eq5_with_q",
    q: float = 0.0,
    delta: float = SEARCH_DELTA,
) -> SecurityReport:
    """Estimate noise from repeated measurements and score target waveforms.

    The reference is detrended (mean removed); estimation traces and ideals
    are detrended, scaled to the reference RMS, and lag-aligned to it. The
    noise deviation sigma pools the pointwise estimation-minus-reference
    errors. Each named ideal then gets a critical selective threshold; the
    zero waveform is always scored (it cannot be RMS-scaled, so its errors
    are just |reference|), and the universal threshold is reported as
    1 - eps_selective['zero'].

    ideals may be a single Trace (named 'ideal') or a name -> Trace mapping.
    """
    if isinstance(ideals, Trace):
        ideals = {"ideal": ideals}
    ref = _detrend(np.asarray(measurements.reference.samples))
    ref_rms = _rms(ref)
    if ref_rms == 0:
        raise DegenerateInputError("reference trace has zero RMS")

    pooled = []
    for est in measurements.estimation:
        scaled = _scale_to(_detrend(np.asarray(est.samples)), ref_rms)
        ref_seg, est_seg = _align_to(scaled, ref)
        pooled.append(est_seg - ref_seg)
    sigma = float(np.std(np.concatenate(pooled)))
    if sigma == 0:
        raise DegenerateInputError(
            "estimation traces are identical to the reference; sigma is 0"
        )

    eps_selective: dict[str, float] = {}
    total_iterations = 0
    for name, ideal in ideals.items():
        if name == "zero":
            continue  # computed below for every report
        samples = np.asarray(ideal.samples, dtype=np.float64)
        detrended = _detrend(samples)
        floor = 1e-12 * max(1.0, float(np.max(np.abs(samples))))
        if np.max(np.abs(detrended)) <= floor:
            # zero (or constant, which detrends to zero) targets cannot be
            # RMS-scaled; score them on the bare reference magnitudes
            eps_selective[name] = _zero_waveform_epsilon(ref, sigma, q, delta, mode)
            continue
        scaled = _scale_to(detrended, ref_rms)
        ref_seg, ideal_seg = _align_to(scaled, ref)
        result = find_critical_epsilon(ref_seg, ideal_seg, sigma, q=q, delta=delta,
                                       mode=mode)
        eps_selective[name] = result.eps
        total_iterations += result.iterations

    zero_result = find_critical_epsilon(ref, np.zeros_like(ref), sigma, q=q,
                                        delta=delta, mode=mode)
    eps_selective["zero"] = zero_result.eps
    total_iterations += zero_result.iterations

    return SecurityReport(
        sigma_noise=sigma,
        q=q,
        eps_selective=eps_selective,
        eps_universal=1.0 - zero_result.eps,
        iterations=total_iterations,
        mode=mode,
        noise_kind="gaussian",
    )


def _zero_waveform_epsilon(ref, sigma, q, delta, mode) -> float:
    return find_critical_epsilon(ref, np.zeros_like(ref), sigma, q=q, delta=delta,
                                 mode=mode).eps
