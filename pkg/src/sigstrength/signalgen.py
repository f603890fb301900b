"""Target waveform synthesis and amplitude modulation onto a carrier."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .trace import Trace

# Effective bandwidth of the exponential-of-sine tone, in harmonics of f_m;
# components beyond the 4th are below 0.3% of the fundamental.
EXP_SINE_HARMONICS = 4


@dataclass(frozen=True)
class ToneSpec:
    """Baseband target waveform.

    kinds: 'sine' (amplitude * sin), 'exp_sine' (amplitude * exp(sin)),
    'zero', and 'composite' (sum of (frequency, amplitude, phase) sines,
    used to build distorted fundamental-plus-harmonics test waveforms).
    """

    kind: str
    f_m: float = 0.0
    amplitude: float = 1.0
    phase: float = 0.0
    components: tuple = ()

    def __post_init__(self):
        if self.kind not in ("sine", "exp_sine", "zero", "composite"):
            raise ValueError(f"unknown tone kind {self.kind!r}")
        if self.f_m < 0:
            raise ValueError("f_m must be >= 0")
        if self.amplitude < 0:
            raise ValueError("amplitude must be >= 0")
        if self.kind == "composite":
            if not self.components:
                raise ValueError("composite tone requires components")
            object.__setattr__(
                self,
                "components",
                tuple((float(f), float(a), float(p)) for f, a, p in self.components),
            )

    @property
    def max_frequency(self) -> float:
        """Highest meaningful frequency component, used for aliasing checks."""
        if self.kind == "zero":
            return 0.0
        if self.kind == "sine":
            return self.f_m
        if self.kind == "exp_sine":
            return self.f_m * EXP_SINE_HARMONICS
        return max(f for f, _, _ in self.components)


@dataclass(frozen=True)
class AmSpec:
    """Amplitude modulation parameters.

    v_pk bounds the peak of the emitted waveform: the modulator divides by
    (1 + depth) so that |v(t)| <= v_pk regardless of depth.
    """

    f_c: float
    depth: float
    v_pk: float

    def __post_init__(self):
        if not self.f_c > 0:
            raise ValueError("carrier frequency must be > 0")
        if not 0 <= self.depth <= 1:
            raise ValueError("depth must be in [0, 1]")
        if self.v_pk < 0:
            raise ValueError("v_pk must be >= 0")

    @classmethod
    def from_carrier_amplitude(cls, carrier_amplitude: float, depth: float,
                               f_c: float) -> "AmSpec":
        """Spec with a fixed carrier amplitude rather than a fixed peak.

        Generators are usually programmed by carrier level; the envelope then
        swings up to (1 + depth) times that. This sets v_pk accordingly so
        the emitted carrier component has exactly carrier_amplitude.
        """
        return cls(f_c=f_c, depth=depth, v_pk=carrier_amplitude * (1.0 + depth))

    @property
    def carrier_amplitude(self) -> float:
        return self.v_pk / (1.0 + self.depth)


def synthesize(spec: ToneSpec, f_s: float, duration: float) -> Trace:
    """Sample the waveform at w(k / f_s) for k = 0 .. duration*f_s - 1."""
    if duration <= 0:
        raise ValueError("duration must be > 0")
    if not f_s > 0:
        raise ValueError("sample rate must be > 0")
    n = int(round(duration * f_s))
    if n < 1:
        raise ValueError("duration too short for one sample")
    if spec.max_frequency > 0 and f_s <= 2 * spec.max_frequency:
        warnings.warn(
            f"sample rate {f_s} Hz under-samples tone content up to "
            f"{spec.max_frequency} Hz; output will alias",
            RuntimeWarning,
            stacklevel=2,
        )
    t = np.arange(n) / f_s
    if spec.kind == "zero":
        samples = np.zeros(n)
    elif spec.kind == "sine":
        samples = spec.amplitude * np.sin(2 * np.pi * spec.f_m * t + spec.phase)
    elif spec.kind == "exp_sine":
        samples = spec.amplitude * np.exp(np.sin(2 * np.pi * spec.f_m * t + spec.phase))
    else:
        samples = np.zeros(n)
        for f, a, p in spec.components:
            samples += a * np.sin(2 * np.pi * f * t + p)
    return Trace(samples, f_s)


def _resample(trace: Trace, f_s_out: float) -> np.ndarray:
    if trace.sample_rate == f_s_out:
        return np.asarray(trace.samples)
    n_out = int(round(trace.duration * f_s_out))
    t_out = np.arange(n_out) / f_s_out
    return np.interp(t_out, np.arange(len(trace)) / trace.sample_rate, trace.samples)


def am_modulate(w: Trace, spec: AmSpec, f_s_out: float) -> Trace:
    """v(t) = v_pk * (1 + depth * w_hat(t)) * cos(2 pi f_c t) / (1 + depth).

    w_hat is w rescaled so [min(w), max(w)] maps onto [-1, 1] (a constant w
    maps to 0), which keeps 'depth' meaningful for arbitrary targets. The
    (1 + depth) division makes the v_pk bound tight: |v(t)| <= v_pk always.
    """
    if f_s_out < 2 * spec.f_c:
        raise ValueError(
            f"output rate {f_s_out} Hz cannot represent carrier {spec.f_c} Hz"
        )
    if f_s_out < 10 * spec.f_c:
        warnings.warn(
            "output rate below 10x carrier; modulation envelope will be coarse",
            RuntimeWarning,
            stacklevel=2,
        )
    base = _resample(w, f_s_out)
    lo, hi = float(np.min(base)), float(np.max(base))
    if hi - lo < 1e-300:
        w_hat = np.zeros_like(base)
    else:
        w_hat = 2.0 * (base - lo) / (hi - lo) - 1.0
    t = np.arange(base.size) / f_s_out
    envelope = spec.v_pk * (1.0 + spec.depth * w_hat) / (1.0 + spec.depth)
    return Trace(envelope * np.cos(2 * np.pi * spec.f_c * t), f_s_out, t0=w.t0)


def v_rms(trace: Trace) -> float:
    """Root-mean-square of the trace samples."""
    return float(np.sqrt(np.mean(np.square(trace.samples))))
