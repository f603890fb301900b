"""ADC front-end model and ideal digitization.

The conversion chain is: sample-and-hold RC low-pass, amplifier
non-linearity (power series), ESD diode clamping, then sampling at the
converter rate with a mid-rise quantizer. Each stage is exposed on its own
so tests can probe it in isolation; digitize_pipeline composes them with
the coupling channel and additive noise.

All stage equations are scale-invariant in f*RC and f/f_s, so desk-scale
simulations use kHz..MHz carriers with the same dimensionless ratios as
the GHz-range parts they stand in for.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy import signal as sp_signal

from .channel import ChannelModel, apply_channel
from .noise import NoiseModel
from .trace import Trace


@dataclass(frozen=True)
class AdcConfig:
    """Converter parameters.

    r_sh/c_sh are the sample-and-hold input RC values; set both to None to
    disable the input filter (parts whose front end is not a plain RC).
    amp_coeffs are the power-series coefficients a_1..a_k of the internal
    amplifier (a_0 is implicitly 0); the default (1,) is a linear amplifier.
    """

    n_bits: int
    v_min: float
    v_max: float
    f_s: float
    tau: float = 0.0
    r_sh: float | None = None
    c_sh: float | None = None
    amp_coeffs: tuple = (1.0,)
    clamp_lo: float = -math.inf
    clamp_hi: float = math.inf

    def __post_init__(self):
        if self.n_bits < 1:
            raise ValueError("n_bits must be >= 1")
        if not self.v_min < self.v_max:
            raise ValueError("v_min must be < v_max")
        if not self.f_s > 0:
            raise ValueError("f_s must be > 0")
        if self.tau < 0:
            raise ValueError("tau must be >= 0")
        if (self.r_sh is None) != (self.c_sh is None):
            raise ValueError("r_sh and c_sh must be set together")
        if self.r_sh is not None and (self.r_sh <= 0 or self.c_sh <= 0):
            raise ValueError("r_sh and c_sh must be > 0 when set")
        if not self.clamp_lo < self.clamp_hi:
            raise ValueError("clamp_lo must be < clamp_hi")
        if len(self.amp_coeffs) < 1:
            raise ValueError("amp_coeffs needs at least a_1")
        object.__setattr__(self, "amp_coeffs", tuple(float(a) for a in self.amp_coeffs))

    @property
    def q(self) -> float:
        """Half-LSB quantization error bound (v_max - v_min) / 2**(n_bits+1)."""
        return (self.v_max - self.v_min) / 2 ** (self.n_bits + 1)

    @property
    def lsb(self) -> float:
        return (self.v_max - self.v_min) / 2**self.n_bits


@dataclass(frozen=True)
class DigitizedTrace:
    """Converter output: integer codes plus their exact voltage mapping.

    Sample k was converted from the analog value at t0_analog + k/f_s but is
    timestamped tau later, so t0 already includes the conversion delay.
    """

    codes: np.ndarray
    volts: np.ndarray
    q: float
    sample_rate: float
    t0: float = 0.0

    def __post_init__(self):
        codes = np.asarray(self.codes, dtype=np.int64)
        volts = np.asarray(self.volts, dtype=np.float64)
        codes.setflags(write=False)
        volts.setflags(write=False)
        object.__setattr__(self, "codes", codes)
        object.__setattr__(self, "volts", volts)

    def __len__(self):
        return self.codes.size

    def to_trace(self) -> Trace:
        return Trace(self.volts, self.sample_rate, t0=self.t0)


def cutoff_frequency(config: AdcConfig) -> float:
    """-3 dB corner of the sample-and-hold input: 1 / (2 pi R C)."""
    if config.r_sh is None:
        raise ValueError("config has no sample-and-hold RC values")
    return 1.0 / (2 * math.pi * config.r_sh * config.c_sh)


def _sh_pole(f_cut: float, f_s: float) -> float:
    # One-pole IIR chosen so the discrete gain is exactly 1 at DC and
    # exactly 1/sqrt(2) at f_cut; between DC and f_s/10 it tracks the
    # analog curve 1/sqrt(1+(f/f_cut)^2) to within 2%.
    c = math.cos(2 * math.pi * f_cut / f_s)
    return (2 - c) - math.sqrt((2 - c) ** 2 - 1)


def sh_filter(config: AdcConfig, x: Trace) -> Trace:
    """Sample-and-hold RC stage as a discrete one-pole low-pass."""
    if config.r_sh is None:
        return x
    f_cut = cutoff_frequency(config)
    alpha = _sh_pole(f_cut, x.sample_rate)
    b, a = [1.0 - alpha], [1.0, -alpha]
    # start from steady state for the input's mean level, so neither a DC
    # pedestal nor an oscillating carrier leaves a startup transient
    zi = sp_signal.lfilter_zi(b, a) * float(np.mean(x.samples))
    filtered, _ = sp_signal.lfilter(b, a, x.samples, zi=zi)
    return Trace(filtered, x.sample_rate, t0=x.t0)


def nonlinear_amp(coeffs, x: Trace) -> Trace:
    """Pointwise power series sum(a_n * x**n) with a_0 = 0.

    Even-order terms create the DC shift and demodulated baseband; a two
    tone input additionally produces intermodulation products at
    n*f1 +/- m*f2.
    """
    coeffs = tuple(float(a) for a in coeffs)
    if len(coeffs) < 1:
        raise ValueError("need at least one coefficient")
    poly = np.polynomial.polynomial.polyval(x.samples, [0.0, *coeffs])
    return Trace(poly, x.sample_rate, t0=x.t0)


def esd_clamp(config: AdcConfig, x: Trace) -> Trace:
    """Hard clip to the protection-diode window [clamp_lo, clamp_hi].

    Real diode knees are soft; the hard clip is a deliberate
    simplification. Asymmetric windows shift the output mean, which is how
    clamping contributes to demodulation.
    """
    if np.isneginf(config.clamp_lo) and np.isposinf(config.clamp_hi):
        return x
    return Trace(
        np.clip(x.samples, config.clamp_lo, config.clamp_hi),
        x.sample_rate,
        t0=x.t0,
    )


def sample_and_quantize(config: AdcConfig, x: Trace) -> DigitizedTrace:
    """Sample at t_k = k/f_s and quantize with a mid-rise code map.

    codes = floor((clip(x, v_min, v_max) - v_min) / lsb) clipped to the top
    code; reconstruction is v_min + (code + 1/2) * lsb, so the
    reconstruction error for in-range input never exceeds q = lsb/2.
    Timestamps carry the conversion delay tau.
    """
    if x.sample_rate < config.f_s:
        raise ValueError(
            f"input rate {x.sample_rate} Hz below converter rate {config.f_s} Hz"
        )
    if x.duration < 1.0 / config.f_s:
        raise ValueError("input shorter than one sampling interval")
    # 1e-9 guards the floor against float error when f_s divides the rate
    n_out = int(math.floor((len(x) - 1) / x.sample_rate * config.f_s + 1e-9)) + 1
    t_k = np.arange(n_out) / config.f_s
    analog = np.interp(t_k, np.arange(len(x)) / x.sample_rate, x.samples)
    clipped = np.clip(analog, config.v_min, config.v_max)
    codes = np.floor((clipped - config.v_min) / config.lsb).astype(np.int64)
    codes = np.minimum(codes, 2**config.n_bits - 1)
    volts = config.v_min + (codes + 0.5) * config.lsb
    return DigitizedTrace(
        codes, volts, q=config.q, sample_rate=config.f_s, t0=x.t0 + config.tau
    )


def digitize_pipeline(
    config: AdcConfig,
    channel: ChannelModel,
    v: Trace,
    s: Trace,
    noise: NoiseModel,
    seed,
) -> DigitizedTrace:
    """Full conversion of an injected waveform v plus sensor signal s.

    Chain: quantize(clamp(amp(sh_filter(channel(v) + s + n)))) with n drawn
    from the noise model under the seed, so the run is reproducible.
    """
    if v.sample_rate != s.sample_rate or len(v) != len(s):
        raise ValueError("v and s must share rate and length")
    injected = apply_channel(channel, v)
    mixed = Trace(
        injected.samples + s.samples + noise.draw(len(v), seed),
        v.sample_rate,
        t0=v.t0,
    )
    shaped = nonlinear_amp(config.amp_coeffs, sh_filter(config, mixed))
    return sample_and_quantize(config, esd_clamp(config, shaped))


# Named converter presets. Bits, max sampling rate, and sample-and-hold R/C
# come from the parts' datasheets; voltage ranges and clamp levels are
# representative values for typical supplies, and amp_coeffs stay linear
# unless a square-law term is requested for demodulation studies.
PRESETS: dict[str, dict] = {
    "tlc549": dict(n_bits=8, v_min=0.0, v_max=5.0, f_s=40e3,
                   r_sh=1e3, c_sh=60e-12),
    "atmega328p": dict(n_bits=10, v_min=0.0, v_max=5.0, f_s=76.9e3,
                       r_sh=1e3, c_sh=14e-12),
    "artix7": dict(n_bits=12, v_min=0.0, v_max=1.0, f_s=1e6,
                   r_sh=10e3, c_sh=3e-12),
    "ad7276": dict(n_bits=12, v_min=0.0, v_max=3.3, f_s=3e6,
                   r_sh=75.0, c_sh=32e-12),
    "ad7783": dict(n_bits=24, v_min=-2.56, v_max=2.56, f_s=19.79,
                   r_sh=None, c_sh=None),
    "ad7822": dict(n_bits=8, v_min=0.0, v_max=2.0, f_s=2e6,
                   r_sh=310.0, c_sh=4e-12),
}

# The ATmega328P input resistance is specified as a range; the preset uses
# the low end, and this constant carries the full span for corner studies.
ATMEGA328P_R_RANGE = (1e3, 100e3)


def preset(name: str, square_law: float | None = None, **overrides) -> AdcConfig:
    """Named AdcConfig with optional field overrides.

    square_law adds an illustrative second-order amplifier term (1, a2);
    no coefficient values are published for these parts, so it exists only
    to make demodulation visible in simulations.
    """
    try:
        fields = dict(PRESETS[name])
    except KeyError:
        raise ValueError(
            f"unknown preset {name!r}; available: {sorted(PRESETS)}"
        ) from None
    clamp_margin = 0.3  # one diode drop beyond the rails
    fields.setdefault("clamp_lo", fields["v_min"] - clamp_margin)
    fields.setdefault("clamp_hi", fields["v_max"] + clamp_margin)
    if square_law is not None:
        fields["amp_coeffs"] = (1.0, float(square_law))
    fields.update(overrides)
    return AdcConfig(**fields)


def with_square_law(config: AdcConfig, a2: float) -> AdcConfig:
    return replace(config, amp_coeffs=(1.0, float(a2)))
