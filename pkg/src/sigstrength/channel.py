"""Coupling-path transfer function: band attenuation ahead of the ADC.

The coupling path is modeled as piecewise-constant attenuation over
frequency bands (as one would measure it empirically with frequency
sweeps) plus a distance term that follows free-space path loss: +6 dB of
attenuation per doubling of distance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .trace import Trace


@dataclass(frozen=True)
class ChannelModel:
    """kind: 'identity' passes the input through bit-exactly;
    'band_attenuator' and 'table' scale spectral bands (they differ only in
    intent: a few designed bands versus a dense measured table).

    bands are (f_lo_hz, f_hi_hz, attenuation_db) with attenuation applied to
    bins f_lo <= f < f_hi; outside all bands the gain is 0 dB.
    """

    kind: str = "identity"
    bands: tuple = ()
    distance_ratio: float = 1.0

    def __post_init__(self):
        if self.kind not in ("identity", "band_attenuator", "table"):
            raise ValueError(f"unknown channel kind {self.kind!r}")
        if not self.distance_ratio > 0:
            raise ValueError("distance_ratio must be > 0")
        bands = tuple(
            (float(lo), float(hi), float(db)) for lo, hi, db in self.bands
        )
        for lo, hi, db in bands:
            if not lo < hi:
                raise ValueError(f"band ({lo}, {hi}) is empty")
            if db < 0:
                raise ValueError("attenuation_db must be >= 0")
        for (lo1, hi1, _), (lo2, hi2, _) in zip(
            sorted(bands), sorted(bands)[1:]
        ):
            if lo2 < hi1:
                raise ValueError(
                    f"bands ({lo1}, {hi1}) and ({lo2}, {hi2}) overlap"
                )
        object.__setattr__(self, "bands", bands)

    @classmethod
    def identity(cls) -> "ChannelModel":
        return cls("identity")

    @classmethod
    def flat(cls, attenuation_db: float, f_hi: float = 1e15) -> "ChannelModel":
        """Single band covering everything up to f_hi."""
        return cls("band_attenuator", bands=((0.0, f_hi, attenuation_db),))


def friis_penalty(distance_ratio: float) -> float:
    """Extra attenuation in dB for a distance scaled by distance_ratio.

    20*log10(ratio): doubling the distance costs 6.02 dB, matching the
    quadrupling of transmit power needed in free space.
    """
    if not distance_ratio > 0:
        raise ValueError("distance_ratio must be > 0")
    return 20.0 * math.log10(distance_ratio)


def apply_channel(model: ChannelModel, v: Trace) -> Trace:
    """Scale each spectral band by 10**(-(attenuation_db + friis_db)/20)."""
    if model.kind == "identity":
        return v
    if not model.bands:
        return v
    x = v.samples
    spectrum = np.fft.rfft(x)
    freqs = np.fft.rfftfreq(x.size, d=1.0 / v.sample_rate)
    friis_db = friis_penalty(model.distance_ratio)
    for f_lo, f_hi, att_db in model.bands:
        mask = (freqs >= f_lo) & (freqs < f_hi)
        spectrum[mask] *= 10.0 ** (-(att_db + friis_db) / 20.0)
    out = np.fft.irfft(spectrum, n=x.size)
    return Trace(out, v.sample_rate, t0=v.t0)
