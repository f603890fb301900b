"""Campaign harness: carrier/power/depth grids and critical-voltage search.

Every grid cell runs the full injection pipeline for one (carrier, power,
depth) triple and scores the captured output against the ideal tone. Cells
are independent and seeded from the sweep seed plus their own coordinates,
so results do not depend on grid order or parallelism, and a remote
bench (see instrument) yields bit-identical cells to the in-process path.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .adcmodel import AdcConfig, DigitizedTrace, digitize_pipeline
from .channel import ChannelModel
from .exceptions import BracketError, DegenerateInputError, TransportError
from .noise import NoiseModel
from .security import (
    find_critical_epsilon,
    is_selectively_secure,
    is_universally_secure,
)
from .signalgen import AmSpec, ToneSpec, am_modulate, synthesize
from .similarity import best_lag, similarity
from .trace import Trace

# Input oversampling relative to the carrier; 16x keeps the envelope smooth
# while staying above the 10x simulation fidelity floor.
INPUT_RATE_CARRIER_FACTOR = 16.0

# Bisection steps the selective adversary spends matching the demodulated
# amplitude to the target waveform.
AMPLITUDE_MATCH_ITERATIONS = 30


def dbm_to_vpk(dbm: float) -> float:
    """Peak voltage of a sine delivering the given power into 50 ohms."""
    watts = 10.0 ** ((dbm - 30.0) / 10.0)
    return math.sqrt(2.0 * 50.0 * watts)


@dataclass(frozen=True)
class SweepAxes:
    """Grid axes; power_unit is 'vpk' or 'dbm' (into 50 ohms)."""

    carriers: tuple
    powers: tuple
    depths: tuple
    power_unit: str = "vpk"

    def __post_init__(self):
        if self.power_unit not in ("vpk", "dbm"):
            raise ValueError(f"unknown power unit {self.power_unit!r}")
        for name in ("carriers", "powers", "depths"):
            values = tuple(float(v) for v in getattr(self, name))
            if not values:
                raise ValueError(f"{name} axis is empty")
            object.__setattr__(self, name, values)

    def v_pk(self, power: float) -> float:
        return dbm_to_vpk(power) if self.power_unit == "dbm" else power

    def cells(self):
        for f_c in self.carriers:
            for power in self.powers:
                for depth in self.depths:
                    yield f_c, power, depth


@dataclass(frozen=True)
class SweepCell:
    carrier_hz: float
    power: float
    depth: float
    similarity: float
    eps_selective: float
    v_rms_out: float
    error: str | None = None


@dataclass(frozen=True)
class SweepGrid:
    axes: SweepAxes
    cells: tuple

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("carrier_hz,power,depth,similarity,eps,vrms\n")
            for c in self.cells:
                fh.write(
                    f"{c.carrier_hz!r},{c.power!r},{c.depth!r},"
                    f"{c.similarity!r},{c.eps_selective!r},{c.v_rms_out!r}\n"
                )

    def to_json(self, path) -> None:
        from . import __version__

        def scrub(x):  # failed-cell metrics serialize as null, not bare NaN
            return None if isinstance(x, float) and math.isnan(x) else x

        payload = {
            "toolkit_version": __version__,
            "axes": {
                "carriers": list(self.axes.carriers),
                "powers": list(self.axes.powers),
                "depths": list(self.axes.depths),
                "power_unit": self.axes.power_unit,
            },
            "cells": [
                {
                    "carrier_hz": c.carrier_hz,
                    "power": c.power,
                    "depth": c.depth,
                    "similarity": scrub(c.similarity),
                    "eps_selective": scrub(c.eps_selective),
                    "v_rms_out": scrub(c.v_rms_out),
                    "error": c.error,
                }
                for c in self.cells
            ],
        }
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")


def cell_seed(seed: int, carrier_hz: float, power_vpk: float, depth: float) -> int:
    """Per-cell RNG seed derived from coordinate values, not grid position,
    so permuting the grid only permutes cells."""
    coords = [
        int(np.float64(v).view(np.uint64))
        for v in (carrier_hz, power_vpk, depth)
    ]
    ss = np.random.SeedSequence([int(seed), *coords])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def default_input_rate(adc: AdcConfig, f_c: float) -> float:
    return max(INPUT_RATE_CARRIER_FACTOR * f_c, 4.0 * adc.f_s)


def simulate_capture(
    adc: AdcConfig,
    channel: ChannelModel,
    tone: ToneSpec,
    am: AmSpec,
    noise: NoiseModel,
    seed: int,
    n_samples: int,
    input_rate: float | None = None,
) -> DigitizedTrace:
    """Run the pipeline and return exactly n_samples converter outputs.

    This is the single simulation entry point shared by the in-process
    backend and the bench server, which is what makes remote captures
    bit-identical to local ones for the same parameters and seed.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    f_in = default_input_rate(adc, am.f_c) if input_rate is None else float(input_rate)
    duration = n_samples / adc.f_s
    n_in = int(math.ceil(duration * f_in)) + 1
    w = synthesize(tone, f_in, n_in / f_in)
    v = am_modulate(w, am, f_in)
    s = Trace(np.zeros(len(v)), f_in)
    digitized = digitize_pipeline(adc, channel, v, s, noise, seed)
    if len(digitized) < n_samples:
        raise ValueError("capture shorter than requested")
    return DigitizedTrace(
        digitized.codes[:n_samples],
        digitized.volts[:n_samples],
        q=digitized.q,
        sample_rate=digitized.sample_rate,
        t0=digitized.t0,
    )


def _cell_epsilon(out: Trace, ideal: Trace, noise: NoiseModel, q: float) -> float:
    """Selective threshold of one capture against the ideal tone.

    Uses the known model sigma rather than re-estimating it from repeated
    captures; a noiseless model degenerates to direct comparison (1.0 when
    the aligned error never exceeds q, else 0.0).
    """
    out_s = np.asarray(out.samples) - np.mean(out.samples)
    ideal_s = np.asarray(ideal.samples) - np.mean(ideal.samples)
    out_rms = float(np.sqrt(np.mean(out_s**2)))
    ideal_rms = float(np.sqrt(np.mean(ideal_s**2)))
    if ideal_rms == 0:
        raise DegenerateInputError("ideal tone has zero RMS")
    if out_rms == 0:
        return 0.0  # nothing came through, injection failed at every eps
    ideal_s = ideal_s * (out_rms / ideal_rms)
    lag = best_lag(out_s, ideal_s)
    lo = max(0, -lag)
    hi = min(out_s.size, ideal_s.size - lag)
    if hi - lo < 2:
        return 0.0
    out_seg = out_s[lo:hi]
    ideal_seg = ideal_s[lo + lag : hi + lag]
    if noise.sigma == 0:
        return 1.0 if float(np.max(np.abs(out_seg - ideal_seg))) <= q else 0.0
    return find_critical_epsilon(out_seg, ideal_seg, noise.sigma, q=q).eps


def _evaluate_cell(adc, channel, tone, noise, seed, axes, n_samples,
                   input_rate, capture_fn, coords) -> SweepCell:
    f_c, power, depth = coords
    v_pk = axes.v_pk(power)
    am = AmSpec(f_c=f_c, depth=depth, v_pk=v_pk)
    seed_c = cell_seed(seed, f_c, v_pk, depth)
    try:
        dig = capture_fn(am, seed_c)
        out = dig.to_trace()
        ideal = synthesize(tone, adc.f_s, n_samples / adc.f_s)
        try:
            rho = similarity(out, ideal).rho
        except DegenerateInputError:
            rho = 0.0
        eps = _cell_epsilon(out, ideal, noise, dig.q)
        vrms = float(np.sqrt(np.mean((out.samples - np.mean(out.samples)) ** 2)))
        return SweepCell(f_c, power, depth, rho, eps, vrms)
    except TransportError as exc:
        raise TransportError(
            f"cell (carrier={f_c}, power={power}, depth={depth}): {exc}"
        ) from exc
    except Exception as exc:  # cell failures must not abort the campaign
        return SweepCell(f_c, power, depth, math.nan, math.nan, math.nan,
                         error=f"{type(exc).__name__}: {exc}")


def run_sweep(
    adc: AdcConfig,
    channel: ChannelModel,
    tone: ToneSpec,
    axes: SweepAxes,
    noise: NoiseModel,
    seed: int = 0,
    backend: str = "inprocess",
    remote: tuple | None = None,
    n_samples: int = 1024,
    input_rate: float | None = None,
    parallelism: int = 1,
    timeout: float = 30.0,
) -> SweepGrid:
    """Evaluate the full carrier x power x depth grid.

    backend 'inprocess' simulates locally; 'remote' drives a bench server at
    `remote=(host, port)` whose preset must match adc/channel/noise. Either
    way the grid is deterministic under the seed and ordered by coordinates.
    """
    if backend not in ("inprocess", "remote"):
        raise ValueError(f"unknown backend {backend!r}")
    if backend == "remote":
        if remote is None:
            raise ValueError("remote backend requires a (host, port) address")
        if tone.kind not in ("sine", "exp_sine", "zero") or tone.phase != 0.0:
            raise ValueError(
                "remote backend supports zero-phase sine/exp_sine/zero tones"
            )
        from .instrument import remote_capture  # deferred: instrument imports us

        def capture_fn(am, seed_c, _tone=tone):
            return remote_capture(remote, adc, _tone, am, seed_c, n_samples,
                                  timeout=timeout)

    else:

        def capture_fn(am, seed_c):
            return simulate_capture(adc, channel, tone, am, noise, seed_c,
                                    n_samples, input_rate=input_rate)

    coords = list(axes.cells())
    if parallelism > 1:
        with ThreadPoolExecutor(max_workers=parallelism) as pool:
            cells = list(
                pool.map(
                    lambda c: _evaluate_cell(adc, channel, tone, noise, seed,
                                             axes, n_samples, input_rate,
                                             capture_fn, c),
                    coords,
                )
            )
    else:
        cells = [
            _evaluate_cell(adc, channel, tone, noise, seed, axes, n_samples,
                           input_rate, capture_fn, c)
            for c in coords
        ]
    return SweepGrid(axes=axes, cells=tuple(cells))


@dataclass(frozen=True)
class CriticalVoltage:
    """Bisection result; the predicate is secure at v_secure and insecure at
    v_insecure, with v_c their midpoint."""

    eps: float
    v_c: float
    kind: str
    v_secure: float
    v_insecure: float


def _detrended_rms(x: np.ndarray) -> float:
    centered = x - np.mean(x)
    return float(np.sqrt(np.mean(centered**2)))


def _selective_attack_secure(adc, channel, tone, am, noise, eps, seed,
                             n_samples, input_rate, budget) -> bool:
    """True iff the best amplitude-matched attack within the budget fails.

    The adversary tunes the transmit amplitude so the demodulated RMS meets
    the target's (the demodulated level grows monotonically with amplitude,
    so a bisection finds the match; budgets below the match transmit at full
    budget). Errors are taken between DC-removed output and target, the same
    normalization the threshold estimation uses; raw errors would let a
    demodulation DC offset mask an otherwise perfect injection.
    """
    target = synthesize(tone, adc.f_s, n_samples / adc.f_s)
    target_centered = target.samples - np.mean(target.samples)
    target_rms = float(np.sqrt(np.mean(target_centered**2)))

    def capture(v_pk):
        return simulate_capture(adc, channel, tone, replace(am, v_pk=float(v_pk)),
                                noise, seed, n_samples, input_rate=input_rate)

    dig = capture(budget)
    if _detrended_rms(dig.volts) > target_rms:
        lo, hi = 0.0, budget
        for _ in range(AMPLITUDE_MATCH_ITERATIONS):
            mid = 0.5 * (lo + hi)
            if _detrended_rms(capture(mid).volts) < target_rms:
                lo = mid
            else:
                hi = mid
        dig = capture(hi)
    errors = np.abs((dig.volts - np.mean(dig.volts)) - target_centered[: len(dig)])
    return is_selectively_secure(errors, dig.q, noise, eps)


def critical_voltage(
    adc: AdcConfig,
    channel: ChannelModel,
    tone: ToneSpec,
    am: AmSpec,
    eps: float,
    kind: str,
    v_lo: float,
    v_hi: float,
    tol: float,
    noise: NoiseModel,
    seed: int = 0,
    n_samples: int = 1024,
    input_rate: float | None = None,
    family: tuple | None = None,
) -> CriticalVoltage:
    """Bisect the peak-voltage budget where the security predicate flips.

    Valid because all three predicates are monotone in the budget: for the
    universal kind the attack transmits at full budget; for the selective
    kind a bigger budget only improves the adversary's amplitude match;
    existential requires `family` and is secure while any member stays
    selectively secure.
    """
    if kind not in ("universal", "selective", "existential"):
        raise ValueError(f"unknown kind {kind!r}")
    if not 0 < v_lo < v_hi:
        raise ValueError("need 0 < v_lo < v_hi")
    if kind == "existential" and not family:
        raise ValueError("existential kind requires a waveform family")

    def secure(budget: float) -> bool:
        if kind == "universal":
            dig = simulate_capture(adc, channel, tone,
                                   replace(am, v_pk=float(budget)), noise,
                                   seed, n_samples, input_rate=input_rate)
            return is_universally_secure(np.abs(dig.volts), dig.q, noise, eps)
        if kind == "selective":
            return _selective_attack_secure(adc, channel, tone, am, noise, eps,
                                            seed, n_samples, input_rate,
                                            budget)
        return any(
            _selective_attack_secure(adc, channel, member, am, noise, eps,
                                     seed, n_samples, input_rate, budget)
            for member in family
        )

    if not secure(v_lo):
        raise BracketError(f"predicate already insecure at v_lo={v_lo}")
    if secure(v_hi):
        raise BracketError(f"predicate still secure at v_hi={v_hi}")
    lo, hi = v_lo, v_hi
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if secure(mid):
            lo = mid
        else:
            hi = mid
    return CriticalVoltage(eps=eps, v_c=0.5 * (lo + hi), kind=kind,
                           v_secure=lo, v_insecure=hi)


@dataclass(frozen=True)
class ExistentialProbe:
    verdicts: dict
    existentially_secure: bool


def representability_error(adc: AdcConfig, tone: ToneSpec) -> str | None:
    """Reason a waveform is not representable by the converter, or None."""
    if tone.max_frequency > adc.f_s / 2:
        return (
            f"max frequency {tone.max_frequency} Hz exceeds Nyquist "
            f"{adc.f_s / 2} Hz"
        )
    probe = synthesize(tone, max(adc.f_s, 8 * max(tone.max_frequency, 1.0)), 1.0)
    lo, hi = float(np.min(probe.samples)), float(np.max(probe.samples))
    if lo < adc.v_min or hi > adc.v_max:
        return (
            f"waveform span [{lo:.4g}, {hi:.4g}] V outside converter range "
            f"[{adc.v_min}, {adc.v_max}] V"
        )
    return None


def existential_probe(
    adc: AdcConfig,
    channel: ChannelModel,
    family,
    eps: float,
    v_pk: float,
    am: AmSpec | None = None,
    noise: NoiseModel | None = None,
    seed: int = 0,
    n_samples: int = 1024,
    input_rate: float | None = None,
) -> ExistentialProbe:
    """Selective-security verdict per family member at one voltage budget.

    The system is existentially secure with respect to the family iff some
    member resists injection. Non-representable members are rejected up
    front. `family` is a name -> ToneSpec mapping or an iterable of specs.
    """
    if noise is None:
        noise = NoiseModel.gaussian(0.0015)
    if not isinstance(family, dict):
        family = {f"waveform_{i}": t for i, t in enumerate(family)}
    if not family:
        raise ValueError("family is empty")
    for name, tone in family.items():
        reason = representability_error(adc, tone)
        if reason is not None:
            raise ValueError(f"family member {name!r} rejected: {reason}")
    verdicts = {}
    for name, tone in family.items():
        if v_pk == 0:
            verdicts[name] = True  # no budget, nothing can be injected
            continue
        spec = am if am is not None else AmSpec(
            f_c=max(8.0 * adc.f_s, 10.0 * tone.max_frequency), depth=1.0,
            v_pk=v_pk)
        verdicts[name] = _selective_attack_secure(
            adc, channel, tone, spec, noise, eps, seed, n_samples, input_rate,
            v_pk)
    return ExistentialProbe(verdicts=verdicts,
                            existentially_secure=any(verdicts.values()))
