"""Experiment configuration: one TOML file describing the whole bench.

Sections: [adc] (preset name and/or field overrides), [channel], [tone],
[am], [noise], [simulate], [sweep], plus top-level seed and mode. Every
value can be overridden by CLI flags (flags win). Validation failures
raise ConfigError carrying the offending field path.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .adcmodel import AdcConfig, preset
from .channel import ChannelModel
from .exceptions import ConfigError
from .noise import NoiseModel
from .security import MODES
from .signalgen import AmSpec, ToneSpec
from .sweep import SweepAxes


@dataclass
class ExperimentConfig:
    adc: AdcConfig | None
    channel: ChannelModel
    tone: ToneSpec
    am: AmSpec | None
    noise: NoiseModel
    seed: int = 0
    mode: str = "eq5_with_q"
    simulate: dict = field(default_factory=dict)
    sweep: dict = field(default_factory=dict)

    def sweep_axes(self) -> SweepAxes:
        section = self.sweep
        try:
            return SweepAxes(
                carriers=tuple(section.get("carriers", ())),
                powers=tuple(section.get("powers", ())),
                depths=tuple(section.get("depths", (1.0,))),
                power_unit=section.get("power_unit", "vpk"),
            )
        except ValueError as exc:
            raise ConfigError(f"sweep: {exc}") from exc


def _build_adc(section: dict) -> AdcConfig | None:
    if not section:
        return None
    section = dict(section)
    name = section.pop("preset", None)
    square_law = section.pop("square_law", None)
    try:
        if name is not None:
            return preset(name, square_law=square_law, **section)
        if square_law is not None:
            section["amp_coeffs"] = (1.0, float(square_law))
        if "amp_coeffs" in section:
            section["amp_coeffs"] = tuple(section["amp_coeffs"])
        return AdcConfig(**section)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"adc: {exc}") from exc


def _build_channel(section: dict) -> ChannelModel:
    if not section:
        return ChannelModel.identity()
    try:
        return ChannelModel(
            kind=section.get("kind", "band_attenuator" if section.get("bands") else "identity"),
            bands=tuple(tuple(b) for b in section.get("bands", ())),
            distance_ratio=section.get("distance_ratio", 1.0),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"channel: {exc}") from exc


def _build_tone(section: dict) -> ToneSpec:
    try:
        return ToneSpec(
            kind=section.get("kind", "sine"),
            f_m=section.get("f_m", 0.0),
            amplitude=section.get("amplitude", 1.0),
            phase=section.get("phase", 0.0),
            components=tuple(tuple(c) for c in section.get("components", ())),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"tone: {exc}") from exc


def _build_am(section: dict) -> AmSpec | None:
    if not section:
        return None
    try:
        if "carrier_amplitude" in section:
            if "v_pk" in section:
                raise ValueError("give either v_pk or carrier_amplitude, not both")
            return AmSpec.from_carrier_amplitude(
                section["carrier_amplitude"],
                depth=section.get("depth", 1.0),
                f_c=section["f_c"],
            )
        return AmSpec(
            f_c=section["f_c"],
            depth=section.get("depth", 1.0),
            v_pk=section.get("v_pk", 1.0),
        )
    except KeyError as exc:
        raise ConfigError(f"am: missing field {exc.args[0]}") from exc
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"am: {exc}") from exc


def _build_noise(section: dict) -> NoiseModel:
    if not section:
        return NoiseModel.zero()
    kind = section.get("kind", "gaussian")
    try:
        if kind == "gaussian":
            return NoiseModel.gaussian(section.get("sigma", 0.0))
        if kind == "zero":
            return NoiseModel.zero()
        if kind == "empirical":
            return NoiseModel.empirical(section["samples"])
        raise ValueError(f"unknown noise kind {kind!r}")
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"noise: {exc}") from exc


def config_from_dict(data: dict) -> ExperimentConfig:
    mode = data.get("mode", "eq5_with_q")
    if mode not in MODES:
        raise ConfigError(f"mode: must be one of {MODES}, got {mode!r}")
    seed = data.get("seed", 0)
    if not isinstance(seed, int) or seed < 0:
        raise ConfigError(f"seed: must be a non-negative integer, got {seed!r}")
    return ExperimentConfig(
        adc=_build_adc(data.get("adc", {})),
        channel=_build_channel(data.get("channel", {})),
        tone=_build_tone(data.get("tone", {})),
        am=_build_am(data.get("am", {})),
        noise=_build_noise(data.get("noise", {})),
        seed=seed,
        mode=mode,
        simulate=dict(data.get("simulate", {})),
        sweep=dict(data.get("sweep", {})),
    )


def load_config(path) -> ExperimentConfig:
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return config_from_dict(data)
