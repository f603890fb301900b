"""Signal-injection attack simulation and security-threshold toolkit."""

__version__ = "0.1.0"

from .adcmodel import (
    AdcConfig,
    DigitizedTrace,
    cutoff_frequency,
    digitize_pipeline,
    esd_clamp,
    nonlinear_amp,
    preset,
    sample_and_quantize,
    sh_filter,
)
from .channel import ChannelModel, apply_channel, friis_penalty
from .exceptions import (
    BracketError,
    ConfigError,
    DegenerateInputError,
    SigstrengthError,
    TraceFormatError,
    TransportError,
)
from .noise import NoiseModel
from .security import (
    CriticalEpsilon,
    MeasurementSet,
    SecurityReport,
    compare,
    find_critical_epsilon,
    find_critical_epsilon_universal,
    is_selectively_secure,
    is_universally_secure,
    sampling_error,
)
from .signalgen import AmSpec, ToneSpec, am_modulate, synthesize, v_rms
from .similarity import SimilarityResult, best_lag, pearson, similarity
from .sweep import (
    CriticalVoltage,
    SweepAxes,
    SweepCell,
    SweepGrid,
    critical_voltage,
    dbm_to_vpk,
    existential_probe,
    run_sweep,
    simulate_capture,
)
from .trace import Spectrum, Trace, read_trace, spectrum, write_trace

__all__ = [
    "AdcConfig",
    "AmSpec",
    "BracketError",
    "ChannelModel",
    "ConfigError",
    "CriticalEpsilon",
    "CriticalVoltage",
    "DegenerateInputError",
    "DigitizedTrace",
    "MeasurementSet",
    "NoiseModel",
    "SecurityReport",
    "SigstrengthError",
    "SimilarityResult",
    "Spectrum",
    "SweepAxes",
    "SweepCell",
    "SweepGrid",
    "ToneSpec",
    "Trace",
    "TraceFormatError",
    "TransportError",
    "am_modulate",
    "apply_channel",
    "best_lag",
    "compare",
    "critical_voltage",
    "cutoff_frequency",
    "dbm_to_vpk",
    "digitize_pipeline",
    "esd_clamp",
    "existential_probe",
    "find_critical_epsilon",
    "find_critical_epsilon_universal",
    "friis_penalty",
    "is_selectively_secure",
    "is_universally_secure",
    "nonlinear_amp",
    "pearson",
    "preset",
    "read_trace",
    "run_sweep",
    "sample_and_quantize",
    "sampling_error",
    "sh_filter",
    "similarity",
    "simulate_capture",
    "spectrum",
    "synthesize",
    "v_rms",
    "write_trace",
]
