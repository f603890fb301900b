"""Shared exception types, mapped to CLI exit codes in cli.py."""


class SigstrengthError(Exception):
    """Base class for all toolkit errors."""


class TraceFormatError(SigstrengthError, ValueError):
    """A trace file is malformed; the message names the file and line/byte."""


class DegenerateInputError(SigstrengthError, ValueError):
    """An operation received input with no usable variation (zero variance,
    zero RMS, zero noise level)."""


class BracketError(SigstrengthError, ValueError):
    """A bisection was started on a bracket that does not straddle the
    predicate boundary; the message says which end failed."""


class TransportError(SigstrengthError, ConnectionError):
    """Remote instrument connection, timeout, or protocol violation."""


class ConfigError(SigstrengthError, ValueError):
    """Experiment configuration failed validation; message carries the
    offending field path."""
