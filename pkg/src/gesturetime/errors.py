"""Exception hierarchy shared by all gesturetime modules."""


class GestureTimeError(Exception):
    """Base class for all gesturetime errors."""


class InputFormatError(GestureTimeError):
    """Malformed or inconsistent input data (files, tokens, annotations)."""


class ConfigError(GestureTimeError):
    """Invalid configuration or precondition violation."""


class NumericError(GestureTimeError):
    """Numeric failure during training or evaluation (NaN/Inf loss etc.)."""
