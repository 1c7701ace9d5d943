"""Exception types shared across the package."""


class ParameterError(ValueError):
    """A parameter lies outside its admissible domain."""


class UnsupportedRegimeError(ValueError):
    """The requested operation is outside the supported parameter regime."""


class ConfigError(ValueError):
    """An experiment configuration is invalid (CLI exit code 2)."""


class NumericError(RuntimeError):
    """A numerical routine failed to converge or exceeded its iteration cap."""


class EnvelopeViolationError(RuntimeError):
    """A rejection-sampling acceptance ratio left [0, 1]; the envelope is broken."""
