"""Exception hierarchy shared across the pipeline.

The CLI maps these onto exit codes: ConfigError -> 2, DataError -> 3,
NumericError -> 4.
"""


class MspiError(Exception):
    """Base class for pipeline errors."""


class ConfigError(MspiError):
    """Invalid configuration value; message names the offending field."""


class DataError(MspiError):
    """Malformed, missing, or inconsistent input data."""


class NumericError(MspiError):
    """A numeric procedure failed (divergence, non-finite loss, degenerate resample)."""
