"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: ConfigurationError -> 2,
MissingPrerequisiteError -> 3, NumericError -> 4, anything else -> 1.
"""


class SoftMaskLabError(Exception):
    """Base class for all package errors."""


class DataError(SoftMaskLabError):
    """Invalid or missing data: absent masks, empty corpora, bad labels."""


class FilenameParseError(DataError):
    """A corpus file name does not follow the layout convention."""


class ConfigurationError(SoftMaskLabError):
    """Invalid configuration value, unknown key, or inconsistent setup."""


class WiringError(ConfigurationError):
    """Network tap shapes and fusion-stack strides do not line up."""


class ProtocolError(SoftMaskLabError):
    """Evaluation protocol violation, e.g. a query without valid matches."""


class NumericError(SoftMaskLabError):
    """Non-finite value encountered during optimization."""

    def __init__(self, message, term=None, step=None):
        super().__init__(message)
        self.term = term
        self.step = step


class MissingPrerequisiteError(SoftMaskLabError):
    """A pipeline stage was invoked before the stage it depends on."""
