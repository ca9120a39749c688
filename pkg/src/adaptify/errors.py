"""Exception types shared across the package."""


class AdaptifyError(Exception):
    """Base class for all errors raised by this package."""


class InvalidInputError(AdaptifyError):
    """A value is outside its documented domain (non-finite, out of range, empty)."""


class ShapeError(AdaptifyError):
    """Array dimensions do not line up."""


class ConfigurationError(AdaptifyError):
    """Engine or experiment configuration is inconsistent."""


class ConfigParseError(ConfigurationError):
    """A config file could not be parsed; carries file and line diagnostics."""

    def __init__(self, path, line_no, message):
        self.path = str(path)
        self.line_no = line_no
        where = f"{self.path}:{line_no}" if line_no else self.path
        super().__init__(f"{where}: {message}")


class AdaptationError(AdaptifyError):
    """A parameter update could not be applied (non-finite gradient or result)."""


class CheckpointError(AdaptifyError):
    """Base class for checkpoint persistence failures."""


class CorruptHeaderError(CheckpointError):
    """Checkpoint file does not start with a valid header."""


class TruncatedPayloadError(CheckpointError):
    """Checkpoint file ends before the declared parameters are complete."""


class VersionMismatchError(CheckpointError):
    """Checkpoint was written with an unsupported format version."""
