"""Exception types shared across the engine."""


class EngineError(Exception):
    """Base class for every error the engine raises on purpose."""


class FormatError(EngineError):
    """Tensor file header or layout is malformed."""


class DataError(EngineError):
    """Tensor payload contains non-finite values."""


class IoError(EngineError):
    """Reading or writing a file failed at the OS level."""


class ManifestError(EngineError):
    """Dataset manifest is inconsistent or references missing files."""


class ShapeError(EngineError):
    """Array shapes are incompatible with the requested operation."""


class ConfigError(EngineError):
    """Detector or run configuration is invalid."""


class InputError(EngineError):
    """An operation received an empty or unusable input collection."""


class DegenerateRatioError(EngineError):
    """Norm ratio is undefined because the pseudo-OOD norm is zero."""

    def __init__(self, message, block=None, sample=None):
        super().__init__(message)
        self.block = block
        self.sample = sample


class SelectionError(EngineError):
    """Block selection could not produce a ratio for some block."""


class ExportError(EngineError):
    """A source model cannot be converted to the engine format."""


class StageError(EngineError):
    """A pipeline stage failed; carries the stage name and the cause."""

    def __init__(self, stage, cause):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause
