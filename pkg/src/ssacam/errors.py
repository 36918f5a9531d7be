"""Exception types raised by the public API.

Everything derives from :class:`SsaError` so callers (and the CLI) can
distinguish data-level failures from programming errors. I/O failures are
left as the built-in ``OSError``.
"""


class SsaError(Exception):
    """Base class for data and format errors raised by this package."""


class BadMagicError(SsaError):
    """File does not start with the SSAT magic bytes."""


class BadVersionError(SsaError):
    """SSAT container version is not supported."""


class TruncatedPayloadError(SsaError):
    """SSAT payload byte count does not match the header."""


class NonFiniteDataError(SsaError):
    """Tensor data contains NaN or infinity."""


class InvalidHeaderError(SsaError):
    """SSAT header declares an invalid rank or extent."""


class ShapeMismatchError(SsaError):
    """Operand shapes are incompatible for the requested operation."""


class UnsupportedDepthError(SsaError):
    """Requested number of self-affinity blocks is outside {1, 2, 3}."""


class MissingStageError(SsaError):
    """A required backbone stage tensor was not supplied."""


class EmptyMaskError(SsaError):
    """Binary mask has no foreground pixel."""


class EmptyDatasetError(SsaError):
    """Evaluation was requested on zero samples."""


class MissingMaskError(SsaError):
    """Sample lacks the ground-truth mask needed for this evaluation."""


class LabelOutOfRangeError(SsaError):
    """Class-index grid contains a label outside the declared class count."""


class ManifestError(SsaError):
    """Dataset manifest is malformed or references missing files."""
