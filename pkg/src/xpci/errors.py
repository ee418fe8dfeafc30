"""Exception hierarchy shared across the toolkit.

Two broad failure classes are distinguished because the CLI maps them to
different exit codes: validation failures (bad inputs, mismatched grids,
malformed files, schema violations) exit with code 2, numerical failures
(ill-posed inversions such as a vanishing transfer-function denominator)
exit with code 3.
"""


class ToolkitError(Exception):
    """Base class for all toolkit errors."""


class ValidationError(ToolkitError):
    """Invalid input: bad values, mismatched grids or wavelengths, bad config."""


class GridMismatchError(ValidationError):
    """Two objects that must share a sampling grid do not."""


class WavelengthMismatchError(ValidationError):
    """Two objects that must share a wavelength do not."""


class NumericalError(ToolkitError):
    """A numerically ill-posed operation was attempted (e.g. division by a
    vanishing transfer function with zero regularization)."""


class FormatError(ValidationError):
    """Base class for file-format problems."""


class TruncatedPayloadError(FormatError):
    """Raster payload shorter or longer than the sidecar declares."""


class ChecksumError(FormatError):
    """Raster payload does not match the checksum recorded in the sidecar."""


class SchemaError(FormatError):
    """Sidecar or config violates the expected schema."""
