"""Exception types shared across the dqa package."""


class DqaError(Exception):
    """Base class for all dqa-specific errors."""


class DimensionError(DqaError, ValueError):
    """Input plane or image is too small for the requested operation."""


class FormatError(DqaError, ValueError):
    """Unsupported or undecodable raster format."""


class ManifestError(DqaError, ValueError):
    """Malformed dataset manifest (bad header, bad row, duplicate path)."""


class DegenerateSampleError(DqaError, ValueError):
    """Sample set carries no information for a distribution fit."""


class OneSidedSampleError(DqaError, ValueError):
    """Asymmetric fit needs samples on both sides of zero."""


class PacketVersionError(DqaError, ValueError):
    """Feature packet version is not supported by this build."""


class ConfigMismatchError(DqaError, ValueError):
    """Receiver-side configuration disagrees with the packet metadata."""


class ModelFormatError(DqaError, ValueError):
    """Model file is truncated, wrong version, or schema-inconsistent."""


class DataError(DqaError, ValueError):
    """Training or prediction input violates a data precondition."""


class ConvergenceError(DqaError, RuntimeError):
    """Solver hit its iteration cap before reaching the KKT tolerance."""

    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = residual


class FitError(DqaError, ValueError):
    """Nonlinear regression cannot be run on the given data."""


class ProtocolError(DqaError, ValueError):
    """Evaluation protocol preconditions are not met."""
