"""Exception types shared across the package."""


class WaveFactorError(Exception):
    """Base class for all wavefactor errors."""


class DimensionError(WaveFactorError, ValueError):
    """Inconsistent or invalid array dimensions."""


class GridError(WaveFactorError, ValueError):
    """Invalid grid parameters (spacing, sample counts)."""


class StabilityError(GridError):
    """A time-stepping scheme would be unstable (CFL violation)."""


class DataError(WaveFactorError, ValueError):
    """Malformed or non-finite numerical data."""


class DegenerateColumnError(WaveFactorError, ValueError):
    """An operation received an all-zero factor column."""


class CertificateError(WaveFactorError, RuntimeError):
    """A certificate value is inconsistent with the requested update."""


class StepSizeError(WaveFactorError, RuntimeError):
    """Inner descent increased the objective beyond numerical slack."""


class UsageError(WaveFactorError):
    """Command-line usage error."""
