"""Exception types shared across the package.

The CLI maps these onto exit codes: validation errors exit 1, numerical
errors exit 2, I/O errors (plain OSError) exit 3.
"""


class BsvModesError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(BsvModesError):
    """Invalid user input: bad parameter values, malformed config, unusable grids."""


class ConfigError(ValidationError):
    """Config file failed schema validation.

    ``path`` names the offending key, dot-separated from the document root
    (e.g. ``geometry.pump_fwhm_m``).
    """

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


class GridResolutionError(ValidationError):
    """Angular grid too coarse to resolve the fastest kernel oscillation."""


class InsufficientPeaksError(ValidationError):
    """Not enough usable peaks for the requested sweep analysis."""


class NumericalError(BsvModesError):
    """Numerical failure: non-finite values, overflow, failed decompositions."""


class DecompositionError(NumericalError):
    """Eigendecomposition or SVD of the kernel matrix failed."""


class GainOverflowError(NumericalError):
    """Requested gain would overflow sinh**2 in double precision."""
