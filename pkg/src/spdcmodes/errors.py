"""Exception types shared across the package.

Names match the error contracts of the public operations; all inherit
from SpdcError so callers can catch engine failures with one handler.
"""


class SpdcError(Exception):
    """Base class for all engine errors."""


class OutOfRange(SpdcError):
    """Wavelength outside the validity range of a dispersion model."""


class EnergyMismatch(SpdcError):
    """Center wavelengths violate 1/lambda_p = 1/lambda_s + 1/lambda_i."""


class NoRoot(SpdcError):
    """Poling-period bracket contains no quasi-phase-matching solution."""


class NoConvergence(SpdcError):
    """Hypergeometric series failed its tolerance within the term cap."""


class DetuningOutOfRange(SpdcError):
    """Detuning outside the small-shift validity window of the expansion."""


class GridTooNarrow(SpdcError):
    """Detuning grid truncates the spectrum too severely to integrate."""


class GridMismatch(SpdcError):
    """Two spectra were sampled on different detuning grids."""


class DimensionMismatch(SpdcError):
    """Density matrices of different dimensions were combined."""


class DegenerateSubspace(SpdcError):
    """The two OAM labels of a 2-D subspace coincide."""


class NoCrossing(SpdcError):
    """A collection-probability curve never reaches the reference level."""


class BudgetExceeded(SpdcError):
    """Requested quadrature node count exceeds the configured budget."""


class EmptyMatrix(SpdcError):
    """A crosstalk matrix with no nonzero entry was supplied."""


class ConfigError(SpdcError):
    """Malformed run-configuration file or override."""
