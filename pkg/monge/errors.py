"""
Typed errors raised by the monge services.

Every error derives from MongeError so callers (the CLI in particular) can
separate data/runtime failures from programming errors.
"""


class MongeError(Exception):
    """Base class for all library errors"""


# Shapes and dimensions

class DimMismatch(MongeError, ValueError):
    """Operands do not share a dimension"""


class ShapeMismatch(DimMismatch):
    """Signals or images do not share a shape"""


# Matrix algebra

class NonSymmetric(MongeError, ValueError):
    """Matrix is not symmetric within tolerance"""


class NonFinite(MongeError, ValueError):
    """Input contains NaN or infinite entries"""


class NotPositiveDefinite(MongeError, ValueError):
    """Matrix has a non-positive eigenvalue"""


class IllConditioned(MongeError, ValueError):
    """Eigenvalue ratio too small to invert safely; use shrinkage"""


class AlphaOutOfRange(MongeError, ValueError):
    """Shrinkage coefficient outside [0, 1]"""


class ZeroMatrix(MongeError, ValueError):
    """Matrix has no positive eigenvalue"""


# Estimation

class SingularCovariance(MongeError):
    """Empirical covariance cannot be inverted"""


class SingularSource(SingularCovariance):
    """Source covariance is singular and no shrinkage was requested"""


class SingularPooled(SingularCovariance):
    """Pooled class covariance is singular and no shrinkage was requested"""


class ZeroSourceSpectrum(MongeError):
    """Source power spectrum vanishes at some frequency"""


class ImaginaryResidue(MongeError):
    """Inverse transform left a non-negligible imaginary part"""


class MissingClass(MongeError, ValueError):
    """A class has no training sample"""


class NonPositive(MongeError, ValueError):
    """Value must be strictly positive"""


class UnknownLoss(MongeError, ValueError):
    """Loss identifier is not supported"""


class InvalidConfig(MongeError, ValueError):
    """Experiment configuration violates its invariants"""


# Files

class IoError(MongeError, OSError):
    """Underlying file operation failed"""


class DataFormatError(MongeError):
    """File content does not follow the expected layout"""


class BadMagic(DataFormatError):
    """IDX magic number does not match the expected file kind"""


class TruncatedFile(DataFormatError):
    """File ends before its declared payload"""


class MapFormatError(DataFormatError):
    """Map artifact has an unknown tag or inconsistent length"""


# Plotting

class InvalidSeries(MongeError, ValueError):
    """Plot series abscissae are not strictly increasing or lengths differ"""


class NonPositiveOnLogAxis(InvalidSeries):
    """Non-positive value on a log-scaled axis"""
