"""Exception types raised across the package."""


class CatBellError(Exception):
    """Base class for runtime model errors."""


class TruncationError(CatBellError):
    """A truncated series did not reach its declared tail tolerance."""


class NonIntegrableKernelError(CatBellError):
    """Gaussian kernel with a quadratic form that is not positive definite."""


class QuadratureError(CatBellError):
    """Adaptive quadrature failed to reach the requested accuracy."""


class CompletenessError(CatBellError):
    """A Kraus set is not complete on the truncated space."""


class CutoffError(CatBellError):
    """Fock cutoff too small for the requested state."""


class StepCountError(CatBellError):
    """Time stepping did not converge under step halving."""


class NoCrossingError(CatBellError):
    """maxB - 2 has the same sign at both ends of a bracket."""


class ConfigError(ValueError):
    """Invalid experiment configuration (CLI exit code 2)."""
