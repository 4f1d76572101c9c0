"""Exception types raised by memmap."""


class MemmapError(Exception):
    """Base class for all package errors."""


class InvalidArgumentError(MemmapError, ValueError):
    """Bad shapes, out-of-domain parameters, non-finite inputs."""


class NumericError(MemmapError, ArithmeticError):
    """A factorization failed or a positivity invariant was violated."""


class UnsupportedError(MemmapError, NotImplementedError):
    pass


class InconclusiveError(MemmapError):
    """An oracle could not reach a verdict (e.g. quadrature box too small)."""


class ModelFormatError(MemmapError, ValueError):
    """A model file could not be parsed or failed validation."""


class VersionError(ModelFormatError):
    pass
