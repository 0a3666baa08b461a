"""Exception types raised across the package."""


class IntflowError(ValueError):
    """Base class for all package errors."""


class SingularInputError(IntflowError):
    """Kernel evaluated at a coincident pair or with non-finite input."""


class UnsupportedDimensionError(IntflowError):
    pass


class InvalidDistributionError(IntflowError):
    pass


class InvalidPerturbationError(IntflowError):
    pass


class InsufficientSamplesError(IntflowError):
    pass


class InvalidInputError(IntflowError):
    pass


class DegenerateDataError(IntflowError):
    pass


class GridError(IntflowError):
    pass


class ConfigError(IntflowError):
    pass
