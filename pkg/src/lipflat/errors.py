"""Exception hierarchy shared across the package."""


class LipflatError(Exception):
    """Base class for all library errors."""


class ParameterError(LipflatError):
    """An argument is outside its documented domain."""


class StructuralError(LipflatError):
    """Malformed input data (non-square matrix, bad JSON document, ...)."""


class PreconditionError(LipflatError):
    """A documented operation precondition does not hold for the input."""


class ResourceError(LipflatError):
    """Input size exceeds a documented guard."""
