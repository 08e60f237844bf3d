"""Exception hierarchy.

Every error carries a ``category`` string so the command line front end can
emit a machine-readable record without inspecting exception types.
"""

__all__ = [
    "ConfigurationError",
    "DomainError",
    "InstabilityError",
    "InsufficientDataError",
    "InvertibilityError",
    "MergeError",
    "OrderingError",
    "PathmildError",
    "PropagatorError",
    "ResolutionError",
    "ShapeError",
    "SingularityError",
]


class PathmildError(Exception):
    category = "error"


class ConfigurationError(PathmildError, ValueError):
    """Invalid grid, recipe or parameter combination."""

    category = "invalid-configuration"


class ShapeError(PathmildError, ValueError):
    category = "shape"


class OrderingError(PathmildError, ValueError):
    """Time indices supplied in the wrong order."""

    category = "ordering"


class ResolutionError(PathmildError, ValueError):
    """Regularization window not resolvable on the time grid."""

    category = "resolution"


class SingularityError(PathmildError, ValueError):
    category = "singularity"


class InvertibilityError(PathmildError, ArithmeticError):
    category = "invertibility"


class PropagatorError(PathmildError, ArithmeticError):
    category = "propagator"


class InstabilityError(PathmildError, ArithmeticError):
    category = "instability"


class InsufficientDataError(PathmildError, ValueError):
    category = "insufficient-data"


class DomainError(PathmildError, ValueError):
    category = "domain"


class MergeError(PathmildError, ValueError):
    category = "merge"
