"""Error taxonomy shared by all modules.

The CLI maps these onto exit codes: configuration problems exit 2,
numerical failures exit 3, failed checks exit 1.
"""


class AnisoeigError(Exception):
    """Base class for all package errors."""


class ConfigurationError(AnisoeigError):
    """Malformed spec, polygon, or run configuration."""


class DomainError(AnisoeigError):
    """Input outside the mathematical domain of an operation."""


class SingularityError(DomainError):
    """Requested derivative does not exist at the evaluation point."""


class NumericalError(AnisoeigError):
    """An iterative procedure failed to reach its target tolerance."""
