"""Exception hierarchy shared by every module.

The CLI maps each class onto a distinct exit status, so callers can tell a
malformed file from an impossible observation without parsing messages.
"""


class IciError(Exception):
    """Base class for all errors raised by this package."""

    exit_code = 1


class UsageError(IciError, ValueError):
    """Bad arguments: unknown variable, out-of-range value, bad ordering."""

    exit_code = 2


class ParseError(IciError, ValueError):
    """A network file could not be read into the object model."""

    exit_code = 3


class ValidationError(IciError, ValueError):
    """A network parsed but violates a structural or numeric invariant."""

    exit_code = 4

    def __init__(self, violations):
        if isinstance(violations, str):
            violations = [violations]
        self.violations = list(violations)
        super().__init__("; ".join(self.violations) or "invalid network")


class StructureError(ValidationError):
    """The parent/child arcs contain a directed cycle."""


class ConfigurationError(IciError):
    """Inconsistent operator configuration, e.g. a convergent variable with no base op."""

    exit_code = 4


class ImpossibleEvidenceError(IciError, ArithmeticError):
    """The observations have probability zero, so no posterior exists."""

    exit_code = 5


class ResourceBoundError(IciError, MemoryError):
    """A computation would exceed its configured cell budget."""

    exit_code = 6
