"""Exception and warning types raised across the package."""


class NumericalError(ArithmeticError):
    """Base class for numerical failures (CLI exit code 3)."""


class NoBracket(NumericalError):
    pass


class NotMonotone(NumericalError):
    pass


class NonConvergent(NumericalError):
    pass


class Degenerate(NumericalError, ValueError):
    pass


class DomainError(NumericalError, ValueError):
    pass


class IntegrabilityError(NumericalError):
    pass


class ConfigError(ValueError):
    """Invalid user configuration (CLI exit code 2)."""


class TruncationWarning(UserWarning):
    """A simulation hit its hard epoch cap before the discount floor."""
