"""Exception hierarchy shared by the library and the CLI."""


class QKDLabError(Exception):
    """Base class for every error raised by qkdlab."""


class ConfigurationError(QKDLabError, ValueError):
    """Bad preset, config file, EC table or protocol name."""


class DomainError(QKDLabError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class InconsistentObservationError(DomainError):
    """Decoy observations that no honest channel could have produced."""


class WeaknessViolationError(DomainError):
    """A weak decoy whose intensity is above the configured guard."""


class SingularSystemError(DomainError):
    """The multi-decoy linear system has no unique solution."""


class NoRootError(DomainError):
    """A root-finding problem has no solution on its interval."""


class NoCutoffError(DomainError):
    """The key rate never rises above the requested threshold."""


class MisuseError(QKDLabError, ValueError):
    """An operation was called with inputs it is not meant for."""
