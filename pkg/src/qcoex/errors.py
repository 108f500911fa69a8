"""Exception hierarchy shared by the engine modules and the CLI."""


class QcoexError(Exception):
    """Base class for all engine errors."""

    exit_code = 1


class ConfigError(QcoexError):
    exit_code = 2


class DomainError(QcoexError, ValueError):
    """A physical or mathematical precondition was violated."""

    exit_code = 3


class RangeError(DomainError):
    pass


class UnsupportedRegimeError(DomainError):
    pass


class UnderdeterminedError(DomainError):
    pass


class TopologyError(DomainError):
    pass


class UndefinedVisibilityError(DomainError):
    pass


class InvariantError(DomainError):
    pass


class RankDeficiencyError(DomainError):
    pass


class InfeasibleError(QcoexError):
    exit_code = 4

    def __init__(self, message, binding=()):
        super().__init__(message)
        self.binding = tuple(binding)


class ConvergenceError(QcoexError):
    exit_code = 5

    def __init__(self, message, last_iterate=None):
        super().__init__(message)
        self.last_iterate = last_iterate
