"""Exception types shared across the package."""


class FdrlabError(Exception):
    """Base class for all package errors."""


class DomainError(FdrlabError, ValueError):
    """An argument lies outside the domain of a function (e.g. t not in [0, 1])."""


class ConfigError(FdrlabError, ValueError):
    """A procedure, estimator or simulation is configured inconsistently."""
