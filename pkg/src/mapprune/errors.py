"""Exception types shared across the package."""


class MapPruneError(Exception):
    """Base class for all errors raised by this package."""


class InvalidLabelingError(MapPruneError):
    """A labeling refers to a node or label outside the model's ranges."""


class DomainError(MapPruneError):
    """A node subset or partial-labeling domain is inconsistent."""


class UnsupportedArityError(MapPruneError):
    """An operation defined for pairwise models met a factor of arity >= 3."""


class SolverError(MapPruneError):
    """A solver failed to produce a usable result (numerical breakdown)."""


class StateSpaceCapError(MapPruneError):
    """Exhaustive enumeration was requested beyond the configured cap."""


class UaiParseError(MapPruneError):
    """Malformed UAI model text."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
