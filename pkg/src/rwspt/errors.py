"""Exception hierarchy shared by all modules."""

from __future__ import annotations


class RwsptError(Exception):
    """Base class for every error raised by the package."""


class UnderflowError(RwsptError, ValueError):
    """A bag subtraction would produce a negative multiplicity."""


class UnknownTransitionError(RwsptError, KeyError):
    """A transition was queried against a net that does not contain it."""

    def __str__(self) -> str:  # KeyError quotes its argument otherwise
        return str(self.args[0]) if self.args else ""


class NotEnabledError(RwsptError):
    """A transition was fired in a marking where it is not enabled."""


class DuplicateTransitionError(RwsptError, ValueError):
    """Two transitions share the same (input, output, inhibitor, tag) identity."""


class ParseError(RwsptError):
    """Syntax error in a ``.rwspt`` document, with a 1-based position."""

    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{message} (line {line}, column {column})")
        self.message = message
        self.line = line
        self.column = column


class SemanticError(ParseError):
    """A syntactically valid document that violates a net invariant."""


class NotSymmetricError(RwsptError):
    """A net does not satisfy the symmetric labeling condition."""


class NetMismatchError(RwsptError):
    """Two systems that must share a net do not."""


class StaleMatchError(RwsptError):
    """A rule match is no longer applicable to the given system."""


class StateLimitExceeded(RwsptError):
    """Exploration stopped early; ``partial`` holds the graph built so far."""

    def __init__(self, message: str, partial):
        super().__init__(message)
        self.partial = partial


class PartitionMismatchError(RwsptError):
    """An ordinary state normalizes to a class missing from the quotient."""


class ConfigError(RwsptError, ValueError):
    """Invalid model configuration."""


class EmptyChainError(RwsptError, ValueError):
    """A CTMC with no states was passed to a solver."""
