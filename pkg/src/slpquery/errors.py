"""Exception hierarchy shared by every module.

The CLI maps ``InputError`` subclasses to exit code 2 and ``LimitError``
subclasses to exit code 3.
"""

from __future__ import annotations


class SlpQueryError(Exception):
    """Base class for all library errors."""


class InputError(SlpQueryError):
    """Malformed or semantically invalid input."""


class LimitError(SlpQueryError):
    """A budget, limit or size guard was hit."""


class FormatError(InputError):
    """A line of a text format could not be parsed."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class MissingRule(InputError):
    pass


class CyclicGrammar(InputError):
    pass


class EmptyRuleBody(InputError):
    pass


class DuplicateRule(InputError):
    pass


class DocTooLarge(InputError):
    pass


class UnknownSymbol(InputError):
    pass


class UnknownState(InputError):
    pass


class DuplicateTransition(InputError):
    pass


class DimensionMismatch(InputError):
    pass


class MarkerConflict(InputError):
    pass


class InconsistentMarkers(InputError):
    pass


class NotSequential(InputError):
    pass


class NameClash(InputError):
    pass


class UnknownDoc(InputError):
    pass


class MarkerInUse(InputError):
    pass


class LimitExceeded(LimitError):
    pass


class BudgetExceeded(LimitError):
    pass


class ContractViolation(SlpQueryError):
    """Raised in debug mode when a disjointness or decomposition contract fails."""
