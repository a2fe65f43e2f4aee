"""Shared exception types.

Kept in one module so that the layered modules (arith -> curve -> eds ->
divmodel) can raise the same taxonomy without circular imports.
"""


class DeflabError(Exception):
    """Base class for toolkit errors."""


class BudgetExhaustedError(DeflabError):
    """An effort budget ran out before the computation could finish.

    Carries a ``details`` dict describing what would be needed to continue.
    """

    def __init__(self, message, details=None):
        super().__init__(message)
        self.details = details or {}


class IncompleteFactorizationError(DeflabError):
    """A decision needed full knowledge of a factorization that is only
    partially known.  ``value`` is the integer whose factorization is
    incomplete and ``index`` (when set) names the sequence index it came
    from."""

    def __init__(self, message, value=None, index=None):
        super().__init__(message)
        self.value = value
        self.index = index


class OffCurveError(DeflabError):
    """A point that was required to lie on a curve does not."""


class InfinityError(DeflabError):
    """The point at infinity appeared where an affine point was required."""


class BadPrimeError(DeflabError):
    """A prime of bad reduction (or a prime in a denominator) was used
    where a good prime is required."""


class FormulaError(DeflabError):
    """Base class for first-order formula handling errors."""


class FormulaParseError(FormulaError):
    """Malformed s-expression input."""


class FormulaSortError(FormulaError):
    """A term or atom is not well formed for the formula's sort."""


class ShapeError(DeflabError):
    """An input formula does not have the shape an algorithm requires."""


class TooManyUniversalsError(ShapeError):
    """The quantifier-packing transform got more universal variables than
    the extension degree can absorb."""


class PreconditionError(DeflabError):
    """A documented precondition of an operation does not hold."""
