"""Exception hierarchy.

Every failure that would break a chain of enclosures is an exception; no
routine silently returns a widened or empty set in its place.
"""


class HovarError(Exception):
    """Base class for all errors raised by this package."""


class IntervalError(HovarError, ArithmeticError):
    pass


class DivisionByZeroInterval(IntervalError, ZeroDivisionError):
    """Divisor interval contains zero."""


class IntervalOverflow(IntervalError, OverflowError):
    """A bound left the finite binary64 range."""


class DomainError(IntervalError, ValueError):
    """Argument outside the domain of an elementary function (e.g. sqrt of negatives)."""


class EmptyIntersection(IntervalError):
    """Two sets that must overlap do not: some enclosure assumption is broken."""


class SingularMidpoint(IntervalError, ArithmeticError):
    """Approximate inversion of a point matrix failed or could not be verified."""


class EnclosureFailure(HovarError):
    """No rough enclosure could be validated above the minimal step."""


class StepError(HovarError):
    """An integration step failed; ``step`` holds the index of the failing step."""

    def __init__(self, step, cause):
        self.step = step
        self.cause = cause
        super().__init__(f"step {step}: {type(cause).__name__}: {cause}")


class TangencyError(HovarError):
    """The vector field is not transversal to a section on a crossing enclosure."""


class NoCrossing(HovarError):
    """No return to the section within the allowed time."""


class ParseError(HovarError, ValueError):
    """Malformed expression or configuration text."""
