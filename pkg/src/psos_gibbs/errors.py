"""Exception hierarchy shared by every module of the package."""


class PsosError(Exception):
    """Base class for all errors raised by :mod:`psos_gibbs`."""


class DomainError(PsosError, ValueError):
    """Parameters outside the domain where an operation is defined."""


class ToleranceAmbiguity(PsosError):
    """A discriminant lies inside the ambiguity band around zero.

    Raised instead of guessing which side of a boundary curve
    (Delta = 0, D = 0) the parameters belong to.
    """

    def __init__(self, message, quantity=None, value=None, band=None):
        super().__init__(message)
        self.quantity = quantity
        self.value = value
        self.band = band


class ConditionViolation(PsosError):
    """The x != 1 branch failed the positivity/ordering conditions.

    The closed-form solution count assumes ``2 < xi1 <= xi2`` and a
    nonnegative radicand for every ``y_i``; when either fails the count
    table no longer applies and the violation is reported.
    """


class NonConvergence(PsosError):
    """An iterative search exhausted its budget without converging."""


class StochasticityViolation(PsosError):
    """A transition matrix row does not sum to one (input was not a fixed point)."""


class BranchAbsent(PsosError, LookupError):
    """The requested solution branch does not exist at these parameters."""


class NoSignChange(PsosError):
    """Bisection bracket endpoints have the same sign."""


class BranchVanished(PsosError):
    """The tracked branch ceases to exist inside a bisection bracket."""

    def __init__(self, message, last_valid=None):
        super().__init__(message)
        self.last_valid = last_valid


class NotDefined(PsosError):
    """A named threshold does not exist for the requested exponent."""
