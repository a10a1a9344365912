"""Exception types raised across the package."""


class EpsimError(Exception):
    """Base class for all package errors."""


class ValidationError(EpsimError, ValueError):
    """Invalid input parameters or mismatched dimensions."""


class PreconditionError(EpsimError, ValueError):
    """An operation was called outside its domain (e.g. a non-critical loss rate)."""


class CapacityError(EpsimError):
    """A Fock basis would exceed the configured dimension cap."""


class NumericError(EpsimError, ArithmeticError):
    """Non-finite input, overflow, or another numerical breakdown."""


class PostSelectionError(NumericError):
    """The N-photon component has underflowed; post-selection is meaningless."""
