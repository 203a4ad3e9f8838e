"""Exception hierarchy shared by every module."""


class SynthcapError(Exception):
    """Base class for all package errors."""


class AlphabetError(SynthcapError, ValueError):
    """Symbols or alphabets that do not line up."""


class InvalidDistribution(SynthcapError, ValueError):
    """A pmf or channel that violates its invariants."""


class InfeasibleError(SynthcapError):
    """A requested rate point or parameter is outside the feasible set."""


class BudgetExceeded(SynthcapError):
    """An exhaustive computation would exceed the enumeration budget."""


class InvariantViolation(SynthcapError):
    """An internal consistency check failed."""
