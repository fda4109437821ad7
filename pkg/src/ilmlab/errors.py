"""Exception hierarchy shared by all ilmlab modules."""


class ILMError(Exception):
    """Base class for every error raised by ilmlab."""


class PreconditionError(ILMError, ValueError):
    """Arguments violate an operation's documented preconditions."""


class DomainError(ILMError):
    """Valid arguments, but the requested object does not exist."""


class NoCompetingRoots(DomainError):
    """``f`` has no pair of nonzero roots ``a < A`` for the given gamma."""


class NumericalError(ILMError):
    """A numerical routine failed to deliver a trustworthy answer."""


class NoConvergence(NumericalError):
    pass


class SignPatternBroken(NumericalError):
    """A solved profile no longer carries the sign pattern of its code."""


class WindowTooSmall(NumericalError):
    pass


class SingularLplus(NumericalError):
    pass


class InitialSolveFailed(NumericalError):
    pass


class NotApplicable(ILMError):
    """A family-specific prediction was requested for a code outside the family."""


class NotGrowing(ILMError):
    """No exponential growth window could be found in a deviation series."""
