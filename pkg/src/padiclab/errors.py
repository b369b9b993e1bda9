"""Exception hierarchy shared by every module."""


class PadicLabError(Exception):
    pass


class PrecisionExhausted(PadicLabError):
    """A truncated p-adic quantity vanished at its working precision, so
    exact zero cannot be told apart from a very small absolute value."""


class ZeroVectorError(PadicLabError, ValueError):
    pass


class InvalidInput(PadicLabError, ValueError):
    pass


class DomainError(PadicLabError, ValueError):
    pass


class RankDeficient(PadicLabError, ValueError):
    pass


class SingularMatrix(PadicLabError, ValueError):
    pass


class DegenerateOnSample(PadicLabError):
    pass


class BudgetExceeded(PadicLabError):
    """Raised by enumeration kernels.  Callers that can return partial data
    catch it and mark their result incomplete."""

    def __init__(self, message: str, partial=None):
        super().__init__(message)
        self.partial = partial
