"""Exception types shared across modules."""


class LDerivError(Exception):
    """Base class for numerical failures raised by this package."""


class NonConvergence(LDerivError):
    """No Euler-Maclaurin split within budget certifies the requested accuracy."""


class PoleAt1(LDerivError):
    """Evaluation requested at (or numerically at) the pole s = 1."""


class NearZeroDenominator(LDerivError):
    """|L(s, chi)| is too close to its certified error to form L'/L.

    Callers should escalate precision; no value is returned.
    """

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class EmptyCharacterSet(LDerivError):
    """The requested character set is empty (q = 2 with t0 = 0)."""


class TableBudgetExceeded(LDerivError, ValueError):
    """A sieve/convolution table would exceed the configured memory budget."""
