"""Numerics for power means of |L'/L(1+it0, chi)| over Dirichlet characters mod q."""

from lderiv.errors import (
    EmptyCharacterSet,
    NearZeroDenominator,
    NonConvergence,
    PoleAt1,
    TableBudgetExceeded,
)

__version__ = "0.1.0"

__all__ = [
    "EmptyCharacterSet",
    "NearZeroDenominator",
    "NonConvergence",
    "PoleAt1",
    "TableBudgetExceeded",
    "__version__",
]
