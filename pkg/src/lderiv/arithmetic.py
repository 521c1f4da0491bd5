"""
Integer-arithmetic kernels.

Provides:
- trial-division factorization and Euler's totient
- von Mangoldt table Lambda(m) for m <= M (smallest-prime-factor sieve)
- k-fold Dirichlet convolutions Lambda^{*k}, truncated at M
- exact Bernoulli numbers B_2, B_4, ... for Euler-Maclaurin

A truncated convolution is exact for every index below the truncation point,
since every divisor of m <= M is itself <= M.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import List, Tuple

import numpy as np

from lderiv.errors import TableBudgetExceeded

# 10^7 float64 entries, ~80 MB per table.
DEFAULT_TABLE_BUDGET = 10**7
MAX_BERNOULLI = 60


@dataclass(frozen=True)
class FactoredInteger:
    n: int
    factors: Tuple[Tuple[int, int], ...] = ()

    def __post_init__(self):
        prod = 1
        last = 1
        for p, e in self.factors:
            if p <= last or e < 1:
                raise ValueError(f"malformed factorization {self.factors!r}")
            last = p
            prod *= p**e
        if prod != self.n:
            raise ValueError(f"factors of {self.n} multiply to {prod}")

    @property
    def primes(self) -> List[int]:
        return [p for p, _ in self.factors]

    def is_prime(self) -> bool:
        return len(self.factors) == 1 and self.factors[0][1] == 1

    def prime_powers(self) -> List[int]:
        return [p**e for p, e in self.factors]


@dataclass(frozen=True)
class MangoldtTable:
    """Lambda(m) for 0 <= m <= limit; entry 0 is an unused zero."""

    limit: int
    values: np.ndarray = field(repr=False)

    def __getitem__(self, m):
        return self.values[m]


@dataclass(frozen=True)
class ConvolutionTable:
    """Lambda^{*k}(m) for 0 <= m <= limit; entry 0 is an unused zero."""

    k: int
    limit: int
    values: np.ndarray = field(repr=False)

    def __getitem__(self, m):
        return self.values[m]


@dataclass(frozen=True)
class BernoulliTable:
    """Even-index Bernoulli numbers; ``exact[j - 1]`` is B_{2j}."""

    count: int
    exact: Tuple[Fraction, ...]
    values: np.ndarray = field(repr=False)

    def b2j(self, j: int) -> Fraction:
        return self.exact[j - 1]


def _check_budget(M: int, budget: int | None) -> None:
    budget = DEFAULT_TABLE_BUDGET if budget is None else budget
    if M > budget:
        raise TableBudgetExceeded(
            f"table size {M} exceeds budget {budget}; pass a larger budget explicitly"
        )


def factorize(n: int) -> FactoredInteger:
    """Factor ``n`` by trial division with a 2-3-5 wheel (fine up to ~1e12)."""
    n = int(n)
    if n < 1:
        raise ValueError(f"factorize needs n >= 1, got {n}")
    factors = []
    m = n
    for p in (2, 3, 5):
        if m % p == 0:
            e = 0
            while m % p == 0:
                m //= p
                e += 1
            factors.append((p, e))
    steps = (4, 2, 4, 2, 4, 6, 2, 6)
    d, i = 7, 0
    while d * d <= m:
        if m % d == 0:
            e = 0
            while m % d == 0:
                m //= d
                e += 1
            factors.append((d, e))
        d += steps[i]
        i = (i + 1) & 7
    if m > 1:
        factors.append((m, 1))
    return FactoredInteger(n, tuple(factors))


def euler_phi(n) -> int:
    """Totient of an int or a FactoredInteger."""
    fn = n if isinstance(n, FactoredInteger) else factorize(n)
    phi = 1
    for p, e in fn.factors:
        phi *= p ** (e - 1) * (p - 1)
    return phi


def smallest_prime_factors(M: int) -> np.ndarray:
    """spf[m] = least prime dividing m, for 2 <= m <= M (spf[0] = spf[1] = 0)."""
    spf = np.zeros(M + 1, dtype=np.int64)
    if M < 2:
        return spf
    spf[2:] = np.arange(2, M + 1)
    for p in range(2, math.isqrt(M) + 1):
        if spf[p] != p:
            continue
        block = spf[p * p :: p]
        # primes are visited in increasing order, so first writer wins
        block[block > p] = p
    return spf


def mangoldt_table(M: int, budget: int | None = None) -> MangoldtTable:
    if M < 1:
        raise ValueError(f"mangoldt_table needs M >= 1, got {M}")
    _check_budget(M, budget)
    lam = np.zeros(M + 1, dtype=np.float64)
    if M >= 2:
        spf = smallest_prime_factors(M)
        primes = np.nonzero(spf[2:] == np.arange(2, M + 1))[0] + 2
        lam[primes] = np.log(primes.astype(np.float64))
        for p in primes[: np.searchsorted(primes, math.isqrt(M), side="right")]:
            p = int(p)
            logp = math.log(p)
            pk = p * p
            while pk <= M:
                lam[pk] = logp
                pk *= p
    return MangoldtTable(M, lam)


def dirichlet_convolve(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Truncated Dirichlet convolution (a * b)(m) for 1 <= m <= len(a) - 1.

    Iterates over the support of ``a``; pass the sparser table first.
    """
    M = len(a) - 1
    if len(b) != len(a):
        raise ValueError("tables must share a truncation point")
    out = np.zeros(M + 1, dtype=np.float64)
    for d in np.nonzero(a[1:])[0] + 1:
        d = int(d)
        span = M // d
        out[d : d * span + 1 : d] += a[d] * b[1 : span + 1]
    return out


@lru_cache(maxsize=8)
def _convolution_values(k: int, M: int, budget: int | None) -> np.ndarray:
    lam = mangoldt_table(M, budget).values
    if k == 1:
        return lam
    # Lambda is supported on prime powers, so it drives the outer loop
    return dirichlet_convolve(lam, _convolution_values(k - 1, M, budget))


def convolve_mangoldt(k: int, M: int, budget: int | None = None) -> ConvolutionTable:
    """Lambda^{*k}(m) for m <= M by (k - 1) truncated convolutions with Lambda."""
    if k < 1:
        raise ValueError(f"convolution order must be >= 1, got {k}")
    if M < 1:
        raise ValueError(f"truncation must be >= 1, got {M}")
    _check_budget(M, budget)
    values = _convolution_values(int(k), int(M), budget)
    values.flags.writeable = False
    return ConvolutionTable(k, M, values)


@lru_cache(maxsize=None)
def _bernoulli_exact(n_max: int) -> Tuple[Fraction, ...]:
    # sum_{j=0}^{n} C(n+1, j) B_j = 0, B_0 = 1 (B_1 = -1/2 convention)
    B = [Fraction(1)]
    for n in range(1, n_max + 1):
        acc = Fraction(0)
        for j in range(n):
            acc += math.comb(n + 1, j) * B[j]
        B.append(-acc / (n + 1))
    return tuple(B)


def bernoulli(count: int) -> BernoulliTable:
    """B_2, B_4, ..., B_{2*count}, exact rationals plus float64 copies."""
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    if count > MAX_BERNOULLI:
        raise ValueError(f"count {count} > {MAX_BERNOULLI}: Euler-Maclaurin terms diverge first")
    B = _bernoulli_exact(2 * count)
    exact = tuple(B[2 * j] for j in range(1, count + 1))
    return BernoulliTable(count, exact, np.array([float(b) for b in exact]))
