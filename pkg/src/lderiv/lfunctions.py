"""
Hurwitz zeta by Euler-Maclaurin, Dirichlet L-functions and L'/L.

L(s, chi) = q^{-s} sum_{a=1}^{q} chi(a) zeta(s, a/q).  Internally the pole is
split off: zeta_reg(s, a) = zeta(s, a) - 1/(s - 1) is entire, so every
non-principal character can be evaluated at s = 1 with no cancellation of
infinities (sum_a chi(a) = 0 kills the pole exactly).

Euler-Maclaurin with split point N and J Bernoulli corrections:

    zeta(s, a) = sum_{n<N} (n+a)^{-s} + (N+a)^{1-s}/(s-1) + (N+a)^{-s}/2
                 + sum_{j<=J} B_2j/(2j)! (s)_{2j-1} (N+a)^{-s-2j+1} + R

|R| <= |B_2J|/(2J)! |(s)_2J| (N+a)^{1-sigma-2J} / (sigma+2J-1), from the
periodic Bernoulli remainder; the s-derivative of R is bounded the same way.
N is chosen adaptively so both bounds fall below target_eps/4.

Sign convention: ``log_derivative`` returns the plain quotient L'/L.  For
sigma > 1 this equals -sum chi(n) Lambda(n) n^{-s}; the moment computations only
use |L'/L|, where the sign is immaterial.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Tuple

import mpmath
import numpy as np

from lderiv.arithmetic import bernoulli, factorize
from lderiv.characters import CharacterGroup, DirichletCharacter
from lderiv.errors import NearZeroDenominator, NonConvergence, PoleAt1

POLE_RADIUS = 1e-12
_CHUNK = 512  # residues per worker task; fixed so results ignore thread count
MIN_EPS = 1e-13  # below this the double-precision sums themselves dominate


@dataclass(frozen=True)
class EvalParams:
    """Euler-Maclaurin controls.

    ``shift`` is the split point N; ``None`` picks the smallest N that
    certifies ``target_eps``.  ``terms`` is the number J of Bernoulli terms.
    """

    target_eps: float = 1e-12
    terms: int = 15
    shift: int | None = None
    max_shift: int = 200_000

    def __post_init__(self):
        if not self.target_eps >= MIN_EPS:
            raise ValueError(f"target_eps must be >= {MIN_EPS:g}, got {self.target_eps}")
        if not 1 <= self.terms <= 25:
            raise ValueError(f"terms must lie in [1, 25], got {self.terms}")
        if self.shift is not None and self.shift < 10:
            raise ValueError(f"shift must be >= 10, got {self.shift}")


DEFAULT_PARAMS = EvalParams()


@dataclass(frozen=True)
class EMPlan:
    """A certified (N, J) choice for one value of s."""

    s: complex
    shift: int
    terms: int
    value_bound: float
    derivative_bound: float


@lru_cache(maxsize=None)
def _bernoulli_coeffs(J: int) -> Tuple[float, ...]:
    # B_2j / (2j)!, j = 1..J
    table = bernoulli(J)
    return tuple(float(b / math.factorial(2 * j)) for j, b in enumerate(table.exact, start=1))


def _rising(s: complex, m: int) -> Tuple[complex, complex]:
    """(s)_m and its s-derivative."""
    P, D = 1 + 0j, 0j
    for i in range(m):
        D = D * (s + i) + P
        P = P * (s + i)
    return P, D


def _remainder_bounds(s: complex, N: int, J: int) -> Tuple[float, float]:
    sigma = s.real
    alpha = sigma + 2 * J
    if alpha - 1 < 0.5:
        return math.inf, math.inf
    c = abs(float(bernoulli(J).exact[-1] / math.factorial(2 * J)))
    P, D = _rising(s, 2 * J)
    w = float(N)
    decay = w ** (1 - alpha)
    value = c * abs(P) * decay / (alpha - 1)
    deriv = c * decay * (
        abs(D) / (alpha - 1) + abs(P) * (math.log(w) / (alpha - 1) + 1 / (alpha - 1) ** 2)
    )
    return value, deriv


def plan(s: complex, params: EvalParams = DEFAULT_PARAMS) -> EMPlan:
    """Choose N so both remainder bounds are <= target_eps / 4 (worst case a -> 0)."""
    s = complex(s)
    J = params.terms
    goal = params.target_eps / 4

    def ok(N):
        v, d = _remainder_bounds(s, N, J)
        return v <= goal and d <= goal

    if params.shift is not None:
        N = params.shift
        if not ok(N):
            raise NonConvergence(f"N={N}, J={J} cannot certify {params.target_eps:g} at s={s}")
    else:
        lo, hi = 10, 10
        while not ok(hi):
            lo, hi = hi, 2 * hi
            if hi > params.max_shift:
                raise NonConvergence(f"no N <= {params.max_shift} certifies {params.target_eps:g} at s={s}")
        if lo == hi:
            N = hi
        else:
            while hi - lo > 1:
                mid = (lo + hi) // 2
                lo, hi = (lo, mid) if ok(mid) else (mid, hi)
            N = hi
    v, d = _remainder_bounds(s, N, J)
    return EMPlan(s, N, J, v, d)


def _phi1(z: np.ndarray) -> np.ndarray:
    """(e^z - 1)/z, entire."""
    out = np.empty_like(z)
    small = np.abs(z) < 1
    zs = z[small]
    acc = np.zeros_like(zs)
    for m in range(25, -1, -1):
        acc = acc * zs + 1 / math.factorial(m + 1)
    out[small] = acc
    zb = z[~small]
    out[~small] = np.expm1(zb) / zb
    return out


def _psi1(z: np.ndarray) -> np.ndarray:
    """(e^z - (e^z - 1)/z)/z, entire; equals sum_m (m+1) z^m/(m+2)!."""
    out = np.empty_like(z)
    small = np.abs(z) < 1
    zs = z[small]
    acc = np.zeros_like(zs)
    for m in range(25, -1, -1):
        acc = acc * zs + (m + 1) / math.factorial(m + 2)
    out[small] = acc
    zb = z[~small]
    out[~small] = (np.exp(zb) - np.expm1(zb) / zb) / zb
    return out


def _hurwitz_reg_kernel(s: complex, a: np.ndarray, N: int, J: int) -> Tuple[np.ndarray, np.ndarray]:
    """zeta(s,a) - 1/(s-1) and d/ds[zeta(s,a)] + 1/(s-1)^2 for an array of a."""
    a = np.asarray(a, dtype=np.float64)
    x = a[:, None] + np.arange(N, dtype=np.float64)[None, :]
    lx = np.log(x)
    xs = np.exp(-s * lx)
    direct = xs.sum(axis=1)
    ddirect = -(lx * xs).sum(axis=1)

    w = a + N
    lw = np.log(w)
    u = s - 1
    z = -u * lw
    pole = -lw * _phi1(z)  # ((N+a)^{1-s} - 1)/(s-1)
    dpole = lw * lw * _psi1(z)

    ws = np.exp(-s * lw)
    half = ws / 2
    dhalf = -lw * ws / 2

    bern = np.zeros_like(direct)
    dbern = np.zeros_like(direct)
    coeffs = _bernoulli_coeffs(J)
    P, D = 1 + 0j, 0j
    wpow = ws * w  # (N+a)^{-s+1}
    inv_w2 = 1.0 / (w * w)
    k = 0
    for j in range(1, J + 1):
        while k < 2 * j - 1:
            D = D * (s + k) + P
            P = P * (s + k)
            k += 1
        wpow = wpow * inv_w2  # (N+a)^{-s-2j+1}
        bern += coeffs[j - 1] * P * wpow
        dbern += coeffs[j - 1] * wpow * (D - lw * P)
    return direct + pole + half + bern, ddirect + dpole + dhalf + dbern


def hurwitz_reg_table(
    s: complex, a: np.ndarray, params: EvalParams = DEFAULT_PARAMS, threads: int = 1
) -> Tuple[np.ndarray, np.ndarray, EMPlan]:
    """Regularized zeta(s, a) and its s-derivative for every entry of ``a``."""
    s = complex(s)
    a = np.asarray(a, dtype=np.float64)
    if np.any(a <= 0) or np.any(a > 1):
        raise ValueError("Hurwitz parameter a must lie in (0, 1]")
    pl = plan(s, params)
    chunks = [a[i : i + _CHUNK] for i in range(0, len(a), _CHUNK)]

    def work(chunk):
        return _hurwitz_reg_kernel(s, chunk, pl.shift, pl.terms)

    if threads > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(work, chunks))
    else:
        parts = [work(c) for c in chunks]
    if not parts:
        return np.zeros(0, complex), np.zeros(0, complex), pl
    z = np.concatenate([p[0] for p in parts])
    dz = np.concatenate([p[1] for p in parts])
    return z, dz, pl


def _check_pole(s: complex) -> None:
    if abs(s - 1) < POLE_RADIUS:
        raise PoleAt1(f"s={s} is within {POLE_RADIUS:g} of the pole at 1")


def hurwitz_zeta(s: complex, a: float, params: EvalParams = DEFAULT_PARAMS) -> complex:
    s = complex(s)
    _check_pole(s)
    z, _, _ = hurwitz_reg_table(s, np.array([a]), params)
    return complex(z[0] + 1 / (s - 1))


def hurwitz_zeta_ds(s: complex, a: float, params: EvalParams = DEFAULT_PARAMS) -> complex:
    s = complex(s)
    _check_pole(s)
    _, dz, _ = hurwitz_reg_table(s, np.array([a]), params)
    return complex(dz[0] - 1 / (s - 1) ** 2)


def hurwitz_error_bounds(s: complex, params: EvalParams = DEFAULT_PARAMS) -> Tuple[float, float]:
    """Certified absolute error bounds (value, derivative) for any a in (0, 1]."""
    pl = plan(complex(s), params)
    return pl.value_bound, pl.derivative_bound


@dataclass(frozen=True)
class LValue:
    """L(s, chi), L'(s, chi) and their certified truncation errors."""

    index: int
    s: complex
    L: complex
    dL: complex
    err_L: float
    err_dL: float

    def log_derivative(self) -> "CertifiedValue":
        mag = abs(self.L)
        if not mag > 100 * self.err_L:
            raise NearZeroDenominator(
                f"|L(s, chi_{self.index})| = {mag:.3e} is within 100x of its error {self.err_L:.3e}",
                index=self.index,
            )
        value = self.dL / self.L
        err = (self.err_dL + abs(value) * self.err_L) / (mag - self.err_L)
        return CertifiedValue(value, err)


@dataclass(frozen=True)
class CertifiedValue:
    value: complex
    error: float

    def __complex__(self) -> complex:
        return complex(self.value)

    def __abs__(self) -> float:
        return abs(self.value)


def _l_errors(q: int, s: complex, units: int, pl: EMPlan) -> Tuple[float, float]:
    scale = q ** (-s.real) * units
    return scale * pl.value_bound, scale * (math.log(q) * pl.value_bound + pl.derivative_bound)


def evaluate_l(s: complex, chi: DirichletCharacter, params: EvalParams = DEFAULT_PARAMS) -> LValue:
    """L and L' for one character, summing chi(a) zeta(s, a/q) directly."""
    s = complex(s)
    g = chi.group
    q = g.q
    principal = chi.is_principal()
    if principal:
        _check_pole(s)
    units = g.units
    z, dz, pl = hurwitz_reg_table(s, units / q, params)
    vals = np.array([chi(int(a)) for a in units])
    qs = q ** (-s)
    S, dS = np.sum(vals * z), np.sum(vals * dz)
    if principal:
        S += len(units) / (s - 1)
        dS -= len(units) / (s - 1) ** 2
    L = qs * S
    dL = -math.log(q) * L + qs * dS
    err_L, err_dL = _l_errors(q, s, len(units), pl)
    return LValue(chi.index, s, complex(L), complex(dL), err_L, err_dL)


def dirichlet_l(s: complex, chi: DirichletCharacter, params: EvalParams = DEFAULT_PARAMS) -> complex:
    return evaluate_l(s, chi, params).L


def dirichlet_l_prime(s: complex, chi: DirichletCharacter, params: EvalParams = DEFAULT_PARAMS) -> complex:
    return evaluate_l(s, chi, params).dL


def log_derivative(s: complex, chi: DirichletCharacter, params: EvalParams = DEFAULT_PARAMS) -> CertifiedValue:
    """L'/L(s, chi) as a plain quotient, with a propagated error bound."""
    return evaluate_l(s, chi, params).log_derivative()


def l_values_all(
    s: complex,
    group: CharacterGroup,
    params: EvalParams = DEFAULT_PARAMS,
    threads: int = 1,
    skip_principal: bool = False,
) -> list[LValue]:
    """L and L' for every character mod q at once.

    sum_a chi(a) f(a) over all characters is a multidimensional DFT of f laid
    out on the discrete-log grid, so one FFT replaces phi(q) character sums.
    """
    s = complex(s)
    q = group.q
    if not skip_principal:
        _check_pole(s)
    units = group.units
    z, dz, pl = hurwitz_reg_table(s, units / q, params, threads=threads)
    pos = np.zeros(q, dtype=np.int64)
    pos[units] = np.arange(len(units))
    grid = pos[group.unit_grid()]
    n = group.size
    S = (np.fft.ifftn(z[grid]) * n).ravel()
    dS = (np.fft.ifftn(dz[grid]) * n).ravel()
    qs = q ** (-s)
    logq = math.log(q)
    err_L, err_dL = _l_errors(q, s, len(units), pl)
    out = []
    for j in range(n):
        if j == 0 and skip_principal:
            continue
        Sj, dSj = S[j], dS[j]
        if j == 0:
            Sj = np.sum(z) + n / (s - 1)
            dSj = np.sum(dz) - n / (s - 1) ** 2
        L = qs * Sj
        out.append(LValue(j, s, complex(L), complex(-logq * L + qs * dSj), err_L, err_dL))
    return out


# ---------------------------------------------------------------------------
# Stieltjes constants and the Laurent-expansion recursion for (s-1) zeta'/zeta
# ---------------------------------------------------------------------------

MAX_STIELTJES = 20


@dataclass(frozen=True)
class StieltjesConstants:
    """gamma_0..gamma_{count-1} in the standard normalization.

    zeta(s) = 1/(s-1) + sum_n (-1)^n gamma_n / n! (s-1)^n.  ``laurent(n)``
    returns the plain Laurent coefficient; ``laurent(-1)`` is 1.
    """

    count: int
    values: Tuple[float, ...]

    def gamma(self, n: int) -> float:
        if n == -1:
            return 1.0
        return self.values[n]

    def laurent(self, n: int) -> float:
        if n == -1:
            return 1.0
        return (-1) ** n * self.values[n] / math.factorial(n)


def _stieltjes_em(n: int, N: int, J: int) -> mpmath.mpf:
    # gamma_n = lim_m [sum_{k<=m} (log k)^n/k - (log m)^{n+1}/(n+1)]
    # f(x) = (log x)^n / x;  f^{(r)}(x) = x^{-1-r} P_r(log x),  P_{r+1} = P_r' - (r+1) P_r
    total = mpmath.fsum(mpmath.log(k) ** n / k for k in range(2, N)) if n else mpmath.fsum(
        mpmath.mpf(1) / k for k in range(1, N)
    )
    L = mpmath.log(N)
    total -= L ** (n + 1) / (n + 1)
    total += L**n / N / 2
    poly = [0] * n + [1]  # coefficients of P_0 in powers of L, low to high
    for r in range(2 * J - 1):
        deriv = [i * c for i, c in enumerate(poly)][1:] + [0]
        poly = [d - (r + 1) * c for d, c in zip(deriv, poly)]
        if r % 2 == 0:  # poly is now P_{r+1}, r+1 = 2j-1
            j = (r + 2) // 2
            val = mpmath.polyval(poly[::-1], L) / mpmath.mpf(N) ** (r + 2)
            total -= mpmath.bernoulli(2 * j) / mpmath.factorial(2 * j) * val
    return total


@lru_cache(maxsize=None)
def _stieltjes_cached(count: int) -> Tuple[float, ...]:
    with mpmath.workdps(60):
        return tuple(float(_stieltjes_em(n, N=200, J=24)) for n in range(count))


def stieltjes_constants(count: int) -> StieltjesConstants:
    if count < 1:
        raise ValueError("count must be >= 1")
    if count > MAX_STIELTJES:
        raise ValueError(f"count {count} > {MAX_STIELTJES}")
    return StieltjesConstants(count, _stieltjes_cached(count))


@dataclass(frozen=True)
class ECoefficients:
    """Taylor coefficients of (s-1) zeta'(s)/zeta(s) at s = 1; ``values[0] = -1``."""

    values: Tuple[float, ...]

    def __getitem__(self, n: int) -> float:
        return self.values[n]

    def __len__(self) -> int:
        return len(self.values)


def e_coefficients(N: int) -> ECoefficients:
    """E_0..E_N from E_n = (n-1) c_{n-1} - sum_{k=1}^{n} c_{k-1} E_{n-k}, E_0 = -1.

    c_n are the Laurent coefficients of zeta at 1 (c_{-1} = 1), i.e. the
    Stieltjes constants with their (-1)^n/n! factors absorbed.
    """
    if not 0 <= N <= 15:
        raise ValueError(f"N must lie in [0, 15], got {N}")
    st = stieltjes_constants(max(N, 1))
    c = st.laurent
    E = [-1.0]
    for n in range(1, N + 1):
        E.append((n - 1) * c(n - 1) - math.fsum(c(k - 1) * E[n - k] for k in range(1, n + 1)))
    return ECoefficients(tuple(E))


def euler_factor(s: complex, q: int) -> complex:
    """prod_{p | q} (1 - p^{-s})."""
    out = 1 + 0j
    for p in factorize(q).primes:
        out *= 1 - p ** (-complex(s))
    return out
