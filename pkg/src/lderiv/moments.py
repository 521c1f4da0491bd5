"""
Main-term series, empirical power means and the smoothed double sum.

main term:   M_k(q) = sum_{m >= 1, (m,q)=1} Lambda^{*k}(m)^2 / m^2
empirical:   (1/phi(q)) sum_chi |L'/L(1+it0, chi)|^{2k}
             (all chi when t0 != 0, chi != chi_0 when t0 = 0)
smoothed:    sum over m = n mod q, (q, mn) = 1 of
             Lambda^{*k}(m) Lambda^{*k}(n) m^{-1-it0} n^{-1+it0} exp(-mn/X)

For prime q the coprimality filter on the main term is dropped (the removed
prime-power terms are O((log q)^{2k}/q^2)).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import List, Sequence, Tuple

import numpy as np

from lderiv.arithmetic import convolve_mangoldt, euler_phi, factorize
from lderiv.characters import build_group
from lderiv.errors import EmptyCharacterSet, LDerivError, TableBudgetExceeded
from lderiv.lfunctions import DEFAULT_PARAMS, CertifiedValue, EvalParams, l_values_all
from lderiv.reduction import block_fsum, ordered_map

log = logging.getLogger(__name__)

T0_MAX = 10.0
SMALL_T0 = 0.1


@dataclass(frozen=True)
class MainTermResult:
    k: int
    q: int
    value: float
    truncation: int
    tail_bound: float
    restricted: bool


@dataclass(frozen=True)
class EmpiricalMoment:
    k: int
    q: int
    t0: float
    value: float
    characters_used: int
    excluded_principal: bool
    error: float = 0.0


@dataclass(frozen=True)
class SmoothedSumResult:
    k: int
    q: int
    t0: float
    X: float
    value: complex
    cutoff: float
    truncation_bound: float
    terms: int
    diagonal_only: bool = False


@dataclass(frozen=True)
class DeviationRow:
    q: int
    k: int
    t0: float
    empirical: float
    main_term: float
    deviation: float
    predicted_scale: float
    tail_bound: float
    restricted: bool
    status: str = "ok"


@dataclass
class DeviationReport:
    rows: List[DeviationRow] = field(default_factory=list)
    notes: List[str] = field(default_factory=list)

    def ok_rows(self) -> List[DeviationRow]:
        return [r for r in self.rows if r.status == "ok"]


def _coprime_mask(limit: int, q: int) -> np.ndarray:
    mask = np.ones(limit + 1, dtype=bool)
    mask[0] = False
    for p in factorize(q).primes:
        mask[::p] = False
    return mask


def tail_bound(k: int, M: int) -> float:
    """Upper bound for sum_{m > M} (log m)^{2k} / m^2.

    Lambda^{*k}(m) <= (log m)^k makes this a bound on the omitted main-term
    mass.  Beyond e^k the summand decreases, so the sum is below the integral
    Gamma(2k+1, log M) = (2k)!/M * sum_{j<=2k} (log M)^j/j!.
    """
    start = max(M, math.ceil(math.exp(k)))
    head = math.fsum(math.log(m) ** (2 * k) / m**2 for m in range(M + 1, start + 1))
    x = math.log(start)
    integral = math.factorial(2 * k) / start * math.fsum(x**j / math.factorial(j) for j in range(2 * k + 1))
    return head + integral


def main_term(
    k: int,
    q: int,
    M: int,
    restricted: bool = True,
    threads: int = 1,
    budget: int | None = None,
) -> MainTermResult:
    """Truncated main-term series with a rigorous tail bound.

    ``restricted`` keeps only m coprime to q; with it off the series is
    q-independent.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if M < 2:
        raise ValueError(f"truncation must be >= 2, got {M}")
    table = convolve_mangoldt(k, M, budget).values
    m = np.arange(1, M + 1, dtype=np.float64)
    terms = (table[1:] / m) ** 2
    if restricted:
        terms = terms * _coprime_mask(M, q)[1:]
    value = block_fsum(terms, threads=threads)
    return MainTermResult(k, q, value, M, tail_bound(k, M), restricted)


def main_term_sequence(K: int, M: int, threads: int = 1, budget: int | None = None) -> List[MainTermResult]:
    """Unrestricted M_0 = 1, M_1, ..., M_K (the prime-modulus limit moments)."""
    seq = [MainTermResult(0, 1, 1.0, M, 0.0, False)]
    for k in range(1, K + 1):
        seq.append(main_term(k, 1, M, restricted=False, threads=threads, budget=budget))
    return seq


def character_set_size(q: int, t0: float) -> int:
    return euler_phi(q) - (1 if t0 == 0 else 0)


def _check_t0(t0: float, t0_max: float) -> None:
    if not math.isfinite(t0):
        raise ValueError("t0 must be finite")
    if abs(t0) > t0_max:
        raise ValueError(f"|t0| = {abs(t0)} exceeds the guard {t0_max}; raise t0_max explicitly")


@lru_cache(maxsize=64)
def _log_derivatives(q: int, t0: float, params: EvalParams) -> Tuple[Tuple[int, CertifiedValue], ...]:
    group = build_group(q)
    s = complex(1.0, t0)
    values = l_values_all(s, group, params, threads=_THREADS, skip_principal=(t0 == 0))
    return tuple((lv.index, lv.log_derivative()) for lv in values)


# thread count for the Hurwitz table; results do not depend on it, so it is
# deliberately not part of the cache key
_THREADS = 1


def set_threads(n: int) -> None:
    global _THREADS
    _THREADS = max(1, int(n))


def log_derivatives(
    q: int, t0: float = 0.0, params: EvalParams = DEFAULT_PARAMS, t0_max: float = T0_MAX
) -> Tuple[Tuple[int, CertifiedValue], ...]:
    """(character index, L'/L(1+it0, chi)) over the required character set.

    Raises NearZeroDenominator (carrying the index) if any L value is not
    separated from its error bound.
    """
    if q < 2:
        raise ValueError(f"q must be >= 2, got {q}")
    t0 = float(t0)
    _check_t0(t0, t0_max)
    if q == 2 and t0 == 0:
        raise EmptyCharacterSet("q = 2 with t0 = 0 leaves no non-principal character")
    return _log_derivatives(int(q), t0, params)


def empirical_moment(
    k: int,
    q: int,
    t0: float = 0.0,
    params: EvalParams = DEFAULT_PARAMS,
    t0_max: float = T0_MAX,
) -> EmpiricalMoment:
    if k < 0:
        raise ValueError(f"k must be >= 0, got {k}")
    vals = log_derivatives(q, t0, params, t0_max)
    phi = euler_phi(q)
    mags = [abs(v.value) for _, v in vals]
    total = math.fsum(x ** (2 * k) for x in mags)
    err = math.fsum(2 * k * (x + v.error) ** (2 * k - 1) * v.error for x, (_, v) in zip(mags, vals)) if k else 0.0
    return EmpiricalMoment(k, q, float(t0), total / phi, len(vals), t0 == 0, err / phi)


def _smoothed_tail(k: int, C: float, X: float) -> float:
    # sum over pairs with mn = P > C of (log P / 2)^{2k} e^{-P/X} / P * tau(P), tau(P) <= P,
    # bounded by X e^{-C/X} 4^{-k} int_0^inf (log C + u)^{2k} e^{-u} du
    L = math.log(C)
    poly = math.fsum(math.comb(2 * k, j) * L ** (2 * k - j) * math.factorial(j) for j in range(2 * k + 1))
    return X * math.exp(-C / X) * poly / 4**k


def smoothed_double_sum(
    k: int,
    q: int,
    t0: float,
    X: float,
    eps: float = 1e-16,
    diagonal_only: bool = False,
    threads: int = 1,
    budget: int | None = None,
) -> SmoothedSumResult:
    """Brute-force weighted double sum over pairs with mn <= X log(1/eps)."""
    if not X > 1:
        raise ValueError(f"X must exceed 1, got {X}")
    if not 0 < eps < math.exp(-2 * k):
        raise ValueError(f"eps must lie in (0, e^-2k) for the truncation bound, got {eps}")
    C = X * math.log(1 / eps)
    if diagonal_only:
        limit = math.isqrt(int(C))
    else:
        limit = int(C // 2**k)
    limit = max(limit, 2)
    try:
        table = convolve_mangoldt(k, limit, budget).values
    except TableBudgetExceeded as exc:
        raise TableBudgetExceeded(f"X log(1/eps) = {C:.3g} needs a table of {limit}: {exc}") from None
    coprime = _coprime_mask(limit, q)
    support = np.nonzero((table > 0) & coprime)[0]
    weight = table[support] / support

    if diagonal_only:
        m = support.astype(np.float64)
        sq = m * m
        keep = sq <= C
        terms = weight[keep] ** 2 * np.exp(-sq[keep] / X)
        value = complex(block_fsum(terms), 0.0)
        tb = math.exp(-C / X) * _diag_tail(k, math.sqrt(C))
        return SmoothedSumResult(k, q, float(t0), float(X), value, C, tb, int(keep.sum()), True)

    residues = support % q
    order = np.argsort(residues, kind="stable")
    bounds = np.searchsorted(residues[order], np.arange(q + 1))
    cls_n = [support[order[bounds[r] : bounds[r + 1]]] for r in range(q)]
    cls_w = [weight[order[bounds[r] : bounds[r + 1]]] for r in range(q)]
    logs = np.log(support.astype(np.float64))
    cls_log = [logs[order[bounds[r] : bounds[r + 1]]] for r in range(q)]

    def row(i):
        m = int(support[i])
        r = m % q
        ns = cls_n[r]
        cut = np.searchsorted(ns, C / m, side="right")
        if cut == 0:
            return 0.0, 0.0, 0
        w = weight[i] * cls_w[r][:cut] * np.exp(-m * ns[:cut].astype(np.float64) / X)
        if t0 == 0:
            return math.fsum(w.tolist()), 0.0, cut
        # m^{-it0} n^{it0}
        phase = t0 * (cls_log[r][:cut] - logs[i])
        return math.fsum((w * np.cos(phase)).tolist()), math.fsum((w * np.sin(phase)).tolist()), cut

    rows = ordered_map(row, range(len(support)), threads)
    re = math.fsum(r[0] for r in rows)
    im = math.fsum(r[1] for r in rows)
    count = sum(r[2] for r in rows)
    return SmoothedSumResult(
        k, q, float(t0), float(X), complex(re, im), C, _smoothed_tail(k, C, X), count, False
    )


def _diag_tail(k: int, start: float) -> float:
    return tail_bound(k, max(int(start), 2))


def predicted_error_scale(k: int, q: int, t0: float) -> float:
    """Shape of the error term, implied constant set to 1."""
    lq = math.log(q)
    if t0 == 0:
        return lq ** (8 * k) / q
    a = abs(t0)
    return lq ** (4 * k + 4) / q + (1 / a ** (2 * k - 1) + math.log(q * (a + 2)) ** (2 * k)) / euler_phi(q)


def deviation_sweep(
    k,
    q_list: Sequence[int],
    t0: float = 0.0,
    M: int = 10**6,
    params: EvalParams = DEFAULT_PARAMS,
    threads: int = 1,
    budget: int | None = None,
) -> DeviationReport:
    """Compare empirical power means with the main term for each (q, k).

    Prime q is compared with the unrestricted main term, composite q with the
    coprime-restricted one.  A failing row is recorded, not raised.
    """
    ks = [k] if isinstance(k, int) else list(k)
    if not q_list:
        raise ValueError("q_list must be nonempty")
    report = DeviationReport()
    if t0 != 0 and abs(t0) < SMALL_T0:
        report.notes.append(
            f"|t0| = {abs(t0):g} < {SMALL_T0}: error term grows like |t0|^(1-2k); deviations not expected to shrink"
        )
    for q in q_list:
        prime = factorize(q).is_prime()
        for kk in ks:
            try:
                if q < 3:
                    raise ValueError(f"q must be >= 3, got {q}")
                mt = main_term(kk, q, M, restricted=not prime, threads=threads, budget=budget)
                emp = empirical_moment(kk, q, t0, params)
                log.info("q=%d k=%d done", q, kk)
            except (LDerivError, ValueError) as exc:
                nan = float("nan")
                report.rows.append(
                    DeviationRow(q, kk, float(t0), nan, nan, nan, nan, nan, not prime, f"failed: {exc}")
                )
                continue
            report.rows.append(
                DeviationRow(
                    q,
                    kk,
                    float(t0),
                    emp.value,
                    mt.value,
                    abs(emp.value - mt.value),
                    predicted_error_scale(kk, q, t0),
                    mt.tail_bound,
                    mt.restricted,
                )
            )
    return report
