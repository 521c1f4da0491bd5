"""Invariant suites run by ``lderiv verify``.

Each check returns (passed, detail).  ``quick`` keeps q <= 30 and tables at
1e4; ``full`` widens both.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable, Dict, List, Tuple

import numpy as np

from lderiv import arithmetic as ar
from lderiv import lfunctions as lf
from lderiv.characters import all_characters, build_group
from lderiv.distribution import build_distribution, hankel_report, moments_from_distribution
from lderiv.moments import empirical_moment, main_term

LEVELS = {
    "quick": dict(qmax=30, M=10**4, series=10**5, hankel_qmax=30),
    "full": dict(qmax=60, M=10**5, series=10**6, hankel_qmax=300),
}


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float


def check_orthogonality(cfg) -> Tuple[bool, str]:
    worst = 0.0
    for q in range(2, cfg["qmax"] + 1):
        g = build_group(q)
        V = g.value_table()
        units = g.units
        S = V.T @ V[:, units].conj()  # S[m, n] = sum_chi chi(m) conj(chi(n))
        expect = np.zeros_like(S)
        expect[units, np.arange(len(units))] = g.size
        worst = max(worst, float(np.max(np.abs(S - expect))))
    return worst <= 1e-10, f"max deviation {worst:.2e}"


def check_convolution(cfg) -> Tuple[bool, str]:
    M = cfg["M"]
    logs = np.log(np.maximum(np.arange(M + 1), 1))
    worst = -math.inf
    for k in range(1, 5):
        t = ar.convolve_mangoldt(k, M).values
        worst = max(worst, float(np.max(t[2:] - logs[2:] ** k)))
    lam = ar.mangoldt_table(M).values
    cheb = ar.dirichlet_convolve(lam, np.r_[0.0, np.ones(M)])
    err = float(np.max(np.abs(cheb[1:] - logs[1:])))
    return worst <= 1e-9 and err <= 1e-10, f"max(L^k - log^k) {worst:.2e}; Chebyshev err {err:.2e}"


def check_hurwitz_identities(cfg) -> Tuple[bool, str]:
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(10):
        s = complex(rng.uniform(1.05, 3), rng.uniform(-10, 10))
        z = lf.hurwitz_zeta(s, 1.0)
        half = lf.hurwitz_zeta(s, 0.5)
        worst = max(worst, abs(half - (2**s - 1) * z) / abs(half))
        q = 6
        tot = sum(lf.hurwitz_zeta(s, a / q) for a in range(1, q + 1))
        worst = max(worst, abs(tot - q**s * z) / abs(tot))
    return worst <= 1e-10, f"max relative error {worst:.2e}"


def check_series_oracle(cfg) -> Tuple[bool, str]:
    n = np.arange(1, cfg["series"] + 1, dtype=np.float64)
    worst = 0.0
    for q in (5, 7, 12):
        g = build_group(q)
        for lv in lf.l_values_all(3.0, g):
            chi = g.character(lv.index)
            v = chi.values()[np.arange(1, len(n) + 1) % q]
            L = np.sum(v / n**3)
            dL = -np.sum(v * np.log(n) / n**3)
            worst = max(worst, abs(L - lv.L), abs(dL - lv.dL))
    N = len(n)
    tol = (math.log(N) + 1) / N**2 + 1e-12  # truncation tail of the log-weighted series
    return worst <= tol, f"max deviation {worst:.2e} (series tail {tol:.1e})"


def check_finite_difference(cfg) -> Tuple[bool, str]:
    h = 1e-5
    s = 1 + 1j
    worst = 0.0
    for q in (5, 7):
        g = build_group(q)
        for chi in all_characters(g):
            fd = (lf.dirichlet_l(s + h, chi) - lf.dirichlet_l(s - h, chi)) / (2 * h)
            worst = max(worst, abs(fd - lf.dirichlet_l_prime(s, chi)))
    return worst <= 1e-7, f"max deviation {worst:.2e}"


def taylor_oracle(hs=(1e-2, 1e-3)) -> Tuple[float, float]:
    """E_1, E_2 from symmetric differences of (s-1) zeta'/zeta around s = 1,
    Richardson-extrapolated over the two step sizes."""

    def g(u):
        s = 1 + u
        return u * lf.hurwitz_zeta_ds(s, 1.0) / lf.hurwitz_zeta(s, 1.0)

    ests1, ests2 = [], []
    for h in hs:
        gp, gm = g(h), g(-h)
        ests1.append(((gp - gm) / (2 * h)).real)
        ests2.append(((gp + gm + 2) / (2 * h * h)).real)
    r = (hs[0] / hs[1]) ** 2
    e1 = (r * ests1[1] - ests1[0]) / (r - 1)
    e2 = (r * ests2[1] - ests2[0]) / (r - 1)
    return e1, e2


def check_e_recursion(cfg) -> Tuple[bool, str]:
    E = lf.e_coefficients(4)
    st = lf.stieltjes_constants(4)
    e1, e2 = taylor_oracle()
    ok = E[0] == -1 and abs(E[1] - st.gamma(0)) <= 1e-8 and abs(E[2] - e2) <= 1e-6 and abs(E[1] - e1) <= 1e-6
    return ok, f"E1-gamma0 {E[1] - st.gamma(0):.1e}; E2 {E[2]:.9f} vs Taylor {e2:.9f}"


def check_tail_soundness(cfg) -> Tuple[bool, str]:
    M = cfg["M"]
    ok = True
    worst = 0.0
    for k in (1, 2, 3):
        a = main_term(k, 1, M, restricted=False)
        b = main_term(k, 1, 2 * M, restricted=False)
        ok &= 0 <= b.value - a.value <= a.tail_bound
        worst = max(worst, (b.value - a.value) / a.tail_bound)
    return ok, f"max increment/tail_bound {worst:.3f}"


def check_prime_decomposition(cfg) -> Tuple[bool, str]:
    M = cfg["M"]
    worst = 0.0
    table = ar.mangoldt_table(M).values
    full = main_term(1, 1, M, restricted=False).value
    for p in (2, 3, 5, 7):
        # for k = 1 only powers of p carry weight among multiples of p
        restricted = main_term(1, p, M, restricted=True).value
        direct = math.fsum(table[p**j] ** 2 / p ** (2 * j) for j in range(1, int(math.log(M, p) + 1e-9) + 1))
        worst = max(worst, abs(full - restricted - direct))
    return worst <= 1e-12, f"max deviation {worst:.2e}"


def check_hankel_psd(cfg) -> Tuple[bool, str]:
    worst = 0.0
    for q in range(3, cfg["hankel_qmax"] + 1):
        rep = hankel_report(moments_from_distribution(build_distribution(q), 7), 3)
        for e, n in zip(rep.min_eig + rep.min_eig_star, rep.norm + rep.norm_star):
            worst = min(worst, e / n)
    return worst >= -1e-9, f"min eigenvalue/norm {worst:.2e}"


def check_cross_module(cfg) -> Tuple[bool, str]:
    worst = 0.0
    for q in range(3, cfg["qmax"] + 1):
        for t0 in (0.0, 1.0):
            seq = moments_from_distribution(build_distribution(q, t0), 3)
            for k in (1, 2, 3):
                emp = empirical_moment(k, q, t0).value
                worst = max(worst, abs(seq[k] - emp) / max(1.0, emp))
    return worst <= 1e-9, f"max relative deviation {worst:.2e}"


def check_conjugation(cfg) -> Tuple[bool, str]:
    worst = 0.0
    for q in range(3, cfg["qmax"] + 1):
        a = empirical_moment(1, q, 1.5).value
        b = empirical_moment(1, q, -1.5).value
        worst = max(worst, abs(a - b))
    return worst <= 1e-9, f"max deviation {worst:.2e}"


CHECKS: Dict[str, Callable] = {
    "orthogonality": check_orthogonality,
    "convolution_bound": check_convolution,
    "hurwitz_identities": check_hurwitz_identities,
    "dirichlet_series_oracle": check_series_oracle,
    "finite_difference": check_finite_difference,
    "e_recursion": check_e_recursion,
    "tail_soundness": check_tail_soundness,
    "prime_decomposition": check_prime_decomposition,
    "hankel_psd": check_hankel_psd,
    "cross_module_moments": check_cross_module,
    "conjugation_symmetry": check_conjugation,
}


def run(level: str) -> List[CheckResult]:
    if level not in LEVELS:
        raise ValueError(f"unknown level {level!r}; choose from {sorted(LEVELS)}")
    cfg = LEVELS[level]
    out = []
    for name, fn in CHECKS.items():
        t = time.perf_counter()
        try:
            ok, detail = fn(cfg)
        except Exception as exc:  # a crash is a failed check, not a crashed suite
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        out.append(CheckResult(name, bool(ok), detail, time.perf_counter() - t))
    return out
