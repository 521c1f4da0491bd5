"""
Empirical distribution of |L'/L(1+it0, chi)|^2 and Stieltjes-moment checks.

D_q(v, t0) = #'{chi : |L'/L|^2 <= v} / phi(q), where #' skips the principal
character when t0 = 0 but the normalizer stays phi(q).  So at t0 = 0 the
curve tops out at (phi(q) - 1)/phi(q), not 1.
"""

from __future__ import annotations

import bisect
import csv
import io
import math
from dataclasses import asdict, dataclass, field
from typing import Iterable, List, Sequence, Tuple

import numpy as np

from lderiv.arithmetic import euler_phi
from lderiv.lfunctions import DEFAULT_PARAMS, EvalParams
from lderiv.moments import log_derivatives, main_term_sequence

K_CAP = 6


@dataclass(frozen=True)
class EmpiricalDistribution:
    q: int
    t0: float
    samples: Tuple[float, ...]  # ascending
    indices: Tuple[int, ...]  # character index of each sample
    phi: int

    @property
    def count(self) -> int:
        return len(self.samples)

    def __post_init__(self):
        if any(b < a for a, b in zip(self.samples, self.samples[1:])):
            raise ValueError("samples must be sorted ascending")


@dataclass(frozen=True)
class MomentSequence:
    source: str
    values: Tuple[float, ...]

    def __len__(self) -> int:
        return len(self.values)

    def __getitem__(self, k: int) -> float:
        return self.values[k]


@dataclass
class HankelReport:
    K: int
    delta: List[float]
    delta_star: List[float]
    min_eig: List[float]
    min_eig_star: List[float]
    norm: List[float]
    norm_star: List[float]
    singular: List[bool]
    singular_star: List[bool]
    carleman_partial: List[float]
    factorial_ratios: List[float]
    source: str = ""
    notes: List[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


def build_distribution(q: int, t0: float = 0.0, params: EvalParams = DEFAULT_PARAMS) -> EmpiricalDistribution:
    vals = log_derivatives(q, t0, params)
    pairs = sorted(((abs(v.value) ** 2, j) for j, v in vals))
    return EmpiricalDistribution(
        q, float(t0), tuple(x for x, _ in pairs), tuple(j for _, j in pairs), euler_phi(q)
    )


def cdf_eval(D: EmpiricalDistribution, v: float) -> float:
    """Right-continuous step CDF with jumps 1/phi(q)."""
    return bisect.bisect_right(D.samples, v) / D.phi


def kolmogorov_distance(D1: EmpiricalDistribution, D2: EmpiricalDistribution) -> float:
    """sup_v |D1(v) - D2(v)|; both are step functions, so breakpoints suffice."""
    points = sorted(set(D1.samples) | set(D2.samples))
    return max([0.0] + [abs(cdf_eval(D1, v) - cdf_eval(D2, v)) for v in points])


def moments_from_distribution(D: EmpiricalDistribution, K: int) -> MomentSequence:
    """m_k = (1/phi(q)) sum samples^k for k = 0..K."""
    vals = tuple(math.fsum(x**k for x in D.samples) / D.phi for k in range(K + 1))
    return MomentSequence(f"empirical q={D.q} t0={D.t0:g}", vals)


def main_term_moments(K: int, M: int = 10**6, threads: int = 1) -> Tuple[MomentSequence, List[float]]:
    """Unrestricted main-term moments M_0..M_K and their tail bounds."""
    seq = main_term_sequence(K, M, threads=threads)
    return MomentSequence(f"main-term limit M={M}", tuple(r.value for r in seq)), [r.tail_bound for r in seq]


def _hankel(mu: Sequence[float], n: int, shift: int) -> np.ndarray:
    idx = np.arange(n)
    return np.asarray(mu, dtype=np.float64)[idx[:, None] + idx[None, :] + shift]


def _det_eig(H: np.ndarray) -> Tuple[float, float, float, bool]:
    eig = np.linalg.eigvalsh(H)
    norm = float(np.max(np.abs(eig)))
    floor = 10 * H.shape[0] * np.finfo(float).eps * norm
    return float(np.prod(eig)), float(eig[0]), norm, bool(np.min(np.abs(eig)) < floor)


def hankel_report(seq: MomentSequence, K: int | None = None) -> HankelReport:
    """Hankel determinants Delta_k = |mu_{i+j}|, Delta*_k = |mu_{i+j+1}|, k = 0..K.

    Determinants are products of eigenvalues of the symmetric Hankel matrix.
    An eigenvalue below ~n*eps*||H|| makes the sign meaningless; such entries
    are flagged in ``singular``/``singular_star`` rather than trusted.
    """
    mu = list(seq.values)
    if K is None:
        K = min(K_CAP, (len(mu) - 2) // 2)
    if K < 0 or len(mu) < 2 * K + 2:
        raise ValueError(f"K={K} needs {2 * K + 2} moments, got {len(mu)}")
    rep = HankelReport(K, [], [], [], [], [], [], [], [], [], [], source=seq.source)
    for n in range(1, K + 2):
        d, e, nm, sing = _det_eig(_hankel(mu, n, 0))
        rep.delta.append(d)
        rep.min_eig.append(e)
        rep.norm.append(nm)
        rep.singular.append(sing)
        d, e, nm, sing = _det_eig(_hankel(mu, n, 1))
        rep.delta_star.append(d)
        rep.min_eig_star.append(e)
        rep.norm_star.append(nm)
        rep.singular_star.append(sing)
    acc = 0.0
    for k in range(1, len(mu)):
        acc += mu[k] ** (-1 / (2 * k)) if mu[k] > 0 else math.inf
        rep.carleman_partial.append(acc)
    rep.factorial_ratios = [mu[k] / math.factorial(2 * k) for k in range(len(mu))]
    if K > K_CAP:
        rep.notes.append(f"K={K} exceeds {K_CAP}; double-precision determinants are unreliable")
    return rep


def plot_rows(
    dists: Iterable[EmpiricalDistribution], vmin: float | None = None, vmax: float | None = None
) -> List[Tuple[int, float, float]]:
    """(q, v, D_q(v)) at every sample breakpoint, optionally clipped to [vmin, vmax]."""
    rows = []
    for D in dists:
        for i, v in enumerate(D.samples):
            if (vmin is not None and v < vmin) or (vmax is not None and v > vmax):
                continue
            rows.append((D.q, v, (i + 1) / D.phi))
    return rows


def export_plot_data(
    dists: Sequence[EmpiricalDistribution], vmin: float | None = None, vmax: float | None = None
) -> str:
    """CSV text with columns q, v, D."""
    if not dists:
        raise ValueError("need at least one distribution")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["q", "v", "D"])
    for q, v, d in plot_rows(dists, vmin, vmax):
        w.writerow([q, format(v, ".15g"), format(d, ".15g")])
    return buf.getvalue()
