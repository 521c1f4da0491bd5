"""Order-independent summation.

Work is cut into blocks whose boundaries depend only on the data length, each
block is summed with ``math.fsum`` (correctly rounded), and the block results
are combined with ``math.fsum`` again.  The result is therefore identical for
any thread count.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, Sequence, TypeVar

import numpy as np

BLOCK = 1 << 16

T = TypeVar("T")
R = TypeVar("R")


def ordered_map(func: Callable[[T], R], items: Sequence[T], threads: int = 1) -> list[R]:
    """map() that keeps input order, optionally on a thread pool."""
    if threads > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(func, items))
    return [func(x) for x in items]


def block_fsum(values: np.ndarray, threads: int = 1, block: int = BLOCK) -> float:
    values = np.asarray(values, dtype=np.float64).ravel()
    starts = range(0, len(values), block)
    partials = ordered_map(lambda i: math.fsum(values[i : i + block].tolist()), list(starts), threads)
    return math.fsum(partials)


def complex_fsum(values: Iterable[complex]) -> complex:
    vals = list(values)
    return complex(math.fsum(v.real for v in vals), math.fsum(v.imag for v in vals))
