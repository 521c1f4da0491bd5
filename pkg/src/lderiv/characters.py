"""
Dirichlet characters mod q as exponent vectors against fixed generators.

(Z/qZ)^x is split by CRT into prime-power components.  Odd p^e is cyclic,
generated by its smallest primitive root; 2^2 is generated by 3; 2^e with
e >= 3 is generated by -1 (order 2) and 5 (order 2^(e-2)).  A character is an
exponent vector e with chi(g_i) = exp(2 pi i e_i / ord_i).  Characters are
indexed by the lexicographic (C-order mixed radix) order of their exponent
vectors, so index 0 is always the principal character.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from functools import cached_property
from fractions import Fraction
from typing import Iterator, Sequence, Tuple

import numpy as np

from lderiv.arithmetic import euler_phi, factorize


@dataclass(frozen=True)
class RootOfUnity:
    """exp(2 pi i numerator / denominator), kept in lowest terms."""

    numerator: int
    denominator: int

    def __post_init__(self):
        if self.denominator < 1:
            raise ValueError("denominator must be positive")
        frac = Fraction(self.numerator % self.denominator, self.denominator)
        object.__setattr__(self, "numerator", frac.numerator)
        object.__setattr__(self, "denominator", frac.denominator)

    def __complex__(self) -> complex:
        a, n = self.numerator, self.denominator
        # quarter turns are rendered exactly
        if (4 * a) % n == 0:
            return (1 + 0j, 1j, -1 + 0j, -1j)[(4 * a) // n]
        return cmath.exp(2j * math.pi * a / n)

    @property
    def value(self) -> complex:
        return complex(self)

    def __mul__(self, other: "RootOfUnity") -> "RootOfUnity":
        return RootOfUnity(
            self.numerator * other.denominator + other.numerator * self.denominator,
            self.denominator * other.denominator,
        )

    def conjugate(self) -> "RootOfUnity":
        return RootOfUnity(-self.numerator, self.denominator)


@dataclass(frozen=True)
class GroupComponent:
    """Units mod p^e: generators are residues mod p^e."""

    prime: int
    exponent: int
    generators: Tuple[int, ...]
    orders: Tuple[int, ...]

    @property
    def modulus(self) -> int:
        return self.prime**self.exponent


def _primitive_root(p: int, e: int) -> int:
    pe = p**e
    phi = pe // p * (p - 1)
    qs = set(factorize(p - 1).primes)
    if e > 1:
        qs.add(p)
    for g in range(2, pe):
        if g % p == 0:
            continue
        if all(pow(g, phi // r, pe) != 1 for r in qs):
            return g
    raise AssertionError(f"no primitive root mod {pe}")


def _component(p: int, e: int) -> Tuple[GroupComponent, np.ndarray]:
    """Component descriptor plus its discrete-log table (-1 off the units)."""
    pe = p**e
    if p == 2 and e == 1:
        return GroupComponent(2, 1, (), ()), np.zeros((2, 0), dtype=np.int64)
    if p == 2 and e == 2:
        table = np.full((4, 1), -1, dtype=np.int64)
        table[1, 0], table[3, 0] = 0, 1
        return GroupComponent(2, 2, (3,), (2,)), table
    if p == 2:
        half = pe >> 2
        table = np.full((pe, 2), -1, dtype=np.int64)
        x = 1
        for j in range(half):
            table[x] = (0, j)
            table[pe - x] = (1, j)
            x = x * 5 % pe
        return GroupComponent(2, e, (pe - 1, 5), (2, half)), table
    g = _primitive_root(p, e)
    order = pe // p * (p - 1)
    table = np.full((pe, 1), -1, dtype=np.int64)
    x = 1
    for k in range(order):
        table[x, 0] = k
        x = x * g % pe
    return GroupComponent(p, e, (g,), (order,)), table


@dataclass(frozen=True, eq=False)
class CharacterGroup:
    """The dual of (Z/qZ)^x with precomputed discrete logs for every residue."""

    q: int
    components: Tuple[GroupComponent, ...]
    generators: Tuple[int, ...]
    orders: Tuple[int, ...]
    dlog: np.ndarray = field(repr=False)  # (q, r); rows of -1 for non-units
    exponent: int = 1

    @property
    def size(self) -> int:
        return math.prod(self.orders)

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.orders if self.orders else (1,)

    @cached_property
    def units(self) -> np.ndarray:
        return np.nonzero(self.unit_mask)[0]

    @cached_property
    def unit_mask(self) -> np.ndarray:
        return np.array([math.gcd(a, self.q) == 1 for a in range(self.q)])

    def index_of(self, exponents: Sequence[int]) -> int:
        if not self.orders:
            return 0
        return int(np.ravel_multi_index(tuple(int(x) for x in exponents), self.orders))

    def exponents_of(self, index: int) -> Tuple[int, ...]:
        if not 0 <= index < self.size:
            raise IndexError(f"character index {index} out of range for q={self.q}")
        if not self.orders:
            return ()
        return tuple(int(x) for x in np.unravel_index(index, self.orders))

    def character(self, index: int = 0) -> "DirichletCharacter":
        return DirichletCharacter(self, self.exponents_of(index))

    @property
    def principal(self) -> "DirichletCharacter":
        return self.character(0)

    def unit_grid(self) -> np.ndarray:
        """Array of shape ``self.shape`` holding the unit with each dlog vector."""
        grid = np.zeros(self.shape, dtype=np.int64)
        units = self.units
        if self.orders:
            grid[tuple(self.dlog[units].T)] = units
        else:
            grid[0] = units[0]
        return grid

    def phase_table(self) -> np.ndarray:
        """(size, q) integer phases A with chi_j(a) = exp(2 pi i A / exponent); -1 off units."""
        exps = np.array([self.exponents_of(j) for j in range(self.size)], dtype=np.int64)
        exps = exps.reshape(self.size, len(self.orders))
        scale = np.array([self.exponent // o for o in self.orders], dtype=np.int64)
        phases = (exps * scale) @ self.dlog.T % self.exponent
        phases[:, ~self.unit_mask] = -1
        return phases

    def value_table(self) -> np.ndarray:
        """(size, q) complex matrix of chi_j(a)."""
        phases = self.phase_table()
        vals = np.exp(2j * np.pi * phases / self.exponent)
        vals[phases < 0] = 0
        return vals


def build_group(q: int) -> CharacterGroup:
    q = int(q)
    if q <= 1:
        raise ValueError(f"modulus must be >= 2, got {q}")
    comps = []
    gens = []
    orders = []
    columns = []
    for p, e in factorize(q).factors:
        comp, table = _component(p, e)
        pe = comp.modulus
        rest = q // pe
        # CRT lift: g mod p^e, 1 mod q/p^e
        lift = pe * pow(pe, -1, rest) if rest > 1 else 0
        for g in comp.generators:
            gens.append((lift + g * rest * pow(rest, -1, pe)) % q if rest > 1 else g % q)
        orders.extend(comp.orders)
        comps.append(comp)
        columns.append(table[np.arange(q) % pe])
    dlog = np.concatenate(columns, axis=1) if columns else np.zeros((q, 0), dtype=np.int64)
    mask = np.array([math.gcd(a, q) == 1 for a in range(q)])
    dlog[~mask] = -1
    exponent = math.lcm(*orders) if orders else 1
    group = CharacterGroup(q, tuple(comps), tuple(gens), tuple(orders), dlog, exponent)
    assert group.size == euler_phi(q)
    return group


@dataclass(frozen=True)
class DirichletCharacter:
    group: CharacterGroup = field(repr=False)
    exponents: Tuple[int, ...]

    def __post_init__(self):
        exps = tuple(int(x) for x in self.exponents)
        if len(exps) != len(self.group.orders) or any(
            not 0 <= x < o for x, o in zip(exps, self.group.orders)
        ):
            raise ValueError(f"bad exponent vector {exps} for orders {self.group.orders}")
        object.__setattr__(self, "exponents", exps)

    @property
    def q(self) -> int:
        return self.group.q

    @property
    def index(self) -> int:
        return self.group.index_of(self.exponents)

    def is_principal(self) -> bool:
        return not any(self.exponents)

    def is_real(self) -> bool:
        return all((2 * x) % o == 0 for x, o in zip(self.exponents, self.group.orders))

    def evaluate(self, n: int) -> RootOfUnity | int:
        """chi(n) as an exact RootOfUnity, or the integer 0 when gcd(n, q) > 1."""
        g = self.group
        logs = g.dlog[int(n) % g.q]
        if g.orders and logs[0] < 0:
            return 0
        if not g.orders and math.gcd(int(n), g.q) != 1:
            return 0
        num = sum(int(e) * int(k) * (g.exponent // o) for e, k, o in zip(self.exponents, logs, g.orders))
        return RootOfUnity(num, g.exponent)

    def __call__(self, n: int) -> complex:
        v = self.evaluate(n)
        return complex(v) if isinstance(v, RootOfUnity) else 0j

    def values(self) -> np.ndarray:
        """chi(a) for a = 0, ..., q - 1 as complex doubles."""
        return np.array([self(a) for a in range(self.q)], dtype=np.complex128)

    def conjugate(self) -> "DirichletCharacter":
        return conjugate(self)


def evaluate(chi: DirichletCharacter, n: int) -> RootOfUnity | int:
    return chi.evaluate(n)


def conjugate(chi: DirichletCharacter) -> DirichletCharacter:
    exps = tuple((-x) % o for x, o in zip(chi.exponents, chi.group.orders))
    return DirichletCharacter(chi.group, exps)


def all_characters(group: CharacterGroup) -> Iterator[DirichletCharacter]:
    """Every character mod q once, in index order (principal first)."""
    for j in range(group.size):
        yield group.character(j)


def character_metadata(group: CharacterGroup) -> dict:
    """Index <-> exponent-vector mapping for output headers."""
    return {
        "q": group.q,
        "generators": list(group.generators),
        "orders": list(group.orders),
        "indexing": "lexicographic exponent vectors; chi(g_i) = exp(2*pi*i*e_i/order_i)",
        "exponent_vectors": [list(group.exponents_of(j)) for j in range(group.size)],
    }
