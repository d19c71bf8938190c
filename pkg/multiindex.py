"""
Multi-index combinatorics

Canonical representatives, S_n / A_n orbits of exponent tuples, parity
splitting and the I0 / Ic classification used to block-diagonalise Toeplitz
operators with group-invariant separately radial symbols.

Features:
- Permutations acting on multi-indices by sigma(m) = (m_sigma(1), ..., m_sigma(n))
- Duplicate-free orbit enumeration (multiset permutations, no n! fan-out on I0)
- Even/odd halves of strictly decreasing orbits
- Enumeration of all canonical representatives up to a degree cut-off
"""

import itertools
import logging
import math
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from typing import Dict, Iterator, List, Sequence, Tuple

from sympy.utilities.iterables import multiset_permutations

logger = logging.getLogger(__name__)

MultiIndex = Tuple[int, ...]

MAX_DIMENSION = 12

BRANCH_WHOLE = 'whole'
BRANCH_PLUS = 'plus'
BRANCH_MINUS = 'minus'


class MultiIndexError(ValueError):
    """Raised for malformed multi-indices, permutations or dimension mismatches."""


class OrbitClass(str, Enum):
    """I0: some entry repeats. Ic: entries strictly decreasing (n >= 2)."""
    I0 = 'I0'
    IC = 'Ic'


def validate_multi_index(m: Sequence[int]) -> MultiIndex:
    """
    Check and normalise a multi-index.

    Args:
        m (Sequence[int]): Exponents (m_1, ..., m_n)

    Returns:
        MultiIndex: The exponents as a tuple of Python ints
    """
    try:
        exponents = tuple(int(k) for k in m)
    except (TypeError, ValueError) as e:
        raise MultiIndexError(f"Multi-index must be a sequence of integers, got {m!r}") from e

    if any(int(k) != k for k in m):
        raise MultiIndexError(f"Multi-index entries must be integers, got {m!r}")
    if not exponents:
        raise MultiIndexError("Multi-index must have at least one entry")
    if len(exponents) > MAX_DIMENSION:
        raise MultiIndexError(f"Dimension {len(exponents)} exceeds the supported maximum {MAX_DIMENSION}")
    if min(exponents) < 0:
        raise MultiIndexError(f"Multi-index entries must be nonnegative, got {exponents}")
    return exponents


def degree(m: MultiIndex) -> int:
    """|m|, the total degree."""
    return sum(m)


def multi_factorial(m: MultiIndex) -> int:
    """m! = m_1! ... m_n!"""
    return math.prod(math.factorial(k) for k in m)


@dataclass(frozen=True)
class Permutation:
    """
    A permutation of {1, ..., n}, stored 0-based.

    ``images[k]`` is sigma(k+1) - 1, and the action on a multi-index is
    sigma(m) = (m_sigma(1), ..., m_sigma(n)).
    """
    images: Tuple[int, ...]

    def __post_init__(self):
        images = tuple(int(i) for i in self.images)
        if sorted(images) != list(range(len(images))):
            raise MultiIndexError(f"Not a permutation of 0..{len(images) - 1}: {self.images!r}")
        object.__setattr__(self, 'images', images)

    @property
    def n(self) -> int:
        return len(self.images)

    @property
    def parity(self) -> int:
        """Sgn(sigma): +1 for even, -1 for odd (via cycle decomposition)."""
        seen = [False] * self.n
        transpositions = 0
        for start in range(self.n):
            if seen[start]:
                continue
            length = 0
            k = start
            while not seen[k]:
                seen[k] = True
                k = self.images[k]
                length += 1
            transpositions += length - 1
        return -1 if transpositions % 2 else 1

    @property
    def is_even(self) -> bool:
        return self.parity == 1

    def __call__(self, m: Sequence) -> tuple:
        """Apply sigma to an n-tuple (multi-index or radius vector)."""
        if len(m) != self.n:
            raise MultiIndexError(f"Dimension mismatch: permutation of {self.n} applied to length {len(m)}")
        return tuple(m[i] for i in self.images)

    def compose(self, other: 'Permutation') -> 'Permutation':
        """The permutation rho with rho(m) = self(other(m))."""
        if other.n != self.n:
            raise MultiIndexError(f"Cannot compose permutations of {self.n} and {other.n}")
        return Permutation(tuple(other.images[i] for i in self.images))

    def inverse(self) -> 'Permutation':
        inv = [0] * self.n
        for k, image in enumerate(self.images):
            inv[image] = k
        return Permutation(tuple(inv))

    @classmethod
    def identity(cls, n: int) -> 'Permutation':
        return cls(tuple(range(n)))

    @classmethod
    def transposition(cls, n: int, i: int, j: int) -> 'Permutation':
        """Swap of coordinates i and j (1-based)."""
        if not (1 <= i <= n and 1 <= j <= n) or i == j:
            raise MultiIndexError(f"Invalid transposition ({i} {j}) for n={n}")
        images = list(range(n))
        images[i - 1], images[j - 1] = images[j - 1], images[i - 1]
        return cls(tuple(images))

    @classmethod
    def cycle(cls, n: int, *elements: int) -> 'Permutation':
        """Cycle notation, 1-based: cycle(3, 1, 2, 3) maps 1->2, 2->3, 3->1."""
        if len(set(elements)) != len(elements) or any(not 1 <= e <= n for e in elements):
            raise MultiIndexError(f"Invalid cycle {elements} for n={n}")
        images = list(range(n))
        for a, b in zip(elements, elements[1:] + elements[:1]):
            images[a - 1] = b - 1
        return cls(tuple(images))

    def __str__(self) -> str:
        return '[' + ' '.join(str(i + 1) for i in self.images) + ']'


def all_permutations(n: int) -> List[Permutation]:
    """Every element of S_n in lexicographic order of images."""
    return [Permutation(p) for p in itertools.permutations(range(n))]


def even_permutations(n: int) -> List[Permutation]:
    """The alternating group A_n."""
    return [p for p in all_permutations(n) if p.is_even]


def generators(n: int) -> List[Permutation]:
    """Adjacent transpositions plus one n-cycle; together they generate S_n."""
    gens = [Permutation.transposition(n, k, k + 1) for k in range(1, n)]
    if n > 2:
        gens.append(Permutation.cycle(n, *range(1, n + 1)))
    return gens


def default_odd_permutation(n: int) -> Permutation:
    """The fixed odd permutation used for minus branches: swap of coordinates 1 and 2."""
    if n < 2:
        raise MultiIndexError("No odd permutation exists for n=1")
    return Permutation.transposition(n, 1, 2)


def canonicalize(m: Sequence[int]) -> MultiIndex:
    """Weakly decreasing rearrangement of m (the orbit representative iota)."""
    return tuple(sorted(validate_multi_index(m), reverse=True))


def apply_permutation(sigma: Permutation, m: Sequence[int]) -> MultiIndex:
    """sigma(m) = (m_sigma(1), ..., m_sigma(n))."""
    return sigma(validate_multi_index(m))


def sorting_parity(m: MultiIndex) -> int:
    """
    Parity of the permutation carrying canonicalize(m) to m.

    Only meaningful when the entries of m are distinct; computed by counting
    inversions of m against the decreasing order.
    """
    inversions = sum(1 for i in range(len(m)) for j in range(i + 1, len(m)) if m[i] < m[j])
    return -1 if inversions % 2 else 1


def classify_canonical(iota: MultiIndex) -> OrbitClass:
    if len(iota) >= 2 and all(a > b for a, b in zip(iota, iota[1:])):
        return OrbitClass.IC
    return OrbitClass.I0


def _descending(elements) -> Tuple[MultiIndex, ...]:
    return tuple(sorted(elements, reverse=True))


@dataclass(frozen=True)
class Orbit:
    """
    The orbit I_iota of a canonical multi-index under S_n.

    For Ic orbits ``plus_elements`` / ``minus_elements`` are the images under
    even / odd permutations; for I0 orbits both equal ``elements``.
    """
    canonical: MultiIndex
    orbit_class: OrbitClass
    elements: Tuple[MultiIndex, ...]
    plus_elements: Tuple[MultiIndex, ...]
    minus_elements: Tuple[MultiIndex, ...]
    _members: frozenset = field(default=frozenset(), repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, '_members', frozenset(self.elements))

    @property
    def n(self) -> int:
        return len(self.canonical)

    @property
    def degree(self) -> int:
        return degree(self.canonical)

    @property
    def size(self) -> int:
        return len(self.elements)

    @property
    def is_split(self) -> bool:
        return self.orbit_class is OrbitClass.IC

    def __contains__(self, m) -> bool:
        return tuple(m) in self._members

    def branch_of(self, m: Sequence[int]) -> str:
        """'whole' for I0 orbits, otherwise 'plus' or 'minus' by the parity carrying iota to m."""
        m = tuple(m)
        if m not in self._members:
            raise MultiIndexError(f"{m} is not in the orbit of {self.canonical}")
        if not self.is_split:
            return BRANCH_WHOLE
        return BRANCH_PLUS if sorting_parity(m) == 1 else BRANCH_MINUS

    def branches(self) -> Dict[str, Tuple[MultiIndex, ...]]:
        """Index sets per branch: {'whole': I_iota} or {'plus': I_iota^+, 'minus': I_iota^-}."""
        if self.is_split:
            return {BRANCH_PLUS: self.plus_elements, BRANCH_MINUS: self.minus_elements}
        return {BRANCH_WHOLE: self.elements}


@lru_cache(maxsize=4096)
def _orbit_cached(iota: MultiIndex) -> Orbit:
    elements = _descending(tuple(p) for p in multiset_permutations(list(iota)))
    orbit_class = classify_canonical(iota)
    if orbit_class is OrbitClass.IC:
        plus = _descending(m for m in elements if sorting_parity(m) == 1)
        minus = _descending(m for m in elements if sorting_parity(m) == -1)
    else:
        plus = minus = elements
    return Orbit(canonical=iota, orbit_class=orbit_class, elements=elements,
                 plus_elements=plus, minus_elements=minus)


def orbit_of(m: Sequence[int]) -> Orbit:
    """The orbit of m (canonicalised internally)."""
    return _orbit_cached(canonicalize(m))


def branch_of(m: Sequence[int]) -> str:
    """Branch ('whole', 'plus' or 'minus') of m within its own orbit."""
    return orbit_of(m).branch_of(validate_multi_index(m))


def orbit_size(m: Sequence[int]) -> int:
    """|I_iota| = n! / prod(multiplicity!) without materialising the orbit."""
    iota = canonicalize(m)
    size = math.factorial(len(iota))
    for multiplicity in Counter(iota).values():
        size //= math.factorial(multiplicity)
    return size


def _partitions(total: int, parts: int, cap: int) -> Iterator[MultiIndex]:
    """Weakly decreasing tuples of length ``parts`` summing to ``total`` with entries <= cap, lex descending."""
    if parts == 1:
        if total <= cap:
            yield (total,)
        return
    for first in range(min(total, cap), -1, -1):
        rest = total - first
        if rest > first * (parts - 1):
            break
        for tail in _partitions(rest, parts - 1, first):
            yield (first,) + tail


def canonical_indices(n: int, max_degree: int) -> List[MultiIndex]:
    """Canonical representatives with |iota| <= max_degree in (degree, lex descending) order."""
    if not 1 <= n <= MAX_DIMENSION:
        raise MultiIndexError(f"n must lie in [1, {MAX_DIMENSION}], got {n}")
    if max_degree < 0:
        raise MultiIndexError(f"max_degree must be nonnegative, got {max_degree}")
    return [iota for d in range(max_degree + 1) for iota in _partitions(d, n, d)]


def enumerate_canonical(n: int, max_degree: int) -> List[Orbit]:
    """Every orbit I_iota with |iota| <= max_degree, each exactly once."""
    orbits = [_orbit_cached(iota) for iota in canonical_indices(n, max_degree)]
    logger.debug(f"Enumerated {len(orbits)} orbits for n={n}, max_degree={max_degree}")
    return orbits


def all_indices(n: int, max_degree: int) -> List[MultiIndex]:
    """{m in Z_+^n : |m| <= max_degree} in (degree, lex descending) order."""
    indices = []
    for orbit in enumerate_canonical(n, max_degree):
        indices.extend(orbit.elements)
    return sorted(indices, key=lambda m: (degree(m), tuple(-k for k in m)))


def monomial_text(m: MultiIndex) -> str:
    """z^m as text, e.g. (2,1,0) -> 'z1^2*z2'."""
    factors = []
    for k, e in enumerate(m, 1):
        if e == 1:
            factors.append(f"z{k}")
        elif e > 1:
            factors.append(f"z{k}^{e}")
    return '*'.join(factors) if factors else '1'


def orbit_polynomials(orbit: Orbit, branch: str = BRANCH_WHOLE) -> List[str]:
    """Monomials spanning P_iota (or P_iota^+/-), one per index in the branch."""
    if branch == BRANCH_WHOLE:
        indices = orbit.elements
    else:
        indices = orbit.branches()[branch]
    return [monomial_text(m) for m in indices]
