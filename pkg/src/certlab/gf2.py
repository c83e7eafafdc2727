"""Linear algebra over GF(2) on bit-packed vectors.

A vector of length ``n`` is stored as a Python int whose bit ``i`` is
coordinate ``i``; elimination is word-parallel XOR.  :class:`Gf2Vec` wraps
that int with its length for the public API, while the ``*_bits`` helpers
work on bare ints for the hot paths of the Rota engine.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations
from typing import Iterable, Optional, Sequence

from .rng import Rng


class DimensionMismatch(ValueError):
    pass


@dataclass(frozen=True)
class Gf2Vec:
    length: int
    bits: int

    def __post_init__(self):
        if self.length < 1:
            raise ValueError("length must be positive")
        if self.bits < 0 or self.bits >> self.length:
            raise ValueError("bits outside [0, length)")

    @classmethod
    def from_list(cls, coords: Sequence[int]) -> "Gf2Vec":
        bits = 0
        for i, c in enumerate(coords):
            if c & 1:
                bits |= 1 << i
        return cls(len(coords), bits)

    @classmethod
    def unit(cls, length: int, i: int) -> "Gf2Vec":
        return cls(length, 1 << i)

    def to_list(self) -> list[int]:
        return [(self.bits >> i) & 1 for i in range(self.length)]

    def __add__(self, other: "Gf2Vec") -> "Gf2Vec":
        if self.length != other.length:
            raise DimensionMismatch("vector lengths differ")
        return Gf2Vec(self.length, self.bits ^ other.bits)

    def to_hex(self) -> str:
        """Little-endian hex: byte 0 holds coordinates 0..7."""
        return self.bits.to_bytes((self.length + 7) // 8, "little").hex()

    @classmethod
    def from_hex(cls, length: int, text: str) -> "Gf2Vec":
        return cls(length, int.from_bytes(bytes.fromhex(text), "little"))

    def __repr__(self):
        return "Gf2Vec(" + "".join(map(str, self.to_list())) + ")"


@dataclass(frozen=True)
class Gf2Mat:
    rows: tuple[Gf2Vec, ...]

    def __post_init__(self):
        if len({r.length for r in self.rows}) > 1:
            raise DimensionMismatch("rows have different lengths")

    @property
    def shape(self) -> tuple[int, int]:
        return (len(self.rows), self.rows[0].length if self.rows else 0)

    def columns(self) -> list[Gf2Vec]:
        nr, nc = self.shape
        return [
            Gf2Vec(nr, sum(((self.rows[i].bits >> j) & 1) << i for i in range(nr)))
            for j in range(nc)
        ]

    def to_lists(self) -> list[list[int]]:
        return [r.to_list() for r in self.rows]

    def to_json(self) -> list[str]:
        return [r.to_hex() for r in self.rows]


def _bits_of(vectors: Sequence[Gf2Vec]) -> list[int]:
    if len({v.length for v in vectors}) > 1:
        raise DimensionMismatch("vectors have different lengths")
    return [v.bits for v in vectors]


# -- bare-int kernels -------------------------------------------------------

def rank_bits(vectors: Iterable[int]) -> int:
    """Rank of int-packed vectors (xor basis keyed by leading bit)."""
    basis: dict[int, int] = {}
    r = 0
    for v in vectors:
        while v:
            top = v.bit_length() - 1
            b = basis.get(top)
            if b is None:
                basis[top] = v
                r += 1
                break
            v ^= b
    return r


def dup_count_bits(vectors: Sequence[int]) -> int:
    return len(vectors) - len(set(vectors))


def find_circuit_bits(
    vectors: Sequence[int], max_probe_size: Optional[int] = None
) -> Optional[tuple[tuple[int, ...], int]]:
    m = len(vectors)
    if rank_bits(vectors) == m:
        return None
    if max_probe_size is None or m <= 7:
        sizes = range(1, m + 1)
    else:
        sizes = range(1, min(max_probe_size, m) + 1)
    for k in sizes:
        for idx in combinations(range(m), k):
            if rank_bits(vectors[i] for i in idx) < k:
                return idx, k
    return tuple(range(m)), m


@lru_cache(maxsize=1 << 18)
def column_profile(vectors: tuple[int, ...], max_probe_size: Optional[int] = None):
    """(size, rank, deficit, dup, circuit_size) for a tuple of packed vectors."""
    r = rank_bits(vectors)
    m = len(vectors)
    circ = 0
    if r < m:
        circ = find_circuit_bits(vectors, max_probe_size)[1]
    return m, r, m - r, dup_count_bits(vectors), circ


# -- public API ---------------------------------------------------------------

def rank(vectors: Sequence[Gf2Vec]) -> int:
    """Dimension of the GF(2) span of ``vectors``."""
    return rank_bits(_bits_of(vectors))


def deficit(vectors: Sequence[Gf2Vec]) -> int:
    return len(vectors) - rank(vectors)


def dup_count(vectors: Sequence[Gf2Vec]) -> int:
    """Elements whose value already occurred earlier in the list."""
    return dup_count_bits(_bits_of(vectors))


def is_independent(vectors: Sequence[Gf2Vec]) -> bool:
    return deficit(vectors) == 0


def find_circuit(
    vectors: Sequence[Gf2Vec], max_probe_size: Optional[int] = None
) -> Optional[tuple[tuple[int, ...], int]]:
    """Index subset of a dependent subset of ``vectors``, or None if independent.

    Without ``max_probe_size`` (or with at most 7 vectors) the result is a
    minimum-size circuit, ties broken by the lexicographically smallest index
    tuple.  With ``max_probe_size`` only sizes up to that bound are probed and
    the whole index set is returned when none is found, so the reported size
    is then an upper bound.
    """
    if not vectors:
        raise ValueError("find_circuit needs at least one vector")
    return find_circuit_bits(_bits_of(vectors), max_probe_size)


def random_gl(n: int, seed: int) -> Gf2Mat:
    """Uniform invertible n x n matrix over GF(2) by rejection sampling."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = Rng(seed).derive("random_gl", n)
    while True:
        rows = [rng.next_u64() & ((1 << n) - 1) if n <= 64 else _wide(rng, n) for _ in range(n)]
        if rank_bits(rows) == n:
            return Gf2Mat(tuple(Gf2Vec(n, r) for r in rows))


def _wide(rng: Rng, n: int) -> int:
    out, got = 0, 0
    while got < n:
        out |= rng.next_u64() << got
        got += 64
    return out & ((1 << n) - 1)
