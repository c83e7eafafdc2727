"""Deterministic pseudorandom streams.

Every random choice in the package goes through :class:`Rng`, a
xoshiro256** generator whose 256-bit state is filled by splitmix64 from a
single integer seed.  Independent streams for different purposes are
obtained with :meth:`Rng.derive` / :func:`derive_seed`, which mix a label into
the parent seed with 64-bit FNV-1a followed by splitmix64.  Both algorithms
are fully specified by their published reference code, so another
implementation can reproduce every draw from the seed alone.
"""

from __future__ import annotations

from typing import MutableSequence, Sequence, TypeVar

MASK64 = (1 << 64) - 1
T = TypeVar("T")


def splitmix64(x: int) -> tuple[int, int]:
    """One splitmix64 step; returns (new state, output)."""
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return x, z ^ (z >> 31)


def fnv1a64(data: bytes) -> int:
    h = 0xCBF29CE484222325
    for b in data:
        h ^= b
        h = (h * 0x100000001B3) & MASK64
    return h


def derive_seed(seed: int, *labels: object) -> int:
    """Child seed for ``labels`` (strings or ints) under ``seed``."""
    s = seed & MASK64
    for label in labels:
        s ^= fnv1a64(str(label).encode("utf-8"))
        _, s = splitmix64(s)
    return s


def _rotl(x: int, k: int) -> int:
    return ((x << k) | (x >> (64 - k))) & MASK64


class Rng:
    """xoshiro256** seeded through splitmix64."""

    __slots__ = ("seed", "_s")

    def __init__(self, seed: int = 0):
        self.seed = seed & MASK64
        x = self.seed
        state = []
        for _ in range(4):
            x, out = splitmix64(x)
            state.append(out)
        self._s = state

    def derive(self, *labels: object) -> "Rng":
        return Rng(derive_seed(self.seed, *labels))

    def next_u64(self) -> int:
        s0, s1, s2, s3 = self._s
        result = (_rotl((s1 * 5) & MASK64, 7) * 9) & MASK64
        t = (s1 << 17) & MASK64
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = _rotl(s3, 45)
        self._s = [s0, s1, s2, s3]
        return result

    def random(self) -> float:
        """Uniform float in [0, 1) built from the top 53 bits."""
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def uniform(self, a: float, b: float) -> float:
        return a + (b - a) * self.random()

    def randbelow(self, n: int) -> int:
        """Uniform integer in [0, n) by rejection (no modulo bias)."""
        if n <= 0:
            raise ValueError("n must be positive")
        if n == 1:
            return 0
        bits = (n - 1).bit_length()
        while True:
            r = self.next_u64() >> (64 - bits)
            if r < n:
                return r

    def randint(self, a: int, b: int) -> int:
        """Uniform integer in [a, b] inclusive."""
        return a + self.randbelow(b - a + 1)

    def choice(self, seq: Sequence[T]) -> T:
        return seq[self.randbelow(len(seq))]

    def shuffle(self, seq: MutableSequence) -> None:
        """In-place Fisher-Yates, drawing from the back."""
        for i in range(len(seq) - 1, 0, -1):
            j = self.randbelow(i + 1)
            seq[i], seq[j] = seq[j], seq[i]

    def permutation(self, n: int) -> list[int]:
        p = list(range(n))
        self.shuffle(p)
        return p

    def sample(self, seq: Sequence[T], k: int) -> list[T]:
        """k distinct elements in draw order (partial Fisher-Yates)."""
        pool = list(seq)
        if k > len(pool):
            raise ValueError("sample larger than population")
        for i in range(k):
            j = i + self.randbelow(len(pool) - i)
            pool[i], pool[j] = pool[j], pool[i]
        return pool[:k]
