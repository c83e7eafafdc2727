"""Circuit-rich vector pools and the row bases drawn from them."""

from __future__ import annotations

from dataclasses import dataclass

from ..gf2 import Gf2Vec, random_gl, rank_bits
from ..rng import Rng

GENERIC, TRAP = "generic", "trap"
MAX_TRIES = 10_000


class GenerationError(RuntimeError):
    pass


@dataclass(frozen=True)
class Instance:
    """n row bases over GF(2)^n; element (i, k) is ``bases[i][k]``.

    Vectors are packed ints; equal values in different rows are still
    different elements.
    """

    n: int
    bases: tuple[tuple[int, ...], ...]
    kind: str = GENERIC
    seed: int = 0
    forced: tuple[int, ...] = ()

    def __post_init__(self):
        if len(self.bases) != self.n or any(len(b) != self.n for b in self.bases):
            raise ValueError("an instance needs n bases of n vectors")
        if any(rank_bits(b) != self.n for b in self.bases):
            raise ValueError("every row must be a basis")

    def vec(self, i: int, k: int) -> Gf2Vec:
        return Gf2Vec(self.n, self.bases[i][k])

    def to_json(self) -> dict:
        return {
            "rank": self.n,
            "kind": self.kind,
            "seed": self.seed,
            "bases": [[Gf2Vec(self.n, x).to_hex() for x in row] for row in self.bases],
        }

    @classmethod
    def from_json(cls, d: dict) -> "Instance":
        n = int(d["rank"])
        bases = tuple(tuple(Gf2Vec.from_hex(n, h).bits for h in row) for row in d["bases"])
        return cls(n, bases, d.get("kind", GENERIC), int(d.get("seed", 0)))


def pool_size(n: int, variable_rank: bool = False) -> int:
    """12 at rank 5, 2n + 2 otherwise; ceil(2.2 n) in variable-rank mode."""
    if variable_rank:
        return (22 * n + 9) // 10
    return 12 if n == 5 else 2 * n + 2


def gen_pool(n: int, seed: int, randomized: bool, size: int | None = None) -> list[int]:
    """b_i, b_i + b_{i+1}, b_i + b_{i+2}, deduplicated in that order, then cut
    or padded with fresh random nonzero vectors to ``size``.

    The b_i are the standard basis, or the columns of a random invertible
    matrix when ``randomized``.
    """
    if n < 2:
        raise ValueError("pools need n >= 2")
    if size is None:
        size = pool_size(n)
    if randomized:
        b = [v.bits for v in random_gl(n, seed).columns()]
    else:
        b = [1 << i for i in range(n)]
    raw = b + [b[i] ^ b[i + 1] for i in range(n - 1)] + [b[i] ^ b[i + 2] for i in range(n - 2)]
    pool = list(dict.fromkeys(raw))[:size]
    rng = Rng(seed).derive("pool_pad", n)
    seen = set(pool)
    while len(pool) < size:
        if len(seen) >= (1 << n) - 1:
            raise GenerationError("pool size exceeds the number of nonzero vectors")
        x = rng.randbelow((1 << n) - 1) + 1
        if x not in seen:
            seen.add(x)
            pool.append(x)
    return pool


def _independent_row(pool: list[int], n: int, rng: Rng, forced: int | None = None) -> tuple[int, ...]:
    rest = list(pool)
    if forced is not None:
        rest.remove(forced)
    for _ in range(MAX_TRIES):
        pick = rng.sample(rest, n - 1 if forced is not None else n)
        if forced is not None:
            pick.insert(rng.randbelow(n), forced)
        if rank_bits(pick) == n:
            return tuple(pick)
    raise GenerationError("could not draw an independent row from the pool")


def gen_instance(pool: list[int], n: int, kind: str, seed: int) -> Instance:
    """Generic: each row an independent n-subset of the pool.  Trap: draw a
    dependent n-subset D first and force D[i] into row i."""
    if len(set(pool)) < n or rank_bits(pool) < n:
        raise GenerationError("pool does not span GF(2)^n")
    rng = Rng(seed).derive("instance", n, kind)
    if kind == GENERIC:
        rows = tuple(_independent_row(pool, n, rng) for _ in range(n))
        return Instance(n, rows, GENERIC, seed)
    if kind != TRAP:
        raise ValueError(f"unknown instance kind {kind!r}")
    for _ in range(MAX_TRIES):
        d = rng.sample(pool, n)
        if rank_bits(d) < n:
            break
    else:
        raise GenerationError("pool has no dependent n-subset")
    rows = tuple(_independent_row(pool, n, rng, forced=d[i]) for i in range(n))
    return Instance(n, rows, TRAP, seed, tuple(d))
