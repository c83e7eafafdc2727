"""Latin squares, their sign, and the cycle trades that move between them."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .rng import Rng

ROW, COL, SYM = "row", "column", "symbol"
MODES = (ROW, COL, SYM)


class InvalidSquare(ValueError):
    pass


class InvalidTrade(ValueError):
    pass


def _is_perm_rows(a: np.ndarray) -> bool:
    n = a.shape[1]
    return bool((np.sort(a, axis=1) == np.arange(n)).all())


class LatinSquare:
    """n x n grid over symbols 0..n-1, each once per row and column."""

    __slots__ = ("grid",)

    def __init__(self, grid):
        g = np.array(grid, dtype=np.int64)
        if g.ndim != 2 or g.shape[0] != g.shape[1]:
            raise InvalidSquare("grid must be square")
        if g.size and not (_is_perm_rows(g) and _is_perm_rows(g.T)):
            raise InvalidSquare("not a Latin square")
        g.setflags(write=False)
        self.grid = g

    @property
    def n(self) -> int:
        return self.grid.shape[0]

    def to_list(self) -> list[list[int]]:
        return self.grid.tolist()

    def key(self) -> bytes:
        return self.grid.tobytes()

    def __eq__(self, other):
        return isinstance(other, LatinSquare) and np.array_equal(self.grid, other.grid)

    def __hash__(self):
        return hash(self.key())

    def __repr__(self):
        return f"LatinSquare({self.to_list()})"


def is_latin(grid) -> bool:
    try:
        LatinSquare(grid)
    except InvalidSquare:
        return False
    return True


def cyclic_square(n: int) -> LatinSquare:
    r = np.arange(n)
    return LatinSquare((r[:, None] + r[None, :]) % n)


# -- sign ------------------------------------------------------------------------------

def _cycle_count(p: Sequence[int]) -> int:
    n = len(p)
    seen = [False] * n
    count = 0
    for i in range(n):
        if not seen[i]:
            count += 1
            j = i
            while not seen[j]:
                seen[j] = True
                j = p[j]
    return count


def perm_sign(p: Sequence[int]) -> int:
    return -1 if (len(p) - _cycle_count(p)) % 2 else 1


def sign(L: LatinSquare) -> int:
    """Product of the signs of all row and all column permutations."""
    s = 1
    for row in L.grid.tolist():
        s *= perm_sign(row)
    for col in L.grid.T.tolist():
        s *= perm_sign(col)
    return s


# -- enumeration -------------------------------------------------------------------

def enumerate_latin(n: int) -> list[LatinSquare]:
    """Every Latin square of order n <= 4, by cell-wise backtracking."""
    if n > 4:
        raise ValueError("enumeration is limited to n <= 4")
    if n < 0:
        raise ValueError("order must be nonnegative")
    if n == 0:
        return [LatinSquare(np.zeros((0, 0), dtype=np.int64))]
    grid = [[-1] * n for _ in range(n)]
    out = []

    def fill(pos):
        if pos == n * n:
            out.append(LatinSquare(grid))
            return
        r, c = divmod(pos, n)
        used = set(grid[r][:c]) | {grid[i][c] for i in range(r)}
        for s in range(n):
            if s not in used:
                grid[r][c] = s
                fill(pos + 1)
        grid[r][c] = -1

    fill(0)
    return out


# -- matching permutations and trades ---------------------------------------------------

@dataclass(frozen=True)
class MatchingPermutation:
    mode: str
    i1: int
    i2: int
    perm: tuple[int, ...]


@dataclass(frozen=True)
class CycleTrade:
    mode: str
    i1: int
    i2: int
    support: tuple[int, ...]


def symbol_view(L: LatinSquare) -> np.ndarray:
    """Entry (s, c) is the row holding symbol s in column c."""
    return np.argsort(L.grid, axis=0)


def _lines(L: LatinSquare, mode: str, i1: int, i2: int):
    g = L.grid
    if mode == ROW:
        return g[i1], g[i2]
    if mode == COL:
        return g[:, i1], g[:, i2]
    if mode == SYM:
        m = symbol_view(L)
        return m[i1], m[i2]
    raise ValueError(f"unknown mode {mode!r}")


def _match(line1: np.ndarray, line2: np.ndarray) -> np.ndarray:
    inv2 = np.empty_like(line2)
    inv2[line2] = np.arange(len(line2))
    return inv2[line1]


def matching_permutation(L: LatinSquare, mode: str, i1: int, i2: int) -> MatchingPermutation:
    """perm[x] is the position on line i2 holding what line i1 holds at x."""
    if i1 == i2:
        raise ValueError("matching permutation needs two distinct lines")
    a, b = _lines(L, mode, i1, i2)
    return MatchingPermutation(mode, i1, i2, tuple(_match(a, b).tolist()))


def cycles_of(perm: Sequence[int]) -> list[list[int]]:
    """Cycles in min-element-first rotation, ordered by their first element."""
    n = len(perm)
    seen = [False] * n
    out = []
    for i in range(n):
        if seen[i]:
            continue
        cyc = []
        j = i
        while not seen[j]:
            seen[j] = True
            cyc.append(j)
            j = perm[j]
        out.append(cyc)
    return out


def odd_cycles(mp: MatchingPermutation) -> list[list[int]]:
    cyc = [c for c in cycles_of(mp.perm) if len(c) > 1 and len(c) % 2 == 1]
    return sorted(cyc, key=lambda c: (len(c), c))


def canonical_cycle(cyc: Sequence[int]) -> list[int]:
    cyc = list(cyc)
    if not cyc:
        return []
    k = cyc.index(min(cyc))
    return cyc[k:] + cyc[:k]


def stabilized_canonical_cycle(cyc: Sequence[int]) -> list[int]:
    """Lexicographic minimum of the min-rotation and its reversal through the head."""
    c1 = canonical_cycle(cyc)
    if len(c1) <= 2:
        return c1
    c2 = canonical_cycle(c1[:1] + c1[1:][::-1])
    return min(c1, c2)


def _swap_on(grid: np.ndarray, mode: str, i1: int, i2: int, idx: np.ndarray) -> np.ndarray:
    t = grid.copy()
    if mode == ROW:
        t[i1, idx], t[i2, idx] = grid[i2, idx], grid[i1, idx]
    elif mode == COL:
        t[idx, i1], t[idx, i2] = grid[idx, i2], grid[idx, i1]
    else:
        m = np.argsort(grid, axis=0)
        r1, r2 = m[i1, idx], m[i2, idx]
        t[r1, idx] = i2
        t[r2, idx] = i1
    return t


def apply_trade(L: LatinSquare, t: CycleTrade) -> LatinSquare:
    """Swap the two lines on the support; in symbol mode swap the two symbols' cells.

    For row and column trades a single cycle of length l multiplies the sign
    by (-1)**l.  A symbol trade transposes two entries in every touched row
    and column, so it never changes the sign.
    """
    mp = matching_permutation(L, t.mode, t.i1, t.i2)
    support = set(t.support)
    if any(mp.perm[x] not in support for x in support) or not support <= set(range(L.n)):
        raise InvalidTrade("support is not a union of cycles of the matching permutation")
    idx = np.array(sorted(support), dtype=np.int64)
    return LatinSquare(_swap_on(L.grid, t.mode, t.i1, t.i2, idx))


def swap_lines(L: LatinSquare, mode: str, i1: int, i2: int) -> LatinSquare:
    """The full-support trade, i.e. a plain swap of two rows, columns or symbols."""
    return apply_trade(L, CycleTrade(mode, i1, i2, tuple(range(L.n))))


# -- isotopies and conjugates ----------------------------------------------------------------

@dataclass(frozen=True)
class Isotopy:
    """Row r goes to row[r], column c to col[c], symbol s to sym[s]."""

    row: tuple[int, ...]
    col: tuple[int, ...]
    sym: tuple[int, ...]

    def __post_init__(self):
        n = len(self.row)
        for p in (self.row, self.col, self.sym):
            if len(p) != n or sorted(p) != list(range(n)):
                raise ValueError("isotopy components must be permutations of one size")

    @classmethod
    def identity(cls, n: int) -> "Isotopy":
        r = tuple(range(n))
        return cls(r, r, r)

    def inverse(self) -> "Isotopy":
        inv = lambda p: tuple(np.argsort(p).tolist())
        return Isotopy(inv(self.row), inv(self.col), inv(self.sym))


def apply_isotopy(L: LatinSquare, iso: Isotopy) -> LatinSquare:
    if len(iso.row) != L.n:
        raise ValueError("isotopy order differs from the square")
    out = np.empty_like(L.grid)
    r = np.array(iso.row)[:, None]
    c = np.array(iso.col)[None, :]
    out[r, c] = np.array(iso.sym)[L.grid]
    return LatinSquare(out)


def random_isotopy(n: int, rng: Rng) -> Isotopy:
    return Isotopy(tuple(rng.permutation(n)), tuple(rng.permutation(n)), tuple(rng.permutation(n)))


def conjugate_row_symbol(L: LatinSquare) -> LatinSquare:
    """Swap the roles of columns and symbols: out[r, L[r, c]] = c."""
    n = L.n
    out = np.empty_like(L.grid)
    rows = np.repeat(np.arange(n), n).reshape(n, n)
    out[rows, L.grid] = np.arange(n)[None, :]
    return LatinSquare(out)


def swap_symbols(L: LatinSquare, s1: int, s2: int) -> LatinSquare:
    g = L.grid.copy()
    g[L.grid == s1] = s2
    g[L.grid == s2] = s1
    return LatinSquare(g)


# -- random squares -----------------------------------------------------------------------

def random_trade(L: LatinSquare, rng: Rng) -> CycleTrade:
    """A uniformly chosen mode, line pair and single cycle of their matching."""
    n = L.n
    mode = MODES[rng.randbelow(3)]
    i1, i2 = rng.sample(range(n), 2)
    mp = matching_permutation(L, mode, i1, i2)
    cyc = rng.choice(cycles_of(mp.perm))
    return CycleTrade(mode, i1, i2, tuple(cyc))


def random_latin(n: int, seed: int, steps_per_n: int = 50) -> LatinSquare:
    """Cyclic square, then 50 n random cycle trades, then one random isotopy.

    Cheap and deterministic; not uniform over Latin squares.
    """
    if n < 1:
        raise ValueError("order must be positive")
    rng = Rng(seed).derive("random_latin", n)
    L = cyclic_square(n)
    if n >= 2:
        for _ in range(steps_per_n * n):
            L = apply_trade(L, random_trade(L, rng))
    return apply_isotopy(L, random_isotopy(n, rng))


def square_to_json(L: LatinSquare) -> list[list[int]]:
    return L.to_list()


def square_from_json(d) -> LatinSquare:
    return LatinSquare(d)
