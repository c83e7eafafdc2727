"""Graphs, bipartite incidence matrices, decks and exact isomorphism.

Graphs are dense 0-1 numpy matrices (orders stay below ~30 here).  The
canonical form is an individualisation-refinement search: colour refinement
to an equitable partition, branching on the smallest non-singleton cell and
keeping the lexicographically least adjacency encoding over all leaves.
Automorphisms discovered as coinciding leaves prune sibling branches.
"""

from __future__ import annotations

import hashlib
from collections import Counter
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from .rng import Rng


class MalformedDeck(ValueError):
    pass


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=np.uint8)
    arr.setflags(write=False)
    return arr


class Graph:
    """Simple undirected graph on vertices ``0..n-1``."""

    __slots__ = ("adj",)

    def __init__(self, adj):
        adj = _frozen(adj)
        if adj.ndim != 2 or adj.shape[0] != adj.shape[1]:
            raise ValueError("adjacency must be square")
        if adj.size and (adj.max() > 1 or np.any(np.diag(adj)) or np.any(adj != adj.T)):
            raise ValueError("adjacency must be symmetric 0-1 with zero diagonal")
        self.adj = adj

    @classmethod
    def from_edges(cls, n: int, edges) -> "Graph":
        a = np.zeros((n, n), dtype=np.uint8)
        for x, y in edges:
            a[x, y] = a[y, x] = 1
        return cls(a)

    @classmethod
    def empty(cls, n: int) -> "Graph":
        return cls(np.zeros((n, n), dtype=np.uint8))

    @property
    def n(self) -> int:
        return self.adj.shape[0]

    def num_edges(self) -> int:
        return int(self.adj.sum()) // 2

    def degrees(self) -> np.ndarray:
        return self.adj.sum(axis=1).astype(np.int64)

    def edges(self) -> list[tuple[int, int]]:
        xs, ys = np.nonzero(np.triu(self.adj))
        return list(zip(xs.tolist(), ys.tolist()))

    def neighbors(self, v: int) -> list[int]:
        return np.nonzero(self.adj[v])[0].tolist()

    def delete_vertex(self, v: int) -> "Graph":
        keep = [i for i in range(self.n) if i != v]
        return Graph(self.adj[np.ix_(keep, keep)])

    def relabel(self, perm: Sequence[int]) -> "Graph":
        """Vertex ``v`` becomes ``perm[v]``."""
        inv = np.argsort(np.asarray(perm))
        return Graph(self.adj[np.ix_(inv, inv)])

    def __eq__(self, other):
        return isinstance(other, Graph) and np.array_equal(self.adj, other.adj)

    def __hash__(self):
        return hash((self.n, self.adj.tobytes()))

    def __repr__(self):
        return f"Graph(n={self.n}, m={self.num_edges()})"


class BipartiteIncidence:
    """Bipartite graph as a u x v 0-1 incidence matrix (rows = U, columns = V)."""

    __slots__ = ("a",)

    def __init__(self, a):
        a = _frozen(a)
        if a.ndim != 2:
            raise ValueError("incidence matrix must be 2-D")
        if a.size and a.max() > 1:
            raise ValueError("entries must be 0 or 1")
        self.a = a

    @property
    def u(self) -> int:
        return self.a.shape[0]

    @property
    def v(self) -> int:
        return self.a.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.a.shape

    def num_edges(self) -> int:
        return int(self.a.sum())

    def row_degrees(self) -> np.ndarray:
        return self.a.sum(axis=1).astype(np.int64)

    def col_degrees(self) -> np.ndarray:
        return self.a.sum(axis=0).astype(np.int64)

    def to_graph(self) -> Graph:
        u, v = self.shape
        adj = np.zeros((u + v, u + v), dtype=np.uint8)
        adj[:u, u:] = self.a
        adj[u:, :u] = self.a.T
        return Graph(adj)

    def permute(self, row_perm: Sequence[int], col_perm: Sequence[int]) -> "BipartiteIncidence":
        """Row ``i`` moves to ``row_perm[i]``, column ``j`` to ``col_perm[j]``."""
        ri = np.argsort(np.asarray(row_perm, dtype=np.int64))
        ci = np.argsort(np.asarray(col_perm, dtype=np.int64))
        return BipartiteIncidence(self.a[np.ix_(ri, ci)])

    def __eq__(self, other):
        return isinstance(other, BipartiteIncidence) and self.shape == other.shape and np.array_equal(self.a, other.a)

    def __hash__(self):
        return hash((self.shape, self.a.tobytes()))

    def __repr__(self):
        return f"BipartiteIncidence({self.u}x{self.v}, m={self.num_edges()})"


AnyGraph = Union[Graph, BipartiteIncidence]

VERTEX_DELETED = "vertex-deleted"
ROW_DELETED = "row-deleted"
COLUMN_DELETED = "column-deleted"


@dataclass(frozen=True)
class Card:
    payload: AnyGraph
    kind: str

    def __post_init__(self):
        if self.kind == VERTEX_DELETED:
            ok = isinstance(self.payload, Graph)
        elif self.kind in (ROW_DELETED, COLUMN_DELETED):
            ok = isinstance(self.payload, BipartiteIncidence)
        else:
            raise ValueError(f"unknown card kind {self.kind!r}")
        if not ok:
            raise ValueError(f"payload type does not match kind {self.kind!r}")

    def num_edges(self) -> int:
        return self.payload.num_edges()


@dataclass(frozen=True)
class Deck:
    """Multiset of cards with the declared size of the original graph.

    ``n`` is set for graph decks, ``u`` and ``v`` for bipartite decks; card
    order carries no meaning.
    """

    cards: tuple[Card, ...]
    n: Optional[int] = None
    u: Optional[int] = None
    v: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "cards", tuple(self.cards))
        if self.is_bipartite:
            if self.n is not None:
                raise ValueError("bipartite decks declare u and v, not n")
            rows = [c for c in self.cards if c.kind == ROW_DELETED]
            cols = [c for c in self.cards if c.kind == COLUMN_DELETED]
            if len(rows) != self.u or len(cols) != self.v or len(rows) + len(cols) != len(self.cards):
                raise MalformedDeck("bipartite deck needs u row-cards and v column-cards")
            if any(c.payload.shape != (self.u - 1, self.v) for c in rows) or any(
                c.payload.shape != (self.u, self.v - 1) for c in cols
            ):
                raise MalformedDeck("card shape inconsistent with declared (u, v)")
        else:
            if self.n is None:
                raise ValueError("graph decks declare n")
            if len(self.cards) != self.n:
                raise MalformedDeck("card count must equal n")
            if any(c.kind != VERTEX_DELETED or c.payload.n != self.n - 1 for c in self.cards):
                raise MalformedDeck("graph deck cards must be (n-1)-vertex graphs")

    @property
    def is_bipartite(self) -> bool:
        return self.u is not None or self.v is not None

    @property
    def size(self) -> int:
        return (self.u + self.v) if self.is_bipartite else self.n

    def row_cards(self) -> list[Card]:
        return [c for c in self.cards if c.kind == ROW_DELETED]

    def col_cards(self) -> list[Card]:
        return [c for c in self.cards if c.kind == COLUMN_DELETED]

    def __len__(self):
        return len(self.cards)


def make_deck(g: AnyGraph) -> Deck:
    """One card per vertex (per row and per column for incidence matrices)."""
    if isinstance(g, BipartiteIncidence):
        u, v = g.shape
        if u < 1 or v < 1:
            raise ValueError("bipartite deck needs u, v >= 1")
        rows = [Card(BipartiteIncidence(np.delete(g.a, i, axis=0)), ROW_DELETED) for i in range(u)]
        cols = [Card(BipartiteIncidence(np.delete(g.a, j, axis=1)), COLUMN_DELETED) for j in range(v)]
        return Deck(tuple(rows + cols), u=u, v=v)
    if g.n < 2:
        raise ValueError("graph deck needs n >= 2")
    return Deck(tuple(Card(g.delete_vertex(i), VERTEX_DELETED) for i in range(g.n)), n=g.n)


def scramble(card: Card, seed: int) -> Card:
    """Relabel a card by a seed-determined uniform permutation.

    Matrix cards get independent row and column permutations.
    """
    rng = Rng(seed).derive("scramble")
    p = card.payload
    if isinstance(p, BipartiteIncidence):
        return Card(p.permute(rng.permutation(p.u), rng.permutation(p.v)), card.kind)
    return Card(p.relabel(rng.permutation(p.n)), card.kind)


def scramble_deck(deck: Deck, seed: int) -> Deck:
    """Scramble every card independently and shuffle the card order."""
    rng = Rng(seed).derive("scramble_deck")
    cards = [scramble(c, rng.next_u64()) for c in deck.cards]
    rng.shuffle(cards)
    return Deck(tuple(cards), n=deck.n, u=deck.u, v=deck.v)


# -- canonical forms ------------------------------------------------------------

def _rank_rows(sig: np.ndarray) -> tuple[np.ndarray, int]:
    uniq, inv = np.unique(sig, axis=0, return_inverse=True)
    return inv.reshape(-1).astype(np.int64), len(uniq)


def _refine(adj: np.ndarray, colors: np.ndarray) -> np.ndarray:
    """Coarsest equitable refinement; cell order is labelling-independent."""
    n = len(colors)
    k = int(colors.max()) + 1
    while True:
        onehot = np.zeros((n, k), dtype=np.int64)
        onehot[np.arange(n), colors] = 1
        sig = np.empty((n, k + 1), dtype=np.int64)
        sig[:, 0] = colors
        sig[:, 1:] = adj @ onehot
        colors, k2 = _rank_rows(sig)
        if k2 == k:
            return colors
        k = k2


class _Orbits:
    def __init__(self, n):
        self.parent = list(range(n))

    def find(self, x):
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[max(ra, rb)] = min(ra, rb)


class _CanonSearch:
    def __init__(self, adj: np.ndarray, colors: np.ndarray):
        self.adj = adj.astype(np.int64)
        self.n = adj.shape[0]
        self.best: Optional[bytes] = None
        self.best_inv: Optional[np.ndarray] = None
        self.first: Optional[bytes] = None
        self.first_inv: Optional[np.ndarray] = None
        self.generators: list[np.ndarray] = []
        self.run(_refine(self.adj, colors), [])

    def leaf(self, colors: np.ndarray) -> None:
        inv = np.argsort(colors)  # position -> vertex
        code = np.packbits(self.adj[np.ix_(inv, inv)].astype(np.uint8)).tobytes()
        if self.first is None:
            self.first, self.first_inv = code, inv
        for ref, ref_inv in ((self.first, self.first_inv), (self.best, self.best_inv)):
            if ref is not None and code == ref:
                gamma = ref_inv[colors]
                if not np.array_equal(gamma, np.arange(self.n)):
                    self.generators.append(gamma)
                break
        if self.best is None or code < self.best:
            self.best, self.best_inv = code, inv

    def run(self, colors: np.ndarray, path: list[int]) -> None:
        counts = np.bincount(colors)
        if len(counts) == self.n:
            self.leaf(colors)
            return
        sizes = np.where(counts > 1, counts, self.n + 1)
        target = int(np.argmin(sizes))
        cell = np.nonzero(colors == target)[0].tolist()
        twin = self._twin_classes(cell)
        explored: list[int] = []
        for w in cell:
            if explored and (twin[w] in {twin[x] for x in explored} or self._equivalent(w, explored, path)):
                continue
            explored.append(w)
            c2 = colors * 2
            c2[w] -= 1
            c2, _ = _rank_rows(c2[:, None])
            self.run(_refine(self.adj, c2), path + [w])

    def _twin_classes(self, cell: list[int]) -> dict[int, int]:
        # twins in one cell are swapped by a transposition fixing every other vertex
        orb = _Orbits(self.n)
        for closed in (0, 1):
            seen: dict[bytes, int] = {}
            for x in cell:
                row = self.adj[x].copy()
                row[x] = closed
                key = row.tobytes()
                if key in seen:
                    orb.union(seen[key], x)
                else:
                    seen[key] = x
        return {x: orb.find(x) for x in cell}

    def _equivalent(self, w: int, explored: list[int], path: list[int]) -> bool:
        gens = [g for g in self.generators if all(g[p] == p for p in path)]
        if not gens:
            return False
        orb = _Orbits(self.n)
        for g in gens:
            for x in range(self.n):
                orb.union(x, int(g[x]))
        rw = orb.find(w)
        return any(orb.find(x) == rw for x in explored)


@dataclass(frozen=True)
class CanonicalForm:
    data: bytes


def _canonical(adj: np.ndarray, colors: np.ndarray, tag: bytes) -> CanonicalForm:
    n = adj.shape[0]
    if n == 0:
        return CanonicalForm(tag + b"|0|")
    search = _CanonSearch(adj, colors)
    sizes = np.bincount(colors).tolist()
    return CanonicalForm(tag + f"|{n}|{sizes}|".encode() + search.best)


def canonical_form(g: AnyGraph) -> CanonicalForm:
    """Byte string equal for two inputs iff they are isomorphic.

    Incidence matrices are treated as 2-coloured graphs: rows never map to
    columns, so a matrix and its transpose differ unless they are equivalent
    under row/column permutations of the same shape.
    """
    if isinstance(g, BipartiteIncidence):
        u, v = g.shape
        colors = np.array([0] * u + [1] * v, dtype=np.int64)
        if u == 0 or v == 0:
            colors = np.zeros(u + v, dtype=np.int64)
        return _canonical(g.to_graph().adj, colors, f"B{u}x{v}".encode())
    return _canonical(g.adj, np.zeros(g.n, dtype=np.int64), b"G")


def isomorphic(g: AnyGraph, h: AnyGraph) -> bool:
    if type(g) is not type(h):
        return False
    if isinstance(g, BipartiteIncidence):
        if g.shape != h.shape or g.num_edges() != h.num_edges():
            return False
        if sorted(g.row_degrees().tolist()) != sorted(h.row_degrees().tolist()):
            return False
    else:
        if g.n != h.n or g.num_edges() != h.num_edges():
            return False
        if sorted(g.degrees().tolist()) != sorted(h.degrees().tolist()):
            return False
    return canonical_form(g) == canonical_form(h)


def deck_forms(deck: Deck) -> Counter:
    return Counter(canonical_form(c.payload) for c in deck.cards)


def exact_deck_equal(d1: Deck, d2: Deck) -> bool:
    """True iff both decks hold the same multiset of isomorphism classes."""
    if (d1.n, d1.u, d1.v) != (d2.n, d2.u, d2.v):
        raise ValueError("decks declare different sizes")
    e1 = sorted(c.num_edges() for c in d1.cards)
    if e1 != sorted(c.num_edges() for c in d2.cards):
        return False
    return deck_forms(d1) == deck_forms(d2)


# -- Kelly counting -------------------------------------------------------------

@dataclass(frozen=True)
class DeckInvariants:
    edge_count: int
    degree_multiset: tuple[int, ...]
    triangle_count: Optional[int] = None


def kelly_edge_count(deck: Deck) -> int:
    """|E| from the card edge counts: each edge survives on n - 2 cards."""
    n = deck.size
    if n < 3:
        raise MalformedDeck("edge count needs at least 3 vertices")
    total = sum(c.num_edges() for c in deck.cards)
    if total % (n - 2):
        raise MalformedDeck(f"card edge sum {total} not divisible by {n - 2}")
    return total // (n - 2)


def degrees_from_deck(deck: Deck) -> list[int]:
    """Degree of the deleted vertex of each card, in card order."""
    m = kelly_edge_count(deck)
    degs = [m - c.num_edges() for c in deck.cards]
    if any(d < 0 for d in degs):
        raise MalformedDeck("negative recovered degree")
    return degs


def triangle_count(g: Graph) -> int:
    a = g.adj.astype(np.int64)
    return int(np.trace(a @ a @ a)) // 6


def kelly_triangle_count(deck: Deck) -> int:
    """Triangles of the original: each survives on n - 3 cards."""
    if deck.is_bipartite:
        return 0
    n = deck.n
    if n < 4:
        raise MalformedDeck("triangle count needs at least 4 vertices")
    total = sum(triangle_count(c.payload) for c in deck.cards)
    if total % (n - 3):
        raise MalformedDeck(f"card triangle sum {total} not divisible by {n - 3}")
    return total // (n - 3)


def deck_invariants(deck: Deck) -> DeckInvariants:
    degs = tuple(sorted(degrees_from_deck(deck)))
    tri = None
    if not deck.is_bipartite and deck.n >= 4:
        tri = kelly_triangle_count(deck)
    return DeckInvariants(kelly_edge_count(deck), degs, tri)


# -- Weisfeiler-Lehman style signatures --------------------------------------------

def hash64(obj) -> int:
    """Stable 64-bit hash: BLAKE2b (8-byte digest) of ``repr(obj)``.

    Only nested tuples of Python ints are hashed, so the repr is canonical.
    """
    return int.from_bytes(hashlib.blake2b(repr(obj).encode(), digest_size=8).digest(), "little")


def _node_features(m: np.ndarray):
    """The 7-tuple initial colours of rows and columns."""
    r_d = m.sum(axis=1)
    c_d = m.sum(axis=0)
    r_n = m @ c_d
    r_n2 = m @ (c_d ** 2)
    c_n = m.T @ r_d
    c_n2 = m.T @ (r_d ** 2)
    r_nn = m @ c_n
    r_nn2 = m @ c_n2
    c_nn = m.T @ r_n
    c_nn2 = m.T @ r_n2
    r_nnn = m @ c_nn
    c_nnn = m.T @ r_nn
    r_dist = [len(set(c_d[m[i] == 1].tolist())) for i in range(m.shape[0])]
    c_dist = [len(set(r_d[m[:, j] == 1].tolist())) for j in range(m.shape[1])]
    rows = list(zip(r_d.tolist(), r_n.tolist(), r_n2.tolist(), r_nn.tolist(), r_nn2.tolist(), r_nnn.tolist(), r_dist))
    cols = list(zip(c_d.tolist(), c_n.tolist(), c_n2.tolist(), c_nn.tolist(), c_nn2.tolist(), c_nnn.tolist(), c_dist))
    return rows, cols


def wl_signature(m, steps: int = 3) -> tuple:
    """(sorted row colours, sorted column colours, shape) after ``steps`` rounds."""
    if isinstance(m, BipartiteIncidence):
        m = m.a
    m = np.asarray(m, dtype=np.int64)
    rows, cols = m.shape
    if rows == 0 or cols == 0:
        return ((), (), (rows, cols))
    r_colors, c_colors = _node_features(m)
    r_nbrs = [np.nonzero(m[i])[0].tolist() for i in range(rows)]
    c_nbrs = [np.nonzero(m[:, j])[0].tolist() for j in range(cols)]
    for _ in range(steps):
        next_r = [hash64((r_colors[i], tuple(sorted(c_colors[j] for j in r_nbrs[i])))) for i in range(rows)]
        next_c = [hash64((c_colors[j], tuple(sorted(r_colors[i] for i in c_nbrs[j])))) for j in range(cols)]
        r_colors, c_colors = next_r, next_c
    return (tuple(sorted(r_colors)), tuple(sorted(c_colors)), (rows, cols))


# -- connectivity -------------------------------------------------------------------

def is_connected(g: Graph) -> bool:
    if g.n == 0:
        return True
    seen = {0}
    stack = [0]
    while stack:
        x = stack.pop()
        for y in g.neighbors(x):
            if y not in seen:
                seen.add(y)
                stack.append(y)
    return len(seen) == g.n


def articulation_points(g: Graph) -> set[int]:
    """Cut vertices by Tarjan's low-link depth-first search."""
    n = g.n
    nbrs = [g.neighbors(v) for v in range(n)]
    disc = [-1] * n
    low = [0] * n
    cut: set[int] = set()
    timer = 0
    for root in range(n):
        if disc[root] != -1:
            continue
        disc[root] = low[root] = timer
        timer += 1
        children = 0
        stack = [(root, -1, iter(nbrs[root]))]
        while stack:
            v, parent, it = stack[-1]
            advanced = False
            for w in it:
                if disc[w] == -1:
                    disc[w] = low[w] = timer
                    timer += 1
                    if v == root:
                        children += 1
                    stack.append((w, v, iter(nbrs[w])))
                    advanced = True
                    break
                if w != parent:
                    low[v] = min(low[v], disc[w])
            if advanced:
                continue
            stack.pop()
            if parent != -1:
                low[parent] = min(low[parent], low[v])
                if parent != root and low[v] >= disc[parent]:
                    cut.add(parent)
        if children > 1:
            cut.add(root)
    return cut


def is_biconnected(g: Graph) -> bool:
    return g.n >= 3 and is_connected(g) and not articulation_points(g)


# -- JSON ---------------------------------------------------------------------------

def graph_to_json(g: Graph) -> dict:
    return {"n": g.n, "adj": [g.neighbors(v) for v in range(g.n)]}


def graph_from_json(d: dict) -> Graph:
    n = d["n"]
    a = np.zeros((n, n), dtype=np.uint8)
    for v, nb in enumerate(d["adj"]):
        a[v, nb] = 1
    return Graph(a)


def incidence_to_json(b: BipartiteIncidence) -> dict:
    return {"rows": b.u, "cols": b.v, "adj": [np.nonzero(b.a[i])[0].tolist() for i in range(b.u)]}


def incidence_from_json(d: dict) -> BipartiteIncidence:
    a = np.zeros((d["rows"], d["cols"]), dtype=np.uint8)
    for i, nb in enumerate(d["adj"]):
        a[i, nb] = 1
    return BipartiteIncidence(a)


def deck_to_json(deck: Deck) -> dict:
    cards = []
    for c in deck.cards:
        body = incidence_to_json(c.payload) if isinstance(c.payload, BipartiteIncidence) else graph_to_json(c.payload)
        cards.append({"kind": c.kind, **body})
    if deck.is_bipartite:
        return {"type": "bipartite", "u": deck.u, "v": deck.v, "cards": cards}
    return {"type": "graph", "n": deck.n, "cards": cards}


def deck_from_json(d: dict) -> Deck:
    cards = []
    for c in d["cards"]:
        kind = c["kind"]
        payload = graph_from_json(c) if kind == VERTEX_DELETED else incidence_from_json(c)
        cards.append(Card(payload, kind))
    if d.get("type") == "bipartite":
        return Deck(tuple(cards), u=d["u"], v=d["v"])
    return Deck(tuple(cards), n=d["n"])
