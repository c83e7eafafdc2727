"""Planar instances and bounded-degree reconstruction with exact verification."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from itertools import combinations, product
from typing import Mapping, Optional

import numpy as np

from .graphcore import (
    Deck,
    Graph,
    MalformedDeck,
    deck_forms,
    degrees_from_deck,
    is_biconnected,
    kelly_edge_count,
    kelly_triangle_count,
    make_deck,
    triangle_count,
)
from .rng import Rng

AMBIGUITY_CAP = 2000


class NoReconstruction(RuntimeError):
    """Every candidate neighbourhood was tried and none reproduced the deck."""


@dataclass(frozen=True)
class PlanarInstance:
    graph: Graph
    n: int
    seed: int
    deletions: tuple[tuple[int, int], ...]
    regenerations: int = 0


@dataclass(frozen=True)
class NeighborCandidate:
    card_idx: int
    req: tuple[tuple[int, int], ...]
    ambiguity: int


# -- generation ----------------------------------------------------------------------

def apollonian(n: int, rng: Rng) -> np.ndarray:
    """Maximal planar graph on n >= 4 vertices by repeated face subdivision."""
    adj = np.zeros((n, n), dtype=np.uint8)
    for a, b in combinations(range(4), 2):
        adj[a, b] = adj[b, a] = 1
    faces = [(0, 1, 2), (0, 1, 3), (0, 2, 3), (1, 2, 3)]
    for w in range(4, n):
        k = rng.randbelow(len(faces))
        a, b, c = faces[k]
        for x in (a, b, c):
            adj[w, x] = adj[x, w] = 1
        faces[k] = (a, b, w)
        faces.append((a, c, w))
        faces.append((b, c, w))
    return adj


def _try_generate(n: int, rng: Rng):
    adj = apollonian(n, rng)
    deleted = []
    for _ in range(n // 2):
        iu = np.argwhere(np.triu(adj) == 1)
        a, b = (int(x) for x in iu[rng.randbelow(len(iu))])
        if adj[a].sum() <= 3 or adj[b].sum() <= 3:
            continue
        adj[a, b] = adj[b, a] = 0
        if is_biconnected(Graph(adj)):
            deleted.append((a, b))
        else:
            adj[a, b] = adj[b, a] = 1
    return adj, deleted


def generate_planar(n: int, seed: int, max_regenerations: int = 1000) -> PlanarInstance:
    """Biconnected planar graph with minimum degree 3 that is not maximal planar.

    Needs n >= 5: K4 is the only graph the construction yields at n = 4 and no
    edge of it can go without dropping a degree to 2.
    """
    if n < 4:
        raise ValueError("planar instances need n >= 4")
    if n == 4:
        raise ValueError("n = 4 only admits K4, which has no admissible deletion; use n >= 5")
    for attempt in range(max_regenerations):
        rng = Rng(seed).derive("planar", n, attempt)
        adj, deleted = _try_generate(n, rng)
        if deleted:
            return PlanarInstance(Graph(adj), n, seed, tuple(deleted), attempt)
    raise RuntimeError("no admissible deletion found")


def audit_instance(inst: PlanarInstance) -> bool:
    g = inst.graph
    n = g.n
    return bool(is_biconnected(g) and g.degrees().min() >= 3 and g.num_edges() < 3 * n - 6)


# -- reconstruction -----------------------------------------------------------------

def reattachment_requirements(
    global_degree_counts: Mapping[int, int],
    card_degree_counts: Mapping[int, int],
    deg_v: int,
) -> Optional[dict[int, int]]:
    """How many card vertices of each card degree must be joined to the deleted vertex.

    ``global_degree_counts`` must already exclude the deleted vertex.  A card
    vertex of degree x that gets joined ends at degree x + 1, so scanning
    degrees upward the number of promoted vertices is carried along.
    Returns None when no choice lifts the card multiset onto the global one.
    """
    g = Counter({int(k): int(v) for k, v in global_degree_counts.items() if v})
    c = Counter({int(k): int(v) for k, v in card_degree_counts.items() if v})
    degs = set(g) | set(c)
    req: dict[int, int] = {}
    carry = 0
    if degs:
        for x in range(min(degs), max(degs) + 2):
            nxt = carry + c[x] - g[x]
            if nxt < 0 or nxt > c[x]:
                return None
            if nxt > 0:
                req[x] = nxt
            carry = nxt
    if carry != 0 or sum(req.values()) != deg_v:
        return None
    return req


def neighbor_candidates(deck: Deck) -> list[NeighborCandidate]:
    """Feasible re-attachments per card, least ambiguous first."""
    degs = degrees_from_deck(deck)
    g_counts = Counter(degs)
    out = []
    for i, card in enumerate(deck.cards):
        d = degs[i]
        target = g_counts.copy()
        target[d] -= 1
        c_counts = Counter(card.payload.degrees().tolist())
        req = reattachment_requirements(target, c_counts, d)
        if req is None:
            continue
        amb = 1
        for x, k in req.items():
            amb *= math.comb(c_counts[x], k)
        out.append(NeighborCandidate(i, tuple(sorted(req.items())), amb))
    out.sort(key=lambda c: c.ambiguity)
    return out


def _card_invariants(adj: np.ndarray) -> Counter:
    """Multiset of (edges, triangles) over all vertex deletions."""
    a = adj.astype(np.int64)
    deg = a.sum(axis=1)
    m = int(deg.sum()) // 2
    tri_at = np.diagonal(a @ a @ a) // 2
    t = int(tri_at.sum()) // 3
    return Counter(zip((m - deg).tolist(), (t - tri_at).tolist()))


def reconstruct_planar(deck: Deck, n: Optional[int] = None, cap: int = AMBIGUITY_CAP) -> Graph:
    """A graph whose deck equals ``deck`` up to isomorphism.

    Tries low-ambiguity cards first; neighbour sets must lift the degree
    multiset and create exactly the missing triangles.  Raises
    NoReconstruction if nothing verifies.
    """
    if deck.is_bipartite:
        raise MalformedDeck("expected a graph deck")
    if n is not None and n != deck.n:
        raise MalformedDeck(f"deck declares n={deck.n}, got n={n}")
    n = deck.n
    if n < 4:
        raise ValueError("planar reconstruction needs n >= 4")
    kelly_edge_count(deck)
    t_total = kelly_triangle_count(deck)
    target_cards = Counter(
        (c.num_edges(), triangle_count(c.payload)) for c in deck.cards
    )
    target_forms = None

    for cand in neighbor_candidates(deck):
        if cand.ambiguity > cap:
            continue
        card = deck.cards[cand.card_idx].payload
        cadj = card.adj
        t_card = triangle_count(card)
        need_tri = t_total - t_card
        cdeg = card.degrees()
        by_deg: dict[int, list[int]] = {}
        for idx, d in enumerate(cdeg.tolist()):
            by_deg.setdefault(d, []).append(idx)
        pools = [list(combinations(by_deg[d], k)) for d, k in cand.req]
        for choice in product(*pools):
            s = [x for grp in choice for x in grp]
            if int(cadj[np.ix_(s, s)].sum()) // 2 != need_tri:
                continue
            a = np.zeros((n, n), dtype=np.uint8)
            a[:-1, :-1] = cadj
            a[s, n - 1] = 1
            a[n - 1, s] = 1
            if _card_invariants(a) != target_cards:
                continue
            h = Graph(a)
            if target_forms is None:
                target_forms = deck_forms(deck)
            if deck_forms(make_deck(h)) == target_forms:
                assert triangle_count(h) == t_total
                return h
    raise NoReconstruction("no candidate neighbourhood reproduces the deck")
