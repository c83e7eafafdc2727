"""Reconstruction of bipartite incidence matrices from their decks.

Pipeline: Kelly counting gives edges and degrees; one card per vertex
gives the neighbour-degree profile of the deleted vertex; (degree, profile)
pairs are vertex types and each card also yields how many neighbours of each
opposite type the deleted vertex needs.  Candidate edges inside every
(row type, column type) block are scored by comparing signatures of doubly
deleted cards and the block is realised by a min-cost max-flow.
"""

from __future__ import annotations

import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .graphcore import (
    BipartiteIncidence,
    Deck,
    MalformedDeck,
    kelly_edge_count,
    wl_signature,
)

MCMF_COST_SCALE = 1_000_000

Profile = tuple[int, ...]
VertexType = tuple[int, Profile]


class InconsistentDeck(ValueError):
    pass


# -- profiles and types ---------------------------------------------------------

def recover_profile(global_degree_counts: Mapping[int, int], card_degrees: Sequence[int]) -> Profile:
    """Neighbour-degree multiset of the deleted vertex, as a sorted tuple.

    Solves c_k = g_k - a_k + a_{k+1} downward from the largest degree, where
    g counts opposite-side degrees in the graph and c in the card.
    """
    c_counts = Counter(int(d) for d in card_degrees)
    g_counts = Counter({int(k): int(x) for k, x in global_degree_counts.items()})
    keys = set(k for k, x in g_counts.items() if x) | set(c_counts)
    if not keys:
        return ()
    neighbours: list[int] = []
    a_next = 0
    for k in range(max(keys), -1, -1):
        a_k = g_counts[k] + a_next - c_counts[k]
        if a_k < 0:
            raise InconsistentDeck(f"negative neighbour count at degree {k}")
        neighbours.extend([k] * a_k)
        a_next = a_k
    if a_next:
        raise InconsistentDeck("a neighbour of degree 0 is impossible")
    return tuple(sorted(neighbours))


def remove_from_profile(profile: Profile, value: int) -> Profile:
    p = list(profile)
    if value in p:
        p.remove(value)
    return tuple(p)


def matrix_profiles(m: np.ndarray, axis: int) -> list[Profile]:
    """Per column (axis=0) or per row (axis=1): sorted degrees of its neighbours."""
    if axis == 0:
        other = m.sum(axis=1)
        return [tuple(sorted(other[m[:, j] == 1].tolist())) for j in range(m.shape[1])]
    other = m.sum(axis=0)
    return [tuple(sorted(other[m[i, :] == 1].tolist())) for i in range(m.shape[0])]


def _local_types(m: np.ndarray, axis: int) -> list[VertexType]:
    degs = m.sum(axis=axis).astype(int).tolist()
    return list(zip(degs, matrix_profiles(m, axis)))


@dataclass
class DeckAnalysis:
    """Everything the pipeline derives from a bipartite deck before assignment."""

    u: int
    v: int
    m: int
    row_cards: list[np.ndarray]
    col_cards: list[np.ndarray]
    u_degrees: list[int]
    v_degrees: list[int]
    u_types: list[VertexType] = field(default_factory=list)
    v_types: list[VertexType] = field(default_factory=list)


def analyze_deck(deck: Deck) -> DeckAnalysis:
    if not deck.is_bipartite:
        raise MalformedDeck("expected a bipartite deck")
    u, v = deck.u, deck.v
    m = kelly_edge_count(deck)
    rows = [np.asarray(c.payload.a, dtype=np.int64) for c in deck.row_cards()]
    cols = [np.asarray(c.payload.a, dtype=np.int64) for c in deck.col_cards()]
    du = [m - int(c.sum()) for c in rows]
    dv = [m - int(c.sum()) for c in cols]
    if min(du + dv, default=0) < 0:
        raise MalformedDeck("negative recovered degree")
    if sum(du) != m or sum(dv) != m:
        raise InconsistentDeck("degree sums disagree with the edge count")
    return DeckAnalysis(u, v, m, rows, cols, du, dv)


def compute_types(deck: Deck) -> tuple[list[VertexType], list[VertexType]]:
    """(degree, profile) of each row-card's and column-card's deleted vertex."""
    return _types(analyze_deck(deck))


def _types(an: DeckAnalysis) -> tuple[list[VertexType], list[VertexType]]:
    v_counts = Counter(an.v_degrees)
    u_counts = Counter(an.u_degrees)
    u_types = [
        (d, recover_profile(v_counts, card.sum(axis=0).tolist())) for d, card in zip(an.u_degrees, an.row_cards)
    ]
    v_types = [
        (d, recover_profile(u_counts, card.sum(axis=1).tolist())) for d, card in zip(an.v_degrees, an.col_cards)
    ]
    for d, prof in u_types + v_types:
        if len(prof) != d:
            raise InconsistentDeck("profile size differs from degree")
    an.u_types, an.v_types = u_types, v_types
    return u_types, v_types


def _requirements(cards, degrees, opp_types: list[VertexType], axis: int) -> list[dict[VertexType, int]]:
    counts = Counter(opp_types)
    order = sorted(counts, reverse=True)
    out = []
    for card, remover_deg in zip(cards, degrees):
        observed = Counter(_local_types(card, axis))
        reqs: dict[VertexType, int] = {}
        shifted_in: Counter = Counter()
        for t in order:
            d, prof = t
            needed = counts[t] - (observed[t] - shifted_in[t])
            if needed < 0:
                raise InconsistentDeck("negative type requirement")
            if needed > 0:
                reqs[t] = needed
                shifted_in[(d - 1, remove_from_profile(prof, remover_deg))] += needed
        if sum(reqs.values()) != remover_deg:
            raise InconsistentDeck("type requirements do not sum to the degree")
        out.append(reqs)
    return out


def compute_requirements(deck: Deck, types=None):
    """Per deleted vertex, the number of neighbours it needs of each opposite type.

    Returns (row requirements, column requirements).  Opposite types are
    processed in decreasing order; each required neighbour of type (d, P)
    shows up in the card as (d - 1, P minus the deleter's degree), which is
    discounted from the observed count of that local type.
    """
    an = analyze_deck(deck)
    if types is None:
        _types(an)
    else:
        an.u_types, an.v_types = list(types[0]), list(types[1])
    return _reqs(an)


def _reqs(an: DeckAnalysis):
    u_reqs = _requirements(an.row_cards, an.u_degrees, an.v_types, axis=0)
    v_reqs = _requirements(an.col_cards, an.v_degrees, an.u_types, axis=1)
    return u_reqs, v_reqs


# -- two-deletion signatures ----------------------------------------------------------

SigMap = dict[VertexType, tuple]


def _card_sigs(card: np.ndarray, axis: int, wl_steps: int) -> SigMap:
    # axis=0: row-card, delete each column; axis=1: column-card, delete each row
    local = _local_types(card, axis)
    groups: dict[VertexType, list] = defaultdict(list)
    for idx, t in enumerate(local):
        groups[t].append(wl_signature(np.delete(card, idx, axis=1 - axis), wl_steps))
    return {k: tuple(sorted(vals)) for k, vals in groups.items()}


def two_deletion_signatures(deck: Deck, wl_steps: int = 3) -> tuple[list[SigMap], list[SigMap]]:
    """For every card, WL signatures of its one-further-deleted sub-cards,
    grouped by the local type of the extra deleted vertex."""
    an = analyze_deck(deck)
    return (
        [_card_sigs(c, 0, wl_steps) for c in an.row_cards],
        [_card_sigs(c, 1, wl_steps) for c in an.col_cards],
    )


def dice(a: Counter, b: Counter) -> float:
    total = sum(a.values()) + sum(b.values())
    if total == 0:
        return 0.0
    return 2.0 * sum((a & b).values()) / total


def edge_confidence(u_sigs: SigMap, v_sigs: SigMap, r_type: VertexType, c_type: VertexType) -> float:
    """Dice agreement under the edge hypothesis minus agreement under non-edge."""
    dr, prof_r = r_type
    dc, prof_c = c_type
    u_conn = Counter(u_sigs.get((dc - 1, remove_from_profile(prof_c, dr)), ()))
    v_conn = Counter(v_sigs.get((dr - 1, remove_from_profile(prof_r, dc)), ()))
    u_non = Counter(u_sigs.get(c_type, ()))
    v_non = Counter(v_sigs.get(r_type, ()))
    return dice(u_conn, v_conn) - dice(u_non, v_non)


def cosine_sim(t1: tuple, t2: tuple) -> float:
    if not t1 and not t2:
        return 1.0
    if not t1 or not t2:
        return 0.0
    c1, c2 = Counter(t1), Counter(t2)
    dot = sum(c1[k] * c2[k] for k in c1.keys() & c2.keys())
    n1 = sum(x * x for x in c1.values())
    n2 = sum(x * x for x in c2.values())
    return dot / (math.sqrt(n1) * math.sqrt(n2))


# -- min-cost flow --------------------------------------------------------------------

@dataclass
class FlowProblem:
    """Bipartite transportation problem with unit-capacity candidate edges.

    ``supplies[r]`` and ``demands[c]`` are integer capacities and ``edges``
    holds ``(r, c, cost)`` with integer cost.
    """

    supplies: dict
    demands: dict
    edges: list


def min_cost_max_flow(n_nodes: int, arcs: list[tuple[int, int, int, int]], s: int, t: int):
    """Successive shortest augmenting paths (Bellman-Ford on the residual graph).

    ``arcs`` are (tail, head, capacity, cost); returns per-arc flows and the
    total cost.  Works with negative costs as long as there is no negative
    cycle, which holds for the layered graphs built here.
    """
    graph: list[list[int]] = [[] for _ in range(n_nodes)]
    to, cap, cost = [], [], []
    for a, b, c, w in arcs:
        graph[a].append(len(to)); to.append(b); cap.append(c); cost.append(w)
        graph[b].append(len(to)); to.append(a); cap.append(0); cost.append(-w)
    total = 0
    inf = float("inf")
    while True:
        dist = [inf] * n_nodes
        prev = [-1] * n_nodes
        dist[s] = 0
        for _ in range(n_nodes):
            changed = False
            for x in range(n_nodes):
                if dist[x] == inf:
                    continue
                for e in graph[x]:
                    if cap[e] > 0 and dist[x] + cost[e] < dist[to[e]]:
                        dist[to[e]] = dist[x] + cost[e]
                        prev[to[e]] = e
                        changed = True
            if not changed:
                break
        if dist[t] == inf:
            break
        push = inf
        x = t
        while x != s:
            e = prev[x]
            push = min(push, cap[e])
            x = to[e ^ 1]
        x = t
        while x != s:
            e = prev[x]
            cap[e] -= push
            cap[e ^ 1] += push
            x = to[e ^ 1]
        total += push * dist[t]
    flows = [cap[2 * i + 1] for i in range(len(arcs))]
    return flows, total


def assign_block(flow: FlowProblem) -> set:
    """Edges (r, c) carrying flow in a min-cost maximum flow.

    If the maximum flow is below the total supply the partial assignment is
    returned as is.
    """
    rows = sorted(flow.supplies)
    cols = sorted(flow.demands)
    rid = {r: 2 + i for i, r in enumerate(rows)}
    cid = {c: 2 + len(rows) + j for j, c in enumerate(cols)}
    arcs = [(0, rid[r], flow.supplies[r], 0) for r in rows]
    arcs += [(cid[c], 1, flow.demands[c], 0) for c in cols]
    edge_arcs = []
    for r, c, w in flow.edges:
        if r in rid and c in cid:
            edge_arcs.append((r, c))
            arcs.append((rid[r], cid[c], 1, int(w)))
    flows, _ = min_cost_max_flow(2 + len(rows) + len(cols), arcs, 0, 1)
    base = len(rows) + len(cols)
    return {rc for rc, f in zip(edge_arcs, flows[base:]) if f == 1}


# -- full pipeline -------------------------------------------------------------------------

def reconstruct_bipartite(deck: Deck, wl_steps: int = 3) -> BipartiteIncidence:
    """Incidence matrix whose deck should equal ``deck``."""
    if not deck.is_bipartite:
        raise MalformedDeck("expected a bipartite deck")
    u, v = deck.u, deck.v
    if u == 0 or v == 0 or (u == 1 and v == 1):
        return BipartiteIncidence(np.zeros((u, v), dtype=np.uint8))
    an = analyze_deck(deck)
    u_types, v_types = _types(an)
    u_reqs, v_reqs = _reqs(an)
    u_sigs = [_card_sigs(c, 0, wl_steps) for c in an.row_cards]
    v_sigs = [_card_sigs(c, 1, wl_steps) for c in an.col_cards]

    # deterministic ordering of vertices inside a type: card signature,
    # then the sorted row of cosine similarities to every other card
    cards = an.row_cards + an.col_cards
    card_sigs = [wl_signature(c, wl_steps) for c in cards]
    k = u + v
    sim = np.eye(k)
    for i in range(k):
        for j in range(i + 1, k):
            s1, s2 = card_sigs[i], card_sigs[j]
            sim[i, j] = sim[j, i] = (cosine_sim(s1[0], s2[0]) + cosine_sim(s1[1], s2[1])) / 2.0
    u_keys = {i: (card_sigs[i], tuple(np.sort(sim[i]).tolist())) for i in range(u)}
    v_keys = {j: (card_sigs[u + j], tuple(np.sort(sim[u + j]).tolist())) for j in range(v)}
    u_rank = {idx: r for r, idx in enumerate(sorted(range(u), key=lambda i: u_keys[i]))}
    v_rank = {idx: r for r, idx in enumerate(sorted(range(v), key=lambda j: v_keys[j]))}

    rows_by_type: dict[VertexType, list[int]] = defaultdict(list)
    for i, t in enumerate(u_types):
        rows_by_type[t].append(i)
    cols_by_type: dict[VertexType, list[int]] = defaultdict(list)
    for j, t in enumerate(v_types):
        cols_by_type[t].append(j)

    adj = np.zeros((u, v), dtype=np.uint8)
    for r_type in sorted(rows_by_type, reverse=True):
        for c_type in sorted(cols_by_type, reverse=True):
            r_idxs = sorted(rows_by_type[r_type], key=lambda i: u_keys[i])
            c_idxs = sorted(cols_by_type[c_type], key=lambda j: v_keys[j])
            supplies = {r: u_reqs[r].get(c_type, 0) for r in r_idxs if u_reqs[r].get(c_type, 0) > 0}
            demands = {c: v_reqs[c].get(r_type, 0) for c in c_idxs if v_reqs[c].get(r_type, 0) > 0}
            if not supplies or not demands:
                continue
            edges = []
            for r in supplies:
                for c in demands:
                    conf = edge_confidence(u_sigs[r], v_sigs[c], r_type, c_type)
                    cost = int(-conf * MCMF_COST_SCALE) - (u_rank[r] * v + v_rank[c])
                    edges.append((r, c, cost))
            for r, c in assign_block(FlowProblem(supplies, demands, edges)):
                adj[r, c] = 1
    return BipartiteIncidence(adj)
