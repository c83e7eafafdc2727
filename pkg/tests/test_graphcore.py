import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from certlab.graphcore import (
    COLUMN_DELETED,
    ROW_DELETED,
    BipartiteIncidence,
    Card,
    Deck,
    Graph,
    MalformedDeck,
    articulation_points,
    canonical_form,
    deck_from_json,
    deck_to_json,
    degrees_from_deck,
    exact_deck_equal,
    is_biconnected,
    is_connected,
    isomorphic,
    kelly_edge_count,
    kelly_triangle_count,
    make_deck,
    scramble,
    scramble_deck,
    triangle_count,
    wl_signature,
)

K3 = Graph.from_edges(3, [(0, 1), (1, 2), (0, 2)])
P3 = Graph.from_edges(3, [(0, 1), (1, 2)])
P4 = Graph.from_edges(4, [(0, 1), (1, 2), (2, 3)])
STAR = Graph.from_edges(4, [(0, 1), (0, 2), (0, 3)])
C4 = Graph.from_edges(4, [(0, 1), (1, 2), (2, 3), (3, 0)])
K4 = Graph.from_edges(4, [(i, j) for i in range(4) for j in range(i + 1, 4)])
C5 = Graph.from_edges(5, [(i, (i + 1) % 5) for i in range(5)])


def to_nx(g: Graph) -> nx.Graph:
    h = nx.Graph()
    h.add_nodes_from(range(g.n))
    h.add_edges_from(g.edges())
    return h


@st.composite
def graphs(draw, lo=1, hi=9):
    n = draw(st.integers(lo, hi))
    bits = draw(st.lists(st.booleans(), min_size=n * (n - 1) // 2, max_size=n * (n - 1) // 2))
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    return Graph.from_edges(n, [p for p, b in zip(pairs, bits) if b])


@st.composite
def incidences(draw, hi=6):
    u = draw(st.integers(1, hi))
    v = draw(st.integers(1, hi))
    bits = draw(st.lists(st.booleans(), min_size=u * v, max_size=u * v))
    return BipartiteIncidence(np.array(bits, dtype=np.uint8).reshape(u, v))


def test_k3_deck():
    d = make_deck(K3)
    assert len(d) == 3 and all(c.payload.n == 2 and c.num_edges() == 1 for c in d.cards)


def test_path_deck():
    assert sorted(c.num_edges() for c in make_deck(P3).cards) == [0, 1, 1]


def test_all_ones_2x2_deck():
    d = make_deck(BipartiteIncidence(np.ones((2, 2), dtype=np.uint8)))
    assert [c.payload.shape for c in d.row_cards()] == [(1, 2), (1, 2)]
    assert [c.payload.shape for c in d.col_cards()] == [(2, 1), (2, 1)]
    assert all(c.payload.num_edges() == 2 for c in d.cards)


def test_scramble_deterministic_and_isomorphic():
    c = make_deck(C5).cards[0]
    assert scramble(c, 4) == scramble(c, 4)
    assert isomorphic(scramble(c, 4).payload, c.payload)
    k = make_deck(K3).cards[0]
    assert scramble(k, 9).payload.num_edges() == 1 and scramble(k, 9).payload.n == 2


def test_isomorphism_examples():
    assert not isomorphic(K3, P3)
    assert not isomorphic(P4, STAR)
    assert isomorphic(P4, P4.relabel([2, 0, 3, 1]))


def test_bipartite_side_colours_matter():
    a = np.array([[1, 1, 1]], dtype=np.uint8)
    assert not isomorphic(BipartiteIncidence(a), BipartiteIncidence(a.T))


def test_kelly_examples():
    assert kelly_edge_count(make_deck(K3)) == 3
    assert degrees_from_deck(make_deck(K3)) == [2, 2, 2]
    assert kelly_edge_count(make_deck(P3)) == 2
    assert degrees_from_deck(make_deck(P3)) == [1, 2, 1]
    assert kelly_edge_count(make_deck(C4)) == 4
    assert degrees_from_deck(make_deck(C4)) == [2, 2, 2, 2]


def test_triangle_examples():
    assert triangle_count(K4) == 4 and kelly_triangle_count(make_deck(K4)) == 4
    assert kelly_triangle_count(make_deck(C5)) == 0
    k3_plus = Graph.from_edges(4, [(0, 1), (1, 2), (0, 2)])
    assert kelly_triangle_count(make_deck(k3_plus)) == 1


def test_wl_signature_examples():
    assert wl_signature(np.zeros((0, 0), dtype=np.uint8)) == ((), (), (0, 0))
    p4 = np.array([[1, 0], [1, 1]], dtype=np.uint8)  # path on 4 vertices
    star = np.array([[1, 1, 1]], dtype=np.uint8)
    assert wl_signature(p4) != wl_signature(star)


def test_exact_deck_equal_examples():
    d = make_deck(P4)
    assert exact_deck_equal(d, d)
    assert exact_deck_equal(d, scramble_deck(d, 3))
    assert not exact_deck_equal(make_deck(P4), make_deck(STAR))


def test_malformed_decks_rejected():
    cards = make_deck(K3).cards
    with pytest.raises(MalformedDeck):
        Deck(cards[:2], n=3)
    b = make_deck(BipartiteIncidence(np.ones((2, 3), dtype=np.uint8)))
    with pytest.raises(MalformedDeck):
        Deck(b.cards, u=3, v=3)
    with pytest.raises(ValueError):
        Card(K3, ROW_DELETED)


def test_biconnectivity():
    assert is_biconnected(C5) and not is_biconnected(P4)
    assert articulation_points(P4) == {1, 2}
    assert not is_connected(Graph.from_edges(4, [(0, 1), (2, 3)]))


def test_deck_json_roundtrip():
    for g in (C5, BipartiteIncidence(np.array([[1, 0, 1], [1, 1, 0]], dtype=np.uint8))):
        d = scramble_deck(make_deck(g), 1)
        assert exact_deck_equal(deck_from_json(deck_to_json(d)), d)


@settings(max_examples=60, deadline=None)
@given(graphs(), st.integers(0, 2**32))
def test_canonical_form_relabel_invariant(g, seed):
    perm = np.random.default_rng(seed).permutation(g.n).tolist()
    assert canonical_form(g) == canonical_form(g.relabel(perm))


@settings(max_examples=60, deadline=None)
@given(graphs(hi=7), graphs(hi=7))
def test_isomorphic_agrees_with_networkx(g, h):
    assert isomorphic(g, h) == nx.is_isomorphic(to_nx(g), to_nx(h))


@settings(max_examples=60, deadline=None)
@given(incidences(), st.integers(0, 2**32))
def test_incidence_form_invariant(b, seed):
    r = np.random.default_rng(seed)
    q = b.permute(r.permutation(b.u).tolist(), r.permutation(b.v).tolist())
    assert canonical_form(b) == canonical_form(q)
    assert wl_signature(b.a) == wl_signature(q.a)


@settings(max_examples=50, deadline=None)
@given(graphs(lo=4, hi=9))
def test_kelly_against_networkx(g):
    ref = to_nx(g)
    deck = make_deck(g)
    assert kelly_edge_count(deck) == ref.number_of_edges()
    assert degrees_from_deck(deck) == [d for _, d in sorted(ref.degree())]
    assert kelly_triangle_count(deck) == sum(nx.triangles(ref).values()) // 3


@settings(max_examples=50, deadline=None)
@given(graphs(lo=2, hi=9))
def test_biconnected_against_networkx(g):
    ref = to_nx(g)
    assert is_connected(g) == nx.is_connected(ref)
    assert articulation_points(g) == set(nx.articulation_points(ref))
    want = g.n >= 3 and nx.is_biconnected(ref)
    assert is_biconnected(g) == want


@settings(max_examples=40, deadline=None)
@given(incidences(), st.integers(0, 2**32))
def test_scrambled_deck_equal(b, seed):
    d = make_deck(b)
    assert exact_deck_equal(d, scramble_deck(d, seed))
    assert sum(1 for c in d.cards if c.kind == COLUMN_DELETED) == b.v
