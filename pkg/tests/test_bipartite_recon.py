from collections import Counter
from itertools import product

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from certlab.bipartite_recon import (
    MCMF_COST_SCALE,
    FlowProblem,
    InconsistentDeck,
    assign_block,
    compute_requirements,
    compute_types,
    cosine_sim,
    dice,
    edge_confidence,
    min_cost_max_flow,
    reconstruct_bipartite,
    recover_profile,
    two_deletion_signatures,
)
from certlab.graphcore import BipartiteIncidence, Card, Deck, MalformedDeck, ROW_DELETED, exact_deck_equal, make_deck, scramble_deck
from certlab.harness import gen_bipartite

K22 = BipartiteIncidence(np.ones((2, 2), dtype=np.uint8))
STAR = BipartiteIncidence(np.ones((1, 3), dtype=np.uint8))


@st.composite
def incidences(draw, lo=1, hi=7):
    u = draw(st.integers(lo, hi))
    v = draw(st.integers(lo, hi))
    bits = draw(st.lists(st.booleans(), min_size=u * v, max_size=u * v))
    return BipartiteIncidence(np.array(bits, dtype=np.uint8).reshape(u, v))


def test_recover_profile_examples():
    # centre of P3 seen from the leaf side
    assert recover_profile({1: 2}, [0, 1]) == (1,)
    assert recover_profile({1: 1, 2: 3}, [1, 2, 2, 2]) == ()


def test_recover_profile_brute_force():
    """All profiles consistent with the counts, by enumerating neighbourhoods."""
    degrees = [1, 1, 2]
    counts = Counter(degrees)
    for nbhd in product((0, 1), repeat=3):
        card = [d - x for d, x in zip(degrees, nbhd)]
        want = tuple(sorted(d for d, x in zip(degrees, nbhd) if x))
        assert recover_profile(counts, card) == want


def test_recover_profile_inconsistent():
    with pytest.raises(InconsistentDeck):
        recover_profile({1: 1}, [3])


def test_types_examples():
    u_t, v_t = compute_types(make_deck(K22))
    assert set(u_t + v_t) == {(2, (2, 2))}
    u_t, v_t = compute_types(make_deck(STAR))
    assert u_t == [(3, (1, 1, 1))] and v_t == [(1, (3,))] * 3


def test_requirements_examples():
    u_r, v_r = compute_requirements(make_deck(K22))
    assert u_r == [{(2, (2, 2)): 2}] * 2
    u_r, v_r = compute_requirements(make_deck(STAR))
    assert u_r == [{(1, (3,)): 3}]
    assert v_r == [{(3, (1, 1, 1)): 1}] * 3


def test_two_deletion_one_by_one_card():
    d = make_deck(BipartiteIncidence(np.array([[1], [1]], dtype=np.uint8)))
    u_sigs, _ = two_deletion_signatures(d)
    for sigmap in u_sigs:
        assert len(sigmap) == 1
        (sigs,) = sigmap.values()
        assert sigs == (((), (), (1, 0)),)


def test_two_deletion_k22_symmetric():
    u_sigs, v_sigs = two_deletion_signatures(make_deck(K22))
    for sigmap in u_sigs + v_sigs:
        for sigs in sigmap.values():
            assert len(set(sigs)) == 1


def test_dice_examples():
    assert dice(Counter("xx"), Counter("x")) == pytest.approx(2 / 3)
    assert dice(Counter("ab"), Counter("ab")) == 1.0
    assert dice(Counter(), Counter()) == 0.0
    assert cosine_sim((1, 1, 2), (1, 1, 2)) == pytest.approx(1.0)


def test_edge_confidence_extremes():
    t = (1, (1,))
    same = {(0, ()): ("a",), t: ("b",)}
    assert edge_confidence(same, same, t, t) == 0.0
    u_sigs = {(0, ()): ("a",), t: ("z",)}
    v_sigs = {(0, ()): ("b",), t: ("z",)}
    assert edge_confidence(u_sigs, v_sigs, t, t) == -1.0


def test_assign_block_examples():
    assert assign_block(FlowProblem({0: 1}, {5: 1}, [(0, 5, 3)])) == {(0, 5)}
    diag = FlowProblem({0: 1, 1: 1}, {0: 1, 1: 1}, [(0, 0, -5), (0, 1, 0), (1, 0, 0), (1, 1, -5)])
    assert assign_block(diag) == {(0, 0), (1, 1)}
    assert MCMF_COST_SCALE == 1_000_000


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 4), st.integers(1, 4), st.data())
def test_assign_block_meets_capacities(nr, nc, data):
    sup = {r: data.draw(st.integers(1, nc)) for r in range(nr)}
    total = sum(sup.values())
    # spread demand so the block is feasible on the complete bipartite graph
    dem = {c: 0 for c in range(nc)}
    for r, s in sup.items():
        for k in range(s):
            dem[(r + k) % nc] += 1
    dem = {c: d for c, d in dem.items() if d}
    edges = [(r, c, data.draw(st.integers(-50, 50))) for r in sup for c in dem]
    chosen = assign_block(FlowProblem(sup, dem, edges))
    assert len(chosen) == total
    assert Counter(r for r, _ in chosen) == Counter(sup)
    assert Counter(c for _, c in chosen) == Counter(dem)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 4), st.integers(1, 4), st.data())
def test_min_cost_flow_matches_networkx(nr, nc, data):
    arcs = [(0, 2 + r, data.draw(st.integers(0, 3)), 0) for r in range(nr)]
    arcs += [(2 + nr + c, 1, data.draw(st.integers(0, 3)), 0) for c in range(nc)]
    arcs += [(2 + r, 2 + nr + c, 1, data.draw(st.integers(-20, 20))) for r in range(nr) for c in range(nc)]
    flows, cost = min_cost_max_flow(2 + nr + nc, arcs, 0, 1)
    g = nx.DiGraph()
    for a, b, c, w in arcs:
        g.add_edge(a, b, capacity=c, weight=w)
    ref = nx.max_flow_min_cost(g, 0, 1)
    assert cost == nx.cost_of_flow(g, ref)
    assert sum(f for (a, _, _, _), f in zip(arcs, flows) if a == 0) == sum(ref[0].values())


def test_reconstruct_small_examples():
    for g in (K22, STAR):
        assert exact_deck_equal(make_deck(reconstruct_bipartite(make_deck(g))), make_deck(g))


def test_reconstruct_degenerate_and_malformed():
    one = BipartiteIncidence(np.ones((1, 1), dtype=np.uint8))
    assert reconstruct_bipartite(make_deck(one)).shape == (1, 1)
    bad = make_deck(K22).cards
    forged = (Card(BipartiteIncidence(np.zeros((1, 2), dtype=np.uint8)), ROW_DELETED),) + bad[1:]
    with pytest.raises((InconsistentDeck, MalformedDeck)):
        reconstruct_bipartite(Deck(forged, u=2, v=2))


@pytest.mark.parametrize("seed", range(12))
def test_reconstruct_generated(seed):
    g = gen_bipartite(7, 7, 0.5, seed)
    deck = scramble_deck(make_deck(g), seed)
    assert exact_deck_equal(make_deck(reconstruct_bipartite(deck)), make_deck(g))


@settings(max_examples=40, deadline=None)
@given(incidences(lo=2))
def test_handshake_and_requirement_sums(b):
    deck = make_deck(b)
    try:
        u_t, v_t = compute_types(deck)
        u_r, v_r = compute_requirements(deck)
    except InconsistentDeck:
        pytest.fail("a genuine deck must be consistent")
    assert sum(t[0] for t in u_t) == sum(t[0] for t in v_t) == b.num_edges()
    assert [sum(r.values()) for r in u_r] == [t[0] for t in u_t]
    assert [sum(r.values()) for r in v_r] == [t[0] for t in v_t]
    # types are exactly (degree, sorted neighbour degrees)
    cd = b.col_degrees()
    assert u_t == [(int(b.a[i].sum()), tuple(sorted(cd[b.a[i] == 1].tolist()))) for i in range(b.u)]


@settings(max_examples=30, deadline=None)
@given(incidences(lo=2, hi=5), st.integers(0, 2**32))
def test_signatures_scramble_invariant(b, seed):
    a = two_deletion_signatures(make_deck(b))
    s = scramble_deck(make_deck(b), seed)
    b2 = two_deletion_signatures(s)
    canon = lambda maps: sorted(sorted((k, tuple(sorted(v))) for k, v in m.items()) for m in maps)
    assert canon(a[0]) == canon(b2[0]) and canon(a[1]) == canon(b2[1])
