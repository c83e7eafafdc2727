"""
Rebuilding graphs from their decks
==================================

A deck is the multiset of vertex-deleted subgraphs, each relabelled at
random.  Counting arguments already recover the edge count and the degree
sequence; the two reconstructors then rebuild a bipartite graph and a
planar graph exactly.
"""

from certlab.bipartite_recon import reconstruct_bipartite
from certlab.graphcore import degrees_from_deck, exact_deck_equal, isomorphic, kelly_edge_count, make_deck, scramble_deck
from certlab.harness import deck_score, evaluate_reconstruction, gen_bipartite
from certlab.planar_recon import generate_planar, reconstruct_planar

inst = generate_planar(12, seed=4)
g = inst.graph
deck = scramble_deck(make_deck(g), seed=1)
print("edges", g.num_edges(), "from deck:", kelly_edge_count(deck))
print("degrees", sorted(g.degrees().tolist()))
print("from deck", sorted(degrees_from_deck(deck)))

h = reconstruct_planar(deck)
print("planar: isomorphic", isomorphic(g, h), "deck equal", exact_deck_equal(make_deck(h), deck))

b = gen_bipartite(7, 7, 0.55, seed=9)
print(b.a)
bh = reconstruct_bipartite(scramble_deck(make_deck(b), seed=2))
print("bipartite:", deck_score(bh, make_deck(b)))

# Worst case over five relabellings of the same deck.
rep = evaluate_reconstruction(reconstruct_bipartite, b, scrambles=5, seed=0)
print("worst-of-5", rep.worst, "verified", rep.verified)
