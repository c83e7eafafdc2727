"""
Latin square signs and sign-flipping involutions
================================================

A Latin square's sign is the product of the signs of its row and column
permutations.  We count signs for tiny orders, apply a single cycle trade,
and then look at how often the stabilized map flips the sign.
"""

from collections import Counter

import numpy as np

from certlab import latin
from certlab.harness import evaluate_involution
from certlab.involutions import experiment3_map

# Order 3: the squares split evenly, so the signed count vanishes.
for n in (3, 4):
    squares = latin.enumerate_latin(n)
    print(n, len(squares), Counter(latin.sign(L) for L in squares))

# A 3-cycle in the matching between two rows flips the sign.
L = latin.random_latin(6, seed=11)
print(L.grid)
for i1 in range(6):
    for i2 in range(i1 + 1, 6):
        mp = latin.matching_permutation(L, latin.ROW, i1, i2)
        odd = [c for c in latin.cycles_of(mp.perm) if len(c) % 2]
        if odd:
            break
    if odd:
        break
trade = latin.CycleTrade(latin.ROW, i1, i2, tuple(odd[0]))
out = latin.apply_trade(L, trade)
print("rows", i1, i2, "cycle", odd[0])
print("sign", latin.sign(L), "->", latin.sign(out))
print("cells changed:", int(np.sum(L.grid != out.grid)))

# The stabilized map on a handful of squares.
res = experiment3_map(L)
print("flipped:", latin.sign(res.output) == -latin.sign(L), "move:", res.move)

rep = evaluate_involution("e3", orders=(8, 10), per_order=20, seed=3, isotopy_stress=True)
for row in rep.orders:
    print(f"n={row.n}  valid={row.validity:.2f}  involution={row.involution:.2f}  flip={row.flip:.2f}  b^2={row.residual_bias_sq:.3f}")
