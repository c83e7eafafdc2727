"""
The column-basis game
=====================

n bases of GF(2)^n sit in the rows of a grid.  Each row must be permuted so
that every column is also a basis.  A greedy engine fills the grid with
inserts and swaps guided by a scoring policy.
"""

from certlab.gf2 import Gf2Vec
from certlab.harness import evaluate_rota
from certlab.rota.engine import FitnessWeights, column_status, fitness, greedy_rollout
from certlab.rota.instances import TRAP, gen_instance, gen_pool

pool = gen_pool(5, seed=0, randomized=False)
print("pool:", [Gf2Vec(5, x).to_hex() for x in pool])

inst = gen_instance(pool, 5, TRAP, seed=3)
for row in inst.bases:
    print([format(x, "05b") for x in row])
print("forced elements (dependent):", [format(x, "05b") for x in inst.forced])

r = greedy_rollout(inst, "rank5", step_limit=200, seed=1)
print("success", r.success, r.counters)
for row in r.final_state:
    print(row)
print([column_status(r.final_state, inst, j).rank for j in range(5)])
print("fitness", round(fitness(r.counters, r.success, FitnessWeights(), 200, 5), 4))

print("repairs used:", [m for m in r.trajectory if m[0] == "repair"][:6])

rep = evaluate_rota("rank5", "A-fixed", seed=0, instances=20)
print("A-fixed, 20 instances:", rep.overall_success_rate, round(rep.fitness_generic, 3), round(rep.fitness_structured, 3))
