"""Greedy local-exchange engine over an n x n assignment grid.

State ``A[i][j]`` is the index k of the element of basis i placed in column
j, or -1.  Moves are plain tuples ordered Insert < Repair < Terminate and
lexicographically within a kind; argmax ties go to the first move in that
order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

from ..gf2 import Gf2Vec, column_profile, find_circuit_bits, rank_bits
from ..rng import Rng
from .instances import Instance
from .policies import POLICIES, Midpoint, Noise, check_features

EMPTY = -1
INSERT, REPAIR, TERMINATE = "insert", "repair", "terminate"
TERMINATE_MOVE = (TERMINATE,)

# variable-rank oracle: probe small circuits only from this rank on
PROBE_FROM_RANK = 9
PROBE_SIZE = 4


class IllegalMove(ValueError):
    pass


@dataclass(frozen=True)
class FitnessWeights:
    alpha: float = 0.10
    beta: float = 0.06
    gamma: float = 0.12
    delta: float = 0.02
    epsilon: float = 0.03


@dataclass(frozen=True)
class ColumnStatus:
    size: int
    rank: int
    deficit: int
    dup: int
    circuit_size: int
    full: bool
    valid: bool


@dataclass
class Counters:
    steps: int = 0
    completions: int = 0
    breaks: int = 0
    repairs: int = 0
    final_valid: int = 0


@dataclass
class RolloutResult:
    success: bool
    counters: Counters
    trajectory: list = field(default_factory=list)
    terminated: bool = False
    final_state: Optional[list] = None


def empty_state(n: int) -> list[list[int]]:
    return [[EMPTY] * n for _ in range(n)]


def probe_size(n: int) -> Optional[int]:
    return PROBE_SIZE if n >= PROBE_FROM_RANK else None


def column_values(state, inst: Instance, j: int) -> list[int]:
    return [inst.bases[i][state[i][j]] for i in range(inst.n) if state[i][j] != EMPTY]


def column_set(state, inst: Instance, j: int) -> list[Gf2Vec]:
    """Vectors of column j in row order."""
    return [Gf2Vec(inst.n, x) for x in column_values(state, inst, j)]


def _status(vals, n: int) -> ColumnStatus:
    size, r, d, dup, circ = column_profile(tuple(sorted(vals)), probe_size(n))
    valid = d == 0
    return ColumnStatus(size, r, d, dup, circ, valid and size == n, valid)


def column_status(state, inst: Instance, j: int) -> ColumnStatus:
    return _status(column_values(state, inst, j), inst.n)


def check_state(state, n: int) -> None:
    if len(state) != n or any(len(r) != n for r in state):
        raise ValueError("state must be n x n")
    for row in state:
        used = [x for x in row if x != EMPTY]
        if len(set(used)) != len(used) or any(not (0 <= x < n) for x in used):
            raise ValueError("row entries must be distinct indices in [0, n) or -1")


def circuit_rows(state, inst: Instance, j: int) -> list[int]:
    """Rows holding the elements of the oracle's circuit in column j."""
    rows = [i for i in range(inst.n) if state[i][j] != EMPTY]
    vals = [inst.bases[i][state[i][j]] for i in rows]
    found = find_circuit_bits(vals, probe_size(inst.n))
    if found is None:
        return []
    return [rows[x] for x in found[0]]


def legal_moves(state, inst: Instance) -> list[tuple]:
    n = inst.n
    moves = []
    for i in range(n):
        used = set(state[i])
        free = [k for k in range(n) if k not in used]
        for j in range(n):
            if state[i][j] == EMPTY:
                moves.extend((INSERT, i, j, k) for k in free)
    reps = []
    for js in range(n):
        if column_status(state, inst, js).valid:
            continue
        for i in circuit_rows(state, inst, js):
            reps.extend((REPAIR, js, jt, i) for jt in range(n) if jt != js)
    moves.extend(sorted(reps))
    moves.sort()
    moves.append(TERMINATE_MOVE)
    return moves


def apply_move(state, move: tuple) -> list[list[int]]:
    s = [row[:] for row in state]
    if move[0] == INSERT:
        _, i, j, k = move
        if s[i][j] != EMPTY or k in s[i]:
            raise IllegalMove(f"illegal insert {move}")
        s[i][j] = k
    elif move[0] == REPAIR:
        _, js, jt, i = move
        if js == jt or s[i][js] == EMPTY:
            raise IllegalMove(f"illegal repair {move}")
        s[i][js], s[i][jt] = s[i][jt], s[i][js]
    elif move[0] != TERMINATE:
        raise IllegalMove(f"unknown move {move}")
    return s


class _Step:
    """Per-step column data shared by all candidate moves."""

    def __init__(self, state, inst: Instance):
        n = inst.n
        self.state = state
        self.inst = inst
        self.vals = [column_values(state, inst, j) for j in range(n)]
        self.status = [_status(v, n) for v in self.vals]
        self.full = sum(s.full for s in self.status)

    def touched_after(self, move) -> dict[int, list[int]]:
        inst, st = self.inst, self.state
        if move[0] == INSERT:
            _, i, j, k = move
            return {j: self.vals[j] + [inst.bases[i][k]]}
        _, js, jt, i = move
        out = {}
        for j, new in ((js, st[i][jt]), (jt, st[i][js])):
            col = []
            for r in range(inst.n):
                x = new if r == i else st[r][j]
                if x != EMPTY:
                    col.append(inst.bases[r][x])
            out[j] = col
        return out


def _features(step: _Step, move) -> tuple[dict, dict]:
    n = step.inst.n
    f = dict.fromkeys(
        (
            "is_terminate_move", "delta_num_valid", "target_col_becomes_full",
            "source_col_was_full_and_is_not_anymore", "is_repair_move", "is_insert_move",
            "target_rank_deficit_after", "source_rank_deficit_after", "circuit_size",
            "target_dup_count_after",
        ),
        0.0,
    )
    f["global_num_full_cols"] = float(step.full)
    f["rank"] = float(n)
    f["progress_ratio"] = step.full / n
    events = {"completions": 0, "breaks": 0}
    if move[0] == TERMINATE:
        f["is_terminate_move"] = 1.0
        return f, events
    after = {j: _status(v, n) for j, v in step.touched_after(move).items()}
    before = step.status
    target = move[2]
    f["delta_num_valid"] = float(sum(after[j].valid - before[j].valid for j in after))
    f["target_col_becomes_full"] = float(after[target].full and not before[target].full)
    broke = [j for j in after if before[j].full and not after[j].full]
    f["source_col_was_full_and_is_not_anymore"] = float(bool(broke))
    f["target_rank_deficit_after"] = float(after[target].deficit)
    f["target_dup_count_after"] = float(after[target].dup)
    if move[0] == INSERT:
        f["is_insert_move"] = 1.0
    else:
        f["is_repair_move"] = 1.0
        f["source_rank_deficit_after"] = float(after[move[1]].deficit)
    f["circuit_size"] = float(after[target].circuit_size)
    events["completions"] = sum(after[j].full and not before[j].full for j in after)
    events["breaks"] = len(broke)
    return f, events


def extract_features(state, inst: Instance, move) -> dict:
    """Post-move features of a legal move (full key set, floats)."""
    if move != TERMINATE_MOVE and move not in set(legal_moves(state, inst)):
        raise IllegalMove(f"{move} is not legal here")
    return _features(_Step(state, inst), move)[0]


def fitness(c: Counters, success: bool, w: FitnessWeights, step_limit: int, n: int) -> float:
    return (
        float(success)
        + w.beta * c.completions
        - w.gamma * c.breaks
        - w.delta * c.repairs
        + w.epsilon * c.final_valid / n
        - w.alpha * c.steps / step_limit
    )


def all_full(state, inst: Instance) -> bool:
    """Independent check that every column is a basis."""
    n = inst.n
    for j in range(n):
        vals = column_values(state, inst, j)
        if len(vals) != n or rank_bits(vals) != n:
            return False
    return True


ScoreFn = Callable[[dict, Noise], float]


def greedy_rollout(
    inst: Instance,
    policy: str | ScoreFn,
    step_limit: int,
    seed: int = 0,
    derandomize: bool = False,
    record: bool = True,
    validate: bool = False,
) -> RolloutResult:
    """Run the greedy engine from the empty grid."""
    if step_limit < 1:
        raise ValueError("step_limit must be >= 1")
    score_fn = POLICIES[policy] if isinstance(policy, str) else policy
    noise: Noise = Midpoint() if derandomize else Rng(seed).derive("policy_noise")
    n = inst.n
    state = empty_state(n)
    c = Counters()
    traj = []
    terminated = False
    for _ in range(step_limit):
        step = _Step(state, inst)
        if step.full == n:
            break
        best, best_move, best_events = None, None, None
        for move in legal_moves(state, inst):
            f, ev = _features(step, move)
            if validate:
                check_features(f)
            s = score_fn(f, noise)
            if best is None or s > best:
                best, best_move, best_events = s, move, ev
        c.steps += 1
        if record:
            traj.append(best_move)
        if best_move == TERMINATE_MOVE:
            terminated = True
            break
        state = apply_move(state, best_move)
        if validate:
            check_state(state, n)
        c.completions += best_events["completions"]
        c.breaks += best_events["breaks"]
        c.repairs += best_move[0] == REPAIR
    c.final_valid = sum(column_status(state, inst, j).valid for j in range(n))
    return RolloutResult(all_full(state, inst), c, traj, terminated, state)
