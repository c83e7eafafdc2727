"""Evaluation protocols: deck scores under adversarial relabelling,
involution metric tables and the Rota benchmarks."""

from __future__ import annotations

import csv
import io
import json
import math
from collections import Counter, deque
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from . import latin
from .bipartite_recon import reconstruct_bipartite
from .graphcore import (
    BipartiteIncidence,
    Deck,
    Graph,
    ROW_DELETED,
    canonical_form,
    deck_forms,
    exact_deck_equal,
    degrees_from_deck,
    graph_from_json,
    graph_to_json,
    incidence_from_json,
    incidence_to_json,
    is_biconnected,
    kelly_edge_count,
    make_deck,
    scramble_deck,
)
from .involutions import MAPS, support_size
from .planar_recon import generate_planar, reconstruct_planar
from .rng import Rng, derive_seed
from .rota.engine import FitnessWeights, fitness, greedy_rollout
from .rota.instances import GENERIC, TRAP, gen_instance, gen_pool, pool_size


def _pmap(fn, items: Sequence, jobs: int = 1) -> list:
    """Ordered map, optionally over worker processes."""
    if jobs <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(fn, items, chunksize=max(1, len(items) // (4 * jobs))))


# -- deck scores --------------------------------------------------------------------------

@dataclass(frozen=True)
class ScoreWeights:
    w_deck: float = 0.8
    w_deg: float = 0.1
    w_E: float = 0.1

    def __post_init__(self):
        ws = (self.w_deck, self.w_deg, self.w_E)
        if min(ws) < 0 or not math.isclose(sum(ws), 1.0):
            raise ValueError("weights must be nonnegative and sum to 1")
        if self.w_deck <= self.w_deg + self.w_E:
            raise ValueError("w_deck must dominate")


@dataclass(frozen=True)
class DeckScoreReport:
    s_deck: float
    s_deg: float
    s_E: float
    S: float


def _clip(x: float) -> float:
    return min(1.0, max(0.0, x))


def _degree_buckets(g) -> Counter:
    if isinstance(g, BipartiteIncidence):
        return Counter([("u", int(d)) for d in g.row_degrees()] + [("v", int(d)) for d in g.col_degrees()])
    return Counter(("g", int(d)) for d in g.degrees())


def _deck_buckets(deck: Deck) -> Counter:
    degs = degrees_from_deck(deck)
    if deck.is_bipartite:
        sides = ["u" if c.kind == ROW_DELETED else "v" for c in deck.cards]
        return Counter(zip(sides, degs))
    return Counter(("g", d) for d in degs)


def deck_score(h, target: Deck, weights: ScoreWeights = ScoreWeights(), target_forms: Counter | None = None) -> DeckScoreReport:
    """Multiset card overlap plus degree and edge-count agreement, each in [0, 1]."""
    mine = make_deck(h)
    if (mine.n, mine.u, mine.v) != (target.n, target.u, target.v):
        raise ValueError("reconstruction and deck sizes differ")
    if target_forms is None:
        target_forms = deck_forms(target)
    overlap = sum((deck_forms(mine) & target_forms).values())
    s_deck = overlap / len(target.cards)
    m = kelly_edge_count(target)
    m_h = h.num_edges()
    diff = _degree_buckets(h)
    diff.subtract(_deck_buckets(target))
    s_deg = _clip(1.0 - sum(abs(x) for x in diff.values()) / max(4 * m, 1))
    s_e = _clip(1.0 - abs(m_h - m) / max(m, 1))
    s = weights.w_deck * s_deck + weights.w_deg * s_deg + weights.w_E * s_e
    return DeckScoreReport(s_deck, s_deg, s_e, s)


ZERO = DeckScoreReport(0.0, 0.0, 0.0, 0.0)


@dataclass
class WorstOfReport:
    worst: float
    scrambles: list
    success: bool
    errors: list = field(default_factory=list)
    verified: bool = False


class HardNegativeBuffer:
    """Bounded FIFO of failed instance descriptors with JSON persistence."""

    def __init__(self, capacity: int = 256, path: str | Path | None = None):
        self.capacity = capacity
        self.path = Path(path) if path else None
        self.items: deque = deque(maxlen=capacity)
        if self.path and self.path.exists():
            self.items.extend(json.loads(self.path.read_text()))

    def add(self, descriptor: dict) -> None:
        self.items.append(descriptor)

    def __len__(self):
        return len(self.items)

    def __iter__(self):
        return iter(list(self.items))

    def save(self) -> None:
        if self.path:
            self.path.write_text(json.dumps(list(self.items), sort_keys=True))


def describe(g) -> dict:
    if isinstance(g, BipartiteIncidence):
        return {"family": "bipartite", "graph": incidence_to_json(g)}
    return {"family": "graph", "graph": graph_to_json(g)}


def undescribe(d: dict):
    if d["family"] == "bipartite":
        return incidence_from_json(d["graph"])
    return graph_from_json(d["graph"])


def evaluate_reconstruction(
    algorithm: Callable[[Deck], object],
    instance,
    scrambles: int = 5,
    seed: int = 0,
    weights: ScoreWeights = ScoreWeights(),
    buffer: HardNegativeBuffer | None = None,
) -> WorstOfReport:
    """Minimum combined score over independently scrambled decks.

    Exceptions from the algorithm count as score-0 scrambles.
    """
    if scrambles < 1:
        raise ValueError("need at least one scramble")
    deck = make_deck(instance)
    forms = deck_forms(deck)
    reports, errors = [], []
    verified = True
    for s in range(scrambles):
        d = scramble_deck(deck, derive_seed(seed, "scramble", s))
        try:
            h = algorithm(d)
            reports.append(deck_score(h, deck, weights, forms))
            verified = verified and exact_deck_equal(make_deck(h), deck)
        except Exception as exc:  # a crash is a failed scramble, not a harness error
            reports.append(ZERO)
            verified = False
            errors.append(f"{type(exc).__name__}: {exc}")
    worst = min(r.S for r in reports)
    success = all(r.s_deck == 1.0 for r in reports)
    if not success and buffer is not None:
        buffer.add(describe(instance))
    return WorstOfReport(worst, reports, success, errors, verified)


# -- reconstruction benchmarks ------------------------------------------------------------

def gen_bipartite(u: int, v: int, density: float, seed: int, min_degree: int = 3, max_tries: int = 100_000) -> BipartiteIncidence:
    """Random incidence matrix that is 2-connected, not regular and has
    minimum degree >= ``min_degree`` on both sides (rejection sampling)."""
    rng = Rng(seed).derive("gen_bipartite", u, v)
    for _ in range(max_tries):
        a = np.array([[rng.random() < density for _ in range(v)] for _ in range(u)], dtype=np.uint8)
        b = BipartiteIncidence(a)
        degs = np.concatenate([b.row_degrees(), b.col_degrees()])
        if degs.min() < min_degree or degs.min() == degs.max():
            continue
        if is_biconnected(b.to_graph()):
            return b
    raise RuntimeError("no admissible bipartite graph found")


@dataclass
class ReconBenchReport:
    family: str
    instances: int
    successes: int
    success_rate: float
    mean_worst_score: float
    per_instance: list


def _bip_case(args):
    idx, seed, sizes, densities, scrambles = args
    rng = Rng(seed).derive("bipartite_bench", idx)
    u = sizes[idx % len(sizes)]
    dens = rng.uniform(*densities)
    g = gen_bipartite(u, u, dens, derive_seed(seed, "bipartite", idx))
    rep = evaluate_reconstruction(reconstruct_bipartite, g, scrambles, derive_seed(seed, "scrambles", idx))
    return {"u": u, "v": u, "density": round(dens, 6), "worst": rep.worst, "success": rep.success, "verified": rep.verified,
            "errors": rep.errors, "instance": describe(g)}


def _planar_case(args):
    idx, seed, sizes, scrambles = args
    n = sizes[idx % len(sizes)]
    inst = generate_planar(n, derive_seed(seed, "planar", idx))
    rep = evaluate_reconstruction(reconstruct_planar, inst.graph, scrambles, derive_seed(seed, "scrambles", idx))
    return {"n": n, "m": inst.graph.num_edges(), "worst": rep.worst, "success": rep.success, "verified": rep.verified,
            "errors": rep.errors, "instance": describe(inst.graph)}


def _replay_case(args):
    desc, seed, scrambles = args
    g = undescribe(desc)
    algo = reconstruct_bipartite if isinstance(g, BipartiteIncidence) else reconstruct_planar
    rep = evaluate_reconstruction(algo, g, scrambles, seed)
    return {"replayed": True, "worst": rep.worst, "success": rep.success, "verified": rep.verified, "errors": rep.errors, "instance": desc}


def _summarize(family: str, rows: list, buffer: HardNegativeBuffer | None) -> ReconBenchReport:
    if buffer is not None:
        for r in rows:
            if not r["success"] and not r.get("replayed"):
                buffer.add(r["instance"])
        buffer.save()
    succ = sum(r["success"] for r in rows)
    for r in rows:
        r.pop("instance", None)
    mean = float(np.mean([r["worst"] for r in rows])) if rows else 0.0
    return ReconBenchReport(family, len(rows), succ, succ / len(rows) if rows else 0.0, mean, rows)


def _replays(buffer, family, seed, scrambles):
    if buffer is None:
        return []
    fam = "bipartite" if family == "bipartite" else "graph"
    return [(d, derive_seed(seed, "replay", k), scrambles) for k, d in enumerate(buffer) if d["family"] == fam]


def run_bipartite_benchmark(count=100, sizes=(6, 7, 8), densities=(0.4, 0.7), scrambles=5, seed=0,
                            jobs=1, buffer: HardNegativeBuffer | None = None) -> ReconBenchReport:
    rows = _pmap(_replay_case, _replays(buffer, "bipartite", seed, scrambles), jobs)
    rows += _pmap(_bip_case, [(i, seed, tuple(sizes), tuple(densities), scrambles) for i in range(count)], jobs)
    return _summarize("bipartite", rows, buffer)


def run_planar_benchmark(count=200, sizes=(12, 14, 16), scrambles=5, seed=0, jobs=1,
                         buffer: HardNegativeBuffer | None = None) -> ReconBenchReport:
    rows = _pmap(_replay_case, _replays(buffer, "planar", seed, scrambles), jobs)
    rows += _pmap(_planar_case, [(i, seed, tuple(sizes), scrambles) for i in range(count)], jobs)
    return _summarize("planar", rows, buffer)


# -- involutions --------------------------------------------------------------------------

@dataclass
class OrderMetrics:
    n: int
    count: int
    validity: float
    involution: float
    non_identity: float
    flip: float
    success: float
    residual_size: int
    residual_bias: float
    residual_bias_sq: float
    quality: Optional[float]


@dataclass
class InvolutionReport:
    map: str
    isotopy_stress: bool
    orders: list


def sample_squares(n: int, count: int, seed: int, isotopy_stress: bool) -> list:
    out = []
    for i in range(count):
        L = latin.random_latin(n, derive_seed(seed, "latin", n, i))
        if isotopy_stress:
            L = latin.apply_isotopy(L, latin.random_isotopy(n, Rng(derive_seed(seed, "isotopy", n, i))))
        out.append(L)
    return out


def _inv_case(args):
    name_or_fn, L = args
    fn = MAPS[name_or_fn] if isinstance(name_or_fn, str) else name_or_fn
    n = L.n
    s0 = latin.sign(L)
    try:
        out = fn(L)
        out = out.output if hasattr(out, "output") else out
        valid = latin.is_latin(out.grid)
    except Exception:
        return dict(valid=False, inv=False, nonid=False, flip=False, sign=s0, support=None)
    try:
        back = fn(out)
        back = back.output if hasattr(back, "output") else back
        inv = back == L
    except Exception:
        inv = False
    flip = valid and latin.sign(out) == -s0
    return dict(valid=valid, inv=inv, nonid=out != L, flip=flip, sign=s0, support=support_size(L, out))


def evaluate_involution(map_fn, orders: Iterable[int] = (8, 10, 12, 14), per_order: int = 100, seed: int = 0,
                        isotopy_stress: bool = False, locality: bool = True, jobs: int = 1) -> InvolutionReport:
    """Validity, involution, non-identity and flip rates per order, plus the
    residual set (inputs not cleanly flipped) and its sign bias."""
    name = map_fn if isinstance(map_fn, str) else getattr(map_fn, "__name__", "custom")
    rows = []
    for n in orders:
        if n % 2:
            raise ValueError("orders must be even")
        squares = sample_squares(n, per_order, seed, isotopy_stress)
        res = _pmap(_inv_case, [(map_fn, L) for L in squares], jobs)
        k = len(res)
        good = [r for r in res if r["valid"] and r["inv"] and r["flip"]]
        residual = [r["sign"] for r in res if not (r["valid"] and r["inv"] and r["flip"])]
        b = float(np.mean(residual)) if residual else 0.0
        q = None
        if locality and good:
            q = float(np.mean([math.exp(-r["support"] / (2 * n)) for r in good]))
        rows.append(OrderMetrics(
            n, k,
            sum(r["valid"] for r in res) / k,
            sum(r["inv"] for r in res) / k,
            sum(r["nonid"] for r in res) / k,
            sum(r["flip"] for r in res) / k,
            len(good) / k,
            len(residual), b, b * b, q,
        ))
    return InvolutionReport(name, isotopy_stress, rows)


# -- Rota benchmarks --------------------------------------------------------------------------

@dataclass(frozen=True)
class BenchConfig:
    ranks: tuple
    instances: int
    steps_per_rank: Optional[int]
    fixed_steps: Optional[int]
    rollouts: int
    weights: FitnessWeights
    randomized: bool
    variable_rank: bool

    def step_limit(self, n: int) -> int:
        return self.fixed_steps if self.fixed_steps else self.steps_per_rank * n


BENCHES = {
    "A-fixed": BenchConfig((5,), 200, None, 200, 3, FitnessWeights(), False, False),
    "A-random": BenchConfig((5,), 200, None, 200, 3, FitnessWeights(), True, False),
    "B": BenchConfig((7,), 100, None, 350, 3, FitnessWeights(), True, False),
    "C": BenchConfig((5, 7, 9, 11, 13), 60, 20, None, 1, FitnessWeights(gamma=0.20), True, True),
}


@dataclass
class RotaBenchReport:
    bench: str
    policy: str
    derandomized: bool
    fitness_generic: float
    fitness_structured: float
    overall_success_rate: float
    average_score: float
    per_instance: list


def rota_instance(bench: str, idx: int, seed: int):
    cfg = BENCHES[bench]
    n = cfg.ranks[idx % len(cfg.ranks)]
    kind = GENERIC if (idx // len(cfg.ranks)) % 2 == 0 else TRAP
    pool = gen_pool(n, derive_seed(seed, bench, "pool", idx), cfg.randomized, pool_size(n, cfg.variable_rank))
    return gen_instance(pool, n, kind, derive_seed(seed, bench, "instance", idx))


def _rota_case(args):
    bench, policy, idx, seed, derandomize = args
    cfg = BENCHES[bench]
    inst = rota_instance(bench, idx, seed)
    limit = cfg.step_limit(inst.n)
    fits, wins = [], 0
    for r in range(cfg.rollouts):
        res = greedy_rollout(inst, policy, limit, derive_seed(seed, bench, "rollout", idx, r), derandomize, record=False)
        wins += res.success
        fits.append(fitness(res.counters, res.success, cfg.weights, limit, inst.n))
    return {"index": idx, "rank": inst.n, "kind": inst.kind, "wins": wins,
            "success": 2 * wins > cfg.rollouts, "fitness": fits}


def evaluate_rota(policy: str, bench: str, seed: int = 0, derandomize: bool = False, jobs: int = 1,
                  instances: Optional[int] = None) -> RotaBenchReport:
    """Generic and trap instances alternate; an instance counts as solved when
    a strict majority of its rollouts succeed."""
    if bench not in BENCHES:
        raise ValueError(f"unknown bench {bench!r}")
    count = BENCHES[bench].instances if instances is None else instances
    rows = _pmap(_rota_case, [(bench, policy, i, seed, derandomize) for i in range(count)], jobs)
    gen = [f for r in rows if r["kind"] == GENERIC for f in r["fitness"]]
    trap = [f for r in rows if r["kind"] == TRAP for f in r["fitness"]]
    allf = gen + trap
    mean = lambda xs: float(np.mean(xs)) if xs else 0.0
    return RotaBenchReport(
        bench, policy, derandomize, mean(gen), mean(trap),
        sum(r["success"] for r in rows) / len(rows) if rows else 0.0, mean(allf), rows,
    )


# -- export -----------------------------------------------------------------------------

def to_jsonable(report) -> dict:
    return asdict(report)


def involution_csv(rep: InvolutionReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    cols = ["n", "count", "validity", "involution", "non_identity", "flip", "success",
            "residual_size", "residual_bias", "residual_bias_sq", "quality"]
    w.writerow(["map"] + cols)
    for row in rep.orders:
        d = asdict(row)
        w.writerow([rep.map] + [d[c] for c in cols])
    return buf.getvalue()


def rota_csv(rep: RotaBenchReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["bench", "policy", "derandomized", "fitness_generic", "fitness_structured",
                "overall_success_rate", "average_score"])
    w.writerow([rep.bench, rep.policy, rep.derandomized, rep.fitness_generic, rep.fitness_structured,
                rep.overall_success_rate, rep.average_score])
    return buf.getvalue()


def recon_csv(rep: ReconBenchReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["family", "instances", "successes", "success_rate", "mean_worst_score"])
    w.writerow([rep.family, rep.instances, rep.successes, rep.success_rate, rep.mean_worst_score])
    return buf.getvalue()
