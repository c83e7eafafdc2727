"""``certlab`` command line.

Every subcommand writes one JSON (or CSV) document to stdout or ``--out``.
Exit codes: 0 success, 1 evaluation failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path
from typing import Optional

from . import harness, latin
from .bipartite_recon import reconstruct_bipartite
from .gf2 import find_circuit_bits, rank_bits
from .graphcore import (
    MalformedDeck,
    deck_from_json,
    deck_to_json,
    exact_deck_equal,
    graph_to_json,
    incidence_to_json,
    make_deck,
)
from .planar_recon import NoReconstruction, generate_planar, reconstruct_planar
from .rng import Rng, derive_seed

SEED_ENV = "CERTLAB_SEED"
COMMON = {"config", "out", "format", "jobs", "command"}


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    subcommand: str
    options: dict
    jobs: int
    fmt: str = "json"
    out: Optional[str] = None
    seed: int = 0
    extra: dict = field(default_factory=dict)


def _default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"{SEED_ENV} must be an integer, got {raw!r}")


def _int_list(text) -> list[int]:
    if isinstance(text, (list, tuple)):
        return [int(x) for x in text]
    try:
        return [int(x) for x in str(text).split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"expected comma-separated integers, got {text!r}")


def build_parser() -> tuple[argparse.ArgumentParser, dict]:
    p = argparse.ArgumentParser(prog="certlab", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    subs = {}

    def add(name, help_):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--config", help="JSON file of option defaults; flags override it")
        sp.add_argument("--out", help="write the report here instead of stdout")
        sp.add_argument("--format", choices=("json", "csv"), default="json")
        sp.add_argument("--jobs", type=int, default=None, help="worker processes (default: all cores)")
        subs[name] = sp
        return sp

    sp = add("gen-bipartite", "generate bipartite instances and their decks")
    sp.add_argument("--u", type=int, default=6)
    sp.add_argument("--v", type=int, default=6)
    sp.add_argument("--density", type=float, default=0.5)
    sp.add_argument("--min-degree", type=int, default=3)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--count", type=int, default=1)

    sp = add("gen-planar", "generate planar instances and their decks")
    sp.add_argument("--n", type=int, default=12)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--count", type=int, default=1)

    sp = add("recon-bipartite", "reconstruct a bipartite graph from a deck file")
    sp.add_argument("--deck")
    sp.add_argument("--u", type=int)
    sp.add_argument("--v", type=int)

    sp = add("recon-planar", "reconstruct a planar graph from a deck file")
    sp.add_argument("--deck")
    sp.add_argument("--n", type=int)

    sp = add("latin-eval", "metric table for a Latin-square involution")
    sp.add_argument("--map", choices=("e1", "e2", "e3"), default="e3")
    sp.add_argument("--orders", default="8,10,12,14")
    sp.add_argument("--per-order", type=int, default=100)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--isotopy-stress", action="store_true")

    sp = add("rota-eval", "run a Rota basis benchmark")
    sp.add_argument("--bench", choices=tuple(harness.BENCHES), default="A-fixed")
    sp.add_argument("--policy", choices=("rank5", "rank7", "scale"), default="rank5")
    sp.add_argument("--derandomize", action="store_true")
    sp.add_argument("--seed", type=int)
    sp.add_argument("--instances", type=int, help="override the bench instance count")

    add("selftest", "exhaustive Latin and GF(2) oracle checks")
    return p, subs


def _apply_config(argv, parser, subs) -> argparse.Namespace:
    args = parser.parse_args(argv)
    if args.config:
        try:
            cfg = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config: {exc}")
        if not isinstance(cfg, dict):
            raise UsageError("config must be a JSON object")
        sp = subs[args.command]
        allowed = {a.dest for a in sp._actions} - {"help", "config"}
        cfg = {k.replace("-", "_"): v for k, v in cfg.items()}
        unknown = sorted(set(cfg) - allowed)
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(unknown)}")
        sp.set_defaults(**cfg)
        args = parser.parse_args(argv)
    return args


def _config(args) -> RunConfig:
    opts = {k: v for k, v in vars(args).items() if k not in COMMON}
    if "seed" in opts and opts["seed"] is None:
        opts["seed"] = _default_seed()
    jobs = args.jobs if args.jobs is not None else (os.cpu_count() or 1)
    if jobs < 1:
        raise UsageError("--jobs must be positive")
    if args.format == "csv" and args.command not in ("latin-eval", "rota-eval"):
        raise UsageError("--format csv applies to metric tables only")
    return RunConfig(args.command, opts, jobs, args.format, args.out, opts.get("seed", 0))


def _load_deck(path):
    if not path:
        raise UsageError("--deck is required")
    try:
        d = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read deck: {exc}")
    if isinstance(d, list):
        if len(d) != 1:
            raise UsageError("deck file holds several instances; pass one")
        d = d[0]
    if "cards" not in d and "deck" in d:
        d = d["deck"]
    return deck_from_json(d)


# -- subcommands ------------------------------------------------------------------

def cmd_gen_bipartite(c: RunConfig):
    o = c.options
    if min(o["u"], o["v"]) < 1 or not 0 < o["density"] <= 1 or o["count"] < 0:
        raise UsageError("need u, v >= 1, 0 < density <= 1, count >= 0")
    out = []
    for i in range(o["count"]):
        g = harness.gen_bipartite(o["u"], o["v"], o["density"], derive_seed(o["seed"], "cli-bipartite", i), o["min_degree"])
        out.append({"incidence": incidence_to_json(g), "deck": deck_to_json(make_deck(g))})
    return out, 0


def cmd_gen_planar(c: RunConfig):
    o = c.options
    if o["n"] < 5 or o["count"] < 0:
        raise UsageError("need n >= 5 and count >= 0")
    out = []
    for i in range(o["count"]):
        inst = generate_planar(o["n"], derive_seed(o["seed"], "cli-planar", i))
        out.append({
            "instance": {"graph": graph_to_json(inst.graph), "n": inst.n, "seed": inst.seed,
                         "deletions": [list(e) for e in inst.deletions], "regenerations": inst.regenerations},
            "deck": deck_to_json(make_deck(inst.graph)),
        })
    return out, 0


def _recon(deck, algo, encode):
    try:
        h = algo(deck)
    except (MalformedDeck, NoReconstruction, ValueError) as exc:
        return {"success": False, "error": f"{type(exc).__name__}: {exc}"}, 1
    ok = exact_deck_equal(make_deck(h), deck)
    return {"success": ok, "graph": encode(h)}, 0 if ok else 1


def cmd_recon_bipartite(c: RunConfig):
    o = c.options
    deck = _load_deck(o["deck"])
    if not deck.is_bipartite:
        raise UsageError("deck is not bipartite")
    if (o["u"] is not None and o["u"] != deck.u) or (o["v"] is not None and o["v"] != deck.v):
        raise UsageError(f"deck has u={deck.u}, v={deck.v}")
    return _recon(deck, reconstruct_bipartite, incidence_to_json)


def cmd_recon_planar(c: RunConfig):
    o = c.options
    deck = _load_deck(o["deck"])
    if deck.is_bipartite:
        raise UsageError("deck is bipartite")
    if o["n"] is not None and o["n"] != deck.n:
        raise UsageError(f"deck has n={deck.n}")
    return _recon(deck, reconstruct_planar, graph_to_json)


def cmd_latin_eval(c: RunConfig):
    o = c.options
    orders = _int_list(o["orders"])
    if not orders or any(n < 2 or n % 2 for n in orders) or o["per_order"] < 1:
        raise UsageError("orders must be even and >= 2, per-order >= 1")
    rep = harness.evaluate_involution(o["map"], orders, o["per_order"], o["seed"], o["isotopy_stress"], jobs=c.jobs)
    rep.map = o["map"]
    if c.fmt == "csv":
        return harness.involution_csv(rep), 0
    return harness.to_jsonable(rep), 0


def cmd_rota_eval(c: RunConfig):
    o = c.options
    if o["instances"] is not None and o["instances"] < 1:
        raise UsageError("--instances must be positive")
    rep = harness.evaluate_rota(o["policy"], o["bench"], o["seed"], o["derandomize"], c.jobs, o["instances"])
    if c.fmt == "csv":
        return harness.rota_csv(rep), 0
    d = harness.to_jsonable(rep)
    d["success_rate"] = d["overall_success_rate"]
    return d, 0


def _latin_oracle() -> list[dict]:
    checks = []
    expected = {1: 1, 2: 2, 3: 12, 4: 576}
    for n, count in expected.items():
        sq = latin.enumerate_latin(n)
        total = sum(latin.sign(L) for L in sq)
        ok = len(sq) == count and len(set(sq)) == count and all(latin.is_latin(L.grid) for L in sq)
        if n == 3:
            ok = ok and total == 0
        if n == 4:
            ok = ok and total != 0
        checks.append({"name": f"latin-enumeration-{n}", "count": len(sq), "sign_sum": total, "ok": ok})
    bad = 0
    for L in latin.enumerate_latin(4):
        for mode in latin.MODES:
            for i1, i2 in combinations(range(4), 2):
                mp = latin.matching_permutation(L, mode, i1, i2)
                for cyc in latin.cycles_of(mp.perm):
                    out = latin.apply_trade(L, latin.CycleTrade(mode, i1, i2, tuple(cyc)))
                    back = latin.apply_trade(out, latin.CycleTrade(mode, i1, i2, tuple(cyc)))
                    flips = latin.sign(out) == -latin.sign(L)
                    odd = len(cyc) % 2 == 1 and mode != latin.SYM
                    bad += back != L or flips != odd
    checks.append({"name": "latin-trade-laws-4", "violations": bad, "ok": bad == 0})
    return checks


def _brute_circuit(vals):
    for k in range(1, len(vals) + 1):
        for idx in combinations(range(len(vals)), k):
            acc = 0
            for i in idx:
                acc ^= vals[i]
            if acc == 0:
                return idx, k
    return None


def _gf2_oracle(trials: int = 2000) -> list[dict]:
    rng = Rng(0).derive("selftest-gf2")
    bad = 0
    for _ in range(trials):
        n = 1 + rng.randbelow(7)
        m = 1 + rng.randbelow(7)
        vals = [rng.randbelow(1 << n) for _ in range(m)]
        got = find_circuit_bits(vals)
        want = _brute_circuit(vals)
        if want is None:
            bad += got is not None or rank_bits(vals) != m
        else:
            bad += got is None or got[1] != want[1]
    return [{"name": "gf2-circuit-oracle", "trials": trials, "mismatches": bad, "ok": bad == 0}]


def cmd_selftest(c: RunConfig):
    checks = _latin_oracle() + _gf2_oracle()
    ok = all(x["ok"] for x in checks)
    return {"passed": ok, "checks": checks}, 0 if ok else 1


COMMANDS = {
    "gen-bipartite": cmd_gen_bipartite,
    "gen-planar": cmd_gen_planar,
    "recon-bipartite": cmd_recon_bipartite,
    "recon-planar": cmd_recon_planar,
    "latin-eval": cmd_latin_eval,
    "rota-eval": cmd_rota_eval,
    "selftest": cmd_selftest,
}


def _emit(payload, c: RunConfig) -> None:
    text = payload if isinstance(payload, str) else json.dumps(payload, sort_keys=True, indent=2) + "\n"
    if c.out:
        Path(c.out).write_text(text)
    else:
        sys.stdout.write(text)


def main(argv=None) -> int:
    parser, subs = build_parser()
    try:
        args = _apply_config(argv, parser, subs)
        cfg = _config(args)
        payload, code = COMMANDS[cfg.subcommand](cfg)
    except SystemExit as exc:  # argparse reports usage errors this way
        return 2 if exc.code else 0
    except UsageError as exc:
        print(f"certlab: error: {exc}", file=sys.stderr)
        return 2
    _emit(payload, cfg)
    return code


if __name__ == "__main__":
    sys.exit(main())
