import json

from certlab.cli import SEED_ENV, main


def run(argv, capsys):
    code = main(argv)
    return code, capsys.readouterr()


def test_selftest_passes(capsys):
    code, out = run(["selftest", "--jobs", "1"], capsys)
    assert code == 0
    rep = json.loads(out.out)
    assert rep["passed"] and {c["name"] for c in rep["checks"]} >= {"latin-enumeration-4", "gf2-circuit-oracle"}


def test_rota_eval_contract(capsys):
    code, out = run(["rota-eval", "--bench", "A-fixed", "--policy", "rank5", "--seed", "7", "--instances", "4", "--jobs", "1"], capsys)
    assert code == 0
    rep = json.loads(out.out)
    for key in ("fitness_generic", "fitness_structured", "success_rate", "overall_success_rate", "per_instance"):
        assert key in rep
    assert len(rep["per_instance"]) == 4


def test_invalid_flag_exits_two(capsys):
    assert run(["rota-eval", "--bogus"], capsys)[0] == 2
    assert run(["rota-eval", "--bench", "Z"], capsys)[0] == 2
    assert run([], capsys)[0] == 2


def test_semantic_usage_errors(capsys, tmp_path):
    assert run(["latin-eval", "--orders", "7", "--per-order", "2"], capsys)[0] == 2
    assert run(["gen-planar", "--format", "csv"], capsys)[0] == 2
    assert run(["recon-planar"], capsys)[0] == 2
    assert run(["rota-eval", "--jobs", "0"], capsys)[0] == 2


def test_config_file(capsys, tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"per-order": 3, "orders": "8", "map": "e2"}))
    code, out = run(["latin-eval", "--config", str(cfg), "--seed", "1", "--jobs", "1"], capsys)
    assert code == 0
    rep = json.loads(out.out)
    assert rep["map"] == "e2" and rep["orders"][0]["count"] == 3
    # flags override the file
    code, out = run(["latin-eval", "--config", str(cfg), "--map", "e3", "--seed", "1", "--jobs", "1"], capsys)
    assert json.loads(out.out)["map"] == "e3"


def test_unknown_config_key_rejected(capsys, tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"colour": "blue"}))
    code, out = run(["rota-eval", "--config", str(cfg)], capsys)
    assert code == 2 and "colour" in out.err


def test_env_seed_is_default(capsys, monkeypatch):
    args = ["gen-planar", "--n", "10", "--jobs", "1"]
    monkeypatch.setenv(SEED_ENV, "5")
    a = run(args, capsys)[1].out
    b = run(args + ["--seed", "5"], capsys)[1].out
    c = run(args + ["--seed", "6"], capsys)[1].out
    assert a == b != c
    monkeypatch.setenv(SEED_ENV, "x")
    assert run(args, capsys)[0] == 2


def test_csv_output(capsys, tmp_path):
    out = tmp_path / "r.csv"
    code, _ = run(["latin-eval", "--map", "e2", "--orders", "8", "--per-order", "4", "--format", "csv",
                   "--out", str(out), "--jobs", "1"], capsys)
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0].startswith("map,n,count") and len(lines) == 2


def test_generate_then_reconstruct(capsys, tmp_path):
    code, out = run(["gen-bipartite", "--u", "6", "--v", "6", "--density", "0.6", "--seed", "2"], capsys)
    assert code == 0
    deck = tmp_path / "d.json"
    deck.write_text(out.out)
    code, out = run(["recon-bipartite", "--deck", str(deck)], capsys)
    assert code == 0 and json.loads(out.out)["success"]
    assert run(["recon-bipartite", "--deck", str(deck), "--u", "5"], capsys)[0] == 2


def test_planar_reconstruct_failure_is_exit_one(capsys, tmp_path):
    code, out = run(["gen-planar", "--n", "10", "--seed", "3"], capsys)
    d = json.loads(out.out)[0]["deck"]
    # drop one edge from one card: no graph has this deck
    adj = d["cards"][0]["adj"]
    v = next(x for x in range(len(adj)) if adj[x])
    w = adj[v].pop()
    adj[w].remove(v)
    deck = tmp_path / "bad.json"
    deck.write_text(json.dumps(d))
    code, out = run(["recon-planar", "--deck", str(deck)], capsys)
    assert code == 1 and not json.loads(out.out)["success"]
