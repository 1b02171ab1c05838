import json

import pytest

from riskroute import _kernels
from riskroute.cli import _alpha_grid, _query_set, main, oracle_check
from riskroute.dist import DiscreteDistribution as D
from riskroute.formats import save_graph, save_profile
from riskroute.network import TimeProfile
from riskroute.synthetic import grid_network

from conftest import constant_profile, line_graph, two_hour_profile


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.fixture
def line_dir(tmp_path):
    g = line_graph(2)
    save_graph(g, tmp_path)
    save_profile(constant_profile(g, {6.0: 0.5, 12.0: 0.5}), tmp_path / "p.bin")
    return tmp_path


@pytest.fixture
def diamond_dir(tmp_path, diamond):
    g, p = diamond
    save_graph(g, tmp_path)
    save_profile(p, tmp_path / "p.csv")
    return tmp_path


class TestRoute:
    def test_two_nodes(self, capsys, line_dir):
        code, out, _ = run(capsys, "route", "--graph", line_dir, "--profile", line_dir / "p.bin",
                           "--from", "0", "--to", "1", "--rho", "expectation")
        assert code == 0
        doc = json.loads(out)
        assert doc["value"] == 9.0 and doc["edges"] == ["0-1"] and doc["rho"] == "expectation"

    def test_diamond(self, capsys, diamond_dir):
        code, out, _ = run(capsys, "route", "--graph", diamond_dir, "--profile", diamond_dir / "p.csv",
                           "--from", "o", "--to", "d", "--rho", "var:0.95")
        assert code == 0 and json.loads(out)["value"] == 2

    def test_geojson(self, capsys, diamond_dir):
        code, out, _ = run(capsys, "route", "--graph", diamond_dir, "--profile", diamond_dir / "p.csv",
                           "--from", "o", "--to", "d", "--rho", "var:0.95", "--format", "geojson")
        doc = json.loads(out)
        assert code == 0 and doc["geometry"]["type"] == "LineString"
        assert len(doc["geometry"]["coordinates"]) == 4

    def test_unknown_node(self, capsys, line_dir):
        code, _, err = run(capsys, "route", "--graph", line_dir, "--profile", line_dir / "p.bin",
                           "--from", "0", "--to", "9")
        assert code == 2 and "unknown node" in err

    def test_unreachable(self, capsys, line_dir):
        code, out, _ = run(capsys, "route", "--graph", line_dir, "--profile", line_dir / "p.bin",
                           "--from", "1", "--to", "0")
        assert code == 1 and json.loads(out)["found"] is False

    def test_bad_rho(self, capsys, line_dir):
        code, _, _ = run(capsys, "route", "--graph", line_dir, "--profile", line_dir / "p.bin",
                         "--from", "0", "--to", "1", "--rho", "median")
        assert code == 2


class TestValidate:
    def test_clean(self, capsys, line_dir):
        code, out, _ = run(capsys, "validate", "--graph", line_dir, "--profile", line_dir / "p.bin", "--strict-fifo")
        doc = json.loads(out)
        assert code == 0 and doc["sfifo_hard"] == 0 and doc["sfifo_soft"] == 0

    def test_hard_violation(self, capsys, tmp_path):
        g = line_graph(2)
        p = two_hour_profile(D.degenerate(4000.0, 1.0), D.degenerate(100.0, 1.0), bin_width=1.0)
        p = TimeProfile({"0-1": [p.hourly("e", "weekdays")[h] for h in range(24)]}, 1.0, None)
        save_graph(g, tmp_path)
        save_profile(p, tmp_path / "p.bin")
        code, out, _ = run(capsys, "validate", "--graph", tmp_path, "--profile", tmp_path / "p.bin")
        assert code == 0 and json.loads(out)["sfifo_hard"] > 0
        code, _, err = run(capsys, "validate", "--graph", tmp_path, "--profile", tmp_path / "p.bin", "--strict-fifo")
        assert code == 1 and "hard" in err

    def test_dangling_edge(self, capsys, tmp_path):
        g = line_graph(2)
        save_graph(g, tmp_path)
        save_profile(TimeProfile({"zz": [D.degenerate(6.0, 6.0)] * 24}, 6.0), tmp_path / "p.bin")
        code, _, err = run(capsys, "validate", "--graph", tmp_path, "--profile", tmp_path / "p.bin")
        assert code == 2 and "unknown edge" in err

    def test_alpha_grid(self):
        assert _alpha_grid("0.1:0.1:0.5") == [0.1, 0.2, 0.3, 0.4, 0.5]
        assert _alpha_grid("0.5,0.9") == [0.5, 0.9]


class TestBench:
    def test_query_set_is_reproducible(self):
        g = grid_network(5, 6)
        assert _query_set(g, 20, 7) == _query_set(g, 20, 7)
        assert _query_set(g, 20, 7) != _query_set(g, 20, 8)

    def test_report(self, capsys, tmp_path):
        code, _, _ = run(capsys, "generate", "--out", tmp_path, "--rows", 6, "--cols", 6)
        assert code == 0
        code, out, _ = run(capsys, "bench", "--graph", tmp_path, "--profile", tmp_path / "profile.rrp",
                           "--queries", 8, "--seed", 3, "--per-query")
        doc = json.loads(out)
        assert code == 0 and doc["queries"] == 8
        assert doc["pruned_total"] == sum(doc["pruned_by_rule"].values())
        assert doc["latency_s"]["median"] <= doc["latency_s"]["max"]
        _, again, _ = run(capsys, "bench", "--graph", tmp_path, "--profile", tmp_path / "profile.rrp",
                          "--queries", 8, "--seed", 3, "--per-query")
        pairs = lambda d: [(q["from"], q["to"], q["value"]) for q in d["per_query"]]
        assert pairs(json.loads(again)) == pairs(doc)


class TestOracleCheck:
    def test_passes(self, capsys):
        code, out, _ = run(capsys, "oracle-check", "--instances", 15, "--max-nodes", 7)
        doc = json.loads(out)
        assert code == 0 and doc["status"] == "pass" and doc["checks"] == 90

    def test_passes_without_pruning(self, capsys):
        code, out, _ = run(capsys, "oracle-check", "--instances", 10, "--max-nodes", 6, "--rhos", "var:0.9",
                           "--no-fsd-prune", "--no-exp-prune", "--no-ub-prune", "--no-seed-ub")
        assert code == 0 and json.loads(out)["failures"] == 0

    def test_catches_flipped_dominance(self, capsys, monkeypatch):
        flip = {0: 0, 1: 2, 2: 1, 3: 3}
        real = _kernels.fsd
        monkeypatch.setattr(_kernels, "fsd", lambda *a: flip[real(*a)])
        code, out, _ = run(capsys, "oracle-check", "--instances", 40, "--rhos", "cvar:0.9,var:0.9", "--no-seed-ub")
        assert code == 1 and json.loads(out)["failures"] > 0

    def test_function(self):
        checks, failures = oracle_check(5, seed=2, max_nodes=6, rhos="expectation,cvar:0.9")
        assert checks == 10 and failures == []


class TestIngestGenerate:
    def test_round_trip(self, capsys, tmp_path):
        code, out, _ = run(capsys, "generate", "--out", tmp_path, "--rows", 4, "--cols", 4, "--trips", 300, "--csv")
        assert code == 0
        files = json.loads(out)
        code, out, _ = run(capsys, "ingest", "--trips", files["trips"], "--graph", tmp_path,
                           "--out", tmp_path / "est.bin", "--min-duration", 0, "--min-distance", 0)
        rep = json.loads(out)
        assert code == 0 and rep["records"] == 300 and rep["samples"] > 0
        code, _, _ = run(capsys, "validate", "--graph", tmp_path, "--profile", tmp_path / "est.bin")
        assert code == 0

    def test_missing_file(self, capsys, tmp_path):
        save_graph(line_graph(2), tmp_path)
        code, _, err = run(capsys, "ingest", "--trips", tmp_path / "nope.csv", "--graph", tmp_path,
                           "--out", tmp_path / "x.bin")
        assert code == 2 and err.startswith("error:")

    def test_usage_error(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["route"])
        assert exc.value.code == 2


def test_threads_env(capsys, monkeypatch):
    monkeypatch.setenv("RISKROUTE_THREADS", "3")
    code, out, _ = run(capsys, "oracle-check", "--instances", 6, "--max-nodes", 6)
    assert code == 0 and json.loads(out)["failures"] == 0
