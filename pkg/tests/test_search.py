import math

import pytest

from riskroute import _kernels
from riskroute import heuristic
from riskroute.dist import DiscreteDistribution as D
from riskroute.exceptions import InvalidParameterError
from riskroute.network import ClockTime, TimeProfile
from riskroute.oracle import enumerate_optimal, path_cost
from riskroute.risk import RiskSpec
from riskroute.search import PRUNE_RULES, Label, SearchOptions, reconstruct, route, seed_upper_bound
from riskroute.synthetic import random_instance

from conftest import constant_profile, greedy_single_label, line_graph

RHOS = ["expectation", "var:0.5", "var:0.95", "cvar:0.5", "cvar:0.9", "eu:exp:0.002"]


def run(inst, rho, options=None, mode="network"):
    h = heuristic.build(inst.graph, inst.profile, inst.destination, mode)
    return route(inst.graph, inst.profile, h, rho, inst.origin, inst.destination, inst.depart, options)


def oracle(inst, rho):
    return enumerate_optimal(inst.graph, inst.profile, rho, inst.origin, inst.destination, inst.depart)[0]


class TestBasics:
    def test_origin_is_destination(self, wed8):
        g = line_graph(3)
        r = route(g, constant_profile(g, {6.0: 1.0}), None, "cvar:0.9", "1", "1", wed8)
        assert r.found and r.value == 0.0 and r.nodes == ["1"] and r.edges == []

    def test_two_nodes(self, wed8):
        g = line_graph(2)
        p = constant_profile(g, {6.0: 0.25, 12.0: 0.75})
        r = route(g, p, None, "expectation", "0", "1", wed8)
        assert r.cost == D.from_mapping({6.0: 0.25, 12.0: 0.75}, 6.0)
        assert r.value == pytest.approx(10.5)
        assert r.edges == ["0-1"]

    def test_diamond(self, diamond, wed8):
        g, p = diamond
        r = route(g, p, None, "var:0.95", "o", "d", wed8)
        assert r.value == 2
        assert r.nodes == ["o", "b", "n", "d"]

    def test_greedy_single_label_fails_on_diamond(self, diamond, wed8):
        g, p = diamond
        assert greedy_single_label(g, p, RiskSpec.parse("var:0.95"), "o", "d", wed8) == 3

    def test_greedy_fine_for_expectation(self, diamond, wed8):
        g, p = diamond
        spec = RiskSpec.parse("expectation")
        assert greedy_single_label(g, p, spec, "o", "d", wed8) == pytest.approx(
            route(g, p, None, spec, "o", "d", wed8).value)

    def test_unreachable(self, wed8):
        g = line_graph(3)
        r = route(g, constant_profile(g, {6.0: 1.0}), None, "var:0.9", "2", "0", wed8)
        assert not r.found and r.value == math.inf and r.nodes == []

    def test_unknown_node(self, wed8):
        g = line_graph(2)
        with pytest.raises(InvalidParameterError):
            route(g, constant_profile(g, {6.0: 1.0}), None, "var:0.9", "0", "x", wed8)

    def test_wrong_heuristic_table(self, wed8):
        g = line_graph(3)
        p = constant_profile(g, {6.0: 1.0})
        with pytest.raises(InvalidParameterError):
            route(g, p, heuristic.build(g, p, "1"), "var:0.9", "0", "2", wed8)

    def test_reconstruct(self):
        root = Label("o", D.degenerate(0.0, 1.0), 0.0)
        assert reconstruct(root) == ["o"]
        child = Label("a", D.degenerate(1.0, 1.0), 1.0, root)
        assert reconstruct(Label("b", D.degenerate(2.0, 1.0), 2.0, child)) == ["o", "a", "b"]

    def test_arrivals_are_path_costs(self):
        inst = random_instance(12)
        r = run(inst, "cvar:0.9")
        assert r.found
        assert r.cost == path_cost(inst.graph, inst.profile, r.edges, inst.depart)
        assert len(r.arrivals) == len(r.nodes) == len(r.edges) + 1

    def test_time_of_day_matters(self):
        g = line_graph(2)
        slow, fast = D.degenerate(120.0, 6.0), D.degenerate(12.0, 6.0)
        p = TimeProfile({"0-1": {"weekdays": [fast] * 8 + [slow] * 16, "weekends": [fast] * 24}}, 6.0)
        assert route(g, p, None, "expectation", "0", "1", ClockTime.parse("mon 07:00")).value == 12.0
        assert route(g, p, None, "expectation", "0", "1", ClockTime.parse("mon 09:00")).value == 120.0
        assert route(g, p, None, "expectation", "0", "1", ClockTime.parse("sat 09:00")).value == 12.0

    def test_horizon_caps_cost(self, wed8):
        g = line_graph(4)
        p = constant_profile(g, {300.0: 1.0})
        r = route(g, p, None, "expectation", "0", "3", wed8, SearchOptions(horizon=600.0, seed_ub=False))
        assert r.value == 600.0 and r.stats.capped_mass > 0


class TestAgainstOracle:
    @pytest.mark.parametrize("rho", RHOS)
    def test_random_instances(self, rho):
        for seed in range(40):
            inst = random_instance(seed)
            r = run(inst, rho, SearchOptions(check_invariants=True))
            want = oracle(inst, rho)
            assert r.value == want or (r.value == want == math.inf), (seed, r.value, want)

    @pytest.mark.parametrize("off", ["seed_ub", "ub_prune", "exp_prune", "fsd_prune"])
    def test_each_rule_optional(self, off):
        for seed in range(40):
            inst = random_instance(seed)
            full = run(inst, "cvar:0.9")
            partial = run(inst, "cvar:0.9", SearchOptions(**{off: False}))
            assert partial.value == full.value

    def test_all_rules_off(self):
        opts = SearchOptions(seed_ub=False, ub_prune=False, exp_prune=False, fsd_prune=False)
        for seed in range(25):
            inst = random_instance(seed, max_nodes=7)
            assert run(inst, "var:0.9", opts).value == run(inst, "var:0.9").value

    @pytest.mark.parametrize("mode", heuristic.MODES)
    def test_heuristic_modes(self, mode):
        for seed in range(25):
            inst = random_instance(seed)
            assert run(inst, "cvar:0.5", mode=mode).value == run(inst, "cvar:0.5").value

    def test_flipped_dominance_is_caught(self, monkeypatch):
        flip = {0: 0, 1: 2, 2: 1, 3: 3}
        real = _kernels.fsd
        monkeypatch.setattr(_kernels, "fsd", lambda *a: flip[real(*a)])
        bad = 0
        for seed in range(60):
            inst = random_instance(seed)
            if run(inst, "cvar:0.9", SearchOptions(seed_ub=False)).value != oracle(inst, "cvar:0.9"):
                bad += 1
        assert bad > 0


class TestInvariants:
    def test_first_pop_is_best(self):
        for seed in range(40):
            inst = random_instance(seed)
            r = run(inst, "var:0.9")
            if r.found and not r.stats.from_seed:
                assert r.value == r.stats.dest_f_min

    def test_ub_history_nonincreasing(self):
        for seed in range(40):
            inst = random_instance(seed)
            hist = run(inst, "cvar:0.9").stats.ub_history
            assert all(b <= a for a, b in zip(hist, hist[1:]))

    def test_seed_bound_not_below_optimum(self):
        for seed in range(40):
            inst = random_instance(seed)
            h = heuristic.build(inst.graph, inst.profile, inst.destination)
            ub = seed_upper_bound(inst.graph, inst.profile, h, "cvar:0.9", inst.origin, inst.destination, inst.depart)
            assert ub >= oracle(inst, "cvar:0.9")

    def test_seed_bound_unreachable(self, wed8):
        g = line_graph(3)
        p = constant_profile(g, {6.0: 1.0})
        h = heuristic.build(g, p, "0")
        assert seed_upper_bound(g, p, h, "expectation", "2", "0", wed8) == math.inf

    def test_fsd_pruning_reduces_work(self):
        fewer = 0
        for seed in range(40):
            inst = random_instance(seed)
            on = run(inst, "cvar:0.9", SearchOptions(seed_ub=False, ub_prune=False, exp_prune=False))
            off = run(inst, "cvar:0.9", SearchOptions(seed_ub=False, ub_prune=False, exp_prune=False, fsd_prune=False))
            assert on.stats.expanded <= off.stats.expanded
            fewer += on.stats.expanded < off.stats.expanded
        assert fewer > 0

    def test_stats_shape(self):
        r = run(random_instance(2), "cvar:0.9")
        d = r.to_dict()
        assert set(d["stats"]["pruned"]) == set(PRUNE_RULES)
        assert d["stats"]["total_pruned"] == sum(d["stats"]["pruned"].values())

    def test_equal_labels_keep_one(self, wed8):
        # two parallel identical routes: the second arrival at d is a tie
        from riskroute.network import Edge, Graph, Node

        nodes = [Node(k, 0.0, i * 1e-3) for i, k in enumerate("oabd")]
        edges = [Edge("oa", "o", "a", 10, 10), Edge("ob", "o", "b", 10, 10),
                 Edge("ad", "a", "d", 10, 10), Edge("bd", "b", "d", 10, 10)]
        g = Graph.from_lists(nodes, edges)
        p = constant_profile(g, {1.0: 0.5, 3.0: 0.5}, bin_width=1.0)
        r = route(g, p, None, "var:0.9", "o", "d", wed8, SearchOptions(seed_ub=False, ub_prune=False))
        assert r.value == 6.0
        assert r.stats.pruned["fsd"] >= 1


def test_invariant_check_runs_clean():
    # every label store stays mutually incomparable with all pruning bounds off
    for seed in range(20):
        inst = random_instance(seed)
        run(inst, "var:0.5", SearchOptions(check_invariants=True, seed_ub=False, ub_prune=False, exp_prune=False))
