"""Query evaluation over built graphs."""

from fractions import Fraction as F

import pytest

from tbnet.graph import BuildConfig, build_graph
from tbnet.properties import (MAYBE, NO, YES, EmptySelection, PlaceEmptyOrMulti,
                              UnknownPlace, parse_predicate, query_deadlocks,
                              query_exists, query_extremal, query_path_bounds,
                              query_stamp_relation, run_queries, Unreachable)


@pytest.fixture(scope="module")
def stuck_graph():
    from conftest import load
    return build_graph(load("maybe_stuck"))


@pytest.fixture(scope="module")
def dead_graph():
    from conftest import load
    return build_graph(load("dead_simple"))


class TestExists:
    def test_flame_reachable(self, fig1_graph, fig1_net):
        res = query_exists(fig1_graph,
                           parse_predicate("#Flame >= 1", fig1_net.places))
        assert res.verdict == "found"
        assert res.found

    def test_two_tokens_unreachable_proves_safety(self, fig1_graph, fig1_net):
        res = query_exists(fig1_graph,
                           parse_predicate("#IGNITE_PHASE_S >= 2",
                                           fig1_net.places))
        assert res.verdict == "not-found"

    def test_trivial_predicate_matches_all(self, fig1_graph, fig1_net):
        res = query_exists(fig1_graph,
                           parse_predicate("#Gas >= 0", fig1_net.places))
        assert len(res.found) == len(fig1_graph.nodes)

    def test_unknown_place_rejected(self, fig1_graph, fig1_net):
        with pytest.raises(UnknownPlace):
            parse_predicate("#Nowhere = 1", fig1_net.places)

    def test_boolean_combinations(self, fig1_graph, fig1_net):
        pred = parse_predicate("#Flame >= 1 and not (#Gas = 0)",
                               fig1_net.places)
        res = query_exists(fig1_graph, pred)
        assert res.found


class TestExtremal:
    def test_max_tokens_single(self, fig1_graph):
        res = query_extremal(fig1_graph, {"Gas": 1}, True)
        assert res.value == 1

    def test_min_with_filter(self, fig1_graph, fig1_net):
        pred = parse_predicate("#Flame >= 1", fig1_net.places)
        res = query_extremal(fig1_graph, {"NoFlame": 1}, False, pred)
        assert res.value == 0

    def test_empty_selection(self, fig1_graph, fig1_net):
        pred = parse_predicate("#Flame >= 5", fig1_net.places)
        with pytest.raises(EmptySelection):
            query_extremal(fig1_graph, {"Gas": 1}, True, pred)


class TestDeadlocks:
    def test_running_example_has_none(self, fig1_graph):
        report = query_deadlocks(fig1_graph)
        assert report.definite == []
        assert report.potential == []

    def test_empty_window_is_definite(self, dead_graph):
        report = query_deadlocks(dead_graph)
        assert report.definite == [0]

    def test_partial_enabling_is_potential(self, stuck_graph):
        report = query_deadlocks(stuck_graph)
        assert 0 in report.potential
        assert report.definite == [1]


class TestStampRelation:
    def test_positive_somewhere(self, fig1_graph):
        res = query_stamp_relation(fig1_graph, "Flame", 0, ">",
                                   "IGNITE_PHASE_S", 0)
        assert res.aggregate == YES
        assert YES in res.per_node.values()

    def test_anonymous_gives_maybe(self, fig1_graph):
        res = query_stamp_relation(fig1_graph, "Gas", 0, "=", "Ignition", 0)
        assert res.aggregate == MAYBE
        assert all(v == MAYBE for v in res.per_node.values())

    def test_forced_negative(self, fig1_graph):
        res = query_stamp_relation(fig1_graph, "Flame", 0, "<",
                                   "IGNITE_PHASE_S", 0)
        assert NO in res.per_node.values()

    def test_never_marked_place_rejected(self, fig1_graph):
        with pytest.raises(PlaceEmptyOrMulti):
            query_stamp_relation(fig1_graph, "NoGas", 0, "=", "Gas", 0)


class TestPathBounds:
    def test_recovery_state_takes_at_least_17_tenths(self, fig1_graph):
        target = next(i for i, n in enumerate(fig1_graph.nodes)
                      if n.state.has_tl)
        res = query_path_bounds(fig1_graph, 0, target)
        assert res.min_total == F("1.7")
        assert res.max_total == F("2.3")

    def test_self_path_is_zero(self, fig1_graph):
        res = query_path_bounds(fig1_graph, 0, 0)
        assert (res.min_total, res.max_total) == (F(0), F(0))

    def test_cycle_makes_max_unbounded(self, fig1_graph):
        # any node inside the light/die loop is reached through it
        cyclic = {e.src for e in fig1_graph.edges
                  if (e.dst, e.src) in {(x.src, x.dst) for x in fig1_graph.edges}}
        target = sorted(cyclic)[0]
        res = query_path_bounds(fig1_graph, 0, target)
        assert res.max_total is None

    def test_unreachable_pair(self, fig1_graph):
        with pytest.raises(Unreachable):
            query_path_bounds(fig1_graph, 3, 0)


class TestQueryRunner:
    def test_full_query_file(self, fig1_graph):
        text = """// reachability and timing checks
exists #Flame >= 1
max #Gas + #Flame
min #NoFlame where #Gas >= 1
deadlocks
rel Flame.0 > IGNITE_PHASE_S.0
pathbounds 0 1
"""
        outcomes = run_queries(fig1_graph, text)
        assert len(outcomes) == 6
        assert outcomes[0].text.startswith("exists #Flame >= 1: found")
        assert "deadlocks: definite=none potential=none" == outcomes[3].text
        assert outcomes[4].text.startswith("rel Flame.0 > IGNITE_PHASE_S.0: yes")
        assert all("\t" in o.record for o in outcomes)

    def test_incomplete_graph_labeled(self, fig3_net):
        graph = build_graph(fig3_net, BuildConfig(ta_enabled=False,
                                                  max_states=5))
        outcomes = run_queries(graph, "max #P2\nexists #P0 >= 1")
        assert "estimate" in outcomes[0].text
        assert "incomplete" not in outcomes[1].text  # found is conclusive
        outcomes = run_queries(graph, "exists #P0 >= 2")
        assert outcomes[0].text.endswith("incomplete")
