"""Concrete-time oracle: determinism, semantics enforcement, and graph
coverage (the empirical soundness check for the whole symbolic pipeline)."""

from fractions import Fraction as F

import pytest

from tbnet.graph import BuildConfig, build_graph
from tbnet.simulate import (coverage_check, covered_by, enabled_instances,
                            simulate)
from tbnet.symbolic import TA


class TestEnabledInstances:
    def test_direct_substitution(self, fig3_net):
        m = {"P0": (F("0.4"),)}
        (inst,) = enabled_instances(m, fig3_net)
        assert inst.transition.name == "t0"
        assert (inst.lb, inst.ub) == (F("0.6"), F("0.7"))

    def test_point_interval(self, fig1_net):
        m = {"Gas": (F("1.6"),), "IGNITE_PHASE_S": (F(0),),
             "Ignition": (F("0.5"),), "NoFlame": (F("1.0"),)}
        gas_off = [i for i in enabled_instances(m, fig1_net)
                   if i.transition.name == "GasOff2"]
        assert gas_off and (gas_off[0].lb, gas_off[0].ub) == (F(2), F(2))

    def test_unmarked_preset_absent(self, fig1_net):
        m = {"Gas": (F(1),)}
        names = {i.transition.name for i in enabled_instances(m, fig1_net)}
        assert "FlameLightOn" not in names

    def test_empty_window_not_enabling(self):
        from conftest import load
        net = load("dead_simple")
        assert enabled_instances({"P": (F(0),)}, net) == []


class TestSimulate:
    def test_seed_determinism(self, fig1_net):
        a = simulate(fig1_net, seed=5, max_steps=15)
        b = simulate(fig1_net, seed=5, max_steps=15)
        assert [(s.transition, s.time) for s in a.steps] == \
               [(s.transition, s.time) for s in b.steps]

    def test_times_monotonic(self, fig1_net):
        trace = simulate(fig1_net, seed=13, max_steps=20)
        times = [s.time for s in trace.steps]
        assert times == sorted(times)

    def test_net_stays_safe(self, fig1_net):
        for seed in range(12):
            trace = simulate(fig1_net, seed=seed, max_steps=30)
            for step in trace.steps:
                assert all(len(v) <= 1 for _, v in step.marking)

    def test_initial_deadlock_gives_empty_trace(self):
        from conftest import load
        net = load("dead_simple")
        trace = simulate(net, seed=1, max_steps=5)
        assert trace.steps == []

    def test_strong_deadline_respected(self):
        """No firing later than a continuously enabled strong deadline."""
        from conftest import load
        net = load("weak_strong")
        for seed in range(15):
            trace = simulate(net, seed=seed, max_steps=10)
            strong_fired_at = None
            for step in trace.steps:
                if step.transition == "s":
                    strong_fired_at = step.time
            if strong_fired_at is None:
                continue
            # s window is [1, 2]; nothing may fire after 2 until s does
            for step in trace.steps:
                if step.time > F(2):
                    assert strong_fired_at <= F(2)
                if step.transition == "w":
                    assert step.time <= F(2) or step.time >= strong_fired_at


class TestCoveredBy:
    def test_initial_marking_covered(self, fig1_graph, fig1_net):
        m = {"IGNITE_PHASE_S": (F(5),), "Ignition": (F(5),),
             "Gas": (F(5),), "NoFlame": (F(5),)}
        initial = fig1_graph.nodes[0].state
        assert covered_by(m, initial, fig1_net, now=F(5))

    def test_constraint_violation_not_covered(self, fig1_graph, fig1_net):
        m = {"IGNITE_PHASE_S": (F(11),), "Ignition": (F(11),),
             "Gas": (F(11),), "NoFlame": (F(11),)}
        initial = fig1_graph.nodes[0].state
        # anonymized positions may lag, but the last firing time pins them
        assert covered_by(m, initial, fig1_net, now=F(11))
        late = {"IGNITE_PHASE_S": (F(11),), "Ignition": (F(5),),
                "Gas": (F(11),), "NoFlame": (F(12),)}
        assert not covered_by(late, initial, fig1_net, now=F(11))

    def test_recovery_window_checked(self, fig1_graph, fig1_net):
        target = next(n.state for n in fig1_graph.nodes if n.state.has_tl)
        m = {"Gas": (F("1.6"),), "Ignition": (F("0.5"),),
             "NoFlame": (F("1.0"),)}
        assert covered_by(m, target, fig1_net, now=F("2.0"))
        assert not covered_by(m, target, fig1_net, now=F("3.0"))


class TestCoverage:
    def test_running_example_coverage(self, fig1_net, fig1_graph):
        report = coverage_check(fig1_net, fig1_graph, runs=120, steps=40,
                                seed=1)
        assert report.ok, report.violations[:2]

    def test_dead_token_net_coverage(self, fig3_net, fig3_graph):
        report = coverage_check(fig3_net, fig3_graph, runs=120, steps=40,
                                seed=2)
        assert report.ok, report.violations[:2]

    def test_small_fixture_coverage(self):
        from conftest import load
        for name in ("maybe_stuck", "weak_strong"):
            net = load(name)
            graph = build_graph(net)
            report = coverage_check(net, graph, runs=60, steps=20, seed=3)
            assert report.ok, (name, report.violations[:2])

    def test_capped_graph_reports_violations(self, fig3_net):
        graph = build_graph(fig3_net, BuildConfig(ta_enabled=False,
                                                  max_states=3))
        report = coverage_check(fig3_net, graph, runs=30, steps=25, seed=4)
        assert report.incomplete_graph
        assert not report.ok
