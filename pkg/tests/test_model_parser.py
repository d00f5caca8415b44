"""Model-file parser and net validation tests."""

from fractions import Fraction as F

import pytest

from tbnet.model import (EnabRef, MaxExpr, PlaceRef, print_net, validate)
from tbnet.parser import ParseError, parse_net


def test_running_example_structure(fig1_net):
    assert len(fig1_net.places) == 8
    assert len(fig1_net.transitions) == 5
    assert fig1_net.transition("FlameLightOff2").weak
    assert all(t.strong for t in fig1_net.transitions
               if t.name != "FlameLightOff2")
    assert fig1_net.is_relative
    marked = dict(fig1_net.initial_marking)
    assert set(marked) == {"IGNITE_PHASE_S", "Ignition", "Gas", "NoFlame"}


def test_dead_token_net_structure(fig3_net):
    assert len(fig3_net.places) == 3
    assert len(fig3_net.transitions) == 2
    t0 = fig3_net.transition("t0")
    assert isinstance(t0.tf.lb, EnabRef) and t0.tf.lb.offset == F("0.2")
    assert isinstance(t0.tf.ub, EnabRef) and t0.tf.ub.offset == F("0.3")


def test_decimals_parse_exactly(fig1_net):
    flame_on = fig1_net.transition("FlameOn")
    assert isinstance(flame_on.tf.lb, PlaceRef)
    assert flame_on.tf.lb.offset == F(1, 100)
    assert isinstance(flame_on.tf.ub, MaxExpr)
    offsets = sorted(arg.offset for arg in flame_on.tf.ub.args)
    assert offsets == [F(1, 100), F(1, 10)]


def test_round_trip_identity(fig1_net, fig3_net):
    for net in (fig1_net, fig3_net):
        assert parse_net(print_net(net)) == net


def test_tf_must_reference_preset():
    bad = """net bad
place A, B
trans t pre A post tf [B + 1, B + 2]
init A{T0}
constraint T0 >= 0
"""
    with pytest.raises(ParseError) as err:
        parse_net(bad)
    assert err.value.code == "TF_REFERENCES_NON_PRESET"


def test_unknown_place_rejected():
    bad = """net bad
place A
trans t pre A Nowhere post tf [enab, enab + 1]
init A{T0}
constraint T0 >= 0
"""
    with pytest.raises(ParseError) as err:
        parse_net(bad)
    assert err.value.code == "UNKNOWN_PLACE"


def test_unsatisfiable_initial_constraint_rejected():
    bad = """net bad
place A
trans t pre A post tf [enab, enab + 1]
init A{T0}
constraint T0 >= 2 && T0 <= 1
"""
    with pytest.raises(Exception) as err:
        parse_net(bad)
    assert "UNSAT_INITIAL_CONSTRAINT" in str(err.value)


def test_parse_error_carries_line_number():
    bad = "net ok\nplace A\nwhatnot A B\n"
    with pytest.raises(ParseError) as err:
        parse_net(bad)
    assert err.value.line == 3


def test_empty_preset_rejected():
    bad = """net bad
place A
trans t pre post A tf [enab, enab]
init A{T0}
constraint T0 >= 0
"""
    with pytest.raises(ParseError):
        parse_net(bad)


def test_validate_reports_dead_token_places(fig1_net):
    notes = [d for d in validate(fig1_net) if d.code == "DEAD_TOKEN_PLACES"]
    assert len(notes) == 1
    assert "BURN_PHASE_B" in notes[0].message
    assert "IGNITE_PHASE_B" in notes[0].message


def test_absolute_constant_disables_erasure():
    text = """net absolute
place A
trans t pre A post A tf [5, 7]
init A{T0}
constraint T0 >= 0
"""
    net = parse_net(text)
    assert not net.is_relative
    codes = {d.code for d in validate(net)}
    assert "ABSOLUTE_TIME" in codes


def test_scaled_place_reference_accepted_but_not_relative():
    text = """net scaled
place A
trans t pre A post A tf [2 * A, 2 * A + 1]
init A{T0}
constraint T0 >= 0
"""
    net = parse_net(text)
    t = net.transition("t")
    assert isinstance(t.tf.lb, PlaceRef) and t.tf.lb.coeff == 2
    assert not net.is_relative


def test_multiset_initial_marking():
    text = """net multi
place A
trans t pre A post tf [enab + 1, enab + 2]
init A{T0} A{T0} A{T1}
constraint T0 >= 0 && T1 >= T0
"""
    net = parse_net(text)
    marked = dict(net.initial_marking)
    assert marked["A"] == (0, 0, 1)


def test_timelimit_directive():
    text = """net limited
place A
trans t pre A post A tf [enab + 1, enab + 2]
init A{T0}
constraint T0 >= 0
timelimit 3/2
"""
    net = parse_net(text)
    assert net.time_limit == F(3, 2)
    assert parse_net(print_net(net)) == net
