"""Concrete-time executor used as an independent testing oracle.

Runs ordinary firings with exact rational times, checks symbolic states
against concrete markings (coverage), and validates a built graph against
random trses: every visited marking must be covered by some node and every
concrete firing matched by an edge between covering nodes.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from fractions import Fraction
from math import lcm
from typing import Optional

from .constraints import AffineExpr, Var, bounds_of
from .graph import ReachGraph
from .model import (ConstExpr, EnabRef, MaxExpr, PlaceRef, TBNet, TimeExpr,
                    Transition)
from .symbolic import TA, SymbolicState, eval_expr

ConcreteMarking = dict[str, tuple[Fraction, ...]]


@dataclass(frozen=True)
class Step:
    transition: str
    tuple_values: tuple[tuple[str, Fraction], ...]
    time: Fraction
    marking: tuple[tuple[str, tuple[Fraction, ...]], ...]


@dataclass
class Trace:
    seed: int
    initial: tuple[tuple[str, tuple[Fraction, ...]], ...]
    steps: list[Step] = field(default_factory=list)


def _freeze(m: ConcreteMarking) -> tuple[tuple[str, tuple[Fraction, ...]], ...]:
    return tuple((p, tuple(sorted(v))) for p, v in sorted(m.items()) if v)


def _eval_concrete(expr: TimeExpr, preset: tuple[str, ...],
                   chosen: dict[str, Fraction]) -> Fraction:
    if isinstance(expr, PlaceRef):
        return chosen[expr.place] * expr.coeff + expr.offset
    if isinstance(expr, EnabRef):
        return max(chosen[p] for p in preset) + expr.offset
    if isinstance(expr, MaxExpr):
        return max(_eval_concrete(a, preset, chosen) for a in expr.args) + expr.offset
    return expr.value


@dataclass(frozen=True)
class Instance:
    transition: Transition
    chosen: tuple[tuple[str, Fraction], ...]
    lb: Fraction
    ub: Fraction


def enabled_instances(m: ConcreteMarking, net: TBNet) -> list[Instance]:
    """All enabling tuples with their concrete firing intervals.

    An empty interval (lb > ub) means the tuple is not enabling and imposes
    no deadline.
    """
    out: list[Instance] = []
    for t in sorted(net.transitions, key=lambda tr: tr.name):
        bags = []
        for p in t.pre:
            values = m.get(p, ())
            if not values:
                break
            distinct = sorted(set(values))
            bags.append([(p, v) for v in distinct])
        else:
            for combo in itertools.product(*bags):
                chosen = dict(combo)
                lb = _eval_concrete(t.tf.lb, t.pre, chosen)
                ub = _eval_concrete(t.tf.ub, t.pre, chosen)
                if lb <= ub:
                    out.append(Instance(t, tuple(sorted(chosen.items())), lb, ub))
    return out


def _grid_denominator(net: TBNet) -> int:
    denoms = [1]
    def walk(expr: TimeExpr):
        if isinstance(expr, PlaceRef):
            denoms.extend((expr.coeff.denominator, expr.offset.denominator))
        elif isinstance(expr, EnabRef):
            denoms.append(expr.offset.denominator)
        elif isinstance(expr, MaxExpr):
            denoms.append(expr.offset.denominator)
            for a in expr.args:
                walk(a)
        else:
            denoms.append(expr.value.denominator)
    for t in net.transitions:
        walk(t.tf.lb)
        walk(t.tf.ub)
    for atom in net.initial_constraint.atoms:
        denoms.append(atom.expr.const.denominator)
        denoms.extend(c.denominator for _, c in atom.expr.terms)
    if net.time_limit is not None:
        denoms.append(net.time_limit.denominator)
    return lcm(*denoms) * 10


def _pick_on_grid(rng: random.Random, lo: Fraction, hi: Fraction,
                  denom: int) -> Fraction:
    """Seeded uniform choice on the rational grid of step 1/denom, endpoints
    included."""
    if hi < lo:
        raise ValueError("empty interval")
    start = lo * denom
    first = start if start.denominator == 1 else Fraction(int(start) + 1)
    last = hi * denom
    last = Fraction(int(last))
    points = int(last - first) + 1 if last >= first else 0
    choices = points + 2  # the two endpoints, possibly off-grid
    idx = rng.randrange(choices)
    if idx == 0:
        return lo
    if idx == 1:
        return hi
    return Fraction(int(first) + (idx - 2), denom)


def initial_solution(net: TBNet, rng: random.Random,
                     denom: int) -> dict[Var, Fraction]:
    """A seeded rational solution of the initial constraint, sampled one
    variable at a time from its exact feasible interval."""
    from .constraints import Atom
    assignment: dict[Var, Fraction] = {}
    constraint = net.initial_constraint
    symbols = sorted({Var.ts(i) for _, syms in net.initial_marking
                      for i in syms}, key=Var.sort_key)
    for var in symbols:
        fixed = constraint
        for v, val in assignment.items():
            fixed = fixed.conjoin(Atom.eq(AffineExpr.var(v),
                                          AffineExpr.constant(val)))
        bounds = bounds_of(fixed, AffineExpr.var(var))
        lo = bounds.lo if bounds.lo is not None else Fraction(0)
        hi = bounds.hi if bounds.hi is not None else lo + 10
        lo = max(lo, Fraction(0))
        if bounds.lo_open or bounds.hi_open:
            # nudge inside the open side by half a grid step
            if bounds.lo_open:
                lo += Fraction(1, 2 * denom)
            if bounds.hi_open:
                hi -= Fraction(1, 2 * denom)
        if hi < lo:
            hi = lo
        assignment[var] = _pick_on_grid(rng, lo, hi, denom * 2)
    return assignment


def simulate(net: TBNet, seed: int, max_steps: int,
             sigma: Optional[dict[Var, Fraction]] = None) -> Trace:
    """Seed-deterministic random run under weak/strong semantics.

    Firing times are drawn from a rational grid; no instance may fire past
    the earliest strong deadline, and weak instances are never forced.
    """
    rng = random.Random(seed)
    denom = _grid_denominator(net)
    if sigma is None:
        sigma = initial_solution(net, rng, denom)
        if not net.initial_constraint.holds(
                {**sigma, **{v: sigma.get(v, Fraction(0))
                             for v in net.initial_constraint.vars()}}):
            raise ValueError("failed to sample an initial solution")
    marking: ConcreteMarking = {}
    for place, syms in net.initial_marking:
        marking[place] = tuple(sigma[Var.ts(i)] for i in syms)
    trace = Trace(seed, _freeze(marking))
    now = max((v for vs in marking.values() for v in vs), default=Fraction(0))
    for _ in range(max_steps):
        instances = enabled_instances(marking, net)
        live = []
        deadline: Optional[Fraction] = None
        for inst in instances:
            lo = max(inst.lb, now)
            if lo > inst.ub:
                continue  # window already missed; imposes nothing
            live.append((inst, lo))
            if inst.transition.strong:
                deadline = inst.ub if deadline is None else min(deadline, inst.ub)
        choosable = [(inst, lo) for inst, lo in live
                     if deadline is None or lo <= deadline]
        if not choosable:
            break
        inst, lo = choosable[rng.randrange(len(choosable))]
        hi = inst.ub if deadline is None else min(inst.ub, deadline)
        tau = _pick_on_grid(rng, lo, hi, denom)
        marking = _fire_concrete(marking, inst, tau)
        now = tau
        trace.steps.append(Step(inst.transition.name, inst.chosen, tau,
                                _freeze(marking)))
    return trace


def _fire_concrete(m: ConcreteMarking, inst: Instance,
                   tau: Fraction) -> ConcreteMarking:
    out = {p: list(v) for p, v in m.items()}
    chosen = dict(inst.chosen)
    for p in inst.transition.pre:
        out[p].remove(chosen[p])
    for p in inst.transition.post:
        out.setdefault(p, []).append(tau)
    return {p: tuple(v) for p, v in out.items() if v}


# ---------------------------------------------------------------------------
# coverage


def covered_by(m: ConcreteMarking, state: SymbolicState, net: TBNet,
               now: Fraction) -> bool:
    """Coverage of a concrete marking by a symbolic state.

    Requires a consistent numerical substitution of the state's symbols that
    reproduces the marking and satisfies the constraint (anonymous positions
    take values no later than the last firing time), such that anonymous
    erasures change no enabled tuple's firing interval.
    """
    marked = {p for p, v in m.items() if v}
    if marked != {p for p, _ in state.marking}:
        return False
    for place, stamps in state.marking:
        if len(stamps) != len(m[place]):
            return False
    for combo in _match_marking(m, state, now):
        sigma: dict[Var, Fraction] = {}
        ok = True
        for pairs in combo.values():
            for stamp, value in pairs:
                if stamp is TA:
                    continue
                prev = sigma.get(stamp)
                if prev is None:
                    sigma[stamp] = value
                elif prev != value:
                    ok = False
                    break
            if not ok:
                break
        if not ok:
            continue
        full = dict(sigma)
        full[Var.tl()] = now
        if not state.constraint_with_tl().holds(full):
            continue
        if _erasure_conditions_hold(m, state, net, combo):
            return True
    return False


def _match_marking(m: ConcreteMarking, state: SymbolicState, now: Fraction):
    """Enumerate per-place pairings of stamps with concrete values."""
    places = []
    options_per_place = []
    for place, stamps in state.marking:
        values = sorted(m[place])
        options = []
        for perm in sorted(set(itertools.permutations(values))):
            pairs = tuple(zip(stamps, perm))
            if all(v <= now for s, v in pairs if s is TA):
                options.append(pairs)
        if not options:
            return
        places.append(place)
        options_per_place.append(options)
    for combo in itertools.product(*options_per_place):
        yield dict(zip(places, combo))


def _erasure_conditions_hold(m: ConcreteMarking, state: SymbolicState,
                             net: TBNet,
                             match: dict[str, tuple]) -> bool:
    """Every enabled tuple whose chosen token sits at an anonymous position
    must evaluate to the same interval after erasing those positions."""
    for inst in enabled_instances(m, net):
        t = inst.transition
        chosen = dict(inst.chosen)
        # which stamps can the chosen value correspond to, per place
        anon_choices: list[set[bool]] = []
        for p in t.pre:
            pairs = match.get(p, ())
            flags = {stamp is TA for stamp, value in pairs
                     if value == chosen[p]}
            if not flags:
                return False  # inconsistent match, defensive
            anon_choices.append(flags)
        for anon_flags in itertools.product(*anon_choices):
            erased = frozenset(p for p, anon in zip(t.pre, anon_flags) if anon)
            if not erased:
                continue
            stamps = {p: AffineExpr.constant(v) for p, v in chosen.items()
                      if p not in erased}
            lb_cut = eval_expr(t.tf.lb, t.pre, stamps, erased)
            ub_cut = eval_expr(t.tf.ub, t.pre, stamps, erased)
            if lb_cut is None or ub_cut is None:
                return False
            lb_val = max(e.const for e in lb_cut)
            ub_val = max(e.const for e in ub_cut)
            if lb_val != inst.lb or ub_val != inst.ub:
                return False
    return True


@dataclass
class CoverageViolation:
    run: int
    step: int
    reason: str
    trace_prefix: list[Step]


@dataclass
class CoverageReport:
    runs: int
    steps_checked: int
    violations: list[CoverageViolation]
    incomplete_graph: bool

    @property
    def ok(self) -> bool:
        return not self.violations


def coverage_check(net: TBNet, graph: ReachGraph, runs: int,
                   steps: int, seed: int = 0) -> CoverageReport:
    """Simulate traces and check them against the graph.

    Every visited marking must be covered by at least one node, and every
    firing must be matched by an edge from a covering node to a node
    covering the successor marking.
    """
    report = CoverageReport(runs, 0, [], not graph.complete)
    for run in range(runs):
        trace = simulate(net, seed + run, steps)
        marking = {p: v for p, v in trace.initial}
        now = max((x for vs in marking.values() for x in vs), default=Fraction(0))
        cover = [i for i, node in enumerate(graph.nodes)
                 if covered_by(marking, node.state, net, now)]
        if not cover:
            report.violations.append(CoverageViolation(
                run, 0, "initial marking not covered", []))
            continue
        for si, step in enumerate(trace.steps):
            report.steps_checked += 1
            next_marking = {p: v for p, v in step.marking}
            next_cover = [i for i, node in enumerate(graph.nodes)
                          if covered_by(next_marking, node.state, net, step.time)]
            if not next_cover:
                report.violations.append(CoverageViolation(
                    run, si + 1, f"marking after {step.transition} not covered",
                    trace.steps[:si + 1]))
                break
            matched = False
            for e in graph.edges:
                if (e.transition == step.transition and e.src in cover
                        and e.dst in next_cover):
                    matched = True
                    break
            if not matched:
                report.violations.append(CoverageViolation(
                    run, si + 1,
                    f"firing of {step.transition} matched by no edge "
                    "between covering nodes", trace.steps[:si + 1]))
                break
            marking, cover = next_marking, next_cover
    return report
