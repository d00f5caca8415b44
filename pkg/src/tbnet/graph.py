"""Worklist construction of the time-coverage symbolic reachability graph."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .constraints import (TL, AffineExpr, Atom, LinearConstraint, Var,
                          bounds_of, implies, is_satisfiable)
from .model import TBNet, TBNetError
from .symbolic import (TA, FiringCase, SymbolicEnabling, SymbolicState,
                       includes, normalize, symbolic_enablings, ta_replace)

log = logging.getLogger("tbnet")

BLACK = "black"
WHITE = "white"


class StateCapExceeded(TBNetError):
    code = "STATE_CAP_EXCEEDED"


@dataclass(frozen=True)
class Edge:
    src: int
    dst: int
    transition: str
    tuple_desc: str
    tail: str
    head: str
    dmin: Fraction
    dmax: Optional[Fraction]  # None is unbounded


@dataclass
class Node:
    state: SymbolicState
    deadlock: bool = False
    not_expanded: bool = False


@dataclass
class BuildConfig:
    ta_enabled: bool = True
    relative_enabled: bool = True
    time_limit: Optional[Fraction] = None
    max_states: int = 100000


@dataclass
class ReachGraph:
    net: TBNet
    config: BuildConfig
    nodes: list[Node] = field(default_factory=list)
    edges: list[Edge] = field(default_factory=list)
    initial: int = 0
    capped: bool = False

    @property
    def complete(self) -> bool:
        return not self.capped and not any(n.not_expanded for n in self.nodes)

    def successors(self, idx: int) -> list[Edge]:
        return [e for e in self.edges if e.src == idx]


def edge_time_bounds(condition: LinearConstraint, firing_var: Var,
                     tl_expr: AffineExpr) -> tuple[Fraction, Optional[Fraction]]:
    """Min and max time distance from the source's last firing to this one."""
    delta = AffineExpr.var(firing_var).sub(tl_expr)
    bounds = bounds_of(condition, delta)
    dmin = bounds.lo if bounds.lo is not None else Fraction(0)
    return dmin, bounds.hi


def _beyond_limit(state: SymbolicState, limit: Fraction) -> bool:
    """A state is closed off when every represented marking has its newest
    and oldest meaningful timestamps at least the limit apart."""
    syms = state.symbols()
    if not syms:
        return False
    dist = state.tl_expr().sub(AffineExpr.var(syms[0]))
    return implies(state.constraint,
                   LinearConstraint([Atom.ge(dist, AffineExpr.constant(limit))]))


def build_graph(net: TBNet, config: Optional[BuildConfig] = None) -> ReachGraph:
    """Breadth-first exploration with merge-on-inclusion.

    New states that are equal to an existing node merge with a black edge
    head; states strictly contained in an existing node merge with a white
    head.  Successor candidates of one breadth level are installed together,
    most general first, so the merged node set does not depend on the order
    transitions were declared in.  Nodes past the relative time limit are
    kept but not expanded.
    """
    config = config or BuildConfig()
    relative = config.relative_enabled and net.is_relative
    graph = ReachGraph(net, config)
    by_marking: dict[tuple, list[int]] = {}
    started = time.monotonic()

    def install(state: SymbolicState) -> int:
        idx = len(graph.nodes)
        node = Node(state)
        if config.time_limit is not None and _beyond_limit(state, config.time_limit):
            node.not_expanded = True
        graph.nodes.append(node)
        by_marking.setdefault(state.topo_key(), []).append(idx)
        return idx

    def merge_target(state: SymbolicState) -> tuple[Optional[int], str]:
        bucket = by_marking.get(state.topo_key(), ())
        superset_at: Optional[int] = None
        for idx in bucket:
            rel = includes(graph.nodes[idx].state, state)
            if rel == "equal":
                return idx, BLACK
            if rel == "superset" and superset_at is None:
                superset_at = idx
        if superset_at is not None:
            return superset_at, WHITE
        return None, BLACK

    initial = SymbolicState.build(
        {p: [Var.ts(i) for i in syms] for p, syms in net.initial_marking},
        net.initial_constraint, net)
    roots = normalize(initial, net, relative=relative)
    if config.ta_enabled:
        roots = [s for r in roots for s in ta_replace(r, net, relative=relative)]
    level: list[int] = [install(root) for root in roots]
    graph.initial = 0

    while level:
        pending: list[tuple[int, str, str, str, Fraction,
                            Optional[Fraction], SymbolicState]] = []
        for src in level:
            node = graph.nodes[src]
            if node.not_expanded:
                continue
            enablings = symbolic_enablings(node.state, net)
            if not enablings:
                node.deadlock = True
                continue
            k = len(node.state.symbols())
            for enabling in enablings:
                for case in enabling.cases:
                    successors = _fire_all(node.state, enabling, case, net,
                                           relative, config.ta_enabled)
                    dmin, dmax = edge_time_bounds(case.condition, Var.ts(k),
                                                  node.state.tl_expr())
                    tail = BLACK if case.total else WHITE
                    for succ in successors:
                        pending.append((src, enabling.transition.name,
                                        enabling.descriptor(), tail,
                                        dmin, dmax, succ))
        next_level: list[int] = []
        for item in _general_first(pending):
            src, transition, desc, tail, dmin, dmax, succ = item
            target, head = merge_target(succ)
            if target is None:
                if len(graph.nodes) >= config.max_states:
                    graph.capped = True
                    for idx in next_level:
                        graph.nodes[idx].not_expanded = True
                    log.warning("state cap %d reached; graph incomplete",
                                config.max_states)
                    graph.edges.sort(key=lambda e: (e.src, e.transition,
                                                    e.tuple_desc, e.dst))
                    return graph
                target = install(succ)
                next_level.append(target)
            graph.edges.append(Edge(src, target, transition, desc, tail, head,
                                    dmin, dmax))
        level = next_level

    graph.edges.sort(key=lambda e: (e.src, e.transition, e.tuple_desc, e.dst))
    log.info("built %d nodes, %d edges in %.2fs", len(graph.nodes),
             len(graph.edges), time.monotonic() - started)
    return graph


def _general_first(pending: list) -> list:
    """Stable order on one level's successor candidates that puts a state
    before every state it strictly includes, so subset candidates merge into
    their siblings instead of becoming separate nodes."""
    if len(pending) <= 1:
        return pending
    states = [item[6] for item in pending]
    n = len(states)
    buckets: dict[tuple, list[int]] = {}
    for i, state in enumerate(states):
        buckets.setdefault(state.topo_key(), []).append(i)
    beats: dict[int, set[int]] = {i: set() for i in range(n)}
    for group in buckets.values():
        for gi, i in enumerate(group):
            for j in group[gi + 1:]:
                if states[i] == states[j]:
                    continue
                rel = includes(states[i], states[j])
                if rel == "superset":
                    beats[j].add(i)
                elif rel is None and includes(states[j], states[i]) == "superset":
                    beats[i].add(j)
    done: list[int] = []
    done_set: set[int] = set()
    remaining = list(range(n))
    while remaining:
        for idx in remaining:
            if not (beats[idx] - done_set):
                break
        else:
            idx = remaining[0]  # inclusion cycles cannot happen; be safe
        done.append(idx)
        done_set.add(idx)
        remaining.remove(idx)
    return [pending[i] for i in done]


def _fire_all(state: SymbolicState, enabling: SymbolicEnabling,
              case: FiringCase, net: TBNet, relative: bool,
              ta_enabled: bool) -> list[SymbolicState]:
    from .symbolic import fire
    fired = fire(state, enabling, case, net, relative=relative)
    if not ta_enabled:
        return fired
    out = []
    for s in fired:
        out.extend(ta_replace(s, net, relative=relative))
    return out


def assert_invariants(graph: ReachGraph) -> None:
    """Structural sanity: satisfiable constraints, ordered symbols, edge
    bounds, and a black-head path to every node."""
    for node in graph.nodes:
        state = node.state
        assert is_satisfiable(state.constraint), state.pretty()
        syms = state.symbols()
        for a, b in zip(syms, syms[1:]):
            assert implies(state.constraint, LinearConstraint(
                [Atom.le(AffineExpr.var(a), AffineExpr.var(b))])), state.pretty()
        if state.has_tl:
            for s in syms:
                assert implies(state.constraint, LinearConstraint(
                    [Atom.ge(AffineExpr.var(TL), AffineExpr.var(s))]))
    for edge in graph.edges:
        assert edge.dmin >= 0
        assert edge.dmax is None or edge.dmin <= edge.dmax
    reached = {graph.initial}
    frontier = [graph.initial]
    while frontier:
        nxt = []
        for idx in frontier:
            for edge in graph.edges:
                if edge.src == idx and edge.head == BLACK and edge.dst not in reached:
                    reached.add(edge.dst)
                    nxt.append(edge.dst)
        frontier = nxt
    assert reached == set(range(len(graph.nodes))), (
        "nodes unreachable via black-head edges: "
        f"{sorted(set(range(len(graph.nodes))) - reached)}")
