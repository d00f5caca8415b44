"""Graph exporters: annotated DOT and line-delimited records.

Records are a documented plain-text graph dump that the query evaluator can
load back without the net, so analyses can run on stored graphs.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .constraints import Atom, LinearConstraint
from .graph import WHITE, BuildConfig, Edge, Node, ReachGraph
from .model import TBNet, TBNetError
from .parser import _parse_constraint
from .rational import format_decimal, format_fraction, parse_rational
from .symbolic import TA, SymbolicState, Var, format_stamp


def _quote(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"') + '"'


def _bound_text(value: Optional[Fraction]) -> str:
    return "inf" if value is None else format_decimal(value)


def export_dot(graph: ReachGraph) -> str:
    """Annotated DOT text: boxes (doubled for deadlock, dashed when not
    expanded), edge labels ``t [dmin,dmax]``, open arrowheads and tail dots
    for white ends, full state text in tooltips."""
    lines = [f"digraph {graph.net.name} {{", "  rankdir=TB;",
             "  node [shape=box];"]
    for i, node in enumerate(graph.nodes):
        attrs = [f"label={_quote(f'S{i}')}",
                 f"tooltip={_quote(node.state.pretty())}"]
        if node.deadlock:
            attrs.append("peripheries=2")
        if node.not_expanded:
            attrs.append("style=dashed")
        lines.append(f"  n{i} [{', '.join(attrs)}];")
    for e in graph.edges:
        label = f"{e.transition} [{format_decimal(e.dmin)},{_bound_text(e.dmax)}]"
        attrs = [f"label={_quote(label)}",
                 f"tooltip={_quote(e.tuple_desc)}", "dir=both"]
        attrs.append("arrowhead=" + ("empty" if e.head == WHITE else "normal"))
        attrs.append("arrowtail=" + ("odot" if e.tail == WHITE else "none"))
        lines.append(f"  n{e.src} -> n{e.dst} [{', '.join(attrs)}];")
    lines.append("}")
    return "\n".join(lines) + "\n"


def export_records(graph: ReachGraph) -> str:
    """Line-delimited structured dump; ``load_records`` restores it."""
    out = [f"graph {graph.net.name} nodes={len(graph.nodes)} "
           f"edges={len(graph.edges)} capped={int(graph.capped)} "
           f"initial={graph.initial}"]
    out.append("places " + " ".join(graph.net.places))
    for i, node in enumerate(graph.nodes):
        marking = " ".join(
            f"{place}{{{','.join(format_stamp(s) for s in stamps)}}}"
            for place, stamps in node.state.marking)
        atoms = " ; ".join(str(a) for a in node.state.constraint.atoms)
        out.append(f"node {i} deadlock={int(node.deadlock)} "
                   f"expanded={int(not node.not_expanded)} "
                   f"marking {marking or '-'} constraint {atoms or 'TRUE'}")
    for e in graph.edges:
        out.append(f"edge {e.src} {e.dst} {e.transition} tail={e.tail} "
                   f"head={e.head} dmin={format_fraction(e.dmin)} "
                   f"dmax={'inf' if e.dmax is None else format_fraction(e.dmax)} "
                   f"tuple={e.tuple_desc}")
    return "\n".join(out) + "\n"


class RecordsError(TBNetError):
    code = "RECORDS_ERROR"


_MARK_TOKEN = re.compile(r"([A-Za-z_][A-Za-z0-9_]*)\{([^}]*)\}$")


@dataclass
class _StubNet:
    """Just enough net surface for queries over a loaded graph."""

    name: str
    places: tuple[str, ...]
    transitions: tuple = ()

    def place_order(self, place: str) -> int:
        return self.places.index(place)


def load_records(text: str, net: Optional[TBNet] = None) -> ReachGraph:
    """Rebuild a graph from its records dump.

    With the original net attached every query works; without it the graph
    carries a stub net exposing only place names, enough for topological and
    timing queries.
    """
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("graph "):
        raise RecordsError("not a records file")
    header = dict(kv.split("=") for kv in lines[0].split()[2:])
    name = lines[0].split()[1]
    if not lines[1].startswith("places "):
        raise RecordsError("missing places line")
    places = tuple(lines[1].split()[1:])
    if net is not None and tuple(net.places) != places:
        raise RecordsError("records do not match the given net")
    stub = net if net is not None else _StubNet(name, places)
    graph = ReachGraph(stub, BuildConfig())  # type: ignore[arg-type]
    graph.capped = header.get("capped") == "1"
    graph.initial = int(header.get("initial", "0"))
    for line in lines[2:]:
        kind, _, rest = line.partition(" ")
        if kind == "node":
            match = re.match(r"(\d+) deadlock=([01]) expanded=([01]) "
                             r"marking (.*) constraint (.*)$", rest)
            if not match:
                raise RecordsError(f"bad node line: {line!r}")
            idx, dead, expanded, marking_text, constr_text = match.groups()
            bags: list[tuple[str, tuple]] = []
            if marking_text != "-":
                for token in marking_text.split():
                    mt = _MARK_TOKEN.match(token)
                    if not mt:
                        raise RecordsError(f"bad marking token {token!r}")
                    stamps = tuple(
                        TA if s == "TA" else Var.ts(int(s[1:]))
                        for s in mt.group(2).split(","))
                    bags.append((mt.group(1), stamps))
            constraint = (LinearConstraint() if constr_text == "TRUE"
                          else _parse_constraint(constr_text.replace(" ; ", " && "), 0))
            state = SymbolicState(tuple(bags), constraint)
            node = Node(state, deadlock=dead == "1",
                        not_expanded=expanded == "0")
            if int(idx) != len(graph.nodes):
                raise RecordsError("node ids must be dense and ordered")
            graph.nodes.append(node)
        elif kind == "edge":
            match = re.match(r"(\d+) (\d+) (\S+) tail=(\S+) head=(\S+) "
                             r"dmin=(\S+) dmax=(\S+) tuple=(.*)$", rest)
            if not match:
                raise RecordsError(f"bad edge line: {line!r}")
            src, dst, transition, tail, head, dmin, dmax, desc = match.groups()
            graph.edges.append(Edge(
                int(src), int(dst), transition, desc, tail, head,
                parse_rational(dmin),
                None if dmax == "inf" else parse_rational(dmax)))
        else:
            raise RecordsError(f"unknown record {kind!r}")
    return graph
