"""Query evaluation over a built reachability graph.

Supports topological reachability queries, token-count extremals, deadlock
detection (definite and potential), three-valued timestamp relations, and
conservative path time bounds.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional

from .constraints import (AffineExpr, Atom, LinearConstraint, eliminate,
                          implies, is_satisfiable)
from .graph import WHITE, Node, ReachGraph
from .model import TBNetError
from .symbolic import TA, SymbolicState, symbolic_enablings

YES = "yes"
NO = "no"
MAYBE = "maybe"


class QueryError(TBNetError):
    code = "QUERY_ERROR"


class UnknownPlace(QueryError):
    code = "UNKNOWN_PLACE"


class EmptySelection(QueryError):
    code = "EMPTY_SELECTION"


class PlaceEmptyOrMulti(QueryError):
    code = "PLACE_EMPTY_OR_MULTI"


class Unreachable(QueryError):
    code = "UNREACHABLE"


# ---------------------------------------------------------------------------
# marking predicates


@dataclass(frozen=True)
class MarkingPredicate:
    """Boolean combination of token-count comparisons."""

    fn: Callable[[dict[str, int]], bool]
    text: str

    def __call__(self, counts: dict[str, int]) -> bool:
        return self.fn(counts)


_OPS = {
    "=": lambda a, b: a == b,
    "!=": lambda a, b: a != b,
    "<=": lambda a, b: a <= b,
    ">=": lambda a, b: a >= b,
    "<": lambda a, b: a < b,
    ">": lambda a, b: a > b,
}


class _PredParser:
    """``#place op n`` with and/or/not and parentheses."""

    def __init__(self, text: str, places: tuple[str, ...]):
        self.tokens = re.findall(r"#[A-Za-z_][A-Za-z0-9_]*|\(|\)|!=|<=|>=|"
                                 r"[<>=]|\d+|and|or|not", text)
        joined = "".join(self.tokens).replace(" ", "")
        if joined != text.replace(" ", ""):
            raise QueryError(f"cannot parse predicate {text!r}")
        self.pos = 0
        self.places = places
        self.text = text

    def peek(self) -> Optional[str]:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def take(self) -> str:
        tok = self.peek()
        if tok is None:
            raise QueryError(f"unexpected end of predicate: {self.text!r}")
        self.pos += 1
        return tok

    def parse(self) -> MarkingPredicate:
        pred = self.or_expr()
        if self.peek() is not None:
            raise QueryError(f"trailing tokens in predicate {self.text!r}")
        return pred

    def or_expr(self) -> MarkingPredicate:
        left = self.and_expr()
        while self.peek() == "or":
            self.take()
            right = self.and_expr()
            lf, rf = left.fn, right.fn
            left = MarkingPredicate(lambda c, lf=lf, rf=rf: lf(c) or rf(c),
                                    f"({left.text} or {right.text})")
        return left

    def and_expr(self) -> MarkingPredicate:
        left = self.unary()
        while self.peek() == "and":
            self.take()
            right = self.unary()
            lf, rf = left.fn, right.fn
            left = MarkingPredicate(lambda c, lf=lf, rf=rf: lf(c) and rf(c),
                                    f"({left.text} and {right.text})")
        return left

    def unary(self) -> MarkingPredicate:
        tok = self.take()
        if tok == "not":
            inner = self.unary()
            fn = inner.fn
            return MarkingPredicate(lambda c, fn=fn: not fn(c),
                                    f"(not {inner.text})")
        if tok == "(":
            inner = self.or_expr()
            if self.take() != ")":
                raise QueryError("unbalanced parentheses in predicate")
            return inner
        if tok.startswith("#"):
            place = tok[1:]
            if place not in self.places:
                raise UnknownPlace(f"unknown place {place!r}")
            op = self.take()
            if op not in _OPS:
                raise QueryError(f"bad comparison {op!r}")
            value = int(self.take())
            fn = _OPS[op]
            return MarkingPredicate(
                lambda c, place=place, fn=fn, value=value:
                    fn(c.get(place, 0), value),
                f"#{place} {op} {value}")
        raise QueryError(f"unexpected token {tok!r} in predicate")


def parse_predicate(text: str, places: tuple[str, ...]) -> MarkingPredicate:
    return _PredParser(text, places).parse()


def _counts(state: SymbolicState) -> dict[str, int]:
    return {place: len(stamps) for place, stamps in state.marking}


# ---------------------------------------------------------------------------
# queries


@dataclass
class ExistsResult:
    found: list[int]
    complete: bool

    @property
    def verdict(self) -> str:
        if self.found:
            return "found"
        return "not-found" if self.complete else "incomplete"


def query_exists(graph: ReachGraph, pred: MarkingPredicate) -> ExistsResult:
    """Nodes whose topological marking satisfies the predicate.

    On a complete graph an empty answer proves the marking unreachable.
    """
    found = [i for i, node in enumerate(graph.nodes) if pred(_counts(node.state))]
    return ExistsResult(found, graph.complete)


@dataclass
class ExtremalResult:
    value: int
    witnesses: list[int]
    complete: bool


def query_extremal(graph: ReachGraph, expr: dict[str, int], maximize: bool,
                   pred: Optional[MarkingPredicate] = None) -> ExtremalResult:
    """Extremal value of a linear token-count expression over (filtered)
    nodes.  Incomplete graphs yield labeled estimates."""
    for place in expr:
        if place not in graph.net.places:
            raise UnknownPlace(f"unknown place {place!r}")
    best: Optional[int] = None
    witnesses: list[int] = []
    for i, node in enumerate(graph.nodes):
        counts = _counts(node.state)
        if pred is not None and not pred(counts):
            continue
        value = sum(c * counts.get(p, 0) for p, c in expr.items())
        if best is None or (value > best if maximize else value < best):
            best, witnesses = value, [i]
        elif value == best:
            witnesses.append(i)
    if best is None:
        raise EmptySelection("no node satisfies the filter")
    return ExtremalResult(best, witnesses, graph.complete)


@dataclass
class DeadlockReport:
    definite: list[int]
    potential: list[int]


def query_deadlocks(graph: ReachGraph) -> DeadlockReport:
    """Definite deadlocks have no symbolic enabling at all.  Potential
    deadlocks are nodes where every outgoing edge has a white tail and some
    represented marking enables nothing (the source constraint stays
    satisfiable after negating every enabling's totality condition)."""
    definite = [i for i, n in enumerate(graph.nodes) if n.deadlock]
    potential: list[int] = []
    for i, node in enumerate(graph.nodes):
        if node.deadlock:
            continue
        out = graph.successors(i)
        if not out or any(e.tail != WHITE for e in out):
            continue
        if not getattr(graph.net, "transitions", ()):
            raise QueryError(
                "potential-deadlock analysis needs the model; "
                "reload the records together with the net file")
        if _stuck_subset_exists(node, graph):
            potential.append(i)
    return DeadlockReport(definite, potential)


def _stuck_subset_exists(node: Node, graph: ReachGraph) -> bool:
    from .constraints import Var
    state = node.state
    firing = Var.ts(len(state.symbols()))
    conditions = []
    for enabling in symbolic_enablings(state, graph.net):
        for case in enabling.cases:
            reached = eliminate(case.condition, [firing], prune=False)
            conditions.append(reached)

    # a represented marking enabling nothing satisfies some negated atom of
    # every enabling's totality condition
    def expand(idx: int, acc: LinearConstraint) -> bool:
        if idx == len(conditions):
            return True
        for atom in conditions[idx].atoms:
            candidate = acc.conjoin((atom.negate(),))
            if is_satisfiable(candidate) and expand(idx + 1, candidate):
                return True
        return False

    return expand(0, state.constraint)


@dataclass
class StampRelationResult:
    per_node: dict[int, str]
    aggregate: str


def query_stamp_relation(graph: ReachGraph, place_a: str, index_a: int,
                         op: str, place_b: str, index_b: int,
                         ) -> StampRelationResult:
    """Three-valued comparison between two token timestamps.

    Per node: yes when the constraint forces the relation, no when it forces
    the negation, maybe when either stamp is anonymous or the constraint
    decides neither.
    """
    for place in (place_a, place_b):
        if place not in graph.net.places:
            raise UnknownPlace(f"unknown place {place!r}")
    per_node: dict[int, str] = {}
    for i, node in enumerate(graph.nodes):
        bag_a = node.state.bag(place_a)
        bag_b = node.state.bag(place_b)
        if not bag_a or not bag_b:
            continue
        if index_a >= len(bag_a) or index_b >= len(bag_b):
            raise PlaceEmptyOrMulti(
                f"node {i}: token index out of range for {place_a}/{place_b}")
        a, b = bag_a[index_a], bag_b[index_b]
        if a is TA or b is TA:
            per_node[i] = MAYBE
            continue
        ea, eb = AffineExpr.var(a), AffineExpr.var(b)
        rel = {"<": Atom.lt, "<=": Atom.le, ">": Atom.gt, ">=": Atom.ge}
        c = node.state.constraint
        if op == "=":
            if implies(c, LinearConstraint(Atom.eq(ea, eb))):
                per_node[i] = YES
            elif _forced_apart(c, ea, eb):
                per_node[i] = NO
            else:
                per_node[i] = MAYBE
            continue
        if op not in rel:
            raise QueryError(f"bad stamp relation {op!r}")
        if implies(c, LinearConstraint([rel[op](ea, eb)])):
            per_node[i] = YES
        elif implies(c, LinearConstraint([rel[op](ea, eb).negate()])):
            per_node[i] = NO
        else:
            per_node[i] = MAYBE
    if not per_node:
        raise PlaceEmptyOrMulti(
            f"no node marks both {place_a} and {place_b}")
    if any(v == YES for v in per_node.values()):
        aggregate = YES
    elif all(v == NO for v in per_node.values()):
        aggregate = NO
    else:
        aggregate = MAYBE
    return StampRelationResult(per_node, aggregate)


def _forced_apart(c: LinearConstraint, ea: AffineExpr, eb: AffineExpr) -> bool:
    return (implies(c, LinearConstraint([Atom.lt(ea, eb)]))
            or implies(c, LinearConstraint([Atom.gt(ea, eb)])))


@dataclass
class PathBounds:
    min_total: Fraction
    max_total: Optional[Fraction]  # None is unbounded


def query_path_bounds(graph: ReachGraph, src: int, dst: int) -> PathBounds:
    """Conservative path time bounds between two nodes.

    The minimum is a shortest path weighted by edge minimum distances (a
    sound necessary condition, not a feasibility proof).  The maximum is the
    longest path over the cycle condensation; any positive-maximum cycle on
    a connecting path makes it unbounded.
    """
    n = len(graph.nodes)
    if not (0 <= src < n and 0 <= dst < n):
        raise QueryError("node id out of range")
    adj: dict[int, list] = {i: [] for i in range(n)}
    for e in graph.edges:
        adj[e.src].append(e)

    import heapq
    dist: dict[int, Fraction] = {src: Fraction(0)}
    heap = [(Fraction(0), src)]
    while heap:
        d, u = heapq.heappop(heap)
        if d > dist[u]:
            continue
        for e in adj[u]:
            nd = d + e.dmin
            if e.dst not in dist or nd < dist[e.dst]:
                dist[e.dst] = nd
                heapq.heappush(heap, (nd, e.dst))
    if dst not in dist:
        raise Unreachable(f"node {dst} is not reachable from {src}")
    min_total = dist[dst]
    if src == dst:
        return PathBounds(Fraction(0), Fraction(0))

    # a positive-maximum edge on a cycle inside the corridor is unbounded
    comp = _scc(n, graph.edges)
    on_path = _between(n, graph.edges, src, dst)
    for e in graph.edges:
        if (e.src in on_path and e.dst in on_path
                and comp[e.src] == comp[e.dst]
                and (e.dmax is None or e.dmax > 0)):
            return PathBounds(min_total, None)
    # remaining cycles have zero weight: Bellman-Ford-style longest path
    longest: dict[int, Fraction] = {src: Fraction(0)}
    for _ in range(n + 1):
        changed = False
        for e in graph.edges:
            if e.src in longest and e.src in on_path and e.dst in on_path:
                if e.dmax is None:
                    return PathBounds(min_total, None)
                cand = longest[e.src] + e.dmax
                if e.dst not in longest or cand > longest[e.dst]:
                    longest[e.dst] = cand
                    changed = True
        if not changed:
            break
    return PathBounds(min_total, longest.get(dst, min_total))


def _scc(n: int, edges) -> list[int]:
    adj = {i: [] for i in range(n)}
    radj = {i: [] for i in range(n)}
    for e in edges:
        adj[e.src].append(e.dst)
        radj[e.dst].append(e.src)
    seen: list[int] = []
    visited = [False] * n
    for start in range(n):
        if visited[start]:
            continue
        stack = [(start, iter(adj[start]))]
        visited[start] = True
        while stack:
            node, it = stack[-1]
            advanced = False
            for nxt in it:
                if not visited[nxt]:
                    visited[nxt] = True
                    stack.append((nxt, iter(adj[nxt])))
                    advanced = True
                    break
            if not advanced:
                seen.append(node)
                stack.pop()
    comp = [-1] * n
    label = 0
    for node in reversed(seen):
        if comp[node] != -1:
            continue
        frontier = [node]
        comp[node] = label
        while frontier:
            u = frontier.pop()
            for v in radj[u]:
                if comp[v] == -1:
                    comp[v] = label
                    frontier.append(v)
        label += 1
    return comp


def _between(n: int, edges, src: int, dst: int) -> set[int]:
    fwd = {src}
    frontier = [src]
    adj = {i: [] for i in range(n)}
    radj = {i: [] for i in range(n)}
    for e in edges:
        adj[e.src].append(e.dst)
        radj[e.dst].append(e.src)
    while frontier:
        u = frontier.pop()
        for v in adj[u]:
            if v not in fwd:
                fwd.add(v)
                frontier.append(v)
    back = {dst}
    frontier = [dst]
    while frontier:
        u = frontier.pop()
        for v in radj[u]:
            if v not in back:
                back.add(v)
                frontier.append(v)
    return fwd & back


# ---------------------------------------------------------------------------
# query-file runner


@dataclass
class QueryOutcome:
    line: str
    text: str
    record: str


def _parse_count_expr(text: str, places: tuple[str, ...]) -> dict[str, int]:
    tokens = re.findall(r"#[A-Za-z_][A-Za-z0-9_]*|\d+|[+*-]", text)
    if "".join(tokens).replace(" ", "") != text.replace(" ", ""):
        raise QueryError(f"cannot parse count expression {text!r}")
    out: dict[str, int] = {}
    sign, coeff = 1, None
    i = 0
    while i < len(tokens):
        tok = tokens[i]
        if tok == "+":
            sign, coeff = 1, None
        elif tok == "-":
            sign, coeff = -1, None
        elif tok.isdigit():
            coeff = int(tok)
        elif tok == "*":
            pass
        else:
            place = tok[1:]
            if place not in places:
                raise UnknownPlace(f"unknown place {place!r}")
            out[place] = out.get(place, 0) + sign * (coeff if coeff else 1)
            sign, coeff = 1, None
        i += 1
    if not out:
        raise QueryError(f"empty count expression {text!r}")
    return out


def run_queries(graph: ReachGraph, text: str) -> list[QueryOutcome]:
    """One query per line; returns human text plus structured records."""
    places = graph.net.places
    outcomes: list[QueryOutcome] = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("//"):
            continue
        keyword, _, rest = line.partition(" ")
        rest = rest.strip()
        if keyword == "exists":
            res = query_exists(graph, parse_predicate(rest, places))
            ids = ",".join(f"S{i}" for i in res.found)
            text_out = (f"exists {rest}: {res.verdict}"
                        + (f" at {ids}" if res.found else ""))
            record = f"exists\t{rest}\t{res.verdict}\t{ids}"
        elif keyword in ("max", "min"):
            expr_text, _, pred_text = rest.partition(" where ")
            pred = (parse_predicate(pred_text.strip(), places)
                    if pred_text else None)
            res = query_extremal(graph, _parse_count_expr(expr_text, places),
                                 keyword == "max", pred)
            label = "" if res.complete else " (estimate: graph incomplete)"
            ids = ",".join(f"S{i}" for i in res.witnesses[:8])
            text_out = f"{keyword} {expr_text}: {res.value}{label} at {ids}"
            record = f"{keyword}\t{expr_text}\t{res.value}\t{ids}"
        elif keyword == "deadlocks" and not rest:
            res = query_deadlocks(graph)
            text_out = ("deadlocks: definite="
                        + (",".join(f"S{i}" for i in res.definite) or "none")
                        + " potential="
                        + (",".join(f"S{i}" for i in res.potential) or "none"))
            record = ("deadlocks\t"
                      + ",".join(f"S{i}" for i in res.definite) + "\t"
                      + ",".join(f"S{i}" for i in res.potential))
        elif keyword == "rel":
            match = re.match(r"([A-Za-z_][A-Za-z0-9_]*)\.(\d+)\s*"
                             r"(<=|>=|=|<|>)\s*([A-Za-z_][A-Za-z0-9_]*)\.(\d+)$",
                             rest)
            if not match:
                raise QueryError(f"bad rel query {rest!r}")
            pa, ia, op, pb, ib = match.groups()
            res = query_stamp_relation(graph, pa, int(ia), op, pb, int(ib))
            per = " ".join(f"S{i}:{v}" for i, v in sorted(res.per_node.items()))
            text_out = f"rel {rest}: {res.aggregate} [{per}]"
            record = f"rel\t{rest}\t{res.aggregate}\t{per}"
        elif keyword == "pathbounds":
            parts = rest.split()
            if len(parts) != 2:
                raise QueryError(f"bad pathbounds query {rest!r}")
            ids = [int(p.lstrip("S")) for p in parts]
            res = query_path_bounds(graph, ids[0], ids[1])
            hi = "inf" if res.max_total is None else str(res.max_total)
            text_out = (f"pathbounds S{ids[0]} S{ids[1]}: "
                        f"min={res.min_total} max={hi} (conservative)")
            record = f"pathbounds\t{parts[0]} {parts[1]}\t{res.min_total}\t{hi}"
        else:
            raise QueryError(f"unknown query {line!r}")
        outcomes.append(QueryOutcome(line, text_out, record))
    return outcomes
