"""Symbolic states and their dynamics.

A symbolic state pairs a marking over timestamp symbols (plus the anonymous
stamp TA) with a satisfiable linear constraint.  This module implements
enabling computation with strong-deadline guards, the symbolic firing rule,
normalization (dead-symbol elimination, relative erasure, implied ordering,
TL bookkeeping) and the anonymization engine that replaces provably inert
timestamps with TA.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional, Sequence

from .constraints import (TL, AffineExpr, Atom, Bounds, LinearConstraint,
                          Var, bounds_of, eliminate, implies, is_satisfiable,
                          prune_redundant)
from .model import (EnabRef, MaxExpr, PlaceRef, TBNet, TBNetError, TimeExpr,
                    TimeFunction, Transition, expr_mentions_enab, expr_places)

log = logging.getLogger("tbnet")

_ZERO = Fraction(0)


class _TA:
    """The anonymous timestamp: a forgotten value in the past."""

    __slots__ = ()
    _instance: "_TA | None" = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "TA"


TA = _TA()
Stamp = Var | _TA
_TL_MATERIALIZED: dict = {}


def stamp_key(stamp: Stamp) -> tuple:
    if stamp is TA:
        return (1, 0)
    return (0, stamp.index)


def format_stamp(stamp: Stamp) -> str:
    return "TA" if stamp is TA else str(stamp)


class NotWellDefined(TBNetError):
    code = "NOT_WELL_DEFINED"


class AllTaTuple(TBNetError):
    code = "ALL_TA_TUPLE"


class NormalFormUnorderable(TBNetError):
    code = "NORMAL_FORM_UNORDERABLE"


# ---------------------------------------------------------------------------
# states


@dataclass(frozen=True)
class SymbolicState:
    """Normal-form symbolic state: marking plus constraint.

    ``marking`` lists only marked places, in net declaration order, each with
    its sorted bag of stamps.
    """

    marking: tuple[tuple[str, tuple[Stamp, ...]], ...]
    constraint: LinearConstraint

    @staticmethod
    def build(bags: dict[str, Sequence[Stamp]], constraint: LinearConstraint,
              net: TBNet) -> "SymbolicState":
        marking = tuple(
            (place, tuple(sorted(bags[place], key=stamp_key)))
            for place in net.places if bags.get(place))
        return SymbolicState(marking, constraint)

    def bags(self) -> dict[str, list[Stamp]]:
        return {place: list(stamps) for place, stamps in self.marking}

    def bag(self, place: str) -> tuple[Stamp, ...]:
        for p, stamps in self.marking:
            if p == place:
                return stamps
        return ()

    def symbols(self) -> tuple[Var, ...]:
        seen: dict[Var, None] = {}
        for _, stamps in self.marking:
            for stamp in stamps:
                if stamp is not TA:
                    seen.setdefault(stamp, None)
        return tuple(sorted(seen, key=Var.sort_key))

    def topo_key(self) -> tuple[tuple[str, int], ...]:
        return tuple((place, len(stamps)) for place, stamps in self.marking)

    @property
    def has_tl(self) -> bool:
        return any(v.is_tl for v in self.constraint.vars())

    def tl_expr(self) -> AffineExpr:
        """The last firing time: explicit TL, or the newest marking symbol."""
        if self.has_tl:
            return AffineExpr.var(TL)
        syms = self.symbols()
        if syms:
            return AffineExpr.var(syms[-1])
        return AffineExpr.constant(_ZERO)

    def constraint_with_tl(self) -> LinearConstraint:
        """Constraint with TL made explicit (TL equals the newest symbol when
        it was left implicit)."""
        syms = self.symbols()
        if self.has_tl or not syms:
            return self.constraint
        key = (self.constraint, syms[-1])
        cached = _TL_MATERIALIZED.get(key)
        if cached is None:
            cached = self.constraint.conjoin(
                Atom.eq(AffineExpr.var(TL), AffineExpr.var(syms[-1])))
            _TL_MATERIALIZED[key] = cached
        return cached

    def pretty(self) -> str:
        marks = " ".join(
            f"{place}{{{','.join(format_stamp(s) for s in stamps)}}}"
            for place, stamps in self.marking)
        return f"{marks} | {self.constraint}"


# ---------------------------------------------------------------------------
# time-function evaluation

MaxForm = tuple[AffineExpr, ...]  # nonempty; denotes max of the arguments


def _dedup_form(args: Iterable[AffineExpr]) -> MaxForm:
    seen: dict[tuple, AffineExpr] = {}
    for arg in args:
        seen.setdefault((arg.terms, arg.const), arg)
    return tuple(sorted(seen.values(), key=lambda e: (
        tuple((v.sort_key(), c) for v, c in e.terms), e.const)))


def erase(expr: TimeExpr, places: set[str]) -> Optional[TimeExpr]:
    """Syntactic erasure of places from an expression tree.

    Returns ``None`` when removal would violate an operator's arity: a max
    losing all arguments, or an offset/scale losing its operand.  Bare place
    leaves inside a max are simply dropped.
    """
    if isinstance(expr, PlaceRef):
        return None if expr.place in places else expr
    if isinstance(expr, (EnabRef,)) or not isinstance(expr, MaxExpr):
        return expr  # enab erasure is resolved against a tuple, ConstExpr kept
    kept: list[TimeExpr] = []
    for arg in expr.args:
        if (isinstance(arg, PlaceRef) and arg.place in places
                and arg.coeff == 1 and arg.offset == 0):
            continue  # a removable bare leaf
        sub = erase(arg, places)
        if sub is None:
            return None
        kept.append(sub)
    if not kept:
        return None
    return MaxExpr(tuple(kept), expr.offset)


def eval_expr(expr: TimeExpr, preset: Sequence[str],
              stamps: dict[str, AffineExpr],
              erased: frozenset[str]) -> Optional[MaxForm]:
    """Evaluate a time expression against a tuple into max-of-affine form.

    ``stamps`` assigns an affine expression to every non-erased preset place;
    ``erased`` lists the places removed (TA positions or an anonymization
    candidate).  Returns ``None`` when the erasure is not well-defined.
    """
    if isinstance(expr, PlaceRef):
        if expr.place in erased:
            return None
        return (stamps[expr.place].scale(expr.coeff).shift(expr.offset),)
    if isinstance(expr, EnabRef):
        args = [stamps[q].shift(expr.offset) for q in preset if q not in erased]
        if not args:
            return None
        return _dedup_form(args)
    if isinstance(expr, MaxExpr):
        out: list[AffineExpr] = []
        for arg in expr.args:
            if (isinstance(arg, PlaceRef) and arg.place in erased
                    and arg.coeff == 1 and arg.offset == 0):
                continue
            sub = eval_expr(arg, preset, stamps, erased)
            if sub is None:
                return None
            out.extend(e.shift(expr.offset) for e in sub)
        if not out:
            return None
        return _dedup_form(out)
    return (AffineExpr.constant(expr.value),)


def _resolve_max(form: MaxForm, context: LinearConstraint,
                 ) -> list[tuple[tuple[Atom, ...], AffineExpr]]:
    """Resolve a max-of-affine form into guarded single branches.

    If the context decides a dominating argument, a single unguarded branch
    results (ties resolve to the first argument in canonical order).
    Otherwise one branch per potentially-maximal argument is produced with
    the guard "this argument is at least every other".
    """
    if len(form) == 1:
        return [((), form[0])]
    for i, cand in enumerate(form):
        if all(i == j or implies(context, LinearConstraint([Atom.ge(cand, o)]))
               for j, o in enumerate(form)):
            return [((), cand)]
    branches = []
    for i, cand in enumerate(form):
        guard = tuple(Atom.ge(cand, o) for j, o in enumerate(form) if j != i)
        if is_satisfiable(context.conjoin(guard)):
            branches.append((guard, cand))
    return branches


def eval_time_function(tf: TimeFunction, tuple_stamps: dict[str, Stamp],
                       state: SymbolicState, preset: Sequence[str],
                       ) -> list[tuple[LinearConstraint, AffineExpr, AffineExpr]]:
    """Spec surface: evaluate a time function for a tuple of a state.

    Returns one ``(case_guard, lb, ub)`` triple per undecided max branch.
    Raises :class:`AllTaTuple` when every tuple position is anonymous and the
    function cannot be evaluated.
    """
    erased = frozenset(p for p, s in tuple_stamps.items() if s is TA)
    stamps = {p: AffineExpr.var(s) for p, s in tuple_stamps.items()
              if s is not TA}
    lb_form = eval_expr(tf.lb, preset, stamps, erased)
    ub_form = eval_expr(tf.ub, preset, stamps, erased)
    if lb_form is None or ub_form is None:
        if len(erased) == len(preset):
            raise AllTaTuple("every tuple position is anonymous")
        raise NotWellDefined("tuple erasure is not well-defined")
    out = []
    for g1, lb in _resolve_max(lb_form, state.constraint):
        ctx = state.constraint.conjoin(g1)
        for g2, ub in _resolve_max(ub_form, ctx):
            out.append((LinearConstraint(g1 + g2), lb, ub))
    return out


# ---------------------------------------------------------------------------
# enablings


@dataclass(frozen=True)
class FiringCase:
    """One guarded scenario of an enabling: resolved bounds, strong-deadline
    caps, the full firing condition over the source symbols plus T_k, and
    whether every represented marking can follow it (drives tail color)."""

    guard: tuple[Atom, ...]
    lb_args: MaxForm
    ub: AffineExpr
    condition: LinearConstraint
    total: bool


@dataclass(frozen=True)
class SymbolicEnabling:
    transition: Transition
    tuple_stamps: tuple[tuple[str, Stamp], ...]
    cases: tuple[FiringCase, ...]

    def tuple_dict(self) -> dict[str, Stamp]:
        return dict(self.tuple_stamps)

    def descriptor(self) -> str:
        inner = ",".join(f"{p}:{format_stamp(s)}" for p, s in self.tuple_stamps)
        return f"({inner})"


def _candidate_tuples(state: SymbolicState, t: Transition,
                      ) -> list[dict[str, Stamp]]:
    """All tuples drawn from the marking whose TA erasure is well-defined."""
    bags = []
    for place in t.pre:
        stamps = state.bag(place)
        if not stamps:
            return []
        distinct: list[Stamp] = []
        for s in stamps:
            if s not in distinct:
                distinct.append(s)
        bags.append([(place, s) for s in distinct])
    out = []
    for combo in itertools.product(*bags):
        chosen = dict(combo)
        erased = frozenset(p for p, s in chosen.items() if s is TA)
        stamps = {p: AffineExpr.var(s) for p, s in chosen.items() if s is not TA}
        lb = eval_expr(t.tf.lb, t.pre, stamps, erased)
        ub = eval_expr(t.tf.ub, t.pre, stamps, erased)
        if lb is None or ub is None:
            continue
        out.append(chosen)
    return out


def _tuple_forms(t: Transition, chosen: dict[str, Stamp],
                 ) -> tuple[MaxForm, MaxForm]:
    erased = frozenset(p for p, s in chosen.items() if s is TA)
    stamps = {p: AffineExpr.var(s) for p, s in chosen.items() if s is not TA}
    lb = eval_expr(t.tf.lb, t.pre, stamps, erased)
    ub = eval_expr(t.tf.ub, t.pre, stamps, erased)
    assert lb is not None and ub is not None
    return lb, ub


@dataclass(frozen=True)
class _Scenario:
    guard: tuple[Atom, ...]
    caps: tuple[AffineExpr, ...]


@dataclass(frozen=True)
class _StrongTuple:
    key: tuple
    lb_form: MaxForm
    ub_form: MaxForm
    simple_cap: Optional[AffineExpr]  # resolved ub, window implied nonempty
    inert: bool                       # window implied empty: no obligation


def _strong_inventory(state: SymbolicState, net: TBNet) -> list[_StrongTuple]:
    """Strong candidate tuples with their deadline status against the source
    constraint.  Almost always a tuple resolves to a single unconditional
    cap or to no obligation; the undecided rest is expanded per scenario."""
    base = state.constraint
    inventory: list[_StrongTuple] = []
    for t in sorted(net.transitions, key=lambda tr: tr.name):
        if not t.strong:
            continue
        for chosen in _candidate_tuples(state, t):
            key = (t.name, tuple(sorted(chosen.items())))
            lb_form, ub_form = _tuple_forms(t, chosen)
            simple_cap = None
            inert = False
            branches = _resolve_max(ub_form, base)
            if len(branches) == 1 and not branches[0][0]:
                ub = branches[0][1]
                nonempty = tuple(Atom.le(arg, ub) for arg in lb_form)
                if implies(base, LinearConstraint(nonempty)):
                    simple_cap = ub
                elif not is_satisfiable(base.conjoin(nonempty)):
                    inert = True
            inventory.append(_StrongTuple(key, lb_form, ub_form,
                                          simple_cap, inert))
    return inventory


def _strong_cap_scenarios(state: SymbolicState,
                          inventory: list[_StrongTuple],
                          skip: tuple,
                          base_guard: tuple[Atom, ...],
                          ) -> list[_Scenario]:
    """Expand strong-tuple deadline caps into guarded scenarios.

    Every strong tuple present in the marking whose window is (conditionally)
    nonempty bounds any firing time by its upper bound.  Usually the source
    constraint decides both the max branches and the emptiness test, so a
    single scenario results.
    """
    simple_caps = tuple(st.simple_cap for st in inventory
                        if st.key != skip and st.simple_cap is not None)
    scenarios = [_Scenario(base_guard, simple_caps)]
    base = state.constraint
    for st in inventory:
        if st.key == skip or st.simple_cap is not None or st.inert:
            continue
        next_scenarios: list[_Scenario] = []
        for sc in scenarios:
            ctx = base.conjoin(sc.guard)
            for ub_guard, ub in _resolve_max(st.ub_form, ctx):
                ctx2 = ctx.conjoin(ub_guard)
                nonempty = tuple(Atom.le(arg, ub) for arg in st.lb_form)
                if implies(ctx2, LinearConstraint(nonempty)):
                    next_scenarios.append(_Scenario(
                        sc.guard + ub_guard, sc.caps + (ub,)))
                elif not is_satisfiable(ctx2.conjoin(nonempty)):
                    next_scenarios.append(_Scenario(
                        sc.guard + ub_guard, sc.caps))
                else:
                    next_scenarios.append(_Scenario(
                        sc.guard + ub_guard + nonempty, sc.caps + (ub,)))
                    for arg in st.lb_form:
                        empty_guard = (Atom.gt(arg, ub),)
                        if is_satisfiable(ctx2.conjoin(empty_guard)):
                            next_scenarios.append(_Scenario(
                                sc.guard + ub_guard + empty_guard, sc.caps))
        scenarios = next_scenarios
    return scenarios


def symbolic_enablings(state: SymbolicState, net: TBNet,
                       ) -> list[SymbolicEnabling]:
    """All symbolic enablings of a normal-form state, with firing cases."""
    k = len(state.symbols())
    t_k = Var.ts(k)
    tk_expr = AffineExpr.var(t_k)
    tl = state.tl_expr()
    inventory = _strong_inventory(state, net)
    out: list[SymbolicEnabling] = []
    for t in sorted(net.transitions, key=lambda tr: tr.name):
        for chosen in sorted(_candidate_tuples(state, t),
                             key=lambda c: tuple(stamp_key(c[p]) for p in t.pre)):
            lb_form, ub_form = _tuple_forms(t, chosen)
            cases: list[FiringCase] = []
            for ub_guard, ub in _resolve_max(ub_form, state.constraint):
                skip_key = (t.name, tuple(sorted(chosen.items())))
                for sc in _strong_cap_scenarios(state, inventory, skip_key,
                                                ub_guard):
                    atoms = list(sc.guard)
                    atoms.extend(Atom.le(arg, tk_expr) for arg in lb_form)
                    atoms.append(Atom.le(tk_expr, ub))
                    atoms.append(Atom.ge(tk_expr, tl))
                    atoms.extend(Atom.le(tk_expr, cap) for cap in sc.caps)
                    condition = state.constraint.conjoin(atoms)
                    if not is_satisfiable(condition):
                        continue
                    reached = eliminate(condition, [t_k], prune=False)
                    total = implies(state.constraint, reached)
                    cases.append(FiringCase(tuple(sc.guard), lb_form, ub,
                                            condition, total))
            if cases:
                out.append(SymbolicEnabling(
                    t, tuple((p, chosen[p]) for p in t.pre), tuple(cases)))
    return out


# ---------------------------------------------------------------------------
# firing and normalization


def fire(state: SymbolicState, enabling: SymbolicEnabling, case: FiringCase,
         net: TBNet, relative: bool = True) -> list[SymbolicState]:
    """Fire one case of an enabling and normalize the result.

    The new timestamp T_k lands in every postset place; the new constraint
    keeps the case condition (which already carries T_k >= TL), renames the
    old TL away and sets TL to T_k.  Normalization may split the result when
    the constraint leaves two surviving symbols unordered.
    """
    t = enabling.transition
    chosen = enabling.tuple_dict()
    k = len(state.symbols())
    t_k = Var.ts(k)
    bags = state.bags()
    for place in t.pre:
        bags[place].remove(chosen[place])
    for place in t.post:
        bags.setdefault(place, []).append(t_k)
    atoms = case.condition.atoms
    constraint = LinearConstraint(atoms)
    if state.has_tl:
        prev = Var.aux("tl_prev")
        constraint = constraint.substitute({TL: prev})
    constraint = constraint.conjoin(Atom.eq(AffineExpr.var(TL),
                                            AffineExpr.var(t_k)))
    raw = SymbolicState.build(bags, constraint, net)
    return normalize(raw, net, relative=relative)


def _implied_le(c: LinearConstraint, a: Var, b: Var) -> bool:
    return implies(c, LinearConstraint([Atom.le(AffineExpr.var(a),
                                                AffineExpr.var(b))]))


def _order_clusters(constraint: LinearConstraint, clusters: list[list[Var]],
                    ) -> tuple[str, Optional[tuple[Var, Var]], list[Var]]:
    """Verify the sample-derived order.

    Within a cluster of sample-equal symbols the full pairwise matrix
    decides collapse, split, or a chain; across cluster boundaries a single
    implication per boundary suffices (the sample already witnesses the
    strict direction).
    """
    chain: list[Var] = []
    for cluster in clusters:
        if len(cluster) > 1:
            le: dict[tuple[Var, Var], bool] = {}
            for i, a in enumerate(cluster):
                for b in cluster[i + 1:]:
                    ab = _implied_le(constraint, a, b)
                    ba = _implied_le(constraint, b, a)
                    if ab and ba:
                        return "collapse", (a, b), []
                    if not ab and not ba:
                        return "split", (a, b), []
                    le[(a, b)] = ab
                    le[(b, a)] = ba
            ranked = sorted(cluster, key=lambda v: (
                -sum(le.get((v, o), False) for o in cluster if o != v),
                v.sort_key()))
            cluster = ranked
        if chain and not _implied_le(constraint, chain[-1], cluster[0]):
            return "split", (chain[-1], cluster[0]), []
        chain.extend(cluster)
    return "ok", None, chain


def normalize(state: SymbolicState, net: TBNet, relative: bool = True,
              ) -> list[SymbolicState]:
    """Bring a state to normal form; may case-split on undecided orderings.

    Steps: project away symbols absent from the marking (and temporaries),
    erase absolute time when the net is relative, collapse provably equal
    symbols, order the rest (splitting the state when the constraint decides
    no order), drop TL when it coincides with the newest symbol, and rename
    to T_0..T_{k-1}.
    """
    syms = {s for _, stamps in state.marking for s in stamps if s is not TA}
    dead = [v for v in state.constraint.vars()
            if (v.is_ts and v not in syms) or v.is_aux]
    constraint = (eliminate(state.constraint, dead, prune=False)
                  if dead else state.constraint)
    if relative:
        constraint = canonical_relative(constraint)

    # Derive the implied total order, guided by a sample solution: only
    # sample-equal pairs and cluster boundaries need implication checks.
    current = sorted(syms, key=Var.sort_key)
    while True:
        if len(current) <= 1:
            ordered = list(current)
            break
        from .constraints import sample_solution
        sample = sample_solution(constraint)
        current.sort(key=lambda v: (sample.get(v, Fraction(0)), v.sort_key()))
        clusters: list[list[Var]] = []
        for v in current:
            if clusters and sample.get(clusters[-1][0]) == sample.get(v):
                clusters[-1].append(v)
            else:
                clusters.append([v])
        action, payload, chain = _order_clusters(constraint, clusters)
        if action == "ok":
            ordered = chain
            break
        a, b = payload
        if action == "collapse":
            constraint = eliminate(constraint.conjoin(
                Atom.eq(AffineExpr.var(a), AffineExpr.var(b))), [b],
                prune=False)
            bags = {p: [a if s == b else s for s in stamps]
                    for p, stamps in state.marking}
            state = SymbolicState.build(bags, constraint, net)
            current = [v for v in current if v != b]
            continue
        left = SymbolicState(state.marking, constraint.conjoin(
            [Atom.le(AffineExpr.var(a), AffineExpr.var(b))]))
        right = SymbolicState(state.marking, constraint.conjoin(
            [Atom.gt(AffineExpr.var(a), AffineExpr.var(b))]))
        return normalize(left, net, relative) + normalize(right, net, relative)

    mapping = {old: Var.ts(i) for i, old in enumerate(ordered)}
    bump = {old: Var.aux(f"n{i}") for i, old in enumerate(ordered)}
    constraint = constraint.substitute(bump).substitute(
        {bump[o]: mapping[o] for o in ordered})
    bags = {p: [mapping.get(s, s) if s is not TA else TA for s in stamps]
            for p, stamps in state.marking}
    result = SymbolicState.build(bags, constraint, net)

    # TL bookkeeping: drop it when it adds nothing beyond the newest symbol
    if result.has_tl:
        if not ordered:
            constraint = eliminate(result.constraint, [TL], prune=False)
            result = SymbolicState(result.marking, constraint)
        else:
            newest = AffineExpr.var(Var.ts(len(ordered) - 1))
            tl_e = AffineExpr.var(TL)
            if implies(result.constraint, LinearConstraint(
                    [Atom.le(tl_e, newest)])):
                constraint = eliminate(result.constraint, [TL], prune=False)
                result = SymbolicState(result.marking, constraint)
    final = SymbolicState(result.marking, prune_redundant(result.constraint))
    return [final]


def canonical_relative(c: LinearConstraint) -> LinearConstraint:
    from .constraints import canonicalize_relative
    return canonicalize_relative(c, prune=False)


# ---------------------------------------------------------------------------
# anonymization (TA replacement)


def _max_shape(expr: TimeExpr) -> bool:
    return isinstance(expr, (MaxExpr, EnabRef))


def _enab_offset_shape(tf: TimeFunction) -> bool:
    return isinstance(tf.lb, EnabRef) and isinstance(tf.ub, EnabRef)


def _contains_place(expr: TimeExpr, place: str) -> bool:
    """Whether the expression depends on the place, counting ``enab``."""
    return place in expr_places(expr) or expr_mentions_enab(expr)


class _TaContext:
    """One anonymization pass over a state: shared constraint and TL view."""

    def __init__(self, state: SymbolicState, net: TBNet):
        self.net = net
        self.constraint = state.constraint
        self.tl = state.tl_expr()
        self.bags = state.bags()

    # -- tuple generators ---------------------------------------------------

    def tuples_using(self, t: Transition, place: str, stamp: Var,
                     ) -> list[dict[str, Stamp]]:
        """Candidate tuples of ``t`` mapping ``place`` to ``stamp``."""
        per_place = []
        for p in t.pre:
            if p == place:
                per_place.append([(p, stamp)])
                continue
            stamps = self.bags.get(p) or []
            if not stamps:
                return []
            distinct: list[Stamp] = []
            for s in stamps:
                if s not in distinct:
                    distinct.append(s)
            per_place.append([(p, s) for s in distinct])
        out = []
        for combo in itertools.product(*per_place):
            chosen = dict(combo)
            if self._forms(t, chosen) is not None:
                out.append(chosen)
        return out

    def future_tuples(self, t: Transition, place: str, stamp: Var,
                      ) -> list[tuple[dict[str, Stamp], dict[str, AffineExpr],
                                      tuple[Atom, ...]]]:
        """Tuples completed with fresh future variables for unmarked places.

        A token not yet produced cannot predate the last firing, so each
        fresh variable X carries the single assumption X >= TL.
        """
        per_place = []
        aux_atoms: list[Atom] = []
        aux_exprs: dict[str, AffineExpr] = {}
        for p in t.pre:
            if p == place:
                per_place.append([(p, stamp)])
                continue
            stamps = self.bags.get(p) or []
            if stamps:
                distinct: list[Stamp] = []
                for s in stamps:
                    if s not in distinct:
                        distinct.append(s)
                per_place.append([(p, s) for s in distinct])
            else:
                x = AffineExpr.var(Var.aux(f"fut_{p}"))
                aux_exprs[p] = x
                aux_atoms.append(Atom.ge(x, self.tl))
                per_place.append([(p, None)])
        out = []
        for combo in itertools.product(*per_place):
            chosen = {p: s for p, s in combo if s is not None}
            erased = frozenset(p for p, s in chosen.items() if s is TA)
            stamps = {p: AffineExpr.var(s) for p, s in chosen.items()
                      if s is not TA}
            stamps.update(aux_exprs)
            full = dict(combo)
            lb = eval_expr(t.tf.lb, t.pre, stamps, erased)
            ub = eval_expr(t.tf.ub, t.pre, stamps, erased)
            if lb is None or ub is None:
                continue
            out.append((full, stamps, tuple(aux_atoms)))
        return out

    def _forms(self, t: Transition, chosen: dict[str, Stamp],
               extra_stamps: Optional[dict[str, AffineExpr]] = None,
               also_erase: Iterable[str] = (),
               ) -> Optional[tuple[MaxForm, MaxForm]]:
        erased = frozenset(p for p, s in chosen.items() if s is TA) | frozenset(also_erase)
        stamps = {p: AffineExpr.var(s) for p, s in chosen.items() if s is not TA}
        if extra_stamps:
            stamps.update(extra_stamps)
        lb = eval_expr(t.tf.lb, t.pre, stamps, erased)
        ub = eval_expr(t.tf.ub, t.pre, stamps, erased)
        if lb is None or ub is None:
            return None
        return lb, ub

    # -- implication helpers -------------------------------------------------

    def _holds(self, atoms: Iterable[Atom], assumptions: Iterable[Atom] = (),
               ) -> bool:
        premise = self.constraint.conjoin(tuple(assumptions))
        return implies(premise, LinearConstraint(atoms))

    def _never_enabled(self, lb: MaxForm, ub: MaxForm,
                       assumptions: Iterable[Atom] = ()) -> bool:
        """TL > ub and TL >= lb, conjunctively over max arguments."""
        atoms = [Atom.gt(self.tl, u) for u in ub]
        atoms += [Atom.ge(self.tl, l) for l in lb]
        return self._holds(atoms, assumptions)

    def _window_empty(self, lb: MaxForm, ub: MaxForm,
                      assumptions: Iterable[Atom] = ()) -> bool:
        """Sufficient check for lb > ub: some lower arg beats every upper."""
        return any(self._holds([Atom.gt(l, u) for u in ub], assumptions)
                   for l in lb)

    # -- the heuristics -------------------------------------------------------

    def replaceable(self, place: str, stamp: Var) -> bool:
        consumers = self.net.consumers(place)
        if not consumers:
            return True  # dead-token place, statically anonymous
        for t in consumers:
            if not erase_tf_ok(t, place):
                return False
            if not self._some_heuristic(t, place, stamp):
                return False
        return True

    def _some_heuristic(self, t: Transition, place: str, stamp: Var) -> bool:
        all_marked = all(self.bags.get(p) for p in t.pre)
        if all_marked:
            checks = (self._h2, self._h1, self._h3, self._h4, self._h5,
                      self._h11)
        else:
            checks = (self._h6, self._h7, self._h8, self._h9, self._h10)
        return any(check(t, place, stamp) for check in checks)

    def _h2(self, t: Transition, place: str, stamp: Var) -> bool:
        return (place not in t.tf.places()) and not t.tf.mentions_enab()

    def _h1(self, t: Transition, place: str, stamp: Var) -> bool:
        if not _enab_offset_shape(t.tf):
            return False
        target = AffineExpr.var(stamp)
        for other in t.pre:
            if other == place:
                continue
            stamps = self.bags.get(other) or []
            if not stamps or any(s is TA for s in stamps):
                continue
            if all(self._holds([Atom.ge(AffineExpr.var(s), target)])
                   for s in stamps):
                return True
        return False

    def _erasure_equal(self, t: Transition, place: str,
                       chosen: dict[str, Stamp],
                       extra: Optional[dict[str, AffineExpr]] = None) -> bool:
        full = self._forms(t, chosen, extra)
        cut = self._forms(t, chosen, extra, also_erase=(place,))
        return full is not None and cut is not None and full == cut

    def _h3(self, t: Transition, place: str, stamp: Var) -> bool:
        if not (_max_shape(t.tf.lb) and _max_shape(t.tf.ub)):
            return False
        tuples = self.tuples_using(t, place, stamp)
        return bool(tuples) and all(
            self._erasure_equal(t, place, chosen) for chosen in tuples)

    def _h4(self, t: Transition, place: str, stamp: Var) -> bool:
        tuples = self.tuples_using(t, place, stamp)
        if not tuples:
            return False
        for chosen in tuples:
            forms = self._forms(t, chosen)
            assert forms is not None
            if not self._never_enabled(*forms):
                return False
        return True

    def _h5(self, t: Transition, place: str, stamp: Var) -> bool:
        tuples = self.tuples_using(t, place, stamp)
        if not tuples:
            return False
        for chosen in tuples:
            forms = self._forms(t, chosen)
            assert forms is not None
            lb, ub = forms
            if not self._window_empty(lb, ub):
                return False
            clamped = self._holds([Atom.ge(self.tl, l) for l in lb])
            if not (clamped or self._erasure_equal_lb(t, place, chosen)):
                return False
        return True

    def _erasure_equal_lb(self, t: Transition, place: str,
                          chosen: dict[str, Stamp]) -> bool:
        full = self._forms(t, chosen)
        cut = self._forms(t, chosen, also_erase=(place,))
        return full is not None and cut is not None and full[0] == cut[0]

    def _h6(self, t: Transition, place: str, stamp: Var) -> bool:
        return (place not in t.tf.places()) and not t.tf.mentions_enab()

    def _h7(self, t: Transition, place: str, stamp: Var) -> bool:
        lb_has = _contains_place(t.tf.lb, place)
        ub_has = _contains_place(t.tf.ub, place)
        if not lb_has or ub_has:
            return False
        futures = self.future_tuples(t, place, stamp)
        if not futures:
            return False
        for full, stamps, aux in futures:
            erased = frozenset(p for p, s in full.items() if s is TA)
            lb = eval_expr(t.tf.lb, t.pre, stamps, erased)
            if lb is None:
                return False
            if not self._holds([Atom.ge(self.tl, l) for l in lb], aux):
                return False
        return True

    def _h8(self, t: Transition, place: str, stamp: Var) -> bool:
        if not (_max_shape(t.tf.lb) and _max_shape(t.tf.ub)):
            return False
        futures = self.future_tuples(t, place, stamp)
        if not futures:
            return False
        for full, stamps, _aux in futures:
            erased = frozenset(p for p, s in full.items() if s is TA)
            lb = eval_expr(t.tf.lb, t.pre, stamps, erased)
            ub = eval_expr(t.tf.ub, t.pre, stamps, erased)
            lb_cut = eval_expr(t.tf.lb, t.pre, stamps, erased | {place})
            ub_cut = eval_expr(t.tf.ub, t.pre, stamps, erased | {place})
            if lb is None or ub is None or lb_cut is None or ub_cut is None:
                return False
            if lb != lb_cut or ub != ub_cut:
                return False
        return True

    def _h9(self, t: Transition, place: str, stamp: Var) -> bool:
        futures = self.future_tuples(t, place, stamp)
        if not futures:
            return False
        for full, stamps, aux in futures:
            erased = frozenset(p for p, s in full.items() if s is TA)
            lb = eval_expr(t.tf.lb, t.pre, stamps, erased)
            ub = eval_expr(t.tf.ub, t.pre, stamps, erased)
            if lb is None or ub is None:
                return False
            atoms = [Atom.gt(self.tl, u) for u in ub]
            atoms += [Atom.ge(self.tl, l) for l in lb]
            if not self._holds(atoms, aux):
                return False
        return True

    def _h10(self, t: Transition, place: str, stamp: Var) -> bool:
        futures = self.future_tuples(t, place, stamp)
        if not futures:
            return False
        for full, stamps, aux in futures:
            erased = frozenset(p for p, s in full.items() if s is TA)
            lb = eval_expr(t.tf.lb, t.pre, stamps, erased)
            ub = eval_expr(t.tf.ub, t.pre, stamps, erased)
            if lb is None or ub is None:
                return False
            if not any(self._holds([Atom.gt(l, u) for u in ub], aux)
                       for l in lb):
                return False
            if not self._holds([Atom.ge(self.tl, l) for l in lb], aux):
                return False
        return True

    def _h11(self, t: Transition, place: str, stamp: Var) -> bool:
        tuples = self.tuples_using(t, place, stamp)
        if not tuples:
            return False
        for chosen in tuples:
            phi = {p: (s if p == place else TA) for p, s in chosen.items()}
            forms = self._forms(t, phi)
            if forms is None:
                return False
            if not self._never_enabled(*forms):
                return False
        return True


def erase_tf_ok(t: Transition, place: str) -> bool:
    """Definition-level precondition: both bounds survive erasing ``place``."""
    dummy = {p: AffineExpr.var(Var.aux(f"d_{p}")) for p in t.pre if p != place}
    lb = eval_expr(t.tf.lb, t.pre, dummy, frozenset({place}))
    ub = eval_expr(t.tf.ub, t.pre, dummy, frozenset({place}))
    return lb is not None and ub is not None


def ta_replace(state: SymbolicState, net: TBNet, relative: bool = True,
               trace: Optional[list] = None) -> list[SymbolicState]:
    """Replace inert timestamps with TA and re-normalize.

    Scans occurrences in place declaration order (stamps ascending) and
    applies replacements immediately, iterating to a fixpoint; the scan order
    is part of the engine's pinned behavior.  When the newest symbol leaves
    the marking, TL is materialized first so its timing information survives
    projection.
    """
    ctx = _TaContext(state, net)
    syms_before = state.symbols()
    replaced = False
    changed = True
    while changed:
        changed = False
        for place in net.places:
            stamps = ctx.bags.get(place)
            if not stamps:
                continue
            for stamp in sorted((s for s in stamps if s is not TA),
                                key=stamp_key):
                if ctx.replaceable(place, stamp):
                    idx = stamps.index(stamp)
                    stamps[idx] = TA
                    replaced = changed = True
                    if trace is not None:
                        trace.append((place, stamp))
    if not replaced:
        return [state]
    constraint = state.constraint
    if syms_before:
        newest = syms_before[-1]
        still = any(s == newest for b in ctx.bags.values() for s in b)
        if not still and not state.has_tl:
            constraint = constraint.conjoin(
                Atom.eq(AffineExpr.var(TL), AffineExpr.var(newest)))
    raw = SymbolicState.build(ctx.bags, constraint, net)
    return normalize(raw, net, relative=relative)


# ---------------------------------------------------------------------------
# inclusion


_EQUAL = "equal"
_SUPERSET = "superset"


def _place_pairings(sub_bag: tuple[Stamp, ...], super_bag: tuple[Stamp, ...],
                    cap: int) -> Optional[list[list[tuple[Stamp, Stamp]]]]:
    """Per-place pairing alternatives between sub and super stamps.

    Anonymous stamps of the sub must map to anonymous stamps of the super; a
    concrete sub stamp may map to a surplus anonymous super stamp (coverage).
    Returns None when counts rule a pairing out.  At most ``cap``
    alternatives are produced.
    """
    sub_ta = sum(1 for s in sub_bag if s is TA)
    sup_ta = sum(1 for s in super_bag if s is TA)
    if sub_ta > sup_ta:
        return None
    sub_syms = [s for s in sub_bag if s is not TA]
    sup_syms = [s for s in super_bag if s is not TA]
    surplus = sup_ta - sub_ta
    alternatives: list[list[tuple[Stamp, Stamp]]] = []
    for covered in itertools.combinations(range(len(sub_syms)), surplus):
        rest = [s for i, s in enumerate(sub_syms) if i not in covered]
        for perm in itertools.permutations(rest):
            alternatives.append(list(zip(perm, sup_syms)))
            if len(alternatives) > cap:
                return alternatives
    return alternatives


def includes(superstate: SymbolicState, substate: SymbolicState,
             max_alternatives: int = 64) -> Optional[str]:
    """Set relation between the represented markings.

    Returns ``"equal"``, ``"superset"`` (every sub marking is a super
    marking, strictly fewer), or None.  Enumeration of stamp pairings is
    bounded; past the bound only the order-aligned pairing is tried.
    """
    if superstate.topo_key() != substate.topo_key():
        return None
    per_place: list[list[list[tuple[Stamp, Stamp]]]] = []
    capped = False
    for (place, sup_bag), (_, sub_bag) in zip(superstate.marking,
                                              substate.marking):
        alts = _place_pairings(sub_bag, sup_bag, max_alternatives)
        if alts is None or not alts:
            return None
        per_place.append(alts)
    count = 1
    for alts in per_place:
        count *= len(alts)
    if count > max_alternatives:
        log.debug("inclusion: %d pairings capped to aligned order", count)
        per_place = [[alts[0]] for alts in per_place]

    ta_identical = all(
        sum(1 for s in a if s is TA) == sum(1 for s in b if s is TA)
        for (_, a), (_, b) in zip(superstate.marking, substate.marking))
    sub_c = substate.constraint_with_tl()
    super_c = superstate.constraint_with_tl()
    best: Optional[str] = None
    for combo in itertools.product(*per_place):
        sigma: dict[Var, Var] = {}
        ok = True
        for pairs in combo:
            for sub_s, sup_s in pairs:
                prev = sigma.get(sup_s)
                if prev is None:
                    sigma[sup_s] = sub_s
                elif prev != sub_s:
                    ok = False
                    break
            if not ok:
                break
        if not ok:
            continue
        translated = super_c.substitute(sigma)
        if not implies(sub_c, translated):
            continue
        injective = len(set(sigma.values())) == len(sigma)
        if ta_identical and injective and implies(translated, sub_c):
            return _EQUAL
        best = _SUPERSET
    return best
