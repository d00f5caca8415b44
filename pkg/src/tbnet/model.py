"""Time-basic net model: places, transitions, time-function expressions."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional

from .constraints import LinearConstraint, Var, is_satisfiable
from .rational import format_decimal

_ZERO = Fraction(0)


class TBNetError(Exception):
    """Base class for model and engine errors."""

    code = "TBNET_ERROR"


@dataclass(frozen=True, slots=True)
class PlaceRef:
    """``coeff * place + offset`` (coeff defaults to 1)."""

    place: str
    coeff: Fraction = Fraction(1)
    offset: Fraction = _ZERO


@dataclass(frozen=True, slots=True)
class EnabRef:
    """``enab + offset``: the maximum timestamp of the enabling tuple."""

    offset: Fraction = _ZERO


@dataclass(frozen=True, slots=True)
class MaxExpr:
    """``max(args) + offset`` with at least one argument."""

    args: tuple["TimeExpr", ...]
    offset: Fraction = _ZERO


@dataclass(frozen=True, slots=True)
class ConstExpr:
    """A bare absolute-time constant; disables relative erasure."""

    value: Fraction


TimeExpr = PlaceRef | EnabRef | MaxExpr | ConstExpr


def expr_places(expr: TimeExpr) -> set[str]:
    if isinstance(expr, PlaceRef):
        return {expr.place}
    if isinstance(expr, MaxExpr):
        out: set[str] = set()
        for arg in expr.args:
            out |= expr_places(arg)
        return out
    return set()


def expr_mentions_enab(expr: TimeExpr) -> bool:
    if isinstance(expr, EnabRef):
        return True
    if isinstance(expr, MaxExpr):
        return any(expr_mentions_enab(a) for a in expr.args)
    return False


def expr_is_relative(expr: TimeExpr) -> bool:
    """Shift-covariant check: place coefficients sum to 1 along every branch
    and no bare constants occur."""
    if isinstance(expr, ConstExpr):
        return False
    if isinstance(expr, PlaceRef):
        return expr.coeff == 1
    if isinstance(expr, EnabRef):
        return True
    return all(expr_is_relative(a) for a in expr.args)


def shift_expr(expr: TimeExpr, offset: Fraction) -> TimeExpr:
    if isinstance(expr, PlaceRef):
        return PlaceRef(expr.place, expr.coeff, expr.offset + offset)
    if isinstance(expr, EnabRef):
        return EnabRef(expr.offset + offset)
    if isinstance(expr, MaxExpr):
        return MaxExpr(expr.args, expr.offset + offset)
    return ConstExpr(expr.value + offset)


def format_expr(expr: TimeExpr) -> str:
    if isinstance(expr, ConstExpr):
        return format_decimal(expr.value)
    if isinstance(expr, PlaceRef):
        base = expr.place if expr.coeff == 1 else f"{format_decimal(expr.coeff)} * {expr.place}"
    elif isinstance(expr, EnabRef):
        base = "enab"
    else:
        base = "max(" + ", ".join(format_expr(a) for a in expr.args) + ")"
    off = expr.offset if not isinstance(expr, ConstExpr) else _ZERO
    if off > 0:
        return f"{base} + {format_decimal(off)}"
    if off < 0:
        return f"{base} - {format_decimal(-off)}"
    return base


@dataclass(frozen=True, slots=True)
class TimeFunction:
    """Firing interval ``[lb, ub]``; monotonicity is enforced operationally
    by conjoining the last-firing lower bound at every firing."""

    lb: TimeExpr
    ub: TimeExpr

    def places(self) -> set[str]:
        return expr_places(self.lb) | expr_places(self.ub)

    def mentions_enab(self) -> bool:
        return expr_mentions_enab(self.lb) or expr_mentions_enab(self.ub)


@dataclass(frozen=True, slots=True)
class Transition:
    name: str
    pre: tuple[str, ...]
    post: tuple[str, ...]
    tf: TimeFunction
    weak: bool = False

    @property
    def strong(self) -> bool:
        return not self.weak


@dataclass(frozen=True)
class Diagnostic:
    code: str
    message: str

    def __str__(self) -> str:
        return f"{self.code}: {self.message}"


@dataclass(frozen=True)
class TBNet:
    """A parsed, validated time-basic net."""

    name: str
    places: tuple[str, ...]
    transitions: tuple[Transition, ...]
    initial_marking: tuple[tuple[str, tuple[int, ...]], ...]
    initial_constraint: LinearConstraint
    time_limit: Optional[Fraction] = None
    _place_index: dict = field(default_factory=dict, compare=False, repr=False)
    _by_name: dict = field(default_factory=dict, compare=False, repr=False)
    _postset: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        self._place_index.update({p: i for i, p in enumerate(self.places)})
        self._by_name.update({t.name: t for t in self.transitions})
        post: dict[str, list[Transition]] = {p: [] for p in self.places}
        for t in self.transitions:
            for p in t.pre:
                post[p].append(t)
        self._postset.update(post)

    def place_order(self, place: str) -> int:
        return self._place_index[place]

    def transition(self, name: str) -> Transition:
        return self._by_name[name]

    def consumers(self, place: str) -> tuple[Transition, ...]:
        """Transitions with ``place`` in their preset (the place postset)."""
        return tuple(self._postset[place])

    @property
    def is_relative(self) -> bool:
        return all(expr_is_relative(t.tf.lb) and expr_is_relative(t.tf.ub)
                   for t in self.transitions)


def validate(net: TBNet) -> list[Diagnostic]:
    """Static diagnostics: dead-token places, disabled erasure, and so on."""
    out: list[Diagnostic] = []
    dead = [p for p in net.places if not net.consumers(p)]
    if dead:
        out.append(Diagnostic(
            "DEAD_TOKEN_PLACES",
            "places with empty postset (tokens there are never consumed): "
            + ", ".join(dead)))
    for t in net.transitions:
        if not t.pre:
            out.append(Diagnostic("EMPTY_PRESET",
                                  f"transition {t.name} has an empty preset"))
    if not net.is_relative:
        out.append(Diagnostic(
            "ABSOLUTE_TIME",
            "a time function references absolute time; "
            "relative erasure is disabled"))
    if not is_satisfiable(net.initial_constraint):
        out.append(Diagnostic("UNSAT_INITIAL_CONSTRAINT",
                              "initial constraint is unsatisfiable"))
    return out


def print_net(net: TBNet) -> str:
    """Canonical model-file form; ``parse_net(print_net(net)) == net``."""
    lines = [f"net {net.name}"]
    lines.append("place " + ", ".join(net.places))
    for t in net.transitions:
        weak = " weak" if t.weak else ""
        post = (" " + " ".join(t.post)) if t.post else ""
        lines.append(
            f"trans {t.name}{weak} pre {' '.join(t.pre)} post{post} "
            f"tf [{format_expr(t.tf.lb)}, {format_expr(t.tf.ub)}]")
    tokens = []
    for place, syms in net.initial_marking:
        tokens.extend(f"{place}{{T{i}}}" for i in syms)
    lines.append("init " + " ".join(tokens))
    if not net.initial_constraint.is_true():
        lines.append("constraint "
                     + " && ".join(str(a) for a in net.initial_constraint.atoms))
    if net.time_limit is not None:
        lines.append(f"timelimit {format_decimal(net.time_limit)}")
    return "\n".join(lines) + "\n"


def marking_symbols(net: TBNet) -> set[int]:
    return {i for _, syms in net.initial_marking for i in syms}


def check_initial(net: TBNet) -> None:
    """Initial-state invariants: constraint satisfiable, symbols declared."""
    if not is_satisfiable(net.initial_constraint):
        raise TBNetError("UNSAT_INITIAL_CONSTRAINT: "
                         "the initial constraint has no solution")
    declared = marking_symbols(net)
    for var in net.initial_constraint.vars():
        if var.is_ts and var.index not in declared:
            raise TBNetError(
                f"UNKNOWN_SYMBOL: constraint mentions T{var.index} "
                "which is not in the initial marking")
