"""Exact-rational linear constraint algebra.

Conjunctions of (strict) linear inequalities over timestamp symbols, the
last-firing symbol TL and auxiliary variables.  Provides satisfiability,
implication, Fourier-Motzkin projection, expression bounds and the
shift-invariant (relative) canonical form.  Everything is exact: all
coefficients are :class:`fractions.Fraction`, never floats.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Optional, Sequence

from .rational import format_fraction

_ZERO = Fraction(0)
_ONE = Fraction(1)

_KIND_TS = 0
_KIND_TL = 1
_KIND_AUX = 2


class Var:
    """A constraint variable: timestamp symbol ``T<i>``, ``TL`` or a
    temporary.  Instances are interned, so equality is identity and hashing
    is cheap."""

    __slots__ = ("kind", "index", "name", "key")
    _interned: dict[tuple, "Var"] = {}

    def __new__(cls, kind: int, index: int = 0, name: str = ""):
        key = (kind, index, name)
        found = cls._interned.get(key)
        if found is None:
            found = super().__new__(cls)
            object.__setattr__(found, "kind", kind)
            object.__setattr__(found, "index", index)
            object.__setattr__(found, "name", name)
            object.__setattr__(found, "key", key)
            cls._interned[key] = found
        return found

    def __setattr__(self, *_args):
        raise AttributeError("Var is immutable")

    def __repr__(self) -> str:
        return f"Var({self.kind}, {self.index}, {self.name!r})"

    @staticmethod
    def ts(index: int) -> "Var":
        return Var(_KIND_TS, index)

    @staticmethod
    def tl() -> "Var":
        return Var(_KIND_TL)

    @staticmethod
    def aux(name: str) -> "Var":
        return Var(_KIND_AUX, 0, name)

    @property
    def is_ts(self) -> bool:
        return self.kind == _KIND_TS

    @property
    def is_tl(self) -> bool:
        return self.kind == _KIND_TL

    @property
    def is_aux(self) -> bool:
        return self.kind == _KIND_AUX

    def sort_key(self) -> tuple:
        return self.key

    def __str__(self) -> str:
        if self.kind == _KIND_TS:
            return f"T{self.index}"
        if self.kind == _KIND_TL:
            return "TL"
        return f"${self.name}"


TL = Var.tl()


class AffineExpr:
    """Affine expression ``sum(coeff * var) + const`` with no zero terms."""

    __slots__ = ("terms", "const", "_hash")

    def __init__(self, terms: tuple[tuple[Var, Fraction], ...] = (),
                 const: Fraction = _ZERO):
        self.terms = terms
        self.const = const
        self._hash = hash((terms, const))

    def __hash__(self) -> int:
        return self._hash

    def __eq__(self, other: object) -> bool:
        return (isinstance(other, AffineExpr) and self._hash == other._hash
                and self.terms == other.terms and self.const == other.const)

    def __repr__(self) -> str:
        return f"AffineExpr({self.terms!r}, {self.const!r})"

    @staticmethod
    def build(terms: Mapping[Var, Fraction] | Iterable[tuple[Var, Fraction]],
              const: Fraction = _ZERO) -> "AffineExpr":
        acc: dict[Var, Fraction] = {}
        items = terms.items() if hasattr(terms, "items") else terms
        for var, coeff in items:
            acc[var] = acc.get(var, 0) + coeff
        kept = tuple(sorted(((v, c) for v, c in acc.items() if c != 0),
                            key=lambda it: it[0].sort_key()))
        return AffineExpr(kept, Fraction(const))

    @staticmethod
    def var(v: Var, coeff: Fraction = _ONE, offset: Fraction = _ZERO) -> "AffineExpr":
        if coeff == 0:
            return AffineExpr((), Fraction(offset))
        return AffineExpr(((v, Fraction(coeff)),), Fraction(offset))

    @staticmethod
    def constant(value: Fraction) -> "AffineExpr":
        return AffineExpr((), Fraction(value))

    def coeff(self, v: Var) -> Fraction:
        for var, c in self.terms:
            if var is v:
                return c
        return 0

    def vars(self) -> tuple[Var, ...]:
        return tuple(v for v, _ in self.terms)

    def add(self, other: "AffineExpr") -> "AffineExpr":
        left, right = self.terms, other.terms
        out = []
        i = j = 0
        while i < len(left) and j < len(right):
            lv, lc = left[i]
            rv, rc = right[j]
            if lv is rv:
                s = lc + rc
                if s != 0:
                    out.append((lv, s))
                i += 1
                j += 1
            elif lv.key < rv.key:
                out.append(left[i])
                i += 1
            else:
                out.append(right[j])
                j += 1
        out.extend(left[i:])
        out.extend(right[j:])
        return AffineExpr(tuple(out), self.const + other.const)

    def sub(self, other: "AffineExpr") -> "AffineExpr":
        return self.add(other.scale(Fraction(-1)))

    def scale(self, factor: Fraction) -> "AffineExpr":
        if factor == 0:
            return AffineExpr((), _ZERO)
        return AffineExpr(tuple((v, c * factor) for v, c in self.terms),
                          self.const * factor)

    def shift(self, offset: Fraction) -> "AffineExpr":
        return AffineExpr(self.terms, self.const + offset)

    def substitute(self, mapping: Mapping[Var, Var]) -> "AffineExpr":
        return AffineExpr.build(
            [(mapping.get(v, v), c) for v, c in self.terms], self.const)

    def evaluate(self, assignment: Mapping[Var, Fraction]) -> Fraction:
        return sum((c * assignment[v] for v, c in self.terms), self.const)

    def is_constant(self) -> bool:
        return not self.terms

    def __str__(self) -> str:
        parts = []
        for v, c in self.terms:
            if not parts:
                lead = "" if c == 1 else ("-" if c == -1 else format_fraction(c) + "*")
                parts.append(f"{lead}{v}")
            else:
                sign = " + " if c > 0 else " - "
                mag = abs(c)
                lead = "" if mag == 1 else format_fraction(mag) + "*"
                parts.append(f"{sign}{lead}{v}")
        if self.const or not parts:
            if parts:
                sign = " + " if self.const > 0 else " - "
                parts.append(f"{sign}{format_fraction(abs(self.const))}")
            else:
                parts.append(format_fraction(self.const))
        return "".join(parts)


class Atom:
    """Canonicalized inequality ``expr <= 0`` (or ``expr < 0`` when strict).

    Equalities are represented as two opposite non-strict atoms.  Atoms are
    scaled so that integer coefficients with gcd 1 result, which makes equal
    constraints structurally equal.
    """

    __slots__ = ("expr", "strict", "_hash", "_skey")

    def __init__(self, expr: AffineExpr, strict: bool):
        self.expr = expr
        self.strict = strict
        self._hash = hash((expr, strict))
        self._skey = (tuple((v.key, c) for v, c in expr.terms),
                      expr.const, strict)

    def __hash__(self) -> int:
        return self._hash

    def __eq__(self, other: object) -> bool:
        return (isinstance(other, Atom) and self._hash == other._hash
                and self.strict == other.strict and self.expr == other.expr)

    def __repr__(self) -> str:
        return f"Atom({self.expr!r}, {self.strict!r})"

    @staticmethod
    def _canonical(expr: AffineExpr, strict: bool) -> "Atom":
        # Scale to plain-int coefficients with gcd 1: structural equality of
        # equal atoms, and cheap arithmetic in the elimination loops.
        if expr.terms:
            from math import gcd, lcm
            terms = expr.terms
            const = expr.const
            if type(const) is not int or any(type(c) is not int
                                             for _, c in terms):
                denom = lcm(*(c.denominator for _, c in terms),
                            const.denominator
                            if type(const) is not int else 1)
                terms = tuple((v, int(c * denom)) for v, c in terms)
                const = int(const * denom)
            shrink = gcd(*(c for _, c in terms), const)
            if shrink > 1:
                terms = tuple((v, c // shrink) for v, c in terms)
                const //= shrink
            return Atom(AffineExpr(terms, const), strict)
        return Atom(expr, strict)

    @staticmethod
    def le(lhs: AffineExpr, rhs: AffineExpr) -> "Atom":
        return Atom._canonical(lhs.sub(rhs), False)

    @staticmethod
    def lt(lhs: AffineExpr, rhs: AffineExpr) -> "Atom":
        return Atom._canonical(lhs.sub(rhs), True)

    @staticmethod
    def ge(lhs: AffineExpr, rhs: AffineExpr) -> "Atom":
        return Atom.le(rhs, lhs)

    @staticmethod
    def gt(lhs: AffineExpr, rhs: AffineExpr) -> "Atom":
        return Atom.lt(rhs, lhs)

    @staticmethod
    def eq(lhs: AffineExpr, rhs: AffineExpr) -> tuple["Atom", "Atom"]:
        return (Atom.le(lhs, rhs), Atom.le(rhs, lhs))

    def negate(self) -> "Atom":
        # not(e <= 0) is -e < 0; not(e < 0) is -e <= 0
        return Atom._canonical(self.expr.scale(Fraction(-1)), not self.strict)

    def substitute(self, mapping: Mapping[Var, Var]) -> "Atom":
        return Atom._canonical(self.expr.substitute(mapping), self.strict)

    def is_trivially_true(self) -> bool:
        if self.expr.terms:
            return False
        c = self.expr.const
        return c < 0 or (c == 0 and not self.strict)

    def is_trivially_false(self) -> bool:
        if self.expr.terms:
            return False
        c = self.expr.const
        return c > 0 or (c == 0 and self.strict)

    def sort_key(self) -> tuple:
        return self._skey

    def holds(self, assignment: Mapping[Var, Fraction]) -> bool:
        value = self.expr.evaluate(assignment)
        return value < 0 if self.strict else value <= 0

    def __str__(self) -> str:
        # Display with the highest-ordered variable positive, unit leading
        # coefficients where possible, constant on the right: "TL - T0 >= 1/5".
        expr, rel = self.expr, ("<" if self.strict else "<=")
        if expr.terms:
            from math import gcd
            shrink = gcd(*(c for _, c in expr.terms))
            scale = Fraction(1, shrink) if shrink > 1 else Fraction(1)
            if expr.terms[-1][1] < 0:
                scale = -scale
                rel = ">" if self.strict else ">="
            if scale != 1:
                expr = expr.scale(scale)
        terms = AffineExpr(tuple(reversed(expr.terms)), _ZERO)
        # reversed so the dominant (latest) variable prints first
        lhs = str(terms) if expr.terms else "0"
        return f"{lhs} {rel} {format_fraction(Fraction(-expr.const))}"


class LinearConstraint:
    """An immutable conjunction of atoms.  TRUE is the empty conjunction."""

    __slots__ = ("atoms", "_hash")

    def __init__(self, atoms: Iterable[Atom] = ()):
        cleaned: dict[tuple, Atom] = {}
        false_atom: Optional[Atom] = None
        for atom in atoms:
            if atom.is_trivially_true():
                continue
            if atom.is_trivially_false():
                false_atom = atom
                continue
            key = atom.expr.terms
            other = cleaned.get(key)
            if other is None:
                cleaned[key] = atom
            else:
                # same linear part: keep the tighter bound
                if (atom.expr.const, atom.strict) > (other.expr.const, other.strict):
                    cleaned[key] = atom
        kept = sorted(cleaned.values(), key=lambda a: a._skey)
        if false_atom is not None:
            kept = [false_atom]
        self.atoms: tuple[Atom, ...] = tuple(kept)
        self._hash = hash(self.atoms)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, LinearConstraint) and self.atoms == other.atoms

    def __hash__(self) -> int:
        return self._hash

    def __str__(self) -> str:
        if not self.atoms:
            return "TRUE"
        return " && ".join(str(a) for a in self.atoms)

    def is_true(self) -> bool:
        return not self.atoms

    def vars(self) -> tuple[Var, ...]:
        seen: dict[Var, None] = {}
        for atom in self.atoms:
            for v, _ in atom.expr.terms:
                seen.setdefault(v, None)
        return tuple(sorted(seen, key=Var.sort_key))

    def conjoin(self, extra: "LinearConstraint | Iterable[Atom]") -> "LinearConstraint":
        atoms = extra.atoms if isinstance(extra, LinearConstraint) else tuple(extra)
        return LinearConstraint(self.atoms + tuple(atoms))

    def substitute(self, mapping: Mapping[Var, Var]) -> "LinearConstraint":
        return LinearConstraint(a.substitute(mapping) for a in self.atoms)

    def holds(self, assignment: Mapping[Var, Fraction]) -> bool:
        return all(a.holds(assignment) for a in self.atoms)


TRUE = LinearConstraint()


@dataclass(frozen=True, slots=True)
class Bounds:
    """Exact infimum/supremum of an expression over a constraint's solutions.

    ``None`` endpoints mean unbounded; the flags record open endpoints
    (value not attained).
    """

    lo: Optional[Fraction]
    lo_open: bool
    hi: Optional[Fraction]
    hi_open: bool


def _combine(pos: Atom, neg: Atom, var: Var) -> Atom:
    a = pos.expr.coeff(var)
    b = neg.expr.coeff(var)
    # a > 0, b < 0: resultant has the variable eliminated
    expr = pos.expr.scale(-b).add(neg.expr.scale(a))
    return Atom._canonical(expr, pos.strict or neg.strict)


def _substitute_equality(atoms: Sequence[Atom], var: Var,
                         pivot: Atom) -> list[Atom]:
    """Eliminate ``var`` using an equality pivot: replace it by its solved
    value in every other atom.  Exact and blowup-free."""
    c = pivot.expr.coeff(var)
    out: list[Atom] = []
    for atom in atoms:
        if atom is pivot:
            continue
        d = atom.expr.coeff(var)
        if d == 0:
            out.append(atom)
            continue
        sgn = 1 if c > 0 else -1
        expr = atom.expr.scale(abs(c)).add(pivot.expr.scale(-sgn * d))
        combined = Atom._canonical(expr, atom.strict)
        if not combined.is_trivially_true():
            out.append(combined)
    return out


def _find_equality_var(atoms: Sequence[Atom], candidates: set[Var],
                       ) -> Optional[tuple[Var, Atom]]:
    """A variable bound by an equality pair, with one pivot atom.

    Integer-key lookup: an equality is a non-strict atom whose exact
    negation is also present.
    """
    index: dict[tuple, Atom] = {}
    for atom in atoms:
        if not atom.strict and atom.expr.terms:
            index[(atom.expr.terms, atom.expr.const)] = atom
    best: Optional[tuple[tuple, Var, Atom]] = None
    for (terms, const), atom in index.items():
        neg = (tuple((v, -c) for v, c in terms), -const)
        if neg in index:
            for v, _ in terms:
                if v in candidates:
                    key = v.sort_key()
                    if best is None or key < best[0]:
                        best = (key, v, atom)
                    break
    if best is None:
        return None
    return best[1], best[2]


def _eliminate_one(atoms: Sequence[Atom], var: Var,
                   pivot: Optional[Atom] = None) -> list[Atom]:
    if pivot is not None:
        return _substitute_equality(atoms, var, pivot)
    pos: list[Atom] = []
    neg: list[Atom] = []
    rest: list[Atom] = []
    for atom in atoms:
        c = atom.expr.coeff(var)
        if c > 0:
            pos.append(atom)
        elif c < 0:
            neg.append(atom)
        else:
            rest.append(atom)
    for p in pos:
        for n in neg:
            combined = _combine(p, n, var)
            if not combined.is_trivially_true():
                rest.append(combined)
    return rest


def _choose_var(atoms: Sequence[Atom], candidates: set[Var],
                ) -> tuple[Var, Optional[Atom]]:
    """Next variable to eliminate: one bound by an equality if any (its
    elimination is a substitution), else the smallest pos*neg product."""
    found = _find_equality_var(atoms, candidates)
    if found is not None:
        return found
    best: Optional[Var] = None
    best_cost = None
    for var in sorted(candidates, key=Var.sort_key):
        pos = sum(1 for a in atoms if a.expr.coeff(var) > 0)
        neg = sum(1 for a in atoms if a.expr.coeff(var) < 0)
        cost = pos * neg - pos - neg
        if best_cost is None or cost < best_cost:
            best, best_cost = var, cost
    assert best is not None
    return best, None


_SAT_CACHE: dict[LinearConstraint, bool] = {}


def is_satisfiable(c: LinearConstraint) -> bool:
    """Exact satisfiability over the rationals, strict atoms included."""
    if not c.atoms:
        return True
    cached = _SAT_CACHE.get(c)
    if cached is not None:
        return cached
    work = list(c.atoms)
    result = True
    while True:
        live: set[Var] = set()
        for atom in work:
            if atom.is_trivially_false():
                result = False
                break
            live.update(atom.expr.vars())
        else:
            if not live:
                break
            var, pivot = _choose_var(work, live)
            work = LinearConstraint(_eliminate_one(work, var, pivot)).atoms
            continue
        break
    if len(_SAT_CACHE) > 1 << 20:
        _SAT_CACHE.clear()
    _SAT_CACHE[c] = result
    return result


_IMPLIES_CACHE: dict[tuple[LinearConstraint, Atom], bool] = {}
_WITNESS_CACHE: dict[LinearConstraint, dict[Var, Fraction]] = {}


def _witness(c: LinearConstraint) -> dict[Var, Fraction]:
    point = _WITNESS_CACHE.get(c)
    if point is None:
        point = sample_solution(c)
        if len(_WITNESS_CACHE) > 1 << 18:
            _WITNESS_CACHE.clear()
        _WITNESS_CACHE[c] = point
    return point


def _implies_atom(c: LinearConstraint, atom: Atom) -> bool:
    key = (c, atom)
    cached = _IMPLIES_CACHE.get(key)
    if cached is None:
        # a witness of c violating the atom settles non-implication cheaply
        point = _witness(c)
        value = sum((cf * point.get(v, _ZERO) for v, cf in atom.expr.terms),
                    Fraction(atom.expr.const))
        if (value > 0) if not atom.strict else (value >= 0):
            cached = False
        else:
            cached = not is_satisfiable(c.conjoin((atom.negate(),)))
        if len(_IMPLIES_CACHE) > 1 << 20:
            _IMPLIES_CACHE.clear()
        _IMPLIES_CACHE[key] = cached
    return cached


def implies(c: LinearConstraint, d: LinearConstraint) -> bool:
    """True iff every solution of ``c`` satisfies ``d`` (``c`` satisfiable).

    Variables of ``d`` that do not occur in ``c`` are resolved when ``d``
    binds them by an equality (a defined value, like a fresh firing time);
    any other atom over such a variable cannot hold universally and
    falsifies the implication.
    """
    if d.is_true():
        return True
    c_vars = set(c.vars())
    extra = {v for v in d.vars() if v not in c_vars}
    while extra:
        found = _find_equality_var(d.atoms, extra)
        if found is None:
            break
        var, pivot = found
        d = LinearConstraint(_substitute_equality(d.atoms, var, pivot))
        extra = {v for v in d.vars() if v not in c_vars}
    if extra:
        return False
    return all(_implies_atom(c, atom) for atom in d.atoms)


def prune_redundant(c: LinearConstraint) -> LinearConstraint:
    """Drop atoms implied by the remaining ones (one pass, single-atom
    checks; each removal preserves equivalence)."""
    atoms = list(c.atoms)
    i = 0
    while i < len(atoms):
        others = LinearConstraint(atoms[:i] + atoms[i + 1:])
        # direct satisfiability: witness points never help here, every
        # sub-conjunction is unique
        if not is_satisfiable(others.conjoin((atoms[i].negate(),))):
            atoms.pop(i)
        else:
            i += 1
    return LinearConstraint(atoms)


def eliminate(c: LinearConstraint, variables: Iterable[Var],
              prune: bool = True) -> LinearConstraint:
    """Fourier-Motzkin projection of ``c`` onto the remaining variables."""
    targets = set(variables)
    work = list(c.atoms)
    while True:
        live = {v for a in work for v in a.expr.vars()} & targets
        if not live:
            break
        var, pivot = _choose_var(work, live)
        work = LinearConstraint(_eliminate_one(work, var, pivot)).atoms
    result = LinearConstraint(work)
    if prune and len(result.atoms) > 1:
        result = prune_redundant(result)
    return result


def bounds_of(c: LinearConstraint, e: AffineExpr) -> Bounds:
    """Exact infimum and supremum of ``e`` over the solutions of ``c``.

    ``c`` must be satisfiable.  Computed by adjoining a fresh variable equal
    to ``e`` and projecting everything else away.
    """
    z = Var.aux("bound")
    defining = Atom.eq(AffineExpr.var(z), e)
    system = c.conjoin(defining)
    others = [v for v in system.vars() if v != z]
    projected = eliminate(system, others, prune=False)
    lo = hi = None
    lo_open = hi_open = False
    for atom in projected.atoms:
        coeff = atom.expr.coeff(z)
        if coeff == 0:
            continue
        bound = Fraction(-atom.expr.const, 1) / coeff
        if coeff > 0:
            if hi is None or bound < hi or (bound == hi and atom.strict):
                hi, hi_open = bound, atom.strict
        else:
            if lo is None or bound > lo or (bound == lo and atom.strict):
                lo, lo_open = bound, atom.strict
    return Bounds(lo, lo_open, hi, hi_open)


def sample_solution(c: LinearConstraint) -> dict[Var, Fraction]:
    """One exact solution of a satisfiable constraint.

    Single Fourier-Motzkin sweep recording each eliminated variable's atoms,
    then back-substitution picking interval midpoints (endpoints when
    degenerate).
    """
    work = list(c.atoms)
    trail: list[tuple[Var, list[Atom]]] = []
    while True:
        live = {v for a in work for v in a.expr.vars()}
        if not live:
            break
        var, pivot = _choose_var(work, live)
        involving = [a for a in work if a.expr.coeff(var) != 0]
        trail.append((var, involving))
        work = LinearConstraint(_eliminate_one(work, var, pivot)).atoms
    done = {var for var, _ in trail}
    for var in c.vars():
        # canceled out mid-sweep: unconstrained from that point on
        if var not in done:
            trail.append((var, []))
    assignment: dict[Var, Fraction] = {}
    for var, involving in reversed(trail):
        lo = hi = None
        lo_open = hi_open = False
        for atom in involving:
            coeff = atom.expr.coeff(var)
            rest = sum((cf * assignment[v] for v, cf in atom.expr.terms
                        if v != var), Fraction(atom.expr.const))
            bound = -rest / coeff
            if coeff > 0:
                if hi is None or bound < hi or (bound == hi and atom.strict):
                    hi, hi_open = bound, atom.strict
            else:
                if lo is None or bound > lo or (bound == lo and atom.strict):
                    lo, lo_open = bound, atom.strict
        if lo is None and hi is None:
            value = _ZERO
        elif lo is None:
            value = hi - (1 if hi_open else 0)
        elif hi is None:
            value = lo + (1 if lo_open else 0)
        elif lo == hi:
            value = lo
        else:
            value = (lo + hi) / 2
        assignment[var] = value
    return assignment


def canonicalize_relative(c: LinearConstraint, prune: bool = True,
                          ) -> LinearConstraint:
    """Shift-invariant closure: the strongest consequence of ``c`` over
    pairwise differences.

    Equivalent to substituting every variable ``V`` by ``V + d`` for a fresh
    ``d`` and projecting ``d`` away.  Pure constant bounds on single
    variables disappear; difference atoms survive unchanged.
    """
    shift = Var.aux("shift")
    shifted = []
    for atom in c.atoms:
        coeff_sum = sum(coeff for _, coeff in atom.expr.terms)
        expr = atom.expr if coeff_sum == 0 else AffineExpr.build(
            list(atom.expr.terms) + [(shift, Fraction(coeff_sum))],
            atom.expr.const)
        shifted.append(Atom._canonical(expr, atom.strict))
    return eliminate(LinearConstraint(shifted), [shift], prune=prune)
