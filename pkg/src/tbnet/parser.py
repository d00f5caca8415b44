"""Line-oriented model-file parser.

Format (``#`` starts a comment):

    net <name>
    place <id> [, <id> ...]
    trans <id> [weak] pre <id>+ post <id>* tf [<expr>, <expr>]
    init <place>{T<i>} ...          (repeatable, duplicates allowed)
    constraint <affine> (<=|<|=|>=|>) <affine> [&& ...]
    timelimit <rational>

    expr := enab | place | max(<expr>, ...) | expr + decimal
          | expr - decimal | decimal * place | decimal
"""

from __future__ import annotations

import re
from fractions import Fraction

from .constraints import AffineExpr, Atom, LinearConstraint, Var
from .model import (ConstExpr, EnabRef, MaxExpr, PlaceRef, TBNet, TBNetError,
                    TimeFunction, Transition, check_initial)
from .rational import parse_rational

_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*$")
_NUMBER = re.compile(r"-?\d+(?:\.\d+)?(?:/\d+)?$")
_TOKEN = re.compile(r"T(\d+)$")


class ParseError(TBNetError):
    code = "PARSE_ERROR"

    def __init__(self, line: int, reason: str, code: str = "PARSE_ERROR"):
        self.line = line
        self.reason = reason
        self.code = code
        super().__init__(f"line {line}: {code}: {reason}")


class _ExprParser:
    """Recursive-descent parser for time-function expressions."""

    def __init__(self, text: str, line: int):
        self.tokens = re.findall(r"max|enab|[A-Za-z_][A-Za-z0-9_]*"
                                 r"|\d+(?:\.\d+)?(?:/\d+)?|[(),+*-]", text)
        if "".join(self.tokens).replace(" ", "") != text.replace(" ", ""):
            raise ParseError(line, f"cannot tokenize expression {text!r}")
        self.pos = 0
        self.line = line

    def peek(self) -> str | None:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def take(self) -> str:
        tok = self.peek()
        if tok is None:
            raise ParseError(self.line, "unexpected end of expression")
        self.pos += 1
        return tok

    def expect(self, want: str) -> None:
        tok = self.take()
        if tok != want:
            raise ParseError(self.line, f"expected {want!r}, found {tok!r}")

    def parse_all(self):
        expr = self.parse()
        if self.peek() is not None:
            raise ParseError(self.line, f"trailing tokens after expression: "
                                        f"{' '.join(self.tokens[self.pos:])}")
        return expr

    def parse(self):
        expr = self.primary()
        while self.peek() in ("+", "-"):
            op = self.take()
            num = self.take()
            if not _NUMBER.match(num):
                raise ParseError(self.line, f"expected a number after {op!r}")
            off = parse_rational(num)
            from .model import shift_expr
            expr = shift_expr(expr, off if op == "+" else -off)
        return expr

    def primary(self):
        tok = self.take()
        if tok == "enab":
            return EnabRef()
        if tok == "max":
            self.expect("(")
            args = [self.parse()]
            while self.peek() == ",":
                self.take()
                args.append(self.parse())
            self.expect(")")
            return MaxExpr(tuple(args))
        if _NUMBER.match(tok):
            value = parse_rational(tok)
            if self.peek() == "*":
                self.take()
                place = self.take()
                if not _IDENT.match(place):
                    raise ParseError(self.line, f"expected a place after '*', found {place!r}")
                return PlaceRef(place, value)
            return ConstExpr(value)
        if _IDENT.match(tok):
            return PlaceRef(tok)
        raise ParseError(self.line, f"unexpected token {tok!r}")


def _parse_affine(text: str, line: int, symbols: dict[str, Var]) -> AffineExpr:
    tokens = re.findall(r"[A-Za-z_][A-Za-z0-9_]*\d*|\d+(?:\.\d+)?(?:/\d+)?|[+*-]",
                        text)
    if "".join(tokens).replace(" ", "") != text.replace(" ", ""):
        raise ParseError(line, f"cannot tokenize affine term {text!r}")
    terms: list[tuple[Var, Fraction]] = []
    const = Fraction(0)
    sign = Fraction(1)
    pending: Fraction | None = None
    i = 0
    while i < len(tokens):
        tok = tokens[i]
        if tok == "+":
            sign = Fraction(1)
        elif tok == "-":
            sign = Fraction(-1)
        elif _NUMBER.match(tok):
            value = parse_rational(tok) * sign
            if i + 2 < len(tokens) and tokens[i + 1] == "*":
                pending = value
                i += 1  # consume '*' on next loop step
            else:
                const += value
            sign = Fraction(1)
        elif tok == "*":
            pass
        else:
            var = symbols.get(tok)
            if var is None:
                match = _TOKEN.match(tok)
                if tok == "TL":
                    var = Var.tl()
                elif match:
                    var = Var.ts(int(match.group(1)))
                else:
                    raise ParseError(line, f"unknown symbol {tok!r} in constraint")
                symbols[tok] = var
            coeff = pending if pending is not None else sign
            terms.append((var, coeff))
            pending = None
            sign = Fraction(1)
        i += 1
    return AffineExpr.build(terms, const)


_RELS = ("<=", ">=", "<", ">", "=")


def _parse_constraint(text: str, line: int) -> LinearConstraint:
    atoms: list[Atom] = []
    symbols: dict[str, Var] = {}
    for part in text.split("&&"):
        part = part.strip()
        for rel in _RELS:
            idx = part.find(rel)
            if idx >= 0:
                lhs = _parse_affine(part[:idx], line, symbols)
                rhs = _parse_affine(part[idx + len(rel):], line, symbols)
                if rel == "<=":
                    atoms.append(Atom.le(lhs, rhs))
                elif rel == ">=":
                    atoms.append(Atom.ge(lhs, rhs))
                elif rel == "<":
                    atoms.append(Atom.lt(lhs, rhs))
                elif rel == ">":
                    atoms.append(Atom.gt(lhs, rhs))
                else:
                    atoms.extend(Atom.eq(lhs, rhs))
                break
        else:
            raise ParseError(line, f"no relation in constraint {part!r}")
    return LinearConstraint(atoms)


def parse_net(text: str) -> TBNet:
    """Parse a model file into a fully validated :class:`TBNet`."""
    name = "unnamed"
    places: list[str] = []
    transitions: list[Transition] = []
    marking: dict[str, list[int]] = {}
    constraint = LinearConstraint()
    time_limit = None

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        keyword, _, rest = line.partition(" ")
        rest = rest.strip()
        if keyword == "net":
            if not _IDENT.match(rest):
                raise ParseError(lineno, f"bad net name {rest!r}")
            name = rest
        elif keyword == "place":
            for ident in (p.strip() for p in rest.split(",")):
                if not _IDENT.match(ident):
                    raise ParseError(lineno, f"bad place name {ident!r}")
                if ident in places:
                    raise ParseError(lineno, f"duplicate place {ident!r}")
                places.append(ident)
        elif keyword == "trans":
            transitions.append(_parse_trans(rest, lineno, places))
        elif keyword == "init":
            for token in rest.split():
                match = re.match(r"([A-Za-z_][A-Za-z0-9_]*)\{T(\d+)\}$", token)
                if not match:
                    raise ParseError(lineno, f"bad init token {token!r}")
                place, sym = match.group(1), int(match.group(2))
                if place not in places:
                    raise ParseError(lineno, f"unknown place {place!r}",
                                     code="UNKNOWN_PLACE")
                marking.setdefault(place, []).append(sym)
        elif keyword == "constraint":
            constraint = constraint.conjoin(_parse_constraint(rest, lineno))
        elif keyword == "timelimit":
            time_limit = parse_rational(rest)
        else:
            raise ParseError(lineno, f"unknown directive {keyword!r}")

    initial = tuple((p, tuple(sorted(marking[p]))) for p in places if p in marking)
    net = TBNet(name, tuple(places), tuple(transitions), initial,
                constraint, time_limit)
    check_initial(net)
    return net


def _split_interval(body: str, lineno: int) -> tuple[str, str]:
    depth = 0
    for i, ch in enumerate(body):
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        elif ch == "," and depth == 0:
            return body[:i], body[i + 1:]
    raise ParseError(lineno, f"time function needs two bounds: [{body}]")


def _parse_trans(rest: str, lineno: int, places: list[str]) -> Transition:
    match = re.match(
        r"([A-Za-z_][A-Za-z0-9_]*)\s+(weak\s+)?pre\s+(.*?)\s+post\s*(.*?)\s*"
        r"tf\s*\[(.*)\]\s*$", rest)
    if not match:
        raise ParseError(lineno, f"malformed trans line: {rest!r}")
    tname, weak, pre_text, post_text, body = match.groups()
    lb_text, ub_text = _split_interval(body, lineno)
    pre = tuple(pre_text.split())
    post = tuple(post_text.split())
    if not pre:
        raise ParseError(lineno, f"transition {tname} has an empty preset")
    for p in pre + post:
        if p not in places:
            raise ParseError(lineno, f"unknown place {p!r} in transition {tname}",
                             code="UNKNOWN_PLACE")
    lb = _ExprParser(lb_text.strip(), lineno).parse_all()
    ub = _ExprParser(ub_text.strip(), lineno).parse_all()
    tf = TimeFunction(lb, ub)
    outside = tf.places() - set(pre)
    if outside:
        raise ParseError(
            lineno,
            f"time function of {tname} references non-preset places: "
            + ", ".join(sorted(outside)),
            code="TF_REFERENCES_NON_PRESET")
    return Transition(tname, pre, post, tf, weak=bool(weak))
