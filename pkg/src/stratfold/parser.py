"""Concrete syntax.

Programs are lists of directives and clauses, each ended by a full stop:

    #theory naturals.
    #weight k/0 = 7.
    #constraint gte/2.
    #sigma even(X) = <1, X>.
    #sigma p/1 = <2, 0>.

    even(X) :- X=0.
    even(X+1) :- X>=0, \\+even(X).

Variables start with an upper-case letter or underscore. Constraint
relations are = \\= < =< <= >= >. Lists use [a,b|T] and []. Arithmetic
uses infix + - * with the usual precedence; n/m is a rational literal.
Comments run from % to end of line.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .terms import Term, Var, Num, Sym, Struct, NIL, mklist
from .clauses import (
    Atom,
    AtomicConstraint,
    Clause,
    Lit,
    Program,
    SigmaDecl,
)


class ParseError(Exception):
    def __init__(self, msg: str, line: int = 0, col: int = 0):
        super().__init__(f"{msg} (line {line}, col {col})" if line else msg)
        self.line = line
        self.col = col


@dataclass
class _Tok:
    kind: str
    text: str
    line: int
    col: int


_PUNCT2 = {"\\+": "NOT", "\\=": "NEQ", "!=": "NEQ", "=<": "LE", "<=": "LE", ">=": "GE", ":-": "IF"}
_PUNCT1 = {
    "(": "LP", ")": "RP", "[": "LB", "]": "RB", "|": "BAR", ",": "COMMA",
    ".": "DOT", "=": "EQ", "<": "LT", ">": "GT", "+": "PLUS", "-": "MINUS",
    "*": "STAR", "/": "SLASH", "#": "HASH",
}


def _tokenize(text: str) -> list[_Tok]:
    toks: list[_Tok] = []
    i, line, col = 0, 1, 1
    n = len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        if ch == "%":
            while i < n and text[i] != "\n":
                i += 1
            continue
        two = text[i : i + 2]
        if two in _PUNCT2:
            toks.append(_Tok(_PUNCT2[two], two, line, col))
            i += 2
            col += 2
            continue
        if ch.isdigit():
            j = i
            while j < n and text[j].isdigit():
                j += 1
            toks.append(_Tok("NUM", text[i:j], line, col))
            col += j - i
            i = j
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            word = text[i:j]
            kind = "VAR" if (ch == "_" or ch.isupper()) else "ID"
            toks.append(_Tok(kind, word, line, col))
            col += j - i
            i = j
            continue
        if ch in _PUNCT1:
            toks.append(_Tok(_PUNCT1[ch], ch, line, col))
            i += 1
            col += 1
            continue
        raise ParseError(f"unexpected character {ch!r}", line, col)
    toks.append(_Tok("EOF", "", line, col))
    return toks


class _Parser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.pos = 0

    def peek(self, ahead: int = 0) -> _Tok:
        return self.toks[min(self.pos + ahead, len(self.toks) - 1)]

    def next(self) -> _Tok:
        t = self.toks[self.pos]
        if t.kind != "EOF":
            self.pos += 1
        return t

    def expect(self, kind: str) -> _Tok:
        t = self.next()
        if t.kind != kind:
            raise ParseError(f"expected {kind}, found {t.text!r}", t.line, t.col)
        return t

    def fail(self, msg: str):
        t = self.peek()
        raise ParseError(msg, t.line, t.col)

    # --- terms ---------------------------------------------------------------

    def term(self) -> Term:
        return self.additive()

    def additive(self) -> Term:
        t = self.multiplicative()
        while self.peek().kind in ("PLUS", "MINUS"):
            op = self.next().text
            rhs = self.multiplicative()
            t = Struct(op, (t, rhs))
        return t

    def multiplicative(self) -> Term:
        t = self.primary()
        while self.peek().kind == "STAR":
            self.next()
            rhs = self.primary()
            t = Struct("*", (t, rhs))
        return t

    def primary(self) -> Term:
        t = self.peek()
        if t.kind == "MINUS":
            self.next()
            return Num(-self.numeral())
        if t.kind == "NUM":
            return Num(self.numeral())
        if t.kind == "VAR":
            self.next()
            return Var(t.text)
        if t.kind == "ID":
            self.next()
            if self.peek().kind == "LP":
                self.next()
                args = [self.term()]
                while self.peek().kind == "COMMA":
                    self.next()
                    args.append(self.term())
                self.expect("RP")
                return Struct(t.text, tuple(args))
            return Sym(t.text)
        if t.kind == "LB":
            self.next()
            if self.peek().kind == "RB":
                self.next()
                return NIL
            items = [self.term()]
            while self.peek().kind == "COMMA":
                self.next()
                items.append(self.term())
            tail: Term = NIL
            if self.peek().kind == "BAR":
                self.next()
                tail = self.term()
            self.expect("RB")
            return mklist(items, tail)
        if t.kind == "LP":
            self.next()
            inner = self.term()
            self.expect("RP")
            return inner
        self.fail(f"expected a term, found {t.text!r}")
        raise AssertionError

    def numeral(self) -> Fraction:
        t = self.expect("NUM")
        val = Fraction(int(t.text))
        if self.peek().kind == "SLASH" and self.peek(1).kind == "NUM":
            self.next()
            d = self.expect("NUM")
            val = Fraction(int(t.text), int(d.text))
        return val

    # --- literals and constraints ---------------------------------------------

    _RELTOK = {"EQ": "=", "NEQ": "!=", "LT": "<", "LE": "<=", "GE": ">=", "GT": ">"}

    def body_item(self) -> AtomicConstraint | Lit:
        if self.peek().kind == "NOT":
            self.next()
            return Lit(self.atom(), False)
        t = self.term()
        k = self.peek().kind
        if k in self._RELTOK:
            self.next()
            rhs = self.term()
            return AtomicConstraint(self._RELTOK[k], t, rhs)
        return Lit(self.to_atom(t), True)

    def atom(self) -> Atom:
        return self.to_atom(self.term())

    def to_atom(self, t: Term) -> Atom:
        if isinstance(t, Sym):
            return Atom(t.name, ())
        if isinstance(t, Struct) and t.functor not in ("+", "-", "*", "."):
            return Atom(t.functor, t.args)
        self.fail(f"not a valid atom: {t!r}")
        raise AssertionError

    def clause(self) -> Clause:
        head = self.atom()
        constraint: list[AtomicConstraint] = []
        body: list[Lit] = []
        if self.peek().kind == "IF":
            self.next()
            while True:
                item = self.body_item()
                if isinstance(item, AtomicConstraint):
                    constraint.append(item)
                else:
                    body.append(item)
                if self.peek().kind != "COMMA":
                    break
                self.next()
        self.expect("DOT")
        return Clause(head, tuple(constraint), tuple(body))

    # --- directives ------------------------------------------------------------

    def directive(self):
        self.expect("HASH")
        name = self.expect("ID").text
        if name == "theory":
            th = self.expect("ID").text
            if th not in ("integers", "rationals", "naturals"):
                self.fail(f"unknown theory {th!r}")
            self.expect("DOT")
            return ("theory", th)
        if name == "constraint":
            p = self.expect("ID").text
            self.expect("SLASH")
            ar = int(self.expect("NUM").text)
            self.expect("DOT")
            return ("constraint", (p, ar))
        if name == "weight":
            f = self.expect("ID").text
            self.expect("SLASH")
            ar = int(self.expect("NUM").text)
            self.expect("EQ")
            w = int(self.expect("NUM").text)
            self.expect("DOT")
            return ("weight", ((f, ar), w))
        if name == "sigma":
            return ("sigma", self.sigma_decl())
        self.fail(f"unknown directive #{name}")
        raise AssertionError

    def sigma_decl(self) -> SigmaDecl:
        pred = self.expect("ID").text
        template: list[Var] | None = None
        if self.peek().kind == "SLASH":
            self.next()
            arity = int(self.expect("NUM").text)
        elif self.peek().kind == "LP":
            self.next()
            template = []
            while True:
                v = self.expect("VAR")
                template.append(Var(v.text))
                if self.peek().kind != "COMMA":
                    break
                self.next()
            self.expect("RP")
            if len(set(template)) != len(template):
                self.fail("sigma template variables must be distinct")
            arity = len(template)
        else:
            arity = 0
        self.expect("EQ")
        self.expect("LT")
        neg = False
        if self.peek().kind == "MINUS":
            self.next()
            neg = True
        level = int(self.expect("NUM").text)
        if neg:
            level = -level
        self.expect("COMMA")
        expr = self.term()
        self.expect("GT")
        self.expect("DOT")
        coeffs, const = _sigma_expr(expr, template, self)
        text = _sigma_expr_text(coeffs, const)
        return SigmaDecl(pred, arity, level, text, coeffs, const)

    # --- whole programs ----------------------------------------------------------

    def program(self) -> Program:
        theory = "integers"
        weights: dict[tuple[str, int], int] = {}
        sig: list[SigmaDecl] = []
        cdecls: set[tuple[str, int]] = set()
        clauses: list[Clause] = []
        while self.peek().kind != "EOF":
            if self.peek().kind == "HASH":
                kind, payload = self.directive()
                if kind == "theory":
                    theory = payload
                elif kind == "weight":
                    weights[payload[0]] = payload[1]
                elif kind == "constraint":
                    cdecls.add(payload)
                else:
                    sig.append(payload)
            else:
                clauses.append(self.clause())
        declared = {name for name, _ in cdecls}
        for i, c in enumerate(clauses):
            for atom in [c.head] + [l.atom for l in c.body]:
                if atom.pred in declared:
                    raise ParseError(
                        f"{atom.pred} is declared as a constraint predicate;"
                        f" only the built-in relations (= \\= < =< >= >) may"
                        f" appear in the constraint part (clause {i + 1})"
                    )
        prog = Program(
            clauses=tuple((i + 1, c) for i, c in enumerate(clauses)),
            theory=theory,
            weights=weights,
            sigma_decls=tuple(sig),
            constraint_decls=frozenset(cdecls),
            next_id=len(clauses) + 1,
        )
        return prog


def _sigma_expr(expr: Term, template: list[Var] | None, p: _Parser):
    """Flatten a measure expression to positional (kind, argpos) coefficients.

    In template form, a bare template variable denotes the numeric value of
    that argument and size(V) its weighted size. In positional form, val(i)
    and size(i) address arguments directly.
    """
    coeffs: dict[tuple[str, int], int] = {}
    const = 0

    def pos_of(v: Var) -> int:
        if template is None:
            p.fail(f"variable {v.name} needs a sigma template")
        try:
            return template.index(v) + 1
        except ValueError:
            p.fail(f"{v.name} is not a sigma template variable")
        raise AssertionError

    def walk(t: Term, mult: int):
        nonlocal const
        if isinstance(t, Num):
            if t.value.denominator != 1:
                p.fail("sigma coefficients must be integers")
            const += mult * int(t.value)
            return
        if isinstance(t, Var):
            coeffs[("val", pos_of(t))] = coeffs.get(("val", pos_of(t)), 0) + mult
            return
        if isinstance(t, Struct) and t.functor in ("val", "size") and len(t.args) == 1:
            a = t.args[0]
            if isinstance(a, Num) and a.value.denominator == 1:
                key = (t.functor, int(a.value))
            elif isinstance(a, Var):
                key = (t.functor, pos_of(a))
            else:
                p.fail(f"bad {t.functor}(...) argument in sigma expression")
                raise AssertionError
            if not (1 <= key[1]):
                p.fail(f"{t.functor} argument position must be >= 1")
            coeffs[key] = coeffs.get(key, 0) + mult
            return
        if isinstance(t, Struct) and t.functor == "+" and len(t.args) == 2:
            walk(t.args[0], mult)
            walk(t.args[1], mult)
            return
        if isinstance(t, Struct) and t.functor == "-" and len(t.args) == 2:
            walk(t.args[0], mult)
            walk(t.args[1], -mult)
            return
        if isinstance(t, Struct) and t.functor == "*" and len(t.args) == 2:
            l, r = t.args
            if isinstance(l, Num) and l.value.denominator == 1:
                walk(r, mult * int(l.value))
                return
            if isinstance(r, Num) and r.value.denominator == 1:
                walk(l, mult * int(r.value))
                return
            p.fail("sigma expressions must be linear")
        p.fail(f"bad sigma expression part: {t!r}")

    walk(expr, 1)
    return tuple(sorted((k, v, c) for (k, v), c in coeffs.items() if c != 0)), const


def _sigma_expr_text(coeffs, const: int) -> str:
    parts = []
    for kind, pos, c in coeffs:
        base = f"{kind}({pos})"
        if c == 1:
            parts.append(base)
        else:
            parts.append(f"{c}*{base}")
    if const or not parts:
        parts.append(str(const))
    out = parts[0]
    for piece in parts[1:]:
        out += f"+{piece}" if not piece.startswith("-") else piece
    return out


# --- public API ---------------------------------------------------------------


def parse_program(text: str) -> Program:
    return _Parser(text).program()


def parse_clause(text: str) -> Clause:
    p = _Parser(text)
    c = p.clause()
    if p.peek().kind != "EOF":
        p.fail("trailing input after clause")
    return c


def parse_term(text: str) -> Term:
    p = _Parser(text)
    t = p.term()
    if p.peek().kind != "EOF":
        p.fail("trailing input after term")
    return t


def parse_constraints(text: str) -> tuple[AtomicConstraint, ...]:
    """Comma-separated atomic constraints, e.g. "X>=0, Y=X+1"."""
    text = text.strip()
    if not text or text == "true":
        return ()
    p = _Parser(text)
    out = []
    while True:
        item = p.body_item()
        if not isinstance(item, AtomicConstraint):
            p.fail("expected an atomic constraint")
        out.append(item)
        if p.peek().kind != "COMMA":
            break
        p.next()
    if p.peek().kind != "EOF":
        p.fail("trailing input after constraints")
    return tuple(out)


def parse_sigma_directives(text: str) -> list[SigmaDecl]:
    """Parse a file of #sigma/#weight lines (weights are folded in by caller)."""
    prog = parse_program(text)
    return list(prog.sigma_decls)
