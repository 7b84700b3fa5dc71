"""Term language: variables, rational numerals, symbols, compound terms.

Lists are compound terms built from the binary constructor "." and the
empty-list symbol []. Arithmetic terms use the functors "+", "-", "*".
Everything is immutable and hashable so terms can key dicts and sets.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Mapping


@dataclass(frozen=True, slots=True)
class Var:
    name: str

    def __repr__(self) -> str:
        return f"Var({self.name})"


@dataclass(frozen=True, slots=True)
class Num:
    value: Fraction

    def __repr__(self) -> str:
        return f"Num({self.value})"


@dataclass(frozen=True, slots=True)
class Sym:
    name: str

    def __repr__(self) -> str:
        return f"Sym({self.name})"


@dataclass(frozen=True, slots=True)
class Struct:
    functor: str
    args: tuple["Term", ...]

    def __repr__(self) -> str:
        return f"Struct({self.functor}, {self.args})"


Term = Var | Num | Sym | Struct

ARITH_FUNCTORS = {"+", "-", "*"}

NIL = Sym("[]")


def num(v) -> Num:
    return Num(Fraction(v))


def cons(head: Term, tail: Term) -> Struct:
    return Struct(".", (head, tail))


def mklist(items: list[Term] | tuple[Term, ...], tail: Term = NIL) -> Term:
    out = tail
    for item in reversed(items):
        out = cons(item, out)
    return out


def list_parts(t: Term) -> tuple[list[Term], Term]:
    """Split a term into its cons-spine items and the final tail."""
    items: list[Term] = []
    while isinstance(t, Struct) and t.functor == "." and len(t.args) == 2:
        items.append(t.args[0])
        t = t.args[1]
    return items, t


def is_arith(t: Term) -> bool:
    return isinstance(t, Struct) and t.functor in ARITH_FUNCTORS and len(t.args) == 2


def subterms(t: Term) -> Iterator[Term]:
    yield t
    if isinstance(t, Struct):
        for a in t.args:
            yield from subterms(a)


def term_vars(t: Term) -> list[Var]:
    """Variables of t in first-occurrence order, without duplicates."""
    seen: dict[Var, None] = {}
    stack = [t]
    while stack:
        cur = stack.pop()
        if isinstance(cur, Var):
            seen.setdefault(cur, None)
        elif isinstance(cur, Struct):
            stack.extend(reversed(cur.args))
    return list(seen)


def is_ground(t: Term) -> bool:
    return not any(isinstance(s, Var) for s in subterms(t))


def apply_subst_term(t: Term, subst: Mapping[Var, Term]) -> Term:
    """Simultaneous substitution: bindings in subst never rewrite each other."""
    if isinstance(t, Var):
        return subst.get(t, t)
    if isinstance(t, Struct):
        new_args = tuple(apply_subst_term(a, subst) for a in t.args)
        if new_args == t.args:
            return t
        return Struct(t.functor, new_args)
    return t


# --- total order on ground terms -------------------------------------------
#
# numbers (by value) < symbols (by name) < compounds (arity, functor, args).
# Equality and the order relations in constraints use this order whenever a
# side is not numeric; on numbers it coincides with the numeric order.


def _rank(t: Term) -> int:
    if isinstance(t, Num):
        return 0
    if isinstance(t, Sym):
        return 1
    return 2


def compare_ground(a: Term, b: Term) -> int:
    ra, rb = _rank(a), _rank(b)
    if ra != rb:
        return -1 if ra < rb else 1
    if isinstance(a, Num):
        assert isinstance(b, Num)
        return -1 if a.value < b.value else (0 if a.value == b.value else 1)
    if isinstance(a, Sym):
        assert isinstance(b, Sym)
        return -1 if a.name < b.name else (0 if a.name == b.name else 1)
    assert isinstance(a, Struct) and isinstance(b, Struct)
    if len(a.args) != len(b.args):
        return -1 if len(a.args) < len(b.args) else 1
    if a.functor != b.functor:
        return -1 if a.functor < b.functor else 1
    for x, y in zip(a.args, b.args):
        c = compare_ground(x, y)
        if c != 0:
            return c
    return 0


def ground_sort_key(t: Term):
    if isinstance(t, Num):
        return (0, t.value)
    if isinstance(t, Sym):
        return (1, t.name)
    assert isinstance(t, Struct)
    return (2, len(t.args), t.functor, tuple(ground_sort_key(a) for a in t.args))


# --- weighted term size ------------------------------------------------------
#
# size(f(t1..tn)) = w(f/n) + sum(size(ti)); numerals and symbols have size 1
# unless a weight declaration overrides the symbol's weight.


def term_size(t: Term, weights: Mapping[tuple[str, int], int] | None = None) -> int:
    w = weights or {}
    if isinstance(t, Num):
        return 1
    if isinstance(t, Sym):
        return w.get((t.name, 0), 1)
    if isinstance(t, Var):
        raise ValueError("term_size requires a ground term")
    total = w.get((t.functor, len(t.args)), 1)
    for a in t.args:
        total += term_size(a, weights)
    return total


# --- printing ---------------------------------------------------------------

_INFIX_PREC = {"+": 1, "-": 1, "*": 2}


def format_term(t: Term) -> str:
    if isinstance(t, Var):
        return t.name
    if isinstance(t, Num):
        v = t.value
        if v.denominator == 1:
            return str(v.numerator)
        return f"{v.numerator}/{v.denominator}"
    if isinstance(t, Sym):
        return t.name
    if t.functor == "." and len(t.args) == 2:
        items, tail = list_parts(t)
        inner = ",".join(format_term(i) for i in items)
        if tail == NIL:
            return f"[{inner}]"
        return f"[{inner}|{format_term(tail)}]"
    if t.functor in ARITH_FUNCTORS and len(t.args) == 2:
        return _format_arith(t, 0)
    return f"{t.functor}({','.join(format_term(a) for a in t.args)})"


def _format_arith(t: Term, parent_prec: int) -> str:
    if is_arith(t):
        prec = _INFIX_PREC[t.functor]
        left = _format_arith(t.args[0], prec)
        # left-associative: the right operand of equal precedence needs parens
        right = _format_arith(t.args[1], prec + 1)
        s = f"{left}{t.functor}{right}"
        if prec < parent_prec:
            return f"({s})"
        return s
    if isinstance(t, Num) and t.value < 0:
        return f"({format_term(t)})"
    return format_term(t)
