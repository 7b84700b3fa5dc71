"""Clauses, programs, and the operations every transformation relies on.

A clause is head :- constraint-part, literal-part. The constraint part is an
ordered multiset of atomic constraints over the active theory; the literal
part is a sequence of positive or negated user atoms. Disequations (!=) stay
atomic here; only the solver decomposes them.

Clause ids are assigned once (at parse or at the step that creates the
clause) and survive every step that leaves the clause untouched.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Iterable, Iterator, Mapping, Sequence

from .terms import (
    Term,
    Var,
    Num,
    Sym,
    Struct,
    apply_subst_term,
    format_term,
    ground_sort_key,
    is_arith,
    term_vars,
)

RELS = ("=", "!=", "<", "<=", ">=", ">")

# mirror of each order relation, used to orient constraints canonically
_FLIP = {"<": ">", ">": "<", "<=": ">=", ">=": "<=", "=": "=", "!=": "!="}


@dataclass(frozen=True, slots=True)
class Atom:
    pred: str
    args: tuple[Term, ...]

    @property
    def arity(self) -> int:
        return len(self.args)


@dataclass(frozen=True, slots=True)
class Lit:
    atom: Atom
    positive: bool

    def negate(self) -> "Lit":
        return Lit(self.atom, not self.positive)


@dataclass(frozen=True, slots=True)
class AtomicConstraint:
    rel: str
    lhs: Term
    rhs: Term

    def __post_init__(self):
        if self.rel not in RELS:
            raise ValueError(f"unknown relation {self.rel!r}")


@dataclass(frozen=True, slots=True)
class Clause:
    head: Atom
    constraint: tuple[AtomicConstraint, ...]
    body: tuple[Lit, ...]


@dataclass(frozen=True, slots=True)
class SigmaDecl:
    """One measure declaration.

    coeffs is a flat linear form over argument positions: each entry is
    (kind, argpos, coefficient) with kind "val" (numeric value of the
    argument) or "size" (weighted term size). expr_text is the canonical
    rendering of coeffs + const.
    """

    pred: str
    arity: int
    level: int
    expr_text: str
    coeffs: tuple[tuple[str, int, int], ...] = ()
    const: int = 0


@dataclass(frozen=True)
class Program:
    clauses: tuple[tuple[int, Clause], ...] = ()
    theory: str = "integers"
    weights: Mapping[tuple[str, int], int] = field(default_factory=dict)
    sigma_decls: tuple[SigmaDecl, ...] = ()
    constraint_decls: frozenset[tuple[str, int]] = frozenset()
    next_id: int = 1

    def by_id(self, cid: int) -> Clause:
        for i, c in self.clauses:
            if i == cid:
                return c
        raise KeyError(f"no clause with id {cid}")

    def has_id(self, cid: int) -> bool:
        return any(i == cid for i, _ in self.clauses)

    def ids(self) -> list[int]:
        return [i for i, _ in self.clauses]

    def preds(self) -> list[str]:
        seen: dict[str, None] = {}
        for _, c in self.clauses:
            seen.setdefault(c.head.pred, None)
            for lit in c.body:
                seen.setdefault(lit.atom.pred, None)
        return list(seen)

    def head_preds(self) -> set[str]:
        return {c.head.pred for _, c in self.clauses}

    def add_clauses(self, new: Sequence[Clause]) -> tuple["Program", list[int]]:
        nid = self.next_id
        added = []
        pairs = list(self.clauses)
        for c in new:
            pairs.append((nid, c))
            added.append(nid)
            nid += 1
        return replace(self, clauses=tuple(pairs), next_id=nid), added

    def remove_ids(self, ids: Iterable[int]) -> "Program":
        drop = set(ids)
        return replace(self, clauses=tuple(p for p in self.clauses if p[0] not in drop))

    def replace_clause(self, cid: int, new: Sequence[Clause]) -> tuple["Program", list[int]]:
        """Remove clause cid and splice its replacements at the same position."""
        nid = self.next_id
        added: list[int] = []
        pairs: list[tuple[int, Clause]] = []
        for i, c in self.clauses:
            if i == cid:
                for nc in new:
                    pairs.append((nid, nc))
                    added.append(nid)
                    nid += 1
            else:
                pairs.append((i, c))
        if not added and not new:
            pass
        return replace(self, clauses=tuple(pairs), next_id=nid), added


# --- variables and substitution ----------------------------------------------


def constraint_vars(acs: Iterable[AtomicConstraint]) -> list[Var]:
    seen: dict[Var, None] = {}
    for ac in acs:
        for v in term_vars(ac.lhs):
            seen.setdefault(v, None)
        for v in term_vars(ac.rhs):
            seen.setdefault(v, None)
    return list(seen)


def atom_vars(a: Atom) -> list[Var]:
    seen: dict[Var, None] = {}
    for t in a.args:
        for v in term_vars(t):
            seen.setdefault(v, None)
    return list(seen)


def clause_vars(c: Clause) -> list[Var]:
    """Free variables in first-occurrence order: head, constraints, body."""
    seen: dict[Var, None] = {}
    for v in atom_vars(c.head):
        seen.setdefault(v, None)
    for v in constraint_vars(c.constraint):
        seen.setdefault(v, None)
    for lit in c.body:
        for v in atom_vars(lit.atom):
            seen.setdefault(v, None)
    return list(seen)


def goal_vars(constraint: Iterable[AtomicConstraint], body: Iterable[Lit]) -> list[Var]:
    seen: dict[Var, None] = {}
    for v in constraint_vars(constraint):
        seen.setdefault(v, None)
    for lit in body:
        for v in atom_vars(lit.atom):
            seen.setdefault(v, None)
    return list(seen)


def apply_subst_atom(a: Atom, subst: Mapping[Var, Term]) -> Atom:
    return Atom(a.pred, tuple(apply_subst_term(t, subst) for t in a.args))


def apply_subst_ac(ac: AtomicConstraint, subst: Mapping[Var, Term]) -> AtomicConstraint:
    return AtomicConstraint(ac.rel, apply_subst_term(ac.lhs, subst), apply_subst_term(ac.rhs, subst))


def apply_subst_lit(lit: Lit, subst: Mapping[Var, Term]) -> Lit:
    return Lit(apply_subst_atom(lit.atom, subst), lit.positive)


def apply_subst_clause(c: Clause, subst: Mapping[Var, Term]) -> Clause:
    return Clause(
        apply_subst_atom(c.head, subst),
        tuple(apply_subst_ac(ac, subst) for ac in c.constraint),
        tuple(apply_subst_lit(l, subst) for l in c.body),
    )


def rename_apart(c: Clause, avoid: set[str]) -> Clause:
    """Rename every variable of c away from avoid, keeping base names readable."""
    subst: dict[Var, Term] = {}
    taken = set(avoid)
    for v in clause_vars(c):
        base = v.name.rstrip("0123456789") or v.name
        if v.name not in taken:
            taken.add(v.name)
            continue
        n = 1
        while f"{base}{n}" in taken:
            n += 1
        fresh = f"{base}{n}"
        taken.add(fresh)
        subst[v] = Var(fresh)
    if not subst:
        return c
    return apply_subst_clause(c, subst)


def canonical_rename(c: Clause) -> Clause:
    """Rename variables to V1, V2, ... in first-occurrence order."""
    subst = {v: Var(f"V{i+1}") for i, v in enumerate(clause_vars(c))}
    return apply_subst_clause(c, subst)


# --- equations between atoms --------------------------------------------------


def eq_constraint(a: Atom, b: Atom) -> tuple[AtomicConstraint, ...]:
    """Argumentwise equations a_i = b_i; callers guarantee same pred/arity."""
    if a.pred != b.pred or a.arity != b.arity:
        raise ValueError("eq_constraint needs same predicate and arity")
    return tuple(AtomicConstraint("=", s, t) for s, t in zip(a.args, b.args))


# --- definitions and dependencies ---------------------------------------------


def def_of(pred: str, program: Program) -> list[int]:
    return [i for i, c in program.clauses if c.head.pred == pred]


def dependency_graph(program: Program) -> dict[str, set[str]]:
    g: dict[str, set[str]] = {}
    for _, c in program.clauses:
        g.setdefault(c.head.pred, set())
        for lit in c.body:
            g[c.head.pred].add(lit.atom.pred)
    return g


def depends_on(p: str, q: str, program: Program) -> bool:
    """True iff there is a dependency path of length >= 1 from p to q."""
    g = dependency_graph(program)
    seen: set[str] = set()
    stack = list(g.get(p, ()))
    while stack:
        cur = stack.pop()
        if cur == q:
            return True
        if cur in seen:
            continue
        seen.add(cur)
        stack.extend(g.get(cur, ()))
    return False


# --- linear view of numeric terms ---------------------------------------------
#
# Terms built from numerals, variables, +, -, and * (with one constant factor)
# have a linear normal form: a coefficient map plus a constant. Terms with any
# other material (symbols, constructors) have none.

LinForm = tuple[dict[Var, Fraction], Fraction]


def linearize(t: Term) -> LinForm | None:
    if isinstance(t, Num):
        return {}, t.value
    if isinstance(t, Var):
        return {t: Fraction(1)}, Fraction(0)
    if is_arith(t):
        left = linearize(t.args[0])
        right = linearize(t.args[1])
        if left is None or right is None:
            return None
        lc, lk = left
        rc, rk = right
        if t.functor == "+":
            out = dict(lc)
            for v, c in rc.items():
                out[v] = out.get(v, Fraction(0)) + c
            return {v: c for v, c in out.items() if c != 0}, lk + rk
        if t.functor == "-":
            out = dict(lc)
            for v, c in rc.items():
                out[v] = out.get(v, Fraction(0)) - c
            return {v: c for v, c in out.items() if c != 0}, lk - rk
        # product: at least one side must be constant
        if not lc:
            return {v: c * lk for v, c in rc.items() if c * lk != 0}, lk * rk
        if not rc:
            return {v: c * rk for v, c in lc.items() if c * rk != 0}, lk * rk
        return None
    return None


# --- canonical forms ----------------------------------------------------------


def canon_ac(ac: AtomicConstraint) -> AtomicConstraint:
    """Orientation- and scaling-insensitive normal form of one constraint.

    Linear numeric constraints become `expr REL 0` style forms encoded back
    into a single left term with integer coefficients, deterministic variable
    order, and positive leading sign. Everything else is merely oriented by
    the fixed term order and relation mirroring.
    """
    lin_l = linearize(ac.lhs)
    lin_r = linearize(ac.rhs)
    if lin_l is not None and lin_r is not None:
        coeffs = dict(lin_l[0])
        for v, c in lin_r[0].items():
            coeffs[v] = coeffs.get(v, Fraction(0)) - c
        coeffs = {v: c for v, c in coeffs.items() if c != 0}
        const = lin_l[1] - lin_r[1]
        rel = ac.rel
        if rel in (">", ">="):
            rel = _FLIP[rel]
            coeffs = {v: -c for v, c in coeffs.items()}
            const = -const
        # lhs - rhs  REL  0, i.e. coeffs . vars  REL  -const
        if not coeffs:
            return AtomicConstraint(rel, Num(const), Num(Fraction(0)))
        ordered = sorted(coeffs.items(), key=lambda vc: vc[0].name)
        denom_lcm = 1
        for _, c in ordered:
            denom_lcm = _lcm(denom_lcm, c.denominator)
        denom_lcm = _lcm(denom_lcm, const.denominator)
        scaled = [(v, c * denom_lcm) for v, c in ordered]
        k = const * denom_lcm
        g = 0
        for _, c in scaled:
            g = _gcd(g, abs(int(c)))
        g = _gcd(g, abs(int(k)))
        if g > 1:
            scaled = [(v, c / g) for v, c in scaled]
            k = k / g
        if rel in ("=", "!=") and scaled[0][1] < 0:
            scaled = [(v, -c) for v, c in scaled]
            k = -k
        expr: Term | None = None
        for v, c in scaled:
            piece: Term = v if c == 1 else Struct("*", (Num(c), v))
            if c == -1 and expr is not None:
                expr = Struct("-", (expr, v))
                continue
            if c < 0 and expr is not None:
                expr = Struct("-", (expr, Struct("*", (Num(-c), v))))
                continue
            expr = piece if expr is None else Struct("+", (expr, piece))
        assert expr is not None
        return AtomicConstraint(rel, expr, Num(-k))
    # structural: orient by ground-insensitive printing order
    rel, lhs, rhs = ac.rel, ac.lhs, ac.rhs
    if rel in (">", ">="):
        rel, lhs, rhs = _FLIP[rel], rhs, lhs
    if rel in ("=", "!=") and format_term(rhs) < format_term(lhs):
        lhs, rhs = rhs, lhs
    return AtomicConstraint(rel, lhs, rhs)


def _gcd(a: int, b: int) -> int:
    while b:
        a, b = b, a % b
    return a


def _lcm(a: int, b: int) -> int:
    return a * b // _gcd(a, b) if a and b else max(a, b)


def tidy_ac(ac: AtomicConstraint) -> AtomicConstraint:
    """Human normal form of a linear constraint: positive coefficients kept
    on the left, the rest moved right, integral scaling, natural relation
    direction (X>=1, Y=Z+1). Non-linear constraints pass through."""
    lin_l = linearize(ac.lhs)
    lin_r = linearize(ac.rhs)
    if lin_l is None or lin_r is None:
        return ac
    coeffs = dict(lin_l[0])
    for v, c in lin_r[0].items():
        coeffs[v] = coeffs.get(v, Fraction(0)) - c
    coeffs = {v: c for v, c in coeffs.items() if c != 0}
    k = lin_r[1] - lin_l[1]  # coeffs . vars  REL  k
    if not coeffs:
        return AtomicConstraint(ac.rel, Num(lin_l[1]), Num(lin_r[1]))
    scale = 1
    for c in list(coeffs.values()) + [k]:
        scale = _lcm(scale, c.denominator)
    coeffs = {v: c * scale for v, c in coeffs.items()}
    k *= scale
    g = 0
    for c in coeffs.values():
        g = _gcd(g, abs(int(c)))
    g = _gcd(g, abs(int(k)))
    if g > 1:
        coeffs = {v: c / g for v, c in coeffs.items()}
        k = k / g
    rel = ac.rel
    ordered = sorted(coeffs.items(), key=lambda vc: vc[0].name)
    if ordered[0][1] < 0:
        coeffs = {v: -c for v, c in coeffs.items()}
        k = -k
        rel = _FLIP.get(rel, rel)
        ordered = sorted(coeffs.items(), key=lambda vc: vc[0].name)

    def side(items: list[tuple[Var, Fraction]], const: Fraction) -> Term:
        acc: Term | None = None
        for v, c in items:
            piece: Term = v if c == 1 else Struct("*", (Num(c), v))
            acc = piece if acc is None else Struct("+", (acc, piece))
        if acc is None:
            return Num(const)
        if const > 0:
            return Struct("+", (acc, Num(const)))
        if const < 0:
            return Struct("-", (acc, Num(-const)))
        return acc

    lhs = side([(v, c) for v, c in ordered if c > 0], Fraction(0))
    rhs = side([(v, -c) for v, c in ordered if c < 0], k)
    return AtomicConstraint(rel, lhs, rhs)


def clause_key(c: Clause) -> str:
    """Identity of a clause up to renaming, constraint orientation and scaling,
    and constraint order. Literal order is significant.

    Variables are numbered by first occurrence in head then body, so the
    stored constraint order (and whatever names a derivation generated)
    cannot influence the key; constraint-only locals come last."""
    seen: dict[Var, None] = {}
    for v in atom_vars(c.head):
        seen.setdefault(v, None)
    for lit in c.body:
        for v in atom_vars(lit.atom):
            seen.setdefault(v, None)
    for v in constraint_vars(c.constraint):
        seen.setdefault(v, None)
    subst = {v: Var(f"V{i+1}") for i, v in enumerate(seen)}
    c2 = apply_subst_clause(c, subst)
    c2 = Clause(c2.head, tuple(canon_ac(ac) for ac in c2.constraint), c2.body)
    parts = sorted(format_ac(ac) for ac in c2.constraint)
    return format_atom(c2.head) + " :- " + " & ".join(parts) + " | " + ", ".join(
        format_lit(l) for l in c2.body
    )


def programs_equal_modulo(a: Program, b: Program) -> bool:
    ka = sorted(clause_key(c) for _, c in a.clauses)
    kb = sorted(clause_key(c) for _, c in b.clauses)
    return ka == kb


def program_diff_keys(a: Program, b: Program) -> tuple[list[str], list[str]]:
    """Clause keys only in a, and only in b (multiset difference)."""
    from collections import Counter

    ca = Counter(clause_key(c) for _, c in a.clauses)
    cb = Counter(clause_key(c) for _, c in b.clauses)
    only_a = sorted((ca - cb).elements())
    only_b = sorted((cb - ca).elements())
    return only_a, only_b


# --- printing -----------------------------------------------------------------


def format_atom(a: Atom) -> str:
    if not a.args:
        return a.pred
    return f"{a.pred}({','.join(format_term(t) for t in a.args)})"


def format_lit(l: Lit) -> str:
    s = format_atom(l.atom)
    return s if l.positive else f"\\+{s}"


def format_ac(ac: AtomicConstraint) -> str:
    rel = "=<" if ac.rel == "<=" else ("\\=" if ac.rel == "!=" else ac.rel)
    return f"{format_term(ac.lhs)}{rel}{format_term(ac.rhs)}"


def format_clause(c: Clause) -> str:
    parts = [format_ac(ac) for ac in c.constraint] + [format_lit(l) for l in c.body]
    if not parts:
        return f"{format_atom(c.head)}."
    return f"{format_atom(c.head)} :- {', '.join(parts)}."


def format_program(p: Program, with_ids: bool = False) -> str:
    lines = []
    if p.theory != "integers":
        lines.append(f"#theory {p.theory}.")
    for (name, ar), w in sorted(p.weights.items()):
        lines.append(f"#weight {name}/{ar} = {w}.")
    for pr, ar in sorted(p.constraint_decls):
        lines.append(f"#constraint {pr}/{ar}.")
    for d in p.sigma_decls:
        lines.append(f"#sigma {d.pred}/{d.arity} = <{d.level}, {d.expr_text}>.")
    for i, c in p.clauses:
        if with_ids:
            lines.append(f"% [{i}]")
        lines.append(format_clause(c))
    return "\n".join(lines) + "\n"
