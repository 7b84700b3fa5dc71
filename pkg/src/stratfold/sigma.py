"""Local stratification checking.

A stratification schema assigns each predicate a level and a linear measure
over its argument positions; the measure of a ground atom is the clamped
value max(0, expr) and atoms are ordered lexicographically by (level,
measure). A clause is accepted when, for every ground instance whose
constraint holds, the head's rank is >= the rank of each positive body atom
and > the rank of each negated one.

The per-clause check is symbolic. Argument values become solver variables;
the size of an unknown term becomes a size variable with ambient lower
bound 1 (every carrier element has size at least 1). A clause variable
counts as numerically forced when the constraint can only hold for numeric
instantiations of it: it occurs inside a proper arithmetic term, or equated
with a numeric non-variable term. Forced variables have size exactly 1.
Unforced variables appearing bare in a value position are handled by case
analysis: the numeric case uses the variable itself, the non-numeric case
zeroes its value contribution, weakens the constraint conjuncts that
mention it, and drops conditions whose atoms become undefined.

Order relations do not force numericity: the ground order is total, so
e.g. X >= 0 also holds for symbols and lists, which sit above all numbers.

The clamp makes the plain "head measure >= atom measure + 1" reading of the
negative condition wrong (both sides could be negative and clamp to equal
ranks), so the negative check proves two branches: when the atom expression
is nonnegative the head expression must exceed it, and when it is negative
the head expression must still be at least 1.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .terms import (
    Term,
    Var,
    Num,
    Sym,
    Struct,
    is_arith,
    subterms,
    term_size,
    term_vars,
)
from .clauses import (
    Atom,
    AtomicConstraint,
    Clause,
    Lit,
    Program,
    SigmaDecl,
    linearize,
)
from . import solver
from .solver import SatResult


@dataclass(frozen=True)
class SigmaEntry:
    level: int
    coeffs: tuple[tuple[str, int, int], ...] = ()
    const: int = 0

    def expr_text(self) -> str:
        from .parser import _sigma_expr_text

        return _sigma_expr_text(self.coeffs, self.const)


@dataclass
class StratSchema:
    entries: dict[str, SigmaEntry] = field(default_factory=dict)
    weights: dict[tuple[str, int], int] = field(default_factory=dict)

    @staticmethod
    def from_program(program: Program) -> "StratSchema":
        return StratSchema.from_decls(program.sigma_decls, program.weights)

    @staticmethod
    def from_decls(
        decls: Iterable[SigmaDecl], weights: Mapping[tuple[str, int], int]
    ) -> "StratSchema":
        schema = StratSchema()
        schema.weights = dict(weights)
        for d in decls:
            schema.entries[d.pred] = SigmaEntry(d.level, d.coeffs, d.const)
        return schema

    def with_entry(self, pred: str, entry: SigmaEntry) -> "StratSchema":
        out = StratSchema(dict(self.entries), dict(self.weights))
        out.entries[pred] = entry
        return out

    def to_decls(self, arities: Mapping[str, int]) -> tuple[SigmaDecl, ...]:
        out = []
        for pred in self.entries:
            e = self.entries[pred]
            out.append(
                SigmaDecl(pred, arities.get(pred, 0), e.level, e.expr_text(), e.coeffs, e.const)
            )
        return tuple(out)


@dataclass(frozen=True)
class Issue:
    clause_id: int
    lit_index: int | None
    reason: str


@dataclass(frozen=True)
class StratReport:
    status: str  # "stratified" | "violations" | "unknown"
    violations: tuple[Issue, ...] = ()
    unknowns: tuple[Issue, ...] = ()

    @property
    def ok(self) -> bool:
        return self.status == "stratified"


# --- ground measure -------------------------------------------------------------


def ground_sigma(atom: Atom, schema: StratSchema) -> tuple[int, Fraction]:
    """Rank of a ground atom: (level, clamped measure value)."""
    e = schema.entries.get(atom.pred)
    if e is None:
        raise KeyError(f"no sigma entry for predicate {atom.pred}")
    total = Fraction(e.const)
    for kind, pos, coeff in e.coeffs:
        t = atom.args[pos - 1]
        if kind == "val":
            total += coeff * (t.value if isinstance(t, Num) else Fraction(0))
        else:
            total += coeff * term_size(t, schema.weights)
    return e.level, max(Fraction(0), total)


# --- symbolic measure expressions -------------------------------------------------

_SIZE_PREFIX = "$size$"


def _size_var(v: Var) -> Var:
    return Var(f"{_SIZE_PREFIX}{v.name}")


@dataclass
class _SymExpr:
    coeffs: dict[Var, Fraction]
    const: Fraction
    size_vars: set[Var]  # ambient >= 1
    defined: bool  # False when the expression hits undefined material


def _forced_vars(constraint: Sequence[AtomicConstraint]) -> set[Var]:
    forced: set[Var] = set()
    for ac in constraint:
        for side in (ac.lhs, ac.rhs):
            for sub in subterms(side):
                if is_arith(sub):
                    for a in sub.args:
                        forced.update(term_vars(a))
        if ac.rel == "=":
            for v_side, t_side in ((ac.lhs, ac.rhs), (ac.rhs, ac.lhs)):
                if isinstance(v_side, Var) and not isinstance(t_side, Var):
                    if linearize(t_side) is not None:
                        forced.add(v_side)
    return forced


def _sym_size(
    t: Term,
    weights: Mapping[tuple[str, int], int],
    forced: set[Var],
    nonnumeric: set[Var],
) -> _SymExpr:
    """Symbolic weighted size of a term with free variables."""
    if isinstance(t, Num):
        return _SymExpr({}, Fraction(1), set(), True)
    if isinstance(t, Sym):
        return _SymExpr({}, Fraction(weights.get((t.name, 0), 1)), set(), True)
    if isinstance(t, Var):
        if t in forced:
            return _SymExpr({}, Fraction(1), set(), True)
        sv = _size_var(t)
        return _SymExpr({sv: Fraction(1)}, Fraction(0), {sv}, True)
    assert isinstance(t, Struct)
    if is_arith(t):
        # a defined arithmetic value is a number, size 1; undefined when a
        # non-numeric-case variable occurs inside
        if any(v in nonnumeric for v in term_vars(t)):
            return _SymExpr({}, Fraction(0), set(), False)
        return _SymExpr({}, Fraction(1), set(), True)
    coeffs: dict[Var, Fraction] = {}
    const = Fraction(weights.get((t.functor, len(t.args)), 1))
    svs: set[Var] = set()
    for a in t.args:
        sub = _sym_size(a, weights, forced, nonnumeric)
        if not sub.defined:
            return _SymExpr({}, Fraction(0), set(), False)
        for v, c in sub.coeffs.items():
            coeffs[v] = coeffs.get(v, Fraction(0)) + c
        const += sub.const
        svs |= sub.size_vars
    return _SymExpr(coeffs, const, svs, True)


def _sym_val(t: Term, nonnumeric: set[Var]) -> _SymExpr:
    """Symbolic numeric value of an argument term; non-numbers count 0."""
    if isinstance(t, Var):
        if t in nonnumeric:
            return _SymExpr({}, Fraction(0), set(), True)
        return _SymExpr({t: Fraction(1)}, Fraction(0), set(), True)
    lin = linearize(t)
    if lin is not None:
        if any(v in nonnumeric for v in lin[0]):
            return _SymExpr({}, Fraction(0), set(), False)
        return _SymExpr(dict(lin[0]), lin[1], set(), True)
    # symbols and constructors have value 0 by convention
    if not any(True for v in term_vars(t)):
        return _SymExpr({}, Fraction(0), set(), True)
    # a constructor containing variables still has value 0
    return _SymExpr({}, Fraction(0), set(), True)


def _atom_measure(
    atom: Atom,
    entry: SigmaEntry,
    weights: Mapping[tuple[str, int], int],
    forced: set[Var],
    nonnumeric: set[Var],
) -> _SymExpr:
    coeffs: dict[Var, Fraction] = {}
    const = Fraction(entry.const)
    svs: set[Var] = set()
    for kind, pos, coeff in entry.coeffs:
        if pos > len(atom.args):
            raise ValueError(
                f"sigma entry for {atom.pred} addresses argument {pos} but the"
                f" atom has arity {len(atom.args)}"
            )
        t = atom.args[pos - 1]
        part = (
            _sym_val(t, nonnumeric)
            if kind == "val"
            else _sym_size(t, weights, forced, nonnumeric)
        )
        if not part.defined:
            return _SymExpr({}, Fraction(0), set(), False)
        for v, c in part.coeffs.items():
            coeffs[v] = coeffs.get(v, Fraction(0)) + coeff * c
        const += coeff * part.const
        svs |= part.size_vars
    return _SymExpr(coeffs, const, svs, True)


def _atom_undefined(atom: Atom, nonnumeric: set[Var]) -> bool:
    """True when some argument contains a non-numeric-case variable inside a
    proper arithmetic term, making the whole atom denote nothing."""
    for t in atom.args:
        for sub in subterms(t):
            if is_arith(sub) and any(v in nonnumeric for v in term_vars(sub)):
                return True
    return False


def _lin_ac(coeffs: Mapping[Var, Fraction], const: Fraction, rel: str) -> AtomicConstraint:
    from .solver import _lin_to_ac

    return _lin_to_ac(dict(coeffs), const, rel)


def _diff_ge(a: _SymExpr, b: _SymExpr, delta: int) -> AtomicConstraint:
    """Constraint a >= b + delta, encoded as (b - a) + delta <= 0."""
    coeffs = dict(b.coeffs)
    for v, c in a.coeffs.items():
        coeffs[v] = coeffs.get(v, Fraction(0)) - c
    coeffs = {v: c for v, c in coeffs.items() if c != 0}
    return _lin_ac(coeffs, b.const - a.const + delta, "<=")


def _expr_cmp0(e: _SymExpr, rel: str) -> AtomicConstraint:
    """Constraint e REL 0 in linear encoding."""
    if rel == ">":  # e > 0  <=>  -e < 0
        return _lin_ac({v: -c for v, c in e.coeffs.items()}, -e.const, "<")
    if rel == ">=":
        return _lin_ac({v: -c for v, c in e.coeffs.items()}, -e.const, "<=")
    if rel == "<":
        return _lin_ac(dict(e.coeffs), e.const, "<")
    raise ValueError(rel)


# --- the per-clause check ----------------------------------------------------------

_MAX_CASE_VARS = 6


def check_clause(
    clause: Clause,
    schema: StratSchema,
    theory: str,
    clause_id: int = 0,
) -> tuple[list[Issue], list[Issue]]:
    """Violations and unknowns for one clause under the schema."""
    violations: list[Issue] = []
    unknowns: list[Issue] = []
    head_entry = schema.entries.get(clause.head.pred)
    if head_entry is None:
        unknowns.append(Issue(clause_id, None, f"no sigma entry for {clause.head.pred}"))
        return violations, unknowns
    forced = _forced_vars(clause.constraint)

    for idx, lit in enumerate(clause.body):
        entry = schema.entries.get(lit.atom.pred)
        if entry is None:
            unknowns.append(Issue(clause_id, idx, f"no sigma entry for {lit.atom.pred}"))
            continue
        if head_entry.level > entry.level:
            continue
        if head_entry.level < entry.level:
            sat = solver.is_satisfiable(clause.constraint, theory)
            if sat == SatResult.UNSAT:
                continue
            issue = Issue(
                clause_id,
                idx,
                f"head level {head_entry.level} below body level {entry.level}"
                f" for {lit.atom.pred}",
            )
            if sat == SatResult.SAT:
                violations.append(issue)
            else:
                unknowns.append(issue)
            continue
        # same level
        if not lit.positive and theory == "rationals":
            violations.append(
                Issue(
                    clause_id,
                    idx,
                    "same-level negation needs a discrete measure; over the"
                    " rationals the level must strictly increase",
                )
            )
            continue
        v_issues, u_issues = _check_same_level(
            clause, lit, idx, head_entry, entry, schema, theory, forced, clause_id
        )
        violations.extend(v_issues)
        unknowns.extend(u_issues)
    return violations, unknowns


def _bare_val_vars(atom: Atom, entry: SigmaEntry) -> set[Var]:
    out: set[Var] = set()
    for kind, pos, coeff in entry.coeffs:
        if kind == "val" and pos <= len(atom.args):
            t = atom.args[pos - 1]
            if isinstance(t, Var):
                out.add(t)
    return out


def _check_same_level(
    clause: Clause,
    lit: Lit,
    idx: int,
    head_entry: SigmaEntry,
    entry: SigmaEntry,
    schema: StratSchema,
    theory: str,
    forced: set[Var],
    clause_id: int,
) -> tuple[list[Issue], list[Issue]]:
    case_vars = sorted(
        (_bare_val_vars(clause.head, head_entry) | _bare_val_vars(lit.atom, entry))
        - forced,
        key=lambda v: v.name,
    )
    if len(case_vars) > _MAX_CASE_VARS:
        return [], [
            Issue(clause_id, idx, f"too many unforced value variables ({len(case_vars)})")
        ]
    for picks in itertools.product((False, True), repeat=len(case_vars)):
        nonnumeric = {v for v, non in zip(case_vars, picks) if non}
        verdict = _check_case(
            clause, lit, head_entry, entry, schema, theory, forced, nonnumeric
        )
        if verdict == "ok":
            continue
        reason = (
            f"{'positive' if lit.positive else 'negated'} {lit.atom.pred} at the"
            f" head's level: measure condition "
            f"{'not provable' if verdict == 'unknown' else 'fails'}"
        )
        if nonnumeric:
            reason += f" (non-numeric case for {', '.join(v.name for v in sorted(nonnumeric, key=lambda x: x.name))})"
        issue = Issue(clause_id, idx, reason)
        if verdict == "unknown":
            return [], [issue]
        return [issue], []
    return [], []


def _check_case(
    clause: Clause,
    lit: Lit,
    head_entry: SigmaEntry,
    entry: SigmaEntry,
    schema: StratSchema,
    theory: str,
    forced: set[Var],
    nonnumeric: set[Var],
) -> str:
    # impossible case: a constraint conjunct makes a non-numeric variable
    # appear in arithmetic, or equates it with a numeric term
    premises: list[AtomicConstraint] = []
    for ac in clause.constraint:
        mentions = {
            v
            for side in (ac.lhs, ac.rhs)
            for v in term_vars(side)
            if v in nonnumeric
        }
        if not mentions:
            if linearize(ac.lhs) is not None and linearize(ac.rhs) is not None:
                premises.append(ac)
            continue
        for side in (ac.lhs, ac.rhs):
            for sub in subterms(side):
                if is_arith(sub) and any(v in nonnumeric for v in term_vars(sub)):
                    return "ok"  # conjunct undefined: case cannot fire
        if ac.rel == "=":
            for v_side, t_side in ((ac.lhs, ac.rhs), (ac.rhs, ac.lhs)):
                if (
                    isinstance(v_side, Var)
                    and v_side in nonnumeric
                    and not isinstance(t_side, Var)
                    and linearize(t_side) is not None
                ):
                    return "ok"  # a symbol or tree never equals a number
        # otherwise the conjunct may still hold; weaken by dropping it
        continue
    if _atom_undefined(clause.head, nonnumeric) or _atom_undefined(lit.atom, nonnumeric):
        return "ok"  # the instance never materializes
    e_h = _atom_measure(clause.head, head_entry, schema.weights, forced, nonnumeric)
    e_a = _atom_measure(lit.atom, entry, schema.weights, forced, nonnumeric)
    if not (e_h.defined and e_a.defined):
        return "ok"
    for sv in sorted(e_h.size_vars | e_a.size_vars, key=lambda v: v.name):
        premises.append(_lin_ac({sv: Fraction(-1)}, Fraction(1), "<="))  # sv >= 1

    def prove(extra: AtomicConstraint, goal: AtomicConstraint) -> str:
        res = solver.is_satisfiable(premises + [extra, solver.complement_ac(goal)], theory)
        if res == SatResult.UNSAT:
            return "ok"
        if res == SatResult.SAT:
            return "violation"
        return "unknown"

    if lit.positive:
        return prove(_expr_cmp0(e_a, ">"), _diff_ge(e_h, e_a, 0))
    first = prove(_expr_cmp0(e_a, ">="), _diff_ge(e_h, e_a, 1))
    if first != "ok":
        return first
    zero = _SymExpr({}, Fraction(0), set(), True)
    return prove(_expr_cmp0(e_a, "<"), _diff_ge(e_h, zero, 1))


# --- whole-program check -------------------------------------------------------------


def check_program(program: Program, schema: StratSchema | None = None) -> StratReport:
    if schema is None:
        schema = StratSchema.from_program(program)
    violations: list[Issue] = []
    unknowns: list[Issue] = []
    for cid, clause in program.clauses:
        v, u = check_clause(clause, schema, program.theory, cid)
        violations.extend(v)
        unknowns.extend(u)
    if violations:
        return StratReport("violations", tuple(violations), tuple(unknowns))
    if unknowns:
        return StratReport("unknown", (), tuple(unknowns))
    return StratReport("stratified")


# --- extending the schema for a new definition -----------------------------------------


class NeedsAnnotation(Exception):
    def __init__(self, pred: str, detail: str):
        super().__init__(f"{pred}: {detail}")
        self.pred = pred
        self.detail = detail


def extend_sigma_for_definition(
    def_clauses: Sequence[Clause],
    schema: StratSchema,
    theory: str,
) -> SigmaEntry:
    """Synthesize an entry for the predicate defined by def_clauses: one level
    above everything its bodies mention, with the zero measure. The choice
    satisfies the clause conditions (checked, not assumed) but no attempt is
    made to show it is the least such extension."""
    pred = def_clauses[0].head.pred
    max_level = 0
    for c in def_clauses:
        for lit in c.body:
            e = schema.entries.get(lit.atom.pred)
            if e is None:
                raise NeedsAnnotation(pred, f"body predicate {lit.atom.pred} has no sigma entry")
            max_level = max(max_level, e.level)
    entry = SigmaEntry(max_level + 1)
    trial = schema.with_entry(pred, entry)
    for c in def_clauses:
        v, u = check_clause(c, trial, theory)
        if v or u:
            raise NeedsAnnotation(pred, "synthesized entry fails the clause conditions")
    return entry


def verify_entry_for_definition(
    def_clauses: Sequence[Clause],
    pred: str,
    entry: SigmaEntry,
    schema: StratSchema,
    theory: str,
) -> tuple[list[Issue], list[Issue]]:
    trial = schema.with_entry(pred, entry)
    violations: list[Issue] = []
    unknowns: list[Issue] = []
    for i, c in enumerate(def_clauses):
        v, u = check_clause(c, trial, theory, clause_id=-(i + 1))
        violations.extend(v)
        unknowns.extend(u)
    return violations, unknowns
