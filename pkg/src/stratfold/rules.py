"""The ten transformation rules.

Each rule is a pure function from (session view, parameters) to a RuleResult
holding the successor program, the possibly extended sigma schema, and a
replay-ready parameter record. Failed applicability conditions raise Refusal
with a machine-readable tag naming exactly the condition that failed;
malformed requests (unknown ids, unparseable texts, bad indexes) raise
StepParamError instead and never count as refusals.

The session view is duck-typed: anything with program, schema, theory,
p0_preds, seen_preds, pred_int and defs (sequence of ledger entries exposing
pred / clause / index) works. The derivation-session module provides the
real one and owns all bookkeeping; nothing here mutates shared state.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace as dc_replace
from typing import Iterable, Iterator, Mapping, Sequence

from .terms import Num, Struct, Sym, Term, Var, term_vars
from .clauses import (
    Atom,
    AtomicConstraint,
    Clause,
    Lit,
    Program,
    SigmaDecl,
    apply_subst_ac,
    apply_subst_clause,
    apply_subst_lit,
    atom_vars,
    canon_ac,
    clause_vars,
    constraint_vars,
    def_of,
    depends_on,
    eq_constraint,
    format_ac,
    format_atom,
    format_clause,
    format_lit,
    format_term,
    rename_apart,
    tidy_ac,
)
from .solver import (
    NotApplicable,
    SatResult,
    complement_ac,
    entails,
    equivalent_projected,
    is_satisfiable,
    project,
    solved_form,
)
from . import sigma as sigma_mod
from .sigma import SigmaEntry, StratSchema


class StepParamError(ValueError):
    """The request does not denote a rule application at all."""


class Refusal(Exception):
    """A well-formed rule application whose applicability condition failed."""

    def __init__(self, rule: str, tag: str, message: str):
        super().__init__(f"{rule} refused [{tag}]: {message}")
        self.rule = rule
        self.tag = tag
        self.message = message

    def to_payload(self) -> dict:
        return {"rule": self.rule, "tag": self.tag, "message": self.message}


@dataclass
class RuleResult:
    program: Program
    schema: StratSchema
    rule: str
    params: dict
    added: list[int]
    removed: list[int]
    notes: list[str]
    # bookkeeping hints for the session ledger
    defs_added: list[tuple[int, Clause]] = field(default_factory=list)
    def_pred_used: str | None = None
    unfolded_clause_id: int | None = None


def _get_clause(program: Program, rule: str, cid) -> Clause:
    if not isinstance(cid, int):
        raise StepParamError(f"{rule}: clause id must be an integer, got {cid!r}")
    try:
        return program.by_id(cid)
    except KeyError:
        raise Refusal(rule, "ClauseNotInProgram", f"no clause with id {cid}")


def _parse_clause_text(rule: str, text) -> Clause:
    from .parser import ParseError, parse_clause

    if not isinstance(text, str):
        raise StepParamError(f"{rule}: expected clause text, got {text!r}")
    try:
        return parse_clause(text)
    except ParseError as e:
        raise StepParamError(f"{rule}: {e}")


def _parse_constraint_text(rule: str, text) -> tuple[AtomicConstraint, ...]:
    from .parser import ParseError, parse_constraints

    if not isinstance(text, str):
        raise StepParamError(f"{rule}: expected constraint text, got {text!r}")
    if text.strip() in ("", "true"):
        return ()
    try:
        return parse_constraints(text)
    except ParseError as e:
        raise StepParamError(f"{rule}: {e}")


def _strat_check_added(
    rule: str, clauses: Sequence[Clause], schema: StratSchema, theory: str
) -> None:
    """Refuse unless each clause provably satisfies the sigma conditions."""
    for c in clauses:
        v, u = sigma_mod.check_clause(c, schema, theory)
        if v:
            raise Refusal(
                rule,
                "StratificationLost",
                f"{format_clause(c)} violates the stratification conditions:"
                f" {v[0].reason}",
            )
        if u:
            raise Refusal(
                rule,
                "StratificationLost",
                f"{format_clause(c)} cannot be shown stratified: {u[0].reason}",
            )


# --- R1: definition introduction ------------------------------------------------------


def r1_define(session, defs: Sequence[str], sigma: str | None = None) -> RuleResult:
    if not defs:
        raise StepParamError("R1: at least one definition clause is required")
    clauses = [_parse_clause_text("R1", t) for t in defs]
    head = clauses[0].head
    for c in clauses[1:]:
        if c.head != head:
            raise StepParamError(
                "R1: definition clauses must share one head atom;"
                f" got {format_atom(head)} and {format_atom(c.head)}"
            )
    newp = head.pred

    # (i) freshness across the whole sequence so far
    if newp in session.seen_preds:
        raise Refusal(
            "R1",
            "NonFreshPredicate",
            f"{newp} already occurs in the transformation sequence",
        )

    # (ii) distinct head variables, each used by some body
    if not all(isinstance(a, Var) for a in head.args) or len(set(head.args)) != len(
        head.args
    ):
        raise Refusal(
            "R1",
            "HeadVarNotInBody",
            f"head arguments of {format_atom(head)} must be distinct variables",
        )
    body_vars: set[Var] = set()
    for c in clauses:
        body_vars |= set(constraint_vars(c.constraint))
        for lit in c.body:
            body_vars |= set(atom_vars(lit.atom))
    for a in head.args:
        if a not in body_vars:
            raise Refusal(
                "R1",
                "HeadVarNotInBody",
                f"head variable {format_term(a)} occurs in no definition body",
            )

    # (iii) body predicates must come from the initial program
    for c in clauses:
        for lit in c.body:
            if lit.atom.pred not in session.p0_preds:
                raise Refusal(
                    "R1",
                    "BodyPredNotInP0",
                    f"body predicate {lit.atom.pred} does not occur in the"
                    " initial program",
                )

    # (iv) sigma extension, supplied or synthesized, verified either way
    notes = []
    if sigma is not None:
        from .parser import ParseError, parse_sigma_directives

        try:
            decls = parse_sigma_directives(sigma)
        except ParseError as e:
            raise StepParamError(f"R1: bad sigma directive: {e}")
        if len(decls) != 1 or decls[0].pred != newp:
            raise StepParamError(f"R1: sigma directive must declare {newp} once")
        decl = decls[0]
        if decl.arity != len(head.args):
            raise StepParamError(
                f"R1: sigma directive arity {decl.arity} does not match"
                f" {newp}/{len(head.args)}"
            )
        entry = SigmaEntry(decl.level, decl.coeffs, decl.const)
        v, u = sigma_mod.verify_entry_for_definition(
            clauses, newp, entry, session.schema, session.theory
        )
        if v or u:
            issue = (v or u)[0]
            raise Refusal(
                "R1", "SigmaRejected", f"supplied sigma entry fails: {issue.reason}"
            )
        notes.append(f"sigma entry for {newp} verified against the definition")
    else:
        try:
            entry = sigma_mod.extend_sigma_for_definition(
                clauses, session.schema, session.theory
            )
        except sigma_mod.NeedsAnnotation as e:
            raise Refusal("R1", "SigmaRejected", f"cannot synthesize an entry: {e.detail}")
        notes.append(f"sigma entry for {newp} synthesized at level {entry.level}")

    schema2 = session.schema.with_entry(newp, entry)
    program2, ids = session.program.add_clauses(clauses)
    decl_out = SigmaDecl(
        newp, len(head.args), entry.level, entry.expr_text(), entry.coeffs, entry.const
    )
    program2 = dc_replace(program2, sigma_decls=program2.sigma_decls + (decl_out,))
    params: dict = {"defs": list(defs)}
    if sigma is not None:
        params["sigma"] = sigma
    return RuleResult(
        program=program2,
        schema=schema2,
        rule="R1",
        params=params,
        added=ids,
        removed=[],
        notes=notes,
        defs_added=list(zip(ids, clauses)),
    )


# --- R2: definition elimination -------------------------------------------------------


def r2_eliminate(session, pred: str) -> RuleResult:
    if not isinstance(pred, str):
        raise StepParamError(f"R2: predicate name expected, got {pred!r}")
    if pred in session.pred_int:
        raise Refusal(
            "R2",
            "PredicateOfInterestDependsOnIt",
            f"{pred} is itself a predicate of interest (conservative reading)",
        )
    for q in sorted(session.pred_int):
        if depends_on(q, pred, session.program):
            raise Refusal(
                "R2",
                "PredicateOfInterestDependsOnIt",
                f"predicate of interest {q} depends on {pred}",
            )
    ids = def_of(pred, session.program)
    program2 = session.program.remove_ids(ids)
    return RuleResult(
        program=program2,
        schema=session.schema,
        rule="R2",
        params={"pred": pred},
        added=[],
        removed=ids,
        notes=[f"removed {len(ids)} clause(s) defining {pred}"],
    )


# --- R3: positive unfolding -----------------------------------------------------------


def _defining_clauses(program: Program, atom: Atom) -> list[tuple[int, Clause]]:
    return [
        (cid, c)
        for cid, c in program.clauses
        if c.head.pred == atom.pred and len(c.head.args) == len(atom.args)
    ]


def r3_unfold_pos(session, clause_id: int, atom_position: int) -> RuleResult:
    program, theory = session.program, session.theory
    gamma = _get_clause(program, "R3", clause_id)
    if not isinstance(atom_position, int) or not (0 <= atom_position < len(gamma.body)):
        raise StepParamError(
            f"R3: atom position {atom_position} out of range for clause {clause_id}"
        )
    lit = gamma.body[atom_position]
    if not lit.positive:
        raise Refusal(
            "R3",
            "NotAnAtom",
            f"body position {atom_position} of clause {clause_id} holds the"
            f" negative literal {format_lit(lit)}",
        )
    a = lit.atom
    g_left = gamma.body[:atom_position]
    g_right = gamma.body[atom_position + 1 :]
    avoid = {v.name for v in clause_vars(gamma)}

    etas: list[Clause] = []
    dropped = 0
    for cid, delta in _defining_clauses(program, a):
        dr = rename_apart(delta, avoid)
        cc = gamma.constraint + eq_constraint(a, dr.head) + dr.constraint
        if is_satisfiable(cc, theory) == SatResult.UNSAT:
            dropped += 1
            continue
        etas.append(Clause(gamma.head, cc, g_left + dr.body + g_right))
    _strat_check_added("R3", etas, session.schema, theory)
    program2, added = program.replace_clause(clause_id, etas)
    notes = [f"{len(etas)} unfolded clause(s)"]
    if dropped:
        notes.append(f"{dropped} combination(s) dropped as unsatisfiable")
    if not etas:
        notes.append(f"clause {clause_id} deleted: no surviving combination")
    return RuleResult(
        program=program2,
        schema=session.schema,
        rule="R3",
        params={"clause_id": clause_id, "atom_position": atom_position},
        added=added,
        removed=[clause_id],
        notes=notes,
        unfolded_clause_id=clause_id,
    )


# --- R4: negative unfolding -----------------------------------------------------------


def r4_unfold_neg(session, clause_id: int, literal_position: int) -> RuleResult:
    program, theory = session.program, session.theory
    gamma = _get_clause(program, "R4", clause_id)
    if not isinstance(literal_position, int) or not (
        0 <= literal_position < len(gamma.body)
    ):
        raise StepParamError(
            f"R4: literal position {literal_position} out of range for clause"
            f" {clause_id}"
        )
    lit = gamma.body[literal_position]
    if lit.positive:
        raise Refusal(
            "R4",
            "NotANegativeLiteral",
            f"body position {literal_position} of clause {clause_id} holds the"
            f" atom {format_lit(lit)}",
        )
    a = lit.atom
    c = gamma.constraint
    g_left = gamma.body[:literal_position]
    g_right = gamma.body[literal_position + 1 :]
    avoid = {v.name for v in clause_vars(gamma)}
    allowed = set(constraint_vars(c)) | set(atom_vars(a))

    kept: list[tuple[int, Clause]] = []
    for cid, delta in _defining_clauses(program, a):
        dr = rename_apart(delta, avoid)
        combo = c + eq_constraint(a, dr.head) + dr.constraint
        if is_satisfiable(combo, theory) == SatResult.UNSAT:
            continue
        kept.append((cid, dr))

    # one option list per matching clause: a disjunct either refutes the
    # residual constraint at one conjunct or keeps it and complements one
    # body literal
    options: list[list[tuple[tuple[AtomicConstraint, ...], Lit | None]]] = []
    notes: list[str] = []
    for cid, dr in kept:
        vi = set(clause_vars(dr))
        sf = solved_form(c, a, dr.head, dr.constraint, vi, theory)
        if isinstance(sf, NotApplicable):
            tag = "ConditionIFailed" if sf.condition == "i" else "ConditionIIFailed"
            raise Refusal(
                "R4",
                tag,
                f"defining clause {cid} ({format_clause(dr)}): {sf.detail}",
            )
        d_i = sf.residual
        b_i = [apply_subst_lit(l, sf.theta) for l in dr.body]
        escaped = sorted(
            {
                v.name
                for v in constraint_vars(d_i)
                + [w for l in b_i for w in atom_vars(l.atom)]
                if v not in allowed
            }
        )
        if escaped:
            raise Refusal(
                "R4",
                "ConditionIIIFailed",
                f"defining clause {cid}: variable(s) {', '.join(escaped)} are not"
                " free in the clause constraint and the unfolded atom",
            )
        opts: list[tuple[tuple[AtomicConstraint, ...], Lit | None]] = []
        for ac in d_i:
            opts.append(((tidy_ac(complement_ac(ac)),), None))
        for l in b_i:
            opts.append((d_i, Lit(l.atom, not l.positive)))
        options.append(opts)
        notes.append(
            f"clause {cid}: residual {' & '.join(format_ac(x) for x in d_i) or 'true'},"
            f" {len(dr.body)} body literal(s)"
        )

    etas: list[Clause] = []
    pruned = 0
    for combo in itertools.product(*options):
        extra: list[AtomicConstraint] = []
        lits: list[Lit] = []
        for acs, l in combo:
            extra.extend(acs)
            if l is not None:
                lits.append(l)
        if extra and is_satisfiable(c + tuple(extra), theory) == SatResult.UNSAT:
            pruned += 1
            continue
        etas.append(
            Clause(gamma.head, c + tuple(extra), g_left + tuple(lits) + g_right)
        )
    if pruned:
        notes.append(f"{pruned} disjunct(s) dropped as unsatisfiable")
    if not kept:
        notes.append("no matching clauses: negative literal deleted")
    elif not etas:
        notes.append(f"clause {clause_id} deleted: the definition covers the context")
    _strat_check_added("R4", etas, session.schema, theory)
    program2, added = program.replace_clause(clause_id, etas)
    return RuleResult(
        program=program2,
        schema=session.schema,
        rule="R4",
        params={"clause_id": clause_id, "literal_position": literal_position},
        added=added,
        removed=[clause_id],
        notes=notes,
    )


# --- matching machinery for folding ---------------------------------------------------


def _match_term(pat: Term, tgt: Term, theta: dict[Var, Term]) -> dict[Var, Term] | None:
    if isinstance(pat, Var):
        bound = theta.get(pat)
        if bound is None:
            out = dict(theta)
            out[pat] = tgt
            return out
        return theta if bound == tgt else None
    if isinstance(pat, (Num, Sym)):
        return theta if pat == tgt else None
    if (
        isinstance(pat, Struct)
        and isinstance(tgt, Struct)
        and pat.functor == tgt.functor
        and len(pat.args) == len(tgt.args)
    ):
        cur: dict[Var, Term] | None = theta
        for p_arg, t_arg in zip(pat.args, tgt.args):
            cur = _match_term(p_arg, t_arg, cur)
            if cur is None:
                return None
        return cur
    return None


def _match_atom(pat: Atom, tgt: Atom, theta: dict[Var, Term]) -> dict[Var, Term] | None:
    if pat.pred != tgt.pred or len(pat.args) != len(tgt.args):
        return None
    cur: dict[Var, Term] | None = theta
    for p_arg, t_arg in zip(pat.args, tgt.args):
        cur = _match_term(p_arg, t_arg, cur)
        if cur is None:
            return None
    return cur


_MIRROR = {"=": "=", "!=": "!=", "<": ">", ">": "<", "<=": ">=", ">=": "<="}


def _match_ac(
    pat: AtomicConstraint, tgt: AtomicConstraint, theta: dict[Var, Term]
) -> Iterator[dict[Var, Term]]:
    if pat.rel == tgt.rel:
        got = _match_term(pat.lhs, tgt.lhs, theta)
        if got is not None:
            got = _match_term(pat.rhs, tgt.rhs, got)
            if got is not None:
                yield got
    if _MIRROR[pat.rel] == tgt.rel:
        got = _match_term(pat.lhs, tgt.rhs, theta)
        if got is not None:
            got = _match_term(pat.rhs, tgt.lhs, got)
            if got is not None:
                yield got


def _match_body(
    pats: Sequence[Lit], tgts: Sequence[Lit], theta: dict[Var, Term]
) -> dict[Var, Term] | None:
    if len(pats) != len(tgts):
        return None
    cur: dict[Var, Term] | None = theta
    for p, t in zip(pats, tgts):
        if p.positive != t.positive:
            return None
        cur = _match_atom(p.atom, t.atom, cur)
        if cur is None:
            return None
    return cur


def _match_constraint_subset(
    pats: Sequence[AtomicConstraint],
    pool: Sequence[AtomicConstraint],
    theta: dict[Var, Term],
) -> Iterator[tuple[dict[Var, Term], tuple[AtomicConstraint, ...]]]:
    """Ways to match every pattern conjunct onto a distinct pool conjunct;
    yields (theta, leftover pool conjuncts in original order)."""
    if not pats:
        yield theta, tuple(pool)
        return
    head_pat, rest = pats[0], pats[1:]
    for i, cand in enumerate(pool):
        for theta2 in _match_ac(head_pat, cand, theta):
            remaining = tuple(pool[:i]) + tuple(pool[i + 1 :])
            yield from _match_constraint_subset(rest, remaining, theta2)


def _parse_theta(rule: str, raw) -> dict[Var, Term]:
    from .parser import ParseError, parse_term

    if raw is None:
        return {}
    if not isinstance(raw, Mapping):
        raise StepParamError(f"{rule}: theta must map variable names to terms")
    out: dict[Var, Term] = {}
    for name, text in raw.items():
        try:
            out[Var(str(name))] = parse_term(str(text))
        except ParseError as e:
            raise StepParamError(f"{rule}: bad theta binding {name}: {e}")
    return out


def _rename_defs_apart(
    deltas: Sequence[Clause], avoid: set[str]
) -> tuple[list[Clause], dict[Var, Var]]:
    """One shared renaming for all definition clauses, away from avoid.

    Variables shared between definition clauses stay shared; the matching
    substitution below is a single theta across the whole definition.
    """
    used = set(avoid)
    ren: dict[Var, Var] = {}
    all_vars: list[Var] = []
    for d in deltas:
        for v in clause_vars(d):
            if v not in ren and v not in all_vars:
                all_vars.append(v)
    for v in all_vars:
        if v.name not in used:
            used.add(v.name)
            continue
        i = 1
        while f"{v.name}_{i}" in used:
            i += 1
        ren[v] = Var(f"{v.name}_{i}")
        used.add(f"{v.name}_{i}")
    if not ren:
        return list(deltas), {}
    subst = {v: w for v, w in ren.items()}
    return [apply_subst_clause(d, subst) for d in deltas], ren


# --- R5: positive folding -------------------------------------------------------------


def _ledger_defs(session, rule: str, def_pred: str) -> list:
    entries = [e for e in session.defs if e.pred == def_pred]
    if not entries:
        raise Refusal(
            rule,
            "DefNotInDefs",
            f"{def_pred} was never introduced by a definition step",
        )
    return entries


def _vars_only_injective(th: dict[Var, Term] | None) -> dict[Var, Var] | None:
    if th is None:
        return None
    if any(not isinstance(t, Var) for t in th.values()):
        return None
    if len(set(th.values())) != len(th):
        return None
    return th  # type: ignore[return-value]


def _frame_alignments(
    head: Atom,
    gl: Sequence[Lit],
    gr: Sequence[Lit],
    rest: Sequence[AtomicConstraint],
    g: Clause,
    s: int,
    width: int,
) -> Iterator[tuple[dict[Var, Var], tuple[AtomicConstraint, ...]]]:
    """Ways to align clause g with the folding frame of the first folded
    clause: an injective variable renaming from frame variables to g
    variables matching g's head, its body literals outside the window, and a
    sub-multiset of its constraint against the frame remainder. Yields the
    renaming and the constraint conjuncts of g left over for the definition
    constraint to consume."""
    th0 = _vars_only_injective(_match_atom(head, g.head, {}))
    if th0 is None:
        return
    outer_pat = tuple(gl) + tuple(gr)
    outer_tgt = tuple(g.body[:s]) + tuple(g.body[s + width :])
    th0 = _vars_only_injective(_match_body(outer_pat, outer_tgt, th0))
    if th0 is None:
        return
    for th1, pool in _match_constraint_subset(tuple(rest), g.constraint, th0):
        got = _vars_only_injective(th1)
        if got is not None:
            yield got, pool


def _pair_into(
    f_term: Term,
    g_term: Term,
    th1: dict[Var, Var],
    ext: dict[Var, Var],
) -> dict[Var, Var] | None:
    """Grow the frame-local pairing ext so that f_term (frame side) rewritten
    by th1 and ext equals g_term (folded-clause side); renamings stay
    variable-to-variable and injective."""
    if isinstance(f_term, Var):
        mapped = th1.get(f_term) or ext.get(f_term)
        if mapped is not None:
            return ext if mapped == g_term else None
        if not isinstance(g_term, Var):
            return None
        if g_term in th1.values() or g_term in ext.values():
            return None
        out = dict(ext)
        out[f_term] = g_term
        return out
    if isinstance(f_term, (Num, Sym)):
        return ext if f_term == g_term else None
    if (
        isinstance(f_term, Struct)
        and isinstance(g_term, Struct)
        and f_term.functor == g_term.functor
        and len(f_term.args) == len(g_term.args)
    ):
        cur: dict[Var, Var] | None = ext
        for a, b in zip(f_term.args, g_term.args):
            cur = _pair_into(a, b, th1, cur)
            if cur is None:
                return None
        return cur
    return None


def _translate_back(
    g_term: Term,
    back: dict[Var, Var],
    used: set[str],
) -> Term:
    """Rewrite a folded-clause-side term into the frame's variable space,
    allocating fresh frame-side names for g variables seen for the first
    time (recorded in back)."""
    if isinstance(g_term, Var):
        got = back.get(g_term)
        if got is None:
            cand, n = g_term.name, 0
            while cand in used:
                n += 1
                cand = f"{g_term.name}_f{n}"
            used.add(cand)
            got = Var(cand)
            back[g_term] = got
        return got
    if isinstance(g_term, Struct):
        return Struct(
            g_term.functor,
            tuple(_translate_back(a, back, used) for a in g_term.args),
        )
    return g_term


def r5_fold_pos(
    session,
    clause_ids: Sequence[int],
    def_pred: str,
    theta=None,
    at: int | None = None,
) -> RuleResult:
    program, theory = session.program, session.theory
    if not isinstance(clause_ids, (list, tuple)) or not clause_ids:
        raise StepParamError("R5: clause_ids must be a non-empty list")
    entries = _ledger_defs(session, "R5", def_pred)
    deltas = [e.clause for e in entries]
    if len(clause_ids) != len(deltas):
        raise Refusal(
            "R5",
            "BodyShapeMismatch",
            f"the definition of {def_pred} has {len(deltas)} clause(s);"
            f" {len(clause_ids)} clause id(s) given",
        )
    for d in deltas:
        if not d.body:
            raise Refusal(
                "R5",
                "EmptyFoldedGoal",
                f"definition clause {format_clause(d)} has no body literals",
            )
    gammas = [_get_clause(program, "R5", cid) for cid in clause_ids]
    avoid = {v.name for g in gammas for v in clause_vars(g)}
    deltas, _ = _rename_defs_apart(deltas, avoid)
    k_head = deltas[0].head
    used_names = avoid | {v.name for d in deltas for v in clause_vars(d)}

    theta0 = _parse_theta("R5", theta)

    def search(
        i: int,
        th: dict[Var, Term],
        fixed: tuple | None,
    ) -> Iterator[tuple[dict[Var, Term], tuple]]:
        if i == len(gammas):
            yield th, fixed  # type: ignore[misc]
            return
        g, d = gammas[i], deltas[i]
        width = len(d.body)
        if fixed is None:
            starts = [at] if at is not None else range(len(g.body) - width + 1)
            for s in starts:
                if not isinstance(s, int) or s < 0 or s + width > len(g.body):
                    continue
                th2 = _match_body(d.body, g.body[s : s + width], th)
                if th2 is None:
                    continue
                for th3, rest in _match_constraint_subset(d.constraint, g.constraint, th2):
                    fx = (
                        s,
                        g.head,
                        g.body[:s],
                        g.body[s + width :],
                        tuple(sorted(format_ac(canon_ac(x)) for x in rest)),
                        rest,
                    )
                    yield from search(i + 1, th3, fx)
        else:
            # Later clauses are alpha-aligned onto the frame of the first:
            # clauses are identified up to renaming, so the shared head, the
            # outer body literals, and the frame's leftover constraint pin an
            # injective renaming, the definition clause is matched against
            # the window in the clause's own names, and those bindings are
            # reconciled with the shared theta variable by variable.
            s, head, gl, gr, _, rest = fixed
            if len(g.body) != s + width + len(gr):
                return
            for th1, pool in _frame_alignments(head, gl, gr, rest, g, s, width):
                thi = _match_body(d.body, g.body[s : s + width], {})
                if thi is None:
                    continue
                for thi2, leftover in _match_constraint_subset(d.constraint, pool, thi):
                    if leftover:
                        continue
                    ext: dict[Var, Var] | None = {}
                    for v in thi2:
                        if v in th:
                            ext = _pair_into(th[v], thi2[v], th1, ext)
                            if ext is None:
                                break
                    if ext is None:
                        continue
                    back: dict[Var, Var] = {u: w for w, u in th1.items()}
                    back.update({u: w for w, u in ext.items()})
                    out = dict(th)
                    for v in thi2:
                        if v not in out:
                            out[v] = _translate_back(thi2[v], back, used_names)
                    yield from search(i + 1, out, fixed)

    found = next(search(0, theta0, None), None)
    if found is None:
        raise Refusal(
            "R5",
            "BodyShapeMismatch",
            f"clauses {list(clause_ids)} do not instantiate the definition of"
            f" {def_pred} under a single substitution",
        )
    th, fixed = found
    s, head, gl, gr, _, rest = fixed

    missing = [v for v in atom_vars(k_head) if v not in th]
    if missing:
        raise Refusal(
            "R5",
            "BodyShapeMismatch",
            f"definition head variable(s) {', '.join(v.name for v in missing)}"
            " are not determined by the match",
        )

    outside = (
        set(atom_vars(head))
        | set(constraint_vars(rest))
        | {v for l in gl for v in atom_vars(l.atom)}
        | {v for l in gr for v in atom_vars(l.atom)}
    )
    k_vars = set(atom_vars(k_head))
    for d in deltas:
        d_vars = set(constraint_vars(d.constraint)) | {
            v for l in d.body for v in atom_vars(l.atom)
        }
        for x in sorted(d_vars - k_vars, key=lambda v: v.name):
            img = th.get(x)
            if img is None:
                continue
            if not isinstance(img, Var) or img in outside:
                raise Refusal(
                    "R5",
                    "ThetaConditionIFailed",
                    f"{x.name} maps to {format_term(img)} which is not a variable"
                    " absent from the folded clause remainder",
                )
            for y in sorted(d_vars - {x}, key=lambda v: v.name):
                y_img = th.get(y)
                if y_img is not None and img in term_vars(y_img):
                    raise Refusal(
                        "R5",
                        "ThetaConditionIIFailed",
                        f"{x.name} maps to {img.name} which also occurs inside"
                        f" the image of {y.name}",
                    )

    folded = Lit(Atom(k_head.pred, tuple(th[v] for v in k_head.args)), True)
    eta = Clause(head, rest, gl + (folded,) + gr)
    _strat_check_added("R5", [eta], session.schema, theory)
    program2, added = program.replace_clause(clause_ids[0], [eta])
    program2 = program2.remove_ids(clause_ids[1:])
    params: dict = {"clause_ids": list(clause_ids), "def_pred": def_pred}
    if theta is not None:
        params["theta"] = dict(theta)
    if at is not None:
        params["at"] = at
    return RuleResult(
        program=program2,
        schema=session.schema,
        rule="R5",
        params=params,
        added=added,
        removed=list(clause_ids),
        notes=[
            "theta: "
            + ", ".join(
                f"{v.name}/{format_term(t)}"
                for v, t in sorted(th.items(), key=lambda p: p[0].name)
            )
        ],
        def_pred_used=def_pred,
    )


# --- R6: negative folding -------------------------------------------------------------


def r6_fold_neg(
    session, clause_id: int, def_pred: str, theta=None, at: int | None = None
) -> RuleResult:
    program, theory = session.program, session.theory
    entries = _ledger_defs(session, "R6", def_pred)
    if len(entries) != 1:
        raise Refusal(
            "R6",
            "DefNotSingleClause",
            f"the definition of {def_pred} has {len(entries)} clauses",
        )
    delta = entries[0].clause
    if len(delta.body) != 1 or not delta.body[0].positive:
        raise Refusal(
            "R6",
            "BodyShapeMismatch",
            f"definition clause {format_clause(delta)} must have exactly one"
            " positive body literal",
        )
    gamma = _get_clause(program, "R6", clause_id)
    avoid = {v.name for v in clause_vars(gamma)}
    (delta,), _ = _rename_defs_apart([delta], avoid)
    k_head, d_c, a_lit = delta.head, delta.constraint, delta.body[0]

    head_fv = set(atom_vars(k_head))
    body_fv = set(constraint_vars(d_c)) | set(atom_vars(a_lit.atom))
    if head_fv != body_fv:
        diff = sorted(v.name for v in head_fv.symmetric_difference(body_fv))
        raise Refusal(
            "R6",
            "FVConditionFailed",
            f"the definition head and body of {def_pred} must share exactly the"
            f" same variables; mismatch on {', '.join(diff)}",
        )

    theta0 = _parse_theta("R6", theta)
    positions = (
        [at]
        if at is not None
        else [i for i, l in enumerate(gamma.body) if not l.positive]
    )
    found = None
    for pos in positions:
        if not isinstance(pos, int) or not (0 <= pos < len(gamma.body)):
            continue
        lit = gamma.body[pos]
        if lit.positive:
            continue
        th = _match_atom(a_lit.atom, lit.atom, theta0)
        if th is None:
            continue
        got = next(_match_constraint_subset(d_c, gamma.constraint, th), None)
        if got is None:
            continue
        found = (pos, got[0])
        break
    if found is None:
        raise Refusal(
            "R6",
            "BodyShapeMismatch",
            f"clause {clause_id} does not contain the definition constraint and"
            f" the negated definition body under one substitution",
        )
    pos, th = found
    missing = [v for v in atom_vars(k_head) if v not in th]
    if missing:
        raise Refusal(
            "R6",
            "BodyShapeMismatch",
            f"definition head variable(s) {', '.join(v.name for v in missing)}"
            " are not determined by the match",
        )
    folded = Lit(Atom(k_head.pred, tuple(th[v] for v in k_head.args)), False)
    eta = Clause(
        gamma.head,
        gamma.constraint,  # the matched constraint image stays in place
        gamma.body[:pos] + (folded,) + gamma.body[pos + 1 :],
    )
    _strat_check_added("R6", [eta], session.schema, theory)
    program2, added = program.replace_clause(clause_id, [eta])
    params: dict = {"clause_id": clause_id, "def_pred": def_pred}
    if theta is not None:
        params["theta"] = dict(theta)
    if at is not None:
        params["at"] = at
    return RuleResult(
        program=program2,
        schema=session.schema,
        rule="R6",
        params=params,
        added=added,
        removed=[clause_id],
        notes=[
            "theta: "
            + ", ".join(
                f"{v.name}/{format_term(t)}"
                for v, t in sorted(th.items(), key=lambda p: p[0].name)
            )
        ],
        def_pred_used=def_pred,
    )


# --- R7: the ten goal/constraint replacement laws ---------------------------------------


def _law_result(
    session,
    law: int,
    direction: str,
    clause_ids: Sequence[int],
    law_params: Mapping,
    program2: Program,
    added: list[int],
    removed: list[int],
    notes: list[str],
) -> RuleResult:
    params = {
        "law": law,
        "direction": direction,
        "clause_ids": list(clause_ids),
    }
    if law_params:
        params["law_params"] = dict(law_params)
    return RuleResult(
        program=program2,
        schema=session.schema,
        rule="R7",
        params=params,
        added=added,
        removed=removed,
        notes=notes,
    )


def _renaming_match_clause(
    pat: Clause, tgt: Clause
) -> dict[Var, Term] | None:
    """Match pat's head and body onto tgt literally and its constraint as a
    sub-multiset, with variable-to-variable bindings only."""

    def vars_only(th: dict[Var, Term] | None) -> dict[Var, Term] | None:
        if th is None or any(not isinstance(t, Var) for t in th.values()):
            return None
        if len(set(th.values())) != len(th):
            return None
        return th

    th = _match_atom(pat.head, tgt.head, {})
    if th is None:
        return None
    th = _match_body(pat.body, tgt.body, th)
    if th is None:
        return None
    for th2, _ in _match_constraint_subset(pat.constraint, tgt.constraint, th):
        got = vars_only(th2)
        if got is not None:
            return got
    return None


def r7_replace(
    session,
    law: int,
    direction: str = "LR",
    clause_ids: Sequence[int] | None = None,
    law_params: Mapping | None = None,
) -> RuleResult:
    program, theory, schema = session.program, session.theory, session.schema
    if law not in range(1, 11):
        raise StepParamError(f"R7: unknown law {law}")
    if direction not in ("LR", "RL"):
        raise StepParamError(f"R7: direction must be LR or RL, got {direction!r}")
    clause_ids = list(clause_ids or [])
    lp = dict(law_params or {})

    def need_ids(n: int):
        if len(clause_ids) != n:
            raise StepParamError(f"R7 law {law}: expected {n} clause id(s)")

    def finish(program2, added, removed, notes):
        return _law_result(
            session, law, direction, clause_ids, lp, program2, added, removed, notes
        )

    if law in (4, 6) and direction == "RL":
        raise Refusal(
            "R7",
            "IrreversibleDirection",
            f"law {law} only rewrites left to right; the reverse direction is"
            " unsound",
        )

    if law == 1:
        if direction == "LR":
            need_ids(1)
            g = _get_clause(program, "R7", clause_ids[0])
            pair = next(
                (
                    (i, j)
                    for i, li in enumerate(g.body)
                    for j, lj in enumerate(g.body)
                    if li.positive and not lj.positive and li.atom == lj.atom
                ),
                None,
            )
            if pair is None:
                raise Refusal(
                    "R7",
                    "LawShapeMismatch",
                    f"clause {clause_ids[0]} has no complementary literal pair",
                )
            program2, _ = program.replace_clause(clause_ids[0], [])
            return finish(
                program2,
                [],
                [clause_ids[0]],
                [f"complementary pair at body positions {pair[0]}, {pair[1]}"],
            )
        new = _parse_clause_text("R7", lp.get("clause"))
        if not any(
            li.positive and not lj.positive and li.atom == lj.atom
            for li in new.body
            for lj in new.body
        ):
            raise Refusal(
                "R7",
                "LawShapeMismatch",
                "the clause to add has no complementary literal pair",
            )
        _strat_check_added("R7", [new], schema, theory)
        program2, added = program.add_clauses([new])
        return finish(program2, added, [], ["never-firing clause added"])

    if law == 2:
        if direction == "LR":
            need_ids(1)
            g = _get_clause(program, "R7", clause_ids[0])
            if not any(l.positive and l.atom == g.head for l in g.body):
                raise Refusal(
                    "R7",
                    "LawShapeMismatch",
                    f"the head of clause {clause_ids[0]} does not recur as a"
                    " positive body literal",
                )
            program2, _ = program.replace_clause(clause_ids[0], [])
            return finish(program2, [], [clause_ids[0]], ["self-supporting clause removed"])
        new = _parse_clause_text("R7", lp.get("clause"))
        if not any(l.positive and l.atom == new.head for l in new.body):
            raise Refusal(
                "R7",
                "LawShapeMismatch",
                "the clause to add must repeat its head as a positive body literal",
            )
        _strat_check_added("R7", [new], schema, theory)
        program2, added = program.add_clauses([new])
        return finish(program2, added, [], ["self-supporting clause added"])

    if law == 3:
        need_ids(1)
        g = _get_clause(program, "R7", clause_ids[0])
        i = lp.get("at")
        if not isinstance(i, int) or not (0 <= i < len(g.body) - 1):
            raise StepParamError(
                f"R7 law 3: 'at' must index an adjacent body pair, got {i!r}"
            )
        body = list(g.body)
        body[i], body[i + 1] = body[i + 1], body[i]
        program2, added = program.replace_clause(
            clause_ids[0], [Clause(g.head, g.constraint, tuple(body))]
        )
        return finish(program2, added, [clause_ids[0]], [f"swapped body positions {i}, {i + 1}"])

    if law == 4:
        need_ids(1)
        g = _get_clause(program, "R7", clause_ids[0])
        i = lp.get("at")
        if not isinstance(i, int) or not (0 <= i < len(g.body) - 1):
            raise StepParamError(
                f"R7 law 4: 'at' must index an adjacent body pair, got {i!r}"
            )
        if not (
            g.body[i].positive
            and g.body[i + 1].positive
            and g.body[i] == g.body[i + 1]
        ):
            raise Refusal(
                "R7",
                "LawShapeMismatch",
                f"body positions {i}, {i + 1} of clause {clause_ids[0]} are not"
                " duplicate atoms",
            )
        body = g.body[: i + 1] + g.body[i + 2 :]
        program2, added = program.replace_clause(
            clause_ids[0], [Clause(g.head, g.constraint, body)]
        )
        return finish(program2, added, [clause_ids[0]], ["duplicate atom removed"])

    if law == 5:
        if direction == "LR":
            need_ids(2)
            keeper = _get_clause(program, "R7", clause_ids[0])
            victim = _get_clause(program, "R7", clause_ids[1])
            if clause_ids[0] == clause_ids[1]:
                raise StepParamError("R7 law 5: the two clause ids must differ")
            prefix = Clause(keeper.head, keeper.constraint, keeper.body)
            th = None
            # victim = keeper-instance with extra constraint and extra goal tail
            for cut in range(len(victim.body), -1, -1):
                trimmed = Clause(victim.head, victim.constraint, victim.body[:cut])
                th = _renaming_match_clause(prefix, trimmed)
                if th is not None:
                    break
            if th is None:
                raise Refusal(
                    "R7",
                    "LawShapeMismatch",
                    f"clause {clause_ids[1]} is not subsumed by clause"
                    f" {clause_ids[0]}",
                )
            program2 = program.remove_ids([clause_ids[1]])
            return finish(program2, [], [clause_ids[1]], ["subsumed clause removed"])
        need_ids(1)
        keeper = _get_clause(program, "R7", clause_ids[0])
        new = _parse_clause_text("R7", lp.get("clause"))
        th = None
        for cut in range(len(new.body), -1, -1):
            trimmed = Clause(new.head, new.constraint, new.body[:cut])
            th = _renaming_match_clause(
                Clause(keeper.head, keeper.constraint, keeper.body), trimmed
            )
            if th is not None:
                break
        if th is None:
            raise Refusal(
                "R7",
                "LawShapeMismatch",
                f"the clause to add is not subsumed by clause {clause_ids[0]}",
            )
        _strat_check_added("R7", [new], schema, theory)
        program2, added = program.add_clauses([new])
        return finish(program2, added, [], ["subsumed clause added"])

    if law == 6:
        need_ids(2)
        pos_cl = _get_clause(program, "R7", clause_ids[0])
        neg_cl = _get_clause(program, "R7", clause_ids[1])
        i = lp.get("at")
        if not isinstance(i, int) or not (0 <= i < len(pos_cl.body)):
            raise StepParamError(f"R7 law 6: 'at' must index a body literal, got {i!r}")
        if not pos_cl.body[i].positive:
            raise Refusal(
                "R7",
                "LawShapeMismatch",
                f"body position {i} of clause {clause_ids[0]} is not positive",
            )
        flipped = Clause(
            pos_cl.head,
            pos_cl.constraint,
            pos_cl.body[:i]
            + (Lit(pos_cl.body[i].atom, False),)
            + pos_cl.body[i + 1 :],
        )
        th = _renaming_match_clause(flipped, neg_cl)
        rev = _renaming_match_clause(neg_cl, flipped)
        if th is None or rev is None:
            raise Refusal(
                "R7",
                "LawShapeMismatch",
                f"clauses {clause_ids[0]} and {clause_ids[1]} do not differ"
                f" exactly in the sign of body position {i}",
            )
        merged = Clause(
            pos_cl.head, pos_cl.constraint, pos_cl.body[:i] + pos_cl.body[i + 1 :]
        )
        program2, added = program.replace_clause(clause_ids[0], [merged])
        program2 = program2.remove_ids([clause_ids[1]])
        return finish(
            program2,
            added,
            list(clause_ids),
            [f"case split on {format_lit(pos_cl.body[i])} discharged"],
        )

    if law == 7:
        if direction == "LR":
            need_ids(1)
            g = _get_clause(program, "R7", clause_ids[0])
            verdict = is_satisfiable(g.constraint, theory)
            if verdict != SatResult.UNSAT:
                raise Refusal(
                    "R7",
                    "ConstraintCheckFailed",
                    f"the constraint of clause {clause_ids[0]} was not proved"
                    f" unsatisfiable (solver: {verdict.value})",
                )
            program2, _ = program.replace_clause(clause_ids[0], [])
            return finish(program2, [], [clause_ids[0]], ["unsatisfiable clause removed"])
        new = _parse_clause_text("R7", lp.get("clause"))
        verdict = is_satisfiable(new.constraint, theory)
        if verdict != SatResult.UNSAT:
            raise Refusal(
                "R7",
                "ConstraintCheckFailed",
                f"the constraint of the clause to add was not proved"
                f" unsatisfiable (solver: {verdict.value})",
            )
        _strat_check_added("R7", [new], schema, theory)
        program2, added = program.add_clauses([new])
        return finish(program2, added, [], ["unsatisfiable clause added"])

    if law == 8:
        need_ids(1)
        g = _get_clause(program, "R7", clause_ids[0])
        c2 = _parse_constraint_text("R7", lp.get("constraint"))
        frame = set(atom_vars(g.head)) | {
            v for l in g.body for v in atom_vars(l.atom)
        }
        if not equivalent_projected(g.constraint, c2, frame, theory):
            raise Refusal(
                "R7",
                "ConstraintCheckFailed",
                "the old and new constraints were not proved equivalent after"
                " projecting local variables",
            )
        new = Clause(g.head, c2, g.body)
        _strat_check_added("R7", [new], schema, theory)
        program2, added = program.replace_clause(clause_ids[0], [new])
        return finish(program2, added, [clause_ids[0]], ["constraint replaced"])

    if law == 9:
        if direction == "LR":
            need_ids(1)
            g = _get_clause(program, "R7", clause_ids[0])
            c1 = _parse_constraint_text("R7", lp.get("c1"))
            c2 = _parse_constraint_text("R7", lp.get("c2"))
            _check_split_equivalence("R7", g.constraint, c1, c2, theory)
            new1 = Clause(g.head, c1, g.body)
            new2 = Clause(g.head, c2, g.body)
            _strat_check_added("R7", [new1, new2], schema, theory)
            program2, added = program.replace_clause(clause_ids[0], [new1, new2])
            return finish(
                program2, added, [clause_ids[0]], ["constraint split into two cases"]
            )
        need_ids(2)
        g1 = _get_clause(program, "R7", clause_ids[0])
        g2 = _get_clause(program, "R7", clause_ids[1])
        if g1.head != g2.head or g1.body != g2.body:
            raise Refusal(
                "R7",
                "LawShapeMismatch",
                "the two clauses to merge must share head and body verbatim",
            )
        c = _parse_constraint_text("R7", lp.get("constraint"))
        _check_split_equivalence("R7", c, g1.constraint, g2.constraint, theory)
        merged = Clause(g1.head, c, g1.body)
        _strat_check_added("R7", [merged], schema, theory)
        program2, added = program.replace_clause(clause_ids[0], [merged])
        program2 = program2.remove_ids([clause_ids[1]])
        return finish(program2, added, list(clause_ids), ["case split merged"])

    # law 10
    need_ids(1)
    g = _get_clause(program, "R7", clause_ids[0])
    if direction == "LR":
        from .parser import ParseError, parse_term

        name = lp.get("var")
        if not isinstance(name, str) or not name or not name[0].isupper():
            raise StepParamError(f"R7 law 10: 'var' must be a variable name, got {name!r}")
        x = Var(name)
        try:
            t = parse_term(str(lp.get("term")))
        except ParseError as e:
            raise StepParamError(f"R7 law 10: bad term: {e}")
        if x in clause_vars(g):
            raise Refusal(
                "R7",
                "LawShapeMismatch",
                f"{name} already occurs in clause {clause_ids[0]}; the abstracted"
                " variable must be fresh",
            )
        if x in term_vars(t):
            raise Refusal(
                "R7",
                "LawShapeMismatch",
                f"{name} occurs in the term it should abstract",
            )
        new = Clause(
            Atom(g.head.pred, tuple(_replace_subterm(a, t, x) for a in g.head.args)),
            (AtomicConstraint("=", x, t),)
            + tuple(
                AtomicConstraint(
                    ac.rel, _replace_subterm(ac.lhs, t, x), _replace_subterm(ac.rhs, t, x)
                )
                for ac in g.constraint
            ),
            tuple(
                Lit(
                    Atom(
                        l.atom.pred,
                        tuple(_replace_subterm(a, t, x) for a in l.atom.args),
                    ),
                    l.positive,
                )
                for l in g.body
            ),
        )
        _strat_check_added("R7", [new], schema, theory)
        program2, added = program.replace_clause(clause_ids[0], [new])
        return finish(
            program2,
            added,
            [clause_ids[0]],
            [f"term {format_term(t)} abstracted as {name}"],
        )
    idx = lp.get("eq_index")
    if not isinstance(idx, int) or not (0 <= idx < len(g.constraint)):
        raise StepParamError(
            f"R7 law 10: 'eq_index' must index a constraint conjunct, got {idx!r}"
        )
    ac = g.constraint[idx]
    if ac.rel != "=":
        raise Refusal(
            "R7", "LawShapeMismatch", f"conjunct {format_ac(ac)} is not an equation"
        )
    if isinstance(ac.lhs, Var) and ac.lhs not in term_vars(ac.rhs):
        x, t = ac.lhs, ac.rhs
    elif isinstance(ac.rhs, Var) and ac.rhs not in term_vars(ac.lhs):
        x, t = ac.rhs, ac.lhs
    else:
        raise Refusal(
            "R7",
            "LawShapeMismatch",
            f"conjunct {format_ac(ac)} does not bind a variable to a term",
        )
    rest = g.constraint[:idx] + g.constraint[idx + 1 :]
    new = apply_subst_clause(Clause(g.head, rest, g.body), {x: t})
    _strat_check_added("R7", [new], schema, theory)
    program2, added = program.replace_clause(clause_ids[0], [new])
    return finish(
        program2,
        added,
        [clause_ids[0]],
        [f"binding {format_ac(ac)} substituted away"],
    )


def _check_split_equivalence(
    rule: str,
    c: Sequence[AtomicConstraint],
    c1: Sequence[AtomicConstraint],
    c2: Sequence[AtomicConstraint],
    theory: str,
) -> None:
    """Verify that c is equivalent to (c1 or c2): both branches entail c, and
    c conjoined with the negation of any c1 conjunct entails c2."""
    if not entails(c1, c, theory) or not entails(c2, c, theory):
        raise Refusal(
            rule,
            "ConstraintCheckFailed",
            "a case branch does not entail the original constraint",
        )
    for ac in c1:
        if not entails(list(c) + [complement_ac(ac)], c2, theory):
            raise Refusal(
                rule,
                "ConstraintCheckFailed",
                f"the original constraint with {format_ac(complement_ac(ac))}"
                " does not entail the second case",
            )
    if not c1 and not entails(c, c2, theory):
        # c1 is true: the disjunction collapses and c must entail c2
        raise Refusal(
            rule,
            "ConstraintCheckFailed",
            "the first case is vacuous and the second does not cover the"
            " original constraint",
        )


def _replace_subterm(t: Term, old: Term, new: Term) -> Term:
    if t == old:
        return new
    if isinstance(t, Struct):
        return Struct(t.functor, tuple(_replace_subterm(a, old, new) for a in t.args))
    return t


# --- R8: useless predicate deletion ----------------------------------------------------


def useless_preds(program: Program) -> set[str]:
    """Predicates that can never contribute a fact: every clause of a useless
    predicate needs a positive call to a useless predicate."""
    clauses_of: dict[str, list[Clause]] = {}
    for _, c in program.clauses:
        clauses_of.setdefault(c.head.pred, []).append(c)
    u = set(clauses_of)
    changed = True
    while changed:
        changed = False
        for p in sorted(u):
            for c in clauses_of[p]:
                if not any(l.positive and l.atom.pred in u for l in c.body):
                    u.discard(p)
                    changed = True
                    break
    return u


def r8_delete_useless(session, pred: str) -> RuleResult:
    if not isinstance(pred, str):
        raise StepParamError(f"R8: predicate name expected, got {pred!r}")
    useless = useless_preds(session.program)
    if pred not in useless:
        raise Refusal("R8", "NotUseless", f"{pred} is not a useless predicate")
    ids = def_of(pred, session.program)
    program2 = session.program.remove_ids(ids)
    return RuleResult(
        program=program2,
        schema=session.schema,
        rule="R8",
        params={"pred": pred},
        added=[],
        removed=ids,
        notes=[f"removed {len(ids)} clause(s) of useless predicate {pred}"],
    )


# --- R9/R10: constraint addition and deletion -------------------------------------------


def _discharge_semantic_condition(
    session,
    rule: str,
    remainder: Clause,
    d: Sequence[AtomicConstraint],
    justification,
) -> list[str]:
    """The shared condition of R9/R10: in the current perfect model, every
    instance satisfying the remainder's constraint and body admits a witness
    for d. Discharged by the oracle over a finite universe, or recorded as an
    assumption for audit."""
    if not isinstance(justification, Mapping) or "mode" not in justification:
        raise StepParamError(f"{rule}: justification needs a mode (oracle or assumed)")
    mode = justification["mode"]
    if mode == "assumed":
        note = str(justification.get("note", "")).strip()
        if not note:
            raise StepParamError(f"{rule}: an assumed justification needs a note")
        return [f"assumed: {note}"]
    if mode != "oracle":
        raise StepParamError(f"{rule}: unknown justification mode {mode!r}")
    from .oracle import Oracle, OracleError, Universe

    try:
        universe = Universe.parse(str(justification.get("universe", "")))
    except ValueError as e:
        raise StepParamError(f"{rule}: bad universe: {e}")
    sorts_clause = Clause(
        remainder.head, remainder.constraint + tuple(d), remainder.body
    )
    try:
        oracle = Oracle(session.program, session.schema, universe)
        verdict = oracle.check_entailment(
            remainder.constraint, remainder.body, d, clause_for_sorts=sorts_clause
        )
    except OracleError as e:
        raise Refusal(rule, "OracleInconclusive", str(e))
    if verdict.status == "holds":
        return [f"oracle check over {justification.get('universe')}: holds"]
    if verdict.status == "fails":
        witness = ", ".join(
            f"{name}={format_term(t)}" for name, t in sorted(verdict.witness.items())
        )
        raise Refusal(
            rule,
            "OracleCheckFailed",
            f"counterexample valuation: {witness or '(empty)'}",
        )
    raise Refusal(rule, "OracleInconclusive", verdict.reason or "inconclusive")


def r9_add_constraint(session, clause_id: int, d: str, justification=None) -> RuleResult:
    program = session.program
    gamma = _get_clause(program, "R9", clause_id)
    d_acs = _parse_constraint_text("R9", d)
    notes = (
        _discharge_semantic_condition(session, "R9", gamma, d_acs, justification)
        if d_acs
        else ["adding true needs no justification"]
    )
    new = Clause(gamma.head, gamma.constraint + d_acs, gamma.body)
    program2, added = program.replace_clause(clause_id, [new])
    return RuleResult(
        program=program2,
        schema=session.schema,
        rule="R9",
        params={"clause_id": clause_id, "d": d, "justification": dict(justification or {})},
        added=added,
        removed=[clause_id],
        notes=notes,
    )


def r10_delete_constraint(
    session, clause_id: int, d: str, justification=None
) -> RuleResult:
    program, theory = session.program, session.theory
    gamma = _get_clause(program, "R10", clause_id)
    d_acs = _parse_constraint_text("R10", d)
    remaining = list(gamma.constraint)
    for ac in d_acs:
        key = format_ac(canon_ac(ac))
        hit = next(
            (i for i, c in enumerate(remaining) if format_ac(canon_ac(c)) == key), None
        )
        if hit is None:
            raise StepParamError(
                f"R10: conjunct {format_ac(ac)} does not occur in clause {clause_id}"
            )
        del remaining[hit]
    new = Clause(gamma.head, tuple(remaining), gamma.body)
    _strat_check_added("R10", [new], session.schema, theory)
    notes = (
        _discharge_semantic_condition(session, "R10", new, d_acs, justification)
        if d_acs
        else ["deleting true needs no justification"]
    )
    program2, added = program.replace_clause(clause_id, [new])
    return RuleResult(
        program=program2,
        schema=session.schema,
        rule="R10",
        params={"clause_id": clause_id, "d": d, "justification": dict(justification or {})},
        added=added,
        removed=[clause_id],
        notes=notes,
    )


# --- dispatch and the applicability probe ----------------------------------------------

_RULE_FUNCS = {
    "R1": (r1_define, ("defs", "sigma")),
    "R2": (r2_eliminate, ("pred",)),
    "R3": (r3_unfold_pos, ("clause_id", "atom_position")),
    "R4": (r4_unfold_neg, ("clause_id", "literal_position")),
    "R5": (r5_fold_pos, ("clause_ids", "def_pred", "theta", "at")),
    "R6": (r6_fold_neg, ("clause_id", "def_pred", "theta", "at")),
    "R7": (r7_replace, ("law", "direction", "clause_ids", "law_params")),
    "R8": (r8_delete_useless, ("pred",)),
    "R9": (r9_add_constraint, ("clause_id", "d", "justification")),
    "R10": (r10_delete_constraint, ("clause_id", "d", "justification")),
}


def apply_rule(session, rule: str, params: Mapping) -> RuleResult:
    if rule not in _RULE_FUNCS:
        raise StepParamError(f"unknown rule {rule!r}")
    func, allowed = _RULE_FUNCS[rule]
    if not isinstance(params, Mapping):
        raise StepParamError(f"{rule}: params must be an object")
    unknown = set(params) - set(allowed)
    if unknown:
        raise StepParamError(f"{rule}: unknown parameter(s) {sorted(unknown)}")
    kwargs = {k: params[k] for k in allowed if k in params}
    try:
        return func(session, **kwargs)
    except TypeError as e:
        if "required" in str(e) or "argument" in str(e):
            raise StepParamError(f"{rule}: {e}")
        raise


def applicable_rules(session, clause_id: int) -> list[dict]:
    """Dry-run probe: which rule applications on this clause would succeed.

    Every entry marked applicable has actually been executed against a copy
    of the current program; refused probes are reported with their tag so a
    front end can grey them out with the failed condition.
    """
    program = session.program
    try:
        gamma = program.by_id(clause_id)
    except KeyError:
        return []
    out: list[dict] = []

    def probe(rule: str, params: dict, summary: str):
        try:
            apply_rule(session, rule, params)
        except Refusal as r:
            out.append(
                {
                    "rule": rule,
                    "params": params,
                    "summary": summary,
                    "applicable": False,
                    "refusal": r.to_payload(),
                }
            )
            return
        except StepParamError:
            return
        out.append(
            {
                "rule": rule,
                "params": params,
                "summary": summary,
                "applicable": True,
                "refusal": None,
            }
        )

    for i, lit in enumerate(gamma.body):
        if lit.positive:
            probe(
                "R3",
                {"clause_id": clause_id, "atom_position": i},
                f"unfold at {format_atom(lit.atom)}",
            )
        else:
            probe(
                "R4",
                {"clause_id": clause_id, "literal_position": i},
                f"unfold at {format_lit(lit)}",
            )

    seen_def_preds: list[str] = []
    for entry in session.defs:
        if entry.pred not in seen_def_preds:
            seen_def_preds.append(entry.pred)
    for dp in seen_def_preds:
        defs = [e for e in session.defs if e.pred == dp]
        if len(defs) == 1:
            probe(
                "R5",
                {"clause_ids": [clause_id], "def_pred": dp},
                f"fold using the definition of {dp}",
            )
            if any(not l.positive for l in gamma.body):
                probe(
                    "R6",
                    {"clause_id": clause_id, "def_pred": dp},
                    f"fold a negative literal using {dp}",
                )

    if any(
        li.positive and not lj.positive and li.atom == lj.atom
        for li in gamma.body
        for lj in gamma.body
    ):
        probe("R7", {"law": 1, "clause_ids": [clause_id]}, "remove: complementary pair")
    if any(l.positive and l.atom == gamma.head for l in gamma.body):
        probe("R7", {"law": 2, "clause_ids": [clause_id]}, "remove: head recurs in body")
    for i in range(len(gamma.body) - 1):
        if gamma.body[i] == gamma.body[i + 1] and gamma.body[i].positive:
            probe(
                "R7",
                {"law": 4, "clause_ids": [clause_id], "law_params": {"at": i}},
                "drop duplicate atom",
            )
            break
    if is_satisfiable(gamma.constraint, session.theory) == SatResult.UNSAT:
        probe("R7", {"law": 7, "clause_ids": [clause_id]}, "remove: constraint unsatisfiable")

    probe("R2", {"pred": gamma.head.pred}, f"eliminate the definition of {gamma.head.pred}")
    if gamma.head.pred in useless_preds(program):
        probe("R8", {"pred": gamma.head.pred}, f"delete useless predicate {gamma.head.pred}")
    return out
