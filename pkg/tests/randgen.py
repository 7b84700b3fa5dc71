"""Seeded random generators: stratified programs, transformation walks over
them, and linear constraints. Used by the property tests and the acceptance
battery; everything is driven by an explicit random.Random so runs are
reproducible."""

import random
from fractions import Fraction
from itertools import product

from stratfold.clauses import apply_subst_ac, format_ac
from stratfold.oracle import Universe
from stratfold.rules import Refusal, StepParamError, useless_preds
from stratfold.session import Session
from stratfold.solver import GroundUndefined, evaluate_ground
from stratfold.terms import Num, Var

# --- random locally stratified programs ------------------------------------------

RELS = ["=", "!=", "<", "<=", ">=", ">"]


def random_program_text(rng: random.Random) -> tuple[str, list[str]]:
    """One random stratified program over unary predicates p0..pk and the
    predicates of interest (the top-level heads). Negative calls only point
    to strictly lower levels; self-recursion descends on the argument."""
    n = rng.randint(2, 6)
    levels = sorted(rng.randint(0, 2) for _ in range(n))
    names = [f"p{i}" for i in range(n)]
    lines = []
    recursive = set()
    for i, name in enumerate(names):
        lower = [j for j in range(n) if levels[j] < levels[i]]
        for _ in range(rng.randint(1, 3)):
            kind = rng.random()
            if kind < 0.35 or not lower:
                a = rng.randint(-3, 3)
                b = rng.randint(a, 3)
                pick = rng.randrange(4)
                if pick == 0:
                    lines.append(f"{name}(X) :- X >= {a}, X <= {b}.")
                elif pick == 1:
                    lines.append(f"{name}(X) :- X >= {a}.")
                elif pick == 2:
                    lines.append(f"{name}(X) :- X <= {a}.")
                else:
                    lines.append(f"{name}(X) :- X = {a}.")
            elif kind < 0.6:
                j = rng.choice(lower)
                guard = f"X >= {rng.randint(-3, 1)}, " if rng.random() < 0.5 else ""
                lines.append(f"{name}(X) :- {guard}p{j}(X).")
            elif kind < 0.85:
                j = rng.choice(lower)
                guard = f"X <= {rng.randint(0, 3)}, " if rng.random() < 0.5 else ""
                lines.append(f"{name}(X) :- {guard}\\+ p{j}(X).")
            else:
                recursive.add(i)
                lines.append(f"{name}({rng.randint(-3, 1)}).")
                lines.append(f"{name}(X) :- X = Y + 1, X <= 3, {name}(Y).")
    sigma = []
    for i, name in enumerate(names):
        if i in recursive:
            sigma.append(f"#sigma {name}(X) = <{levels[i]}, X>.")
        else:
            sigma.append(f"#sigma {name}/1 = <{levels[i]}, 0>.")
    top = max(levels)
    pred_int = [names[i] for i in range(n) if levels[i] == top]
    return "\n".join(sigma + lines) + "\n", pred_int


def random_session(rng: random.Random, max_tries: int = 40) -> Session:
    """Rejection-sample until the generated program parses, stratifies, and
    its model over the shared universe is computable without escape."""
    for _ in range(max_tries):
        text, pred_int = random_program_text(rng)
        try:
            sess = Session.from_text(text, pred_int=pred_int)
        except Exception:
            continue
        if sess.oracle_diff(Universe.parse("int=-3..3"))["status"] != "ok":
            continue
        return sess
    raise RuntimeError("could not generate a usable random program")


# --- random transformation walks --------------------------------------------------


class _Skip(Exception):
    pass


def _positive_positions(sess):
    out = []
    for cid, c in sess.program.clauses:
        for i, lit in enumerate(c.body):
            if lit.positive:
                out.append((cid, i))
    return out


def _negative_positions(sess):
    out = []
    for cid, c in sess.program.clauses:
        for i, lit in enumerate(c.body):
            if not lit.positive:
                out.append((cid, i))
    return out


def _motif_unfold_pos(sess, rng, fresh):
    cands = _positive_positions(sess)
    if not cands:
        raise _Skip
    cid, i = rng.choice(cands)
    sess.apply("R3", {"clause_id": cid, "atom_position": i})
    return 1


def _motif_unfold_neg(sess, rng, fresh):
    cands = _negative_positions(sess)
    if not cands:
        raise _Skip
    cid, i = rng.choice(cands)
    sess.apply("R4", {"clause_id": cid, "literal_position": i})
    return 1


def _motif_define_unfold_fold(sess, rng, fresh):
    # introduce t(X) :- a(X) over a predicate that occurs positively in some
    # other clause body, unfold the definition's copy, then fold that body
    cands = _positive_positions(sess)
    if not cands:
        raise _Skip
    cid, i = rng.choice(cands)
    target = sess.program.by_id(cid).body[i].atom
    if target.arity != 1:
        raise _Skip
    name = f"t{next(fresh)}"
    sess.apply("R1", {"defs": [f"{name}(X) :- {target.pred}(X)."]})
    def_cid = sess.defs[-1].program_clause_id
    sess.apply("R3", {"clause_id": def_cid, "atom_position": 0})
    sess.apply("R5", {"clause_ids": [cid], "def_pred": name})
    return 3


def _motif_define_fold_neg(sess, rng, fresh):
    cands = _negative_positions(sess)
    if not cands:
        raise _Skip
    cid, i = rng.choice(cands)
    target = sess.program.by_id(cid).body[i].atom
    if target.arity != 1:
        raise _Skip
    name = f"t{next(fresh)}"
    sess.apply("R1", {"defs": [f"{name}(X) :- {target.pred}(X)."]})
    def_cid = sess.defs[-1].program_clause_id
    sess.apply("R6", {"clause_id": cid, "def_pred": name})
    sess.apply("R3", {"clause_id": def_cid, "atom_position": 0})
    return 3


def _motif_dup_constraint(sess, rng, fresh):
    # replace a clause constraint with an equivalent text (first conjunct
    # repeated): exercises the equivalence-checked replacement law
    cands = [(cid, c) for cid, c in sess.program.clauses if c.constraint]
    if not cands:
        raise _Skip
    cid, c = rng.choice(cands)
    text = ", ".join(format_ac(ac) for ac in c.constraint)
    sess.apply(
        "R7",
        {
            "law": 8,
            "direction": "LR",
            "clause_ids": [cid],
            "law_params": {"constraint": text + ", " + format_ac(c.constraint[0])},
        },
    )
    return 1


def _motif_delete_useless(sess, rng, fresh):
    protected = set(sess.pred_int) | {d.pred for d in sess.defs}
    cands = sorted(useless_preds(sess.program) - protected)
    if not cands:
        raise _Skip
    sess.apply("R8", {"pred": rng.choice(cands)})
    return 1


_MOTIFS = [
    (_motif_unfold_pos, 4),
    (_motif_unfold_neg, 3),
    (_motif_define_unfold_fold, 3),
    (_motif_define_fold_neg, 3),
    (_motif_dup_constraint, 2),
    (_motif_delete_useless, 1),
]


def random_walk(rng: random.Random, fresh) -> dict | None:
    """One random program plus up to six random rule applications. Returns
    the oracle comparison of initial vs final models on the predicates of
    interest, or None when the walk is discarded (no step landed, final
    sequence not admissible, or model computation escaped the universe)."""
    sess = random_session(rng)
    budget = rng.randint(1, 6)
    steps = 0
    for _ in range(24):
        if steps >= budget:
            break
        room = budget - steps
        options = [(m, w) for m, w in _MOTIFS if (3 if m in
                    (_motif_define_unfold_fold, _motif_define_fold_neg) else 1) <= room]
        motif = rng.choices([m for m, _ in options], [w for _, w in options])[0]
        before = len(sess.steps)
        try:
            steps += motif(sess, rng, fresh)
        except (_Skip, Refusal, StepParamError):
            # a motif may die midway (e.g. the fold refuses); keep whatever
            # prefix landed, it is still a valid sequence
            steps += len(sess.steps) - before
            continue
    if not sess.steps:
        return None
    if not sess.check_admissible().ok:
        return None
    diff = sess.oracle_diff(Universe.parse("int=-3..3"))
    if diff["status"] != "ok":
        return None
    return diff


# --- random linear constraints ----------------------------------------------------


def random_constraint_text(
    rng: random.Random,
    var_names: tuple[str, ...],
    n_conjuncts: int,
    rels: list[str] = RELS,
) -> str:
    parts = []
    for _ in range(n_conjuncts):
        k = rng.randint(1, len(var_names))
        chosen = rng.sample(list(var_names), k)
        terms = []
        for v in chosen:
            c = rng.choice([-3, -2, -1, 1, 2, 3])
            terms.append(v if c == 1 else f"{c} * {v}")
        lhs = " + ".join(terms)
        parts.append(f"{lhs} {rng.choice(rels)} {rng.randint(-5, 5)}")
    return ", ".join(parts)


def int_grid(var_names, lo=-5, hi=5):
    vs = [Var(v) for v in var_names]
    for point in product(range(lo, hi + 1), repeat=len(vs)):
        yield {v: Num(x) for v, x in zip(vs, point)}


def half_grid(var_names, lo=-5, hi=5):
    vals = [Fraction(k, 2) for k in range(2 * lo, 2 * hi + 1)]
    vs = [Var(v) for v in var_names]
    for point in product(vals, repeat=len(vs)):
        yield {v: Num(x) for v, x in zip(vs, point)}


def holds_at(acs, point, theory) -> bool | None:
    """Ground truth of a conjunction at one grid point; None when undefined
    (e.g. a negative numeral over the naturals)."""
    try:
        return evaluate_ground([apply_subst_ac(ac, point) for ac in acs], theory)
    except GroundUndefined:
        return None
