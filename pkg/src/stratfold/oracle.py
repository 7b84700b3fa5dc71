"""Ground semantics at desk scale.

Everything here works over a finite universe: an integer range, a pool of
list elements, a symbol pool, and a list-length cap, refined per predicate
argument by sort inference (or explicit per-position pools). Within the
universe the intended model of a stratified program is computed bottom-up,
stratum by stratum in rank order, with join-based clause evaluation; truth
of single atoms is decided independently by top-down proof-tree search.
The two routes are deliberately separate so they can cross-check each other.

Partial arithmetic is honored exactly here: a ground instance whose
constraint has no value does not fire, an atom with an undefined argument
is no atom at all (false positively, true under negation), and a head with
an undefined argument produces nothing.

Escaping the universe is first-class: deriving through a body atom that
falls outside the pools aborts the computation with an Overflow outcome
rather than guessing. A head outside the pools is silently dropped; the
model is then still correct for every atom inside the universe as long as
no body escape occurred.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, Mapping, Sequence

from .terms import (
    Term,
    Var,
    Num,
    Sym,
    Struct,
    NIL,
    apply_subst_term,
    ground_sort_key,
    is_arith,
    mklist,
    term_vars,
)
from .clauses import (
    Atom,
    AtomicConstraint,
    Clause,
    Lit,
    Program,
    format_atom,
    linearize,
)
from .sigma import StratSchema, ground_sigma
from .solver import GroundUndefined, eval_ground_term, evaluate_ground


class OracleError(Exception):
    pass


class OverflowEscape(Exception):
    def __init__(self, atom: Atom):
        super().__init__(f"search left the universe at {format_atom(atom)}")
        self.atom = atom


# --- universes -----------------------------------------------------------------


@dataclass(frozen=True)
class Universe:
    int_range: tuple[int, int] = (-3, 3)
    list_len: int = 0
    elems: tuple[Term, ...] = ()
    syms: tuple[str, ...] = ()
    pred_pools: tuple[tuple[tuple[str, int], tuple[Term, ...]], ...] = ()

    @staticmethod
    def parse(spec: str) -> "Universe":
        """Parse "int=-3..6,listlen=4,elem=0..3,syms=a:b" style strings."""
        int_range = (-3, 3)
        list_len = 0
        elems: tuple[Term, ...] = ()
        syms: tuple[str, ...] = ()
        if spec.strip():
            for part in spec.split(","):
                part = part.strip()
                if not part:
                    continue
                if "=" not in part:
                    raise OracleError(f"bad universe component {part!r}")
                key, _, val = part.partition("=")
                key = key.strip()
                val = val.strip()
                if key == "int":
                    lo, _, hi = val.partition("..")
                    int_range = (int(lo), int(hi))
                elif key == "listlen":
                    list_len = int(val)
                elif key == "elem":
                    lo, _, hi = val.partition("..")
                    elems = tuple(Num(Fraction(i)) for i in range(int(lo), int(hi) + 1))
                elif key == "syms":
                    syms = tuple(s.strip() for s in val.split(":") if s.strip())
                else:
                    raise OracleError(f"unknown universe key {key!r}")
        return Universe(int_range, list_len, elems, syms)

    def describe(self) -> str:
        parts = [f"int={self.int_range[0]}..{self.int_range[1]}", f"listlen={self.list_len}"]
        if self.elems:
            parts.append(f"elems={len(self.elems)} terms")
        if self.syms:
            parts.append(f"syms={':'.join(self.syms)}")
        return ",".join(parts)

    def with_pool(self, pred: str, pos: int, pool: Sequence[Term]) -> "Universe":
        pools = dict(self.pred_pools)
        pools[(pred, pos)] = tuple(pool)
        return Universe(
            self.int_range, self.list_len, self.elems, self.syms, tuple(sorted(pools.items(), key=lambda kv: kv[0]))
        )

    # pools ----------------------------------------------------------------

    def int_pool(self) -> tuple[Term, ...]:
        lo, hi = self.int_range
        return tuple(Num(Fraction(i)) for i in range(lo, hi + 1))

    def sym_pool(self) -> tuple[Term, ...]:
        return tuple(Sym(s) for s in self.syms)

    def elem_pool(self) -> tuple[Term, ...]:
        if self.elems:
            return self.elems
        if self.syms:
            return self.sym_pool()
        return self.int_pool()

    def list_pool(self) -> tuple[Term, ...]:
        elems = self.elem_pool()
        out: list[Term] = []
        layer: list[tuple[Term, ...]] = [()]
        for _ in range(self.list_len + 1):
            out.extend(mklist(list(combo)) for combo in layer)
            if not elems:
                break
            layer = [(e,) + c for e in elems for c in layer]
        return tuple(dict.fromkeys(out))

    def flat_pool(self) -> tuple[Term, ...]:
        seen = dict.fromkeys(self.int_pool())
        for t in self.elem_pool():
            seen.setdefault(t, None)
        for t in self.sym_pool():
            seen.setdefault(t, None)
        return tuple(seen)


_SORT_POOLS = {
    "int": Universe.int_pool,
    "sym": Universe.sym_pool,
    "elem": Universe.elem_pool,
    "list": Universe.list_pool,
}


# --- sort inference ---------------------------------------------------------------


class _UF:
    def __init__(self):
        self.parent: dict = {}

    def find(self, x):
        self.parent.setdefault(x, x)
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[ra] = rb


def infer_sorts(program: Program) -> dict[tuple[str, int], frozenset[str]]:
    """Sort tags per (predicate, argument position), via unification of
    positions linked by shared variables plus shape evidence."""
    uf = _UF()
    tags: dict = {}

    def add_tag(key, tag: str):
        tags.setdefault(key, set()).add(tag)

    def scan_term(t: Term, key, ci: int):
        if isinstance(t, Var):
            uf.union(key, ("v", ci, t.name))
            return
        if isinstance(t, Num) or is_arith(t):
            add_tag(key, "int")
            for v in term_vars(t):
                add_tag(("v", ci, v.name), "int")
            return
        if t == NIL or (isinstance(t, Struct) and t.functor == "."):
            add_tag(key, "list")
            cur = t
            while isinstance(cur, Struct) and cur.functor == "." and len(cur.args) == 2:
                h, cur = cur.args
                if isinstance(h, Var):
                    add_tag(("v", ci, h.name), "elem")
                else:
                    for v in term_vars(h):
                        add_tag(("v", ci, v.name), "elem")
            if isinstance(cur, Var):
                add_tag(("v", ci, cur.name), "list")
            return
        if isinstance(t, Sym):
            add_tag(key, "sym")
            return
        # other constructors: opaque
        add_tag(key, "term")

    for ci, (_, clause) in enumerate(program.clauses):
        for atom in [clause.head] + [l.atom for l in clause.body]:
            for i, arg in enumerate(atom.args):
                scan_term(arg, ("p", atom.pred, i), ci)
        for ac in clause.constraint:
            llin, rlin = linearize(ac.lhs), linearize(ac.rhs)
            if llin is not None and rlin is not None:
                numeric_evidence = (
                    not (isinstance(ac.lhs, Var) and isinstance(ac.rhs, Var))
                )
                for v in list(llin[0]) + list(rlin[0]):
                    if numeric_evidence:
                        add_tag(("v", ci, v.name), "int")
                if isinstance(ac.lhs, Var) and isinstance(ac.rhs, Var):
                    uf.union(("v", ci, ac.lhs.name), ("v", ci, ac.rhs.name))
            else:
                if isinstance(ac.lhs, Var) and not isinstance(ac.rhs, Var):
                    scan_term(ac.rhs, ("v", ci, ac.lhs.name), ci)
                elif isinstance(ac.rhs, Var) and not isinstance(ac.lhs, Var):
                    scan_term(ac.lhs, ("v", ci, ac.rhs.name), ci)

    merged: dict = {}
    for key, ts in tags.items():
        root = uf.find(key)
        merged.setdefault(root, set()).update(ts)
    out: dict[tuple[str, int], frozenset[str]] = {}
    for key in list(uf.parent) + list(tags):
        if key[0] != "p":
            continue
        _, pred, i = key
        root = uf.find(key)
        out[(pred, i)] = frozenset(merged.get(root, set()))
    return out


# --- the oracle -------------------------------------------------------------------


@dataclass(frozen=True)
class MuValue:
    level: int
    measure: Fraction
    size: int

    def key(self):
        return (self.level, self.measure, self.size)


@dataclass
class ModelResult:
    status: str  # "ok" | "overflow"
    atoms: frozenset[Atom] = frozenset()
    witness: Atom | None = None


@dataclass
class EntailmentVerdict:
    status: str  # "holds" | "fails" | "inconclusive"
    witness: dict[str, Term] | None = None
    reason: str = ""


class Oracle:
    def __init__(self, program: Program, schema: StratSchema | None = None, universe: Universe | None = None):
        self.program = program
        self.schema = schema if schema is not None else StratSchema.from_program(program)
        self.universe = universe if universe is not None else Universe()
        self.theory = program.theory
        self._sorts = infer_sorts(program)
        self._pools: dict[tuple[str, int], tuple[Term, ...]] = {}
        self._pool_sets: dict[tuple[str, int], frozenset[Term]] = {}
        self._arities: dict[str, int] = {}
        for _, c in program.clauses:
            for atom in [c.head] + [l.atom for l in c.body]:
                prev = self._arities.setdefault(atom.pred, atom.arity)
                if prev != atom.arity:
                    raise OracleError(f"predicate {atom.pred} used at arities {prev} and {atom.arity}")
        self._model: ModelResult | None = None
        self._proof_memo: dict[Atom, bool] = {}
        self._mu_sizes: dict[Atom, int] | None = None

    # pools -----------------------------------------------------------------

    def pool(self, pred: str, pos: int) -> tuple[Term, ...]:
        key = (pred, pos)
        if key in self._pools:
            return self._pools[key]
        explicit = dict(self.universe.pred_pools)
        if key in explicit:
            out = explicit[key]
        else:
            tags = self._sorts.get(key, frozenset())
            out = self._pool_for_tags(tags)
        self._pools[key] = out
        self._pool_sets[key] = frozenset(out)
        return out

    def _pool_for_tags(self, tags: frozenset[str]) -> tuple[Term, ...]:
        if not tags or tags == {"term"}:
            return self.universe.flat_pool()
        seen: dict[Term, None] = {}
        for tag in ("int", "elem", "sym", "list"):
            if tag in tags:
                for t in _SORT_POOLS[tag](self.universe):
                    seen.setdefault(t, None)
        if "term" in tags:
            for t in self.universe.flat_pool():
                seen.setdefault(t, None)
        return tuple(seen)

    def var_pool(self, var_tags: frozenset[str]) -> tuple[Term, ...]:
        return self._pool_for_tags(var_tags)

    def in_universe(self, atom: Atom) -> bool:
        if atom.pred not in self._arities or self._arities[atom.pred] != atom.arity:
            return False
        for i, arg in enumerate(atom.args):
            self.pool(atom.pred, i)
            if arg not in self._pool_sets[(atom.pred, i)]:
                return False
        return True

    def universe_atoms(self, pred: str) -> Iterator[Atom]:
        arity = self._arities.get(pred)
        if arity is None:
            return
        pools = [self.pool(pred, i) for i in range(arity)]
        for combo in itertools.product(*pools):
            yield Atom(pred, tuple(combo))

    def all_universe_atoms(self, preds: Iterable[str] | None = None) -> Iterator[Atom]:
        chosen = list(preds) if preds is not None else sorted(self._arities)
        for pred in chosen:
            yield from self.universe_atoms(pred)

    # instance generation ------------------------------------------------------

    def _clause_var_sorts(self, clause: Clause, ci_tags: dict[str, frozenset[str]] | None = None) -> dict[str, frozenset[str]]:
        """Sort tags for each clause variable from the positions it occupies."""
        tags: dict[str, set[str]] = {}
        def note(v: Var, ts: frozenset[str]):
            tags.setdefault(v.name, set()).update(ts)
        for atom in [clause.head] + [l.atom for l in clause.body]:
            for i, arg in enumerate(atom.args):
                ts = self._sorts.get((atom.pred, i), frozenset())
                if isinstance(arg, Var):
                    note(arg, ts)
                else:
                    # variables inside structures: elements and tails of lists
                    cur = arg
                    if is_arith(arg):
                        for v in term_vars(arg):
                            note(v, frozenset({"int"}))
                        continue
                    while isinstance(cur, Struct) and cur.functor == "." and len(cur.args) == 2:
                        h, cur = cur.args
                        for v in term_vars(h):
                            note(v, frozenset({"elem"}))
                    if isinstance(cur, Var):
                        note(cur, frozenset({"list"}))
        for ac in clause.constraint:
            if linearize(ac.lhs) is not None and linearize(ac.rhs) is not None:
                if not (isinstance(ac.lhs, Var) and isinstance(ac.rhs, Var)):
                    for v in term_vars(ac.lhs) + term_vars(ac.rhs):
                        note(v, frozenset({"int"}))
        return {name: frozenset(ts) for name, ts in tags.items()}

    def _eval_atom(self, atom: Atom, binding: Mapping[Var, Term]) -> Atom | None:
        """Ground atom with evaluated arguments, or None when undefined."""
        args = []
        for arg in atom.args:
            t = apply_subst_term(arg, binding)
            try:
                args.append(eval_ground_term(t, self.theory))
            except GroundUndefined:
                return None
        return Atom(atom.pred, tuple(args))

    def _constraint_true(self, constraint: Sequence[AtomicConstraint], binding: Mapping[Var, Term]) -> bool:
        try:
            ground = [
                AtomicConstraint(ac.rel, apply_subst_term(ac.lhs, binding), apply_subst_term(ac.rhs, binding))
                for ac in constraint
            ]
            return evaluate_ground(ground, self.theory)
        except GroundUndefined:
            return False

    def _match(self, pattern: Term, value: Term, binding: dict[Var, Term]) -> list[AtomicConstraint] | None:
        """Match a clause-side pattern against a ground value, extending
        binding in place; arithmetic subpatterns with unbound variables come
        back as residual equations. None means definite mismatch."""
        if isinstance(pattern, Var):
            if pattern in binding:
                bound = binding[pattern]
                if term_vars(bound):
                    return [AtomicConstraint("=", bound, value)]
                try:
                    return [] if eval_ground_term(bound, self.theory) == value else None
                except GroundUndefined:
                    return None
            binding[pattern] = value
            return []
        if not term_vars(pattern):
            try:
                return [] if eval_ground_term(apply_subst_term(pattern, binding), self.theory) == value else None
            except GroundUndefined:
                return None
        if is_arith(pattern):
            grounded = apply_subst_term(pattern, binding)
            if not term_vars(grounded):
                try:
                    return [] if eval_ground_term(grounded, self.theory) == value else None
                except GroundUndefined:
                    return None
            return [AtomicConstraint("=", grounded, value)]
        if isinstance(pattern, Struct):
            if not isinstance(value, Struct) or value.functor != pattern.functor or len(value.args) != len(pattern.args):
                return None
            eqs: list[AtomicConstraint] = []
            for p, v in zip(pattern.args, value.args):
                sub = self._match(p, v, binding)
                if sub is None:
                    return None
                eqs.extend(sub)
            return eqs
        return None  # Sym/Num pattern not equal to value (ground case above)

    def _complete_bindings(
        self,
        clause: Clause,
        binding: dict[Var, Term],
        residual: list[AtomicConstraint],
        var_tags: dict[str, frozenset[str]],
    ) -> Iterator[dict[Var, Term]]:
        """Enumerate pool values for the remaining free variables and filter
        by the clause constraint plus residual equations."""
        free = [
            v
            for v in dict.fromkeys(
                [w for ac in list(clause.constraint) + residual for w in term_vars(ac.lhs) + term_vars(ac.rhs)]
                + [w for l in clause.body for w in _atom_term_vars(l.atom)]
                + [w for w in _atom_term_vars(clause.head)]
            )
            if v not in binding
        ]
        pools = []
        for v in free:
            pool = self.var_pool(var_tags.get(v.name, frozenset()))
            if not pool:
                return
            pools.append(pool)
        for combo in itertools.product(*pools):
            full = dict(binding)
            full.update({v: t for v, t in zip(free, combo)})
            if not self._constraint_true(list(clause.constraint) + residual, full):
                continue
            yield full

    # bottom-up model -----------------------------------------------------------

    def perfect_model(self) -> ModelResult:
        if self._model is not None:
            return self._model
        try:
            atoms = self._compute_model()
            self._model = ModelResult("ok", frozenset(atoms))
        except OverflowEscape as e:
            self._model = ModelResult("overflow", frozenset(), e.atom)
        return self._model

    def _rank(self, atom: Atom) -> tuple[int, Fraction]:
        return ground_sigma(atom, self.schema)

    def _compute_model(self) -> set[Atom]:
        # bucket the universe by rank to drive stratified evaluation
        ranks: set[tuple[int, Fraction]] = set()
        for pred in self._arities:
            if pred not in self.schema.entries:
                raise OracleError(f"no sigma entry for predicate {pred}")
            for atom in self.universe_atoms(pred):
                ranks.add(self._rank(atom))
        model: set[Atom] = set()
        var_tag_cache = {cid: self._clause_var_sorts(c) for cid, c in self.program.clauses}
        for rank in sorted(ranks):
            # fixpoint within the rank bucket
            changed = True
            while changed:
                changed = False
                for cid, clause in self.program.clauses:
                    for head, _, _ in self._instances(clause, model, rank, var_tag_cache[cid]):
                        if head not in model:
                            model.add(head)
                            changed = True
        return model

    def _instances(
        self,
        clause: Clause,
        model: set[Atom],
        rank: tuple[int, Fraction],
        var_tags: dict[str, frozenset[str]],
    ) -> Iterator[tuple[Atom, list[Atom], list[Atom]]]:
        """Ground instances of clause whose constraint holds, whose positive
        body atoms are in model, whose negative atoms (strictly lower rank)
        are absent, and whose head has exactly the given rank."""
        pos = [l for l in clause.body if l.positive]
        neg = [l for l in clause.body if not l.positive]
        by_pred: dict[str, list[Atom]] = {}
        for a in model:
            by_pred.setdefault(a.pred, []).append(a)

        def join(i: int, binding: dict[Var, Term], residual: list[AtomicConstraint]) -> Iterator[tuple[dict[Var, Term], list[AtomicConstraint]]]:
            if i == len(pos):
                yield binding, residual
                return
            lit = pos[i]
            for fact in by_pred.get(lit.atom.pred, ()):
                if fact.arity != lit.atom.arity:
                    continue
                b2 = dict(binding)
                eqs: list[AtomicConstraint] = []
                ok = True
                for p, v in zip(lit.atom.args, fact.args):
                    sub = self._match(p, v, b2)
                    if sub is None:
                        ok = False
                        break
                    eqs.extend(sub)
                if ok:
                    yield from join(i + 1, b2, residual + eqs)

        for binding, residual in join(0, {}, []):
            for full in self._complete_bindings(clause, binding, residual, var_tags):
                head = self._eval_atom(clause.head, full)
                if head is None:
                    continue
                if not self.in_universe(head):
                    continue  # head escape: silently dropped
                if self._rank(head) != rank:
                    continue
                # positive body atoms already matched facts; re-evaluate for
                # the enumerated variables (a pattern may contain them)
                pos_atoms: list[Atom] = []
                ok = True
                for lit in pos:
                    a = self._eval_atom(lit.atom, full)
                    if a is None or a not in model:
                        ok = False
                        break
                    pos_atoms.append(a)
                if not ok:
                    continue
                neg_atoms: list[Atom] = []
                for lit in neg:
                    a = self._eval_atom(lit.atom, full)
                    if a is None:
                        continue  # no such atom: the negation holds
                    if not self.in_universe(a):
                        raise OverflowEscape(a)
                    if self._rank(a) >= rank:
                        raise OracleError(
                            f"instance of clause for {clause.head.pred} negates"
                            f" {format_atom(a)} at rank >= its head; program is"
                            f" not locally stratified along this instance"
                        )
                    if a in model:
                        ok = False
                        break
                    neg_atoms.append(a)
                if not ok:
                    continue
                yield head, pos_atoms, neg_atoms

    # top-down proof trees ---------------------------------------------------------

    def has_proof_tree(self, atom: Atom) -> bool:
        """Truth of one ground atom by proof-tree search with loop checking.
        Raises OverflowEscape when the search needs an atom outside the
        universe."""
        args = []
        for a in atom.args:
            try:
                args.append(eval_ground_term(a, self.theory))
            except GroundUndefined:
                return False
        atom = Atom(atom.pred, tuple(args))
        result, _ = self._prove(atom, frozenset())
        return result

    def _prove(self, atom: Atom, stack: frozenset[Atom]) -> tuple[bool, bool]:
        """Returns (provable, pure). pure=False means the negative result
        leaned on the loop check and must not be memoized."""
        if atom in self._proof_memo:
            return self._proof_memo[atom], True
        if not self.in_universe(atom):
            raise OverflowEscape(atom)
        if atom in stack:
            return False, False
        stack2 = stack | {atom}
        pure = True
        for cid, clause in self.program.clauses:
            if clause.head.pred != atom.pred or clause.head.arity != atom.arity:
                continue
            binding: dict[Var, Term] = {}
            eqs: list[AtomicConstraint] = []
            ok = True
            for p, v in zip(clause.head.args, atom.args):
                sub = self._match(p, v, binding)
                if sub is None:
                    ok = False
                    break
                eqs.extend(sub)
            if not ok:
                continue
            var_tags = self._clause_var_sorts(clause)
            for full in self._complete_bindings(clause, binding, eqs, var_tags):
                good = True
                for lit in clause.body:
                    a = self._eval_atom(lit.atom, full)
                    if lit.positive:
                        if a is None:
                            good = False
                            break
                        sub_ok, sub_pure = self._prove(a, stack2)
                        pure = pure and (sub_pure or sub_ok)
                        if not sub_ok:
                            good = False
                            if not sub_pure:
                                pure = False
                            break
                    else:
                        if a is None:
                            continue
                        sub_ok, _ = self._prove(a, frozenset())
                        if sub_ok:
                            good = False
                            break
                if good:
                    self._proof_memo[atom] = True
                    return True, True
        if pure:
            self._proof_memo[atom] = False
        return False, pure

    # minimal proof-tree measure -----------------------------------------------------

    def compute_mu(self, atom: Atom) -> MuValue | None:
        """Lexicographic measure of an atom: its rank plus the minimum number
        of expanded (non-leaf) nodes over all of its proof trees."""
        model = self.perfect_model()
        if model.status != "ok":
            raise OverflowEscape(model.witness)  # type: ignore[arg-type]
        if self._mu_sizes is None:
            self._mu_sizes = self._compute_sizes(set(model.atoms))
        if atom not in self._mu_sizes:
            return None
        level, measure = self._rank(atom)
        return MuValue(level, measure, self._mu_sizes[atom])

    def _compute_sizes(self, model: set[Atom]) -> dict[Atom, int]:
        var_tag_cache = {cid: self._clause_var_sorts(c) for cid, c in self.program.clauses}
        edges: list[tuple[Atom, list[Atom]]] = []
        ranks = {self._rank(a) for a in model}
        for rank in sorted(ranks):
            for cid, clause in self.program.clauses:
                for head, pos_atoms, _ in self._instances(clause, model, rank, var_tag_cache[cid]):
                    edges.append((head, pos_atoms))
        sizes: dict[Atom, int] = {}
        changed = True
        while changed:
            changed = False
            for head, children in edges:
                if all(c in sizes for c in children):
                    cand = 1 + sum(sizes[c] for c in children)
                    if head not in sizes or cand < sizes[head]:
                        sizes[head] = cand
                        changed = True
        return sizes

    # semantic side conditions ----------------------------------------------------------

    def check_entailment(
        self,
        constraint: Sequence[AtomicConstraint],
        body: Sequence[Lit],
        d: Sequence[AtomicConstraint],
        clause_for_sorts: Clause | None = None,
    ) -> EntailmentVerdict:
        """Does the model satisfy: for all instances with constraint and body
        true, some extension of the extra variables makes d true?"""
        probe = clause_for_sorts or Clause(Atom("$goal", ()), tuple(constraint), tuple(body))
        var_tags = self._clause_var_sorts(probe)
        base_vars = list(
            dict.fromkeys(
                [v for ac in constraint for v in term_vars(ac.lhs) + term_vars(ac.rhs)]
                + [v for l in body for v in _atom_term_vars(l.atom)]
            )
        )
        d_vars = [
            v
            for v in dict.fromkeys(v for ac in d for v in term_vars(ac.lhs) + term_vars(ac.rhs))
            if v not in base_vars
        ]
        pools = []
        for v in base_vars:
            pool = self.var_pool(var_tags.get(v.name, frozenset()))
            if not pool:
                return EntailmentVerdict("holds", reason="empty pool: no instances")
            pools.append(pool)
        d_pools = []
        for v in d_vars:
            pool = self.var_pool(var_tags.get(v.name, frozenset({"int"})))
            d_pools.append(pool if pool else self.universe.int_pool())
        try:
            for combo in itertools.product(*pools):
                binding = dict(zip(base_vars, combo))
                if not self._constraint_true(constraint, binding):
                    continue
                all_true = True
                for lit in body:
                    a = self._eval_atom(lit.atom, binding)
                    if lit.positive:
                        if a is None or not self.has_proof_tree(a):
                            all_true = False
                            break
                    else:
                        if a is not None and self.has_proof_tree(a):
                            all_true = False
                            break
                if not all_true:
                    continue
                found = False
                for ext in itertools.product(*d_pools):
                    full = dict(binding)
                    full.update(dict(zip(d_vars, ext)))
                    if self._constraint_true(d, full):
                        found = True
                        break
                if not found:
                    witness = {v.name: binding[v] for v in base_vars}
                    return EntailmentVerdict("fails", witness=witness)
            return EntailmentVerdict("holds")
        except OverflowEscape as e:
            return EntailmentVerdict(
                "inconclusive", reason=f"search left the universe at {format_atom(e.atom)}"
            )


def _atom_term_vars(atom: Atom) -> list[Var]:
    out: list[Var] = []
    for t in atom.args:
        out.extend(term_vars(t))
    return out


# --- model comparison ------------------------------------------------------------------


def models_agree(
    m1: Iterable[Atom],
    m2: Iterable[Atom],
    preds: Iterable[str],
) -> tuple[bool, list[Atom], list[Atom]]:
    """Restrict both models to preds and compare. Returns (agree, only-in-1,
    only-in-2) with the differences in canonical order."""
    ps = set(preds)
    s1 = {a for a in m1 if a.pred in ps}
    s2 = {a for a in m2 if a.pred in ps}
    only1 = sorted(s1 - s2, key=_atom_sort_key)
    only2 = sorted(s2 - s1, key=_atom_sort_key)
    return (not only1 and not only2), only1, only2


def _atom_sort_key(a: Atom):
    return (a.pred, len(a.args), tuple(ground_sort_key(t) for t in a.args))


def sorted_atoms(atoms: Iterable[Atom], schema: StratSchema | None = None) -> list[Atom]:
    """Rank-major, term-minor canonical ordering for printing."""
    if schema is None:
        return sorted(atoms, key=_atom_sort_key)
    return sorted(atoms, key=lambda a: (ground_sigma(a, schema), _atom_sort_key(a)))
