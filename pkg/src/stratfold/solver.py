"""Decision procedures for the constraint part of clauses.

Three theories share one engine:

  integers   linear arithmetic over Z plus syntactic term equality
  rationals  linear arithmetic over Q plus syntactic term equality
  naturals   integers with an implicit v >= 0 for every numeric variable
             and partial subtraction (results below zero are undefined)

Satisfiability runs a structural unification phase (constructor
decomposition, carrier disjointness, variable binding) and then a linear
phase (Gaussian elimination on equations, Fourier-Motzkin on inequalities,
bound tightening and integer witness search over Z). Disequations between
numeric expressions split into strict branches; structural disequations
reduce by constructor decomposition and are otherwise satisfiable over the
infinite carrier.

Everything is exact Fraction arithmetic. Unsat answers are always sound.
Sat over the integer theories requires a concrete witness; when none is
found the answer is Unknown. Symbolic reasoning views arithmetic as total;
only ground evaluation implements partiality exactly, which is why the
ground-model oracle never goes through the symbolic path.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .terms import (
    Term,
    Var,
    Num,
    Sym,
    Struct,
    apply_subst_term,
    compare_ground,
    is_arith,
    is_ground,
    term_vars,
)
from .clauses import Atom, AtomicConstraint, apply_subst_ac, linearize


class SatResult(Enum):
    SAT = "sat"
    UNSAT = "unsat"
    UNKNOWN = "unknown"


THEORIES = ("integers", "rationals", "naturals")

_COMPLEMENT = {"=": "!=", "!=": "=", "<": ">=", "<=": ">", ">=": "<", ">": "<="}


def complement_ac(ac: AtomicConstraint) -> AtomicConstraint:
    """The complementary atomic constraint under the total ground order."""
    return AtomicConstraint(_COMPLEMENT[ac.rel], ac.lhs, ac.rhs)


# --- linear normal form --------------------------------------------------------
#
# A linear constraint is coeffs . vars + const REL 0 with REL in =, <=, <, !=.

_Lin = tuple[dict[Var, Fraction], Fraction, str]


def _to_lin(ac: AtomicConstraint) -> _Lin | None:
    left = linearize(ac.lhs)
    right = linearize(ac.rhs)
    if left is None or right is None:
        return None
    lc, lk = left
    rc, rk = right
    coeffs = dict(lc)
    for v, c in rc.items():
        coeffs[v] = coeffs.get(v, Fraction(0)) - c
    coeffs = {v: c for v, c in coeffs.items() if c != 0}
    const = lk - rk
    rel = ac.rel
    if rel in (">", ">="):
        coeffs = {v: -c for v, c in coeffs.items()}
        const = -const
        rel = "<" if rel == ">" else "<="
    return coeffs, const, rel


def _lin_to_ac(coeffs: Mapping[Var, Fraction], const: Fraction, rel: str) -> AtomicConstraint:
    lhs: Term | None = None
    for v in sorted(coeffs, key=lambda x: x.name):
        c = coeffs[v]
        piece: Term = v if c == 1 else Struct("*", (Num(c), v))
        if lhs is None:
            lhs = piece
        elif c == -1:
            lhs = Struct("-", (lhs, v))
        elif c < 0:
            lhs = Struct("-", (lhs, Struct("*", (Num(-c), v))))
        else:
            lhs = Struct("+", (lhs, piece))
    if lhs is None:
        lhs = Num(Fraction(0))
    return AtomicConstraint(rel, lhs, Num(-const))


def _scale_int(coeffs: dict[Var, Fraction], const: Fraction) -> tuple[dict[Var, Fraction], Fraction]:
    denom = const.denominator
    for c in coeffs.values():
        denom = denom * c.denominator // _gcd(denom, c.denominator)
    if denom != 1:
        coeffs = {v: c * denom for v, c in coeffs.items()}
        const = const * denom
    return coeffs, const


def _gcd(a: int, b: int) -> int:
    a, b = abs(a), abs(b)
    while b:
        a, b = b, a % b
    return a


def _tighten(coeffs: dict[Var, Fraction], const: Fraction, rel: str) -> tuple[dict[Var, Fraction], Fraction, str]:
    """Over the integers, scale to integer coefficients, turn strict bounds
    into slack ones, and round the constant by the coefficient gcd."""
    coeffs, const = _scale_int(coeffs, const)
    if rel == "<":
        const += 1
        rel = "<="
    if rel == "<=" and coeffs:
        g = 0
        for c in coeffs.values():
            g = _gcd(g, int(c))
        if g > 1:
            coeffs = {v: c / g for v, c in coeffs.items()}
            # coeffs.x <= -const  ->  (coeffs/g).x <= floor(-const/g)
            bound = -const
            const = -Fraction(_floor_div(int(bound), g))
    return coeffs, const, rel


def _floor_div(a: int, b: int) -> int:
    return a // b


# --- structural phase ----------------------------------------------------------


class _Clash(Exception):
    """Structural phase found the constraint unsatisfiable."""


def _is_constructor(t: Term) -> bool:
    return isinstance(t, Struct) and not is_arith(t)


def _numericish(t: Term) -> bool:
    return linearize(t) is not None


@dataclass
class _Split:
    """Residual constraint whose satisfiability needs case branches."""

    alternatives: list[AtomicConstraint]
    orig: AtomicConstraint


def _structural_phase(
    acs: Sequence[AtomicConstraint],
    theory: str = "integers",
) -> tuple[dict[Var, Term], list[AtomicConstraint], list[_Split], list[AtomicConstraint]]:
    """Bind variables via the equations, decompose constructors, and sort what
    remains into linear material, disequation splits, and inert residue.

    Returns (binding, linear_acs, splits, residue); raises _Clash on a
    definite structural conflict. Over the naturals, binding a variable to
    an arithmetic term or numeral keeps the variable's nonnegativity as a
    constraint on the term, so information never silently leaves the system.
    """
    binding: dict[Var, Term] = {}
    linear: list[AtomicConstraint] = []
    splits: list[_Split] = []
    residue: list[AtomicConstraint] = []

    def subst(t: Term) -> Term:
        return apply_subst_term(t, binding)

    def bind(v: Var, t: Term):
        if v in term_vars(t):
            if _numericish(t):
                linear.append(AtomicConstraint("=", v, t))
                return
            raise _Clash  # v = f(..v..) has no finite solution
        if theory == "naturals" and (is_arith(t) or isinstance(t, Num)):
            linear.append(AtomicConstraint(">=", t, Num(Fraction(0))))
        for k in list(binding):
            binding[k] = apply_subst_term(binding[k], {v: t})
        binding[v] = t

    eqs = [ac for ac in acs if ac.rel == "="]
    rest = [ac for ac in acs if ac.rel != "="]

    queue = list(eqs)
    while queue:
        ac = queue.pop(0)
        s, t = subst(ac.lhs), subst(ac.rhs)
        if s == t:
            continue
        if isinstance(s, Var):
            bind(s, t)
            continue
        if isinstance(t, Var):
            bind(t, s)
            continue
        if _numericish(s) and _numericish(t):
            linear.append(AtomicConstraint("=", s, t))
            continue
        if _is_constructor(s) and _is_constructor(t):
            if s.functor != t.functor or len(s.args) != len(t.args):
                raise _Clash
            queue = [AtomicConstraint("=", a, b) for a, b in zip(s.args, t.args)] + queue
            continue
        if isinstance(s, Sym) and isinstance(t, Sym):
            raise _Clash  # different names (equal handled above)
        # mixed kinds: number/arith vs symbol vs constructor never meet
        raise _Clash

    linear = [apply_subst_ac(ac, binding) for ac in linear]

    for ac in rest:
        s, t = subst(ac.lhs), subst(ac.rhs)
        ac2 = AtomicConstraint(ac.rel, s, t)
        if ac.rel == "!=":
            _classify_diseq(s, t, linear, splits, residue)
            continue
        # order relation
        if _numericish(s) and _numericish(t):
            linear.append(ac2)
            continue
        if is_ground(s) and is_ground(t):
            c = compare_ground(s, t)
            ok = {"<": c < 0, "<=": c <= 0, ">=": c >= 0, ">": c > 0}[ac.rel]
            if not ok:
                raise _Clash
            continue
        if s == t:
            if ac.rel in ("<", ">"):
                raise _Clash
            continue
        residue.append(ac2)

    return binding, linear, splits, residue


def _classify_diseq(
    s: Term,
    t: Term,
    linear: list[AtomicConstraint],
    splits: list[_Split],
    residue: list[AtomicConstraint],
):
    if s == t:
        raise _Clash
    if _numericish(s) and _numericish(t):
        linear.append(AtomicConstraint("!=", s, t))
        return
    if is_ground(s) and is_ground(t):
        if compare_ground(s, t) == 0:
            raise _Clash
        return  # definitely different
    if _is_constructor(s) and _is_constructor(t):
        if s.functor != t.functor or len(s.args) != len(t.args):
            return  # always different
        if len(s.args) == 1:
            _classify_diseq(s.args[0], t.args[0], linear, splits, residue)
            return
        splits.append(
            _Split(
                [AtomicConstraint("!=", a, b) for a, b in zip(s.args, t.args)],
                AtomicConstraint("!=", s, t),
            )
        )
        return
    if (_is_constructor(s) or isinstance(s, Sym)) and _numericish(t):
        return  # different kinds
    if (_is_constructor(t) or isinstance(t, Sym)) and _numericish(s):
        return
    # at least one free variable against a non-numeric term: the infinite
    # carrier always offers a distinguishing value
    residue.append(AtomicConstraint("!=", s, t))


# --- linear phase ---------------------------------------------------------------


def _numeric_vars(lins: Iterable[_Lin]) -> set[Var]:
    out: set[Var] = set()
    for coeffs, _, _ in lins:
        out.update(coeffs)
    return out


def _gauss(eqs: list[_Lin], ineqs: list[_Lin]) -> tuple[list[_Lin], dict[Var, tuple[dict[Var, Fraction], Fraction]], bool]:
    """Substitute equations out. Returns (remaining inequalities, pinned
    var -> linear expression map, all_unit_pivots)."""
    pinned: dict[Var, tuple[dict[Var, Fraction], Fraction]] = {}
    unit = True
    work_eqs = [(dict(c), k) for c, k, _ in eqs]
    out = [(dict(c), k, r) for c, k, r in ineqs]
    while work_eqs:
        coeffs, const = work_eqs.pop(0)
        coeffs = {v: c for v, c in coeffs.items() if c != 0}
        if not coeffs:
            if const != 0:
                raise _Clash
            continue
        pivot = min(coeffs, key=lambda v: v.name)
        pc = coeffs[pivot]
        if abs(pc) != 1:
            unit = False
        expr_coeffs = {v: -c / pc for v, c in coeffs.items() if v != pivot}
        expr_const = -const / pc
        pinned[pivot] = (expr_coeffs, expr_const)

        def substitute(c: dict[Var, Fraction], k: Fraction) -> tuple[dict[Var, Fraction], Fraction]:
            if pivot not in c:
                return c, k
            f = c.pop(pivot)
            for v, cc in expr_coeffs.items():
                c[v] = c.get(v, Fraction(0)) + f * cc
            k = k + f * expr_const
            return {v: cc for v, cc in c.items() if cc != 0}, k

        work_eqs = [substitute(dict(c), k) for c, k in work_eqs]
        out = [(*substitute(dict(c), k), r) for c, k, r in out]
        for p in list(pinned):
            if p == pivot:
                continue
            pcfs, pk = pinned[p]
            if pivot in pcfs:
                f = pcfs.pop(pivot)
                for v, cc in expr_coeffs.items():
                    pcfs[v] = pcfs.get(v, Fraction(0)) + f * cc
                pinned[p] = ({v: cc for v, cc in pcfs.items() if cc != 0}, pk + f * expr_const)
    return [(c, k, r) for c, k, r in out], pinned, unit


def _fm_eliminate(ineqs: list[_Lin], var: Var, integer: bool) -> list[_Lin]:
    lowers, uppers, keep = [], [], []
    for coeffs, const, rel in ineqs:
        c = coeffs.get(var, Fraction(0))
        if c == 0:
            keep.append((coeffs, const, rel))
        elif c > 0:
            uppers.append((coeffs, const, rel, c))
        else:
            lowers.append((coeffs, const, rel, c))
    for (uc, uk, ur, ucoef) in uppers:
        for (lc, lk, lr, lcoef) in lowers:
            coeffs: dict[Var, Fraction] = {}
            for v, c in uc.items():
                if v != var:
                    coeffs[v] = coeffs.get(v, Fraction(0)) + c / ucoef
            for v, c in lc.items():
                if v != var:
                    coeffs[v] = coeffs.get(v, Fraction(0)) - c / lcoef
            const = uk / ucoef - lk / lcoef
            rel = "<" if ("<" in (ur, lr) and (ur == "<" or lr == "<")) else "<="
            coeffs = {v: c for v, c in coeffs.items() if c != 0}
            if not coeffs:
                if const > 0 or (const == 0 and rel == "<"):
                    raise _Clash
                continue
            ent = _tighten(coeffs, const, rel) if integer else (coeffs, const, rel)
            keep.append(ent)
    return keep


def _check_linear(
    lins: list[_Lin],
    theory: str,
    extra_nonneg: Iterable[Var] = (),
) -> tuple[SatResult, dict[Var, Fraction] | None]:
    """Satisfiability of a conjunction of linear constraints (no diseqs)."""
    integer = theory in ("integers", "naturals")
    eqs = [l for l in lins if l[2] == "="]
    ineqs = [l for l in lins if l[2] in ("<", "<=")]
    assert all(l[2] in ("=", "<", "<=") for l in lins)
    if theory == "naturals":
        for v in sorted(_numeric_vars(lins) | set(extra_nonneg), key=lambda x: x.name):
            ineqs.append(({v: Fraction(-1)}, Fraction(0), "<="))
    try:
        ineqs, pinned, _ = _gauss(eqs, ineqs)
        if integer:
            ineqs = [_tighten(c, k, r) for c, k, r in ineqs]
        elim_stack: list[tuple[Var, list[_Lin]]] = []
        vars_left = sorted(_numeric_vars(ineqs), key=lambda v: v.name)
        current = ineqs
        for v in vars_left:
            if not any(v in c for c, _, _ in current):
                continue
            elim_stack.append((v, current))
            current = _fm_eliminate(current, v, integer)
        for coeffs, const, rel in current:
            if not coeffs:
                if const > 0 or (const == 0 and rel == "<"):
                    raise _Clash
    except _Clash:
        return SatResult.UNSAT, None

    # rational feasibility is settled; build a witness by back-substitution
    assign: dict[Var, Fraction] = {}

    def bounds_for(v: Var, cons: list[_Lin]) -> tuple[Fraction | None, Fraction | None, bool, bool]:
        lo: Fraction | None = None
        hi: Fraction | None = None
        lo_strict = hi_strict = False
        for coeffs, const, rel in cons:
            c = coeffs.get(v, Fraction(0))
            if c == 0:
                continue
            rest = const
            ok = True
            for w, cc in coeffs.items():
                if w == v:
                    continue
                if w not in assign:
                    ok = False
                    break
                rest += cc * assign[w]
            if not ok:
                continue
            bound = -rest / c
            if c > 0:
                if hi is None or bound < hi or (bound == hi and rel == "<"):
                    hi, hi_strict = bound, rel == "<"
            else:
                if lo is None or bound > lo or (bound == lo and rel == "<"):
                    lo, lo_strict = bound, rel == "<"
        return lo, hi, lo_strict, hi_strict

    feasible = True
    for v, cons in reversed(elim_stack):
        lo, hi, lo_s, hi_s = bounds_for(v, cons)
        val = _pick_value(lo, hi, lo_s, hi_s, integer)
        if val is None:
            feasible = False
            break
        assign[v] = val
    if feasible:
        # resolve pinned variables against the witness
        for p in sorted(pinned, key=lambda v: v.name, reverse=True):
            cfs, k = pinned[p]
            val = k
            ok = True
            for v, c in cfs.items():
                if v not in assign:
                    assign[v] = Fraction(0)
                val += c * assign[v]
            assign[p] = val
        if integer and any(val.denominator != 1 for val in assign.values()):
            feasible = False
        if theory == "naturals" and any(val < 0 for val in assign.values()):
            feasible = False
        if feasible and not _witness_ok(lins, assign, theory):
            feasible = False
    if feasible:
        return SatResult.SAT, assign
    if not integer:
        # over the rationals Fourier-Motzkin is complete, so reaching here
        # means a bookkeeping bound was empty; try a direct small search
        return SatResult.UNKNOWN, None
    # rational-feasible but no integer witness from rounding: small search
    witness = _small_search(lins, theory)
    if witness is not None:
        return SatResult.SAT, witness
    return SatResult.UNKNOWN, None


def _pick_value(lo, hi, lo_strict, hi_strict, integer: bool) -> Fraction | None:
    if lo is None and hi is None:
        return Fraction(0)
    if integer:
        lo_i = None if lo is None else _ceil_frac(lo, lo_strict)
        hi_i = None if hi is None else _floor_frac(hi, hi_strict)
        if lo_i is None:
            cand = min(Fraction(0), hi_i)
            return cand
        if hi_i is None:
            return max(Fraction(0), lo_i)
        if lo_i > hi_i:
            return None
        if lo_i <= 0 <= hi_i:
            return Fraction(0)
        return lo_i if lo_i > 0 else hi_i
    if lo is None:
        return hi - 1 if hi_strict else hi
    if hi is None:
        return lo + 1 if lo_strict else lo
    if lo > hi or (lo == hi and (lo_strict or hi_strict)):
        return None
    return (lo + hi) / 2


def _ceil_frac(x: Fraction, strict: bool) -> Fraction:
    n = -((-x.numerator) // x.denominator)  # ceil
    if strict and n == x:
        n += 1
    return Fraction(n)


def _floor_frac(x: Fraction, strict: bool) -> Fraction:
    n = x.numerator // x.denominator
    if strict and n == x:
        n -= 1
    return Fraction(n)


def _witness_ok(lins: list[_Lin], assign: Mapping[Var, Fraction], theory: str) -> bool:
    for coeffs, const, rel in lins:
        val = const
        for v, c in coeffs.items():
            val += c * assign.get(v, Fraction(0))
        if rel == "=" and val != 0:
            return False
        if rel == "<=" and val > 0:
            return False
        if rel == "<" and val >= 0:
            return False
        if rel == "!=" and val == 0:
            return False
    if theory == "naturals":
        for v in _numeric_vars(lins):
            if assign.get(v, Fraction(0)) < 0:
                return False
    return True


def _small_search(lins: list[_Lin], theory: str) -> dict[Var, Fraction] | None:
    vars_ = sorted(_numeric_vars(lins), key=lambda v: v.name)
    if len(vars_) > 5:
        return None
    lo = 0 if theory == "naturals" else -8
    rng = [Fraction(i) for i in range(lo, 9)]
    for combo in itertools.product(rng, repeat=len(vars_)):
        assign = dict(zip(vars_, combo))
        if _witness_ok(lins, assign, theory):
            return assign
    return None


# --- public satisfiability -------------------------------------------------------

_MAX_DISEQ_BRANCH = 12


def is_satisfiable(
    acs: Sequence[AtomicConstraint],
    theory: str = "integers",
) -> SatResult:
    return _sat_rec(list(acs), theory, depth=0)


def _sat_rec(acs: list[AtomicConstraint], theory: str, depth: int) -> SatResult:
    if depth > 24:
        return SatResult.UNKNOWN
    try:
        _, linear, splits, residue = _structural_phase(acs, theory)
    except _Clash:
        return SatResult.UNSAT
    if splits:
        first, rest_splits = splits[0], splits[1:]
        best = SatResult.UNSAT
        base = linear + residue + [s.orig for s in rest_splits]
        for alt in first.alternatives:
            res = _sat_rec(base + [alt], theory, depth + 1)
            if res == SatResult.SAT:
                return SatResult.SAT
            if res == SatResult.UNKNOWN:
                best = SatResult.UNKNOWN
        return best
    # linear phase with disequation branching
    lins: list[_Lin] = []
    diseqs: list[_Lin] = []
    for ac in linear:
        lin = _to_lin(ac)
        assert lin is not None
        if lin[2] == "!=":
            diseqs.append(lin)
        else:
            lins.append(lin)
    return _sat_with_diseqs(lins, diseqs, theory)


def _sat_with_diseqs(lins: list[_Lin], diseqs: list[_Lin], theory: str) -> SatResult:
    # drop disequations with a constant nonzero value, fail on constant zero
    pending: list[_Lin] = []
    for coeffs, const, _ in diseqs:
        coeffs = {v: c for v, c in coeffs.items() if c != 0}
        if not coeffs:
            if const == 0:
                return SatResult.UNSAT
            continue
        pending.append((coeffs, const, "!="))
    if len(pending) > _MAX_DISEQ_BRANCH:
        return SatResult.UNKNOWN
    # first try: witness for the slack system often satisfies the diseqs
    res, witness = _check_linear(lins, theory)
    if res == SatResult.UNSAT:
        return SatResult.UNSAT
    if res == SatResult.SAT and witness is not None and _witness_ok(pending, witness, theory):
        return SatResult.SAT
    best = SatResult.UNSAT
    for branch in itertools.product((0, 1), repeat=len(pending)):
        sys = list(lins)
        for bit, (coeffs, const, _) in zip(branch, pending):
            if bit == 0:
                sys.append((coeffs, const, "<"))
            else:
                sys.append(({v: -c for v, c in coeffs.items()}, -const, "<"))
        res, witness = _check_linear(sys, theory)
        if res == SatResult.SAT:
            return SatResult.SAT
        if res == SatResult.UNKNOWN:
            best = SatResult.UNKNOWN
    return best


def linear_to_acs(linear: list[AtomicConstraint]) -> list[AtomicConstraint]:
    return list(linear)


# --- entailment -------------------------------------------------------------------


def entails(
    c: Sequence[AtomicConstraint],
    d: Sequence[AtomicConstraint],
    theory: str = "integers",
) -> bool:
    """True only when every atomic conjunct of d is refutation-proved from c."""
    for ac in d:
        if is_satisfiable(list(c) + [complement_ac(ac)], theory) != SatResult.UNSAT:
            return False
    return True


def constraints_equivalent(
    c1: Sequence[AtomicConstraint],
    c2: Sequence[AtomicConstraint],
    theory: str = "integers",
) -> bool:
    return entails(c1, c2, theory) and entails(c2, c1, theory)


# --- projection -------------------------------------------------------------------


def project(
    acs: Sequence[AtomicConstraint],
    onto: set[Var],
    theory: str = "integers",
) -> tuple[tuple[AtomicConstraint, ...], bool]:
    """Existentially quantify every variable outside onto.

    Exact over the rationals. Over the integer theories the result is an
    over-approximation unless elimination needed no Fourier-Motzkin step and
    every Gaussian pivot was a unit; the bool reports exactness. Structural
    residue mentioning eliminated variables is dropped (over-approximation).
    """
    try:
        binding, linear, splits, residue = _structural_phase(acs, theory)
    except _Clash:
        return (AtomicConstraint("=", Num(Fraction(0)), Num(Fraction(1))),), True
    exact = True
    out: list[AtomicConstraint] = []
    # bindings of onto-variables become equations again; when the bound term
    # mentions quantified variables, a linear equation re-enters elimination,
    # anything structural is lost to over-approximation
    for v, t in binding.items():
        if v in onto:
            if all(w in onto for w in term_vars(t)):
                out.append(AtomicConstraint("=", v, t))
            elif linearize(t) is not None:
                linear.append(AtomicConstraint("=", v, t))
            else:
                exact = False
    for s in splits:
        keepable = all(
            set(term_vars(a.lhs)) | set(term_vars(a.rhs)) <= onto for a in s.alternatives
        )
        if not keepable:
            exact = False
        # a decomposed constructor disequation cannot be kept atomically
        elif len(s.alternatives) >= 2:
            exact = False
    for ac in residue:
        vs = set(term_vars(ac.lhs)) | set(term_vars(ac.rhs))
        if vs <= onto:
            out.append(ac)
        else:
            exact = False

    lins: list[_Lin] = []
    diseqs: list[AtomicConstraint] = []
    for ac in linear:
        lin = _to_lin(ac)
        assert lin is not None
        if lin[2] == "!=":
            vs = set(lin[0])
            if vs <= onto:
                diseqs.append(ac)
            else:
                exact = False
            continue
        lins.append(lin)
    integer = theory in ("integers", "naturals")
    if theory == "naturals":
        for v in sorted(_numeric_vars(lins), key=lambda x: x.name):
            lins.append(({v: Fraction(-1)}, Fraction(0), "<="))
    eqs = [l for l in lins if l[2] == "="]
    ineqs = [l for l in lins if l[2] != "="]
    # eliminate non-onto vars: Gauss on equations mentioning them first
    try:
        drop = sorted({v for c, _, _ in lins for v in c if v not in onto}, key=lambda v: v.name)
        pinned_exact = True
        for v in drop:
            pivot_eq = next((e for e in eqs if v in e[0]), None)
            if pivot_eq is not None:
                eqs.remove(pivot_eq)
                coeffs, const, _ = pivot_eq
                pc = coeffs[v]
                if abs(pc) != 1:
                    pinned_exact = False
                expr = ({w: -c / pc for w, c in coeffs.items() if w != v}, -const / pc)

                def subst_lin(l: _Lin) -> _Lin:
                    c2, k2, r2 = dict(l[0]), l[1], l[2]
                    if v in c2:
                        f = c2.pop(v)
                        for w, cc in expr[0].items():
                            c2[w] = c2.get(w, Fraction(0)) + f * cc
                        k2 += f * expr[1]
                    return ({w: cc for w, cc in c2.items() if cc != 0}, k2, r2)

                eqs = [subst_lin(e) for e in eqs]
                ineqs = [subst_lin(i) for i in ineqs]
            else:
                ineqs = _fm_eliminate(ineqs, v, integer=False)
                if integer:
                    pinned_exact = False
        if integer and not pinned_exact:
            exact = False
    except _Clash:
        return (AtomicConstraint("=", Num(Fraction(0)), Num(Fraction(1))),), exact

    seen: set[str] = set()
    from .clauses import canon_ac, format_ac

    for coeffs, const, rel in eqs + ineqs:
        coeffs = {v: c for v, c in coeffs.items() if c != 0}
        if not coeffs:
            if (rel == "=" and const != 0) or (rel == "<=" and const > 0) or (rel == "<" and const >= 0):
                return (AtomicConstraint("=", Num(Fraction(0)), Num(Fraction(1))),), exact
            continue
        if theory == "naturals" and rel == "<=" and len(coeffs) == 1:
            ((v, c),) = coeffs.items()
            if c == -1 and const == 0:
                continue  # implicit v >= 0
        ac = canon_ac(_lin_to_ac(coeffs, const, rel))
        key = format_ac(ac)
        if key not in seen:
            seen.add(key)
            out.append(ac)
    for ac in diseqs:
        out.append(ac)
    return tuple(out), exact


def equivalent_projected(
    c1: Sequence[AtomicConstraint],
    c2: Sequence[AtomicConstraint],
    onto: set[Var],
    theory: str = "integers",
) -> bool:
    p1, e1 = project(c1, onto, theory)
    p2, e2 = project(c2, onto, theory)
    if e1 and e2:
        return entails(p1, p2, theory) and entails(p2, p1, theory)
    # projection lost structure (a kept variable bound to a constructor term
    # over eliminated ones). Equivalence as open formulas implies equivalence
    # of any projection, so mutual entailment without projecting is a sound
    # second try; it needs both sides to name the shared locals alike.
    return constraints_equivalent(c1, c2, theory)


# --- solved forms for negative unfolding -------------------------------------------


class SolvedFormError(Exception):
    def __init__(self, kind: str, detail: str):
        super().__init__(f"{kind}: {detail}")
        self.kind = kind
        self.detail = detail


def _lin_term(coeffs: Mapping[Var, Fraction], const: Fraction) -> Term | None:
    """Render an integral linear expression as a term, or None if fractional."""
    if any(c.denominator != 1 for c in coeffs.values()) or const.denominator != 1:
        return None
    acc: Term | None = None
    items = sorted(((v, c) for v, c in coeffs.items() if c != 0), key=lambda p: p[0].name)
    for v, c in items:
        piece: Term = v if abs(c) == 1 else Struct("*", (Num(abs(c)), v))
        if acc is None:
            acc = piece if c > 0 else Struct("-", (Num(Fraction(0)), piece))
        elif c > 0:
            acc = Struct("+", (acc, piece))
        else:
            acc = Struct("-", (acc, piece))
    if acc is None:
        return Num(const)
    if const > 0:
        acc = Struct("+", (acc, Num(const)))
    elif const < 0:
        acc = Struct("-", (acc, Num(-const)))
    return acc


def _isolate(
    s: Term, t: Term, solve_for: set[Var], bound: set[Var]
) -> tuple[Var, Term] | None:
    """Solve the numeric equation s = t for an unbound solve_for variable.

    Only unit-coefficient pivots are taken so the binding term stays
    integral. Returns (pivot, term) or None when no pivot qualifies.
    """
    lin = linearize(Struct("-", (s, t)))
    if lin is None:
        return None
    coeffs, const = lin
    coeffs = {v: c for v, c in coeffs.items() if c != 0}
    for v in sorted(coeffs, key=lambda v: v.name):
        if v not in solve_for or v in bound or abs(coeffs[v]) != 1:
            continue
        cv = coeffs[v]
        rest = {w: -c / cv for w, c in coeffs.items() if w is not v}
        term = _lin_term(rest, -const / cv)
        if term is not None:
            return v, term
    return None


def _extract_bindings(
    acs: Sequence[AtomicConstraint],
    solve_for: set[Var],
) -> tuple[dict[Var, Term], tuple[AtomicConstraint, ...]] | None:
    """Solve the equations of acs for the solve_for variables.

    Returns (theta, residual constraint) where theta is an idempotent
    substitution binding only solve_for variables and the residual holds
    with theta applied; or None when the equations clash (the conjunction
    is unsatisfiable). Raises SolvedFormError when no solved form exists
    whose bindings only move solve_for variables.
    """
    theta: dict[Var, Term] = {}
    resid: list[AtomicConstraint] = []

    def subst(t: Term) -> Term:
        return apply_subst_term(t, theta)

    def bind(v: Var, t: Term):
        for k in list(theta):
            theta[k] = apply_subst_term(theta[k], {v: t})
        theta[v] = t

    queue = [ac for ac in acs if ac.rel == "="]
    rest = [ac for ac in acs if ac.rel != "="]
    guard = 0
    while queue:
        guard += 1
        if guard > 10_000:
            raise SolvedFormError("condition_ii", "equation solving did not terminate")
        ac = queue.pop(0)
        s, t = subst(ac.lhs), subst(ac.rhs)
        if s == t:
            continue
        if isinstance(t, Var) and t in solve_for and t not in term_vars(s):
            bind(t, s)
            continue
        if isinstance(s, Var) and s in solve_for and s not in term_vars(t):
            bind(s, t)
            continue
        if _is_constructor(s) and _is_constructor(t):
            if s.functor != t.functor or len(s.args) != len(t.args):
                return None
            queue = [AtomicConstraint("=", a, b) for a, b in zip(s.args, t.args)] + queue
            continue
        if _numericish(s) and _numericish(t):
            got = _isolate(s, t, solve_for, set(theta))
            if got is not None:
                bind(got[0], got[1])
            else:
                resid.append(AtomicConstraint("=", s, t))
            continue
        if isinstance(s, Sym) and isinstance(t, Sym):
            return None
        if isinstance(s, Var) or isinstance(t, Var):
            v, other = (s, t) if isinstance(s, Var) else (t, s)
            assert isinstance(v, Var)
            if v in term_vars(other):
                return None  # finite trees
            if _is_constructor(other) and any(w in solve_for for w in term_vars(other)):
                raise SolvedFormError(
                    "condition_ii",
                    f"solving would destructure caller variable {v.name}",
                )
            # caller variable equated with a caller-side structure: residual
            resid.append(AtomicConstraint("=", v, other))
            continue
        return None
    # late bindings may have touched earlier residuals; theta is idempotent,
    # so one final pass settles them
    out = [AtomicConstraint(ac.rel, subst(ac.lhs), subst(ac.rhs)) for ac in resid]
    out.extend(AtomicConstraint(ac.rel, subst(ac.lhs), subst(ac.rhs)) for ac in rest)
    return theta, tuple(out)


@dataclass(frozen=True)
class SolvedForm:
    """An idempotent binding of definition-side variables plus the residual
    constraint, equivalent under the calling context to the head equation
    conjoined with the definition's constraint."""

    theta: Mapping[Var, Term]
    residual: tuple[AtomicConstraint, ...]


@dataclass(frozen=True)
class NotApplicable:
    condition: str  # "i" or "ii"
    detail: str


def solved_form(
    context: Sequence[AtomicConstraint],
    a: "Atom",
    k: "Atom",
    ck: Sequence[AtomicConstraint],
    vi: set[Var],
    theory: str = "integers",
) -> SolvedForm | NotApplicable:
    """Express A=K ∧ cK, under context, as theta-bindings of vi plus a residual.

    On success the returned pair satisfies, and has been re-checked to
    satisfy, the biconditional: under the context, A=K ∧ cK holds exactly
    when every theta binding holds as an equation and the residual holds.
    The residual is simplified by dropping conjuncts the context already
    entails. Bindings never touch variables outside vi.
    """
    from .clauses import eq_constraint, format_ac, tidy_ac

    head_eqs = list(eq_constraint(a, k))
    try:
        got = _extract_bindings(head_eqs + list(ck), set(vi))
    except SolvedFormError as e:
        return NotApplicable("ii", e.detail)
    if got is None:
        return NotApplicable("ii", "head equations have no solution")
    theta, raw = got
    assert set(theta) <= set(vi)
    residual = tuple(
        tidy_ac(ac) for ac in raw if not entails(context, [ac], theory)
    )
    # independent re-check of the biconditional, both directions
    lhs = list(context) + head_eqs + list(ck)
    binding_eqs = [AtomicConstraint("=", v, t) for v, t in sorted(theta.items(), key=lambda p: p[0].name)]
    rhs = list(context) + binding_eqs + list(residual)
    if not entails(lhs, binding_eqs + list(residual), theory):
        bad = next(
            (ac for ac in binding_eqs + list(residual) if not entails(lhs, [ac], theory)),
            None,
        )
        return NotApplicable(
            "i", f"forward entailment failed at {format_ac(bad) if bad else '?'}"
        )
    if not entails(rhs, head_eqs + list(ck), theory):
        bad = next(
            (ac for ac in head_eqs + list(ck) if not entails(rhs, [ac], theory)), None
        )
        return NotApplicable(
            "i", f"backward entailment failed at {format_ac(bad) if bad else '?'}"
        )
    return SolvedForm(theta, residual)


# --- ground evaluation ---------------------------------------------------------------


class GroundUndefined(Exception):
    """A ground term has no value: non-numeric operand in arithmetic, or a
    natural-number subtraction dipping below zero."""


def eval_ground_term(t: Term, theory: str = "integers") -> Term:
    if isinstance(t, Var):
        raise ValueError(f"eval_ground_term on non-ground term {t!r}")
    if isinstance(t, Num):
        if theory == "naturals" and t.value < 0:
            raise GroundUndefined(f"negative numeral {t.value} over the naturals")
        return t
    if isinstance(t, Sym):
        return t
    assert isinstance(t, Struct)
    if is_arith(t):
        a = eval_ground_term(t.args[0], theory)
        b = eval_ground_term(t.args[1], theory)
        if not isinstance(a, Num) or not isinstance(b, Num):
            raise GroundUndefined(f"arithmetic on non-number in {t!r}")
        if t.functor == "+":
            v = a.value + b.value
        elif t.functor == "-":
            v = a.value - b.value
        else:
            v = a.value * b.value
        if theory == "naturals" and v < 0:
            raise GroundUndefined(f"natural subtraction below zero in {t!r}")
        return Num(v)
    return Struct(t.functor, tuple(eval_ground_term(a, theory) for a in t.args))


def evaluate_ground(
    acs: Sequence[AtomicConstraint],
    theory: str = "integers",
) -> bool:
    """Truth of a ground constraint conjunction. Raises GroundUndefined when
    any side of any conjunct has no value."""
    for ac in acs:
        lhs = eval_ground_term(ac.lhs, theory)
        rhs = eval_ground_term(ac.rhs, theory)
        c = compare_ground(lhs, rhs)
        ok = {
            "=": c == 0,
            "!=": c != 0,
            "<": c < 0,
            "<=": c <= 0,
            ">=": c >= 0,
            ">": c > 0,
        }[ac.rel]
        if not ok:
            return False
    return True
