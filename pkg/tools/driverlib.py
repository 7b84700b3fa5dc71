"""Shared helpers for the fixture builders.

A Driver wraps a Session and exposes the handful of editing moves the
derivation scripts are made of: positive/negative unfolding at a body
position, constraint cleanup (binding substitution, list-equation
decomposition, linear isolation, dropping ground-true conjuncts), case
splits, subsumption, folding, and definition introduction/elimination.
Every move goes through Session.apply, so the recorded step list replays
byte-for-byte through the public CLI.
"""

from __future__ import annotations

import json
import sys
from collections import Counter

sys.path.insert(0, "src")

from stratfold.clauses import (
    Num,
    Struct,
    Var,
    apply_subst_ac,
    clause_key,
    format_ac,
    format_clause,
    format_term,
)
from stratfold.parser import parse_clause
from stratfold.rules import _match_atom, _match_body
from stratfold.session import Session
from stratfold.terms import term_vars


def lin(t):
    """Term -> (coeffs, const) for linear integer terms, else None."""
    if isinstance(t, Num):
        return {}, t.value
    if isinstance(t, Var):
        return {t: 1}, 0
    if isinstance(t, Struct) and t.functor == "+" and len(t.args) == 2:
        a, b = lin(t.args[0]), lin(t.args[1])
        if a is None or b is None:
            return None
        co = Counter(a[0])
        co.update(b[0])
        return {v: c for v, c in co.items() if c}, a[1] + b[1]
    if isinstance(t, Struct) and t.functor == "-" and len(t.args) == 2:
        a, b = lin(t.args[0]), lin(t.args[1])
        if a is None or b is None:
            return None
        co = Counter(a[0])
        co.subtract(b[0])
        return {v: c for v, c in co.items() if c}, a[1] - b[1]
    if isinstance(t, Struct) and t.functor == "-" and len(t.args) == 1:
        a = lin(t.args[0])
        if a is None:
            return None
        return {v: -c for v, c in a[0].items()}, -a[1]
    if isinstance(t, Struct) and t.functor == "*" and len(t.args) == 2:
        a, b = lin(t.args[0]), lin(t.args[1])
        if a is None or b is None:
            return None
        if not a[0]:
            return {v: a[1] * c for v, c in b[0].items() if a[1] * c}, a[1] * b[1]
        if not b[0]:
            return {v: b[1] * c for v, c in a[0].items() if b[1] * c}, a[1] * b[1]
        return None
    return None


def _sum_text(coeffs, const):
    parts = []
    for v in sorted(coeffs, key=lambda x: x.name):
        c = coeffs[v]
        if c == 1:
            parts.append(("+", v.name))
        elif c == -1:
            parts.append(("-", v.name))
        else:
            parts.append(("+" if c > 0 else "-", f"{abs(c)}*{v.name}"))
    if const or not parts:
        parts.append(("+" if const >= 0 else "-", str(abs(const))))
    text = ""
    for sign, frag in parts:
        if not text:
            text = frag if sign == "+" else f"-{frag}"
        else:
            text += f"{sign}{frag}"
    return text


def ground_value(t):
    got = lin(t)
    if got is None or got[0]:
        return None
    return got[1]


def ground_trivial(ac):
    a, b = ground_value(ac.lhs), ground_value(ac.rhs)
    if a is None or b is None:
        return False
    return {
        "=": a == b,
        "!=": a != b,
        "<": a < b,
        "<=": a <= b,
        ">": a > b,
        ">=": a >= b,
    }[ac.rel]


class BuildError(Exception):
    pass


class Driver:
    def __init__(self, program_text, pred_int):
        self.program_text = program_text
        self.pred_int = list(pred_int)
        self.sess = Session.from_text(program_text, pred_int)

    # --- low-level ------------------------------------------------------------

    def apply(self, rule, params):
        return self.sess.apply(rule, params)

    def clause(self, cid):
        return self.sess.program.by_id(cid)

    def show(self, tag=""):
        print(f"--- {tag} ---")
        for cid, cl in self.sess.program.clauses:
            print(f"  {cid}: {format_clause(cl)}")

    def find(self, text):
        """The unique clause equal to text up to renaming."""
        key = clause_key(parse_clause(text))
        got = [cid for cid, cl in self.sess.program.clauses if clause_key(cl) == key]
        if len(got) != 1:
            self.show("find failed")
            raise BuildError(f"{len(got)} clauses match {text!r}")
        return got[0]

    def heads(self, pred):
        return [cid for cid, cl in self.sess.program.clauses if cl.head.pred == pred]

    def bpos(self, cid, pred, positive=True, nth=0):
        cl = self.clause(cid)
        hits = [
            i
            for i, l in enumerate(cl.body)
            if l.atom.pred == pred and l.positive == positive
        ]
        return hits[nth]

    # --- reference texts ----------------------------------------------------------
    # Milestone clauses are written once, with readable variable names; these
    # helpers translate them onto the live clause (whose names come from the
    # engine's renaming) by matching head and body literals.

    def ref_map(self, cid, text):
        live = self.clause(cid)
        ref = parse_clause(text)
        th = _match_atom(ref.head, live.head, {})
        if th is not None:
            th = _match_body(ref.body, live.body, th)
        if (
            th is None
            or any(not isinstance(t, Var) for t in th.values())
            or len(set(th.values())) != len(th)
        ):
            self.show("ref_map failed")
            raise BuildError(f"reference does not match clause {cid}: {text!r}")
        return th

    def _ref_acs(self, text, th):
        acs = parse_clause(f"zz :- {text}.").constraint
        for ac in acs:
            for t in (ac.lhs, ac.rhs):
                if any(v not in th for v in term_vars(t)):
                    raise BuildError(f"unbound variable in reference {text!r}")
        return ", ".join(format_ac(apply_subst_ac(ac, th)) for ac in acs)

    def ref_setc(self, cid, text):
        """Replace the constraint with the reference clause's own."""
        ref = parse_clause(text)
        if not ref.constraint:
            return self.setc(cid, "0=0")
        th = self.ref_map(cid, text)
        return self.setc(
            cid, self._ref_acs(", ".join(format_ac(ac) for ac in ref.constraint), th)
        )

    def ref_split(self, cid, text, d, neg_d):
        """Case split, with d and neg_d in the reference clause's names."""
        th = self.ref_map(cid, text)
        return self.split(cid, self._ref_acs(d, th), self._ref_acs(neg_d, th))

    def ref_add(self, cid, text, extra):
        """Append a conjunct written in the reference clause's names."""
        th = self.ref_map(cid, text)
        return self.add_conjunct(cid, self._ref_acs(extra, th))

    # --- constraint cleanup -----------------------------------------------------

    def setc(self, cid, text):
        rec = self.apply(
            "R7",
            {"law": 8, "clause_ids": [cid], "law_params": {"constraint": text}},
        )
        (cid,) = rec.added
        return cid

    def _subst_index(self, cl):
        for i, ac in enumerate(cl.constraint):
            if ac.rel != "=":
                continue
            if isinstance(ac.lhs, Var) and ac.lhs not in term_vars(ac.rhs):
                return i
            if isinstance(ac.rhs, Var) and ac.rhs not in term_vars(ac.lhs):
                return i
        return None

    def _decompose_text(self, cl):
        parts, changed = [], False
        for ac in cl.constraint:
            if (
                ac.rel == "="
                and isinstance(ac.lhs, Struct)
                and isinstance(ac.rhs, Struct)
                and ac.lhs.functor == ac.rhs.functor
                and len(ac.lhs.args) == len(ac.rhs.args)
                and lin(ac.lhs) is None
            ):
                for a, b in zip(ac.lhs.args, ac.rhs.args):
                    parts.append(f"{format_term(a)}={format_term(b)}")
                changed = True
            else:
                parts.append(format_ac(ac))
        return ", ".join(parts) if parts else "0=0", changed

    def _isolate_text(self, cl):
        """Rewrite one multi-var linear equation as VICTIM = rest."""
        head_vars = set()
        for a in cl.head.args:
            head_vars |= set(term_vars(a))
        occur = Counter()
        for ac in cl.constraint:
            for t in (ac.lhs, ac.rhs):
                occur.update(term_vars(t))
        for i, ac in enumerate(cl.constraint):
            if ac.rel != "=":
                continue
            a, b = lin(ac.lhs), lin(ac.rhs)
            if a is None or b is None:
                continue
            co = Counter(a[0])
            co.subtract(b[0])
            co = {v: c for v, c in co.items() if c}
            const = a[1] - b[1]
            if not co:
                continue
            units = [v for v, c in co.items() if abs(c) == 1]
            if not units:
                continue
            units.sort(key=lambda v: (v in head_vars, occur[v], v.name))
            victim = units[0]
            cv = co.pop(victim)
            rest = {v: -c * cv for v, c in co.items()}
            rtext = _sum_text(rest, -const * cv)
            parts = [
                f"{victim.name}={rtext}" if j == i else format_ac(c2)
                for j, c2 in enumerate(cl.constraint)
            ]
            return ", ".join(parts)
        return None

    def tidy(self, cid):
        """Bindings substituted away, list equations decomposed, linear
        equations isolated, ground-true conjuncts dropped. Duplicate or
        entailed conjuncts are kept; scripts drop those explicitly."""
        while True:
            cl = self.clause(cid)
            i = self._subst_index(cl)
            if i is not None:
                rec = self.apply(
                    "R7",
                    {
                        "law": 10,
                        "direction": "RL",
                        "clause_ids": [cid],
                        "law_params": {"eq_index": i},
                    },
                )
                (cid,) = rec.added
                continue
            text, changed = self._decompose_text(cl)
            if changed:
                cid = self.setc(cid, text)
                continue
            text = self._isolate_text(cl)
            if text is not None:
                cid = self.setc(cid, text)
                continue
            break
        cl = self.clause(cid)
        keep = [ac for ac in cl.constraint if not ground_trivial(ac)]
        if len(keep) != len(cl.constraint):
            cid = self.setc(
                cid, ", ".join(format_ac(a) for a in keep) if keep else "0=0"
            )
        return cid

    # --- rule moves ------------------------------------------------------------

    def unfold(self, cid, pred, nth=0):
        """Positive unfold at the nth positive body atom of pred; children
        come back tidied."""
        rec = self.apply(
            "R3", {"clause_id": cid, "atom_position": self.bpos(cid, pred, True, nth)}
        )
        return [self.tidy(c) for c in rec.added]

    def neg_unfold(self, cid, pred, nth=0):
        rec = self.apply(
            "R4",
            {"clause_id": cid, "literal_position": self.bpos(cid, pred, False, nth)},
        )
        return [self.tidy(c) for c in rec.added]

    def one(self, cids):
        if len(cids) != 1:
            raise BuildError(f"expected a single clause, got {cids}")
        return cids[0]

    def flip_pos(self, cid, nth=0):
        """even(t+1) in the body becomes \\+even(t)."""
        return self.one(self.unfold(cid, "even", nth))

    def flip_neg(self, cid, nth=0):
        """\\+even(t+1) in the body becomes even(t)."""
        return self.one(self.neg_unfold(cid, "even", nth))

    def drop_even_odd_ground(self, cid):
        """Eliminate a body literal even(k)/\\+even(k) with ground k.
        A true literal disappears; a false one deletes the clause (None)."""
        while True:
            cl = self.clause(cid)
            lit = None
            for i, l in enumerate(cl.body):
                if l.atom.pred == "even" and ground_value(l.atom.args[0]) is not None:
                    lit = (i, l)
                    break
            if lit is None:
                return cid
            i, l = lit
            k = ground_value(l.atom.args[0])
            truth = (k % 2 == 0) == l.positive
            if l.positive:
                rec = self.apply("R3", {"clause_id": cid, "atom_position": i})
            else:
                rec = self.apply("R4", {"clause_id": cid, "literal_position": i})
            if not rec.added:
                if truth:
                    raise BuildError(f"true parity literal deleted clause {cid}")
                return None
            cid = self.tidy(self.one(list(rec.added)))

    def split(self, cid, d, neg_d):
        """Case split on d: returns (clause with d, clause with neg_d)."""
        cl = self.clause(cid)
        base = [format_ac(a) for a in cl.constraint]
        c1 = ", ".join([d] + base)
        c2 = ", ".join([neg_d] + base)
        rec = self.apply(
            "R7",
            {"law": 9, "clause_ids": [cid], "law_params": {"c1": c1, "c2": c2}},
        )
        a, b = rec.added
        return a, b

    def subsume(self, keeper, victim):
        self.apply(
            "R7", {"law": 5, "direction": "LR", "clause_ids": [keeper, victim]}
        )

    def add_conjunct(self, cid, text):
        cl = self.clause(cid)
        parts = [format_ac(a) for a in cl.constraint] + [text]
        return self.setc(cid, ", ".join(parts))

    def define(self, texts):
        rec = self.apply("R1", {"defs": texts})
        return list(rec.added)

    def fold(self, cids, pred):
        rec = self.apply("R5", {"clause_ids": list(cids), "def_pred": pred})
        return self.one(list(rec.added))

    def fold_neg(self, cid, pred):
        rec = self.apply("R6", {"clause_id": cid, "def_pred": pred})
        return self.one(list(rec.added))

    def eliminate(self, pred):
        self.apply("R2", {"pred": pred})

    # --- checks and output -------------------------------------------------------

    def expect(self, texts, preds=None):
        """The program's clauses (for preds, or all of them) must equal the
        given clause texts as a multiset up to renaming."""
        want = Counter(clause_key(parse_clause(t)) for t in texts)
        got = Counter(
            clause_key(cl)
            for _, cl in self.sess.program.clauses
            if preds is None or cl.head.pred in preds
        )
        if want != got:
            self.show("expect failed")
            for k in sorted((want - got).elements()):
                print("  missing:", k)
            for k in sorted((got - want).elements()):
                print("  extra:  ", k)
            raise BuildError("milestone mismatch")

    def finish(self, outdir, stem):
        rep = self.sess.check_admissible()
        if not rep.ok:
            raise BuildError(f"sequence not admissible: {rep.detail}")
        outdir.mkdir(parents=True, exist_ok=True)
        (outdir / f"p0_{stem}.pl").write_text(self.program_text.strip() + "\n")
        steps = [{"rule": s.rule, "params": s.params} for s in self.sess.steps]
        (outdir / f"steps_{stem}.json").write_text(
            json.dumps(steps, indent=1, sort_keys=True) + "\n"
        )
        print(f"[{stem}] {len(steps)} steps written to {outdir}")
