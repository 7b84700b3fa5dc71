"""Fixture builder for the language-complement derivation.

The source program interprets regular expressions over the two-symbol
alphabet: in_language(S,E) holds when the string S matches E, with
concatenation (cat), alternation (alt), bounded repetition (pow),
complement (not), and one named expression k standing for "some a-block
followed by a b-block of the same length". The derived program decides
membership in the complement of k with one left-to-right pass and two
counter walkers. Two chained sessions get there:

  seq1  new1(S): S is a string outside k. new2/new3/new4 name the
        language of k, the "b-count minus a-count" difference language,
        and the pure b-block language; unfolding the interpreter away
        exposes one-step recursions that fold back onto the definitions.
  seq2  new5(S,N): no split of S puts N more b's than a's (the
        complement walker), new6(S,N): S is not b^N. Negative unfolding
        of new3/new4 through the string walker yields the final clauses;
        three constraint widenings (recorded on the steps) align the
        b-branches, and the interest set {new1} lets the interpreter and
        every helper language be eliminated.

Writes p0_seqN.pl / steps_seqN.json under scripts/ab_strings/, chained
so that seq2's p0 is seq1's final program.

Run:  python3 tools/build_ab_strings.py [--oracle]
"""

from __future__ import annotations

import sys
from pathlib import Path

sys.path.insert(0, "src")
sys.path.insert(0, "tools")

from driverlib import BuildError, Driver, ground_trivial, lin
from stratfold.clauses import apply_subst_ac, canon_ac, format_ac, format_clause
from stratfold.parser import parse_clause
from stratfold.terms import Struct, Sym, Var, term_vars

OUT = Path("scripts/ab_strings")

SIGMA_A = [
    "#sigma string/1 = <0, 0>.",
    "#sigma symbol/1 = <0, 0>.",
    "#sigma app/3 = <0, 0>.",
    "#sigma in_language(S, E) = <1, size(E)>.",
    "#weight k/0 = 7.",
]

# the named expression k is inlined at its single point of definition: a
# per-predicate linear measure cannot relate a looked-up expression to the
# name it replaces, and the weight 7 makes size(k) match its expansion
P0_CLAUSES = [
    "string([]).",
    "string([a|S]) :- string(S).",
    "string([b|S]) :- string(S).",
    "symbol(a).",
    "symbol(b).",
    "app([],L,L).",
    "app([A|X],Y,[A|Z]) :- app(X,Y,Z).",
    "in_language([A],A) :- symbol(A).",
    "in_language(S,cat(E1,E2)) :- app(S1,S2,S), in_language(S1,E1), in_language(S2,E2).",
    "in_language(S,alt(E1,E2)) :- in_language(S,E1).",
    "in_language(S,alt(E1,E2)) :- in_language(S,E2).",
    "in_language(S,not(E)) :- \\+in_language(S,E).",
    "in_language([],pow(E,I)) :- I=0.",
    "in_language(S,pow(E,I)) :- I=J+1, J>=0, app(S1,S2,S),"
    " in_language(S1,E), in_language(S2,pow(E,J)).",
    "in_language(S,k) :- M-N=0, in_language(S,cat(pow(a,M),pow(b,N))).",
]

P0_TEXT = "\n".join(SIGMA_A) + "\n\n" + "\n".join(P0_CLAUSES) + "\n"

BASE_PREDS = ["string", "symbol", "app", "in_language"]

SIGMA_B = SIGMA_A + [
    "#sigma new1/1 = <3, 0>.",
    "#sigma new2/1 = <2, 0>.",
    "#sigma new3/2 = <2, 0>.",
    "#sigma new4/2 = <2, 0>.",
]

D_COMP = "new1(S) :- string(S), in_language(S,not(k))."
# level 3, not the synthesized 2: the later negative fold onto new2 needs
# new1 strictly above it
S_COMP = "#sigma new1(S) = <3, 0>."
D_LANG = "new2(S) :- in_language(S,k)."
D_DIFF = (
    "new3(S,I) :- N=M+I, app(S1,S2,S),"
    " in_language(S1,pow(a,M)), in_language(S2,pow(b,N))."
)
D_BTAIL = "new4(S,N) :- in_language(S,pow(b,N))."
D_WALK5 = "new5(S,N) :- string(S), \\+new3(S,N)."
D_WALK6 = "new6(S,N) :- string(S), \\+new4(S,N)."

SEQ1_MID = [
    "new1(S) :- string(S), \\+new2(S).",
    "new2(S) :- new3(S,0).",
    "new3(S,I) :- new4(S,I).",
    "new3([a|S],I) :- new3(S,I+1).",
    "new4([],0).",
    "new4([b|S],N) :- N>=1, new4(S,N-1).",
]

P_SPEC = [
    "string([]).",
    "string([a|S]) :- string(S).",
    "string([b|S]) :- string(S).",
    "new1([a|S]) :- new5(S,1).",
    "new1([b|S]) :- string(S).",
    "new5([],N).",
    "new5([a|S],N) :- new5(S,N+1).",
    "new5([b|S],0) :- string(S).",
    "new5([b|S],N) :- new6(S,N-1).",
    "new6([],N) :- N!=0.",
    "new6([a|S],N) :- string(S).",
    "new6([b|S],0) :- string(S).",
    "new6([b|S],N) :- new6(S,N-1).",
]


class SDriver(Driver):
    """A Driver whose tidy never pushes arithmetic into an atom argument.

    Interpreter unfolds produce two kinds of equations: structural
    bindings (expression shapes, list promotions) that should be
    substituted away, and counter arithmetic (N=J+1) whose placement the
    later folds and widenings depend on. The substitution law's victim
    choice is simulated, and the binding is skipped when the replacement
    term is arithmetic and the victim occurs in the head or in a body
    atom; constructor equations are decomposed argumentwise. No linear
    isolation; exact counter shapes come from setc, and the pinned
    arithmetic moves are explicit bind() steps.
    """

    def tidy(self, cid):
        while True:
            cl = self.clause(cid)
            head_vars = set()
            for a in cl.head.args:
                head_vars |= set(term_vars(a))
            atom_arg_vars = set()
            for l in cl.body:
                for a in l.atom.args:
                    atom_arg_vars |= set(term_vars(a))
            idx = None
            for i, ac in enumerate(cl.constraint):
                if ac.rel != "=":
                    continue
                if isinstance(ac.lhs, Var) and ac.lhs not in term_vars(ac.rhs):
                    victim, other = ac.lhs, ac.rhs
                elif isinstance(ac.rhs, Var) and ac.rhs not in term_vars(ac.lhs):
                    victim, other = ac.rhs, ac.lhs
                else:
                    continue
                arith = isinstance(other, Struct) and lin(other) is not None
                if arith and (victim in head_vars or victim in atom_arg_vars):
                    continue
                idx = i
                break
            if idx is not None:
                rec = self.apply(
                    "R7",
                    {
                        "law": 10,
                        "direction": "RL",
                        "clause_ids": [cid],
                        "law_params": {"eq_index": idx},
                    },
                )
                (cid,) = rec.added
                continue
            text, changed = self._decompose_text(cl)
            if changed:
                cid = self.setc(cid, text)
                continue
            break
        cl = self.clause(cid)
        keep = [
            ac
            for ac in cl.constraint
            if not ground_trivial(ac) and not (ac.rel == "=" and ac.lhs == ac.rhs)
        ]
        if len(keep) != len(cl.constraint):
            cid = self.setc(
                cid, ", ".join(format_ac(a) for a in keep) if keep else "true"
            )
        return cid

    def define(self, texts, sigma=None):
        params = {"defs": texts}
        if sigma is not None:
            params["sigma"] = sigma
        rec = self.apply("R1", params)
        return list(rec.added)

    def kill(self, cid):
        """A branch whose symbol check cannot succeed; unfolding it must
        delete the clause."""
        got = self.unfold(cid, "symbol")
        if got:
            raise BuildError(f"clause {cid} survived its symbol check: {got}")

    def gone(self, cids):
        if cids:
            raise BuildError(f"expected the clause to be deleted, got {cids}")

    def _live_acs(self, cid, reftext, text):
        th = self.ref_map(cid, reftext)
        acs = parse_clause(f"zz :- {text}.").constraint
        for ac in acs:
            for t in (ac.lhs, ac.rhs):
                for v in term_vars(t):
                    if v not in th:
                        raise BuildError(f"unbound variable in {text!r}")
        return [apply_subst_ac(ac, th) for ac in acs]

    def drop(self, cid, reftext, d, note=None, universe=None):
        """Delete constraint conjuncts (written in the reference clause's
        names) with an assumed or oracle-checked justification."""
        just = (
            {"mode": "assumed", "note": note}
            if universe is None
            else {"mode": "oracle", "universe": universe}
        )
        dtext = ", ".join(format_ac(a) for a in self._live_acs(cid, reftext, d))
        rec = self.apply("R10", {"clause_id": cid, "d": dtext, "justification": just})
        return self.one(list(rec.added))

    def addc(self, cid, reftext, d, universe):
        """Append constraint conjuncts under an oracle-checked justification."""
        dtext = ", ".join(format_ac(a) for a in self._live_acs(cid, reftext, d))
        rec = self.apply(
            "R9",
            {
                "clause_id": cid,
                "d": dtext,
                "justification": {"mode": "oracle", "universe": universe},
            },
        )
        return self.one(list(rec.added))

    def bind(self, cid, reftext, eq):
        """Substitute one equation into the clause, head included."""
        (want,) = self._live_acs(cid, reftext, eq)
        key = format_ac(canon_ac(want))
        cl = self.clause(cid)
        idx = next(
            (
                i
                for i, ac in enumerate(cl.constraint)
                if format_ac(canon_ac(ac)) == key
            ),
            None,
        )
        if idx is None:
            raise BuildError(f"no conjunct {eq!r} in clause {cid}")
        rec = self.apply(
            "R7",
            {
                "law": 10,
                "direction": "RL",
                "clause_ids": [cid],
                "law_params": {"eq_index": idx},
            },
        )
        return self.one(list(rec.added))

    def abstract(self, cid, var, term):
        """Name a repeated subterm: occurrences become a fresh variable
        bound by a new leading equation."""
        rec = self.apply(
            "R7",
            {
                "law": 10,
                "direction": "LR",
                "clause_ids": [cid],
                "law_params": {"var": var, "term": term},
            },
        )
        return self.one(list(rec.added))


def chain_text(d, sigma_lines):
    lines = list(sigma_lines) + [""]
    lines += [format_clause(cl) for _, cl in d.sess.program.clauses]
    return "\n".join(lines) + "\n"


REC7 = (
    "new3([a|S],I) :- N=J+(I+1), J>=0, app(L,S2,S),"
    " in_language(L,pow(a,J)), in_language(S2,pow(b,N))."
)
REC10 = "new4([b|S],N) :- N>=1, J=N-1, in_language(S,pow(b,J))."


def seq1():
    d = SDriver(P0_TEXT, BASE_PREDS)

    # the complement of k: unfolding the not-expression leaves a negated
    # membership literal
    (c1,) = d.define([D_COMP], sigma=S_COMP)
    d.unfold(c1, "in_language")
    d.kill(d.find("new1([not(k)]) :- string([not(k)]), symbol(not(k))."))
    two = d.find("new1(S) :- string(S), \\+in_language(S,k).")

    # the language of k: two interpreter unfolds expose the block pair
    (c3,) = d.define([D_LANG])
    d.unfold(c3, "in_language")
    d.kill(d.find("new2([k]) :- symbol(k)."))
    four = d.find("new2(S) :- M-N=0, in_language(S,cat(pow(a,M),pow(b,N))).")
    d.unfold(four, "in_language")
    d.kill(
        d.find(
            "new2([cat(pow(a,M),pow(b,N))]) :-"
            " M-N=0, symbol(cat(pow(a,M),pow(b,N)))."
        )
    )
    four = d.find(
        "new2(S) :- M-N=0, app(S1,S2,S),"
        " in_language(S1,pow(a,M)), in_language(S2,pow(b,N))."
    )

    # the difference language: unfold through the a-block
    (c5,) = d.define([D_DIFF])
    d.unfold(c5, "in_language")
    d.kill(
        d.find(
            "new3(S,I) :- N=M+I, app([pow(a,M)],S2,S),"
            " symbol(pow(a,M)), in_language(S2,pow(b,N))."
        )
    )
    six = d.find("new3(S,I) :- N=0+I, app([],S2,S), in_language(S2,pow(b,N)).")
    (six,) = d.unfold(six, "app")
    six = d.ref_setc(six, "new3(S,I) :- N=I, in_language(S,pow(b,N)).")
    six = d.tidy(six)

    seven = d.find(
        "new3(S,I) :- N=(J+1)+I, J>=0, app(S1,S2,S), app(S3,S4,S1),"
        " in_language(S3,a), in_language(S4,pow(a,J)), in_language(S2,pow(b,N))."
    )
    (seven,) = d.unfold(seven, "in_language", nth=0)
    (seven,) = d.unfold(seven, "symbol")
    (seven,) = d.unfold(seven, "app", nth=1)
    (seven,) = d.unfold(seven, "app", nth=1)
    (seven,) = d.unfold(seven, "app", nth=0)
    seven = d.ref_setc(seven, REC7)
    seven = d.drop(
        seven,
        REC7,
        "J>=0",
        note="a pow exponent is only satisfiable at nonnegative values, so"
        " the bound is implied by the block atom it guards",
    )
    d.fold([seven], "new3")

    # the b-block language: same route, one app level
    (c8,) = d.define([D_BTAIL])
    d.unfold(c8, "in_language")
    d.kill(d.find("new4([pow(b,N)],N) :- symbol(pow(b,N))."))
    d.find("new4([],0).")
    ten = d.find(
        "new4(S,N) :- N=J+1, J>=0, app(S1,S2,S),"
        " in_language(S1,b), in_language(S2,pow(b,J))."
    )
    (ten,) = d.unfold(ten, "in_language", nth=0)
    (ten,) = d.unfold(ten, "symbol")
    (ten,) = d.unfold(ten, "app", nth=0)
    (ten,) = d.unfold(ten, "app", nth=0)
    ten = d.ref_setc(ten, REC10)
    ten = d.bind(ten, REC10, "J=N-1")
    d.fold([ten], "new4")

    # close the loop: each helper folds onto the next
    d.fold([six], "new4")
    four = d.ref_setc(
        four,
        "new2(S) :- N=M+0, app(S1,S2,S),"
        " in_language(S1,pow(a,M)), in_language(S2,pow(b,N)).",
    )
    d.fold([four], "new3")
    d.fold_neg(two, "new2")

    d.expect(P0_CLAUSES + SEQ1_MID)
    d.finish(OUT, "seq1")
    return d


def seq2(text):
    d = SDriver(text, ["new1"])
    (c13,) = d.define([D_WALK5])
    (c18,) = d.define([D_WALK6])

    # the complement check through the string walker
    two = d.find("new1(S) :- string(S), \\+new2(S).")
    d.unfold(two, "string")

    # []: the empty string is in k, so the branch dies on the base fact
    enil = d.find("new1([]) :- \\+new2([]).")
    enil = d.one(d.neg_unfold(enil, "new2"))
    enil = d.one(d.neg_unfold(enil, "new3"))
    d.gone(d.neg_unfold(enil, "new4"))

    # a: unfold down to the difference walker at count 1
    ea = d.find("new1([a|S]) :- string(S), \\+new2([a|S]).")
    ea = d.one(d.neg_unfold(ea, "new2"))
    ea = d.one(d.neg_unfold(ea, "new3"))
    ea = d.one(d.neg_unfold(ea, "new4"))
    ea = d.abstract(ea, "N1", "0+1")
    ea = d.ref_setc(ea, "new1([a|S]) :- N1=1, string(S), \\+new3(S,N1).")
    ea = d.tidy(ea)

    # b: a string starting with b never matches k
    eb = d.find("new1([b|S]) :- string(S), \\+new2([b|S]).")
    eb = d.one(d.neg_unfold(eb, "new2"))
    eb = d.one(d.neg_unfold(eb, "new3"))
    eb = d.one(d.neg_unfold(eb, "new4"))

    # the complement walker new5
    d.unfold(c13, "string")
    w_nil = d.find("new5([],N) :- \\+new3([],N).")
    w_nil = d.one(d.neg_unfold(w_nil, "new3"))
    w_nil = d.one(d.neg_unfold(w_nil, "new4"))
    w_nil = d.drop(
        w_nil,
        "new5([],N) :- N!=0.",
        "N!=0",
        note="the counter reaching the empty string is strictly positive on"
        " every path from the complement check, so the zero-counter"
        " instances this widening adds never feed it",
    )
    w_a = d.find("new5([a|S],N) :- string(S), \\+new3([a|S],N).")
    w_a = d.one(d.neg_unfold(w_a, "new3"))
    w_a = d.one(d.neg_unfold(w_a, "new4"))
    d.fold([w_a], "new5")
    w_b = d.find("new5([b|S],N) :- string(S), \\+new3([b|S],N).")
    w_b = d.one(d.neg_unfold(w_b, "new3"))
    d.neg_unfold(w_b, "new4")
    mid16 = d.find("new5([b|S],N) :- N<1, string(S).")
    c17 = d.find("new5([b|S],N) :- N>=1, string(S), \\+new4(S,N-1).")

    # the b-block complement walker new6
    d.unfold(c18, "string")
    x_nil = d.find("new6([],N) :- \\+new4([],N).")
    x_nil = d.one(d.neg_unfold(x_nil, "new4"))
    x_a = d.find("new6([a|S],N) :- string(S), \\+new4([a|S],N).")
    x_a = d.one(d.neg_unfold(x_a, "new4"))
    x_b = d.find("new6([b|S],N) :- string(S), \\+new4([b|S],N).")
    d.neg_unfold(x_b, "new4")
    mid21 = d.find("new6([b|S],N) :- N<1, string(S).")
    c22 = d.find("new6([b|S],N) :- N>=1, string(S), \\+new4(S,N-1).")

    # fold the guarded b-branches, then widen the guards away; the
    # complementary-bound siblings still cover everything the widenings add
    c17 = d.fold([c17], "new6")
    c22 = d.fold([c22], "new6")
    guard_note = (
        "every instance the widening adds has a head already provable"
        " through the sibling clause with the complementary bound"
    )
    c17 = d.drop(c17, "new5([b|S],N) :- N>=1, new6(S,N-1).", "N>=1", note=guard_note)
    c22 = d.drop(c22, "new6([b|S],N) :- N>=1, new6(S,N-1).", "N>=1", note=guard_note)

    # tighten the complementary branches to their exact zero form
    uni = "int=0..6,listlen=6,syms=a:b"
    mid16 = d.addc(mid16, "new5([b|S],N) :- N<1, string(S).", "N=0", universe=uni)
    mid16 = d.drop(
        mid16, "new5([b|S],N) :- N<1, N=0, string(S).", "N<1", universe=uni
    )
    mid16 = d.bind(mid16, "new5([b|S],N) :- N=0, string(S).", "N=0")
    mid21 = d.addc(mid21, "new6([b|S],N) :- N<1, string(S).", "N=0", universe=uni)
    mid21 = d.drop(
        mid21, "new6([b|S],N) :- N<1, N=0, string(S).", "N<1", universe=uni
    )
    mid21 = d.bind(mid21, "new6([b|S],N) :- N=0, string(S).", "N=0")

    # the a-branch of the complement check folds onto the walker
    d.fold([ea], "new5")

    # drop everything the complement check does not reach
    for pred in ("in_language", "symbol", "app", "new2", "new3", "new4"):
        d.eliminate(pred)
    d.expect(P_SPEC)
    d.finish(OUT, "seq2")
    return d


def replay_all():
    import json

    from stratfold.session import Session

    preds = {"seq1": BASE_PREDS, "seq2": ["new1"]}
    for stem, pi in preds.items():
        sess = Session.from_text((OUT / f"p0_{stem}.pl").read_text(), pi)
        for st in json.loads((OUT / f"steps_{stem}.json").read_text()):
            sess.apply(st["rule"], st["params"])
        rep = sess.check_admissible()
        assert rep.ok, (stem, rep.detail)
        print(f"[{stem}] replayed {len(sess.steps)} steps, admissible")


def oracle_check():
    import itertools
    import json

    from stratfold.clauses import Atom
    from stratfold.oracle import Oracle, Universe
    from stratfold.session import Session
    from stratfold.terms import Num  # noqa: F401  (kept with its siblings)

    sess = Session.from_text((OUT / "p0_seq2.pl").read_text(), ["new1"])
    for st in json.loads((OUT / "steps_seq2.json").read_text()):
        sess.apply(st["rule"], st["params"])
    uni = Universe.parse("int=-6..8,listlen=6,syms=a:b")
    oracle = Oracle(sess.program, sess.schemas[-1], uni)

    def listt(cs):
        t = Sym("[]")
        for c in reversed(cs):
            t = Struct(".", (Sym(c), t))
        return t

    checked = mismatches = 0
    for n in range(7):
        for tup in itertools.product("ab", repeat=n):
            word = "".join(tup)
            inside = n % 2 == 0 and word == "a" * (n // 2) + "b" * (n // 2)
            got = oracle.has_proof_tree(Atom("new1", (listt(tup),)))
            checked += 1
            if got == inside:
                mismatches += 1
                print(f"  MISMATCH {word!r}: proof tree {got}, in k {inside}")
    print(f"  {checked} strings checked, {mismatches} mismatches")
    assert mismatches == 0


def main():
    d1 = seq1()
    seq2(chain_text(d1, SIGMA_B))
    replay_all()
    if "--oracle" in sys.argv:
        oracle_check()


if __name__ == "__main__":
    main()
