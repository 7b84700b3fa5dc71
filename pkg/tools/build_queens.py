"""Fixture builder for the board-placement derivation.

The source program describes a safe placement of N pieces on an N x N
board as "no suffix of the column list starts with an attacked piece";
the derived program R checks a candidate list in a single left-to-right
pass. Four chained sessions get there, each introducing one definition,
unfolding it through the list walker it consumes, and folding the
recursive remainder:

  seq1  new1(A,T,K): some piece in T attacks a piece of column A placed
        K rows above the head of T. Unfolding through occurs/3 turns the
        three attack cases into a one-step recursion.
  seq2  new3(A,T,N,M): column A is in 1..N and no piece of T attacks it
        from M+1 rows below. Negative unfolding of new1 produces the
        definite recursion (clauses 15 and 16 of R).
  seq3  aux8(L,N): some suffix of L starts with an unsafe piece.
        Unfolding through suffix/2 gives a plain list recursion.
  seq4  new2(N,L,K): L has N-K rows, none of them unsafe. Its recursion
        (clauses 12 and 13f of R) and the queens/2 wrapper (clause 1f)
        fall out of one unfold through length/2 plus two folds; the
        interest set {queens} then lets every walker be eliminated.

Writes p0_seqN.pl / steps_seqN.json under scripts/queens/, chained so
that each p0 is the previous session's final program.
"""

from __future__ import annotations

import sys
from pathlib import Path

sys.path.insert(0, "src")
sys.path.insert(0, "tools")

from driverlib import Driver, ground_trivial
from stratfold.clauses import format_ac, format_clause
from stratfold.terms import Struct, Sym, Var, term_vars

OUT = Path("scripts/queens")

P0_TEXT = """\
#sigma nat/1 = <0, 0>.
#sigma nat_list/1 = <0, 0>.
#sigma length/2 = <0, 0>.
#sigma member/2 = <0, 0>.
#sigma in_range/3 = <0, 0>.
#sigma occurs/3 = <0, 0>.
#sigma suffix/2 = <0, 0>.

nat(0).
nat(N) :- N=M+1, M>=0, nat(M).
nat_list([]).
nat_list([H|T]) :- nat(H), nat_list(T).
length([], 0).
length([H|T], N) :- N=M+1, M>=0, length(T, M).
member(X, [H|T]) :- X=H.
member(X, [H|T]) :- member(X, T).
in_range(X, M, N) :- X=N, M=<N.
in_range(X, M, N) :- N=K+1, M=<K, in_range(X, M, K).
occurs(X, I, [H|T]) :- I=1, X=H.
occurs(X, I+1, [H|T]) :- I>=1, occurs(X, I, T).
suffix(S, L) :- S=L.
suffix(S, [H|T]) :- suffix(S, T).
"""

BASE_PREDS = ["nat", "nat_list", "length", "member", "in_range", "occurs", "suffix"]

SIGMA0 = [
    "#sigma nat/1 = <0, 0>.",
    "#sigma nat_list/1 = <0, 0>.",
    "#sigma length/2 = <0, 0>.",
    "#sigma member/2 = <0, 0>.",
    "#sigma in_range/3 = <0, 0>.",
    "#sigma occurs/3 = <0, 0>.",
    "#sigma suffix/2 = <0, 0>.",
]
SIGMA1 = SIGMA0 + ["#sigma new1/3 = <0, 0>."]
SIGMA2 = SIGMA1 + ["#sigma new3/4 = <1, 0>."]
SIGMA3 = SIGMA2 + ["#sigma aux8/2 = <2, 0>."]

# the three ways a piece B found M rows into T attacks column A placed
# K rows above T's head: same column, falling diagonal, rising diagonal
D_SAME = "new1(A,T,K) :- M>=1, A=B, occurs(B,M,T)."
D_FALL = "new1(A,T,K) :- M>=1, A-B=M+K, occurs(B,M,T)."
D_RISE = "new1(A,T,K) :- M>=1, B-A=M+K, occurs(B,M,T)."

D_SAFE = "new3(A,T,N,M) :- nat(A), nat_list(T), in_range(A,1,N), \\+new1(A,T,M)."

D_BAD = "aux8(L,N) :- suffix([H|T],L), \\+new3(H,T,N,0)."

D_COUNT = "new2(N,L,K) :- N=M+K, nat(M), length(L,M), \\+aux8(L,N)."
D_QUEENS = "queens(N,L) :- N=M+0, nat(M), length(L,M), \\+aux8(L,N)."

NEW1_FINAL = [
    "new1(A,[B|T],K) :- A=B.",
    "new1(A,[B|T],K) :- A-B=K+1.",
    "new1(A,[B|T],K) :- B-A=K+1.",
    "new1(A,[B|T],K) :- new1(A,T,K+1).",
]
NEW3_FINAL = [
    "new3(A,[],N,M) :- in_range(A,1,N), nat(A).",
    "new3(A,[B|T],N,M) :- A!=B, A-B!=M+1, B-A!=M+1, nat(B), new3(A,T,N,M+1).",
]
AUX8_FINAL = [
    "aux8([H|T],N) :- \\+new3(H,T,N,0).",
    "aux8([H|T],N) :- aux8(T,N).",
]
R_FINAL = [
    "queens(N,L) :- new2(N,L,0).",
    "new2(N,[],K) :- N=K.",
    "new2(N,[H|T],K) :- N>=K+1, new2(N,T,K+1), new3(H,T,N,0).",
    "new3(A,[],N,M) :- in_range(A,1,N), nat(A).",
    "new3(A,[B|T],N,M) :- A!=B, A-B!=M+1, B-A!=M+1, nat(B), new3(A,T,N,M+1).",
    "in_range(X,M,N) :- X=N, M=<N.",
    "in_range(X,M,N) :- N=K+1, M=<K, in_range(X,M,K).",
    "nat(0).",
    "nat(N) :- N=M+1, M>=0, nat(M).",
]


def _list_term(t):
    return (isinstance(t, Sym) and t.name == "[]") or (
        isinstance(t, Struct) and t.functor == "."
    )


class QDriver(Driver):
    """A Driver whose tidy never rewrites a head variable into arithmetic.

    Equations here carry two different jobs: structural bindings (list
    promotions, walker indices) that should be substituted away, and
    arithmetic guards on head variables (N=K, A=B) that must stay in the
    constraint because later folds match on them. So a binding is only
    substituted when the variable the substitution law would pick is not
    a head variable, or when a head variable is being promoted into list
    structure. No linear isolation; exact guard shapes come from setc.
    """

    def tidy(self, cid):
        while True:
            cl = self.clause(cid)
            head_vars = set()
            for a in cl.head.args:
                head_vars |= set(term_vars(a))
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
                if victim not in head_vars or _list_term(other):
                    idx = i
                    break
            if idx is None:
                break
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
        cl = self.clause(cid)
        keep = [ac for ac in cl.constraint if not ground_trivial(ac)]
        if len(keep) != len(cl.constraint):
            cid = self.setc(
                cid, ", ".join(format_ac(a) for a in keep) if keep else "0=0"
            )
        return cid

    def swap(self, cid, at):
        rec = self.apply(
            "R7", {"law": 3, "clause_ids": [cid], "law_params": {"at": at}}
        )
        (cid,) = rec.added
        return cid


def chain_text(d, sigma_lines):
    lines = list(sigma_lines) + [""]
    lines += [format_clause(cl) for _, cl in d.sess.program.clauses]
    return "\n".join(lines) + "\n"


def seq1():
    d = QDriver(P0_TEXT, BASE_PREDS)
    copies = d.define([D_SAME, D_FALL, D_RISE])
    for cid in copies:
        d.unfold(cid, "occurs")
    d.find("new1(A,[B|T],K) :- A=B.")
    for raw, ref in (
        ("new1(A,[B|T],K) :- A-B=1+K.", "new1(A,[B|T],K) :- A-B=K+1."),
        ("new1(A,[B|T],K) :- B-A=1+K.", "new1(A,[B|T],K) :- B-A=K+1."),
    ):
        d.ref_setc(d.find(raw), ref)
    # the three recursive branches walk into the tail, so the attacked
    # element B is distinct from the list head H; the walker index I is
    # kept exposed so the fold can bind the definition's row offset to it
    rec_refs = [
        "new1(A,[H|T],K) :- I>=1, A=B, occurs(B,I,T).",
        "new1(A,[H|T],K) :- I>=1, A-B=I+(K+1), occurs(B,I,T).",
        "new1(A,[H|T],K) :- I>=1, B-A=I+(K+1), occurs(B,I,T).",
    ]
    loops = []
    for raw, ref in zip(
        (
            "new1(A,[H|T],K) :- I+1>=1, A=B, I>=1, occurs(B,I,T).",
            "new1(A,[H|T],K) :- I+1>=1, A-B=I+1+K, I>=1, occurs(B,I,T).",
            "new1(A,[H|T],K) :- I+1>=1, B-A=I+1+K, I>=1, occurs(B,I,T).",
        ),
        rec_refs,
    ):
        loops.append(d.ref_setc(d.find(raw), ref))
    d.fold(loops, "new1")
    d.expect(NEW1_FINAL, preds={"new1"})
    d.finish(OUT, "seq1")
    return d


def seq2(text):
    d = QDriver(text, BASE_PREDS + ["new1"])
    (copy,) = d.define([D_SAFE])
    d.unfold(copy, "nat_list")

    nil = d.find("new3(A,[],N,M) :- nat(A), in_range(A,1,N), \\+new1(A,[],M).")
    nil = d.one(d.neg_unfold(nil, "new1"))
    d.swap(nil, 0)

    cons = d.find(
        "new3(A,[B|T],N,M) :-"
        " nat(A), nat(B), nat_list(T), in_range(A,1,N), \\+new1(A,[B|T],M)."
    )
    cons = d.one(d.neg_unfold(cons, "new1"))
    cons = d.swap(cons, 0)
    d.fold([cons], "new3")

    d.expect(NEW3_FINAL, preds={"new3"})
    d.finish(OUT, "seq2")
    return d


def seq3(text):
    d = QDriver(text, BASE_PREDS + ["new1", "new3"])
    (copy,) = d.define([D_BAD])
    d.unfold(copy, "suffix")
    step = d.find("aux8([H|T],N) :- suffix([B|S],T), \\+new3(B,S,N,0).")
    d.fold([step], "aux8")
    d.expect(AUX8_FINAL, preds={"aux8"})
    d.finish(OUT, "seq3")
    return d


def seq4(text):
    d = QDriver(text, ["queens"])
    (c_count,) = d.define([D_COUNT])
    (c_queens,) = d.define([D_QUEENS])
    d.unfold(c_count, "length")

    nil = d.find("new2(N,[],K) :- N=0+K, nat(0), \\+aux8([],N).")
    nil = d.one(d.unfold(nil, "nat"))
    nil = d.one(d.neg_unfold(nil, "aux8"))
    d.ref_setc(nil, "new2(N,[],K) :- N=K.")

    cons = d.find(
        "new2(N,[A|T],K) :- N=M+1+K, M>=0, nat(M+1), length(T,M), \\+aux8([A|T],N)."
    )
    cons = d.one(d.unfold(cons, "nat"))
    cons = d.ref_setc(
        cons,
        "new2(N,[A|T],K) :-"
        " M2=M, N=M+(K+1), N>=K+1, nat(M2), length(T,M), \\+aux8([A|T],N).",
    )
    cons = d.tidy(cons)
    cons = d.one(d.neg_unfold(cons, "aux8"))
    cons = d.swap(cons, 2)
    d.fold([cons], "new2")

    d.fold([c_queens], "new2")

    for pred in ("suffix", "member", "occurs", "length", "nat_list", "new1", "aux8"):
        d.eliminate(pred)
    d.expect(R_FINAL)
    d.finish(OUT, "seq4")
    return d


def replay_all():
    from stratfold.session import Session

    preds = {
        "seq1": BASE_PREDS,
        "seq2": BASE_PREDS + ["new1"],
        "seq3": BASE_PREDS + ["new1", "new3"],
        "seq4": ["queens"],
    }
    for stem, pi in preds.items():
        sess = Session.from_text((OUT / f"p0_{stem}.pl").read_text(), pi)
        import json

        for st in json.loads((OUT / f"steps_{stem}.json").read_text()):
            sess.apply(st["rule"], st["params"])
        rep = sess.check_admissible()
        assert rep.ok, (stem, rep.detail)
        print(f"[{stem}] replayed {len(sess.steps)} steps, admissible")


def oracle_counts():
    import itertools
    import json

    from stratfold.clauses import Atom
    from stratfold.oracle import Oracle, Universe
    from stratfold.session import Session
    from stratfold.terms import Num

    sess = Session.from_text((OUT / "p0_seq4.pl").read_text(), ["queens"])
    for st in json.loads((OUT / "steps_seq4.json").read_text()):
        sess.apply(st["rule"], st["params"])
    uni = Universe.parse("int=0..5,listlen=5,elem=1..5")
    oracle = Oracle(sess.program, sess.schemas[-1], uni)

    def listt(xs):
        t = Sym("[]")
        for x in reversed(xs):
            t = Struct(".", (Num(x), t))
        return t

    def safe(board):
        for i, a in enumerate(board):
            for j in range(i + 1, len(board)):
                b = board[j]
                if a == b or abs(a - b) == j - i:
                    return False
        return True

    for n in range(6):
        boards = list(itertools.product(range(1, n + 1), repeat=n))
        want = sum(safe(b) for b in boards)
        got = sum(
            oracle.has_proof_tree(Atom("queens", (Num(n), listt(list(b)))))
            for b in boards
        )
        print(f"  N={n}: proved {got}, brute force {want}")
        assert got == want, (n, got, want)


def main():
    d1 = seq1()
    d2 = seq2(chain_text(d1, SIGMA1))
    d3 = seq3(chain_text(d2, SIGMA2))
    seq4(chain_text(d3, SIGMA3))
    replay_all()
    if "--oracle" in sys.argv:
        oracle_counts()


if __name__ == "__main__":
    main()
