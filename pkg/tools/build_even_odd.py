"""Builds the sorted-list example: two chained derivation scripts.

The source program says a list is unsorted when a smaller element sits at
an even position and a bigger one at an odd position.  Stage 1 drives the
index reasoning out of the program, leaving a mutually recursive pair of
comparison predicates; stage 2 then removes the remaining negation from
the complement ("the list is sorted") side.  Each stage records its steps
through a Driver so the output replays through the CLI.
"""

from pathlib import Path

from driverlib import BuildError, Driver, ground_value

from stratfold.clauses import format_clause

OUT = Path(__file__).resolve().parent.parent / "scripts" / "even_odd"

STAGE1 = """\
#sigma occurs/3 = <0, 0>.
#sigma list/1 = <0, 0>.
#sigma even(X) = <1, X>.
#sigma p/1 = <2, 0>.

p(L) :- I>=1, J>=1, X<Y, occurs(X,I,L), even(I), occurs(Y,J,L), \\+even(J).
even(X) :- X=0.
even(X+1) :- X>=0, \\+even(X).
occurs(X,I,[H|T]) :- I=1, X=H.
occurs(X,I+1,[H|T]) :- I>=1, occurs(X,I,T).
list([]).
list([H|T]) :- list(T).
"""

# p after one round of index unfolding
P_MID = (
    "p([A|L]) :- I>=1, J>=1, X<Y, occurs(X,I,L), even(I+1),"
    " occurs(Y,J,[A|L]), \\+even(J)."
)
P_SHORT = "p([A|L]) :- J>=1, Y<A, occurs(Y,J,L), even(J+1)."
P_LONG = (
    "p([A|L]) :- I>=1, J>=1, X<Y, occurs(X,I,L), even(I+1),"
    " occurs(Y,J,L), \\+even(J+1)."
)
P_SHORT_F = "p([A|L]) :- J>=1, Y<A, occurs(Y,J,L), \\+even(J)."
P_LONG_F = (
    "p([A|L]) :- I>=1, J>=1, X<Y, occurs(X,I,L), \\+even(I),"
    " occurs(Y,J,L), even(J)."
)

# p after the second round, before and after the head-pair case split
P_LT = "p([A,B|L]) :- B<A."
P_EV_S = "p([A,B|L]) :- I>=1, X<A, occurs(X,I,L), even(I)."
P_OD_S = "p([A,B|L]) :- I>=1, B<X, occurs(X,I,L), \\+even(I)."
P_MIX_S = (
    "p([A,B|L]) :- I>=1, J>=1, X<Y, occurs(X,I,L), even(I),"
    " occurs(Y,J,L), \\+even(J)."
)
P_EV = "p([A,B|L]) :- B>=A, I>=1, X<A, occurs(X,I,L), even(I)."
P_OD = "p([A,B|L]) :- B>=A, I>=1, B<X, occurs(X,I,L), \\+even(I)."
P_MIX = (
    "p([A,B|L]) :- B>=A, I>=1, J>=1, X<Y, occurs(X,I,L), even(I),"
    " occurs(Y,J,L), \\+even(J)."
)
P_FOLD = "p([A,B|L]) :- B>=A, new1(A,B,L)."

# first introduced predicate: the three p bodies without the head pair
D1_EV = "new1(A,B,L) :- I>=1, X<A, occurs(X,I,L), even(I)."
D1_OD = "new1(A,B,L) :- I>=1, B<X, occurs(X,I,L), \\+even(I)."
D1_MIX = (
    "new1(A,B,L) :- I>=1, J>=1, X<Y, occurs(X,I,L), even(I),"
    " occurs(Y,J,L), \\+even(J)."
)

# new1 unfolded one list level down (parity of every index flips)
U1_LT = "new1(A,B,[C|L]) :- B<C."
U1_EV = "new1(A,B,[C|L]) :- I>=1, B<X, occurs(X,I,L), even(I)."
U1_OD = "new1(A,B,[C|L]) :- I>=1, X<A, occurs(X,I,L), \\+even(I)."
U1_OC = "new1(A,B,[C|L]) :- I>=1, X<C, occurs(X,I,L), \\+even(I)."
U1_MIX = (
    "new1(A,B,[C|L]) :- I>=1, J>=1, X<Y, occurs(X,I,L), \\+even(I),"
    " occurs(Y,J,L), even(J)."
)

# new1 after splitting on how C relates to A and B
G1_EV = "new1(A,B,[C|L]) :- A>=C, B>=C, I>=1, B<X, occurs(X,I,L), even(I)."
G1_OD = "new1(A,B,[C|L]) :- A>=C, B>=C, I>=1, X<A, occurs(X,I,L), \\+even(I)."
G1_MIX = (
    "new1(A,B,[C|L]) :- A>=C, B>=C, I>=1, J>=1, X<Y, occurs(X,I,L),"
    " \\+even(I), occurs(Y,J,L), even(J)."
)
H1_EV = "new1(A,B,[C|L]) :- A<C, B>=C, I>=1, B<X, occurs(X,I,L), even(I)."
H1_OC = "new1(A,B,[C|L]) :- A<C, B>=C, I>=1, X<C, occurs(X,I,L), \\+even(I)."
H1_MIX = (
    "new1(A,B,[C|L]) :- A<C, B>=C, I>=1, J>=1, X<Y, occurs(X,I,L),"
    " \\+even(I), occurs(Y,J,L), even(J)."
)
F1_GG = "new1(A,B,[C|L]) :- A>=C, B>=C, new2(A,B,L)."
F1_GL = "new1(A,B,[C|L]) :- A<C, B>=C, new2(C,B,L)."

# second introduced predicate: the A>=C, B>=C bodies without the split
D2_EV = "new2(A,B,L) :- I>=1, B<X, occurs(X,I,L), even(I)."
D2_OD = "new2(A,B,L) :- I>=1, X<A, occurs(X,I,L), \\+even(I)."
D2_MIX = (
    "new2(A,B,L) :- I>=1, J>=1, X<Y, occurs(X,I,L), \\+even(I),"
    " occurs(Y,J,L), even(J)."
)

U2_LT = "new2(A,B,[C|L]) :- C<A."
U2_EV = "new2(A,B,[C|L]) :- I>=1, X<A, occurs(X,I,L), even(I)."
U2_OD = "new2(A,B,[C|L]) :- I>=1, B<X, occurs(X,I,L), \\+even(I)."
U2_OC = "new2(A,B,[C|L]) :- J>=1, C<Y, occurs(Y,J,L), \\+even(J)."
U2_MIX = (
    "new2(A,B,[C|L]) :- I>=1, J>=1, X<Y, occurs(X,I,L), even(I),"
    " occurs(Y,J,L), \\+even(J)."
)

G2_EV = "new2(A,B,[C|L]) :- B>=C, C>=A, I>=1, X<A, occurs(X,I,L), even(I)."
G2_OC = "new2(A,B,[C|L]) :- B>=C, C>=A, J>=1, C<Y, occurs(Y,J,L), \\+even(J)."
G2_MIX = (
    "new2(A,B,[C|L]) :- B>=C, C>=A, I>=1, J>=1, X<Y, occurs(X,I,L),"
    " even(I), occurs(Y,J,L), \\+even(J)."
)
H2_EV = "new2(A,B,[C|L]) :- B<C, C>=A, I>=1, X<A, occurs(X,I,L), even(I)."
H2_OD = "new2(A,B,[C|L]) :- B<C, C>=A, I>=1, B<X, occurs(X,I,L), \\+even(I)."
H2_MIX = (
    "new2(A,B,[C|L]) :- B<C, C>=A, I>=1, J>=1, X<Y, occurs(X,I,L),"
    " even(I), occurs(Y,J,L), \\+even(J)."
)
F2_GE = "new2(A,B,[C|L]) :- B>=C, C>=A, new1(A,C,L)."
F2_LT = "new2(A,B,[C|L]) :- B<C, C>=A, new1(A,B,L)."

STAGE1_FINAL = [P_LT, P_FOLD, U1_LT, F1_GG, F1_GL, U2_LT, F2_GE, F2_LT]

# stage 2: complement of p over lists
R_ROOT = "r(L) :- list(L), \\+p(L)."
R_NIL = "r([])."
R_ONE = "r([A])."
R_PAIR = "r([A,B|L]) :- B>=A, B>=A, list(L), \\+new1(A,B,L)."
R_FOLD = "r([A,B|L]) :- B>=A, new3(A,B,L)."

D3 = "new3(A,B,L) :- B>=A, list(L), \\+new1(A,B,L)."
N3_NIL = "new3(A,B,[]) :- B>=A."
N3_LT = "new3(A,B,[C|L]) :- B>=C, A<C, B>=C, list(L), \\+new2(C,B,L)."
N3_GE = "new3(A,B,[C|L]) :- B>=C, A>=C, B>=A, list(L), \\+new2(A,B,L)."
F3_LT = "new3(A,B,[C|L]) :- B>=C, A<C, new4(C,B,L)."
F3_GE = "new3(A,B,[C|L]) :- B>=C, A>=C, new4(A,B,L)."

D4 = "new4(A,B,L) :- B>=A, list(L), \\+new2(A,B,L)."
N4_NIL = "new4(A,B,[]) :- B>=A."
N4_LT = "new4(A,B,[C|L]) :- B<C, C>=A, B>=A, list(L), \\+new1(A,B,L)."
N4_GE = "new4(A,B,[C|L]) :- B>=C, C>=A, C>=A, list(L), \\+new1(A,C,L)."
F4_LT = "new4(A,B,[C|L]) :- B<C, C>=A, new3(A,B,L)."
F4_GE = "new4(A,B,[C|L]) :- B>=C, C>=A, new3(A,C,L)."

STAGE2_FINAL = [R_NIL, R_ONE, R_FOLD, N3_NIL, F3_LT, F3_GE, N4_NIL, F4_LT, F4_GE]


def parity_split(d, kids):
    """Children of an index unfold: (ground parity literal, the rest)."""
    g = [
        k
        for k in kids
        if any(
            l.atom.pred == "even" and ground_value(l.atom.args[0]) is not None
            for l in d.clause(k).body
        )
    ]
    r = [k for k in kids if k not in g]
    if len(g) != 1 or len(r) != 1:
        raise BuildError(f"unexpected unfold children {kids}")
    return g[0], r[0]


def list_split(d, kids):
    """Children of a list unfold: (nil case, cons case)."""
    n = [k for k in kids if all(l.atom.pred != "list" for l in d.clause(k).body)]
    c = [k for k in kids if k not in n]
    if len(n) != 1 or len(c) != 1:
        raise BuildError(f"unexpected unfold children {kids}")
    return n[0], c[0]


def has_lt(d, cid):
    return any(ac.rel == "<" for ac in d.clause(cid).constraint)


def stage1():
    d = Driver(STAGE1, ["p"])

    # two rounds of unfolding at the occurrence atoms
    root = d.find(
        "p(L) :- I>=1, J>=1, X<Y, occurs(X,I,L), even(I), occurs(Y,J,L),"
        " \\+even(J)."
    )
    g, r = parity_split(d, d.unfold(root, "occurs"))
    if d.drop_even_odd_ground(g) is not None:
        raise BuildError("first position cannot be even")
    r = d.ref_setc(r, P_MID)
    g, r = parity_split(d, d.unfold(r, "occurs", 1))
    short = d.ref_setc(d.drop_even_odd_ground(g), P_SHORT)
    d.ref_setc(r, P_LONG)
    d.expect([P_SHORT, P_LONG], ["p"])

    # flip the parity literals onto the tail indices, unfold once more
    f = d.ref_setc(d.flip_pos(d.find(P_SHORT)), P_SHORT_F)
    g, r = parity_split(d, d.unfold(f, "occurs"))
    d.ref_setc(d.drop_even_odd_ground(g), P_LT)
    d.ref_setc(d.flip_neg(r), P_EV_S)

    # negative side first: flipping the positive one first would put a bare
    # \+even(I) in front of it and shift the literal the next flip picks
    f = d.flip_neg(d.find(P_LONG))
    f = d.ref_setc(d.flip_pos(f), P_LONG_F)
    g, r = parity_split(d, d.unfold(f, "occurs"))
    h = d.drop_even_odd_ground(g)
    d.ref_setc(d.flip_pos(d.one(d.unfold(h, "occurs"))), P_OD_S)
    h = d.flip_neg(r)
    g, r = parity_split(d, d.unfold(h, "occurs", 1))
    if d.drop_even_odd_ground(g) is not None:
        raise BuildError("equal indices cannot have opposite parity")
    d.ref_setc(d.flip_pos(r, 1), P_MIX_S)

    # split each clause on the order of the first two elements
    plt = d.find(P_LT)
    for sans in (P_EV_S, P_OD_S, P_MIX_S):
        a, _ = d.ref_split(d.find(sans), sans, "B<A", "B>=A")
        d.subsume(plt, a)
    d.expect([P_LT, P_EV, P_OD, P_MIX], ["p"])

    # name the common tail, push it one list level down
    d.define([D1_EV, D1_OD, D1_MIX])
    g, r = parity_split(d, d.unfold(d.find(D1_EV), "occurs"))
    if d.drop_even_odd_ground(g) is not None:
        raise BuildError("first position cannot be even")
    d.ref_setc(d.flip_pos(r), U1_OD)
    g, r = parity_split(d, d.unfold(d.find(D1_OD), "occurs"))
    d.ref_setc(d.drop_even_odd_ground(g), U1_LT)
    d.ref_setc(d.flip_neg(r), U1_EV)
    g, r = parity_split(d, d.unfold(d.find(D1_MIX), "occurs"))
    if d.drop_even_odd_ground(g) is not None:
        raise BuildError("first position cannot be even")
    r = d.flip_pos(r)
    g, r = parity_split(d, d.unfold(r, "occurs", 1))
    d.ref_setc(d.drop_even_odd_ground(g), U1_OC)
    d.ref_setc(d.flip_neg(r, 1), U1_MIX)
    d.expect([U1_LT, U1_EV, U1_OD, U1_OC, U1_MIX], ["new1"])

    # split on the new head element, fold the two regions apart
    keeper = d.find(U1_LT)
    parts = {}
    for sans in (U1_EV, U1_OD, U1_OC, U1_MIX):
        a, b = d.ref_split(d.find(sans), sans, "B<C", "B>=C")
        d.subsume(keeper, a)
        parts[sans] = d.ref_split(b, sans, "A>=C", "A<C")
    v = d.ref_add(parts[U1_OD][1], U1_OD, "X<C")
    d.subsume(parts[U1_OC][1], v)
    v = d.ref_add(parts[U1_OC][0], U1_OC, "X<A")
    d.subsume(parts[U1_OD][0], v)
    d.expect([U1_LT, G1_EV, G1_OD, G1_MIX, H1_EV, H1_OC, H1_MIX], ["new1"])

    # same game one level deeper, with the roles of A and C swapped
    d.define([D2_EV, D2_OD, D2_MIX])
    g, r = parity_split(d, d.unfold(d.find(D2_EV), "occurs"))
    if d.drop_even_odd_ground(g) is not None:
        raise BuildError("first position cannot be even")
    d.ref_setc(d.flip_pos(r), U2_OD)
    g, r = parity_split(d, d.unfold(d.find(D2_OD), "occurs"))
    d.ref_setc(d.drop_even_odd_ground(g), U2_LT)
    d.ref_setc(d.flip_neg(r), U2_EV)
    g, r = parity_split(d, d.unfold(d.find(D2_MIX), "occurs"))
    h = d.drop_even_odd_ground(g)
    d.ref_setc(d.flip_pos(d.one(d.unfold(h, "occurs"))), U2_OC)
    r2 = d.flip_neg(r)
    g, r2 = parity_split(d, d.unfold(r2, "occurs", 1))
    if d.drop_even_odd_ground(g) is not None:
        raise BuildError("equal indices cannot have opposite parity")
    d.ref_setc(d.flip_pos(r2, 1), U2_MIX)
    d.expect([U2_LT, U2_EV, U2_OD, U2_OC, U2_MIX], ["new2"])

    keeper = d.find(U2_LT)
    parts = {}
    for sans in (U2_EV, U2_OD, U2_OC, U2_MIX):
        a, b = d.ref_split(d.find(sans), sans, "C<A", "C>=A")
        d.subsume(keeper, a)
        parts[sans] = d.ref_split(b, sans, "B>=C", "B<C")
    v = d.ref_add(parts[U2_OD][0], U2_OD, "C<X")
    d.subsume(parts[U2_OC][0], v)
    v = d.ref_add(parts[U2_OC][1], U2_OC, "B<Y")
    d.subsume(parts[U2_OD][1], v)
    d.expect([U2_LT, G2_EV, G2_OC, G2_MIX, H2_EV, H2_OD, H2_MIX], ["new2"])

    # fold everything back onto the introduced names
    d.fold([d.find(P_EV), d.find(P_OD), d.find(P_MIX)], "new1")
    d.fold([d.find(G1_EV), d.find(G1_OD), d.find(G1_MIX)], "new2")
    d.fold([d.find(H1_EV), d.find(H1_OC), d.find(H1_MIX)], "new2")
    d.fold([d.find(G2_EV), d.find(G2_OC), d.find(G2_MIX)], "new1")
    d.fold([d.find(H2_EV), d.find(H2_OD), d.find(H2_MIX)], "new1")
    for pred in ("even", "occurs", "list"):
        d.eliminate(pred)
    d.expect(STAGE1_FINAL)
    d.finish(OUT, "stage1")
    return d


def stage2_text(d1):
    lines = [
        "#sigma list/1 = <0, 0>.",
        "#sigma p/1 = <2, 0>.",
        "#sigma new1/3 = <2, 0>.",
        "#sigma new2/3 = <2, 0>.",
        "#sigma r/1 = <3, 0>.",
        "",
        R_ROOT,
    ]
    lines += [format_clause(cl) for _, cl in d1.sess.program.clauses]
    lines += ["list([]).", "list([H|T]) :- list(T)."]
    return "\n".join(lines) + "\n"


def stage2(d1):
    d = Driver(stage2_text(d1), ["r"])

    # lists of length 0 and 1 are sorted outright
    nil, cons = list_split(d, d.unfold(d.find(R_ROOT), "list"))
    d.one(d.neg_unfold(nil, "p"))
    nil, cons = list_split(d, d.unfold(cons, "list"))
    d.one(d.neg_unfold(nil, "p"))
    d.one(d.neg_unfold(cons, "p"))
    d.expect([R_NIL, R_ONE, R_PAIR], ["r"])

    # complement of new1, then of new2
    (dn,) = d.define([D3])
    nil, cons = list_split(d, d.unfold(dn, "list"))
    d.one(d.neg_unfold(nil, "new1"))
    k1, k2 = d.neg_unfold(cons, "new1")
    s_lt, s_ge = (k1, k2) if has_lt(d, k1) else (k2, k1)
    s_lt = d.ref_setc(s_lt, N3_LT)
    s_ge = d.ref_setc(s_ge, N3_GE)

    (dn,) = d.define([D4])
    nil, cons = list_split(d, d.unfold(dn, "list"))
    d.one(d.neg_unfold(nil, "new2"))
    k1, k2 = d.neg_unfold(cons, "new2")
    t_lt, t_ge = (k1, k2) if has_lt(d, k1) else (k2, k1)
    t_lt = d.ref_setc(t_lt, N4_LT)
    t_ge = d.ref_setc(t_ge, N4_GE)
    d.expect([N3_NIL, N3_LT, N3_GE], ["new3"])
    d.expect([N4_NIL, N4_LT, N4_GE], ["new4"])

    d.fold([d.find(R_PAIR)], "new3")
    d.fold([s_lt], "new4")
    d.fold([s_ge], "new4")
    d.fold([t_lt], "new3")
    d.fold([t_ge], "new3")
    for pred in ("p", "new1", "new2", "list"):
        d.eliminate(pred)
    d.expect(STAGE2_FINAL)
    d.finish(OUT, "stage2")
    return d


def main():
    d1 = stage1()
    stage2(d1)


if __name__ == "__main__":
    main()
