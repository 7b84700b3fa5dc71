"""Exercise each rule on the worked fixtures before test freezing."""

import sys

sys.path.insert(0, "/root/pkg/src")

from stratfold.parser import parse_program, parse_clause
from stratfold.clauses import format_clause, format_program
from stratfold.sigma import StratSchema
from stratfold import rules as R


class FakeDef:
    def __init__(self, pred, clause, cid=None):
        self.pred = pred
        self.clause = clause
        self.program_clause_id = cid


class FakeSession:
    def __init__(self, text, pred_int=(), defs=(), theory=None):
        self.program = parse_program(text)
        self.schema = StratSchema.from_program(self.program)
        self.theory = theory or self.program.theory
        self.p0_preds = self.program.preds()
        self.seen_preds = set(self.program.preds())
        self.pred_int = set(pred_int)
        self.defs = list(defs)

    def show(self):
        print(format_program(self.program))


def hprint(title):
    print("\n=== " + title + " ===")


# R3 fixture
hprint("R3 positive unfold")
s = FakeSession(
    """
#theory integers.
p(X) :- X >= 1, q(X).
q(Y) :- Y = 0.
q(Y) :- Y = Z + 1, q(Z).
"""
)
res = R.r3_unfold_pos(s, clause_id=1, atom_position=0)
for cid in res.added:
    print(cid, format_clause(res.program.by_id(cid)))
print("notes:", res.notes)

# R4 fixture: four clauses
hprint("R4 negative unfold")
s = FakeSession(
    """
#theory integers.
h(X) :- X >= 0, \\+ p(X).
p(Y) :- Y = Z + 1, Z >= 0, q(Z).
p(Y) :- Y = Z - 1, Z >= 1, q(Z), \\+ r(Z).
q(A) :- A >= 0.
r(A) :- A >= 5.
"""
)
res = R.r4_unfold_neg(s, clause_id=1, literal_position=0)
for cid in res.added:
    print(cid, format_clause(res.program.by_id(cid)))
print("notes:", res.notes)

# R5 fixture
hprint("R5 positive fold")
deltas = [
    parse_clause("new(Z, C) :- V = Z - C, p(V, C)."),
    parse_clause("new(Z, C) :- V = Z + C, \\+ q(V)."),
]
s = FakeSession(
    """
#theory integers.
h(X) :- X >= 1, Y = X - 1, p(Y, 1).
h(X) :- X >= 1, Y = X + 1, \\+ q(Y).
""",
    defs=[FakeDef("new", deltas[0]), FakeDef("new", deltas[1])],
)
res = R.r5_fold_pos(s, clause_ids=[1, 2], def_pred="new")
for cid in res.added:
    print(cid, format_clause(res.program.by_id(cid)))
print("notes:", res.notes)

# R6 fixture
hprint("R6 negative fold")
s = FakeSession(
    """
#theory integers.
h(X) :- X >= 0, q(X), \\+ r(X, 0).
""",
    defs=[FakeDef("new", parse_clause("new(X, C) :- X >= C, r(X, C)."))],
)
res = R.r6_fold_neg(s, clause_id=1, def_pred="new")
for cid in res.added:
    print(cid, format_clause(res.program.by_id(cid)))
print("notes:", res.notes)

# Example 4: R4 refusal, caller variable escapes
hprint("Example 4 (expect ConditionIIIFailed)")
s = FakeSession(
    """
#theory integers.
p :- \\+ q.
q :- r(X).
r(X) :- X = 0.
"""
)
try:
    R.r4_unfold_neg(s, clause_id=1, literal_position=0)
    print("NO REFUSAL (bug)")
except R.Refusal as e:
    print("refused:", e.tag, "-", e.message)

# Example 6: R6 refusal, head/body variable mismatch
hprint("Example 6 (expect FVConditionFailed)")
s = FakeSession(
    """
#theory integers.
p :- \\+ r(X).
r(Y) :- Y = 0.
""",
    defs=[FakeDef("q", parse_clause("q :- r(Y)."))],
)
try:
    R.r6_fold_neg(s, clause_id=1, def_pred="q")
    print("NO REFUSAL (bug)")
except R.Refusal as e:
    print("refused:", e.tag, "-", e.message)

# Example 7: law 4 RL refused
hprint("Example 7 (expect IrreversibleDirection)")
s = FakeSession(
    """
#theory integers.
p :- q.
q.
"""
)
try:
    R.r7_replace(s, law=4, direction="RL", clause_ids=[1])
    print("NO REFUSAL (bug)")
except R.Refusal as e:
    print("refused:", e.tag, "-", e.message)

# law 4 LR on duplicate
hprint("law 4 LR")
s = FakeSession(
    """
#theory integers.
#sigma p/0 = <1, 0>.
#sigma q/0 = <0, 0>.
p :- q, q.
q.
"""
)
res = R.r7_replace(s, law=4, direction="LR", clause_ids=[1], law_params={"at": 0})
for cid in res.added:
    print(cid, format_clause(res.program.by_id(cid)))

# law 9 split
hprint("law 9 split")
s = FakeSession(
    """
#theory integers.
#sigma q/1 = <0, 0>.
#sigma p/1 = <1, val(1)>.
p(X) :- X >= 0, q(X).
q(X) :- X = 0.
"""
)
res = R.r7_replace(
    s,
    law=9,
    direction="LR",
    clause_ids=[1],
    law_params={"c1": "X >= 0, X < 1", "c2": "X >= 1"},
)
for cid in res.added:
    print(cid, format_clause(res.program.by_id(cid)))

# law 5 subsumption
hprint("law 5 subsumption")
s = FakeSession(
    """
#theory integers.
p(X) :- X >= 0, q(X).
p(Y) :- Y >= 0, Y >= 2, q(Y), r(Y).
q(X) :- X = 0.
r(X) :- X = 0.
"""
)
res = R.r7_replace(s, law=5, direction="LR", clause_ids=[1, 2])
print("removed:", res.removed, "notes:", res.notes)

# law 10 LR then RL
hprint("law 10 LR")
s = FakeSession(
    """
#theory integers.
#sigma q/1 = <0, 0>.
#sigma p/1 = <1, 0>.
p(X) :- X >= 1, q(X - 1).
q(X) :- X = 0.
"""
)
res = R.r7_replace(
    s,
    law=10,
    direction="LR",
    clause_ids=[1],
    law_params={"var": "W", "term": "X - 1"},
)
for cid in res.added:
    print(cid, format_clause(res.program.by_id(cid)))
s2 = FakeSession(
    """
#theory integers.
#sigma q/1 = <0, 0>.
#sigma p/1 = <1, 0>.
p(X) :- W = X - 1, X >= 1, q(W).
q(X) :- X = 0.
"""
)
res = R.r7_replace(
    s2, law=10, direction="RL", clause_ids=[1], law_params={"eq_index": 0}
)
for cid in res.added:
    print(cid, format_clause(res.program.by_id(cid)))

# useless predicates
hprint("useless preds")
s = FakeSession(
    """
#theory integers.
p(X) :- q(X), \\+ r(X).
q(X) :- p(X).
r(X) :- X > 0.
"""
)
print("useless:", sorted(R.useless_preds(s.program)))
s2 = FakeSession("#theory integers.\na :- a.\n")
print("self-loop:", sorted(R.useless_preds(s2.program)))
s3 = FakeSession("#theory integers.\nf(X) :- X = 0.\n")
print("facts-only:", sorted(R.useless_preds(s3.program)))

# R8
hprint("R8")
res = R.r8_delete_useless(s, "p")
print("removed:", res.removed)
try:
    R.r8_delete_useless(s, "r")
    print("NO REFUSAL (bug)")
except R.Refusal as e:
    print("refused:", e.tag)

# R1 + R2
hprint("R1 define, R2 eliminate")
s = FakeSession(
    """
#theory integers.
#sigma q/1 = <0, 0>.
q(X) :- X >= 0.
q(X) :- q(X).
""",
    pred_int={"p"},
)
res = R.r1_define(s, defs=["p(X) :- \\+ q(X)."], sigma="#sigma p/1 = <1, 0>.")
s.program, s.schema = res.program, res.schema
s.seen_preds |= {"p"}
s.defs.append(FakeDef("p", res.defs_added[0][1], res.defs_added[0][0]))
print(format_program(s.program))
print("notes:", res.notes)
try:
    R.r1_define(s, defs=["p(X) :- \\+ q(X)."])
    print("NO REFUSAL (bug)")
except R.Refusal as e:
    print("refused again:", e.tag)
try:
    R.r2_eliminate(s, "q")
    print("NO REFUSAL (bug)")
except R.Refusal as e:
    print("R2 refused:", e.tag)

# R4 on the new definition (Example 1 step)
hprint("Example 1 chain: R4 then R5 self-fold")
res = R.r4_unfold_neg(s, clause_id=3, literal_position=0)
s.program = res.program
for cid in res.added:
    print(cid, format_clause(s.program.by_id(cid)))
res = R.r5_fold_pos(s, clause_ids=[4], def_pred="p")
s.program = res.program
for cid in res.added:
    print(cid, format_clause(s.program.by_id(cid)))

# R9/R10 with oracle
hprint("R9 oracle modes")
s = FakeSession(
    """
#theory naturals.
#sigma nat/1 = <0, 0>.
nat(0).
nat(N) :- N = M + 1, nat(M).
"""
)
res = R.r9_add_constraint(
    s, 2, "M >= 0", {"mode": "oracle", "universe": "int=0..8"}
)
print("R9 holds:", res.notes)
try:
    R.r9_add_constraint(s, 2, "M >= 1", {"mode": "oracle", "universe": "int=0..8"})
    print("NO REFUSAL (bug)")
except R.Refusal as e:
    print("refused:", e.tag, "-", e.message)
try:
    R.r9_add_constraint(s, 2, "X < 0", {"mode": "oracle", "universe": "int=0..8"})
    print("NO REFUSAL (bug)")
except R.Refusal as e:
    print("refused:", e.tag, "-", e.message)

hprint("R10 stratification guard")
s = FakeSession(
    """
#theory integers.
#sigma p/1 = <1, 0>.
p(X) :- X != X, \\+ p(X).
"""
)
try:
    R.r10_delete_constraint(s, 1, "X != X", {"mode": "assumed", "note": "test"})
    print("NO REFUSAL (bug)")
except R.Refusal as e:
    print("refused:", e.tag, "-", e.message)

# applicable_rules probe
hprint("applicable_rules")
s = FakeSession(
    """
#theory integers.
p :- \\+ q.
q :- r(X).
r(X) :- X = 0.
"""
)
for entry in R.applicable_rules(s, 1):
    mark = "+" if entry["applicable"] else "-"
    tag = "" if entry["applicable"] else f" [{entry['refusal']['tag']}]"
    print(f" {mark} {entry['rule']}: {entry['summary']}{tag}")

print("\nALL SMOKE CHECKS RAN")
