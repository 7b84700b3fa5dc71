import sys

sys.path.insert(0, "/root/pkg/src")

from stratfold.session import Session, ReplayError, diff_programs
from stratfold.oracle import Universe
from stratfold.clauses import format_program

P0 = """#sigma q/1 = <0, 0>.
q(X) :- X >= 0.
q(X) :- q(X).
"""

s = Session.from_text(P0, pred_int=["p"])
s.apply("R1", {"defs": ["p(X) :- \\+ q(X)."], "sigma": "#sigma p/1 = <1, 0>."})
s.apply("R4", {"clause_id": 3, "literal_position": 0})
s.apply("R5", {"clause_ids": [4], "def_pred": "p"})
print(format_program(s.program))

rep = s.check_admissible()
print("admissible:", rep.ok, "condition:", rep.condition)
print("detail:", rep.detail)

diff = s.oracle_diff(Universe(int_range=(-2, 2)))
print("diff:", diff)

js = s.to_json()
print("json bytes:", len(js))
s2 = Session.load_obj(__import__("json").loads(js))
assert s2.to_json() == js, "save/load identity failed"
assert format_program(s2.program) == format_program(s.program), "replay mismatch"
print("save/load + replay identity OK")

# refusal mid-replay cites the step index
bad = __import__("json").loads(js)
bad["steps"].insert(1, {"rule": "R5", "params": {"clause_ids": [3], "def_pred": "p"}})
try:
    Session.load_obj(bad)
    print("NO ERROR (bug)")
except ReplayError as e:
    print("replay error at step", e.step_index, "->", e.cause.tag)

dd = diff_programs(s.program0, s.program)
print("program diff:", dd["removed"], "|", dd["added"])
