"""Shared fixture programs and replay helpers for the test suite.

The committed derivation scripts under scripts/ are the long fixtures; the
short program texts here are used across several test modules.
"""

import json
from pathlib import Path

from stratfold.session import Session

ROOT = Path(__file__).resolve().parent.parent
SCRIPTS = ROOT / "scripts"

# Smallest interesting stratified program: even numbers by negation,
# descending on the measure X.
EVEN = """\
#sigma even(X) = <1, X>.
even(0).
even(X) :- X = Y + 1, \\+ even(Y).
"""

# Not locally stratified: p and q negate each other at the same level.
TWO_MODELS = """\
#sigma p/0 = <0, 0>.
#sigma q/0 = <0, 0>.
p :- \\+ q.
q :- \\+ p.
"""

# Negative call whose instance escapes every finite integer range upward.
UPWARD_ESCAPE = """\
#sigma q/1 = <0, 0>.
#sigma p/1 = <1, 0>.
q(X) :- X >= 0.
p(X) :- \\+ q(X + 1).
"""

# Initial program of the nonnegative-complement walkthrough: q holds on
# nonnegatives (with a redundant self-loop so q keeps a recursive clause).
WALKTHROUGH_P0 = """\
#sigma q/1 = <0, 0>.
q(X) :- X >= 0.
q(X) :- q(X).
"""

# pred_int for each committed derivation script
REPLAY_PREDS = {
    ("even_odd", "stage1"): ["p"],
    ("even_odd", "stage2"): ["r"],
    ("queens", "seq1"): [
        "nat", "nat_list", "length", "member", "in_range", "occurs", "suffix",
    ],
    ("queens", "seq2"): [
        "nat", "nat_list", "length", "member", "in_range", "occurs", "suffix",
        "new1",
    ],
    ("queens", "seq3"): [
        "nat", "nat_list", "length", "member", "in_range", "occurs", "suffix",
        "new1", "new3",
    ],
    ("queens", "seq4"): ["queens"],
    ("ab_strings", "seq1"): ["string", "symbol", "app", "in_language"],
    ("ab_strings", "seq2"): ["new1"],
}

ALL_SCRIPTS = sorted(REPLAY_PREDS)


def load_script(family: str, stem: str) -> tuple[str, list]:
    base = SCRIPTS / family
    text = (base / f"p0_{stem}.pl").read_text()
    steps = json.loads((base / f"steps_{stem}.json").read_text())
    return text, steps


def replay(family: str, stem: str) -> Session:
    """Replay one committed derivation script and return the live session."""
    text, steps = load_script(family, stem)
    sess = Session.from_text(text, pred_int=REPLAY_PREDS[(family, stem)])
    sess.replay_steps(steps)
    return sess


def walkthrough_session() -> Session:
    """A three-step unfold/fold round trip: define the complement of q by
    negation, unfold the negative call, then fold back. The fold reuses a
    definition whose only clause was consumed by the unfold, so the sequence
    must be flagged as not admissible (and its final program indeed loses
    p(a) on negative a)."""
    s = Session.from_text(WALKTHROUGH_P0, pred_int=["p"])
    s.apply("R1", {"defs": ["p(X) :- \\+ q(X)."], "sigma": "#sigma p/1 = <1, 0>."})
    s.apply("R4", {"clause_id": 3, "literal_position": 0})
    s.apply("R5", {"clause_ids": [4], "def_pred": "p"})
    return s
