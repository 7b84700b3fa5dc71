"""JSON service backing the browser workbench.

A thin veneer over derivation sessions: it owns an in-memory session store
and per-session mutation locks, and no derivation logic of its own. Refused
rule applications are ordinary 200 responses carrying a structured refusal
payload; transport-level errors (unknown session, malformed bodies) use
4xx-class statuses. One mutation may be in flight per session; a competing
mutation gets status 409 with a busy marker.
"""

from __future__ import annotations

import threading
from typing import Any, Mapping

from fastapi import Body, FastAPI, HTTPException, Query
from fastapi.responses import JSONResponse

from .clauses import format_atom, format_clause, format_program
from .rules import Refusal, StepParamError
from .session import ReplayError, Session, SessionError, diff_programs

app = FastAPI(
    title="stratfold service",
    description="Derivation sessions over locally stratified constraint"
    " logic programs: create a session, inspect clauses, probe and apply"
    " transformation rules, audit admissibility, and compare perfect models"
    " over finite universes.",
    version="1",
)


class _Store:
    def __init__(self):
        self._lock = threading.Lock()
        self._sessions: dict[str, Session] = {}
        self._mutation_locks: dict[str, threading.Lock] = {}
        self._counter = 0

    def add(self, session: Session) -> str:
        with self._lock:
            self._counter += 1
            sid = f"s{self._counter}"
            self._sessions[sid] = session
            self._mutation_locks[sid] = threading.Lock()
            return sid

    def get(self, sid: str) -> Session:
        with self._lock:
            session = self._sessions.get(sid)
        if session is None:
            raise HTTPException(status_code=404, detail=f"no session {sid}")
        return session

    def mutation_lock(self, sid: str) -> threading.Lock:
        with self._lock:
            lock = self._mutation_locks.get(sid)
        if lock is None:
            raise HTTPException(status_code=404, detail=f"no session {sid}")
        return lock

    def items(self) -> list[tuple[str, Session]]:
        with self._lock:
            return sorted(self._sessions.items())

    def clear(self) -> None:
        with self._lock:
            self._sessions.clear()
            self._mutation_locks.clear()
            self._counter = 0


store = _Store()


def _state_payload(sid: str, s: Session) -> dict:
    return {
        "session_id": sid,
        "theory": s.theory,
        "pred_int": sorted(s.pred_int),
        "step_count": len(s.steps),
        "program": format_program(s.program),
        "clauses": [
            {"id": cid, "text": format_clause(c), "pred": c.head.pred}
            for cid, c in s.program.clauses
        ],
        "sigma": [
            {"pred": p, "level": e.level, "expr": e.expr_text()}
            for p, e in sorted(s.schema.entries.items())
        ],
        "steps": [
            {
                "index": i,
                "rule": st.rule,
                "params": st.params,
                "added": st.added,
                "removed": st.removed,
                "notes": st.notes,
            }
            for i, st in enumerate(s.steps)
        ],
        "defs": [
            {
                "pred": d.pred,
                "clause": format_clause(d.clause),
                "clause_id": d.program_clause_id,
                "introduced_at": d.introduced_at,
                "positively_unfolded_at": d.positively_unfolded_at,
                "used_for_folding_at": list(d.used_for_folding_at),
            }
            for d in s.defs
        ],
    }


def _admissibility_payload(s: Session) -> dict:
    rep = s.check_admissible()
    out: dict[str, Any] = {"ok": rep.ok}
    if not rep.ok:
        out["condition"] = rep.condition
        out["detail"] = rep.detail
    return out


@app.get("/rules")
def rule_schemas() -> list[dict]:
    """Parameter forms for each rule, for front ends to render."""
    return RULE_PARAM_SCHEMAS


@app.get("/sessions")
def list_sessions() -> list[dict]:
    return [
        {
            "session_id": sid,
            "pred_int": sorted(s.pred_int),
            "step_count": len(s.steps),
            "clause_count": len(s.program.clauses),
        }
        for sid, s in store.items()
    ]


@app.post("/sessions")
def create_session(body: Mapping = Body(...)) -> dict:
    program0 = body.get("program0")
    if not isinstance(program0, str):
        raise HTTPException(status_code=422, detail="program0 must be program text")
    pred_int = body.get("pred_int", [])
    if not isinstance(pred_int, list):
        raise HTTPException(status_code=422, detail="pred_int must be a list")
    sigma = body.get("sigma")
    if sigma is not None and not isinstance(sigma, str):
        raise HTTPException(status_code=422, detail="sigma must be directive text")
    try:
        session = Session.from_text(program0, [str(p) for p in pred_int], sigma)
    except SessionError as e:
        raise HTTPException(status_code=422, detail=str(e))
    sid = store.add(session)
    return {"session_id": sid, "state": _state_payload(sid, session)}


@app.post("/sessions/import")
def import_session(body: Mapping = Body(...)) -> dict:
    """Recreate a session from its exported JSON by replaying its steps."""
    try:
        session = Session.load_obj(body)
    except SessionError as e:
        raise HTTPException(status_code=422, detail=str(e))
    except ReplayError as e:
        raise HTTPException(
            status_code=422, detail=f"replay failed at step {e.step_index}: {e.cause}"
        )
    sid = store.add(session)
    return {"session_id": sid, "state": _state_payload(sid, session)}


@app.get("/sessions/{sid}")
def get_state(sid: str) -> dict:
    return _state_payload(sid, store.get(sid))


@app.get("/sessions/{sid}/export")
def export_session(sid: str) -> dict:
    return store.get(sid).to_json_obj()


@app.get("/sessions/{sid}/clauses/{cid}/applicable")
def applicable(sid: str, cid: int) -> list[dict]:
    return store.get(sid).applicable(cid)


@app.post("/sessions/{sid}/steps")
def apply_step(sid: str, body: Mapping = Body(...)):
    session = store.get(sid)
    rule = body.get("rule")
    if not isinstance(rule, str):
        raise HTTPException(status_code=422, detail="a step needs a rule name")
    params = body.get("params", {})
    if not isinstance(params, Mapping):
        raise HTTPException(status_code=422, detail="params must be an object")
    lock = store.mutation_lock(sid)
    if not lock.acquire(blocking=False):
        return JSONResponse(
            status_code=409,
            content={"status": "busy", "detail": "another mutation is in flight"},
        )
    try:
        record = session.apply(rule, params)
    except StepParamError as e:
        raise HTTPException(status_code=422, detail=str(e))
    except Refusal as r:
        return {"ok": False, "refusal": r.to_payload()}
    finally:
        lock.release()
    return {
        "ok": True,
        "step": {
            "index": len(session.steps) - 1,
            "rule": record.rule,
            "params": record.params,
            "added": record.added,
            "removed": record.removed,
            "notes": record.notes,
        },
        "state": _state_payload(sid, session),
    }


@app.get("/sessions/{sid}/admissibility")
def admissibility(sid: str) -> dict:
    return _admissibility_payload(store.get(sid))


@app.post("/sessions/{sid}/oracle")
def oracle_run(sid: str, body: Mapping = Body(...)) -> dict:
    """Compare the perfect models of (initial program + introduced
    definitions) and the current program over a finite universe."""
    from .oracle import Oracle, Universe, models_agree, sorted_atoms

    session = store.get(sid)
    spec = body.get("universe")
    if not isinstance(spec, str):
        raise HTTPException(status_code=422, detail="a universe spec is required")
    try:
        universe = Universe.parse(spec)
    except ValueError as e:
        raise HTTPException(status_code=422, detail=f"bad universe spec: {e}")
    schema = session.schemas[-1]
    ref = Oracle(session.initial_with_defs(), schema, universe).perfect_model()
    cur = Oracle(session.program, schema, universe).perfect_model()
    if ref.status != "ok" or cur.status != "ok":
        bad = ref if ref.status != "ok" else cur
        return {
            "status": "overflow",
            "witness": format_atom(bad.witness) if bad.witness else None,
        }
    preds = sorted(session.pred_int) or sorted(
        {c.head.pred for _, c in session.program.clauses}
    )
    agree, only_ref, only_cur = models_agree(ref.atoms, cur.atoms, preds)
    keep = set(preds)
    return {
        "status": "ok",
        "agree": agree,
        "preds": preds,
        "initial_model": [
            format_atom(a)
            for a in sorted_atoms([x for x in ref.atoms if x.pred in keep], schema)
        ],
        "final_model": [
            format_atom(a)
            for a in sorted_atoms([x for x in cur.atoms if x.pred in keep], schema)
        ],
        "only_initial": [format_atom(a) for a in sorted_atoms(only_ref, schema)],
        "only_final": [format_atom(a) for a in sorted_atoms(only_cur, schema)],
    }


@app.get("/sessions/{sid}/diff")
def snapshot_diff(
    sid: str,
    frm: int | None = Query(default=None, alias="from"),
    to: int | None = Query(default=None),
) -> dict:
    """Clause diff between two snapshots (defaults: the last step's before
    and after)."""
    session = store.get(sid)
    last = len(session.snapshots) - 1
    if to is None:
        to = last
    if frm is None:
        frm = max(0, to - 1)
    for name, value in (("from", frm), ("to", to)):
        if not (0 <= value <= last):
            raise HTTPException(
                status_code=422,
                detail=f"{name} must lie in 0..{last}, got {value}",
            )
    out = diff_programs(session.snapshots[frm], session.snapshots[to])
    out.update({"from": frm, "to": to})
    return out


RULE_PARAM_SCHEMAS: list[dict] = [
    {
        "rule": "R1",
        "title": "introduce definition",
        "params": [
            {"name": "defs", "type": "clause_list", "required": True,
             "description": "definition clauses, one head atom, new predicate"},
            {"name": "sigma", "type": "sigma_directive", "required": False,
             "description": "stratification entry; synthesized when omitted"},
        ],
    },
    {
        "rule": "R2",
        "title": "eliminate definition",
        "params": [
            {"name": "pred", "type": "pred", "required": True,
             "description": "predicate whose clauses are removed"},
        ],
    },
    {
        "rule": "R3",
        "title": "unfold atom",
        "params": [
            {"name": "clause_id", "type": "clause_id", "required": True},
            {"name": "atom_position", "type": "body_index", "required": True,
             "description": "index of the positive body literal"},
        ],
    },
    {
        "rule": "R4",
        "title": "unfold negative literal",
        "params": [
            {"name": "clause_id", "type": "clause_id", "required": True},
            {"name": "literal_position", "type": "body_index", "required": True,
             "description": "index of the negative body literal"},
        ],
    },
    {
        "rule": "R5",
        "title": "fold",
        "params": [
            {"name": "clause_ids", "type": "clause_id_list", "required": True,
             "description": "one clause per definition clause, in order"},
            {"name": "def_pred", "type": "pred", "required": True},
            {"name": "theta", "type": "substitution", "required": False},
            {"name": "at", "type": "body_index", "required": False,
             "description": "start of the folded window in the first clause"},
        ],
    },
    {
        "rule": "R6",
        "title": "fold negative literal",
        "params": [
            {"name": "clause_id", "type": "clause_id", "required": True},
            {"name": "def_pred", "type": "pred", "required": True},
            {"name": "theta", "type": "substitution", "required": False},
            {"name": "at", "type": "body_index", "required": False},
        ],
    },
    {
        "rule": "R7",
        "title": "replacement law",
        "params": [
            {"name": "law", "type": "int", "required": True,
             "description": "law number 1-10"},
            {"name": "direction", "type": "direction", "required": False,
             "description": "LR (default) or RL"},
            {"name": "clause_ids", "type": "clause_id_list", "required": True},
            {"name": "law_params", "type": "object", "required": False,
             "description": "law-specific: at, clause, constraint, c1, c2, var, term, eq_index"},
        ],
    },
    {
        "rule": "R8",
        "title": "delete useless predicate",
        "params": [
            {"name": "pred", "type": "pred", "required": True},
        ],
    },
    {
        "rule": "R9",
        "title": "add constraint",
        "params": [
            {"name": "clause_id", "type": "clause_id", "required": True},
            {"name": "d", "type": "constraint", "required": True},
            {"name": "justification", "type": "justification", "required": True,
             "description": "{mode: oracle, universe: spec} or {mode: assumed, note: text}"},
        ],
    },
    {
        "rule": "R10",
        "title": "delete constraint",
        "params": [
            {"name": "clause_id", "type": "clause_id", "required": True},
            {"name": "d", "type": "constraint", "required": True},
            {"name": "justification", "type": "justification", "required": True},
        ],
    },
]
