"""Derivation sessions: an initial program, a sequence of rule applications,
each snapshot kept, with replay, admissibility audit and model comparison.

A session is the unit of persistence. Its JSON form stores the initial
program verbatim, the initial sigma entries, the predicates of interest and
the step list (rule name plus parameters); everything else, including the
definition ledger and all snapshots, is recomputed by deterministic replay.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .clauses import (
    Clause,
    Program,
    format_atom,
    format_program,
)
from .parser import ParseError, parse_program, parse_sigma_directives
from .sigma import SigmaEntry, StratSchema, check_clause, check_program
from .rules import (
    Refusal,
    RuleResult,
    StepParamError,
    apply_rule,
    applicable_rules,
)

SESSION_VERSION = 1


class SessionError(ValueError):
    """The session payload itself is unusable (bad program, bad schema)."""


class ReplayError(Exception):
    """A stored step failed during replay; step_index is 0-based."""

    def __init__(self, step_index: int, cause: Exception):
        super().__init__(f"step {step_index} failed: {cause}")
        self.step_index = step_index
        self.cause = cause


@dataclass
class DefEntry:
    """Ledger row for one clause introduced by a definition step."""

    pred: str
    clause: Clause
    program_clause_id: int
    introduced_at: int
    positively_unfolded_at: int | None = None
    used_for_folding_at: list[int] = field(default_factory=list)


@dataclass
class StepRecord:
    rule: str
    params: dict
    added: list[int]
    removed: list[int]
    notes: list[str]


@dataclass(frozen=True)
class AdmissibilityReport:
    ok: bool
    condition: int | None = None
    detail: str | None = None


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


class Session:
    def __init__(
        self,
        program0: Program,
        pred_int: Iterable[str],
        schema: StratSchema | None = None,
        source_text: str | None = None,
    ):
        schema = schema if schema is not None else StratSchema.from_program(program0)
        report = check_program(program0, schema)
        if not report.ok:
            issue = (report.violations or report.unknowns)[0]
            kind = "violates" if report.violations else "cannot be shown to satisfy"
            raise SessionError(
                f"the initial program {kind} the stratification conditions"
                f" (clause {issue.clause_id}: {issue.reason})"
            )
        self.program0 = program0
        self.program0_text = (
            source_text if source_text is not None else format_program(program0)
        )
        self.pred_int = set(pred_int)
        self.snapshots: list[Program] = [program0]
        self.schemas: list[StratSchema] = [schema]
        self.steps: list[StepRecord] = []
        self.defs: list[DefEntry] = []
        self.seen_preds: set[str] = set(program0.preds())
        self.theory = program0.theory
        self.p0_preds: set[str] = set(program0.preds())

    # --- the view the rules consume ----------------------------------------------

    @property
    def program(self) -> Program:
        return self.snapshots[-1]

    @property
    def schema(self) -> StratSchema:
        return self.schemas[-1]

    # --- stepping ------------------------------------------------------------------

    def apply(self, rule: str, params: Mapping) -> StepRecord:
        result = apply_rule(self, rule, dict(params))
        idx = len(self.steps)
        notes = list(result.notes)

        # every added clause must still be provably stratified; the rules
        # refuse ahead of time, so a violation here is an internal error
        for cid in result.added:
            cl = result.program.by_id(cid)
            v, u = check_clause(cl, result.schema, self.theory, cid)
            if v:
                raise RuntimeError(
                    f"internal error: {rule} produced a stratification violation"
                    f" in clause {cid}: {v[0].reason}"
                )
            for issue in u:
                notes.append(f"clause {cid} not shown stratified: {issue.reason}")

        for cid, cl in result.defs_added:
            self.defs.append(DefEntry(cl.head.pred, cl, cid, idx))
            self.seen_preds.add(cl.head.pred)
        for _, cl in result.program.clauses:
            self.seen_preds.add(cl.head.pred)
            for lit in cl.body:
                self.seen_preds.add(lit.atom.pred)
        if result.unfolded_clause_id is not None:
            for e in self.defs:
                if (
                    e.program_clause_id == result.unfolded_clause_id
                    and e.positively_unfolded_at is None
                ):
                    e.positively_unfolded_at = idx
        if result.def_pred_used is not None:
            for e in self.defs:
                if e.pred == result.def_pred_used:
                    e.used_for_folding_at.append(idx)

        rec = StepRecord(result.rule, result.params, result.added, result.removed, notes)
        self.snapshots.append(result.program)
        self.schemas.append(result.schema)
        self.steps.append(rec)
        return rec

    def applicable(self, clause_id: int) -> list[dict]:
        return applicable_rules(self, clause_id)

    # --- admissibility ---------------------------------------------------------------

    def check_admissible(self) -> AdmissibilityReport:
        # (1) every clause used by a positive fold was positively unfolded
        # at an earlier step
        for e in self.defs:
            for k in e.used_for_folding_at:
                if self.steps[k].rule != "R5":
                    continue  # negative folding carries no such requirement
                if e.positively_unfolded_at is None or e.positively_unfolded_at >= k:
                    return AdmissibilityReport(
                        False,
                        1,
                        f"step {k} folds with definition clause"
                        f" {e.program_clause_id} of {e.pred}, which no earlier"
                        " step positively unfolded",
                    )
        # (2) definition eliminations form a suffix of the sequence
        first_r2: int | None = None
        for i, st in enumerate(self.steps):
            if st.rule == "R2":
                if first_r2 is None:
                    first_r2 = i
            elif first_r2 is not None:
                return AdmissibilityReport(
                    False,
                    2,
                    f"step {i} ({st.rule}) follows the definition elimination"
                    f" at step {first_r2}",
                )
        return AdmissibilityReport(True)

    # --- model comparison --------------------------------------------------------------

    def initial_with_defs(self) -> Program:
        """The reference program: the initial one plus every introduced
        definition clause."""
        prog, _ = self.program0.add_clauses([e.clause for e in self.defs])
        return prog

    def oracle_diff(self, universe=None) -> dict:
        from .oracle import Oracle, models_agree, sorted_atoms

        schema = self.schemas[-1]
        ref = Oracle(self.initial_with_defs(), schema, universe).perfect_model()
        cur = Oracle(self.program, schema, universe).perfect_model()
        if ref.status != "ok" or cur.status != "ok":
            bad = ref if ref.status != "ok" else cur
            return {
                "status": "overflow",
                "witness": format_atom(bad.witness) if bad.witness else None,
            }
        agree, only_ref, only_cur = models_agree(
            ref.atoms, cur.atoms, self.pred_int
        )
        return {
            "status": "ok",
            "agree": agree,
            "only_initial": [format_atom(a) for a in sorted_atoms(only_ref, schema)],
            "only_final": [format_atom(a) for a in sorted_atoms(only_cur, schema)],
        }

    # --- persistence --------------------------------------------------------------------

    def _sigma_json(self) -> list[dict]:
        schema = self.schemas[0]
        arities: dict[str, int] = {}
        for _, cl in self.program0.clauses:
            arities[cl.head.pred] = len(cl.head.args)
            for lit in cl.body:
                arities.setdefault(lit.atom.pred, len(lit.atom.args))
        out = []
        for pred in sorted(schema.entries):
            e = schema.entries[pred]
            out.append(
                {
                    "pred": pred,
                    "arity": arities.get(pred, 0),
                    "level": e.level,
                    "expr": e.expr_text(),
                }
            )
        return out

    def to_json_obj(self) -> dict:
        return {
            "version": SESSION_VERSION,
            "program0": self.program0_text,
            "sigma": self._sigma_json(),
            "pred_int": sorted(self.pred_int),
            "steps": [{"rule": s.rule, "params": s.params} for s in self.steps],
        }

    def to_json(self) -> str:
        return canonical_json(self.to_json_obj())

    def save(self, path: str) -> None:
        with open(path, "w") as f:
            f.write(self.to_json() + "\n")

    @classmethod
    def from_text(
        cls,
        program0_text: str,
        pred_int: Iterable[str],
        sigma_text: str | None = None,
    ) -> "Session":
        try:
            program0 = parse_program(program0_text)
        except ParseError as e:
            raise SessionError(f"initial program does not parse: {e}")
        schema = StratSchema.from_program(program0)
        if sigma_text:
            try:
                extra = parse_sigma_directives(sigma_text)
            except ParseError as e:
                raise SessionError(f"sigma directives do not parse: {e}")
            schema = StratSchema.from_decls(
                program0.sigma_decls + tuple(extra), program0.weights
            )
        return cls(program0, pred_int, schema, source_text=program0_text)

    @classmethod
    def load_obj(cls, obj, replay: bool = True) -> "Session":
        if not isinstance(obj, Mapping):
            raise SessionError("session payload must be an object")
        if obj.get("version") != SESSION_VERSION:
            raise SessionError(f"unsupported session version {obj.get('version')!r}")
        for key in ("program0", "sigma", "pred_int", "steps"):
            if key not in obj:
                raise SessionError(f"session payload lacks the {key} field")
        try:
            program0 = parse_program(obj["program0"])
        except ParseError as e:
            raise SessionError(f"initial program does not parse: {e}")
        schema = StratSchema.from_program(program0)
        for entry in obj["sigma"]:
            try:
                line = (
                    f"#sigma {entry['pred']}/{entry['arity']} ="
                    f" <{entry['level']}, {entry['expr']}>."
                )
            except (TypeError, KeyError) as e:
                raise SessionError(f"bad sigma entry {entry!r}: {e}")
            try:
                (decl,) = parse_sigma_directives(line)
            except (ParseError, ValueError) as e:
                raise SessionError(f"bad sigma entry {entry!r}: {e}")
            schema = schema.with_entry(
                decl.pred, SigmaEntry(decl.level, decl.coeffs, decl.const)
            )
        if not isinstance(obj["pred_int"], list):
            raise SessionError("pred_int must be a list of predicate names")
        session = cls(
            program0,
            [str(p) for p in obj["pred_int"]],
            schema,
            source_text=str(obj["program0"]),
        )
        if not isinstance(obj["steps"], list):
            raise SessionError("steps must be a list")
        if replay:
            session.replay_steps(obj["steps"])
        return session

    def replay_steps(self, steps: Sequence[Mapping]) -> None:
        base = len(self.steps)
        for i, st in enumerate(steps):
            if not isinstance(st, Mapping) or "rule" not in st:
                raise SessionError(f"step {base + i} is not a rule application object")
            try:
                self.apply(str(st["rule"]), st.get("params", {}))
            except (Refusal, StepParamError) as e:
                raise ReplayError(base + i, e)

    @classmethod
    def load(cls, path: str, replay: bool = True) -> "Session":
        with open(path) as f:
            try:
                obj = json.load(f)
            except json.JSONDecodeError as e:
                raise SessionError(f"session file is not JSON: {e}")
        return cls.load_obj(obj, replay=replay)


def diff_programs(p1: Program, p2: Program) -> dict:
    """Clause-level diff up to variable renaming and constraint orientation.

    Returns removed (only in p1), added (only in p2) and kept clause texts;
    multiset semantics, each text drawn from the program that holds it."""
    from collections import Counter

    from .clauses import clause_key, format_clause

    pool1: dict[str, list[str]] = {}
    pool2: dict[str, list[str]] = {}
    for _, c in p1.clauses:
        pool1.setdefault(clause_key(c), []).append(format_clause(c))
    for _, c in p2.clauses:
        pool2.setdefault(clause_key(c), []).append(format_clause(c))
    c1 = Counter({k: len(v) for k, v in pool1.items()})
    c2 = Counter({k: len(v) for k, v in pool2.items()})

    def take(pool: dict[str, list[str]], counts: Counter) -> list[str]:
        out = []
        for k in sorted(counts):
            out.extend(pool[k][: counts[k]])
        return sorted(out)

    return {
        "removed": take(pool1, c1 - c2),
        "added": take(pool2, c2 - c1),
        "kept": take(pool1, c1 & c2),
    }
