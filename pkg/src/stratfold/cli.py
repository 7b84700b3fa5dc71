"""Command line front end.

Exit codes are a total function of the verdict class:
  0 positive verdict (stratified / full replay and admissible / model agreement)
  1 negative verdict (violations / refusal / models differ / overflow witness)
  2 no verdict (parse errors, bad schema, bad flags, unknown satisfiability)
  3 derive only: full replay whose sequence is not admissible
"""

from __future__ import annotations

import json
import sys

import click

from .clauses import format_atom, format_program
from .parser import ParseError, parse_constraints, parse_program, parse_sigma_directives
from .sigma import StratSchema, check_program
from .session import ReplayError, Session, SessionError
from .solver import SatResult, is_satisfiable, project
from .terms import Var, format_term


def _read(path: str) -> str:
    try:
        with open(path) as f:
            return f.read()
    except OSError as e:
        click.echo(f"error: {e}", err=True)
        sys.exit(2)


def _load_program(path: str, sigma_path: str | None):
    text = _read(path)
    try:
        program = parse_program(text)
    except ParseError as e:
        click.echo(f"error: {path}: {e}", err=True)
        sys.exit(2)
    schema = StratSchema.from_program(program)
    if sigma_path:
        try:
            decls = parse_sigma_directives(_read(sigma_path))
        except ParseError as e:
            click.echo(f"error: {sigma_path}: {e}", err=True)
            sys.exit(2)
        schema = StratSchema.from_decls(
            program.sigma_decls + tuple(decls), program.weights
        )
    return program, schema


def _parse_universe(spec: str):
    from .oracle import Universe

    try:
        return Universe.parse(spec)
    except ValueError as e:
        click.echo(f"error: bad universe spec: {e}", err=True)
        sys.exit(2)


def _pred_list(preds: str | None) -> list[str]:
    return [p.strip() for p in preds.split(",") if p.strip()] if preds else []


@click.group()
def main():
    """Transformation toolkit for stratified constraint logic programs."""


@main.command("check")
@click.argument("program_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--sigma", "sigma_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--json", "as_json", is_flag=True, help="emit the report as JSON")
def cmd_check(program_file, sigma_file, as_json):
    """Check local stratification of a program against its sigma schema."""
    program, schema = _load_program(program_file, sigma_file)
    report = check_program(program, schema)
    if as_json:
        click.echo(
            json.dumps(
                {
                    "status": report.status,
                    "violations": [
                        {"clause_id": i.clause_id, "lit_index": i.lit_index, "reason": i.reason}
                        for i in report.violations
                    ],
                    "unknowns": [
                        {"clause_id": i.clause_id, "lit_index": i.lit_index, "reason": i.reason}
                        for i in report.unknowns
                    ],
                },
                sort_keys=True,
            )
        )
    else:
        click.echo(f"status: {report.status}")
        for i in report.violations:
            click.echo(f"violation: clause {i.clause_id}: {i.reason}")
        for i in report.unknowns:
            click.echo(f"unknown: clause {i.clause_id}: {i.reason}")
    if report.status == "stratified":
        sys.exit(0)
    sys.exit(1 if report.status == "violations" else 2)


@main.command("derive")
@click.argument("p0_file", type=click.Path(exists=True, dir_okay=False))
@click.argument("script_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--sigma", "sigma_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--preds", help="comma-separated predicates of interest")
@click.option("--out", "out_file", type=click.Path(dir_okay=False), help="write the replayed session JSON here")
@click.option("--out-program", "out_program", type=click.Path(dir_okay=False), help="write the final program here")
@click.option("--json", "as_json", is_flag=True, help="emit the outcome as JSON")
def cmd_derive(p0_file, script_file, sigma_file, preds, out_file, out_program, as_json):
    """Replay a transformation script (a JSON steps array) against a program."""
    sigma_text = _read(sigma_file) if sigma_file else None
    try:
        session = Session.from_text(_read(p0_file), _pred_list(preds), sigma_text)
    except SessionError as e:
        click.echo(f"error: {e}", err=True)
        sys.exit(2)
    try:
        steps = json.loads(_read(script_file))
    except json.JSONDecodeError as e:
        click.echo(f"error: {script_file}: {e}", err=True)
        sys.exit(2)
    if not isinstance(steps, list):
        click.echo("error: a script file must hold a JSON array of steps", err=True)
        sys.exit(2)

    refusal = None
    try:
        session.replay_steps(steps)
    except ReplayError as e:
        refusal = e
    except SessionError as e:
        click.echo(f"error: {e}", err=True)
        sys.exit(2)

    final_text = format_program(session.program)
    if out_program:
        with open(out_program, "w") as f:
            f.write(final_text)
    if out_file:
        session.save(out_file)
    admissible = session.check_admissible()

    if as_json:
        payload = {
            "steps_applied": len(session.steps),
            "final_program": final_text,
            "admissible": admissible.ok,
        }
        if admissible.condition is not None:
            payload["condition"] = admissible.condition
            payload["detail"] = admissible.detail
        if refusal is not None:
            cause = refusal.cause
            payload["refusal"] = {
                "step_index": refusal.step_index,
                "message": str(cause),
            }
            if hasattr(cause, "to_payload"):
                payload["refusal"].update(cause.to_payload())
        click.echo(json.dumps(payload, sort_keys=True))
    else:
        if refusal is not None:
            click.echo(f"refused at step {refusal.step_index}: {refusal.cause}")
        click.echo(final_text, nl=False)
        if admissible.ok:
            click.echo("admissible: yes")
        else:
            click.echo(
                f"admissible: no (condition {admissible.condition}: {admissible.detail})"
            )
    if refusal is not None:
        sys.exit(1)
    sys.exit(0 if admissible.ok else 3)


@main.command("oracle")
@click.argument("program_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--sigma", "sigma_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--universe", default="int=-3..3", show_default=True)
@click.option("--preds", help="restrict the listing to these predicates")
@click.option("--json", "as_json", is_flag=True)
def cmd_oracle(program_file, sigma_file, universe, preds, as_json):
    """Print the perfect model over a finite universe, one atom per line."""
    from .oracle import Oracle, sorted_atoms

    program, schema = _load_program(program_file, sigma_file)
    u = _parse_universe(universe)
    result = Oracle(program, schema, u).perfect_model()
    if result.status == "overflow":
        witness = format_atom(result.witness) if result.witness else "?"
        if as_json:
            click.echo(json.dumps({"status": "overflow", "witness": witness}))
        else:
            click.echo(f"overflow: the search left the universe at {witness}")
        sys.exit(1)
    keep = set(_pred_list(preds))
    atoms = [a for a in result.atoms if not keep or a.pred in keep]
    lines = [format_atom(a) for a in sorted_atoms(atoms, schema)]
    if as_json:
        click.echo(json.dumps({"status": "ok", "atoms": lines}))
    else:
        for line in lines:
            click.echo(line)
    sys.exit(0)


@main.command("diff-models")
@click.argument("program_a", type=click.Path(exists=True, dir_okay=False))
@click.argument("program_b", type=click.Path(exists=True, dir_okay=False))
@click.option("--sigma", "sigma_file", type=click.Path(exists=True, dir_okay=False), help="extra sigma directives applied to both programs")
@click.option("--universe", default="int=-3..3", show_default=True)
@click.option("--preds", help="compare only these predicates (default: all shared head predicates)")
@click.option("--json", "as_json", is_flag=True)
def cmd_diff_models(program_a, program_b, sigma_file, universe, preds, as_json):
    """Compare the perfect models of two programs over a finite universe."""
    from .oracle import Oracle, models_agree, sorted_atoms

    pa, sa = _load_program(program_a, sigma_file)
    pb, sb = _load_program(program_b, sigma_file)
    u = _parse_universe(universe)
    ra = Oracle(pa, sa, u).perfect_model()
    rb = Oracle(pb, sb, u).perfect_model()
    if ra.status == "overflow" or rb.status == "overflow":
        bad = ra if ra.status == "overflow" else rb
        witness = format_atom(bad.witness) if bad.witness else "?"
        if as_json:
            click.echo(json.dumps({"status": "overflow", "witness": witness}))
        else:
            click.echo(f"overflow: the search left the universe at {witness}")
        sys.exit(2)
    keep = _pred_list(preds)
    if not keep:
        heads_a = {c.head.pred for _, c in pa.clauses}
        heads_b = {c.head.pred for _, c in pb.clauses}
        keep = sorted(heads_a & heads_b)
    agree, only_a, only_b = models_agree(ra.atoms, rb.atoms, keep)
    la = [format_atom(a) for a in sorted_atoms(only_a, sa)]
    lb = [format_atom(a) for a in sorted_atoms(only_b, sb)]
    if as_json:
        click.echo(
            json.dumps(
                {"status": "ok", "agree": agree, "only_a": la, "only_b": lb},
                sort_keys=True,
            )
        )
    else:
        if agree:
            click.echo("models agree")
        for line in la:
            click.echo(f"only in {program_a}: {line}")
        for line in lb:
            click.echo(f"only in {program_b}: {line}")
    sys.exit(0 if agree else 1)


@main.command("solve")
@click.argument("constraint_text")
@click.option("--theory", default="integers", show_default=True, type=click.Choice(["integers", "naturals", "rationals"]))
@click.option("--project", "project_onto", help="comma-separated variables to project onto")
@click.option("--json", "as_json", is_flag=True)
def cmd_solve(constraint_text, theory, project_onto, as_json):
    """Debug entry point for the constraint solver."""
    try:
        acs = parse_constraints(constraint_text)
    except ParseError as e:
        click.echo(f"error: {e}", err=True)
        sys.exit(2)
    verdict = is_satisfiable(acs, theory)
    payload: dict = {"satisfiable": verdict.value}
    if project_onto:
        from .clauses import format_ac, tidy_ac

        onto = {Var(n) for n in _pred_list(project_onto)}
        projected, exact = project(acs, onto, theory)
        payload["projection"] = [format_ac(tidy_ac(ac)) for ac in projected]
        payload["projection_exact"] = exact
    if as_json:
        click.echo(json.dumps(payload, sort_keys=True))
    else:
        click.echo(f"satisfiable: {payload['satisfiable']}")
        if "projection" in payload:
            tail = "" if payload["projection_exact"] else " (approximate)"
            click.echo("projection: " + (", ".join(payload["projection"]) or "true") + tail)
    if verdict == SatResult.UNKNOWN:
        sys.exit(2)
    sys.exit(0 if verdict == SatResult.SAT else 1)


@main.command("serve")
@click.option("--port", default=8077, show_default=True, type=int)
@click.option("--host", default="127.0.0.1", show_default=True)
def cmd_serve(port, host):
    """Run the JSON service that backs the browser workbench."""
    import uvicorn

    from .service import app

    uvicorn.run(app, host=host, port=port, log_level="warning")


if __name__ == "__main__":
    main()
