"""Unfold/fold transformation engine for constraint logic programs with
negation, with a local-stratification checker, a ground-semantics oracle,
replayable derivation sessions, and a CLI/service front end."""

__all__ = ["terms", "clauses", "parser", "solver", "sigma", "rules", "oracle", "session"]
