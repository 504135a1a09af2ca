"""First-order terms, clauses and the coverage-testing resolution engine."""
from .engine import (
    DEFAULT_BOUNDS,
    BuiltinError,
    KnowledgeBase,
    SolveBounds,
    Solutions,
    coverage_counts,
    covers,
    format_fact_base,
    parse_fact_base,
    provable,
    satisfiable_prefix,
    solve,
)
from .syntax import parse_clause, parse_literal, read_clauses
from .terms import (
    BUILTINS,
    Clause,
    Const,
    Literal,
    Str,
    Substitution,
    Term,
    Var,
    format_term,
    substitute,
    unify,
    walk,
)

__all__ = [
    "BUILTINS", "DEFAULT_BOUNDS", "BuiltinError", "Clause", "Const", "KnowledgeBase", "Literal",
    "SolveBounds", "Solutions", "Str", "Substitution", "Term", "Var", "coverage_counts", "covers",
    "format_fact_base", "format_term", "parse_clause", "parse_fact_base", "parse_literal", "provable",
    "read_clauses", "satisfiable_prefix", "solve", "substitute", "unify", "walk",
]
