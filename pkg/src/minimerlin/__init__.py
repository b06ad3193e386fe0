"""Grammar-driven incremental LR frontend toolkit with cost-guided error
recovery, demonstrated by a MiniML language server."""

import sys as _sys

# Tree walks (typing, lowering of deeply nested expressions) recurse with the
# syntax; the CPython default of 1000 frames is too shallow for real buffers.
if _sys.getrecursionlimit() < 50_000:
    _sys.setrecursionlimit(50_000)

from .analysis import Analysis, BufferState, build
from .grammar import Grammar, check_grammar, load_grammar
from .lexer import lex_all, lex_step, relex
from .parser import parse_prefix, resume, start, step
from .recovery import complete, recover
from .tables import build_automaton, compile_grammar, compute_completion_costs, resolve_conflicts
from .typer import check_buffer, infer_phrase, missing_cases, prelude, unify

__all__ = [
    "Analysis",
    "BufferState",
    "Grammar",
    "build",
    "build_automaton",
    "check_buffer",
    "check_grammar",
    "compile_grammar",
    "complete",
    "compute_completion_costs",
    "infer_phrase",
    "lex_all",
    "lex_step",
    "load_grammar",
    "missing_cases",
    "parse_prefix",
    "prelude",
    "recover",
    "relex",
    "resolve_conflicts",
    "resume",
    "start",
    "step",
    "unify",
]
