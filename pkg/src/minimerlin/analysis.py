"""One buffer snapshot, analyzed: the pure product every query reads.

The pipeline is lex -> parse -> recover -> lower -> typecheck.  Passing the
previous buffer state makes each stage incremental (relex from the last
token boundary before the edit, reparse from the last checkpoint, retype
only phrases whose text changed), but the result is byte-for-byte the
analysis a cold run produces; caches buy time, never different answers.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from . import miniml
from .ast import Ast, lower
from .lexer import Edit, LexResult, RelexStats, Token, lex_all, relex
from .parser import (
    Checkpoint,
    ConcreteTree,
    Intermediate,
    ParseCache,
    Result,
    SyntaxErrorPoint,
    end_token,
    parse_prefix,
    resume,
)
from .positions import Diagnostic, LineTable, Position
from .recovery import RecoveryResult, recover
from .typer import (
    EMPTY_PHRASE_CACHE,
    PhraseCache,
    TypeEnv,
    TypedTree,
    check_buffer,
    global_env,
)


@dataclass
class AnalysisStats:
    tokens_relexed: int = 0
    tokens_reused: int = 0
    tokens_refed: int = 0
    phrases_retyped: int = 0


@dataclass
class Analysis:
    buffer: str
    tokens: tuple[Token, ...]
    tree: ConcreteTree
    ast: Ast
    typed: TypedTree
    diagnostics: tuple[Diagnostic, ...]
    env_before: tuple[TypeEnv, ...]  # per toplevel phrase
    global_env: TypeEnv
    prelude: TypeEnv
    line_table: LineTable
    stats: AnalysisStats


@dataclass
class BufferState:
    """Performance-only memory of one session's last analysis."""

    buffer: str
    lex: LexResult
    fed_tokens: list[Token]
    parse_cache: ParseCache
    phrase_cache: PhraseCache
    analysis: Analysis


def _text_edit(old: str, new: str) -> Edit:
    p = 0
    limit = min(len(old), len(new))
    while p < limit and old[p] == new[p]:
        p += 1
    s = 0
    while s < limit - p and old[len(old) - 1 - s] == new[len(new) - 1 - s]:
        s += 1
    return Edit(p, len(old) - p - s, len(new) - p - s)


def _first_changed(old: list[Token], new: list[Token]) -> int:
    for i, (a, b) in enumerate(zip(old, new)):
        if (a.kind, a.payload, a.start.offset, a.end.offset) != (
            b.kind,
            b.payload,
            b.start.offset,
            b.end.offset,
        ):
            return i
    return min(len(old), len(new))


def build(
    buffer: str,
    previous: Optional[BufferState] = None,
    prelude_env: Optional[TypeEnv] = None,
) -> tuple[Analysis, BufferState]:
    """Analyze one buffer.  `previous` only affects how much work is redone."""
    if previous is not None and previous.buffer == buffer:
        return previous.analysis, previous

    tables, plan = miniml.tables()
    prelude_env = prelude_env or miniml.prelude_env()
    stats = AnalysisStats()
    line_table = LineTable(buffer)
    eof = line_table.position(len(buffer))

    if previous is not None:
        lex_result, relex_stats = relex(previous.lex, buffer, _text_edit(previous.buffer, buffer))
        stats.tokens_relexed = relex_stats.relexed
        stats.tokens_reused = relex_stats.reused
    else:
        lex_result = lex_all(buffer)
        stats.tokens_relexed = len(lex_result.tokens)

    fed = list(lex_result.tokens) + [end_token(eof)]
    if previous is not None:
        checkpoint, parse_cache = resume(
            previous.parse_cache, fed, _first_changed(previous.fed_tokens, fed)
        )
    else:
        checkpoint, parse_cache = parse_prefix(tables, fed, "program")
    stats.tokens_refed = parse_cache.refed_tokens

    parse_diags: list[Diagnostic] = []
    if isinstance(checkpoint, Result):
        tree = checkpoint.tree
    else:
        assert isinstance(checkpoint, SyntaxErrorPoint), checkpoint
        error_index = parse_cache.error_index
        _, env = parse_cache.env_before(error_index)
        rest = [tok for tok in lex_result.tokens[error_index:]]
        outcome: RecoveryResult = recover(env, rest, plan, initial_error=checkpoint, eof=eof)
        tree = outcome.tree
        parse_diags = outcome.diagnostics

    ast = lower(tree, buffer)
    old_phrases = previous.phrase_cache if previous is not None else EMPTY_PHRASE_CACHE
    typed, type_diags, phrase_cache = check_buffer(prelude_env, ast, old_phrases)
    stats.phrases_retyped = phrase_cache.retyped

    diagnostics = tuple(
        sorted(
            list(lex_result.diagnostics) + parse_diags + type_diags,
            key=lambda d: d.sort_key(),
        )
    )
    analysis = Analysis(
        buffer=buffer,
        tokens=lex_result.tokens,
        tree=tree,
        ast=ast,
        typed=typed,
        diagnostics=diagnostics,
        env_before=tuple(e.env_before for e in phrase_cache.entries),
        global_env=global_env(prelude_env, phrase_cache),
        prelude=prelude_env,
        line_table=line_table,
        stats=stats,
    )
    state = BufferState(buffer, lex_result, fed, parse_cache, phrase_cache, analysis)
    return analysis, state
