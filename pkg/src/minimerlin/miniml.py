"""The bundled MiniML language: grammar asset, compiled tables, prelude."""
from __future__ import annotations

import functools
import importlib.resources

from .grammar import Grammar, load_grammar
from .tables import CompletionPlan, Tables, compile_grammar
from .typer import TypeEnv, prelude


def grammar_text() -> str:
    return (importlib.resources.files("minimerlin") / "assets/miniml.grammar").read_text(
        encoding="utf-8"
    )


@functools.cache
def grammar() -> Grammar:
    return load_grammar(grammar_text())


@functools.cache
def tables() -> tuple[Tables, CompletionPlan]:
    return compile_grammar(grammar())


@functools.cache
def prelude_env() -> TypeEnv:
    return prelude()
