"""Command line entry points.

    minimerlin single <cmd> -filename F [-position L:C] [...]   buffer on stdin
    minimerlin daemon --channel PATH
    minimerlin compile-grammar <file> [-o OUT]
    minimerlin parse <file> [--grammar DUMP] [--entry SYMBOL]
    minimerlin recover <file>

`parse` and `recover` are debug aids over the bundled MiniML frontend;
with --grammar, `parse` reads whitespace-separated token names (optionally
NAME:payload) instead of MiniML source.
"""
from __future__ import annotations

import argparse
import sys

from . import miniml
from .grammar import GrammarError, check_grammar, load_grammar
from .lexer import Token, lex_all
from .parser import Result, SyntaxErrorPoint, end_token, parse_prefix, start
from .positions import LineTable, Position
from .recovery import Consumed, Dropped, Synthesized, recover
from .server import UsageError, run_daemon, run_single
from .tables import (
    ConflictReport,
    TableConflictError,
    build_automaton,
    compile_grammar,
    compute_completion_costs,
    dump_tables,
    load_tables,
    resolve_conflicts,
)


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = argparse.ArgumentParser(prog="minimerlin")
    sub = parser.add_subparsers(dest="mode", required=True)

    p_single = sub.add_parser("single", help="answer one request, no cache")
    p_single.add_argument("rest", nargs=argparse.REMAINDER)

    p_daemon = sub.add_parser("daemon", help="serve requests over a local channel")
    p_daemon.add_argument("--channel", required=True)

    p_compile = sub.add_parser("compile-grammar", help="build tables from a grammar file")
    p_compile.add_argument("file")
    p_compile.add_argument("-o", dest="out")

    p_parse = sub.add_parser("parse", help="dump the concrete parse tree (debug)")
    p_parse.add_argument("file")
    p_parse.add_argument("--grammar", dest="grammar")
    p_parse.add_argument("--entry", dest="entry")

    p_recover = sub.add_parser("recover", help="show the recovered tree and trace (debug)")
    p_recover.add_argument("file")

    ns = parser.parse_args(argv)
    try:
        if ns.mode == "single":
            out, code = run_single(ns.rest, sys.stdin.read())
            sys.stdout.write(out)
            return code
        if ns.mode == "daemon":
            run_daemon(ns.channel)
            return 0
        if ns.mode == "compile-grammar":
            return _compile_grammar(ns.file, ns.out)
        if ns.mode == "parse":
            return _parse(ns.file, ns.grammar, ns.entry)
        assert ns.mode == "recover"
        return _recover(ns.file)
    except UsageError as exc:
        print(f"minimerlin: {exc}", file=sys.stderr)
        return 2
    except GrammarError as exc:
        print(f"minimerlin: grammar error: {exc}", file=sys.stderr)
        return 1


def _compile_grammar(path: str, out: str | None) -> int:
    with open(path, "r", encoding="utf-8") as fh:
        g = load_grammar(fh.read())
    for issue in check_grammar(g):
        print(f"{issue.kind}: {issue.message}", file=sys.stderr)
    automaton = build_automaton(g)
    resolved = resolve_conflicts(automaton, g)
    if isinstance(resolved, ConflictReport):
        print(resolved, file=sys.stderr)
        return 1
    plan = compute_completion_costs(resolved, g)
    if plan.infinite_states:
        states = ", ".join(map(str, plan.infinite_states))
        print(f"warning: states with no finite completion: {states}", file=sys.stderr)
    target = out or path + ".mmtb"
    with open(target, "wb") as fh:
        fh.write(dump_tables(resolved, plan))
    print(f"wrote {target} ({len(automaton.states)} states)")
    return 0


def _read(path: str) -> str:
    with open(path, "r", encoding="utf-8") as fh:
        return fh.read()


def _named_tokens(text: str, grammar) -> list[Token]:
    toks = []
    pos = Position(1, 0, 0)
    for i, word in enumerate(text.split()):
        name, _, payload_text = word.partition(":")
        term = grammar.terminals.get(name)
        if term is None:
            raise UsageError(f"unknown token name {name!r}")
        payload = None
        if term.payload_kind == "integer":
            payload = int(payload_text) if payload_text else 0
        elif term.payload_kind == "text":
            payload = payload_text
        end = Position(1, pos.col + 1, pos.offset + 1)
        toks.append(Token(name, payload, pos, end))
        pos = end
    return toks


def _parse(path: str, grammar_dump: str | None, entry: str | None) -> int:
    if grammar_dump:
        with open(grammar_dump, "rb") as fh:
            tables, _plan = load_tables(fh.read())
        toks = _named_tokens(_read(path), tables.grammar)
        eof = toks[-1].end if toks else Position(1, 0, 0)
    else:
        tables, _plan = miniml.tables()
        lx = lex_all(_read(path))
        for d in lx.diagnostics:
            print(f"lex {d.start}: {d.message}", file=sys.stderr)
        toks = list(lx.tokens)
        eof = LineTable(lx.buffer).position(len(lx.buffer))
    cp, _cache = parse_prefix(
        tables, toks + [end_token(eof)], entry or tables.grammar.start_symbols[0]
    )
    if isinstance(cp, Result):
        print(cp.tree.pretty())
        return 0
    assert isinstance(cp, SyntaxErrorPoint)
    expected = ", ".join(cp.expected)
    print(f"syntax error at {cp.position} (expected one of: {expected})", file=sys.stderr)
    return 1


def _recover(path: str) -> int:
    tables, plan = miniml.tables()
    text = _read(path)
    lx = lex_all(text)
    eof = LineTable(text).position(len(text))
    cp = start(tables, "program")
    outcome = recover(cp.env, list(lx.tokens), plan, eof=eof)
    for step_ in outcome.trace:
        if isinstance(step_, Synthesized):
            print(f"synthesize {step_.symbol} (cost {step_.cost})")
        elif isinstance(step_, Consumed):
            print(f"consume    {step_.token.kind} at {step_.token.start}")
        else:
            assert isinstance(step_, Dropped)
            print(f"drop       {step_.token.kind} at {step_.token.start}")
    print(f"total cost {outcome.total_cost}")
    for d in outcome.diagnostics:
        print(f"diagnostic {d.start}: {d.message}")
    print(outcome.tree.pretty())
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
