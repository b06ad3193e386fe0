"""Table-driven incremental LR runtime.

A parser environment is an immutable value: a state number plus a
persistent stack of elements, each carrying the concrete tree built so
far.  `step` consumes one token and returns a checkpoint — another
environment, a finished tree, or a syntax error value — without touching
its input, so checkpoints can be cached per token index and parsing can
restart from the last one before an edit.  Stacks share structure, which
keeps the memory cost of caching every checkpoint near that of a plain
parse.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional, Union

from .lexer import Token
from .positions import Position, Range
from .tables import Accept, END_MARKER, Reduce, Shift, Tables


@dataclass(frozen=True)
class ConcreteTree:
    """Full-coverage parse tree node.  Terminal leaves carry the token
    payload; nonterminal nodes carry the producing rule.  Synthesized nodes
    were invented by recovery and have zero-width ranges."""

    symbol: str
    children: tuple["ConcreteTree", ...]
    payload: Optional[Union[int, str]]
    range: Range
    synthesized: bool = False
    production: Optional[int] = None

    def leaves(self) -> Iterable["ConcreteTree"]:
        if not self.children:
            yield self
        else:
            for child in self.children:
                yield from child.leaves()

    def pretty(self, indent: int = 0) -> str:
        mark = " ⟨synth⟩" if self.synthesized else ""
        payload = "" if self.payload is None else f" {self.payload!r}"
        line = "  " * indent + f"{self.symbol}{payload}{mark}"
        return "\n".join([line] + [c.pretty(indent + 1) for c in self.children])


@dataclass(frozen=True)
class StackElement:
    symbol: str
    value: ConcreteTree
    state_on_top: int
    range: Range


@dataclass(frozen=True)
class _Frame:
    element: StackElement
    below: Optional["_Frame"]
    depth: int


@dataclass(frozen=True)
class ParserEnv:
    tables: Tables
    current_state: int
    top: Optional[_Frame]
    initial_state: int

    def depth(self) -> int:
        return self.top.depth if self.top else 0


@dataclass(frozen=True)
class Intermediate:
    env: ParserEnv


@dataclass(frozen=True)
class Result:
    tree: ConcreteTree


@dataclass(frozen=True)
class SyntaxErrorPoint:
    position: Position
    state: int
    expected: tuple[str, ...]


Checkpoint = Union[Intermediate, Result, SyntaxErrorPoint]


class UnknownEntryError(ValueError):
    pass


def start(t: Tables, entry: str) -> Checkpoint:
    """Fresh checkpoint for one of the grammar's start symbols."""
    if entry not in t.initial:
        raise UnknownEntryError(f"unknown entry symbol {entry!r}")
    state = t.initial[entry]
    return Intermediate(ParserEnv(t, state, None, state))


def _push(env: ParserEnv, symbol: str, value: ConcreteTree, state: int) -> ParserEnv:
    frame = _Frame(
        StackElement(symbol, value, state, value.range),
        env.top,
        (env.top.depth if env.top else 0) + 1,
    )
    return ParserEnv(env.tables, state, frame, env.initial_state)


def apply_reduce(env: ParserEnv, production: int, anchor: Position) -> ParserEnv:
    """Pop one rule's worth of elements, build its tree node, follow goto.
    Empty rules produce zero-width nodes anchored at the current position."""
    prod = env.tables.productions[production]
    frame = env.top
    children: list[ConcreteTree] = []
    for _ in prod.rhs:
        children.append(frame.element.value)
        frame = frame.below
    children.reverse()
    below_state = frame.element.state_on_top if frame else env.initial_state
    target = env.tables.goto[below_state][prod.lhs]
    if children:
        rng = (children[0].range[0], children[-1].range[1])
    else:
        rng = (anchor, anchor)
    node = ConcreteTree(prod.lhs, tuple(children), None, rng, False, production)
    new_frame = _Frame(
        StackElement(prod.lhs, node, target, rng),
        frame,
        (frame.depth if frame else 0) + 1,
    )
    return ParserEnv(env.tables, target, new_frame, env.initial_state)


def step(env: ParserEnv, tok: Token) -> Checkpoint:
    """Feed one token: perform every reduction the lookahead enables, then
    shift it.  Pure; the input environment stays valid."""
    while True:
        act = env.tables.action.get(env.current_state, {}).get(tok.kind)
        if act is None:
            return SyntaxErrorPoint(
                tok.start, env.current_state, env.tables.expected_terminals(env.current_state)
            )
        if isinstance(act, Shift):
            leaf = ConcreteTree(tok.kind, (), tok.payload, (tok.start, tok.end))
            return Intermediate(_push(env, tok.kind, leaf, act.state))
        if isinstance(act, Reduce):
            env = apply_reduce(env, act.production, tok.start)
            continue
        assert isinstance(act, Accept)
        return Result(env.top.element.value)


def end_token(position: Position) -> Token:
    return Token(END_MARKER, None, position, position)


@dataclass
class ParseCache:
    """Checkpoints of one parse run, indexed by how many tokens were fed.
    Entry `i` equals the checkpoint obtained by feeding the first `i` tokens
    from scratch; the final (non-Intermediate) checkpoint is kept alongside."""

    tables: Tables
    entry: str
    entries: dict[int, Intermediate] = field(default_factory=dict)
    final: Optional[Checkpoint] = None
    token_count: int = 0
    error_index: Optional[int] = None
    refed_tokens: int = 0  # informational: work done by the producing call

    def env_before(self, index: int) -> tuple[int, ParserEnv]:
        """Greatest cached index <= index, with its environment."""
        best = max((i for i in self.entries if i <= index), default=0)
        if best == 0:
            cp = start(self.tables, self.entry)
            return 0, cp.env
        return best, self.entries[best].env


def parse_prefix(t: Tables, tokens: list[Token], entry: Optional[str] = None) -> tuple[Checkpoint, ParseCache]:
    """Fold `step` over the tokens, caching every intermediate checkpoint;
    stops at the first syntax error or accepted result."""
    entry = entry or t.grammar.start_symbols[0]
    cache = ParseCache(t, entry, token_count=len(tokens))
    cp = start(t, entry)
    for i, tok in enumerate(tokens):
        assert isinstance(cp, Intermediate)
        nxt = step(cp.env, tok)
        cache.refed_tokens += 1
        if isinstance(nxt, Intermediate):
            cache.entries[i + 1] = nxt
            cp = nxt
            continue
        if isinstance(nxt, SyntaxErrorPoint):
            cache.error_index = i
        cache.final = nxt
        return nxt, cache
    cache.final = cp
    return cp, cache


def resume(
    cache: ParseCache, new_tokens: list[Token], first_changed_index: int
) -> tuple[Checkpoint, ParseCache]:
    """Reparse after an edit, restarting from the greatest checkpoint at or
    before the first changed token.  Observationally equal to parse_prefix
    from scratch on `new_tokens`."""
    if (
        first_changed_index >= len(new_tokens)
        and cache.token_count == len(new_tokens)
        and cache.final is not None
    ):
        cache.refed_tokens = 0
        return cache.final, cache

    base, env = cache.env_before(min(first_changed_index, len(new_tokens)))
    new_cache = ParseCache(
        cache.tables,
        cache.entry,
        entries={i: cp for i, cp in cache.entries.items() if i <= base},
        token_count=len(new_tokens),
    )
    cp: Checkpoint = Intermediate(env)
    for i in range(base, len(new_tokens)):
        nxt = step(cp.env, new_tokens[i])
        new_cache.refed_tokens += 1
        if isinstance(nxt, Intermediate):
            new_cache.entries[i + 1] = nxt
            cp = nxt
            continue
        if isinstance(nxt, SyntaxErrorPoint):
            new_cache.error_index = i
        new_cache.final = nxt
        return nxt, new_cache
    new_cache.final = cp
    return cp, new_cache


def inspect(env: ParserEnv) -> tuple[Optional[StackElement], int]:
    """Read-only view of the stack top and the automaton state."""
    return (env.top.element if env.top else None, env.current_state)


def pop(env: ParserEnv) -> Optional[ParserEnv]:
    """Environment with the top element removed; None on an empty stack.
    The input environment is unaffected."""
    if env.top is None:
        return None
    below = env.top.below
    state = below.element.state_on_top if below else env.initial_state
    return ParserEnv(env.tables, state, below, env.initial_state)


def shared_frames(a: ParserEnv, b: ParserEnv) -> int:
    """Test hook: how many stack frames the two environments share by
    identity (not value equality)."""
    seen: set[int] = set()
    frame = a.top
    while frame is not None:
        seen.add(id(frame))
        frame = frame.below
    count = 0
    frame = b.top
    while frame is not None:
        if id(frame) in seen:
            count += 1
        frame = frame.below
    return count
