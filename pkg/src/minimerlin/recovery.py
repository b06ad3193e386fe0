"""Total parsing: turn any token stream into a complete tree plus diagnostics.

Two cooperating mechanisms:

* `complete` drives a parser environment to the accepting configuration by
  repeatedly taking the cheapest way out of the current state: finish the
  state's best item, inventing the missing symbols (terminals get their
  declared recovery payload, recoverable nonterminals become placeholder
  nodes, others are built through their cheapest production) and reducing
  when an item is done.

* `recover` interleaves completion with the real input after a syntax
  error.  The choice between inventing and consuming is guided by
  indentation: while the element on top of the stack starts in a column
  further right than the incoming token, the token likely belongs to some
  construct outside the one being parsed, so closing steps are taken
  first.  A token the current item is ready to absorb is always preferred
  over inventing it; a token that fits nowhere is dropped with a
  diagnostic.  Consumed input is never revisited.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Union

from .grammar import Cost, INFINITY
from .lexer import Token
from .parser import (
    Checkpoint,
    ConcreteTree,
    Intermediate,
    ParserEnv,
    Result,
    SyntaxErrorPoint,
    apply_reduce,
    step,
)
from .positions import Diagnostic, Position
from .tables import Accept, CompletionPlan, END_MARKER, Shift


@dataclass(frozen=True)
class Synthesized:
    symbol: str
    cost: Cost


@dataclass(frozen=True)
class Consumed:
    token: Token


@dataclass(frozen=True)
class Dropped:
    token: Token


RecoveryStep = Union[Synthesized, Consumed, Dropped]


@dataclass
class RecoveryResult:
    tree: ConcreteTree
    diagnostics: list[Diagnostic]
    trace: list[RecoveryStep]
    total_cost: Cost


class CompletionError(Exception):
    """No finite-cost completion exists from this state; table generation
    reports such states up front, so hitting this means a broken plan."""


# Consecutive unparseable tokens tolerated before recovery gives up on the
# rest of the input and completes outright.
DROP_CAP = 1000

_STEP_FACTOR = 4


def _step_limit(plan: CompletionPlan) -> int:
    a = plan.tables.automaton
    states = len(a.states) if a else len(plan.best_item)
    max_rhs = max((len(p.rhs) for p in plan.tables.productions), default=1) or 1
    return _STEP_FACTOR * states * max_rhs + 16


def materialize(plan: CompletionPlan, symbol: str, at: Position) -> ConcreteTree:
    """Invent a whole symbol as a synthesized subtree with a zero-width range
    anchored at `at`."""
    g = plan.tables.grammar
    rng = (at, at)
    if symbol in g.terminals:
        term = g.terminals[symbol]
        return ConcreteTree(symbol, (), term.recovery_payload, rng, synthesized=True)
    if plan.use_placeholder(symbol):
        return ConcreteTree(symbol, (), None, rng, synthesized=True)
    pid = plan.cheapest_production.get(symbol)
    if pid is None:
        raise CompletionError(f"cannot invent {symbol!r}: no finite-cost route")
    prod = plan.tables.productions[pid]
    children = tuple(materialize(plan, s, at) for s in prod.rhs)
    return ConcreteTree(symbol, children, None, rng, synthesized=True, production=pid)


def _shift_value(env: ParserEnv, symbol: str, value: ConcreteTree) -> Optional[ParserEnv]:
    from .parser import _push  # shared frame construction

    tables = env.tables
    if symbol in tables.grammar.terminals:
        act = tables.action.get(env.current_state, {}).get(symbol)
        if not isinstance(act, Shift):
            return None
        return _push(env, symbol, value, act.state)
    target = tables.goto.get(env.current_state, {}).get(symbol)
    if target is None:
        return None
    return _push(env, symbol, value, target)


@dataclass(frozen=True)
class _CompletionAction:
    kind: str  # "reduce" | "synth" | "accept"
    production: Optional[int] = None
    symbol: Optional[str] = None


def _next_action(env: ParserEnv, plan: CompletionPlan) -> Optional[_CompletionAction]:
    tables = env.tables
    act = tables.action.get(env.current_state, {}).get(END_MARKER)
    if isinstance(act, Accept):
        return _CompletionAction("accept")
    item = plan.best_item.get(env.current_state)
    if item is None:
        return None
    pid, dot = item
    prod = tables.productions[pid]
    if pid >= len(tables.grammar.productions):
        # Augmented item: completing it is the accept transition, handled above;
        # before that point its remainder is the bare start symbol.
        if dot == len(prod.rhs):
            return None
    if dot == len(prod.rhs):
        return _CompletionAction("reduce", production=pid)
    return _CompletionAction("synth", symbol=prod.rhs[dot])


def complete(
    env: ParserEnv, plan: CompletionPlan, at: Optional[Position] = None
) -> tuple[ConcreteTree, Cost]:
    """Run pure completion to acceptance.  Returns the finished tree and the
    total cost of everything invented (zero when the input merely needed its
    pending reductions)."""
    anchor = at or _anchor_of(env)
    total: Cost = Fraction(0)
    for _ in range(_step_limit(plan)):
        action = _next_action(env, plan)
        if action is None:
            raise CompletionError(
                f"state {env.current_state} has no finite-cost completion"
            )
        if action.kind == "accept":
            return env.top.element.value, total
        if action.kind == "reduce":
            env = apply_reduce(env, action.production, anchor)
            continue
        symbol = action.symbol
        cost = plan.symbol_cost[symbol]
        if cost == INFINITY:
            raise CompletionError(f"symbol {symbol!r} has infinite synthesis cost")
        value = materialize(plan, symbol, anchor)
        nxt = _shift_value(env, symbol, value)
        if nxt is None:
            raise CompletionError(
                f"cannot advance on invented {symbol!r} from state {env.current_state}"
            )
        env = nxt
        total += cost
    raise CompletionError("completion exceeded its step bound")


def _anchor_of(env: ParserEnv) -> Position:
    if env.top is not None:
        return env.top.element.range[1]
    from .positions import ORIGIN

    return ORIGIN


def recover(
    env: ParserEnv,
    rest: list[Token],
    plan: CompletionPlan,
    initial_error: Optional[SyntaxErrorPoint] = None,
    eof: Optional[Position] = None,
) -> RecoveryResult:
    """Consume what fits, invent what does not, and finish with completion.
    Total by construction: every token is either consumed or dropped, and a
    complete tree always comes out."""
    diagnostics: list[Diagnostic] = []
    if initial_error is not None:
        diagnostics.append(_error_diagnostic(initial_error))
    trace: list[RecoveryStep] = []
    total: Cost = Fraction(0)
    first = plan.tables.automaton.first if plan.tables.automaton else {}
    budget = len(rest) + _step_limit(plan)
    dropped_run = 0

    for index, tok in enumerate(rest):
        if dropped_run > DROP_CAP:
            diagnostics.append(
                Diagnostic(
                    "parse",
                    f"giving up on the remaining input after {DROP_CAP} consecutive "
                    "unparseable tokens",
                    tok.start,
                    rest[-1].end,
                )
            )
            break
        # Indentation loop: while the top of the stack is more indented than
        # the incoming token, take completion steps that close the current
        # construct — unless the next thing the best item wants is exactly
        # what the input provides.
        while budget > 0:
            budget -= 1
            sc = env.top.element.range[0].col if env.top else 0
            if sc <= tok.start.col:
                break
            action = _next_action(env, plan)
            if action is None or action.kind == "accept":
                break
            if action.kind == "reduce":
                env = apply_reduce(env, action.production, tok.start)
                continue
            symbol = action.symbol
            if symbol in plan.tables.grammar.terminals:
                # The construct is waiting for a specific closer; invent it
                # unless the input supplies that very token.
                if symbol == tok.kind:
                    break
            elif plan.tables.action.get(env.current_state, {}).get(tok.kind) is not None:
                # A constituent has not started yet and the token can take
                # part in one here; let the parser have it.
                break
            cost = plan.symbol_cost[symbol]
            if cost == INFINITY:
                break
            value = materialize(plan, symbol, tok.start)
            nxt = _shift_value(env, symbol, value)
            if nxt is None:
                break
            env = nxt
            total += cost
            trace.append(Synthesized(symbol, cost))
        outcome = step(env, tok)
        if isinstance(outcome, Intermediate):
            env = outcome.env
            trace.append(Consumed(tok))
            dropped_run = 0
        elif isinstance(outcome, SyntaxErrorPoint):
            trace.append(Dropped(tok))
            diagnostics.append(
                Diagnostic(
                    "parse",
                    f"dropped unexpected {tok.kind}"
                    + (f" (expected one of: {', '.join(outcome.expected)})" if outcome.expected else ""),
                    tok.start,
                    tok.end,
                )
            )
            dropped_run += 1
        else:
            raise AssertionError("end marker fed through recovery")

    anchor = eof or (rest[-1].end if rest else _anchor_of(env))
    tree, completion_cost = complete(env, plan, anchor)
    total += completion_cost
    return RecoveryResult(tree, diagnostics, trace, total)


def _error_diagnostic(err: SyntaxErrorPoint) -> Diagnostic:
    expected = ", ".join(err.expected) if err.expected else "nothing"
    return Diagnostic(
        "parse",
        f"syntax error (expected one of: {expected})",
        err.position,
        err.position,
    )
