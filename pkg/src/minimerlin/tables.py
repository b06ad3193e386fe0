"""LALR(1) table construction, conflict resolution and completion planning.

The automaton is the canonical LR(0) collection; lookaheads are attached by
the usual kernel-item propagation (spontaneous generation plus propagation
links, iterated to a fixpoint).  Shift/reduce conflicts are then settled by
precedence declarations the way Yacc settles them; anything left over is
returned as a report instead of a table.

On top of the plain tables we precompute a *completion plan*: for every
symbol the minimum cost of inventing it out of thin air, and for every
state the item whose remaining right-hand side is cheapest to invent.
Error recovery walks that plan to drive any parse to an accepting
configuration in a bounded number of steps.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Union

from .grammar import (
    Cost,
    Grammar,
    INFINITY,
    LEFT,
    NONASSOC,
    Production,
    RIGHT,
    format_cost,
    parse_cost,
)

END_MARKER = "$"

Item = tuple[int, int]  # (production id, dot position)

_PROPAGATED = "\x00#"  # internal sentinel lookahead


@dataclass(frozen=True)
class Shift:
    state: int


@dataclass(frozen=True)
class Reduce:
    production: int


@dataclass(frozen=True)
class Accept:
    pass


Action = Union[Shift, Reduce, Accept]


@dataclass(frozen=True)
class LRState:
    index: int
    kernel: frozenset[Item]
    closure: tuple[Item, ...]


@dataclass
class Automaton:
    grammar: Grammar
    productions: tuple[Production, ...]  # grammar productions + one augmented per start
    states: list[LRState]
    transitions: dict[tuple[int, str], int]
    initial: dict[str, int]  # start symbol -> state
    lookaheads: dict[int, dict[Item, frozenset[str]]]  # completed item -> LALR set
    first: dict[str, frozenset[str]]
    nullable: frozenset[str]
    paths: dict[int, tuple[str, ...]]  # state -> symbols of a shortest viable path

    def item_str(self, item: Item) -> str:
        prod = self.productions[item[0]]
        rhs = list(prod.rhs)
        rhs.insert(item[1], "•")
        return f"{prod.lhs} -> {' '.join(rhs)}"


@dataclass(frozen=True)
class Conflict:
    state: int
    lookahead: str
    kind: str  # shift/reduce | reduce/reduce
    items: tuple[str, ...]


@dataclass(frozen=True)
class ConflictReport:
    conflicts: tuple[Conflict, ...]

    def __str__(self) -> str:
        lines = [f"{len(self.conflicts)} unresolved conflict(s):"]
        for c in self.conflicts:
            lines.append(f"  state {c.state}, on {c.lookahead!r} ({c.kind}):")
            lines.extend(f"    {i}" for i in c.items)
        return "\n".join(lines)


@dataclass
class Tables:
    grammar: Grammar
    action: dict[int, dict[str, Action]]
    goto: dict[int, dict[str, int]]
    initial: dict[str, int]
    productions: tuple[Production, ...]
    automaton: Optional[Automaton] = None

    def expected_terminals(self, state: int) -> tuple[str, ...]:
        return tuple(sorted(self.action.get(state, {})))


# ---------------------------------------------------------------------------
# FIRST sets and the LR(0) collection


def _first_and_nullable(
    g: Grammar, productions: tuple[Production, ...]
) -> tuple[dict[str, frozenset[str]], frozenset[str]]:
    first: dict[str, set[str]] = {t: {t} for t in g.terminals}
    for nt in g.nonterminals:
        first[nt] = set()
    nullable: set[str] = set()
    changed = True
    while changed:
        changed = False
        for prod in productions:
            if prod.lhs not in first:  # augmented head, never consulted
                continue
            f = first[prod.lhs]
            before = len(f)
            rhs_nullable = True
            for sym in prod.rhs:
                f.update(first[sym])
                if sym not in nullable:
                    rhs_nullable = False
                    break
            if rhs_nullable and prod.lhs not in nullable:
                nullable.add(prod.lhs)
                changed = True
            if len(f) != before:
                changed = True
    return {s: frozenset(v) for s, v in first.items()}, frozenset(nullable)


def _first_of_sequence(
    seq: tuple[str, ...],
    first: dict[str, frozenset[str]],
    nullable: frozenset[str],
    tail: frozenset[str],
) -> frozenset[str]:
    out: set[str] = set()
    for sym in seq:
        out.update(first[sym])
        if sym not in nullable:
            return frozenset(out)
    out.update(tail)
    return frozenset(out)


def build_automaton(g: Grammar) -> Automaton:
    """Canonical LR(0) item sets with LALR(1) lookaheads attached."""
    productions = tuple(g.productions) + tuple(
        Production(len(g.productions) + k, f"{start}'", (start,))
        for k, start in enumerate(g.start_symbols)
    )
    augmented_ids = {len(g.productions) + k for k in range(len(g.start_symbols))}
    by_lhs: dict[str, list[int]] = {}
    for prod in productions:
        by_lhs.setdefault(prod.lhs, []).append(prod.id)
    first, nullable = _first_and_nullable(g, productions)

    def lr0_closure(kernel: frozenset[Item]) -> tuple[Item, ...]:
        seen = set(kernel)
        todo = list(kernel)
        while todo:
            pid, dot = todo.pop()
            rhs = productions[pid].rhs
            if dot < len(rhs) and rhs[dot] in g.nonterminals:
                for qid in by_lhs.get(rhs[dot], ()):
                    item = (qid, 0)
                    if item not in seen:
                        seen.add(item)
                        todo.append(item)
        return tuple(sorted(seen))

    states: list[LRState] = []
    index_of: dict[frozenset[Item], int] = {}
    transitions: dict[tuple[int, str], int] = {}
    paths: dict[int, tuple[str, ...]] = {}

    def intern(kernel: frozenset[Item], path: tuple[str, ...]) -> int:
        idx = index_of.get(kernel)
        if idx is None:
            idx = len(states)
            index_of[kernel] = idx
            states.append(LRState(idx, kernel, lr0_closure(kernel)))
            paths[idx] = path
        return idx

    initial: dict[str, int] = {}
    worklist: list[int] = []
    for k, start in enumerate(g.start_symbols):
        idx = intern(frozenset({(len(g.productions) + k, 0)}), ())
        initial[start] = idx
        worklist.append(idx)

    done: set[int] = set()
    while worklist:
        idx = worklist.pop(0)
        if idx in done:
            continue
        done.add(idx)
        moves: dict[str, set[Item]] = {}
        for pid, dot in states[idx].closure:
            rhs = productions[pid].rhs
            if dot < len(rhs):
                moves.setdefault(rhs[dot], set()).add((pid, dot + 1))
        for sym in sorted(moves):
            target = intern(frozenset(moves[sym]), paths[idx] + (sym,))
            transitions[(idx, sym)] = target
            if target not in done:
                worklist.append(target)

    # LALR(1) lookaheads: spontaneous generation and propagation links, computed
    # per kernel item by closing it with a sentinel lookahead.
    la: dict[tuple[int, Item], set[str]] = {}
    links: dict[tuple[int, Item], set[tuple[int, Item]]] = {}

    def lr1_closure(seed: dict[Item, frozenset[str]]) -> dict[Item, set[str]]:
        out: dict[Item, set[str]] = {item: set(ls) for item, ls in seed.items()}
        todo = list(seed)
        while todo:
            item = todo.pop()
            pid, dot = item
            rhs = productions[pid].rhs
            if dot >= len(rhs) or rhs[dot] not in g.nonterminals:
                continue
            tail = _first_of_sequence(rhs[dot + 1 :], first, nullable, frozenset(out[item]))
            for qid in by_lhs.get(rhs[dot], ()):
                target = (qid, 0)
                cur = out.setdefault(target, set())
                if not tail <= cur:
                    cur.update(tail)
                    todo.append(target)
        return out

    for state in states:
        for kitem in state.kernel:
            la.setdefault((state.index, kitem), set())
        if state.index in {initial[s] for s in initial}:
            for kitem in state.kernel:
                la[(state.index, kitem)].add(END_MARKER)
        for kitem in state.kernel:
            probe = lr1_closure({kitem: frozenset({_PROPAGATED})})
            for (pid, dot), lookaheads in probe.items():
                rhs = productions[pid].rhs
                if dot >= len(rhs):
                    continue
                target_state = transitions[(state.index, rhs[dot])]
                target_key = (target_state, (pid, dot + 1))
                la.setdefault(target_key, set())
                for symbol in lookaheads:
                    if symbol == _PROPAGATED:
                        links.setdefault((state.index, kitem), set()).add(target_key)
                    else:
                        la[target_key].add(symbol)

    changed = True
    while changed:
        changed = False
        for source, targets in links.items():
            src = la.get(source, set())
            for target in targets:
                dst = la[target]
                before = len(dst)
                dst.update(src)
                if len(dst) != before:
                    changed = True

    # Lookaheads for completed items, including ε-productions that only ever
    # appear inside closures.
    lookaheads: dict[int, dict[Item, frozenset[str]]] = {}
    for state in states:
        seed = {
            kitem: frozenset(la.get((state.index, kitem), set()))
            for kitem in state.kernel
        }
        closed = lr1_closure(seed)
        completed: dict[Item, frozenset[str]] = {}
        for (pid, dot), lookahead_set in closed.items():
            if dot == len(productions[pid].rhs):
                completed[(pid, dot)] = frozenset(lookahead_set - {_PROPAGATED})
        lookaheads[state.index] = completed

    return Automaton(
        grammar=g,
        productions=productions,
        states=states,
        transitions=transitions,
        initial=initial,
        lookaheads=lookaheads,
        first=first,
        nullable=nullable,
        paths=paths,
    )


# ---------------------------------------------------------------------------
# Conflict resolution


def resolve_conflicts(a: Automaton, g: Grammar) -> Union[Tables, ConflictReport]:
    """Build the action/goto tables, settling shift/reduce conflicts with the
    declared precedence.  Unresolved conflicts come back as a report."""
    augmented_ids = {p.id for p in a.productions if p.id >= len(g.productions)}
    action: dict[int, dict[str, Action]] = {}
    goto: dict[int, dict[str, int]] = {}
    conflicts: list[Conflict] = []

    for (state, sym), target in a.transitions.items():
        if sym in g.terminals:
            action.setdefault(state, {})[sym] = Shift(target)
        else:
            goto.setdefault(state, {})[sym] = target

    for state in a.states:
        row = action.setdefault(state.index, {})
        for item, lookahead_set in a.lookaheads[state.index].items():
            pid, _dot = item
            for symbol in sorted(lookahead_set):
                new: Action
                if pid in augmented_ids:
                    if symbol != END_MARKER:
                        continue
                    new = Accept()
                else:
                    new = Reduce(pid)
                old = row.get(symbol)
                if old is None:
                    row[symbol] = new
                    continue
                if old == new:
                    continue
                if isinstance(old, Shift) and isinstance(new, Reduce):
                    rule_prec = g.production_precedence(a.productions[pid])
                    tok_prec = g.precedence_of(symbol)
                    if rule_prec is not None and tok_prec is not None:
                        if rule_prec > tok_prec:
                            row[symbol] = new
                        elif rule_prec == tok_prec:
                            assoc = g.precedence[rule_prec].assoc
                            if assoc == LEFT:
                                row[symbol] = new
                            elif assoc == NONASSOC:
                                del row[symbol]  # explicit error entry
                            # RIGHT keeps the shift
                        continue
                    conflicts.append(
                        Conflict(
                            state.index,
                            symbol,
                            "shift/reduce",
                            (a.item_str(item),)
                            + tuple(
                                a.item_str(i)
                                for i in state.closure
                                if i[1] < len(a.productions[i[0]].rhs)
                                and a.productions[i[0]].rhs[i[1]] == symbol
                            ),
                        )
                    )
                else:
                    kind = "reduce/reduce"
                    old_desc = (
                        a.item_str((old.production, len(a.productions[old.production].rhs)))
                        if isinstance(old, Reduce)
                        else "accept"
                    )
                    conflicts.append(
                        Conflict(state.index, symbol, kind, (old_desc, a.item_str(item)))
                    )

    if conflicts:
        return ConflictReport(tuple(conflicts))
    return Tables(
        grammar=g,
        action=action,
        goto=goto,
        initial=dict(a.initial),
        productions=a.productions,
        automaton=a,
    )


# ---------------------------------------------------------------------------
# Completion plan


@dataclass
class CompletionPlan:
    tables: Tables
    symbol_cost: dict[str, Cost]
    cheapest_production: dict[str, Optional[int]]  # nonterminal -> production id
    best_item: dict[int, Optional[Item]]
    item_cost: dict[int, Cost]
    cost_to_accept: dict[int, Cost]
    infinite_states: tuple[int, ...]

    def use_placeholder(self, nonterminal: str) -> bool:
        """Invent the nonterminal as a bare placeholder node rather than via its
        cheapest production.  Placeholders win ties: a whole invented symbol is
        more robust than a chain of invented tokens."""
        nt = self.tables.grammar.nonterminals[nonterminal]
        if not nt.recoverable:
            return False
        route = self._route_cost(nonterminal)
        return self._placeholder_cost(nonterminal) <= route

    def _placeholder_cost(self, nonterminal: str) -> Cost:
        nt = self.tables.grammar.nonterminals[nonterminal]
        if not nt.recoverable:
            return INFINITY
        return nt.recovery_cost if nt.recovery_cost is not None else Fraction(1)

    def _route_cost(self, nonterminal: str) -> Cost:
        pid = self.cheapest_production.get(nonterminal)
        if pid is None:
            return INFINITY
        prod = self.tables.productions[pid]
        total: Cost = Fraction(0)
        for sym in prod.rhs:
            total += self.symbol_cost[sym]
        return total


_STEP_LIMIT_FACTOR = 4


def compute_completion_costs(t: Tables, g: Grammar) -> CompletionPlan:
    """Fixpoint on symbol synthesis costs, then per-state completion choices.

    `cost_to_accept` is measured by running the greedy completion over a
    canonical stack for each state (the shortest viable path that reaches it);
    states that cannot be completed at finite cost are reported."""
    a = t.automaton
    if a is None:
        raise ValueError("tables were loaded without an automaton; recompile the grammar")

    symbol_cost: dict[str, Cost] = {name: term.cost for name, term in g.terminals.items()}
    symbol_cost[END_MARKER] = INFINITY
    for name in g.nonterminals:
        symbol_cost[name] = INFINITY

    def rhs_cost(prod: Production) -> Cost:
        total: Cost = Fraction(0)
        for sym in prod.rhs:
            c = symbol_cost[sym]
            if c == INFINITY:
                return INFINITY
            total += c
        return total

    changed = True
    while changed:
        changed = False
        for name, nt in g.nonterminals.items():
            best = symbol_cost[name]
            if nt.recoverable:
                placeholder = nt.recovery_cost if nt.recovery_cost is not None else Fraction(1)
                if placeholder < best:
                    best = placeholder
            for prod in g.productions:
                if prod.lhs != name:
                    continue
                c = rhs_cost(prod)
                if c < best:
                    best = c
            if best != symbol_cost[name]:
                symbol_cost[name] = best
                changed = True

    # Among equal-cost productions prefer the one of least derivation height,
    # so materializing a nonterminal bottoms out even through zero-cost cycles.
    min_cost_prods: dict[str, list[Production]] = {}
    for name in g.nonterminals:
        candidates = [p for p in g.productions if p.lhs == name and rhs_cost(p) != INFINITY]
        least = min((rhs_cost(p) for p in candidates), default=INFINITY)
        min_cost_prods[name] = [p for p in candidates if rhs_cost(p) == least]

    height: dict[str, Cost] = {name: INFINITY for name in g.nonterminals}

    def prod_height(prod: Production) -> Cost:
        h: Cost = 0
        for sym in prod.rhs:
            if sym in g.nonterminals:
                if height[sym] == INFINITY:
                    return INFINITY
                h = max(h, height[sym])
        return h

    changed = True
    while changed:
        changed = False
        for name, prods in min_cost_prods.items():
            for prod in prods:
                h = prod_height(prod)
                if h != INFINITY and 1 + h < height[name]:
                    height[name] = 1 + h
                    changed = True

    cheapest_production: dict[str, Optional[int]] = {}
    for name, prods in min_cost_prods.items():
        best_pid, best_h = None, INFINITY
        for prod in prods:
            h = prod_height(prod)
            if h < best_h:
                best_pid, best_h = prod.id, h
        cheapest_production[name] = best_pid

    # Reverse transitions, to rule out items whose completion can land back in
    # the very state it started from (left-recursive continuations such as
    # `expr -> expr • PLUS expr`): completing those makes no progress, ever.
    reverse: dict[tuple[str, int], set[int]] = {}
    for (src, sym), dst in a.transitions.items():
        reverse.setdefault((sym, dst), set()).add(src)

    def may_loop(state_index: int, pid: int, dot: int) -> bool:
        # Completing an item pops `dot` pre-existing frames and pushes one, so
        # dot >= 2 strictly shrinks the stack and is always safe.  With
        # dot <= 1 the stack does not shrink, and landing back in the same
        # state would repeat forever.
        prod = a.productions[pid]
        if pid >= len(g.productions) or dot >= 2:
            return False
        uncovered = {state_index}
        for sym in reversed(prod.rhs[:dot]):
            nxt: set[int] = set()
            for u in uncovered:
                nxt |= reverse.get((sym, u), set())
            uncovered = nxt
        return any(
            a.transitions.get((u, prod.lhs)) == state_index for u in uncovered
        )

    best_item: dict[int, Optional[Item]] = {}
    item_cost: dict[int, Cost] = {}
    for state in a.states:
        choice: Optional[Item] = None
        choice_key: Optional[tuple] = None
        for pid, dot in state.closure:
            remainder = a.productions[pid].rhs[dot:]
            cost: Cost = Fraction(0)
            for sym in remainder:
                c = symbol_cost[sym]
                if c == INFINITY:
                    cost = INFINITY
                    break
                cost += c
            if cost == INFINITY:
                continue
            if may_loop(state.index, pid, dot):
                continue
            key = (cost, pid, len(remainder))
            if choice_key is None or key < choice_key:
                choice, choice_key = (pid, dot), key
        best_item[state.index] = choice
        item_cost[state.index] = choice_key[0] if choice_key else INFINITY

    plan = CompletionPlan(
        tables=t,
        symbol_cost=symbol_cost,
        cheapest_production=cheapest_production,
        best_item=best_item,
        item_cost=item_cost,
        cost_to_accept={},
        infinite_states=(),
    )

    max_rhs = max((len(p.rhs) for p in a.productions), default=1) or 1
    step_limit = _STEP_LIMIT_FACTOR * len(a.states) * max(max_rhs, 1)
    bad: list[int] = []
    for state in a.states:
        cost = _simulate_completion(t, plan, a, state.index, step_limit)
        plan.cost_to_accept[state.index] = cost
        if cost == INFINITY:
            bad.append(state.index)
    plan.infinite_states = tuple(bad)
    return plan


def _simulate_completion(
    t: Tables, plan: CompletionPlan, a: Automaton, state: int, step_limit: int
) -> Cost:
    """Greedy completion cost from the canonical stack reaching `state`."""
    stack: list[int] = []
    cur = _initial_state_for(a, state)
    for sym in a.paths[state]:
        stack.append(cur)
        cur = a.transitions[(cur, sym)]
    total: Cost = Fraction(0)
    for _ in range(step_limit):
        act = t.action.get(cur, {}).get(END_MARKER)
        if isinstance(act, Accept):
            return total
        item = plan.best_item.get(cur)
        if item is None:
            return INFINITY
        pid, dot = item
        prod = a.productions[pid]
        if dot == len(prod.rhs):
            for _ in range(len(prod.rhs)):
                cur = stack.pop()
            stack.append(cur)
            cur = a.transitions[(cur, prod.lhs)]
        else:
            sym = prod.rhs[dot]
            c = plan.symbol_cost[sym]
            if c == INFINITY:
                return INFINITY
            total += c
            stack.append(cur)
            cur = a.transitions[(cur, sym)]
    return INFINITY


def _initial_state_for(a: Automaton, state: int) -> int:
    # The canonical path was recorded from whichever initial state discovered
    # this state first; find it by replaying candidates.
    path = a.paths[state]
    for init in a.initial.values():
        cur = init
        ok = True
        for sym in path:
            nxt = a.transitions.get((cur, sym))
            if nxt is None:
                ok = False
                break
            cur = nxt
        if ok and cur == state:
            return init
    raise AssertionError(f"no initial state reaches state {state}")


def compile_grammar(g: Grammar) -> tuple[Tables, CompletionPlan]:
    """Automaton + conflict resolution + completion plan in one go."""
    automaton = build_automaton(g)
    resolved = resolve_conflicts(automaton, g)
    if isinstance(resolved, ConflictReport):
        raise TableConflictError(resolved)
    plan = compute_completion_costs(resolved, g)
    return resolved, plan


class TableConflictError(Exception):
    def __init__(self, report: ConflictReport):
        super().__init__(str(report))
        self.report = report


# ---------------------------------------------------------------------------
# Versioned dump of Tables + CompletionPlan

MAGIC = b"MMTB1"


def _action_to_json(act: Action) -> list:
    if isinstance(act, Shift):
        return ["s", act.state]
    if isinstance(act, Reduce):
        return ["r", act.production]
    return ["a"]


def _action_from_json(data: list) -> Action:
    if data[0] == "s":
        return Shift(data[1])
    if data[0] == "r":
        return Reduce(data[1])
    return Accept()


def dump_tables(t: Tables, plan: CompletionPlan) -> bytes:
    from .grammar import grammar_to_text

    payload = {
        "grammar": grammar_to_text(t.grammar),
        "action": {
            str(s): {sym: _action_to_json(act) for sym, act in sorted(row.items())}
            for s, row in sorted(t.action.items())
        },
        "goto": {
            str(s): dict(sorted(row.items())) for s, row in sorted(t.goto.items())
        },
        "initial": dict(sorted(t.initial.items())),
        "productions": [[p.id, p.lhs, list(p.rhs)] for p in t.productions],
        "symbol_cost": {s: format_cost(c) for s, c in sorted(plan.symbol_cost.items())},
        "cheapest_production": dict(sorted(plan.cheapest_production.items())),
        "best_item": {str(s): item for s, item in sorted(plan.best_item.items())},
        "item_cost": {str(s): format_cost(c) for s, c in sorted(plan.item_cost.items())},
        "cost_to_accept": {
            str(s): format_cost(c) for s, c in sorted(plan.cost_to_accept.items())
        },
        "infinite_states": list(plan.infinite_states),
    }
    return MAGIC + json.dumps(payload, sort_keys=True, separators=(",", ":")).encode("utf-8")


def load_tables(blob: bytes) -> tuple[Tables, CompletionPlan]:
    """Inverse of dump_tables.  The automaton is rebuilt from the embedded
    grammar so the loaded tables stay fully featured (recovery needs FIRST
    sets and canonical paths)."""
    from .grammar import load_grammar

    if not blob.startswith(MAGIC):
        raise ValueError("not a table dump (bad magic)")
    payload = json.loads(blob[len(MAGIC) :].decode("utf-8"))
    g = load_grammar(payload["grammar"])
    automaton = build_automaton(g)
    t = Tables(
        grammar=g,
        action={
            int(s): {sym: _action_from_json(act) for sym, act in row.items()}
            for s, row in payload["action"].items()
        },
        goto={int(s): dict(row) for s, row in payload["goto"].items()},
        initial=dict(payload["initial"]),
        productions=tuple(Production(p[0], p[1], tuple(p[2])) for p in payload["productions"]),
        automaton=automaton,
    )

    def cost_of(text: str) -> Cost:
        return parse_cost(text, 0, 0)

    plan = CompletionPlan(
        tables=t,
        symbol_cost={s: cost_of(c) for s, c in payload["symbol_cost"].items()},
        cheapest_production=dict(payload["cheapest_production"]),
        best_item={
            int(s): (tuple(item) if item else None)
            for s, item in payload["best_item"].items()
        },
        item_cost={int(s): cost_of(c) for s, c in payload["item_cost"].items()},
        cost_to_accept={int(s): cost_of(c) for s, c in payload["cost_to_accept"].items()},
        infinite_states=tuple(payload["infinite_states"]),
    )
    return t, plan
