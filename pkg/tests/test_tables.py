from __future__ import annotations

import itertools
from fractions import Fraction

import pytest

from conftest import ARITH_GRAMMAR, EXPR_GRAMMAR, EXPR_GRAMMAR_NO_PREC
from oracle_earley import accepts, all_trees, first_dead_index, lr_tree_shape

from minimerlin.grammar import INFINITY, load_grammar
from minimerlin.lexer import Token
from minimerlin.parser import (
    Result,
    SyntaxErrorPoint,
    end_token,
    parse_prefix,
)
from minimerlin.positions import Position
from minimerlin.tables import (
    Accept,
    ConflictReport,
    Reduce,
    build_automaton,
    compile_grammar,
    compute_completion_costs,
    dump_tables,
    load_tables,
    resolve_conflicts,
)


def _tok(kind: str, offset: int = 0) -> Token:
    p = Position(1, offset, offset)
    q = Position(1, offset + 1, offset + 1)
    payload = 0 if kind == "INT" else None
    return Token(kind, payload, p, q)


def _toks(kinds: list[str]) -> list[Token]:
    return [_tok(k, i) for i, k in enumerate(kinds)] + [
        end_token(Position(1, len(kinds), len(kinds)))
    ]


# --- automaton construction -------------------------------------------------


def test_expr_grammar_has_the_classic_merged_state():
    g = load_grammar(EXPR_GRAMMAR)
    a = build_automaton(g)
    wanted = {"expr -> expr • PLUS expr", "expr -> expr PLUS expr •"}
    assert any(
        wanted <= {a.item_str(i) for i in st.closure} for st in a.states
    )


def test_single_token_grammar_has_three_states():
    g = load_grammar("%token <int> INT [@cost 1] [@recovery 0]\n%start s\n%%\ns: INT;")
    a = build_automaton(g)
    assert len(a.states) == 3


def test_epsilon_rule_reduces_immediately_on_end_marker():
    g = load_grammar("%token X [@cost 1]\n%start s\n%%\ns: ; | X;")
    t, _plan = compile_grammar(g)
    act = t.action[t.initial["s"]]["$"]
    assert isinstance(act, Reduce)
    assert t.productions[act.production].rhs == ()


# --- conflict resolution -----------------------------------------------------


def test_left_assoc_resolves_shift_reduce_to_reduce():
    g = load_grammar(EXPR_GRAMMAR)
    a = build_automaton(g)
    t = resolve_conflicts(a, g)
    assert not isinstance(t, ConflictReport)
    state = next(
        st.index
        for st in a.states
        if "expr -> expr PLUS expr •" in {a.item_str(i) for i in st.closure}
    )
    assert isinstance(t.action[state]["PLUS"], Reduce)


def test_missing_precedence_reports_one_shift_reduce_conflict():
    g = load_grammar(EXPR_GRAMMAR_NO_PREC)
    a = build_automaton(g)
    report = resolve_conflicts(a, g)
    assert isinstance(report, ConflictReport)
    assert len(report.conflicts) == 1
    assert report.conflicts[0].kind == "shift/reduce"
    assert report.conflicts[0].lookahead == "PLUS"


def test_unambiguous_grammar_builds_tables_directly():
    g = load_grammar("%token <int> INT [@cost 1] [@recovery 0]\n%start s\n%%\ns: INT;")
    t = resolve_conflicts(build_automaton(g), g)
    assert not isinstance(t, ConflictReport)


def test_nonassoc_yields_error_entry():
    g = load_grammar(
        "%token <int> INT [@cost 1] [@recovery 0]\n%token LT [@cost 1]\n"
        "%nonassoc LT\n%start e\n%%\ne: INT; | e LT e;"
    )
    t, _ = compile_grammar(g)
    cp, _cache = parse_prefix(t, _toks(["INT", "LT", "INT", "LT", "INT"]), "e")
    assert isinstance(cp, SyntaxErrorPoint)  # a < b < c is a parse error


# --- completion costs ---------------------------------------------------------


def test_cost_to_accept_after_expr_plus(expr_tables):
    # Completing from `expr PLUS •` costs exactly one invented INT; the two
    # reductions that follow are free.
    t, plan = expr_tables
    a = t.automaton
    state = next(s for s, path in a.paths.items() if path == ("expr", "PLUS"))
    assert plan.cost_to_accept[state] == Fraction(1)
    pid, dot = plan.best_item[state]
    assert t.productions[pid].rhs[dot] == "INT"


def test_all_infinite_terminals_reported():
    g = load_grammar("%token <int> INT [@cost inf]\n%start s\n%%\ns: INT;")
    t, plan = compile_grammar(g)
    assert t.initial["s"] in plan.infinite_states


def test_symbol_costs_fixpoint(miniml_tables):
    t, plan = miniml_tables
    g = t.grammar
    # synthesis_cost(nonterminal) = min(recovery cost, min production route)
    for name, nt in g.nonterminals.items():
        routes = []
        for p in g.productions:
            if p.lhs == name:
                total = Fraction(0)
                bad = False
                for sym in p.rhs:
                    c = plan.symbol_cost[sym]
                    if c == INFINITY:
                        bad = True
                        break
                    total += c
                if not bad:
                    routes.append(total)
        expected = min(
            ([nt.recovery_cost if nt.recovery_cost is not None else Fraction(1)] if nt.recoverable else [])
            + routes
            + [INFINITY],
        )
        assert plan.symbol_cost[name] == expected, name


def test_miniml_every_state_completes_finitely(miniml_tables):
    _t, plan = miniml_tables
    assert plan.infinite_states == ()
    assert all(c != INFINITY for c in plan.cost_to_accept.values())


def test_letdef_state_best_item(miniml_tables):
    t, plan = miniml_tables
    a = t.automaton
    for st in a.states:
        for pid, dot in st.kernel:
            p = a.productions[pid]
            if p.lhs == "letdef" and dot == len(p.rhs) - 1:
                bpid, bdot = plan.best_item[st.index]
                assert t.productions[bpid].lhs == "letdef"
                assert t.productions[bpid].rhs[bdot] == "expr"
                return
    raise AssertionError("letdef state not found")


# --- table dump ----------------------------------------------------------------


def test_dump_round_trip(arith_tables):
    t, plan = arith_tables
    blob = dump_tables(t, plan)
    assert blob.startswith(b"MMTB1")
    t2, plan2 = load_tables(blob)
    assert t2.action == t.action
    assert t2.goto == t.goto
    assert t2.initial == t.initial
    assert plan2.symbol_cost == plan.symbol_cost
    assert plan2.best_item == plan.best_item
    assert plan2.cost_to_accept == plan.cost_to_accept
    assert dump_tables(t2, plan2) == blob


def test_bad_magic_rejected():
    with pytest.raises(ValueError, match="magic"):
        load_tables(b"NOTAMAGIC{}")


# --- oracle equivalence (exhaustive, small) -----------------------------------


def _lr_outcome(t, kinds: list[str]):
    cp, _cache = parse_prefix(t, _toks(kinds), "expr")
    if isinstance(cp, Result):
        return ("accept", lr_tree_shape(cp.tree))
    assert isinstance(cp, SyntaxErrorPoint)
    return ("error", cp.position.offset)


def test_lr_agrees_with_earley_up_to_length_four(arith_tables, arith_grammar):
    # The full length-6 sweep lives in the acceptance suite; this is the
    # fast development-loop version.
    t, _plan = arith_tables
    g = arith_grammar
    terms = ["INT", "PLUS", "STAR", "LPAREN", "RPAREN"]
    for n in range(0, 5):
        for kinds in itertools.product(terms, repeat=n):
            kinds = list(kinds)
            kind, detail = _lr_outcome(t, kinds)
            if accepts(g, "expr", kinds):
                assert kind == "accept", kinds
                trees = all_trees(g, "expr", kinds)
                assert len(trees) == 1, kinds
                assert detail == trees[0], kinds
            else:
                assert kind == "error", kinds
                dead = first_dead_index(g, "expr", kinds)
                expected_offset = len(kinds) if dead is None else dead
                assert detail == expected_offset, kinds
