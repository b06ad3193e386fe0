from __future__ import annotations

from fractions import Fraction

import pytest

from minimerlin import miniml
from minimerlin.grammar import (
    GrammarError,
    INFINITY,
    check_grammar,
    grammar_to_text,
    load_grammar,
)


def test_annotated_token_declaration():
    g = load_grammar("%token <int> INT [@cost 1] [@recovery 0]\n%start e\n%%\ne: INT;")
    t = g.terminals["INT"]
    assert t.payload_kind == "integer"
    assert t.cost == Fraction(1)
    assert t.recovery_payload == 0


def test_epsilon_rule_body():
    g = load_grammar("%token X [@cost 1]\n%start e\n%%\ne: ; | X;")
    assert g.productions[0].rhs == ()
    assert g.productions[1].rhs == ("X",)


def test_undeclared_symbol_reports_name_and_location():
    src = "%token X [@cost 1]\n%start e\n%%\ne: X FOO;"
    with pytest.raises(GrammarError) as exc:
        load_grammar(src)
    assert "FOO" in str(exc.value)
    assert exc.value.line == 4


def test_duplicate_symbol_rejected():
    with pytest.raises(GrammarError, match="duplicate"):
        load_grammar("%token X [@cost 1]\n%token X\n%start e\n%%\ne: X;")


def test_payload_token_with_finite_cost_requires_recovery_literal():
    with pytest.raises(GrammarError, match="@recovery required"):
        load_grammar("%token <string> S [@cost 1]\n%start e\n%%\ne: S;")
    # Infinite cost lifts the requirement: the token is never invented.
    g = load_grammar("%token <string> S [@cost inf]\n%start e\n%%\ne: S;")
    assert g.terminals["S"].cost == INFINITY


def test_precedence_on_undeclared_terminal():
    with pytest.raises(GrammarError, match="undeclared"):
        load_grammar("%token X [@cost 1]\n%left Y\n%start e\n%%\ne: X;")


def test_rule_head_annotations():
    g = load_grammar(
        "%token X [@cost 1]\n%start e\n%%\ne [@recovery] [@cost 2]: X;"
    )
    nt = g.nonterminals["e"]
    assert nt.recoverable
    assert nt.recovery_cost == Fraction(2)


def test_costs_are_rationals():
    g = load_grammar("%token X [@cost 3/2]\n%start e\n%%\ne: X;")
    assert g.terminals["X"].cost == Fraction(3, 2)


def test_check_grammar_clean_on_paper_expr_grammar():
    g = load_grammar(
        "%token <int> INT [@cost 1] [@recovery 0]\n%token PLUS [@cost 1]\n"
        "%left PLUS\n%start expr\n%%\nexpr: INT; | expr PLUS expr;"
    )
    assert check_grammar(g) == []


def test_check_grammar_unproductive():
    g = load_grammar(
        "%token PLUS [@cost 1]\n%start s\n%%\ns: a; | PLUS;\na: a PLUS a;"
    )
    issues = check_grammar(g)
    assert any(i.kind == "unproductive" and i.symbol == "a" for i in issues)


def test_check_grammar_unreachable_and_unused():
    g = load_grammar(
        "%token X Y [@cost 1]\n%start s\n%%\ns: X;\norphan: X;"
    )
    kinds = {(i.kind, i.symbol) for i in check_grammar(g)}
    assert ("unreachable", "orphan") in kinds
    assert ("unused-terminal", "Y") in kinds


def test_round_trip_serialization():
    g = miniml.grammar()
    assert load_grammar(grammar_to_text(g)) == g


def test_round_trip_small_grammars():
    for src in [
        "%token <int> INT [@cost 1] [@recovery 0]\n%token PLUS [@cost 1]\n%left PLUS\n%start expr\n%%\nexpr: INT; | expr PLUS expr;",
        "%token X [@cost inf]\n%start e\n%%\ne [@recovery]: ; | X e;",
    ]:
        g = load_grammar(src)
        assert load_grammar(grammar_to_text(g)) == g


def test_shipped_miniml_grammar_is_clean():
    assert check_grammar(miniml.grammar()) == []


def test_every_symbol_resolves_uniquely():
    g = miniml.grammar()
    for prod in g.productions:
        for sym in prod.rhs:
            assert (sym in g.terminals) != (sym in g.nonterminals)
