from __future__ import annotations

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from minimerlin import miniml
from minimerlin.grammar import load_grammar
from minimerlin.tables import compile_grammar

# The paper-style two-token grammar: ambiguous without the %left line.
EXPR_GRAMMAR = """\
%token <int> INT [@cost 1] [@recovery 0]
%token PLUS [@cost 1]
%left PLUS
%start expr
%%
expr: INT; | expr PLUS expr;
"""

EXPR_GRAMMAR_NO_PREC = EXPR_GRAMMAR.replace("%left PLUS\n", "")

# Five terminals, unambiguous: the Earley-oracle reference grammar.
ARITH_GRAMMAR = """\
%token <int> INT [@cost 1] [@recovery 0]
%token PLUS STAR LPAREN [@cost 1]
%token RPAREN [@cost 1]
%start expr
%%
expr: expr PLUS term; | term;
term: term STAR factor; | factor;
factor: INT; | LPAREN expr RPAREN;
"""


@pytest.fixture(scope="session")
def miniml_tables():
    return miniml.tables()


@pytest.fixture(scope="session")
def expr_tables():
    return compile_grammar(load_grammar(EXPR_GRAMMAR))


@pytest.fixture(scope="session")
def arith_tables():
    return compile_grammar(load_grammar(ARITH_GRAMMAR))


@pytest.fixture(scope="session")
def arith_grammar():
    return load_grammar(ARITH_GRAMMAR)
