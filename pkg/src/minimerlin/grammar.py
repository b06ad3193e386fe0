"""Annotated context-free grammars, loaded from Yacc-style text files.

The file format, line oriented at the top and free-form in the rule section:

    # comment
    %token <int> INT [@cost 1] [@recovery 0]
    %token PLUS MINUS [@cost 1]
    %left PLUS MINUS            # precedence lines, increasing level
    %start expr
    %%
    expr [@recovery] [@cost 1]: expr PLUS expr; | INT;

Terminals may carry an integer or string payload (declared with `<int>` /
`<string>`).  The `@cost` of a symbol is the price recovery pays to invent
it; `@recovery` gives the payload used for an invented terminal, and on a
rule head it marks the nonterminal as recoverable (invented wholesale as a
placeholder node).  Costs are non-negative rationals, or `inf` to forbid
synthesis.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Iterator, Optional, Union

INFINITY = float("inf")

Cost = Union[Fraction, float]  # Fraction, or float("inf")

PAYLOAD_NONE = "none"
PAYLOAD_INT = "integer"
PAYLOAD_TEXT = "text"

LEFT, RIGHT, NONASSOC = "left", "right", "nonassoc"


class GrammarError(Exception):
    """Raised for malformed grammar files; carries a 1-based line and 0-based column."""

    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {message}")
        self.message = message
        self.line = line
        self.col = col


@dataclass(frozen=True)
class Terminal:
    name: str
    payload_kind: str = PAYLOAD_NONE
    cost: Cost = Fraction(1)
    recovery_payload: Optional[Union[int, str]] = None


@dataclass(frozen=True)
class NonTerminal:
    name: str
    recoverable: bool = False
    recovery_cost: Optional[Cost] = None


@dataclass(frozen=True)
class Production:
    id: int
    lhs: str
    rhs: tuple[str, ...]

    def __str__(self) -> str:
        return f"{self.lhs} -> {' '.join(self.rhs) or 'ε'}"


@dataclass(frozen=True)
class PrecLevel:
    assoc: str  # left | right | nonassoc
    terminals: tuple[str, ...]


@dataclass(frozen=True)
class Grammar:
    terminals: dict[str, Terminal]
    nonterminals: dict[str, NonTerminal]
    productions: tuple[Production, ...]
    start_symbols: tuple[str, ...]
    precedence: tuple[PrecLevel, ...]

    def is_terminal(self, name: str) -> bool:
        return name in self.terminals

    def productions_of(self, lhs: str) -> list[Production]:
        return [p for p in self.productions if p.lhs == lhs]

    def precedence_of(self, terminal: str) -> Optional[int]:
        for level, group in enumerate(self.precedence):
            if terminal in group.terminals:
                return level
        return None

    def production_precedence(self, prod: Production) -> Optional[int]:
        """Standard Yacc rule: a production's level is its rightmost terminal's."""
        for sym in reversed(prod.rhs):
            if sym in self.terminals:
                return self.precedence_of(sym)
        return None


@dataclass(frozen=True)
class Issue:
    kind: str  # unreachable | unproductive | unused-terminal
    symbol: str
    message: str


def parse_cost(text: str, line: int, col: int) -> Cost:
    if text == "inf":
        return INFINITY
    try:
        value = Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise GrammarError(f"bad cost {text!r}", line, col) from None
    if value < 0:
        raise GrammarError(f"cost must be non-negative, got {text}", line, col)
    return value


def format_cost(cost: Cost) -> str:
    return "inf" if cost == INFINITY else str(cost)


# ---------------------------------------------------------------------------
# Scanner for the grammar file itself.

@dataclass(frozen=True)
class _Tok:
    kind: str  # word | punct | int | string | directive | annot
    text: str
    value: object
    line: int
    col: int


def _scan(source: str) -> Iterator[_Tok]:
    line, col, i, n = 1, 0, 0, len(source)

    def err(msg: str) -> GrammarError:
        return GrammarError(msg, line, col)

    while i < n:
        ch = source[i]
        if ch == "\n":
            line, col, i = line + 1, 0, i + 1
            continue
        if ch in " \t\r":
            i, col = i + 1, col + 1
            continue
        if ch == "#":
            while i < n and source[i] != "\n":
                i += 1
            continue
        start_line, start_col = line, col
        if ch == "%":
            j = i + 1
            while j < n and (source[j].isalnum() or source[j] == "%"):
                j += 1
            word = source[i:j]
            if word not in ("%token", "%left", "%right", "%nonassoc", "%start", "%%"):
                raise err(f"unknown directive {word!r}")
            yield _Tok("directive", word, word, start_line, start_col)
            col += j - i
            i = j
            continue
        if ch == "[" and source[i : i + 2] == "[@":
            j = source.find("]", i)
            if j < 0:
                raise err("unterminated annotation")
            body = source[i + 2 : j].strip()
            yield _Tok("annot", source[i : j + 1], body, start_line, start_col)
            col += j + 1 - i
            i = j + 1
            continue
        if ch in "<>:;|":
            yield _Tok("punct", ch, ch, start_line, start_col)
            i, col = i + 1, col + 1
            continue
        if ch == '"':
            j = i + 1
            out = []
            while j < n and source[j] != '"':
                if source[j] == "\\" and j + 1 < n:
                    out.append(source[j + 1])
                    j += 2
                else:
                    out.append(source[j])
                    j += 1
            if j >= n:
                raise err("unterminated string literal")
            yield _Tok("string", source[i : j + 1], "".join(out), start_line, start_col)
            col += j + 1 - i
            i = j + 1
            continue
        if ch.isdigit() or (ch == "-" and i + 1 < n and source[i + 1].isdigit()):
            j = i + 1
            while j < n and (source[j].isdigit() or source[j] == "/"):
                j += 1
            yield _Tok("int", source[i:j], source[i:j], start_line, start_col)
            col += j - i
            i = j
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (source[j].isalnum() or source[j] == "_"):
                j += 1
            yield _Tok("word", source[i:j], source[i:j], start_line, start_col)
            col += j - i
            i = j
            continue
        raise err(f"unexpected character {ch!r}")


def _parse_annot(tok: _Tok) -> tuple[str, Optional[str]]:
    body = str(tok.value)
    if " " in body or "\t" in body:
        key, rest = body.split(None, 1)
        return key, rest.strip()
    return body, None


# ---------------------------------------------------------------------------
# Loading


def load_grammar(source_text: str) -> Grammar:
    """Parse and validate a grammar file, attaching annotations to symbols."""
    toks = list(_scan(source_text))
    pos = 0

    def peek() -> Optional[_Tok]:
        return toks[pos] if pos < len(toks) else None

    def take() -> _Tok:
        nonlocal pos
        if pos >= len(toks):
            last = toks[-1] if toks else None
            raise GrammarError(
                "unexpected end of grammar file",
                last.line if last else 1,
                last.col if last else 0,
            )
        tok = toks[pos]
        pos += 1
        return tok

    terminals: dict[str, Terminal] = {}
    nonterminal_flags: dict[str, tuple[bool, Optional[Cost]]] = {}
    precedence: list[PrecLevel] = []
    starts: list[str] = []

    def declare_terminal(name_tok: _Tok, payload_kind: str, annots: list[_Tok]) -> None:
        name = name_tok.text
        if name in terminals:
            raise GrammarError(f"duplicate symbol {name!r}", name_tok.line, name_tok.col)
        cost: Cost = Fraction(1)
        payload: Optional[Union[int, str]] = None
        have_payload = False
        for a in annots:
            key, arg = _parse_annot(a)
            if key == "cost":
                if arg is None:
                    raise GrammarError("@cost needs a value", a.line, a.col)
                cost = parse_cost(arg, a.line, a.col)
            elif key == "recovery":
                if arg is None:
                    raise GrammarError("@recovery on a token needs a literal", a.line, a.col)
                have_payload = True
                if arg.startswith('"'):
                    payload = next(iter(_scan(arg))).value  # reuse string unescaping
                else:
                    payload = arg
            else:
                raise GrammarError(f"unknown annotation @{key}", a.line, a.col)
        if payload_kind == PAYLOAD_INT and have_payload:
            try:
                payload = int(str(payload))
            except ValueError:
                raise GrammarError(
                    f"@recovery for <int> token must be an integer, got {payload!r}",
                    name_tok.line,
                    name_tok.col,
                ) from None
        if payload_kind != PAYLOAD_NONE and cost != INFINITY and not have_payload:
            raise GrammarError(
                f"token {name} carries a payload and a finite cost: @recovery required",
                name_tok.line,
                name_tok.col,
            )
        if payload_kind == PAYLOAD_NONE and have_payload:
            raise GrammarError(
                f"token {name} has no payload: @recovery literal not allowed",
                name_tok.line,
                name_tok.col,
            )
        terminals[name] = Terminal(name, payload_kind, cost, payload)

    # Declaration section.
    while True:
        tok = peek()
        if tok is None:
            raise GrammarError("missing %% separator", 1, 0)
        if tok.kind == "directive" and tok.text == "%%":
            take()
            break
        tok = take()
        if tok.kind != "directive":
            raise GrammarError(f"expected a declaration, got {tok.text!r}", tok.line, tok.col)
        if tok.text == "%token":
            payload_kind = PAYLOAD_NONE
            if peek() and peek().kind == "punct" and peek().text == "<":
                take()
                kind_tok = take()
                if kind_tok.text == "int":
                    payload_kind = PAYLOAD_INT
                elif kind_tok.text == "string":
                    payload_kind = PAYLOAD_TEXT
                else:
                    raise GrammarError(
                        f"payload kind must be int or string, got {kind_tok.text!r}",
                        kind_tok.line,
                        kind_tok.col,
                    )
                close = take()
                if close.text != ">":
                    raise GrammarError("expected >", close.line, close.col)
            names: list[_Tok] = []
            while peek() and peek().kind == "word":
                names.append(take())
            if not names:
                raise GrammarError("%token needs at least one name", tok.line, tok.col)
            annots: list[_Tok] = []
            while peek() and peek().kind == "annot":
                annots.append(take())
            for name_tok in names:
                declare_terminal(name_tok, payload_kind, annots)
        elif tok.text in ("%left", "%right", "%nonassoc"):
            assoc = tok.text[1:]
            group: list[str] = []
            while peek() and peek().kind == "word":
                t = take()
                group.append(t.text)
                if t.text not in terminals:
                    raise GrammarError(
                        f"precedence on undeclared terminal {t.text!r}", t.line, t.col
                    )
            if not group:
                raise GrammarError(f"{tok.text} needs terminals", tok.line, tok.col)
            precedence.append(PrecLevel(assoc, tuple(group)))
        elif tok.text == "%start":
            while peek() and peek().kind == "word":
                starts.append(take().text)
        else:
            raise GrammarError(f"unexpected {tok.text!r}", tok.line, tok.col)

    # Rule section.
    productions: list[Production] = []
    rule_order: list[str] = []
    while peek() is not None:
        head = take()
        if head.kind != "word":
            raise GrammarError(f"expected rule head, got {head.text!r}", head.line, head.col)
        lhs = head.text
        if lhs in terminals:
            raise GrammarError(f"duplicate symbol {lhs!r} (already a token)", head.line, head.col)
        if lhs in nonterminal_flags:
            raise GrammarError(
                f"duplicate rule head {lhs!r}; use '|' for alternatives", head.line, head.col
            )
        recoverable, rec_cost = False, None
        while peek() and peek().kind == "annot":
            a = take()
            key, arg = _parse_annot(a)
            if key == "recovery":
                if arg is not None:
                    raise GrammarError(
                        "@recovery on a rule head takes no literal (placeholder node)",
                        a.line,
                        a.col,
                    )
                recoverable = True
            elif key == "cost":
                if arg is None:
                    raise GrammarError("@cost needs a value", a.line, a.col)
                rec_cost = parse_cost(arg, a.line, a.col)
            else:
                raise GrammarError(f"unknown annotation @{key}", a.line, a.col)
        nonterminal_flags[lhs] = (recoverable, rec_cost)
        if lhs not in rule_order:
            rule_order.append(lhs)
        colon = take()
        if colon.text != ":":
            raise GrammarError("expected ':'", colon.line, colon.col)
        # Alternatives: `sym sym ; | sym ;` — each alternative ends with ';',
        # a following '|' continues the same rule.
        while True:
            rhs: list[str] = []
            while peek() and peek().kind == "word":
                rhs.append(take().text)
            semi = take()
            if semi.text != ";":
                raise GrammarError(f"expected ';', got {semi.text!r}", semi.line, semi.col)
            productions.append(Production(len(productions), lhs, tuple(rhs)))
            if peek() and peek().kind == "punct" and peek().text == "|":
                take()
                continue
            break

    nonterminals = {
        name: NonTerminal(name, *nonterminal_flags[name]) for name in rule_order
    }

    # Referenced symbols must resolve to exactly one declaration.
    for prod in productions:
        for sym in prod.rhs:
            if sym not in terminals and sym not in nonterminals:
                line, col = _undeclared_position(source_text, sym)
                raise GrammarError(
                    f"undeclared symbol {sym!r} in rule for {prod.lhs}", line, col
                )
    if not starts:
        raise GrammarError("no %start symbol", 1, 0)
    for s in starts:
        if s not in nonterminals:
            raise GrammarError(f"start symbol {s!r} has no rules", 1, 0)

    return Grammar(
        terminals=terminals,
        nonterminals=nonterminals,
        productions=tuple(productions),
        start_symbols=tuple(starts),
        precedence=tuple(precedence),
    )


# The loader reports undeclared symbols with a position; keep the check fast by
# locating the offending token lazily only when building the message would matter.
def _undeclared_position(source_text: str, symbol: str) -> tuple[int, int]:
    for lineno, line in enumerate(source_text.splitlines(), 1):
        col = line.find(symbol)
        if col >= 0:
            return lineno, col
    return 0, 0


def load_grammar_file(path: str) -> Grammar:
    with open(path, "r", encoding="utf-8") as fh:
        return load_grammar(fh.read())


# ---------------------------------------------------------------------------
# Diagnostics over a structurally valid grammar.


def check_grammar(g: Grammar) -> list[Issue]:
    """Enumerate unreachable nonterminals, unproductive nonterminals and unused
    terminals.  An empty list means the grammar is clean."""
    issues: list[Issue] = []

    productive: set[str] = set()
    changed = True
    while changed:
        changed = False
        for prod in g.productions:
            if prod.lhs in productive:
                continue
            if all(s in g.terminals or s in productive for s in prod.rhs):
                productive.add(prod.lhs)
                changed = True
    for name in g.nonterminals:
        if name not in productive:
            issues.append(Issue("unproductive", name, f"{name} derives no terminal string"))

    reachable: set[str] = set(g.start_symbols)
    stack = list(g.start_symbols)
    while stack:
        sym = stack.pop()
        for prod in g.productions:
            if prod.lhs != sym:
                continue
            for s in prod.rhs:
                if s in g.nonterminals and s not in reachable:
                    reachable.add(s)
                    stack.append(s)
    for name in g.nonterminals:
        if name not in reachable:
            issues.append(Issue("unreachable", name, f"{name} is unreachable from any start symbol"))

    used = {s for prod in g.productions for s in prod.rhs if s in g.terminals}
    for name in g.terminals:
        if name not in used:
            issues.append(Issue("unused-terminal", name, f"token {name} appears in no rule"))

    return issues


# ---------------------------------------------------------------------------
# Serialization (round-trips through load_grammar).


def _payload_literal(term: Terminal) -> str:
    if term.payload_kind == PAYLOAD_INT:
        return str(term.recovery_payload)
    escaped = str(term.recovery_payload).replace("\\", "\\\\").replace('"', '\\"')
    return f'"{escaped}"'


def grammar_to_text(g: Grammar) -> str:
    lines: list[str] = []
    for term in g.terminals.values():
        parts = ["%token"]
        if term.payload_kind == PAYLOAD_INT:
            parts.append("<int>")
        elif term.payload_kind == PAYLOAD_TEXT:
            parts.append("<string>")
        parts.append(term.name)
        parts.append(f"[@cost {format_cost(term.cost)}]")
        if term.recovery_payload is not None:
            parts.append(f"[@recovery {_payload_literal(term)}]")
        lines.append(" ".join(parts))
    for level in g.precedence:
        lines.append(f"%{level.assoc} " + " ".join(level.terminals))
    lines.append("%start " + " ".join(g.start_symbols))
    lines.append("%%")
    for name, nt in g.nonterminals.items():
        head = name
        if nt.recoverable:
            head += " [@recovery]"
        if nt.recovery_cost is not None:
            head += f" [@cost {format_cost(nt.recovery_cost)}]"
        alts = [" ".join(p.rhs) for p in g.productions if p.lhs == name]
        body = " | ".join(f"{alt};" if alt else ";" for alt in alts)
        lines.append(f"{head}: {body}")
    return "\n".join(lines) + "\n"
