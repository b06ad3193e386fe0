"""Pull-based, restartable lexer for the MiniML surface syntax.

`lex_step` is a pure function from a lexer state and a text window to one
outcome: a token, a request for more input, a recoverable failure, or end
of input.  The caller owns refilling; there are no callbacks and no hidden
I/O.  States are tiny immutable values, so one can be dropped at every
token boundary and used later to restart lexing anywhere in the buffer —
that is all `relex` needs to make edits cheap.

Lexical classes: keywords (`let rec in fun if then else match with type of
module struct end`), `IDENT`, `UIDENT`, `TYVAR` (`'a`), `INT`, double
quoted `STRING` with `\\` and `\"` escapes, the operators
`+ - * < = -> | : ( ) ;;`, nestable `(* ... *)` comments, and
insignificant whitespace.  Scanning needs at most one byte of lookahead
past the current lexeme, which is what licenses restarting from token
boundaries: a boundary can only be invalidated by an edit touching the
byte right after it.

Failure handling is deliberately naive: log a diagnostic, skip at least
one byte, resume.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional, Union

from .positions import Diagnostic, LineTable, ORIGIN, Position, advance

KEYWORDS = {
    "let": "LET", "rec": "REC", "in": "IN", "fun": "FUN", "if": "IF",
    "then": "THEN", "else": "ELSE", "match": "MATCH", "with": "WITH",
    "type": "TYPE", "of": "OF", "module": "MODULE", "struct": "STRUCT",
    "end": "END",
}

MODE_DEFAULT = "default"
MODE_STRING = "in_string"
MODE_COMMENT = "in_comment"

_IDENT_START = set("abcdefghijklmnopqrstuvwxyz_")
_UIDENT_START = set("ABCDEFGHIJKLMNOPQRSTUVWXYZ")
_IDENT_CONT = set("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_'")
_DIGITS = set("0123456789")
_LOWER = set("abcdefghijklmnopqrstuvwxyz")


@dataclass(frozen=True)
class Token:
    kind: str
    payload: Optional[Union[int, str]]
    start: Position
    end: Position

    def __repr__(self) -> str:
        extra = "" if self.payload is None else f"({self.payload!r})"
        return f"{self.kind}{extra}@{self.start}"


@dataclass(frozen=True)
class LexState:
    mode: str = MODE_DEFAULT
    depth: int = 0  # comment nesting, >= 1 when in_comment
    at: Position = ORIGIN  # where the next window must start
    lexeme_start: Position = ORIGIN  # opening delimiter of the pending lexeme


@dataclass(frozen=True)
class Produced:
    token: Token
    state: LexState


@dataclass(frozen=True)
class NeedRefill:
    state: LexState


@dataclass(frozen=True)
class Failed:
    diagnostic: Diagnostic
    state: LexState


@dataclass(frozen=True)
class EndOfInput:
    pass


LexOutcome = Union[Produced, NeedRefill, Failed, EndOfInput]

INITIAL_STATE = LexState()


def _default_at(pos: Position) -> LexState:
    return LexState(MODE_DEFAULT, 0, pos, pos)


def lex_step(s: LexState, window: str, at_eof: bool) -> LexOutcome:
    """One lexing attempt.  `window` must start exactly at `s.at`; `at_eof`
    says whether the window reaches the end of the buffer."""
    if s.mode == MODE_STRING:
        return _scan_string(s.at, window, at_eof)
    pos = s.at
    i = 0
    if s.mode == MODE_COMMENT:
        closed = _scan_comment(window, i, pos, s.depth, s.lexeme_start, at_eof)
        if not isinstance(closed, tuple):
            return closed
        i, pos = closed
    n = len(window)
    while True:
        if i >= n:
            return EndOfInput() if at_eof else NeedRefill(_default_at(pos))
        ch = window[i]
        if ch in " \t\r\n":
            pos = advance(pos, ch)
            i += 1
            continue
        if ch == "(" and i + 1 < n and window[i + 1] == "*":
            open_pos = pos
            closed = _scan_comment(window, i + 2, advance(pos, "(*"), 1, open_pos, at_eof)
            if not isinstance(closed, tuple):
                return closed
            i, pos = closed
            continue
        if ch == "(" and i + 1 >= n and not at_eof:
            return NeedRefill(_default_at(pos))  # could be a comment opener
        return _scan_token(pos, window, i, at_eof)


def _scan_comment(
    window: str, i: int, pos: Position, depth: int, lexeme_start: Position, at_eof: bool
):
    """Skip a (possibly nested) comment body starting at index `i` / position
    `pos`.  Returns (index, position) past the close, or a NeedRefill/Failed
    outcome."""
    n = len(window)
    while i < n:
        ch = window[i]
        if ch == "*" and i + 1 < n and window[i + 1] == ")":
            pos = advance(pos, "*)")
            i += 2
            depth -= 1
            if depth == 0:
                return i, pos
            continue
        if ch == "(" and i + 1 < n and window[i + 1] == "*":
            pos = advance(pos, "(*")
            i += 2
            depth += 1
            continue
        if ch in "*(" and i + 1 >= n and not at_eof:
            break  # need the lookahead byte
        pos = advance(pos, ch)
        i += 1
    if at_eof:
        diag = Diagnostic("lex", "unterminated comment", lexeme_start, pos)
        return Failed(diag, _default_at(pos))
    return NeedRefill(LexState(MODE_COMMENT, depth, pos, lexeme_start))


def _scan_string(quote_pos: Position, window: str, at_eof: bool):
    """Scan a whole string literal; the window starts at the opening quote
    (mid-literal refills rescan from the quote, literals are short)."""
    assert window[:1] == '"'
    out: list[str] = []
    pos = advance(quote_pos, '"')
    i = 1
    n = len(window)
    while i < n:
        ch = window[i]
        if ch == '"':
            end = advance(pos, '"')
            tok = Token("STRING", "".join(out), quote_pos, end)
            return Produced(tok, _default_at(end))
        if ch == "\\" and i + 1 >= n and not at_eof:
            break
        if ch == "\\" and i + 1 < n and window[i + 1] in ('"', "\\"):
            out.append(window[i + 1])
            pos = advance(pos, window[i : i + 2])
            i += 2
            continue
        out.append(ch)
        pos = advance(pos, ch)
        i += 1
    if not at_eof:
        return NeedRefill(LexState(MODE_STRING, 0, quote_pos, quote_pos))
    diag = Diagnostic("lex", "unterminated string", quote_pos, pos)
    return Failed(diag, _default_at(advance(quote_pos, '"')))


def _scan_token(pos: Position, window: str, i: int, at_eof: bool):
    n = len(window)
    ch = window[i]
    if ch in _IDENT_START or ch in _UIDENT_START:
        j = i + 1
        while j < n and window[j] in _IDENT_CONT:
            j += 1
        if j >= n and not at_eof:
            return NeedRefill(_default_at(pos))
        text = window[i:j]
        end = advance(pos, text)
        if text in KEYWORDS:
            return Produced(Token(KEYWORDS[text], None, pos, end), _default_at(end))
        kind = "UIDENT" if ch in _UIDENT_START else "IDENT"
        return Produced(Token(kind, text, pos, end), _default_at(end))
    if ch in _DIGITS:
        j = i + 1
        while j < n and window[j] in _DIGITS:
            j += 1
        if j >= n and not at_eof:
            return NeedRefill(_default_at(pos))
        text = window[i:j]
        end = advance(pos, text)
        return Produced(Token("INT", int(text), pos, end), _default_at(end))
    if ch == "'":
        j = i + 1
        while j < n and window[j] in _LOWER:
            j += 1
        if j >= n and not at_eof:
            return NeedRefill(_default_at(pos))
        if j == i + 1:
            return _illegal(pos, ch)
        text = window[i:j]
        end = advance(pos, text)
        return Produced(Token("TYVAR", text[1:], pos, end), _default_at(end))
    if ch == '"':
        return _scan_string(pos, window[i:], at_eof)
    if ch == "-":
        if i + 1 >= n and not at_eof:
            return NeedRefill(_default_at(pos))
        if i + 1 < n and window[i + 1] == ">":
            end = advance(pos, "->")
            return Produced(Token("ARROW", None, pos, end), _default_at(end))
        end = advance(pos, "-")
        return Produced(Token("MINUS", None, pos, end), _default_at(end))
    if ch == ";":
        if i + 1 >= n and not at_eof:
            return NeedRefill(_default_at(pos))
        if i + 1 < n and window[i + 1] == ";":
            end = advance(pos, ";;")
            return Produced(Token("SEMISEMI", None, pos, end), _default_at(end))
        return _illegal(pos, ch)
    simple = {"+": "PLUS", "*": "STAR", "<": "LT", "=": "EQUAL", "|": "BAR",
              ":": "COLON", "(": "LPAREN", ")": "RPAREN"}
    if ch in simple:
        end = advance(pos, ch)
        return Produced(Token(simple[ch], None, pos, end), _default_at(end))
    return _illegal(pos, ch)


def _illegal(pos: Position, ch: str) -> Failed:
    end = advance(pos, ch)
    diag = Diagnostic("lex", f"illegal character {ch!r}", pos, end)
    return Failed(diag, _default_at(end))


# ---------------------------------------------------------------------------
# Whole-buffer driving and incremental relexing


@dataclass(frozen=True)
class Edit:
    offset: int
    removed_len: int
    inserted_len: int


@dataclass(frozen=True)
class RelexStats:
    reused: int
    relexed: int


@dataclass(frozen=True)
class LexResult:
    buffer: str
    tokens: tuple[Token, ...]
    checkpoints: dict[int, LexState]  # byte offset -> restartable state
    diagnostics: tuple[Diagnostic, ...]


def lex_all(buffer: str) -> LexResult:
    """Drive lex_step over the whole buffer, recording a checkpoint at every
    token boundary.  All failures become diagnostics; never raises."""
    state = INITIAL_STATE
    checkpoints: dict[int, LexState] = {0: state}
    tokens: list[Token] = []
    diagnostics: list[Diagnostic] = []
    while True:
        out = lex_step(state, buffer[state.at.offset :], True)
        if isinstance(out, Produced):
            tokens.append(out.token)
            state = out.state
            checkpoints[state.at.offset] = state
        elif isinstance(out, Failed):
            diagnostics.append(out.diagnostic)
            state = out.state
            checkpoints[state.at.offset] = state
        elif isinstance(out, EndOfInput):
            return LexResult(buffer, tuple(tokens), checkpoints, tuple(diagnostics))
        else:
            raise AssertionError("refill requested with the whole buffer in view")


def relex(old: LexResult, new_buffer: str, edit: Edit) -> tuple[LexResult, RelexStats]:
    """Lex `new_buffer` (== old buffer with `edit` applied), reusing the old
    token stream outside the damaged region.  The result is structurally
    equal to lex_all(new_buffer), positions included."""
    if edit.removed_len == 0 and edit.inserted_len == 0:
        return old, RelexStats(reused=len(old.tokens), relexed=0)

    shift = edit.inserted_len - edit.removed_len
    cut = max((c for c in old.checkpoints if c < edit.offset), default=0)
    state = old.checkpoints[cut]
    table = LineTable(new_buffer)

    tokens: list[Token] = [t for t in old.tokens if t.end.offset <= cut]
    diagnostics: list[Diagnostic] = [d for d in old.diagnostics if d.end.offset <= cut]
    checkpoints: dict[int, LexState] = {c: st for c, st in old.checkpoints.items() if c <= cut}
    reused = len(tokens)
    relexed = 0
    edit_end_new = edit.offset + edit.inserted_len

    while True:
        if state.mode == MODE_DEFAULT and state.at.offset >= edit_end_new:
            old_off = state.at.offset - shift
            old_state = old.checkpoints.get(old_off)
            if old_state is not None and old_state.mode == MODE_DEFAULT and old_off > cut:
                for t in old.tokens:
                    if t.start.offset >= old_off:
                        tokens.append(
                            Token(
                                t.kind,
                                t.payload,
                                table.position(t.start.offset + shift),
                                table.position(t.end.offset + shift),
                            )
                        )
                        reused += 1
                for d in old.diagnostics:
                    if d.start.offset >= old_off:
                        diagnostics.append(
                            Diagnostic(
                                d.phase,
                                d.message,
                                table.position(d.start.offset + shift),
                                table.position(d.end.offset + shift),
                            )
                        )
                for c, st in old.checkpoints.items():
                    if c >= old_off:
                        pos = table.position(c + shift)
                        checkpoints[c + shift] = LexState(MODE_DEFAULT, 0, pos, pos)
                break
        out = lex_step(state, new_buffer[state.at.offset :], True)
        if isinstance(out, Produced):
            tokens.append(out.token)
            relexed += 1
            state = out.state
            checkpoints[state.at.offset] = state
        elif isinstance(out, Failed):
            diagnostics.append(out.diagnostic)
            state = out.state
            checkpoints[state.at.offset] = state
        elif isinstance(out, EndOfInput):
            break
        else:
            raise AssertionError("refill requested with the whole buffer in view")

    result = LexResult(new_buffer, tuple(tokens), checkpoints, tuple(diagnostics))
    return result, RelexStats(reused=reused, relexed=relexed)
