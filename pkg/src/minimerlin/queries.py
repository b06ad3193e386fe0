"""Language-server features over one immutable Analysis.

Every query is a pure function of (buffer, prelude, arguments); repeated
invocations return identical results, and queries may run concurrently on
the same analysis.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional, Union

from . import analysis as AN
from . import ast as A
from .positions import Diagnostic, Position, Range
from .typer import (
    EnumerationError,
    Mismatch,
    Scheme,
    Subst,
    TCon,
    TNamed,
    TVar,
    TypeEnv,
    TypedNode,
    Type,
    ValueInfo,
    free_vars,
    missing_cases,
    print_scheme,
    print_type,
    unify,
)


class QueryError(Exception):
    """User-level failure of a query (bad position, unsupported target...)."""


@dataclass(frozen=True)
class Enclosing:
    start: Position
    end: Position
    type_text: str
    tail: str = "no"  # tail-call analysis is out of scope; constant for envelope fidelity


@dataclass(frozen=True)
class CompletionEntry:
    name: str
    type_text: str
    kind: str  # value | constructor | module
    rank: int


@dataclass(frozen=True)
class Builtin:
    name: str


@dataclass(frozen=True)
class NotFound:
    pass


@dataclass(frozen=True)
class TextEdit:
    start: Position
    end: Position
    text: str


# ---------------------------------------------------------------------------
# type-enclosing


def _contains(rng: Range, pos: Position) -> bool:
    return rng[0].offset <= pos.offset < rng[1].offset


def _covers(rng: Range, pos: Position) -> bool:
    # Scope queries treat a position at the very end of a construct as inside
    # it: the cursor after `let f x = x +` sits in f's body.
    return rng[0].offset <= pos.offset <= rng[1].offset


def _enclosing_nodes(a: AN.Analysis, pos: Position) -> list[TypedNode]:
    """Typed nodes containing pos, innermost first, ranges strictly nesting."""
    hits: list[tuple[int, int, TypedNode]] = []

    def walk(node: TypedNode, depth: int) -> None:
        if _contains(node.range, pos):
            if not isinstance(node.node, (A.ExprPhrase, A.Clause)):
                length = node.range[1].offset - node.range[0].offset
                hits.append((length, -depth, node))
        for c in node.children:
            walk(c, depth + 1)

    for phrase in a.typed.phrases:
        walk(phrase, 0)
    hits.sort(key=lambda h: (h[0], h[1]))
    chain: list[TypedNode] = []
    for _length, _d, node in hits:
        if chain and node.range == chain[-1].range:
            continue
        chain.append(node)
    return chain


def _render_typedef(env: TypeEnv, name: str) -> Optional[str]:
    info = env.types.get(name)
    if info is None:
        return None
    names = {info.param_id: "a"} if info.param_id is not None else {}
    parts = []
    for cname in info.constructors:
        c = env.constructors[cname]
        if c.args:
            args = " * ".join(_print_with(t, dict(names)) for t in c.args)
            parts.append(f"{cname} of {args}")
        else:
            parts.append(cname)
    param = "'a " if info.param_id is not None else ""
    return f"type {param}{name} = " + " | ".join(parts)


def _print_with(t: Type, names: dict[int, str]) -> str:
    from .typer import _print, _var_names

    _var_names(t, names)
    return _print(t, names)


def _display_scheme(t: Type) -> str:
    # Rendering quantifies nothing explicitly; the letters already read as
    # "the type this expression would have" in a fresh environment.
    return print_type(t)


def _node_type_text(a: AN.Analysis, node: TypedNode, verbosity: int) -> str:
    ast_node = node.node
    if isinstance(ast_node, A.TypeDef):
        rendered = _render_typedef(a.global_env, ast_node.name)
        return rendered or f"type {ast_node.name}"
    if isinstance(ast_node, A.ModuleDef):
        return f"(module {ast_node.name})"
    if isinstance(ast_node, (A.LetDef, A.LetIn)) and node.generalized is not None:
        base = print_scheme(node.generalized)
    elif (node.fake or isinstance(node.type, TVar)) and node.generalized is not None:
        base = print_scheme(node.generalized)
    else:
        base = _display_scheme(node.type)
    if verbosity >= 1:
        head = node.type
        if isinstance(ast_node, (A.LetDef, A.LetIn)) and node.generalized is not None:
            head = node.generalized.body
        if isinstance(head, TNamed):
            rendered = _render_typedef(a.global_env, head.name)
            if rendered is not None:
                return rendered
    return base


def type_enclosing(
    a: AN.Analysis, pos: Position, index: int = 0, verbosity: int = 0
) -> list[Enclosing]:
    """Innermost-to-outermost chain of typed nodes around pos.  Verbosity 1
    expands a named type one definition level; deeper levels behave the same."""
    chain = _enclosing_nodes(a, pos)
    out = [
        Enclosing(n.range[0], n.range[1], _node_type_text(a, n, verbosity))
        for n in chain
    ]
    return out[index:]


# ---------------------------------------------------------------------------
# errors


def errors(a: AN.Analysis) -> list[Diagnostic]:
    """All diagnostics, merged across phases and sorted by position."""
    return list(a.diagnostics)


# ---------------------------------------------------------------------------
# scope machinery shared by completion, locate and type-expression


@dataclass(frozen=True)
class _LocalBinding:
    name: str
    def_range: Range
    type_text: str
    scheme: Optional[Scheme]


def _phrase_env_at(a: AN.Analysis, pos: Position) -> TypeEnv:
    env = a.prelude
    for i, phrase in enumerate(a.ast.phrases):
        if phrase.range[0].offset > pos.offset:
            break
        env = a.env_before[i] if _covers(phrase.range, pos) else _env_after(a, i)
    return env


def _env_after(a: AN.Analysis, i: int) -> TypeEnv:
    # env_before of the next phrase equals env_after of this one; the last
    # phrase's successor is the buffer's global environment.
    return a.env_before[i + 1] if i + 1 < len(a.env_before) else a.global_env


def _locals_at(a: AN.Analysis, pos: Position) -> dict[str, _LocalBinding]:
    """Binders whose scope covers pos: function parameters, let-in names,
    pattern variables, bindings of an enclosing module body."""
    out: dict[str, _LocalBinding] = {}

    def arrow_params(t: Type, n: int) -> list[Type]:
        from .typer import TArrow

        ts = []
        cur = t
        for _ in range(n):
            if isinstance(cur, TArrow):
                ts.append(cur.arg)
                cur = cur.result
            else:
                ts.append(TVar(-1))
        return ts

    def bind(name: str, rng: Range, t: Optional[Type], scheme: Optional[Scheme]) -> None:
        if scheme is None and t is not None:
            scheme = Scheme((), t)
        text = print_scheme(scheme) if scheme is not None else "'a"
        out[name] = _LocalBinding(name, rng, text, scheme)

    def walk(node: TypedNode) -> None:
        ast_node = node.node
        if not _covers(node.range, pos):
            return
        if isinstance(ast_node, A.LetDef):
            body = node.children[0]
            if _covers(body.range, pos) or pos.offset >= body.range[0].offset:
                for p, t in zip(ast_node.params, arrow_params(node.type, len(ast_node.params))):
                    bind(p.name, p.range, t, None)
                if ast_node.rec:
                    bind(ast_node.name, ast_node.name_range, None, node.generalized)
        if isinstance(ast_node, A.Fun):
            for p, t in zip(ast_node.params, arrow_params(node.type, len(ast_node.params))):
                bind(p.name, p.range, t, None)
        if isinstance(ast_node, A.LetIn):
            value, body = node.children
            if _covers(body.range, pos):
                bind(ast_node.name, ast_node.name_range, None, node.generalized)
            if _covers(value.range, pos):
                for p in ast_node.params:
                    bind(p.name, p.range, None, None)
                if ast_node.rec:
                    bind(ast_node.name, ast_node.name_range, None, None)
        if isinstance(ast_node, A.Clause):
            pat, body = node.children
            if _covers(body.range, pos):
                for pnode in pat.walk():
                    if isinstance(pnode.node, A.PVar):
                        bind(pnode.node.name, pnode.node.range, pnode.type, None)
        if isinstance(ast_node, A.ModuleDef):
            for sub_ast, sub_typed in zip(ast_node.phrases, node.children):
                if sub_ast.range[1].offset <= pos.offset and isinstance(sub_ast, A.LetDef):
                    bind(sub_ast.name, sub_ast.name_range, None, sub_typed.generalized)
        for c in node.children:
            walk(c)

    for phrase in a.typed.phrases:
        walk(phrase)
    return out


# ---------------------------------------------------------------------------
# complete-prefix


_FRESH_BASE = 1_000_000_000


def _expected_type_at(a: AN.Analysis, pos: Position) -> Optional[Type]:
    """Infer what type a new expression at pos should have by splicing a
    placeholder identifier into the buffer and re-analyzing."""
    o = pos.offset
    probe = f" {A.HOLE_NAME} "
    buf = a.buffer[:o] + probe + a.buffer[o:]
    probed, _state = AN.build(buf, previous=None, prelude_env=a.prelude)
    for node in probed.typed.walk():
        if isinstance(node.node, A.Placeholder):
            start = node.node.range[0].offset
            if o <= start <= o + len(probe):
                return node.type
    return None


def complete_prefix(a: AN.Analysis, pos: Position, prefix: str) -> list[CompletionEntry]:
    """Names in scope at pos starting with the prefix.  Entries whose type
    unifies with the expected type at the cursor rank first, ties
    alphabetical."""
    env = _phrase_env_at(a, pos)
    locals_ = _locals_at(a, pos)
    expected = _expected_type_at(a, pos)
    counter = itertools.count(_FRESH_BASE)

    def rank(scheme: Optional[Scheme]) -> int:
        if expected is None:
            return 0
        if scheme is None:
            return 1
        from .typer import _instantiate

        mapping = {vid: TVar(next(counter)) for vid in scheme.vars}
        candidate = _instantiate(scheme.body, mapping)
        return 1 if isinstance(unify(candidate, expected, Subst()), Mismatch) else 0

    entries: dict[str, CompletionEntry] = {}
    for name, info in env.values.items():
        if name.startswith(prefix):
            entries[name] = CompletionEntry(
                name, print_scheme(info.scheme), "value", rank(info.scheme)
            )
    for name, cinfo in env.constructors.items():
        if name.startswith(prefix):
            scheme = _constructor_scheme(cinfo)
            entries[name] = CompletionEntry(
                name, print_scheme(scheme), "constructor", rank(scheme)
            )
    for name in env.modules:
        if name.startswith(prefix):
            entries[name] = CompletionEntry(name, "(module)", "module", 1 if expected else 0)
    for name, binding in locals_.items():
        if name.startswith(prefix):
            entries[name] = CompletionEntry(name, binding.type_text, "value", rank(binding.scheme))
    return sorted(entries.values(), key=lambda e: (e.rank, e.name))


def _constructor_scheme(cinfo) -> Scheme:
    from .typer import TArrow

    result: Type = TNamed(
        cinfo.owner, (TVar(cinfo.param_id),) if cinfo.param_id is not None else ()
    )
    t: Type = result
    for arg in reversed(cinfo.args):
        t = TArrow(arg, t)
    return Scheme(tuple(sorted(free_vars(t))), t)


# ---------------------------------------------------------------------------
# locate


def _token_at(a: AN.Analysis, pos: Position):
    for tok in a.tokens:
        if tok.start.offset <= pos.offset < tok.end.offset:
            return tok
    return None


def locate(a: AN.Analysis, pos: Position) -> Union[Position, Builtin, NotFound]:
    """Definition site of the name under pos: binding occurrence in the
    buffer, or Builtin for prelude names, respecting shadowing."""
    tok = _token_at(a, pos)
    if tok is None or tok.kind not in ("IDENT", "UIDENT"):
        return NotFound()
    name = str(tok.payload)
    if tok.kind == "UIDENT":
        env = _phrase_env_at(a, pos)
        # Uppercase head: constructor or module namespace.
        for phrase in a.ast.phrases:
            if isinstance(phrase, A.ModuleDef) and phrase.name == name:
                if phrase.name_range[0].offset <= pos.offset:
                    return phrase.name_range[0]
        cinfo = env.constructors.get(name)
        if cinfo is None:
            return NotFound()
        if cinfo.builtin:
            return Builtin(name)
        return cinfo.def_pos if cinfo.def_pos is not None else NotFound()
    # Value namespace: innermost local binder wins, then phrase-level
    # definitions, then the prelude.
    locals_ = _locals_at(a, pos)
    if name in locals_:
        return locals_[name].def_range[0]
    # The occurrence may itself be the binding occurrence.
    binder = _binder_at(a, pos, name)
    if binder is not None:
        return binder
    env = _phrase_env_at(a, pos)
    info = env.values.get(name)
    if info is None:
        return NotFound()
    if info.builtin:
        return Builtin(name)
    return info.def_pos if info.def_pos is not None else NotFound()


def _binder_at(a: AN.Analysis, pos: Position, name: str) -> Optional[Position]:
    for node in a.typed.walk():
        ast_node = node.node
        candidates: list[tuple[str, Range]] = []
        if isinstance(ast_node, (A.LetDef, A.LetIn)):
            candidates.append((ast_node.name, ast_node.name_range))
            candidates.extend((p.name, p.range) for p in ast_node.params)
        elif isinstance(ast_node, A.Fun):
            candidates.extend((p.name, p.range) for p in ast_node.params)
        elif isinstance(ast_node, A.PVar):
            candidates.append((ast_node.name, ast_node.range))
        for n, rng in candidates:
            if n == name and _contains(rng, pos):
                return rng[0]
    return None


# ---------------------------------------------------------------------------
# destruct


def _pattern_text(p: A.Pattern) -> str:
    if isinstance(p, A.PWild):
        return "_"
    if isinstance(p, A.PVar):
        return p.name
    if isinstance(p, A.PInt):
        return str(p.value)
    assert isinstance(p, A.PConstr)
    if not p.args:
        return p.name
    args = " ".join(
        f"({_pattern_text(x)})" if isinstance(x, A.PConstr) and x.args else _pattern_text(x)
        for x in p.args
    )
    return f"{p.name} {args}"


def _resolved_scrutinee_type(a: AN.Analysis, node: TypedNode) -> Type:
    return node.type


def destruct(a: AN.Analysis, start: Position, end: Position) -> TextEdit:
    """Generate pattern-matching clauses: wrap an expression of enumerable
    type in a full match, append the missing clauses of a partial match, or
    expand a catch-all pattern into the cases it stood for."""
    env = a.global_env
    target = None
    for node in a.typed.walk():
        rng = node.range
        if rng[0].offset <= start.offset and end.offset <= rng[1].offset:
            if target is None or (
                rng[1].offset - rng[0].offset
                < target.range[1].offset - target.range[0].offset
            ):
                if isinstance(node.node, (A.Match, A.PWild, A.PVar)) or _is_expr(node.node):
                    target = node
    if target is None:
        raise QueryError("nothing to destruct here")

    ast_node = target.node
    if isinstance(ast_node, (A.PWild, A.PVar)):
        return _destruct_catchall(a, env, ast_node)
    if isinstance(ast_node, A.Match):
        return _destruct_match(a, env, target)
    return _destruct_expr(a, env, target)


def _is_expr(node) -> bool:
    return isinstance(
        node,
        (
            A.Var, A.IntLit, A.BoolLit, A.StrLit, A.Fun, A.Apply, A.BinOp,
            A.If, A.Match, A.LetIn, A.ConstrApply, A.Placeholder,
        ),
    )


def _source(a: AN.Analysis, rng: Range) -> str:
    return a.buffer[rng[0].offset : rng[1].offset]


def _witnesses(env: TypeEnv, clauses: list[A.Pattern], t: Type) -> list[A.Pattern]:
    try:
        return missing_cases(clauses, t, env)
    except EnumerationError as exc:
        raise QueryError(str(exc)) from exc


def _destruct_expr(a: AN.Analysis, env: TypeEnv, node: TypedNode) -> TextEdit:
    cases = _witnesses(env, [], node.type)
    if not cases:
        raise QueryError(f"cannot destruct a value of type {print_type(node.type)}")
    body = " ".join(f"| {_pattern_text(w)} -> {A.HOLE_NAME}" for w in cases)
    text = f"match {_source(a, node.range)} with {body}"
    return TextEdit(node.range[0], node.range[1], text)


def _destruct_match(a: AN.Analysis, env: TypeEnv, node: TypedNode) -> TextEdit:
    ast_node = node.node
    assert isinstance(ast_node, A.Match)
    scrut_type = node.children[0].type
    clauses = [c.pattern for c in ast_node.clauses]
    cases = _witnesses(env, clauses, scrut_type)
    if not cases:
        raise QueryError("match is already exhaustive")
    appended = "".join(f" | {_pattern_text(w)} -> {A.HOLE_NAME}" for w in cases)
    return TextEdit(node.range[0], node.range[1], _source(a, node.range) + appended)


def _destruct_catchall(a: AN.Analysis, env: TypeEnv, pattern) -> TextEdit:
    # Find the clause owning this top-level pattern and the match around it.
    for node in a.typed.walk():
        if isinstance(node.node, A.Match):
            ast_match = node.node
            for ci, clause in enumerate(ast_match.clauses):
                if clause.pattern is pattern:
                    scrut_type = node.children[0].type
                    prior = [c.pattern for c in ast_match.clauses[:ci]]
                    cases = _witnesses(env, prior, scrut_type)
                    if not cases:
                        raise QueryError("this pattern matches no remaining case")
                    body_src = _source(a, clause.body.range)
                    text = " | ".join(f"{_pattern_text(w)} -> {body_src}" for w in cases)
                    return TextEdit(clause.range[0], clause.range[1], text)
    raise QueryError("catch-all pattern is not a clause of a match")


# ---------------------------------------------------------------------------
# type-expression


def type_expression(a: AN.Analysis, text: str, pos: Position) -> str:
    """Type the given expression text as if written at pos, without touching
    the buffer.  Parse failures are reported with text-relative positions."""
    from .lexer import lex_all
    from .parser import Result as PResult
    from .parser import end_token, parse_prefix
    from . import miniml as ML
    from .ast import _expr as lower_expr
    from .typer import infer_phrase

    tables, _plan = ML.tables()
    lx = lex_all(text)
    from .positions import LineTable

    eof = LineTable(text).position(len(text))
    cp, _cache = parse_prefix(tables, list(lx.tokens) + [end_token(eof)], "expr")
    if not isinstance(cp, PResult):
        from .parser import SyntaxErrorPoint

        assert isinstance(cp, SyntaxErrorPoint)
        raise QueryError(
            f"parse error in expression at {cp.position.line}:{cp.position.col}"
        )
    expr = lower_expr(cp.tree)
    env = _phrase_env_at(a, pos)
    for name, binding in _locals_at(a, pos).items():
        scheme = binding.scheme or Scheme((), TVar(_FRESH_BASE))
        env = env.bind_value(name, ValueInfo(scheme, binding.def_range[0]))
    phrase = A.ExprPhrase(expr, expr.range)
    typed, _env2, _diags = infer_phrase(env, phrase)
    return print_type(typed.type)


# ---------------------------------------------------------------------------
# polarity search


_BASE_HEADS = {"int", "bool", "string"}


def polarity_search(a: AN.Analysis, query: str) -> list[CompletionEntry]:
    """Find environment entries whose type mentions each queried head at the
    requested polarity (negative flips left of arrows; named-type arguments
    are covariant)."""
    wanted: list[tuple[str, int]] = []
    for part in query.split():
        if part[:1] not in "+-" or len(part) < 2:
            raise QueryError(f"bad polarity query item {part!r} (use +name or -name)")
        head = part[1:]
        if head not in _BASE_HEADS and head not in a.global_env.types:
            raise QueryError(f"unknown type head {head!r}")
        wanted.append((head, 1 if part[0] == "+" else -1))
    if not wanted:
        raise QueryError("empty polarity query")

    def occurrences(t: Type, pol: int, acc: set[tuple[str, int]]) -> None:
        from .typer import TArrow

        if isinstance(t, TArrow):
            occurrences(t.arg, -pol, acc)
            occurrences(t.result, pol, acc)
        elif isinstance(t, TNamed):
            acc.add((t.name, pol))
            for arg in t.args:
                occurrences(arg, pol, acc)
        elif isinstance(t, TCon):
            acc.add((t.name, pol))

    out: list[CompletionEntry] = []
    env = a.global_env
    seen: set[str] = set()
    for name, info in env.values.items():
        occ: set[tuple[str, int]] = set()
        occurrences(info.scheme.body, 1, occ)
        if all(w in occ for w in wanted):
            out.append(CompletionEntry(name, print_scheme(info.scheme), "value", 0))
            seen.add(name)
    for name, cinfo in env.constructors.items():
        scheme = _constructor_scheme(cinfo)
        occ = set()
        occurrences(scheme.body, 1, occ)
        if all(w in occ for w in wanted) and name not in seen:
            out.append(CompletionEntry(name, print_scheme(scheme), "constructor", 0))
    return sorted(out, key=lambda e: e.name)
