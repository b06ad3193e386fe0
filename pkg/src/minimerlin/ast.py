"""MiniML abstract syntax and the lowering from concrete parse trees.

Lowering is total: it accepts any complete tree the recovery produces.
Synthesized parse nodes become placeholder AST nodes (expressions),
wildcards (patterns) or empty lists (phrase and clause sequences), so a
type checker downstream never sees a hole it cannot handle.

A buffer is a sequence of phrases; `true`/`false` lex as plain lowercase
identifiers and are recognized here, as is the reserved `_hole`
identifier, which lowers to a placeholder so generated code typechecks
silently.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

from .parser import ConcreteTree
from .positions import Range

HOLE_NAME = "_hole"


@dataclass(frozen=True)
class Param:
    name: str
    range: Range


# --- surface type expressions (typedef arguments, let annotations) ---------

@dataclass(frozen=True)
class TyVarA:
    name: str
    range: Range


@dataclass(frozen=True)
class TyNameA:
    name: str
    arg: Optional["TypeExprA"]
    range: Range


@dataclass(frozen=True)
class TyArrowA:
    arg: "TypeExprA"
    result: "TypeExprA"
    range: Range


@dataclass(frozen=True)
class TyHoleA:
    range: Range


TypeExprA = Union[TyVarA, TyNameA, TyArrowA, TyHoleA]


# --- patterns ---------------------------------------------------------------

@dataclass(frozen=True)
class PWild:
    range: Range


@dataclass(frozen=True)
class PVar:
    name: str
    range: Range


@dataclass(frozen=True)
class PInt:
    value: int
    range: Range


@dataclass(frozen=True)
class PConstr:
    name: str  # bool literals appear as the constructors "true" / "false"
    args: tuple["Pattern", ...]
    range: Range
    name_range: Range


Pattern = Union[PWild, PVar, PInt, PConstr]


# --- expressions ------------------------------------------------------------

@dataclass(frozen=True)
class Var:
    name: str
    range: Range


@dataclass(frozen=True)
class IntLit:
    value: int
    range: Range


@dataclass(frozen=True)
class BoolLit:
    value: bool
    range: Range


@dataclass(frozen=True)
class StrLit:
    value: str
    range: Range


@dataclass(frozen=True)
class Fun:
    params: tuple[Param, ...]
    body: "Expr"
    range: Range


@dataclass(frozen=True)
class Apply:
    fn: "Expr"
    arg: "Expr"
    range: Range


@dataclass(frozen=True)
class BinOp:
    op: str  # one of + - * < =
    left: "Expr"
    right: "Expr"
    range: Range


@dataclass(frozen=True)
class If:
    cond: "Expr"
    then: "Expr"
    orelse: "Expr"
    range: Range


@dataclass(frozen=True)
class Clause:
    pattern: Pattern
    body: "Expr"
    range: Range


@dataclass(frozen=True)
class Match:
    scrutinee: "Expr"
    clauses: tuple[Clause, ...]
    range: Range


@dataclass(frozen=True)
class LetIn:
    name: str
    name_range: Range
    rec: bool
    params: tuple[Param, ...]
    annot: Optional[TypeExprA]
    value: "Expr"
    body: "Expr"
    range: Range


@dataclass(frozen=True)
class ConstrApply:
    name: str
    args: tuple["Expr", ...]
    range: Range
    name_range: Range


@dataclass(frozen=True)
class Placeholder:
    range: Range


Expr = Union[
    Var, IntLit, BoolLit, StrLit, Fun, Apply, BinOp, If, Match, LetIn,
    ConstrApply, Placeholder,
]


# --- phrases ----------------------------------------------------------------

@dataclass(frozen=True)
class LetDef:
    name: str
    name_range: Range
    rec: bool
    params: tuple[Param, ...]
    annot: Optional[TypeExprA]
    body: Expr
    range: Range


@dataclass(frozen=True)
class ConstrDecl:
    name: str
    args: tuple[TypeExprA, ...]
    range: Range


@dataclass(frozen=True)
class TypeDef:
    name: str
    name_range: Range
    param: Optional[str]  # at most one type parameter
    constructors: tuple[ConstrDecl, ...]
    range: Range


@dataclass(frozen=True)
class ModuleDef:
    name: str
    name_range: Range
    phrases: tuple["Phrase", ...]
    range: Range


@dataclass(frozen=True)
class ExprPhrase:
    expr: Expr
    range: Range


Phrase = Union[LetDef, TypeDef, ModuleDef, ExprPhrase]


@dataclass(frozen=True)
class Ast:
    source: str
    phrases: tuple[Phrase, ...]
    range: Range


# ---------------------------------------------------------------------------
# Lowering


def lower(tree: ConcreteTree, source: str = "") -> Ast:
    """Concrete tree (root symbol `program`) to abstract syntax.  Total for
    every complete tree, recovered ones included."""
    assert tree.symbol == "program", tree.symbol
    phrases = _phrases(tree.children[0]) if tree.children else ()
    return Ast(source, tuple(phrases), tree.range)


def _phrases(node: ConcreteTree) -> list[Phrase]:
    # phrases: ε | phrases phrase — walk the spine iteratively, buffers can
    # hold thousands of phrases.
    spine: list[ConcreteTree] = []
    while node.children:
        spine.append(node.children[1])
        node = node.children[0]
    out: list[Phrase] = []
    for item in reversed(spine):
        phrase = _phrase(item)
        if phrase is not None:
            out.append(phrase)
    return out


def _child(node: ConcreteTree, symbol: str) -> Optional[ConcreteTree]:
    for c in node.children:
        if c.symbol == symbol:
            return c
    return None


def _phrase(node: ConcreteTree) -> Optional[Phrase]:
    if node.synthesized and not node.children:
        return None
    inner = node.children[-1]
    if inner.symbol == "letdef":
        return _letdef(inner)
    if inner.symbol == "typedef":
        return _typedef(inner)
    if inner.symbol == "moduledef":
        return _moduledef(inner)
    if inner.symbol == "expr":
        return ExprPhrase(_expr(inner), node.range)
    return None


def _name_of(leaf: ConcreteTree) -> str:
    if leaf.synthesized or leaf.payload is None:
        return "_"
    return str(leaf.payload)


def _letdef(node: ConcreteTree) -> LetDef:
    # LET opt_rec IDENT params opt_annot EQUAL expr
    kw, opt_rec, name, params, annot, _eq, body = node.children
    return LetDef(
        name=_name_of(name),
        name_range=name.range,
        rec=bool(opt_rec.children),
        params=tuple(_params(params)),
        annot=_opt_annot(annot),
        body=_expr(body),
        range=node.range,
    )


def _params(node: ConcreteTree) -> list[Param]:
    out: list[Param] = []
    while len(node.children) == 2:
        ident = node.children[1]
        out.append(Param(_name_of(ident), ident.range))
        node = node.children[0]
    out.reverse()
    return out


def _params_ne(node: ConcreteTree) -> list[Param]:
    if node.synthesized and not node.children:
        return [Param("_", node.range)]
    out: list[Param] = []
    while len(node.children) == 2:
        ident = node.children[1]
        out.append(Param(_name_of(ident), ident.range))
        node = node.children[0]
    ident = node.children[0]
    out.append(Param(_name_of(ident), ident.range))
    out.reverse()
    return out


def _opt_annot(node: ConcreteTree) -> Optional[TypeExprA]:
    if not node.children:
        return None
    return _type_expr(node.children[1])


def _type_expr(node: ConcreteTree) -> TypeExprA:
    if node.synthesized and not node.children:
        return TyHoleA(node.range)
    if len(node.children) == 1:
        return _type_app(node.children[0])
    left, _arrow, right = node.children
    return TyArrowA(_type_app(left), _type_expr(right), node.range)


def _type_app(node: ConcreteTree) -> TypeExprA:
    if node.synthesized and not node.children:
        return TyHoleA(node.range)
    if len(node.children) == 1:
        return _type_atom(node.children[0])
    inner, name = node.children
    return TyNameA(_name_of(name), _type_app(inner), node.range)


def _type_atom(node: ConcreteTree) -> TypeExprA:
    if node.synthesized and not node.children:
        return TyHoleA(node.range)
    first = node.children[0]
    if first.symbol == "TYVAR":
        return TyVarA(_name_of(first), node.range)
    if first.symbol == "IDENT":
        return TyNameA(_name_of(first), None, node.range)
    return _type_expr(node.children[1])


def _typedef(node: ConcreteTree) -> TypeDef:
    # TYPE opt_tyvar IDENT EQUAL constr_decls
    _kw, opt_tyvar, name, _eq, decls = node.children
    param = None
    if opt_tyvar.children:
        param = _name_of(opt_tyvar.children[0])
    return TypeDef(
        name=_name_of(name),
        name_range=name.range,
        param=param,
        constructors=tuple(_constr_decls(decls)),
        range=node.range,
    )


def _constr_decls(node: ConcreteTree) -> list[ConstrDecl]:
    if node.synthesized and not node.children:
        return []
    out: list[ConstrDecl] = []
    while node.children[0].symbol == "constr_decls":
        out.append(_constr_decl(node.children[2]))
        node = node.children[0]
    kids = node.children
    out.append(_constr_decl(kids[1] if kids[0].symbol == "BAR" else kids[0]))
    out.reverse()
    return out


def _constr_decl(node: ConcreteTree) -> ConstrDecl:
    name = node.children[0]
    args: list[TypeExprA] = []
    if len(node.children) == 3:
        args = _of_args(node.children[2])
    return ConstrDecl(_name_of(name), tuple(args), node.range)


def _of_args(node: ConcreteTree) -> list[TypeExprA]:
    if node.synthesized and not node.children:
        return [TyHoleA(node.range)]
    out: list[TypeExprA] = []
    while len(node.children) == 3:
        out.append(_type_expr(node.children[2]))
        node = node.children[0]
    out.append(_type_expr(node.children[0]))
    out.reverse()
    return out


def _moduledef(node: ConcreteTree) -> ModuleDef:
    # MODULE UIDENT EQUAL STRUCT phrases END
    _kw, name, _eq, _struct, phrases, _end = node.children
    return ModuleDef(
        name=_name_of(name),
        name_range=name.range,
        phrases=tuple(_phrases(phrases)),
        range=node.range,
    )


_BINOPS = {"PLUS": "+", "MINUS": "-", "STAR": "*", "LT": "<", "EQUAL": "="}


def _expr(node: ConcreteTree) -> Expr:
    if node.synthesized and not node.children:
        return Placeholder(node.range)
    kids = node.children
    head = kids[0].symbol
    if head == "app_expr":
        return _app_expr(kids[0])
    if head == "expr":
        op = _BINOPS[kids[1].symbol]
        return BinOp(op, _expr(kids[0]), _expr(kids[2]), node.range)
    if head == "FUN":
        return Fun(tuple(_params_ne(kids[1])), _expr(kids[3]), node.range)
    if head == "IF":
        return If(_expr(kids[1]), _expr(kids[3]), _expr(kids[5]), node.range)
    if head == "MATCH":
        return Match(_expr(kids[1]), tuple(_clauses(kids[3])), node.range)
    if head == "LET":
        _kw, opt_rec, name, params, annot, _eq, value, _in, body = kids
        return LetIn(
            name=_name_of(name),
            name_range=name.range,
            rec=bool(opt_rec.children),
            params=tuple(_params(params)),
            annot=_opt_annot(annot),
            value=_expr(value),
            body=_expr(body),
            range=node.range,
        )
    raise AssertionError(f"unhandled expr shape {head}")


def _app_expr(node: ConcreteTree) -> Expr:
    if node.synthesized and not node.children:
        return Placeholder(node.range)
    spine = _spine(node)
    head, rest = spine[0], spine[1:]
    if head.symbol == "atom" and not head.synthesized and head.children and head.children[0].symbol == "UIDENT":
        uid = head.children[0]
        args = tuple(_atom(a) for a in rest)
        rng = (head.range[0], spine[-1].range[1])
        return ConstrApply(_name_of(uid), args, rng, uid.range)
    out = _atom(head)
    for a in rest:
        out = Apply(out, _atom(a), (node.range[0], a.range[1]))
    return out


def _spine(node: ConcreteTree) -> list[ConcreteTree]:
    # app_expr: atom | app_expr atom
    out: list[ConcreteTree] = []
    while len(node.children) == 2:
        out.append(node.children[1])
        node = node.children[0]
    out.append(node.children[0])
    out.reverse()
    return out


def _atom(node: ConcreteTree) -> Expr:
    if node.synthesized and not node.children:
        return Placeholder(node.range)
    first = node.children[0]
    if first.symbol == "INT":
        value = first.payload if isinstance(first.payload, int) else 0
        return IntLit(value, node.range)
    if first.symbol == "STRING":
        return StrLit(str(first.payload or ""), node.range)
    if first.symbol == "IDENT":
        name = _name_of(first)
        if name == "true":
            return BoolLit(True, node.range)
        if name == "false":
            return BoolLit(False, node.range)
        if name == HOLE_NAME:
            return Placeholder(node.range)
        return Var(name, node.range)
    if first.symbol == "UIDENT":
        return ConstrApply(_name_of(first), (), node.range, first.range)
    return _expr(node.children[1])


def _clauses(node: ConcreteTree) -> list[Clause]:
    if node.synthesized and not node.children:
        return []
    out: list[Clause] = []
    while node.children[0].symbol == "clauses":
        out.append(_clause(node.children[2]))
        node = node.children[0]
    kids = node.children
    out.append(_clause(kids[1] if kids[0].symbol == "BAR" else kids[0]))
    out.reverse()
    return out


def _clause(node: ConcreteTree) -> Clause:
    pattern, _arrow, body = node.children
    return Clause(_pattern(pattern), _expr(body), node.range)


def _pattern(node: ConcreteTree) -> Pattern:
    if node.synthesized and not node.children:
        return PWild(node.range)
    kids = node.children
    if kids[0].symbol == "pattern_atom":
        return _pattern_atom(kids[0])
    uid = kids[0]
    args = tuple(_pattern_args(kids[1]))
    return PConstr(_name_of(uid), args, node.range, uid.range)


def _pattern_args(node: ConcreteTree) -> list[Pattern]:
    if node.synthesized and not node.children:
        return [PWild(node.range)]
    out: list[Pattern] = []
    while len(node.children) == 2:
        out.append(_pattern_atom(node.children[1]))
        node = node.children[0]
    out.append(_pattern_atom(node.children[0]))
    out.reverse()
    return out


def _pattern_atom(node: ConcreteTree) -> Pattern:
    if node.synthesized and not node.children:
        return PWild(node.range)
    first = node.children[0]
    if first.symbol == "IDENT":
        name = _name_of(first)
        if name == "_" or first.synthesized:
            return PWild(node.range)
        if name in ("true", "false"):
            return PConstr(name, (), node.range, first.range)
        return PVar(name, node.range)
    if first.symbol == "INT":
        value = first.payload if isinstance(first.payload, int) else 0
        return PInt(value, node.range)
    if first.symbol == "UIDENT":
        return PConstr(_name_of(first), (), node.range, first.range)
    return _pattern(node.children[1])


def iter_exprs(e: Expr):
    """Preorder walk of an expression and its descendants."""
    yield e
    if isinstance(e, Fun):
        yield from iter_exprs(e.body)
    elif isinstance(e, Apply):
        yield from iter_exprs(e.fn)
        yield from iter_exprs(e.arg)
    elif isinstance(e, BinOp):
        yield from iter_exprs(e.left)
        yield from iter_exprs(e.right)
    elif isinstance(e, If):
        yield from iter_exprs(e.cond)
        yield from iter_exprs(e.then)
        yield from iter_exprs(e.orelse)
    elif isinstance(e, Match):
        yield from iter_exprs(e.scrutinee)
        for clause in e.clauses:
            yield from iter_exprs(clause.body)
    elif isinstance(e, LetIn):
        yield from iter_exprs(e.value)
        yield from iter_exprs(e.body)
    elif isinstance(e, ConstrApply):
        for a in e.args:
            yield from iter_exprs(a)
