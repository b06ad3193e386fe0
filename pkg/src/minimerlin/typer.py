"""Recovery-hardened Hindley–Milner inference for MiniML.

Inference is algorithm-W shaped but never gives up: a failed unification
logs a diagnostic, marks the offending node `fake` with the type its
context expected, keeps the already-typed children, and carries on.  An
unknown identifier or constructor costs a diagnostic and a fresh type
variable — the program might be correct in a future extension of the
environment.  Placeholder nodes (synthesized by parse recovery) get fresh
variables silently.

Substitutions are pure values, so abandoning the work of a failed branch
is just not using its substitution; there is no mutable unification state
to roll back.

Typing a buffer is memoized per toplevel phrase: a phrase whose source
text is unchanged, after an unchanged prefix of phrases, reuses its typed
tree and environment snapshot with positions re-attached.
"""
from __future__ import annotations

import hashlib
import itertools
from dataclasses import dataclass, field, replace
from typing import Iterable, Optional, Union

from . import ast as A
from .positions import Diagnostic, Position, Range

# ---------------------------------------------------------------------------
# Types, schemes, substitutions


@dataclass(frozen=True)
class TVar:
    id: int


@dataclass(frozen=True)
class TCon:
    name: str  # int | bool | string


@dataclass(frozen=True)
class TArrow:
    arg: "Type"
    result: "Type"


@dataclass(frozen=True)
class TNamed:
    name: str
    args: tuple["Type", ...]  # at most one


Type = Union[TVar, TCon, TArrow, TNamed]

T_INT = TCon("int")
T_BOOL = TCon("bool")
T_STRING = TCon("string")


@dataclass(frozen=True)
class Scheme:
    vars: tuple[int, ...]
    body: Type


@dataclass(frozen=True)
class Mismatch:
    left: Type
    right: Type
    occurs: bool = False


class Subst:
    """Idempotent substitution: no entry maps a variable to a type containing
    any variable of the domain."""

    __slots__ = ("mapping",)

    def __init__(self, mapping: Optional[dict[int, Type]] = None):
        self.mapping: dict[int, Type] = mapping or {}

    def apply(self, t: Type) -> Type:
        if isinstance(t, TVar):
            return self.mapping.get(t.id, t)
        if isinstance(t, TArrow):
            return TArrow(self.apply(t.arg), self.apply(t.result))
        if isinstance(t, TNamed):
            return TNamed(t.name, tuple(self.apply(a) for a in t.args))
        return t

    def apply_scheme(self, s: Scheme) -> Scheme:
        # Quantified variables are never in the domain (fresh ids).
        return Scheme(s.vars, self.apply(s.body))

    def bind(self, vid: int, t: Type) -> "Subst":
        updated = {
            k: _replace_var(v, vid, t) for k, v in self.mapping.items()
        }
        updated[vid] = t
        return Subst(updated)


def _replace_var(t: Type, vid: int, repl: Type) -> Type:
    if isinstance(t, TVar):
        return repl if t.id == vid else t
    if isinstance(t, TArrow):
        return TArrow(_replace_var(t.arg, vid, repl), _replace_var(t.result, vid, repl))
    if isinstance(t, TNamed):
        return TNamed(t.name, tuple(_replace_var(a, vid, repl) for a in t.args))
    return t


EMPTY_SUBST = Subst()


def free_vars(t: Type) -> set[int]:
    if isinstance(t, TVar):
        return {t.id}
    if isinstance(t, TArrow):
        return free_vars(t.arg) | free_vars(t.result)
    if isinstance(t, TNamed):
        out: set[int] = set()
        for a in t.args:
            out |= free_vars(a)
        return out
    return set()


def occurs(vid: int, t: Type) -> bool:
    return vid in free_vars(t)


def unify(a: Type, b: Type, s: Subst) -> Union[Subst, Mismatch]:
    """Most general unifier extending `s`; a Mismatch carries the resolved
    conflicting types (occurs-check failures included)."""
    a = s.apply(a)
    b = s.apply(b)
    if isinstance(a, TVar) and isinstance(b, TVar) and a.id == b.id:
        return s
    if isinstance(a, TVar):
        if occurs(a.id, b):
            return Mismatch(a, b, occurs=True)
        return s.bind(a.id, b)
    if isinstance(b, TVar):
        if occurs(b.id, a):
            return Mismatch(b, a, occurs=True)
        return s.bind(b.id, a)
    if isinstance(a, TCon) and isinstance(b, TCon) and a.name == b.name:
        return s
    if isinstance(a, TArrow) and isinstance(b, TArrow):
        s1 = unify(a.arg, b.arg, s)
        if isinstance(s1, Mismatch):
            return s1
        return unify(a.result, b.result, s1)
    if isinstance(a, TNamed) and isinstance(b, TNamed) and a.name == b.name and len(a.args) == len(b.args):
        cur = s
        for x, y in zip(a.args, b.args):
            cur = unify(x, y, cur)
            if isinstance(cur, Mismatch):
                return cur
        return cur
    return Mismatch(a, b)


# ---------------------------------------------------------------------------
# Environments


@dataclass(frozen=True)
class ValueInfo:
    scheme: Scheme
    def_pos: Optional[Position]
    builtin: bool = False
    kind: str = "value"  # value | constructor | module (for completion entries)


@dataclass(frozen=True)
class ConstrInfo:
    name: str
    owner: str
    param_id: Optional[int]
    args: tuple[Type, ...]
    def_pos: Optional[Position]
    builtin: bool = False


@dataclass(frozen=True)
class TypeDefInfo:
    name: str
    param_id: Optional[int]
    constructors: tuple[str, ...]
    def_pos: Optional[Position]
    builtin: bool = False


@dataclass(frozen=True)
class TypeEnv:
    values: dict[str, ValueInfo]
    types: dict[str, TypeDefInfo]
    constructors: dict[str, ConstrInfo]
    modules: dict[str, Optional[Position]]

    def bind_value(self, name: str, info: ValueInfo) -> "TypeEnv":
        return replace(self, values={**self.values, name: info})

    def bind_type(self, info: TypeDefInfo, constrs: Iterable[ConstrInfo]) -> "TypeEnv":
        return replace(
            self,
            types={**self.types, info.name: info},
            constructors={**self.constructors, **{c.name: c for c in constrs}},
        )

    def bind_module(self, name: str, pos: Optional[Position]) -> "TypeEnv":
        return replace(self, modules={**self.modules, name: pos})


_prelude_ids = itertools.count(-1000, -1)


def _pvar() -> TVar:
    return TVar(next(_prelude_ids))


def prelude() -> TypeEnv:
    """Built-in environment: list and option types, a few list functions,
    integer arithmetic and comparison, and show : int -> string."""
    la = _pvar()
    list_t = TNamed("list", (la,))
    oa = _pvar()
    opt_t = TNamed("option", (oa,))
    ma, mb = _pvar(), _pvar()
    lv = _pvar()

    def closed(t: Type) -> Scheme:
        return Scheme(tuple(sorted(free_vars(t))), t)

    def val(t: Type, kind: str = "value") -> ValueInfo:
        return ValueInfo(closed(t), None, builtin=True, kind=kind)

    arith = TArrow(T_INT, TArrow(T_INT, T_INT))
    compare = TArrow(T_INT, TArrow(T_INT, T_BOOL))
    values = {
        "map": val(
            TArrow(TArrow(ma, mb), TArrow(TNamed("list", (ma,)), TNamed("list", (mb,))))
        ),
        "length": val(TArrow(TNamed("list", (lv,)), T_INT)),
        "show": val(TArrow(T_INT, T_STRING)),
        "(+)": val(arith),
        "(-)": val(arith),
        "(*)": val(arith),
        "(<)": val(compare),
        "(=)": val(compare),
    }
    types = {
        "list": TypeDefInfo("list", la.id, ("Nil", "Cons"), None, builtin=True),
        "option": TypeDefInfo("option", oa.id, ("None", "Some"), None, builtin=True),
    }
    constructors = {
        "Nil": ConstrInfo("Nil", "list", la.id, (), None, builtin=True),
        "Cons": ConstrInfo("Cons", "list", la.id, (la, list_t), None, builtin=True),
        "None": ConstrInfo("None", "option", oa.id, (), None, builtin=True),
        "Some": ConstrInfo("Some", "option", oa.id, (oa,), None, builtin=True),
    }
    return TypeEnv(values, types, constructors, {})


_BINOP_NAMES = {"+": "(+)", "-": "(-)", "*": "(*)", "<": "(<)", "=": "(=)"}


# ---------------------------------------------------------------------------
# Typed trees


@dataclass(frozen=True)
class TypedNode:
    node: object  # the ast node (phrase, expression, clause or pattern)
    type: Type
    generalized: Optional[Scheme]
    fake: bool
    children: tuple["TypedNode", ...]

    @property
    def range(self) -> Range:
        return self.node.range

    def walk(self) -> Iterable["TypedNode"]:
        yield self
        for c in self.children:
            yield from c.walk()


@dataclass(frozen=True)
class TypedTree:
    phrases: tuple[TypedNode, ...]

    def walk(self) -> Iterable[TypedNode]:
        for p in self.phrases:
            yield from p.walk()


# ---------------------------------------------------------------------------
# Inference


class _Infer:
    """One phrase's worth of inference state: a substitution, a fresh-variable
    counter (reset per phrase so results are reproducible), diagnostics."""

    def __init__(self, counter: Optional[itertools.count] = None):
        self.subst: Subst = EMPTY_SUBST
        self.diagnostics: list[Diagnostic] = []
        self._fresh = counter if counter is not None else itertools.count()

    def fresh(self) -> TVar:
        return TVar(next(self._fresh))

    def diag(self, message: str, rng: Range) -> None:
        self.diagnostics.append(Diagnostic("type", message, rng[0], rng[1]))

    def unify_or_diag(self, a: Type, b: Type, rng: Range) -> bool:
        out = unify(a, b, self.subst)
        if isinstance(out, Mismatch):
            left = print_type(out.left)
            right = print_type(out.right)
            if out.occurs:
                self.diag(f"this expression creates a cyclic type: {left} vs {right}", rng)
            else:
                self.diag(f"type mismatch: {left} is not {right}", rng)
            return False
        self.subst = out
        return True

    def instantiate(self, scheme: Scheme) -> Type:
        mapping = {vid: self.fresh() for vid in scheme.vars}
        return _instantiate(scheme.body, mapping)


def _instantiate(t: Type, mapping: dict[int, TVar]) -> Type:
    if isinstance(t, TVar):
        return mapping.get(t.id, t)
    if isinstance(t, TArrow):
        return TArrow(_instantiate(t.arg, mapping), _instantiate(t.result, mapping))
    if isinstance(t, TNamed):
        return TNamed(t.name, tuple(_instantiate(a, mapping) for a in t.args))
    return t


def generalize(env: TypeEnv, t: Type, s: Subst) -> Scheme:
    t = s.apply(t)
    env_free: set[int] = set()
    for info in env.values.values():
        if info.builtin:
            continue  # builtin schemes are closed
        body = s.apply(info.scheme.body)
        env_free |= free_vars(body) - set(info.scheme.vars)
    qs = tuple(sorted(free_vars(t) - env_free))
    return Scheme(qs, t)


def infer_phrase(
    env: TypeEnv, phrase: A.Phrase, counter: Optional[itertools.count] = None
) -> tuple[TypedNode, TypeEnv, list[Diagnostic]]:
    """Infer one toplevel phrase.  Never raises: unification failures and
    unknown names become diagnostics, the result environment extends `env`
    with the phrase's bindings even when parts of it are fake."""
    inf = _Infer(counter)
    typed, env2 = _infer_phrase(inf, env, phrase)
    typed = _resolve(typed, inf.subst)
    return typed, env2, inf.diagnostics


def _infer_phrase(inf: _Infer, env: TypeEnv, phrase: A.Phrase) -> tuple[TypedNode, TypeEnv]:
    if isinstance(phrase, A.LetDef):
        typed_body, fn_type, scheme = _infer_binding(
            inf, env, phrase.rec, phrase.name, phrase.params, phrase.annot, phrase.body
        )
        env2 = env.bind_value(
            phrase.name, ValueInfo(scheme, phrase.name_range[0], builtin=False)
        )
        node = TypedNode(phrase, fn_type, scheme, False, (typed_body,))
        return node, env2
    if isinstance(phrase, A.TypeDef):
        return _infer_typedef(inf, env, phrase)
    if isinstance(phrase, A.ModuleDef):
        inner_env = env
        children = []
        for sub in phrase.phrases:
            typed, inner_env = _infer_phrase(inf, inner_env, sub)
            children.append(typed)
        # Module contents stay local: there is no projection syntax, so only
        # the module name escapes.
        env2 = env.bind_module(phrase.name, phrase.name_range[0])
        node = TypedNode(phrase, TNamed("<module>", ()), None, False, tuple(children))
        return node, env2
    assert isinstance(phrase, A.ExprPhrase)
    typed = _infer_expr(inf, env, phrase.expr)
    node = TypedNode(phrase, typed.type, None, False, (typed,))
    return node, env


def _infer_binding(
    inf: _Infer,
    env: TypeEnv,
    rec: bool,
    name: str,
    params: tuple[A.Param, ...],
    annot: Optional[A.TypeExprA],
    body: A.Expr,
) -> tuple[TypedNode, Type, Scheme]:
    """Type one `let` binding: returns the typed body, the whole binding's
    (possibly functional) type, and its generalization over `env`."""
    param_types = [inf.fresh() for _ in params]
    body_env = env
    for p, t in zip(params, param_types):
        body_env = body_env.bind_value(p.name, ValueInfo(Scheme((), t), p.range[0]))
    result_hint = inf.fresh()
    fn_type: Type = result_hint
    for t in reversed(param_types):
        fn_type = TArrow(t, fn_type)
    if rec:
        body_env = body_env.bind_value(name, ValueInfo(Scheme((), fn_type), None))
    typed_body = _infer_expr(inf, body_env, body)
    inf.unify_or_diag(result_hint, typed_body.type, body.range)
    if annot is not None:
        annot_type = _lower_type_expr(inf, env, annot)
        inf.unify_or_diag(typed_body.type, annot_type, body.range)
    full = inf.subst.apply(fn_type)
    scheme = generalize(env, full, inf.subst)
    return typed_body, full, scheme


def _lower_type_expr(inf: _Infer, env: TypeEnv, t: A.TypeExprA, vars_: Optional[dict[str, TVar]] = None) -> Type:
    vars_ = vars_ if vars_ is not None else {}
    if isinstance(t, A.TyVarA):
        if t.name not in vars_:
            vars_[t.name] = inf.fresh()
        return vars_[t.name]
    if isinstance(t, A.TyArrowA):
        return TArrow(
            _lower_type_expr(inf, env, t.arg, vars_), _lower_type_expr(inf, env, t.result, vars_)
        )
    if isinstance(t, A.TyHoleA):
        return inf.fresh()
    assert isinstance(t, A.TyNameA)
    arg_types = ()
    if t.arg is not None:
        arg_types = (_lower_type_expr(inf, env, t.arg, vars_),)
    if t.name == "int":
        return T_INT
    if t.name == "bool":
        return T_BOOL
    if t.name == "string":
        return T_STRING
    info = env.types.get(t.name)
    if info is None:
        inf.diag(f"unknown type {t.name}", t.range)
        return inf.fresh()
    want = 1 if info.param_id is not None else 0
    if len(arg_types) != want:
        inf.diag(f"type {t.name} expects {want} argument(s)", t.range)
        arg_types = tuple(inf.fresh() for _ in range(want))
    return TNamed(t.name, tuple(arg_types))


def _infer_typedef(inf: _Infer, env: TypeEnv, phrase: A.TypeDef) -> tuple[TypedNode, TypeEnv]:
    param_id: Optional[int] = None
    vars_: dict[str, TVar] = {}
    if phrase.param is not None:
        v = inf.fresh()
        vars_[phrase.param] = v
        param_id = v.id
    # The definition may refer to itself; register a provisional entry first.
    provisional = TypeDefInfo(
        phrase.name, param_id, tuple(c.name for c in phrase.constructors), phrase.name_range[0]
    )
    env_self = env.bind_type(provisional, ())
    constrs = []
    for decl in phrase.constructors:
        args = tuple(_lower_type_expr(inf, env_self, a, vars_) for a in decl.args)
        constrs.append(
            ConstrInfo(decl.name, phrase.name, param_id, args, decl.range[0])
        )
    env2 = env.bind_type(provisional, constrs)
    own_type = TNamed(
        phrase.name, (TVar(param_id),) if param_id is not None else ()
    )
    node = TypedNode(phrase, own_type, None, False, ())
    return node, env2


def _infer_expr(inf: _Infer, env: TypeEnv, e: A.Expr) -> TypedNode:
    if isinstance(e, A.IntLit):
        return TypedNode(e, T_INT, None, False, ())
    if isinstance(e, A.BoolLit):
        return TypedNode(e, T_BOOL, None, False, ())
    if isinstance(e, A.StrLit):
        return TypedNode(e, T_STRING, None, False, ())
    if isinstance(e, A.Placeholder):
        return TypedNode(e, inf.fresh(), None, False, ())
    if isinstance(e, A.Var):
        info = env.values.get(e.name)
        if info is None:
            inf.diag(f"unbound value {e.name}", e.range)
            return TypedNode(e, inf.fresh(), None, False, ())
        return TypedNode(e, inf.instantiate(info.scheme), None, False, ())
    if isinstance(e, A.Fun):
        param_types = [inf.fresh() for _ in e.params]
        body_env = env
        for p, t in zip(e.params, param_types):
            body_env = body_env.bind_value(p.name, ValueInfo(Scheme((), t), p.range[0]))
        body = _infer_expr(inf, body_env, e.body)
        fn_type: Type = body.type
        for t in reversed(param_types):
            fn_type = TArrow(t, fn_type)
        return TypedNode(e, fn_type, None, False, (body,))
    if isinstance(e, A.Apply):
        fn = _infer_expr(inf, env, e.fn)
        arg = _infer_expr(inf, env, e.arg)
        result = inf.fresh()
        ok = inf.unify_or_diag(fn.type, TArrow(arg.type, result), e.arg.range)
        return TypedNode(e, result, None, not ok, (fn, arg))
    if isinstance(e, A.BinOp):
        left = _infer_expr(inf, env, e.left)
        right = _infer_expr(inf, env, e.right)
        op_info = env.values.get(_BINOP_NAMES[e.op])
        op_type = inf.instantiate(op_info.scheme) if op_info else TArrow(T_INT, TArrow(T_INT, inf.fresh()))
        assert isinstance(op_type, TArrow) and isinstance(op_type.result, TArrow)
        ok_l = inf.unify_or_diag(left.type, op_type.arg, e.left.range)
        ok_r = inf.unify_or_diag(right.type, op_type.result.arg, e.right.range)
        return TypedNode(e, op_type.result.result, None, not (ok_l and ok_r), (left, right))
    if isinstance(e, A.If):
        cond = _infer_expr(inf, env, e.cond)
        ok_c = inf.unify_or_diag(cond.type, T_BOOL, e.cond.range)
        then = _infer_expr(inf, env, e.then)
        orelse = _infer_expr(inf, env, e.orelse)
        ok_b = inf.unify_or_diag(then.type, orelse.type, e.orelse.range)
        return TypedNode(e, then.type, None, not (ok_c and ok_b), (cond, then, orelse))
    if isinstance(e, A.Match):
        return _infer_match(inf, env, e)
    if isinstance(e, A.LetIn):
        typed_value, _fn_type, scheme = _infer_binding(
            inf, env, e.rec, e.name, e.params, e.annot, e.value
        )
        body_env = env.bind_value(e.name, ValueInfo(scheme, e.name_range[0]))
        body = _infer_expr(inf, body_env, e.body)
        return TypedNode(e, body.type, scheme, False, (typed_value, body))
    if isinstance(e, A.ConstrApply):
        return _infer_constr(inf, env, e)
    raise AssertionError(f"unhandled expression {type(e).__name__}")


def _constr_type(inf: _Infer, info: ConstrInfo) -> tuple[tuple[Type, ...], Type]:
    """Instantiated argument types and result type of a constructor."""
    if info.param_id is not None:
        fresh = inf.fresh()
        mapping = {info.param_id: fresh}
        args = tuple(_instantiate(a, mapping) for a in info.args)
        return args, TNamed(info.owner, (fresh,))
    return info.args, TNamed(info.owner, ())


def _infer_constr(inf: _Infer, env: TypeEnv, e: A.ConstrApply) -> TypedNode:
    if e.name in ("true", "false"):
        return TypedNode(e, T_BOOL, None, False, ())
    info = env.constructors.get(e.name)
    children = tuple(_infer_expr(inf, env, a) for a in e.args)
    if info is None:
        inf.diag(f"unbound constructor {e.name}", e.name_range)
        return TypedNode(e, inf.fresh(), None, False, children)
    want, result = _constr_type(inf, info)
    if len(children) != len(want):
        inf.diag(
            f"constructor {e.name} expects {len(want)} argument(s), got {len(children)}",
            e.range,
        )
        return TypedNode(e, result, None, True, children)
    ok = True
    for child, expected, arg in zip(children, want, e.args):
        ok = inf.unify_or_diag(child.type, expected, arg.range) and ok
    return TypedNode(e, result, None, not ok, children)


def _infer_match(inf: _Infer, env: TypeEnv, e: A.Match) -> TypedNode:
    scrut = _infer_expr(inf, env, e.scrutinee)
    result = inf.fresh()
    children = [scrut]
    fake = False
    for clause in e.clauses:
        pat_node, pat_type, bindings = _infer_pattern(inf, env, clause.pattern)
        ok_p = inf.unify_or_diag(pat_type, scrut.type, clause.pattern.range)
        clause_env = env
        for name, (t, rng) in bindings.items():
            clause_env = clause_env.bind_value(name, ValueInfo(Scheme((), t), rng[0]))
        body = _infer_expr(inf, clause_env, clause.body)
        ok_b = inf.unify_or_diag(body.type, result, clause.body.range)
        clause_node = TypedNode(clause, body.type, None, not (ok_p and ok_b), (pat_node, body))
        children.append(clause_node)
        fake = fake or clause_node.fake
    return TypedNode(e, result, None, fake, tuple(children))


def _infer_pattern(
    inf: _Infer, env: TypeEnv, p: A.Pattern
) -> tuple[TypedNode, Type, dict[str, tuple[Type, Range]]]:
    if isinstance(p, A.PWild):
        t = inf.fresh()
        return TypedNode(p, t, None, False, ()), t, {}
    if isinstance(p, A.PVar):
        t = inf.fresh()
        return TypedNode(p, t, None, False, ()), t, {p.name: (t, p.range)}
    if isinstance(p, A.PInt):
        return TypedNode(p, T_INT, None, False, ()), T_INT, {}
    assert isinstance(p, A.PConstr)
    if p.name in ("true", "false"):
        node = TypedNode(p, T_BOOL, None, False, ())
        if p.args:
            inf.diag(f"{p.name} takes no argument", p.range)
        return node, T_BOOL, {}
    info = env.constructors.get(p.name)
    if info is None:
        inf.diag(f"unbound constructor {p.name}", p.name_range)
        children = []
        bindings: dict[str, tuple[Type, Range]] = {}
        for sub in p.args:
            child, _t, bs = _infer_pattern(inf, env, sub)
            children.append(child)
            bindings.update(bs)
        t = inf.fresh()
        return TypedNode(p, t, None, False, tuple(children)), t, bindings
    want, result = _constr_type(inf, info)
    children = []
    bindings = {}
    fake = False
    if len(p.args) != len(want):
        inf.diag(
            f"constructor {p.name} expects {len(want)} argument(s), got {len(p.args)}",
            p.range,
        )
        fake = True
    for sub, expected in itertools.zip_longest(p.args, want):
        if sub is None:
            break
        child, t, bs = _infer_pattern(inf, env, sub)
        children.append(child)
        bindings.update(bs)
        if expected is not None:
            fake = not inf.unify_or_diag(t, expected, sub.range) or fake
    return TypedNode(p, result, None, fake, tuple(children)), result, bindings


def _resolve(node: TypedNode, s: Subst) -> TypedNode:
    generalized = node.generalized
    if generalized is not None:
        # Resolve only the free part; quantified variables stay untouched.
        quantified = set(generalized.vars)
        pruned = Subst({k: v for k, v in s.mapping.items() if k not in quantified})
        generalized = Scheme(generalized.vars, pruned.apply(generalized.body))
    return TypedNode(
        node.node,
        s.apply(node.type),
        generalized,
        node.fake,
        tuple(_resolve(c, s) for c in node.children),
    )


# ---------------------------------------------------------------------------
# Whole-buffer checking with phrase memoization


@dataclass(frozen=True)
class PhraseCacheEntry:
    fingerprint: str
    typed: TypedNode
    diagnostics: tuple[Diagnostic, ...]
    env_before: TypeEnv
    env_after: TypeEnv


@dataclass
class PhraseCache:
    entries: tuple[PhraseCacheEntry, ...] = ()
    retyped: int = 0  # informational: phrases inferred by the producing call


EMPTY_PHRASE_CACHE = PhraseCache()


def _fingerprint(source: str, phrase: A.Phrase) -> str:
    text = source[phrase.range[0].offset : phrase.range[1].offset]
    return hashlib.sha1(text.encode("utf-8")).hexdigest()


def check_buffer(
    prelude_env: TypeEnv, ast: A.Ast, old: PhraseCache
) -> tuple[TypedTree, list[Diagnostic], PhraseCache]:
    """Fold infer_phrase over the buffer, reusing cached per-phrase results
    while the source text of the phrase sequence matches the old run from
    the start.  Output is identical with or without the cache."""
    env = prelude_env
    typed: list[TypedNode] = []
    diagnostics: list[Diagnostic] = []
    entries: list[PhraseCacheEntry] = []
    retyped = 0
    reusing = True
    for i, phrase in enumerate(ast.phrases):
        fp = _fingerprint(ast.source, phrase)
        if reusing and i < len(old.entries) and old.entries[i].fingerprint == fp:
            cached = old.entries[i]
            node = _reattach(cached.typed, phrase)
            shifted = _shift_diagnostics(
                cached.diagnostics, cached.typed.node.range, phrase.range
            )
            entry = PhraseCacheEntry(fp, node, tuple(shifted), env, cached.env_after)
            typed.append(node)
            diagnostics.extend(shifted)
            entries.append(entry)
            env = cached.env_after
            continue
        reusing = False
        node, env_after, diags = infer_phrase(env, phrase)
        retyped += 1
        entry = PhraseCacheEntry(fp, node, tuple(diags), env, env_after)
        typed.append(node)
        diagnostics.extend(diags)
        entries.append(entry)
        env = env_after
    cache = PhraseCache(tuple(entries), retyped)
    return TypedTree(tuple(typed)), diagnostics, cache


def global_env(prelude_env: TypeEnv, cache: PhraseCache) -> TypeEnv:
    return cache.entries[-1].env_after if cache.entries else prelude_env


def _reattach(typed: TypedNode, new_node) -> TypedNode:
    """Re-point a cached typed tree at the freshly parsed ast of the same
    phrase text; only positions differ, the shapes match exactly."""
    new_children = _ast_children(new_node)
    assert len(new_children) == len(typed.children), "cache shape mismatch"
    return TypedNode(
        new_node,
        typed.type,
        typed.generalized,
        typed.fake,
        tuple(_reattach(c, n) for c, n in zip(typed.children, new_children)),
    )


def _ast_children(node) -> list:
    """Ast children in the exact order inference visits them."""
    if isinstance(node, A.LetDef):
        return [node.body]
    if isinstance(node, A.TypeDef):
        return []
    if isinstance(node, A.ModuleDef):
        return list(node.phrases)
    if isinstance(node, A.ExprPhrase):
        return [node.expr]
    if isinstance(node, A.Fun):
        return [node.body]
    if isinstance(node, A.Apply):
        return [node.fn, node.arg]
    if isinstance(node, A.BinOp):
        return [node.left, node.right]
    if isinstance(node, A.If):
        return [node.cond, node.then, node.orelse]
    if isinstance(node, A.Match):
        return [node.scrutinee] + list(node.clauses)
    if isinstance(node, A.Clause):
        return [node.pattern, node.body]
    if isinstance(node, A.LetIn):
        return [node.value, node.body]
    if isinstance(node, A.ConstrApply):
        return list(node.args)
    if isinstance(node, A.PConstr):
        return list(node.args)
    return []


def _shift_diagnostics(
    diags: tuple[Diagnostic, ...], old_range: Range, new_range: Range
) -> list[Diagnostic]:
    old_start, new_start = old_range[0], new_range[0]
    dline = new_start.line - old_start.line
    dcol = new_start.col - old_start.col
    doff = new_start.offset - old_start.offset
    if (dline, dcol, doff) == (0, 0, 0):
        return list(diags)

    def shift(p: Position) -> Position:
        col = p.col + dcol if p.line == old_start.line else p.col
        return Position(p.line + dline, col, p.offset + doff)

    return [Diagnostic(d.phase, d.message, shift(d.start), shift(d.end)) for d in diags]


# ---------------------------------------------------------------------------
# Pattern-match exhaustiveness


class EnumerationError(Exception):
    """The scrutinee type cannot be enumerated (type variable, function,
    string, or unknown named type)."""


_OPAQUE = object()  # a value about which nothing is known: matches only catch-alls


def _matches(p: A.Pattern, value) -> bool:
    if isinstance(p, (A.PWild, A.PVar)):
        return True
    if value is _OPAQUE:
        return False
    if isinstance(p, A.PInt):
        return isinstance(value, int) and value == p.value
    assert isinstance(p, A.PConstr)
    name, args = value
    return p.name == name and len(p.args) == len(args) and all(
        _matches(sp, sv) for sp, sv in zip(p.args, args)
    )


def _zw() -> Range:
    from .positions import ORIGIN

    return (ORIGIN, ORIGIN)


def missing_cases(
    clauses: list[A.Pattern], scrutinee_type: Type, env: TypeEnv
) -> list[A.Pattern]:
    """Depth-one witnesses (constructor over wildcards) matched by no clause.
    Empty means the match is exhaustive at depth one, and adding the returned
    patterns always makes it so.  Witnesses are checked against the depth-one
    instantiation of each constructor: arguments are opaque, so only a
    catch-all sub-pattern covers them."""
    t = scrutinee_type
    if isinstance(t, TVar):
        raise EnumerationError("cannot enumerate cases of a type variable")
    probes: list[tuple[A.Pattern, object]] = []
    if isinstance(t, TCon) and t.name == "bool":
        probes = [
            (A.PConstr("true", (), _zw(), _zw()), ("true", ())),
            (A.PConstr("false", (), _zw(), _zw()), ("false", ())),
        ]
    elif isinstance(t, TCon) and t.name == "int":
        # Integer literals never exhaust int; a wildcard is the only witness
        # whose addition completes the match.
        probes = [(A.PWild(_zw()), _OPAQUE)]
    elif isinstance(t, TNamed):
        info = env.types.get(t.name)
        if info is None:
            raise EnumerationError(f"cannot enumerate cases of unknown type {t.name}")
        for cname in info.constructors:
            arity = len(env.constructors[cname].args)
            witness = A.PConstr(cname, tuple(A.PWild(_zw()) for _ in range(arity)), _zw(), _zw())
            probe = (cname, tuple(_OPAQUE for _ in range(arity)))
            probes.append((witness, probe))
    else:
        raise EnumerationError(f"cannot enumerate cases of type {print_type(t)}")
    out = []
    for witness, probe in probes:
        if not any(_matches(c, probe) for c in clauses):
            out.append(witness)
    return out


# ---------------------------------------------------------------------------
# Printing


_LETTERS = "abcdefghijklmnopqrstuvwxyz"


def _var_names(t: Type, mapping: dict[int, str]) -> None:
    if isinstance(t, TVar):
        if t.id not in mapping:
            n = len(mapping)
            name = _LETTERS[n] if n < 26 else f"{_LETTERS[n % 26]}{n // 26}"
            mapping[t.id] = name
    elif isinstance(t, TArrow):
        _var_names(t.arg, mapping)
        _var_names(t.result, mapping)
    elif isinstance(t, TNamed):
        for a in t.args:
            _var_names(a, mapping)


def _print(t: Type, names: dict[int, str]) -> str:
    if isinstance(t, TVar):
        return f"'{names[t.id]}"
    if isinstance(t, TCon):
        return t.name
    if isinstance(t, TArrow):
        left = _print(t.arg, names)
        if isinstance(t.arg, TArrow):
            left = f"({left})"
        return f"{left} -> {_print(t.result, names)}"
    assert isinstance(t, TNamed)
    if not t.args:
        return t.name
    arg = t.args[0]
    inner = _print(arg, names)
    if isinstance(arg, (TArrow,)):
        inner = f"({inner})"
    return f"{inner} {t.name}"


def print_type(t: Type) -> str:
    """Canonical rendering: variables become 'a, 'b, ... in order of first
    appearance, arrows associate right, named types print postfix."""
    names: dict[int, str] = {}
    _var_names(t, names)
    return _print(t, names)


def print_scheme(s: Scheme) -> str:
    return print_type(s.body)
