"""Independent type-inference oracle: constraint generation plus union-find.

Deliberately a different mechanism from the package's substitution-threading
inference: equations are collected into a mutable union-find structure and
resolved on demand.  It only handles well-typed programs — any failure
raises — which is exactly what a golden-file oracle for a clean corpus
needs.  The prelude signatures are declared here by hand, not imported.
"""
from __future__ import annotations

import itertools

from minimerlin import ast as A


class OracleTypeError(Exception):
    pass


# Types: ("var", id) | ("con", name) | ("arrow", a, b) | ("named", name, (args...))


class _UnionFind:
    def __init__(self):
        self.parent: dict[int, object] = {}  # var id -> type or var id

    def resolve(self, t):
        while t[0] == "var" and t[1] in self.parent:
            entry = self.parent[t[1]]
            t = ("var", entry) if isinstance(entry, int) else entry
        return t

    def deep(self, t):
        t = self.resolve(t)
        if t[0] == "arrow":
            return ("arrow", self.deep(t[1]), self.deep(t[2]))
        if t[0] == "named":
            return ("named", t[1], tuple(self.deep(a) for a in t[2]))
        return t

    def occurs(self, vid: int, t) -> bool:
        t = self.resolve(t)
        if t[0] == "var":
            return t[1] == vid
        if t[0] == "arrow":
            return self.occurs(vid, t[1]) or self.occurs(vid, t[2])
        if t[0] == "named":
            return any(self.occurs(vid, a) for a in t[2])
        return False

    def union(self, a, b) -> None:
        a, b = self.resolve(a), self.resolve(b)
        if a == b:
            return
        if a[0] == "var":
            if self.occurs(a[1], b):
                raise OracleTypeError(f"occurs check: {a} in {b}")
            self.parent[a[1]] = b
            return
        if b[0] == "var":
            self.union(b, a)
            return
        if a[0] == "arrow" and b[0] == "arrow":
            self.union(a[1], b[1])
            self.union(a[2], b[2])
            return
        if a[0] == "named" and b[0] == "named" and a[1] == b[1] and len(a[2]) == len(b[2]):
            for x, y in zip(a[2], b[2]):
                self.union(x, y)
            return
        if a[0] == "con" and b[0] == "con" and a[1] == b[1]:
            return
        raise OracleTypeError(f"cannot unify {a} with {b}")


INT = ("con", "int")
BOOL = ("con", "bool")
STRING = ("con", "string")


def _arrows(*ts):
    out = ts[-1]
    for t in reversed(ts[:-1]):
        out = ("arrow", t, out)
    return out


def _prelude():
    # (name -> (quantified var ids, type)); ids < 0 to stay out of the way.
    a, b, c = ("var", -1), ("var", -2), ("var", -3)
    env = {
        "map": ((-1, -2), _arrows(("arrow", a, b), ("named", "list", (a,)), ("named", "list", (b,)))),
        "length": ((-3,), _arrows(("named", "list", (c,)), INT)),
        "show": ((), _arrows(INT, STRING)),
        "(+)": ((), _arrows(INT, INT, INT)),
        "(-)": ((), _arrows(INT, INT, INT)),
        "(*)": ((), _arrows(INT, INT, INT)),
        "(<)": ((), _arrows(INT, INT, BOOL)),
        "(=)": ((), _arrows(INT, INT, BOOL)),
    }
    constructors = {
        "Nil": ((-4,), (), ("named", "list", (("var", -4),))),
        "Cons": ((-5,), (("var", -5), ("named", "list", (("var", -5),))), ("named", "list", (("var", -5),))),
        "None": ((-6,), (), ("named", "option", (("var", -6),))),
        "Some": ((-7,), (("var", -7),), ("named", "option", (("var", -7),))),
    }
    return env, constructors


class Oracle:
    def __init__(self):
        self.uf = _UnionFind()
        self.fresh_ids = itertools.count(0)
        self.values, self.constructors = _prelude()
        self.typedefs: dict[str, tuple] = {
            "list": ((-4,),),
            "option": ((-6,),),
        }

    def fresh(self):
        return ("var", next(self.fresh_ids))

    def instantiate(self, scheme):
        qs, body = scheme
        mapping = {q: self.fresh() for q in qs}

        def sub(t):
            if t[0] == "var":
                return mapping.get(t[1], t)
            if t[0] == "arrow":
                return ("arrow", sub(t[1]), sub(t[2]))
            if t[0] == "named":
                return ("named", t[1], tuple(sub(a) for a in t[2]))
            return t

        return sub(body)

    def free_in(self, t, acc):
        t = self.uf.resolve(t)
        if t[0] == "var":
            acc.add(t[1])
        elif t[0] == "arrow":
            self.free_in(t[1], acc)
            self.free_in(t[2], acc)
        elif t[0] == "named":
            for a in t[2]:
                self.free_in(a, acc)

    def generalize(self, env, t):
        env_free: set[int] = set()
        for qs, body in env.values():
            body_free: set[int] = set()
            self.free_in(body, body_free)
            env_free |= body_free - set(qs)
        own: set[int] = set()
        self.free_in(t, own)
        return (tuple(sorted(own - env_free)), self.uf.deep(t))

    # -- expressions --------------------------------------------------------

    def infer(self, env, e) -> tuple:
        if isinstance(e, A.IntLit):
            return INT
        if isinstance(e, A.BoolLit):
            return BOOL
        if isinstance(e, A.StrLit):
            return STRING
        if isinstance(e, A.Var):
            if e.name not in env:
                raise OracleTypeError(f"unbound {e.name}")
            return self.instantiate(env[e.name])
        if isinstance(e, A.Placeholder):
            raise OracleTypeError("placeholder in supposedly well-typed input")
        if isinstance(e, A.Fun):
            params = {p.name: self.fresh() for p in e.params}
            inner = dict(env)
            for name, t in params.items():
                inner[name] = ((), t)
            body = self.infer(inner, e.body)
            return _arrows(*params.values(), body)
        if isinstance(e, A.Apply):
            fn = self.infer(env, e.fn)
            arg = self.infer(env, e.arg)
            res = self.fresh()
            self.uf.union(fn, ("arrow", arg, res))
            return res
        if isinstance(e, A.BinOp):
            self.uf.union(self.infer(env, e.left), INT)
            self.uf.union(self.infer(env, e.right), INT)
            return BOOL if e.op in ("<", "=") else INT
        if isinstance(e, A.If):
            self.uf.union(self.infer(env, e.cond), BOOL)
            t = self.infer(env, e.then)
            self.uf.union(t, self.infer(env, e.orelse))
            return t
        if isinstance(e, A.Match):
            scrut = self.infer(env, e.scrutinee)
            result = self.fresh()
            for clause in e.clauses:
                bindings: dict[str, tuple] = {}
                pt = self.infer_pattern(clause.pattern, bindings)
                self.uf.union(pt, scrut)
                inner = dict(env)
                for name, t in bindings.items():
                    inner[name] = ((), t)
                self.uf.union(self.infer(inner, clause.body), result)
            return result
        if isinstance(e, A.LetIn):
            scheme = self.infer_binding(env, e.rec, e.name, e.params, e.annot, e.value)
            inner = dict(env)
            inner[e.name] = scheme
            return self.infer(inner, e.body)
        if isinstance(e, A.ConstrApply):
            return self.infer_constr(env, e)
        raise OracleTypeError(f"unhandled expression {type(e).__name__}")

    def infer_constr(self, env, e):
        if e.name in ("true", "false"):
            if e.args:
                raise OracleTypeError(f"{e.name} applied")
            return BOOL
        if e.name not in self.constructors:
            raise OracleTypeError(f"unknown constructor {e.name}")
        qs, args, result = self.constructors[e.name]
        mapping = {q: self.fresh() for q in qs}

        def sub(t):
            if t[0] == "var":
                return mapping.get(t[1], t)
            if t[0] == "arrow":
                return ("arrow", sub(t[1]), sub(t[2]))
            if t[0] == "named":
                return ("named", t[1], tuple(sub(x) for x in t[2]))
            return t

        want = [sub(x) for x in args]
        if len(want) != len(e.args):
            raise OracleTypeError(f"arity of {e.name}")
        for sub_expr, expected in zip(e.args, want):
            self.uf.union(self.infer(env, sub_expr), expected)
        return sub(result)

    def infer_pattern(self, p, bindings):
        if isinstance(p, A.PWild):
            return self.fresh()
        if isinstance(p, A.PVar):
            t = self.fresh()
            bindings[p.name] = t
            return t
        if isinstance(p, A.PInt):
            return INT
        assert isinstance(p, A.PConstr)
        if p.name in ("true", "false"):
            return BOOL
        if p.name not in self.constructors:
            raise OracleTypeError(f"unknown constructor pattern {p.name}")
        qs, args, result = self.constructors[p.name]
        mapping = {q: self.fresh() for q in qs}

        def sub(t):
            if t[0] == "var":
                return mapping.get(t[1], t)
            if t[0] == "arrow":
                return ("arrow", sub(t[1]), sub(t[2]))
            if t[0] == "named":
                return ("named", t[1], tuple(sub(x) for x in t[2]))
            return t

        want = [sub(x) for x in args]
        if len(want) != len(p.args):
            raise OracleTypeError(f"pattern arity of {p.name}")
        for sp, expected in zip(p.args, want):
            self.uf.union(self.infer_pattern(sp, bindings), expected)
        return sub(result)

    def infer_binding(self, env, rec, name, params, annot, body):
        param_types = [(p.name, self.fresh()) for p in params]
        inner = dict(env)
        for pname, t in param_types:
            inner[pname] = ((), t)
        result = self.fresh()
        fn = _arrows(*(t for _n, t in param_types), result)
        if rec:
            inner[name] = ((), fn)
        bt = self.infer(inner, body)
        self.uf.union(result, bt)
        if annot is not None:
            self.uf.union(bt, self.lower_annot(annot, {}))
        return self.generalize(env, fn)

    def lower_annot(self, t, vars_):
        if isinstance(t, A.TyVarA):
            if t.name not in vars_:
                vars_[t.name] = self.fresh()
            return vars_[t.name]
        if isinstance(t, A.TyArrowA):
            return ("arrow", self.lower_annot(t.arg, vars_), self.lower_annot(t.result, vars_))
        if isinstance(t, A.TyHoleA):
            raise OracleTypeError("type hole")
        assert isinstance(t, A.TyNameA)
        args = (self.lower_annot(t.arg, vars_),) if t.arg is not None else ()
        if t.name in ("int", "bool", "string"):
            if args:
                raise OracleTypeError(f"{t.name} takes no argument")
            return ("con", t.name)
        if t.name not in self.typedefs:
            raise OracleTypeError(f"unknown type {t.name}")
        want = 1 if self.typedefs[t.name][0] else 0
        if len(args) != want:
            raise OracleTypeError(f"arity of type {t.name}")
        return ("named", t.name, args)

    # -- phrases -------------------------------------------------------------

    def check(self, ast: A.Ast) -> dict[str, str]:
        """Toplevel name -> printed scheme, raising on any type error."""
        env = dict(self.values)
        out: dict[str, str] = {}
        for phrase in ast.phrases:
            self.check_phrase(env, phrase, out, prefix="")
        return out

    def check_phrase(self, env, phrase, out, prefix):
        if isinstance(phrase, A.LetDef):
            scheme = self.infer_binding(env, phrase.rec, phrase.name, phrase.params, phrase.annot, phrase.body)
            env[phrase.name] = scheme
            out[prefix + phrase.name] = print_oracle_type(self.uf.deep(scheme[1]))
        elif isinstance(phrase, A.TypeDef):
            self.declare_typedef(phrase)
        elif isinstance(phrase, A.ModuleDef):
            inner = dict(env)
            for sub in phrase.phrases:
                self.check_phrase(inner, sub, out, prefix=f"{phrase.name}.")
        elif isinstance(phrase, A.ExprPhrase):
            self.infer(env, phrase.expr)

    def declare_typedef(self, phrase: A.TypeDef):
        param_id = None
        vars_: dict[str, tuple] = {}
        if phrase.param is not None:
            v = self.fresh()
            vars_[phrase.param] = v
            param_id = v[1]
        self.typedefs[phrase.name] = ((param_id,) if param_id is not None else (),)
        qs = (param_id,) if param_id is not None else ()
        result = ("named", phrase.name, ((("var", param_id),) if param_id is not None else ()))
        for decl in phrase.constructors:
            args = tuple(self.lower_annot(t, vars_) for t in decl.args)
            self.constructors[decl.name] = (qs, args, result)


def print_oracle_type(t) -> str:
    names: dict[int, str] = {}

    def name_of(vid: int) -> str:
        if vid not in names:
            n = len(names)
            letters = "abcdefghijklmnopqrstuvwxyz"
            names[vid] = letters[n] if n < 26 else f"{letters[n % 26]}{n // 26}"
        return names[vid]

    def collect(x):
        if x[0] == "var":
            name_of(x[1])
        elif x[0] == "arrow":
            collect(x[1])
            collect(x[2])
        elif x[0] == "named":
            for a in x[2]:
                collect(a)

    def render(x) -> str:
        if x[0] == "var":
            return f"'{name_of(x[1])}"
        if x[0] == "con":
            return x[1]
        if x[0] == "arrow":
            left = render(x[1])
            if x[1][0] == "arrow":
                left = f"({left})"
            return f"{left} -> {render(x[2])}"
        assert x[0] == "named"
        if not x[2]:
            return x[1]
        inner = render(x[2][0])
        if x[2][0][0] == "arrow":
            inner = f"({inner})"
        return f"{inner} {x[1]}"

    collect(t)
    return render(t)


def infer_schemes(source: str) -> dict[str, str]:
    """Parse with the pipeline's frontend, then infer with this oracle."""
    from minimerlin import analysis as AN

    a, _ = AN.build(source)
    if a.diagnostics:
        raise OracleTypeError(f"corpus program is not clean: {a.diagnostics[0].message}")
    return Oracle().check(a.ast)
