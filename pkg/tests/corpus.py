"""MiniML corpus used across the test suite.

WELL_TYPED: thirty clean programs with interesting schemes (golden-file
inference corpus).  BROKEN: buffers with lexical, syntactic and type
errors.  generated_buffers(): deterministic synthetic programs to scale
the purity and totality sweeps.
"""
from __future__ import annotations

import random

WELL_TYPED: list[tuple[str, str]] = [
    ("identity", "let id = fun x -> x"),
    ("const", "let const = fun x y -> x"),
    ("incr_map", "let incr lst =\n  map (fun x -> x + 1) lst"),
    ("compose", "let compose f g = fun x -> f (g x)"),
    ("flip", "let flip f = fun x y -> f y x"),
    ("arith", "let area w h = w * h\nlet perimeter w h = (w + h) * 2"),
    ("compare_chain", "let between lo hi x = if lo < x then x < hi else false"),
    ("string_of_len", "let describe l = show (length l)"),
    ("option_default", "let default d o = match o with | None -> d | Some x -> x"),
    ("option_map", "let omap f o = match o with | None -> None | Some x -> Some (f x)"),
    ("list_head", "let head l = match l with | Nil -> None | Cons x rest -> Some x"),
    ("list_sum", "let rec sum l = match l with | Nil -> 0 | Cons x rest -> x + sum rest"),
    ("list_append", "let rec append a b = match a with | Nil -> b | Cons x rest -> Cons x (append rest b)"),
    ("list_rev", "let rec rev_onto acc l = match l with | Nil -> acc | Cons x rest -> rev_onto (Cons x acc) rest\nlet rev l = rev_onto Nil l"),
    ("fib", "let rec fib n = if n < 2 then n else fib (n - 1) + fib (n - 2)"),
    ("even_odd", "let even n = if n = 0 then true else false\nlet parity n = if even n then \"even\" else \"odd\""),
    ("let_in_chain", "let pipeline x =\n  let doubled = x * 2 in\n  let shifted = doubled + 1 in\n  shifted"),
    ("annot_result", "let double x : int = x + x"),
    ("annot_arrow", "let apply_twice f : int -> int = fun x -> f (f x)"),
    ("typedef_color", "type color = Red | Green | Blue\nlet favorite = Blue\nlet warm c = match c with | Red -> true | Green -> false | Blue -> false"),
    ("typedef_shape", "type shape = Circle of int | Rect of int * int\nlet area s = match s with | Circle r -> 3 * r * r | Rect w h -> w * h"),
    ("typedef_tree", "type 'a tree = Leaf | Node of 'a tree * 'a * 'a tree\nlet rec size t = match t with | Leaf -> 0 | Node l v r -> size l + 1 + size r"),
    ("typedef_pair", "type 'a boxed = Box of 'a\nlet unbox b = match b with | Box v -> v"),
    ("module_basic", "module Util = struct\n  let twice x = x * 2\n  let thrice x = x * 3\nend\nlet nine = 9"),
    ("module_nested", "module Outer = struct\n  module Inner = struct\n    let secret = 42\n  end\n  let visible = 1\nend"),
    ("expr_phrases", "let base = 10\n;; base + 5\n;; show base"),
    ("match_int", "let classify n = match n with | 0 -> \"zero\" | 1 -> \"one\" | _ -> \"many\""),
    ("nested_match", "let deep o = match o with | Some (Some x) -> x | Some None -> 0 | None -> 0"),
    ("poly_list", "let singleton x = Cons x Nil\nlet pair_list x y = Cons x (Cons y Nil)"),
    ("map_compose", "let double_all l = map (fun x -> x * 2) l\nlet labels l = map show (double_all l)"),
]

BROKEN: list[tuple[str, str]] = [
    ("unterminated_let", "let x ="),
    ("binop_trailing", "let x = 1 +"),
    ("unterminated_struct", "module M = struct\n  let a = 1\nlet b = 2"),
    ("stray_paren", "let x = ) 3"),
    ("type_clash", "let y = 1 + \"a\""),
    ("unknown_name", "let z = mystery + 1"),
    ("bad_char", "let q = 1 ??? 2"),
    ("unterminated_string", "let s = \"abc"),
    ("unterminated_comment", "let c = 1 (* never closed"),
    ("match_no_clauses", "let m o = match o with"),
    ("missing_body", "let f x y ="),
    ("deep_incomplete", "module W = struct\n  let go =\n    if 1 < 2 then\n      match Some 1 with\n      | Some v -> v"),
]


_NAMES = ["alpha", "beta", "gamma", "delta", "omega", "probe", "gauge", "ratio"]


def _gen_expr(rng: random.Random, depth: int, scope: list[str]) -> str:
    if depth <= 0 or rng.random() < 0.3:
        choices = [str(rng.randrange(100))]
        if scope:
            choices.append(rng.choice(scope))
        return rng.choice(choices)
    kind = rng.randrange(6)
    if kind == 0:
        op = rng.choice(["+", "-", "*"])
        return f"{_gen_expr(rng, depth - 1, scope)} {op} {_gen_expr(rng, depth - 1, scope)}"
    if kind == 1:
        return (
            f"if {_gen_expr(rng, depth - 1, scope)} < {_gen_expr(rng, depth - 1, scope)} "
            f"then {_gen_expr(rng, depth - 1, scope)} else {_gen_expr(rng, depth - 1, scope)}"
        )
    if kind == 2:
        v = rng.choice(_NAMES)
        return (
            f"let {v} = {_gen_expr(rng, depth - 1, scope)} in "
            f"{_gen_expr(rng, depth - 1, scope + [v])}"
        )
    if kind == 3:
        return (
            f"match Some ({_gen_expr(rng, depth - 1, scope)}) with "
            f"| Some {rng.choice(_NAMES)} -> {_gen_expr(rng, depth - 1, scope)} "
            f"| None -> {_gen_expr(rng, depth - 1, scope)}"
        )
    if kind == 4:
        v = rng.choice(_NAMES)
        return f"(fun {v} -> {_gen_expr(rng, depth - 1, scope + [v])}) {_gen_expr(rng, depth - 1, scope)}"
    return f"({_gen_expr(rng, depth - 1, scope)})"


def generated_buffer(seed: int, phrases: int = 8, depth: int = 3) -> str:
    rng = random.Random(seed)
    defined: list[str] = []
    lines: list[str] = []
    for i in range(phrases):
        name = f"g{seed}_{i}"
        params = " ".join(rng.sample(_NAMES, rng.randrange(0, 3)))
        scope = defined + params.split() if params else list(defined)
        body = _gen_expr(rng, depth, scope)
        sep = f" {params} " if params else " "
        lines.append(f"let {name}{sep}= {body}")
        if not params:
            defined.append(name)
    return "\n".join(lines)


def generated_buffers(count: int, phrases: int = 8, depth: int = 3) -> list[tuple[str, str]]:
    return [
        (f"gen{seed}", generated_buffer(seed, phrases, depth)) for seed in range(count)
    ]


def purity_corpus() -> list[tuple[str, str]]:
    """At least fifty buffers for the purity sweep."""
    return WELL_TYPED + BROKEN + generated_buffers(10)


def totality_corpus(target_chars: int = 100_000) -> list[tuple[str, str]]:
    """Corpus whose total length is the number of prefix cut points to sweep."""
    out = list(WELL_TYPED) + list(BROKEN)
    total = sum(len(s) for _n, s in out)
    seed = 1000
    while total < target_chars:
        name, text = f"big{seed}", generated_buffer(seed, phrases=10, depth=3)
        out.append((name, text))
        total += len(text)
        seed += 1
    return out
