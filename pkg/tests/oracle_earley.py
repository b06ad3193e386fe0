"""Brute-force grammar oracles, fully independent of the LR machinery.

An Earley recognizer answers acceptance and the longest-viable-prefix
boundary; a memoized all-parses enumerator produces every parse tree of a
short token sequence.  Trees are plain tuples: ``(symbol, child, ...)``
for nonterminals, ``(kind,)`` for terminals.
"""
from __future__ import annotations

from minimerlin.grammar import Grammar


def earley_chart(g: Grammar, start: str, kinds: list[str]):
    """Chart[i] = set of (prod_id, dot, origin) live after i tokens."""
    prods = list(g.productions)
    by_lhs: dict[str, list[int]] = {}
    for p in prods:
        by_lhs.setdefault(p.lhs, []).append(p.id)

    AUG = -1
    chart: list[set] = [set() for _ in range(len(kinds) + 1)]

    def closure(i: int) -> None:
        todo = list(chart[i])
        while todo:
            item = todo.pop()
            pid, dot, origin = item
            rhs = (start,) if pid == AUG else prods[pid].rhs
            if dot < len(rhs):
                sym = rhs[dot]
                if sym in g.nonterminals:
                    for q in by_lhs.get(sym, ()):  # predict
                        new = (q, 0, i)
                        if new not in chart[i]:
                            chart[i].add(new)
                            todo.append(new)
                    # nullable completion within the same position
                    for done_pid, done_dot, done_origin in list(chart[i]):
                        done_rhs = (start,) if done_pid == AUG else prods[done_pid].rhs
                        if done_origin == i and done_dot == len(done_rhs):
                            done_lhs = start if done_pid == AUG else prods[done_pid].lhs
                            if done_lhs == sym:
                                new = (pid, dot + 1, origin)
                                if new not in chart[i]:
                                    chart[i].add(new)
                                    todo.append(new)
            else:  # complete
                lhs = start if pid == AUG else prods[pid].lhs
                for p2, d2, o2 in list(chart[origin]):
                    rhs2 = (start,) if p2 == AUG else prods[p2].rhs
                    if d2 < len(rhs2) and rhs2[d2] == lhs:
                        new = (p2, d2 + 1, o2)
                        if new not in chart[i]:
                            chart[i].add(new)
                            todo.append(new)

    chart[0].add((AUG, 0, 0))
    closure(0)
    for i, kind in enumerate(kinds):
        for pid, dot, origin in chart[i]:
            rhs = (start,) if pid == AUG else prods[pid].rhs
            if dot < len(rhs) and rhs[dot] == kind:
                chart[i + 1].add((pid, dot + 1, origin))
        if not chart[i + 1]:
            return chart[: i + 2]
        closure(i + 1)
    return chart


def accepts(g: Grammar, start: str, kinds: list[str]) -> bool:
    chart = earley_chart(g, start, kinds)
    if len(chart) < len(kinds) + 1:
        return False
    return (-1, 1, 0) in chart[len(kinds)]


def first_dead_index(g: Grammar, start: str, kinds: list[str]) -> int | None:
    """Index of the first token after the longest viable prefix; None when the
    whole sequence is a viable prefix (the error, if any, is at end of input)."""
    chart = earley_chart(g, start, kinds)
    for i in range(1, len(chart)):
        if not chart[i]:
            return i - 1
    return None


def all_trees(g: Grammar, start: str, kinds: list[str]) -> list[tuple]:
    """Every parse tree of the sequence (exponential; fine for toy lengths)."""
    memo: dict = {}

    def seq(rhs: tuple[str, ...], i: int, j: int) -> list[tuple]:
        key = (rhs, i, j)
        if key in memo:
            return memo[key]
        memo[key] = []
        if not rhs:
            out = [()] if i == j else []
        else:
            out = []
            head, rest = rhs[0], rhs[1:]
            for k in range(i, j + 1):
                for left in sym(head, i, k):
                    for right in seq(rest, k, j):
                        out.append((left,) + right)
        memo[key] = out
        return out

    def sym(s: str, i: int, j: int) -> list[tuple]:
        key = (s, i, j)
        if key in memo:
            return memo[key]
        memo[key] = []
        out: list[tuple] = []
        if s in g.terminals:
            if j == i + 1 and kinds[i] == s:
                out = [(s,)]
        else:
            for p in g.productions:
                if p.lhs != s:
                    continue
                for children in seq(p.rhs, i, j):
                    out.append((s,) + children)
        memo[key] = out
        return out

    return sym(start, 0, len(kinds))


def lr_tree_shape(tree) -> tuple:
    """ConcreteTree -> comparable tuple shape (positions and payloads erased)."""
    if not tree.children:
        if tree.production is None:
            return (tree.symbol,)
        return (tree.symbol,)  # epsilon node
    return (tree.symbol,) + tuple(lr_tree_shape(c) for c in tree.children)
