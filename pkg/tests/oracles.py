"""Independent reference implementations used to cross-check the library."""

from __future__ import annotations

from functools import lru_cache
from itertools import product

from promptcut.formula import LassoWord


def brute_d_equiv_padded(w: tuple, w2: tuple, d: int) -> bool:
    """Block-decomposition search for ``w·c^ω`` against ``w2·c'^ω``.

    Both words are cut into constant blocks paired one to one with lengths
    within a factor d. Once both cuts have entered the constant tails the
    rest pairs block for block, so the search runs over finite words with
    enough tail letters appended to cover any crossing block.
    """
    if w[-1] != w2[-1]:
        return False
    c = w[-1]
    pad = d * max(len(w), len(w2)) + d
    x = tuple(w) + (c,) * pad
    y = tuple(w2) + (c,) * pad

    @lru_cache(maxsize=None)
    def go(i, j):
        if i >= len(w) and j >= len(w2):
            return True
        if i == len(x) or j == len(y) or x[i] != y[j]:
            return False
        a_max = 0
        while i + a_max < len(x) and x[i + a_max] == x[i]:
            a_max += 1
        b_max = 0
        while j + b_max < len(y) and y[j + b_max] == y[j]:
            b_max += 1
        for a in range(1, a_max + 1):
            for b in range(max(1, -(-a // d)), min(b_max, d * a) + 1):
                if go(i + a, j + b):
                    return True
        return False

    return go(0, 0)


def padded(word: tuple) -> LassoWord:
    """Finite word as a lasso whose last letter repeats forever."""
    return LassoWord(tuple(word[:-1]), (word[-1],))


def fair_windows(movers: list, period_start: int, procs, b: int) -> bool:
    """Scan three unrolled periods: every process moves in every window of b+1 moments."""
    u = movers[:period_start]
    v = movers[period_start:]
    seq = u + v * 4
    horizon = len(u) + 3 * len(v)
    for p in procs:
        if p not in v:
            return False
        for start in range(horizon):
            if p not in seq[start:start + b + 1]:
                return False
    return True


def product_states(system, b: int):
    """Reachable (state, counters) pairs of the bounded-fair system, enumerated directly."""
    procs = list(system.processes)
    start = [(s, (0,) * len(procs)) for s in system.initial_states()]
    seen = set(start)
    todo = list(start)
    while todo:
        s, ctr = todo.pop()
        for s2, lab in system.successors(s):
            movers = set(system.credited(lab))
            c2 = tuple(0 if p in movers else c + 1 for p, c in zip(procs, ctr))
            if max(c2) > b:
                continue
            if (s2, c2) not in seen:
                seen.add((s2, c2))
                todo.append((s2, c2))
    return seen


def all_digraphs(n: int):
    pairs = [(a, b) for a in range(1, n + 1) for b in range(1, n + 1) if a != b]
    for bits in product((0, 1), repeat=len(pairs)):
        yield frozenset(p for p, bit in zip(pairs, bits) if bit)
