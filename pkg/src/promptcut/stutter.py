"""Bounded stutter equivalence of ultimately periodic words.

Every lasso has a unique maximal-run normal form: a finite list of prefix
runs followed by a repeating list of periodic runs, or by a single run of
infinite length when the tail is constant. Two lassos are d-stutter
equivalent exactly when their run sequences carry the same letters and
every pair of corresponding run lengths is within a factor d.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .formula import LassoWord

__all__ = ["Condensation", "PositionMap", "condense", "expand", "d_equiv", "min_d",
           "position_map", "NotStutterEquivalent"]

INF = math.inf


class NotStutterEquivalent(ValueError):
    pass


@dataclass(frozen=True)
class Condensation:
    """Maximal runs ``(letter, length)``; an infinite tail is one run of length ``inf``."""

    prefix: tuple[tuple[frozenset, int], ...]
    period: tuple[tuple[frozenset, float], ...]

    @property
    def infinite_tail(self) -> bool:
        return self.period[-1][1] == INF

    def run(self, r: int) -> tuple[frozenset, float]:
        p = len(self.prefix)
        if r < p:
            return self.prefix[r]
        if self.infinite_tail:
            if r == p:
                return self.period[0]
            raise IndexError(r)
        return self.period[(r - p) % len(self.period)]

    def run_count(self) -> float:
        return len(self.prefix) + 1 if self.infinite_tail else INF

    def run_start(self, r: int) -> int:
        p = len(self.prefix)
        if r <= p:
            return sum(int(m) for _, m in self.prefix[:r])
        base = sum(int(m) for _, m in self.prefix)
        if self.infinite_tail:
            raise IndexError(r)
        q = r - p
        per = sum(int(m) for _, m in self.period)
        full, rest = divmod(q, len(self.period))
        return base + full * per + sum(int(m) for _, m in self.period[:rest])

    def run_of(self, j: int) -> int:
        """Index of the run containing position j."""
        pos = 0
        for r, (_, m) in enumerate(self.prefix):
            if j < pos + m:
                return r
            pos += m
        p = len(self.prefix)
        if self.infinite_tail:
            return p
        per = int(sum(m for _, m in self.period))
        full, off = divmod(j - pos, per)
        for q, (_, m) in enumerate(self.period):
            if off < m:
                return p + full * len(self.period) + q
            off -= m
        raise AssertionError("unreachable")


def _runs(letters) -> list[list]:
    out: list[list] = []
    for a in letters:
        if out and out[-1][0] == a:
            out[-1][1] += 1
        else:
            out.append([a, 1])
    return out


def _primitive(runs: list) -> list:
    n = len(runs)
    for p in range(1, n + 1):
        if n % p == 0 and runs == runs[:p] * (n // p):
            return runs[:p]
    return runs


def condense(w: LassoWord) -> Condensation:
    u, v = list(w.prefix), list(w.period)
    if len(set(v)) == 1:
        runs = _runs(u + v[:1])
        letter = runs[-1][0]
        return Condensation(tuple((a, m) for a, m in runs[:-1]), ((letter, INF),))
    # first run boundary strictly inside the periodic region
    word = u + v + v
    start = next(p for p in range(len(u) + 1, len(word))
                 if word[p] != word[p - 1])
    prefix_runs = _runs(word[:start])
    cyc = word[start:start + len(v)]
    period_runs = _runs(cyc)
    if len(period_runs) > 1 and period_runs[0][0] == period_runs[-1][0]:
        # cannot happen: start is a boundary and the period repeats
        raise AssertionError("non-maximal periodic runs")
    period_runs = _primitive(period_runs)
    # absorb prefix runs that equal the tail of the period
    while prefix_runs and prefix_runs[-1] == period_runs[-1]:
        period_runs = [prefix_runs.pop()] + period_runs[:-1]
    if prefix_runs and prefix_runs[-1][0] == period_runs[0][0]:
        raise AssertionError("adjacent runs with equal letters")
    return Condensation(tuple((a, m) for a, m in prefix_runs),
                        tuple((a, m) for a, m in period_runs))


def expand(c: Condensation) -> LassoWord:
    prefix = [a for a, m in c.prefix for _ in range(int(m))]
    if c.infinite_tail:
        return LassoWord(tuple(prefix), (c.period[0][0],))
    return LassoWord(tuple(prefix), tuple(a for a, m in c.period for _ in range(int(m))))


def _pairs(c1: Condensation, c2: Condensation):
    """Corresponding run pairs, enough of them to cover all behaviour; None on shape mismatch."""
    if c1.infinite_tail != c2.infinite_tail:
        return None
    if c1.infinite_tail:
        if len(c1.prefix) != len(c2.prefix):
            return None
        count = len(c1.prefix) + 1
    else:
        p = max(len(c1.prefix), len(c2.prefix))
        count = p + math.lcm(len(c1.period), len(c2.period))
    return [(c1.run(r), c2.run(r)) for r in range(count)]


def _ratio(m: float, m2: float) -> float:
    if m == INF or m2 == INF:
        return 1 if m == m2 else INF
    lo, hi = min(m, m2), max(m, m2)
    return -(-hi // lo)


def min_d(w: LassoWord, w2: LassoWord) -> int | None:
    """Least d with ``w ≡_d w2``, or None if the words are not bounded stutter equivalent."""
    pairs = _pairs(condense(w), condense(w2))
    if pairs is None:
        return None
    d = 1
    for (a, m), (b, m2) in pairs:
        if a != b:
            return None
        r = _ratio(m, m2)
        if r == INF:
            return None
        d = max(d, int(r))
    return d


def d_equiv(w: LassoWord, w2: LassoWord, d: int) -> bool:
    if d < 1:
        raise ValueError("d must be at least 1")
    m = min_d(w, w2)
    return m is not None and m <= d


@dataclass(frozen=True)
class PositionMap:
    """Maps a position of ``source`` to the positions of the aligned run in ``target``."""

    source: LassoWord
    target: LassoWord
    src_runs: Condensation
    dst_runs: Condensation

    def __call__(self, j: int) -> range:
        r = self.src_runs.run_of(j)
        if self.dst_runs.infinite_tail and r == len(self.dst_runs.prefix):
            # an infinite run: positions past one full fold repeat behaviour
            start = self.dst_runs.run_start(r)
            stop = max(start, len(self.target.prefix)) + len(self.target.period)
            return range(start, stop)
        start = self.dst_runs.run_start(r)
        return range(start, start + int(self.dst_runs.run(r)[1]))


def position_map(w: LassoWord, w2: LassoWord) -> PositionMap:
    if min_d(w, w2) is None:
        raise NotStutterEquivalent("words are not bounded stutter equivalent")
    return PositionMap(w, w2, condense(w), condense(w2))
