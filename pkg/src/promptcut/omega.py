"""Büchi automata for prompt-free formulas and lasso search in product graphs.

The translation is a tableau expansion into a transition-based generalized
automaton (one acceptance set per Until subformula) followed by the usual
level-counter degeneralization. Transitions are guarded by conjunctions of
literals and read the letter of the *source* position.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Callable, Hashable, Iterable, Sequence

from .formula import (And, Const, Formula, LassoWord, Lit, Next, Or, Prompt, Release,
                      Until, subformulas)

__all__ = [
    "BuchiAutomaton", "ltl_to_buchi", "accepts", "Lasso", "nested_dfs", "fair_lasso",
    "shortest_lasso", "loop_erase", "splice_cycle",
]


@dataclass(frozen=True)
class BuchiAutomaton:
    """State-based Büchi automaton with literal-conjunction guards.

    ``transitions[q]`` lists ``(guard, q2)``; the guard is a frozenset of
    :class:`Lit` that must all hold in the letter being read.
    """

    states: tuple
    initial: Hashable
    accepting: frozenset
    transitions: dict

    def __len__(self) -> int:
        return len(self.states)

    def step(self, q, sat: Callable[[Lit], bool]) -> list:
        return [q2 for guard, q2 in self.transitions[q] if all(sat(l) for l in guard)]

    def step_letter(self, q, letter: frozenset) -> list:
        return self.step(q, lambda l: (l.atom in letter) == l.positive)

    @property
    def is_empty_language(self) -> bool:
        return not self.accepting


# --------------------------------------------------------------------------
# tableau


def _implies(f: Formula, g: Formula, memo: dict) -> bool:
    """Cheap syntactic implication ``f -> g``; sound but incomplete."""
    if f is g or f == g:
        return True
    key = (id(f), id(g))
    if key in memo:
        return memo[key]
    memo[key] = False
    if isinstance(g, Const) and g.value or isinstance(f, Const) and not f.value:
        r = True
    elif isinstance(f, Or):
        r = _implies(f.left, g, memo) and _implies(f.right, g, memo)
    elif isinstance(f, And) and (_implies(f.left, g, memo) or _implies(f.right, g, memo)):
        r = True
    elif isinstance(g, And):
        r = _implies(f, g.left, memo) and _implies(f, g.right, memo)
    elif isinstance(g, Or):
        r = _implies(f, g.left, memo) or _implies(f, g.right, memo)
    elif isinstance(f, Next) and isinstance(g, Next):
        r = _implies(f.operand, g.operand, memo)
    elif isinstance(g, Until):
        r = _implies(f, g.right, memo)
    elif isinstance(f, Release) and isinstance(g, Release):
        r = _implies(f.left, g.left, memo) and _implies(f.right, g.right, memo)
    else:
        r = False
    memo[key] = r
    return r


def _reduce(obligations: frozenset) -> frozenset:
    """Drop obligations implied by another one; keeps the conjunction's meaning."""
    if len(obligations) < 2:
        return obligations
    memo: dict = {}
    items = sorted(obligations, key=repr)
    keep = []
    for f in items:
        if any(g is not f and g != f and _implies(g, f, memo) and
               not (_implies(f, g, memo) and items.index(g) > items.index(f))
               for g in items):
            continue
        keep.append(f)
    return frozenset(keep)


def _expand(obligations: frozenset):
    """Tableau covers: ``(literals, next obligations, postponed untils)``."""
    out = []

    def go(todo, lits, nexts, post):
        while todo:
            f, todo = todo[-1], todo[:-1]
            if isinstance(f, Const):
                if not f.value:
                    return
            elif isinstance(f, Lit):
                if Lit(f.atom, not f.positive) in lits:
                    return
                lits = lits | {f}
            elif isinstance(f, And):
                todo = todo + (f.left, f.right)
            elif isinstance(f, Or):
                go(todo + (f.left,), lits, nexts, post)
                todo = todo + (f.right,)
            elif isinstance(f, Next):
                nexts = nexts | {f.operand}
            elif isinstance(f, Until):
                go(todo + (f.right,), lits, nexts, post)
                todo, nexts, post = todo + (f.left,), nexts | {f}, post | {f}
            elif isinstance(f, Release):
                go(todo + (f.left, f.right), lits, nexts, post)
                todo, nexts = todo + (f.right,), nexts | {f}
            elif isinstance(f, Prompt):
                raise ValueError("translate instantiate_k(phi, k), not a formula with Fp")
            else:
                raise TypeError(f)
        out.append((frozenset(lits), frozenset(nexts), frozenset(post)))

    go(tuple(obligations), frozenset(), frozenset(), frozenset())
    return list(dict.fromkeys(out))


def ltl_to_buchi(phi: Formula) -> BuchiAutomaton:
    untils = [f for f in subformulas(phi) if isinstance(f, Until)]
    m = len(untils)
    start = _reduce(frozenset([phi]))
    tgba: dict = {}
    queue = deque([start])
    while queue:
        s = queue.popleft()
        if s in tgba:
            continue
        edges = []
        for lits, nexts, post in _expand(s):
            t = _reduce(nexts)
            acc = frozenset(i for i, u in enumerate(untils) if u not in post)
            edges.append((lits, t, acc))
            if t not in tgba:
                queue.append(t)
        tgba[s] = list(dict.fromkeys(edges))
    # degeneralize: level j waits for acceptance set j; level m is accepting
    init = (start, 0 if m else m)
    trans: dict = {}
    queue = deque([init])
    while queue:
        q = queue.popleft()
        if q in trans:
            continue
        s, j = q
        edges = []
        for lits, t, acc in tgba[s]:
            lvl = 0 if j == m else j
            while lvl < m and lvl in acc:
                lvl += 1
            q2 = (t, lvl)
            edges.append((lits, q2))
            if q2 not in trans:
                queue.append(q2)
        trans[q] = tuple(dict.fromkeys(edges))
    states = tuple(trans)
    return BuchiAutomaton(states, init, frozenset(q for q in states if q[1] == m), trans)


# --------------------------------------------------------------------------
# lasso search on implicit graphs


@dataclass(frozen=True)
class Lasso:
    """Vertices with outgoing edge labels; the last cycle edge returns to ``cycle[0]``."""

    stem: tuple
    cycle: tuple

    def vertices(self):
        return [v for v, _ in self.stem + self.cycle]


Succ = Callable[[Hashable], Iterable[tuple[Hashable, object]]]


def nested_dfs(roots: Iterable, succ: Succ, accepting: Callable[[Hashable], bool]) -> Lasso | None:
    """Classic two-phase search for a reachable cycle through an accepting vertex."""
    visited: set = set()
    flagged: set = set()
    for root in roots:
        if root in visited:
            continue
        visited.add(root)
        stack = [(root, iter(succ(root)))]
        path: list = [root]
        labels: list = []
        while stack:
            v, it = stack[-1]
            nxt = next(it, None)
            if nxt is not None:
                w, lab = nxt
                if w not in visited:
                    visited.add(w)
                    stack.append((w, iter(succ(w))))
                    path.append(w)
                    labels.append(lab)
                continue
            stack.pop()
            if accepting(v):
                cyc = _inner(v, succ, flagged)
                if cyc is not None:
                    stem = tuple(zip(path[:-1], labels))
                    return Lasso(stem, cyc)
            path.pop()
            if labels:
                labels.pop()
    return None


def _inner(seed, succ: Succ, flagged: set):
    stack = [(seed, iter(succ(seed)))]
    labels: list = []
    while stack:
        v, it = stack[-1]
        nxt = next(it, None)
        if nxt is None:
            stack.pop()
            if labels:
                labels.pop()
            continue
        w, lab = nxt
        if w == seed:
            verts = [x for x, _ in stack]
            return tuple(zip(verts, labels + [lab]))
        if w not in flagged:
            flagged.add(w)
            stack.append((w, iter(succ(w))))
            labels.append(lab)
    return None


def _bfs_path(sources: Iterable, succ: Succ, goal: Callable, allowed: Callable = lambda v: True,
              nonempty: bool = False):
    """Shortest path ``[(v, label), ...] + [goal vertex]`` from the sources."""
    parent: dict = {}
    queue: deque = deque()
    srcs = list(sources)
    for s in srcs:
        if not nonempty and goal(s):
            return [], s
        parent.setdefault(s, None)
        queue.append(s)
    while queue:
        v = queue.popleft()
        for w, lab in succ(v):
            if not allowed(w):
                continue
            if goal(w) and (nonempty or w not in parent):
                steps = [(v, lab)]
                x = v
                while parent.get(x) is not None:
                    px, pl = parent[x]
                    steps.append((px, pl))
                    x = px
                return steps[::-1], w
            if w not in parent:
                parent[w] = (v, lab)
                queue.append(w)
    return None


def shortest_lasso(roots: Iterable, succ: Succ, anchor, waypoints: Sequence[Callable] = (),
                   allowed: Callable = lambda v: True) -> Lasso:
    """Shortest stem to ``anchor`` and shortest cycle from it through each waypoint in turn."""
    got = _bfs_path(roots, succ, lambda v: v == anchor)
    if got is None:
        raise ValueError("anchor unreachable")
    stem, _ = got
    cycle: list = []
    cur = anchor
    for wp in list(waypoints) + [lambda v: v == anchor]:
        got = _bfs_path([cur], succ, wp, allowed, nonempty=True)
        if got is None:
            raise ValueError("cycle cannot be closed")
        steps, cur = got
        cycle.extend(steps)
    if cur != anchor:
        raise AssertionError("cycle does not close")
    return Lasso(tuple(stem), tuple(cycle))


def fair_lasso(roots: Iterable, succ: Succ, conditions: Sequence[Callable]) -> Lasso | None:
    """Lasso whose cycle meets every condition, via Tarjan SCCs on the reachable graph.

    Each condition is a vertex predicate; the returned cycle stays inside one
    non-trivial SCC that contains a vertex of every condition.
    """
    roots = list(roots)
    index: dict = {}
    low: dict = {}
    on_stack: set = set()
    comp_stack: list = []
    adj: dict = {}
    counter = 0

    def edges(v):
        if v not in adj:
            adj[v] = list(succ(v))
        return adj[v]

    for root in roots:
        if root in index:
            continue
        work = [(root, 0)]
        index[root] = low[root] = counter
        counter += 1
        comp_stack.append(root)
        on_stack.add(root)
        while work:
            v, i = work[-1]
            es = edges(v)
            if i < len(es):
                work[-1] = (v, i + 1)
                w = es[i][0]
                if w not in index:
                    index[w] = low[w] = counter
                    counter += 1
                    comp_stack.append(w)
                    on_stack.add(w)
                    work.append((w, 0))
                elif w in on_stack:
                    low[v] = min(low[v], index[w])
                continue
            work.pop()
            if work:
                u = work[-1][0]
                low[u] = min(low[u], low[v])
            if low[v] != index[v]:
                continue
            comp = set()
            while True:
                w = comp_stack.pop()
                on_stack.discard(w)
                comp.add(w)
                if w == v:
                    break
            if len(comp) == 1 and not any(w == v for w, _ in edges(v)):
                continue
            hits = [next((x for x in comp if c(x)), None) for c in conditions]
            if any(h is None for h in hits):
                continue
            anchor = hits[0] if hits else v
            inside = comp.__contains__
            return shortest_lasso(roots, edges, anchor,
                                  [lambda x, c=c: inside(x) and c(x) for c in conditions[1:]],
                                  inside)
    return None


def accepts(aut: BuchiAutomaton, w: LassoWord) -> bool:
    """Membership of an ultimately periodic word."""
    def succ(v):
        p, q = v
        nxt = w.successor(p)
        return [((nxt, q2), None) for q2 in aut.step_letter(q, w.letter(p))]

    return nested_dfs([(0, aut.initial)], succ, lambda v: v[1] in aut.accepting) is not None


# --------------------------------------------------------------------------
# lasso shortening


def loop_erase(path: Sequence[tuple]) -> list:
    """Remove every infix between two visits of the same vertex."""
    out: list = []
    pos: dict = {}
    for v, lab in path:
        if v in pos:
            cut = pos[v]
            for x, _ in out[cut:]:
                pos.pop(x, None)
            out = out[:cut]
        pos[v] = len(out)
        out.append((v, lab))
    return out


def splice_cycle(cycle: Sequence[tuple], keep: Callable[[Sequence[tuple]], bool]) -> list:
    """Greedily cut repeated-vertex infixes from a cycle while ``keep`` still holds."""
    cyc = list(cycle)
    changed = True
    while changed:
        changed = False
        seen: dict = {}
        for j, (v, _) in enumerate(cyc):
            if v in seen:
                cand = cyc[:seen[v]] + cyc[j:]
                if keep(cand):
                    cyc = cand
                    changed = True
                    break
            seen.setdefault(v, j)
    return cyc


# --------------------------------------------------------------------------
# run graph: system x fairness instrumentation x automaton


class RunGraph:
    """Lazy product of a system, its fairness instrumentation and an automaton.

    A vertex is ``(state, aux, round_done, q)``. ``aux[p]`` is a counter for
    processes with a window bound and a moved-bit for processes that only must
    move infinitely often; ``round_done`` marks the step on which every
    bit-tracked process has moved since the last reset. The automaton state
    reads the letter of ``state`` on the way out.

    ``symmetric`` lists state slots of interchangeable processes; vertices are
    then canonicalized by sorting those slots together with their aux entries.
    """

    def __init__(self, system, aut: BuchiAutomaton, *, counted: Sequence[int] = (),
                 tracked: Sequence[int] = (), b: int | None = None,
                 symmetric: Sequence[int] = ()):
        self.system = system
        self.aut = aut
        self.procs = list(system.processes)
        self.slot = {p: k for k, p in enumerate(self.procs)}
        self.counted = frozenset(counted)
        self.tracked = frozenset(tracked)
        if self.counted and b is None:
            raise ValueError("counters need a bound")
        self.b = b
        self.symmetric = tuple(symmetric)
        self.expanded = 0

    # vertices

    def canon(self, v):
        if len(self.symmetric) < 2:
            return v
        s, aux, flag, q = v
        idx = self.symmetric
        pairs = sorted((s[i], aux[i]) for i in idx)
        s2, a2 = list(s), list(aux)
        for i, (x, y) in zip(idx, pairs):
            s2[i], a2[i] = x, y
        return (tuple(s2), tuple(a2), flag, q)

    def roots(self) -> list:
        zero = (0,) * len(self.procs)
        return list(dict.fromkeys(self.canon((s, zero, not self.tracked, self.aut.initial))
                                  for s in self.system.initial_states()))

    def _aux(self, aux: tuple, credited):
        out = list(aux)
        for p in self.procs:
            k = self.slot[p]
            if p in self.counted:
                out[k] = 0 if p in credited else out[k] + 1
                if out[k] > self.b:
                    return None
            elif p in self.tracked and p in credited:
                out[k] = 1
        if not self.tracked:
            return tuple(out), True
        if all(out[self.slot[p]] for p in self.tracked):
            for p in self.tracked:
                out[self.slot[p]] = 0
            return tuple(out), True
        return tuple(out), False

    def succ_concrete(self, v):
        s, aux, _, q = v
        qs = self.aut.step(q, lambda l: self.system.holds(l.atom, s) == l.positive)
        if not qs:
            return []
        out = []
        for s2, label in self.system.successors(s):
            upd = self._aux(aux, self.system.credited(label))
            if upd is None:
                continue
            a2, flag = upd
            out.extend(((s2, a2, flag, q2), label) for q2 in qs)
        return out

    def succ(self, v):
        self.expanded += 1
        return list(dict.fromkeys((self.canon(w), lab) for w, lab in self.succ_concrete(v)))

    def accepting(self, v) -> bool:
        return v[3] in self.aut.accepting

    @staticmethod
    def round_done(v) -> bool:
        return v[2]

    def count_reachable(self) -> int:
        seen = set(self.roots())
        stack = list(seen)
        while stack:
            v = stack.pop()
            for w, _ in self.succ(v):
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        return len(seen)

    # search

    def find_lasso(self) -> Lasso | None:
        """An accepting fair lasso of the (possibly symmetry-reduced) graph."""
        if not self.tracked:
            found = nested_dfs(self.roots(), self.succ, self.accepting)
            if found is None:
                return None
            anchor = found.cycle[0][0]
            return shortest_lasso(self.roots(), self.succ, anchor)
        return fair_lasso(self.roots(), self.succ, [self.accepting, self.round_done])

    def concretize(self, lasso: Lasso) -> Lasso:
        """Map an abstract lasso to concrete vertices, then shorten it by splicing."""
        roots = {self.canon(r): r for r in (
            (s, (0,) * len(self.procs), not self.tracked, self.aut.initial)
            for s in self.system.initial_states())}
        cur = roots[lasso.stem[0][0] if lasso.stem else lasso.cycle[0][0]]
        abstract = list(lasso.stem) + list(lasso.cycle)
        targets = [v for v, _ in abstract[1:]] + [lasso.cycle[0][0]]
        path: list = []

        def advance(k):
            nonlocal cur
            want = targets[k]
            for w, lab in self.succ_concrete(cur):
                if self.canon(w) == want:
                    path.append((cur, lab))
                    cur = w
                    return
            raise AssertionError("abstract step has no concrete counterpart")

        for k in range(len(lasso.stem)):
            advance(k)
        starts: dict = {}
        u = len(lasso.stem)
        while cur not in starts:
            starts[cur] = len(path)
            for k in range(u, len(abstract)):
                advance(k)
        cut = starts[cur]
        stem, cycle = path[:cut], path[cut:]
        stem = loop_erase(stem + [(cycle[0][0], None)])[:-1]

        def keep(c):
            vs = [v for v, _ in c]
            return any(map(self.accepting, vs)) and (not self.tracked or any(map(self.round_done, vs)))

        cycle = splice_cycle(cycle, keep)
        assert keep(cycle)
        return Lasso(tuple(stem), tuple(cycle))


def lasso_bound(qa: int, qb: int, n: int, b: int, qaut: int) -> int:
    """``2 |Q_A| |Q_B|^n b^(n+1) |Q_aut|``."""
    return 2 * qa * qb ** n * b ** (n + 1) * qaut


def periodic_counterexample(graph: RunGraph, lasso: Lasso, bound: int | None = None):
    """Concrete fair, violating system lasso from an accepting product lasso."""
    from .protocol import SystemLasso

    conc = graph.concretize(lasso)
    x = SystemLasso(tuple((v[0], lab) for v, lab in conc.stem),
                    tuple((v[0], lab) for v, lab in conc.cycle))
    if bound is not None:
        assert len(x.prefix) <= bound and len(x.period) <= bound, (
            f"lasso of lengths {len(x.prefix)}/{len(x.period)} exceeds bound {bound}")
    return x, conc
