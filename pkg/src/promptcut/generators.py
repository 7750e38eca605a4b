"""Random formulas, words, templates and token processes for property tests."""

from __future__ import annotations

import random
from typing import Sequence

from .formula import (FALSE, TRUE, And, Atom, Formula, LassoWord, Lit, Or, Prompt, Release,
                      Until)
from .omega import BuchiAutomaton, RunGraph
from .protocol import EXISTS, FORALL, Guard, ProcessTemplate, SystemLasso, Transition
from .tokens import TokenGraph, TokenProcess, local_state

__all__ = [
    "random_formula", "random_word", "random_stutter_pair", "default_atoms",
    "random_disjunctive", "random_conjunctive", "random_token_process", "random_fair_lasso",
    "random_property", "random_graph",
]


def default_atoms(n: int = 2) -> list[Atom]:
    return [Atom("A", None, f"p{i}") for i in range(n)]


def random_formula(rng: random.Random, atoms: Sequence[Atom], depth: int,
                   prompt: bool = True) -> Formula:
    """NNF formula of nesting depth at most ``depth``."""
    if depth <= 0 or rng.random() < 0.2:
        r = rng.random()
        if r < 0.05:
            return TRUE if rng.random() < 0.5 else FALSE
        return Lit(rng.choice(atoms), rng.random() < 0.6)
    ops = ["and", "or", "U", "R", "F", "G"] + (["Fp", "Fp"] if prompt else [])
    op = rng.choice(ops)
    sub = lambda: random_formula(rng, atoms, depth - 1, prompt)
    match op:
        case "and":
            return And(sub(), sub())
        case "or":
            return Or(sub(), sub())
        case "U":
            return Until(sub(), sub())
        case "R":
            return Release(sub(), sub())
        case "F":
            return Until(TRUE, sub())
        case "G":
            return Release(FALSE, sub())
    return Prompt(sub())


_PATTERNS = {
    False: ["G {p}", "F {p}", "G F {p}", "F G {p}", "G ({p} | F {q})", "{p} U {q}"],
    True: ["G ({p} | Fp {q})", "Fp {p}", "G Fp {p}", "G ({p} | Fp ({q} & {r}))", "F G {p} | G Fp {q}"],
}


def random_property(rng: random.Random, atoms: Sequence[Atom], prompt: bool) -> Formula:
    """A common specification shape (response, recurrence, persistence) over random literals."""
    lit = lambda: Lit(rng.choice(atoms), rng.random() < 0.5)
    shape = rng.choice(_PATTERNS[prompt])
    p, q, r = lit(), lit(), lit()
    F = lambda f: Until(TRUE, f)
    G = lambda f: Release(FALSE, f)
    match shape:
        case "G {p}":
            return G(p)
        case "F {p}":
            return F(p)
        case "G F {p}":
            return G(F(p))
        case "F G {p}":
            return F(G(p))
        case "G ({p} | F {q})":
            return G(Or(p, F(q)))
        case "{p} U {q}":
            return Until(p, q)
        case "G ({p} | Fp {q})":
            return G(Or(p, Prompt(q)))
        case "Fp {p}":
            return Prompt(p)
        case "G Fp {p}":
            return G(Prompt(p))
        case "G ({p} | Fp ({q} & {r}))":
            return G(Or(p, Prompt(And(q, r))))
    return Or(F(G(p)), G(Prompt(q)))


def _letters(atoms: Sequence[Atom], count: int) -> list[frozenset]:
    out = []
    for mask in range(1 << len(atoms)):
        out.append(frozenset(a for i, a in enumerate(atoms) if mask >> i & 1))
    return out[:count]


def random_word(rng: random.Random, atoms: Sequence[Atom], max_len: int = 8,
                alphabet: int = 4) -> LassoWord:
    letters = _letters(atoms, alphabet)
    u = rng.randint(0, max_len - 1)
    v = rng.randint(1, max_len - u)
    return LassoWord(tuple(rng.choice(letters) for _ in range(u)),
                     tuple(rng.choice(letters) for _ in range(v)))


def _runs(rng, letters, count, first=None):
    out = []
    prev = first
    for _ in range(count):
        a = rng.choice([x for x in letters if x != prev])
        out.append(a)
        prev = a
    return out


def random_stutter_pair(rng: random.Random, atoms: Sequence[Atom], d: int,
                        max_len: int = 12, alphabet: int = 4) -> tuple[LassoWord, LassoWord]:
    """Two lassos that are d-stutter equivalent by construction.

    Both words share one run skeleton. Lengths in the second word stay
    within a factor d of the first; the period may be unrolled once with
    independently chosen lengths per copy.
    """
    letters = _letters(atoms, alphabet)
    while True:
        p = rng.randint(0, 3)
        q = rng.randint(1, 3)
        pre = _runs(rng, letters, p)
        if q == 1:
            per = [rng.choice([x for x in letters if not pre or x != pre[-1]])]
        else:
            per = _runs(rng, letters, q, pre[-1] if pre else None)
            if per[0] == per[-1]:
                continue
        m = [rng.randint(1, 3) for _ in pre + per]
        reps = 1 if q == 1 or rng.random() < 0.6 else 2
        m2 = []
        for x in m[:p]:
            m2.append(rng.randint(-(-x // d), x * d))
        for _ in range(reps):
            for x in m[p:]:
                m2.append(rng.randint(-(-x // d), x * d))
        w = _build(pre, per, m, 1)
        w2 = _build(pre, per, m2, reps)
        if len(w) <= max_len and len(w2) <= max_len:
            return w, w2


def _build(pre, per, lengths, reps) -> LassoWord:
    p = len(pre)
    u = tuple(a for a, m in zip(pre, lengths[:p]) for _ in range(m))
    if len(per) == 1:
        return LassoWord(u, (per[0],) * lengths[p])
    letters = per * reps
    v = tuple(a for a, m in zip(letters, lengths[p:]) for _ in range(m))
    return LassoWord(u, v)


def _guard(rng, quant, states, extra=()):
    k = rng.randint(1, len(states))
    return Guard(quant, frozenset(rng.sample(list(states), k)) | frozenset(extra))


def random_disjunctive(rng: random.Random, qa: int = 2, qb: int = 3,
                       density: float = 0.5) -> tuple[ProcessTemplate, ProcessTemplate]:
    """Random pair with existential guards; each state keeps at least one exit."""
    sa = tuple(f"a{i}" for i in range(qa))
    sb = tuple(f"b{i}" for i in range(qb))
    allq = sa + sb

    def make(name, states):
        ts = []
        for s in states:
            targets = [t for t in states if rng.random() < density] or [rng.choice(states)]
            for t in targets:
                ts.append(Transition(s, _guard(rng, EXISTS, allq), t))
        return ProcessTemplate(name, states, states[0], tuple(ts))

    return make("A", sa), make("B", sb)


def random_conjunctive(rng: random.Random, qa: int = 2, qb: int = 3,
                       density: float = 0.5) -> tuple[ProcessTemplate, ProcessTemplate]:
    """Random pair with universal guards containing both initial states.

    B is bounded initializing: its non-initial states form a DAG (edges only
    to higher-numbered states) plus edges back to the initial state.
    """
    sa = tuple(f"a{i}" for i in range(qa))
    sb = tuple(f"b{i}" for i in range(qb))
    allq = sa + sb
    inits = (sa[0], sb[0])

    ts_a = []
    for s in sa:
        targets = [t for t in sa if rng.random() < density] or [rng.choice(sa)]
        ts_a += [Transition(s, _guard(rng, FORALL, allq, inits), t) for t in targets]
    ts_b = []
    for i, s in enumerate(sb):
        later = list(sb[i + 1:]) if i else list(sb[1:]) + [sb[0]]
        back = [sb[0]] if i else []
        targets = [t for t in later + back if rng.random() < density] or [sb[0] if i else rng.choice(sb)]
        ts_b += [Transition(s, _guard(rng, FORALL, allq, inits), t) for t in targets]
    return (ProcessTemplate("A", sa, sa[0], tuple(ts_a)),
            ProcessTemplate("B", sb, sb[0], tuple(ts_b)))


def random_token_process(rng: random.Random, bases: int = 2, density: float = 0.4) -> TokenProcess:
    """Random process over ``bases`` base states (|Q_T| = 2 * bases) that can relay the token."""
    base = tuple(f"q{i}" for i in range(bases))
    q0, q1 = local_state(base[0], 0), local_state(base[0], 1)
    ts = {(q0, "rcv", q1), (q1, "snd", q0)}
    for a in base:
        for c in base:
            for bit in (0, 1):
                if a != c and rng.random() < density:
                    ts.add((local_state(a, bit), "eps", local_state(c, bit)))
            if rng.random() < density / 2:
                ts.add((local_state(a, 0), "rcv", local_state(c, 1)))
            if rng.random() < density / 2:
                ts.add((local_state(a, 1), "snd", local_state(c, 0)))
    init = {q0, q1}
    if rng.random() < 0.5:
        init.add(local_state(rng.choice(base), rng.randint(0, 1)))
    return TokenProcess("T", base, frozenset(init), tuple(sorted(ts)))


def random_graph(rng: random.Random, n: int, density: float = 0.4) -> TokenGraph:
    """Random strongly connected digraph: a shuffled Hamiltonian cycle plus random chords."""
    order = list(range(1, n + 1))
    rng.shuffle(order)
    edges = {(order[k], order[(k + 1) % n]) for k in range(n)}
    for a in range(1, n + 1):
        for b in range(1, n + 1):
            if a != b and rng.random() < density:
                edges.add((a, b))
    return TokenGraph(n, frozenset(edges))


_UNIVERSAL = BuchiAutomaton((0,), 0, frozenset({0}), {0: ((frozenset(), 0),)})


def random_fair_lasso(rng: random.Random, system, *, b: int | None = None, counted=(),
                      tracked=(), max_steps: int = 300, tries: int = 500) -> SystemLasso | None:
    """Random walk through the fairness-instrumented system until a vertex repeats.

    ``counted`` processes move within every b+1 moments (windows are enforced
    by the walk); ``tracked`` processes must move somewhere in the cycle.
    Returns None when no fair lasso turned up within ``tries`` walks.
    """
    g = RunGraph(system, _UNIVERSAL, counted=counted, tracked=tracked, b=b)
    roots = g.roots()
    for _ in range(tries):
        v = rng.choice(roots)
        path: list = []
        index: dict = {}
        while len(path) < max_steps:
            if v in index:
                cycle = path[index[v]:]
                if not tracked or any(w[2] for w, _ in cycle):
                    return SystemLasso(tuple((w[0], lab) for w, lab in path[:index[v]]),
                                       tuple((w[0], lab) for w, lab in cycle))
                break
            index[v] = len(path)
            nxt = g.succ_concrete(v)
            if not nxt:
                break
            w, lab = rng.choice(nxt)
            path.append((v, lab))
            v = w
    return None
