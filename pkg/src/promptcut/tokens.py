"""Token-passing processes on directed graphs.

Local states are strings ``"<base>/<bit>"`` where the bit marks token
possession. Processes are numbered 1..n; a global state is a tuple whose
slot ``i - 1`` holds process i. Step labels are ``("eps", i)`` or
``("snd", i, j)`` for a send along the edge (i, j).
"""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

from .formula import Atom
from .protocol import ReplayError, SystemLasso, TemplateError, windows_ok

__all__ = [
    "TokenProcess", "TokenGraph", "TokenSystem", "ImmediateSend", "ACTIONS",
    "connectivity_vector", "connectivity_vector_bruteforce", "token_fair",
    "immediately_sends_paths", "synth_reduction_graph", "UnrealizableVector",
    "local_state", "base_of", "bit_of", "ring", "clique", "star",
]

ACTIONS = ("eps", "snd", "rcv")


def local_state(base: str, bit: int) -> str:
    return f"{base}/{bit}"


def base_of(q: str) -> str:
    return q.rsplit("/", 1)[0]


def bit_of(q: str) -> int:
    return int(q.rsplit("/", 1)[1])


@dataclass(frozen=True)
class TokenProcess:
    name: str
    base: tuple[str, ...]
    init: frozenset
    transitions: tuple[tuple[str, str, str], ...]

    def __post_init__(self):
        object.__setattr__(self, "init", frozenset(self.init))
        states = set(self.states)
        for q in self.init:
            if q not in states:
                raise TemplateError(f"{self.name}: initial state {q!r} is not declared")
        if not any(bit_of(q) == 0 for q in self.init) or not any(bit_of(q) == 1 for q in self.init):
            raise TemplateError(f"{self.name}: initial states must include a token and a token-free state")
        for src, a, dst in self.transitions:
            if src not in states or dst not in states:
                raise TemplateError(f"{self.name}: transition {src} -{a}-> {dst} uses undeclared states")
            bits = (bit_of(src), bit_of(dst))
            ok = {"eps": bits[0] == bits[1], "snd": bits == (1, 0), "rcv": bits == (0, 1)}
            if a not in ok:
                raise TemplateError(f"{self.name}: unknown action {a!r}")
            if not ok[a]:
                raise TemplateError(f"{self.name}: {a} transition {src} -> {dst} breaks the token bit rule")

    @property
    def states(self) -> tuple[str, ...]:
        return tuple(local_state(q, b) for q in self.base for b in (0, 1))

    @cached_property
    def by_action(self) -> dict[tuple[str, str], tuple[str, ...]]:
        out: dict = {}
        for src, a, dst in self.transitions:
            out.setdefault((src, a), []).append(dst)
        return {k: tuple(v) for k, v in out.items()}

    def post(self, q: str, action: str) -> tuple[str, ...]:
        return self.by_action.get((q, action), ())


@dataclass(frozen=True)
class TokenGraph:
    n: int
    edges: frozenset

    def __post_init__(self):
        object.__setattr__(self, "edges", frozenset(tuple(e) for e in self.edges))
        for i, j in self.edges:
            if not (1 <= i <= self.n and 1 <= j <= self.n):
                raise ValueError(f"edge ({i},{j}) leaves the vertex range 1..{self.n}")
            if i == j:
                raise ValueError(f"self loop at vertex {i}")

    @cached_property
    def out(self) -> dict[int, tuple[int, ...]]:
        return {v: tuple(sorted(j for i, j in self.edges if i == v)) for v in range(1, self.n + 1)}


def ring(n: int) -> TokenGraph:
    return TokenGraph(n, {(i, i % n + 1) for i in range(1, n + 1)})


def clique(n: int) -> TokenGraph:
    return TokenGraph(n, {(i, j) for i in range(1, n + 1) for j in range(1, n + 1) if i != j})


def star(n: int) -> TokenGraph:
    return TokenGraph(n, {(1, j) for j in range(2, n + 1)} | {(j, 1) for j in range(2, n + 1)})


def _reaches(g: TokenGraph, starts: Iterable[int], target: int, avoid: set[int]) -> bool:
    seen = set()
    stack = [v for v in starts if v not in avoid]
    while stack:
        v = stack.pop()
        if v == target:
            return True
        if v in seen:
            continue
        seen.add(v)
        stack.extend(w for w in g.out[v] if w not in avoid or w == target)
    return False


def connectivity_vector(g: TokenGraph, i: int, j: int) -> tuple[int, ...]:
    if i == j or not (1 <= i <= g.n and 1 <= j <= g.n):
        raise ValueError("need two distinct vertices of the graph")

    def half(i, j):
        # u1: non-empty cycle through i that avoids j
        u1 = _reaches(g, [w for w in g.out[i] if w != j], i, {j})
        # u2: path i -> j whose interior avoids i and j (at least one interior vertex)
        u2 = _reaches(g, [w for w in g.out[i] if w != j], j, {i, j})
        u3 = (i, j) in g.edges
        return [int(u1), int(u2), int(u3)]

    return tuple(half(i, j) + half(j, i))


def connectivity_vector_bruteforce(g: TokenGraph, i: int, j: int) -> tuple[int, ...]:
    """Same vector by enumerating every simple path explicitly."""
    others = [v for v in range(1, g.n + 1) if v not in (i, j)]

    def is_path(seq):
        return all((a, b) in g.edges for a, b in zip(seq, seq[1:]))

    def half(i, j):
        mids = [list(p) for r in range(len(others) + 1) for p in itertools.permutations(others, r)]
        u1 = any(is_path([i] + m + [i]) for m in mids if m)
        u2 = any(is_path([i] + m + [j]) for m in mids if m)
        return [int(u1), int(u2), int((i, j) in g.edges)]

    return tuple(half(i, j) + half(j, i))


@dataclass(frozen=True)
class TokenSystem:
    """``T^n_G``: n copies of one process template synchronised by token passing."""

    t: TokenProcess
    g: TokenGraph

    @property
    def n(self) -> int:
        return self.g.n

    @property
    def processes(self) -> range:
        return range(1, self.n + 1)

    def initial_states(self) -> list[tuple[str, ...]]:
        holders = sorted(q for q in self.t.init if bit_of(q) == 1)
        free = sorted(q for q in self.t.init if bit_of(q) == 0)
        out = []
        for h in range(self.n):
            for rest in itertools.product(free, repeat=self.n - 1):
                out.append(rest[:h] + (holders[0],) + rest[h:])
                for other in holders[1:]:
                    out.append(rest[:h] + (other,) + rest[h:])
        return sorted(set(out))

    @staticmethod
    def local(state: Sequence[str], p: int) -> str:
        return state[p - 1]

    def holds(self, atom: Atom, state: Sequence[str]) -> bool:
        if atom.role == "A":
            raise ValueError("token systems have no A process")
        return state[atom.process - 1] == atom.state

    def atom_of(self, p: int, state: Sequence[str]) -> Atom:
        return Atom("B", p, state[p - 1])

    def moves(self, state: tuple[str, ...]):
        """Yield ``(label, successor)``; every successor keeps exactly one holder."""
        for i in self.processes:
            for q in self.t.post(state[i - 1], "eps"):
                yield ("eps", i), state[:i - 1] + (q,) + state[i:]
        for i, j in sorted(self.g.edges):
            for qi in self.t.post(state[i - 1], "snd"):
                for qj in self.t.post(state[j - 1], "rcv"):
                    s2 = list(state)
                    s2[i - 1], s2[j - 1] = qi, qj
                    yield ("snd", i, j), tuple(s2)

    def successors(self, state):
        out = list(dict.fromkeys((s2, lab) for lab, s2 in self.moves(state)))
        for s2, _ in out:
            assert holders(s2) == 1, "token conservation violated"
        return out

    @staticmethod
    def credited(label) -> tuple[int, ...]:
        return (label[2],) if label[0] == "snd" else ()

    def step_ok(self, s, label, s2) -> bool:
        return any(lab == label and t == s2 for lab, t in self.moves(tuple(s)))

    @staticmethod
    def describe_label(label) -> str:
        return f"T{label[1]}" if label[0] == "eps" else f"T{label[1]}->T{label[2]}"

    @property
    def local_states(self) -> set[str]:
        return set(self.t.states)


def holders(state: Sequence[str]) -> int:
    return sum(bit_of(q) for q in state)


def token_fair(x: SystemLasso, b: int, n: int) -> bool:
    """Every process receives the token inside every window of b+1 moments."""
    pre = [lab for _, lab in x.prefix]
    per = [lab for _, lab in x.period]
    rcv = lambda lab, p: lab[0] == "snd" and lab[2] == p
    return all(windows_ok([rcv(l, p) for l in pre], [rcv(l, p) for l in per], b)
               for p in range(1, n + 1))


@dataclass(frozen=True)
class ImmediateSend:
    """Fixed states and local paths for a process that passes the token on at once.

    Paths are lists of ``(action, state)`` steps. ``warmup`` leads from a
    token-free initial state to ``q_rcv``; ``relay_in`` starts with a receive
    and ends in ``q_snd``; ``relay_out`` starts with a send and returns to
    ``q_rcv``. ``holder_start``/``holder_out`` serve a process that starts
    with the token: the first leads to a send-ready state, the second sends
    and reaches ``q_rcv`` (either may be None).
    """

    q_rcv: str
    q_snd: str
    init: str
    warmup: tuple[tuple[str, str], ...]
    relay_in: tuple[tuple[str, str], ...]
    relay_out: tuple[tuple[str, str], ...]
    holder_init: str | None = None
    holder_start: tuple[tuple[str, str], ...] | None = None
    holder_out: tuple[tuple[str, str], ...] | None = None

    @property
    def relay_length(self) -> int:
        return len(self.relay_in) + len(self.relay_out)


def _bfs_paths(t: TokenProcess, sources: Iterable[str], first: str | None) -> dict[str, tuple]:
    """Shortest local paths: optionally one ``first`` action, then eps moves only."""
    dist: dict[str, tuple] = {}
    queue: deque = deque()
    if first is None:
        for s in sorted(sources):
            dist.setdefault(s, ())
            queue.append(s)
    else:
        for s in sorted(sources):
            for q in t.post(s, first):
                if q not in dist:
                    dist[q] = ((first, q),)
                    queue.append(q)
    while queue:
        q = queue.popleft()
        for q2 in t.post(q, "eps"):
            if q2 not in dist:
                dist[q2] = dist[q] + (("eps", q2),)
                queue.append(q2)
    return dist


def replay_local(t: TokenProcess, start: str, path: Sequence[tuple[str, str]]) -> bool:
    q = start
    for a, q2 in path:
        if q2 not in t.post(q, a):
            return False
        q = q2
    return True


def immediately_sends_paths(t: TokenProcess) -> ImmediateSend | None:
    free_inits = sorted(q for q in t.init if bit_of(q) == 0)
    warm = {}
    for q0 in free_inits:
        for q, p in _bfs_paths(t, [q0], None).items():
            if q not in warm or len(p) < len(warm[q][1]):
                warm[q] = (q0, p)
    for q_rcv in sorted(q for q in warm if bit_of(q) == 0):
        ins = _bfs_paths(t, [q_rcv], "rcv")
        for q_snd in sorted(q for q in ins if bit_of(q) == 1):
            outs = _bfs_paths(t, [q_snd], "snd")
            if q_rcv not in outs:
                continue
            q0, wp = warm[q_rcv]
            res = _with_holder(t, ImmediateSend(q_rcv, q_snd, q0, wp, ins[q_snd], outs[q_rcv]))
            assert replay_local(t, q0, res.warmup)
            assert replay_local(t, q_rcv, res.relay_in) and res.relay_in[0][0] == "rcv"
            assert replay_local(t, q_snd, res.relay_out) and res.relay_out[0][0] == "snd"
            assert res.relay_length <= len(t.states), "immediate send exceeds |Q_T| actions"
            return res
    return None


def _with_holder(t: TokenProcess, s: ImmediateSend) -> ImmediateSend:
    for h in sorted(q for q in t.init if bit_of(q) == 1):
        reach = _bfs_paths(t, [h], None)
        for q in sorted(reach, key=lambda q: (len(reach[q]), q)):
            outs = _bfs_paths(t, [q], "snd")
            if s.q_rcv in outs:
                return ImmediateSend(s.q_rcv, s.q_snd, s.init, s.warmup, s.relay_in, s.relay_out,
                                     h, reach[q], outs[s.q_rcv])
    return s


class UnrealizableVector(ValueError):
    pass


def synth_reduction_graph(v: Sequence[int]) -> TokenGraph:
    """Least 4-vertex graph with ``v(G', 1, 2) = v`` containing the edges (3,2) and (4,1).

    Vertices 1, 2 play the kept processes, 3 and 4 the helpers. Candidates
    are ordered by edge count, then by their sorted edge list.
    """
    v = tuple(v)
    required = {(3, 2), (4, 1)}
    free = [(a, b) for a in range(1, 5) for b in range(1, 5) if a != b and (a, b) not in required]
    best = None
    for mask in range(1 << len(free)):
        edges = required | {e for k, e in enumerate(free) if mask >> k & 1}
        g = TokenGraph(4, edges)
        if connectivity_vector(g, 1, 2) != v:
            continue
        key = (len(edges), sorted(edges))
        if best is None or key < best[0]:
            best = (key, g)
    if best is None:
        raise UnrealizableVector(f"no 4-vertex graph realizes connectivity vector {v}")
    assert connectivity_vector(best[1], 1, 2) == v
    return best[1]
