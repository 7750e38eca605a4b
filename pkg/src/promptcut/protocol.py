"""Guarded protocols ``A || B^n``: templates, composition, runs and fairness."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Hashable, Iterable, Sequence

from .formula import Atom, LassoWord

__all__ = [
    "Guard", "Transition", "ProcessTemplate", "GuardedSystem", "FairnessSpec",
    "SystemLasso", "ReplayError", "TemplateError", "Classification", "classify",
    "BoundedFairSystem", "FAILURE", "is_fair", "project", "find_deadlocks",
    "process_name", "parse_process_name", "reachable", "windows_ok",
]

EXISTS = "exists"
FORALL = "forall"


class TemplateError(ValueError):
    pass


class ReplayError(ValueError):
    """A lasso step that is not a legal transition; ``step`` is its moment."""

    def __init__(self, message: str, step: int):
        self.step = step
        super().__init__(f"replay failed at step {step}: {message}")


@dataclass(frozen=True)
class Guard:
    quantifier: str
    states: frozenset

    def __post_init__(self):
        if self.quantifier not in (EXISTS, FORALL):
            raise TemplateError(f"unknown guard quantifier {self.quantifier!r}")
        object.__setattr__(self, "states", frozenset(self.states))

    def __str__(self) -> str:
        return f"{self.quantifier}{{{', '.join(sorted(self.states))}}}"


@dataclass(frozen=True)
class Transition:
    src: str
    guard: Guard
    dst: str


@dataclass(frozen=True)
class ProcessTemplate:
    name: str
    states: tuple[str, ...]
    init: str
    transitions: tuple[Transition, ...]

    def __post_init__(self):
        if self.init not in self.states:
            raise TemplateError(f"{self.name}: initial state {self.init!r} is not declared")
        if len(set(self.states)) != len(self.states):
            raise TemplateError(f"{self.name}: duplicate state names")
        for t in self.transitions:
            for q in (t.src, t.dst):
                if q not in self.states:
                    raise TemplateError(f"{self.name}: transition uses undeclared state {q!r}")

    @cached_property
    def outgoing(self) -> dict[str, tuple[Transition, ...]]:
        out: dict[str, list] = {q: [] for q in self.states}
        for t in self.transitions:
            out[t.src].append(t)
        return {q: tuple(ts) for q, ts in out.items()}


def process_name(p: int) -> str:
    return "A" if p == 0 else f"B{p}"


def parse_process_name(name: str) -> int:
    if name == "A":
        return 0
    if name.startswith("B") and name[1:].isdigit() and int(name[1:]) >= 1:
        return int(name[1:])
    raise ValueError(f"bad process name {name!r}")


@dataclass(frozen=True)
class Classification:
    kind: str  # disjunctive | conjunctive | mixed
    neutral_inits: bool
    bounded_initializing: bool
    notes: tuple[str, ...] = ()


def _has_cycle(nodes: set, edges: dict) -> bool:
    color: dict = {}
    for root in nodes:
        if root in color:
            continue
        stack = [(root, iter(edges.get(root, ())))]
        color[root] = 1
        while stack:
            node, it = stack[-1]
            nxt = next(it, None)
            if nxt is None:
                color[node] = 2
                stack.pop()
            elif nxt not in nodes:
                continue
            elif color.get(nxt) == 1:
                return True
            elif nxt not in color:
                color[nxt] = 1
                stack.append((nxt, iter(edges.get(nxt, ()))))
    return False


def is_bounded_initializing(t: ProcessTemplate) -> bool:
    """Every cycle of the template passes through its initial state."""
    edges: dict = {}
    for tr in t.transitions:
        edges.setdefault(tr.src, []).append(tr.dst)
    return not _has_cycle(set(t.states) - {t.init}, edges)


def classify(a: ProcessTemplate, b: ProcessTemplate) -> Classification:
    guards = [t.guard for t in a.transitions + b.transitions]
    notes = []
    bi = is_bounded_initializing(b)
    if all(g.quantifier == EXISTS for g in guards):
        return Classification("disjunctive", True, bi)
    if all(g.quantifier == FORALL for g in guards):
        neutral = all({a.init, b.init} <= g.states for g in guards)
        if not neutral:
            notes.append("some universal guard does not contain both initial states")
            return Classification("mixed", False, bi, tuple(notes))
        if not bi:
            notes.append(f"{b.name} has a cycle avoiding {b.init}")
        return Classification("conjunctive", True, bi, tuple(notes))
    notes.append("templates mix existential and universal guards")
    return Classification("mixed", False, bi, tuple(notes))


@dataclass(frozen=True)
class GuardedSystem:
    """The interleaving composition ``A || B^n``; process 0 is A, process i is B_i."""

    a: ProcessTemplate
    b: ProcessTemplate
    n: int

    def __post_init__(self):
        if self.n < 1:
            raise TemplateError("need at least one B-process")
        clash = set(self.a.states) & set(self.b.states)
        if clash:
            raise TemplateError(f"state names shared by both templates: {sorted(clash)}")

    @property
    def processes(self) -> range:
        return range(self.n + 1)

    def template(self, p: int) -> ProcessTemplate:
        return self.a if p == 0 else self.b

    def initial(self) -> tuple[str, ...]:
        return (self.a.init,) + (self.b.init,) * self.n

    def initial_states(self) -> list[tuple[str, ...]]:
        return [self.initial()]

    @staticmethod
    def local(state: Sequence[str], p: int) -> str:
        return state[p]

    def holds(self, atom: Atom, state: Sequence[str]) -> bool:
        return state[atom.process] == atom.state

    def enabled(self, state: Sequence[str], p: int, t: Transition) -> bool:
        if state[p] != t.src:
            return False
        g = t.guard.states
        others = (state[q] for q in range(len(state)) if q != p)
        if t.guard.quantifier == EXISTS:
            return any(s in g for s in others)
        return all(s in g for s in others)

    def moves(self, state: tuple[str, ...]):
        """Yield ``(mover, transition, successor)`` for every enabled local transition."""
        for p in range(len(state)):
            for t in self.template(p).outgoing[state[p]]:
                if self.enabled(state, p, t):
                    yield p, t, state[:p] + (t.dst,) + state[p + 1:]

    def successors(self, state: tuple[str, ...]) -> list[tuple[tuple[str, ...], int]]:
        return list(dict.fromkeys((s2, p) for p, _, s2 in self.moves(state)))

    # engine hooks: fairness credit of a step label
    @staticmethod
    def credited(label: int) -> tuple[int, ...]:
        return (label,)

    def atom_of(self, p: int, state: Sequence[str]) -> Atom:
        return Atom("A", None, state[0]) if p == 0 else Atom("B", p, state[p])

    def step_ok(self, s: tuple, label: int, s2: tuple) -> bool:
        return any(p == label and t == s2 for p, _, t in self.moves(s))

    def describe_label(self, label: int) -> str:
        return process_name(label)

    @property
    def local_states(self) -> set[str]:
        return set(self.a.states) | set(self.b.states)


FAILURE = "FAILURE"


@dataclass(frozen=True)
class BoundedFairSystem:
    """Counter augmentation: one counter per scoped process, failure once one exceeds ``b``."""

    system: object
    b: int
    scope: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.b < 1:
            raise ValueError("fairness bound must be at least 1")

    @property
    def counted(self) -> tuple[int, ...]:
        return tuple(self.system.processes) if self.scope is None else self.scope

    def initial_states(self):
        zero = (0,) * len(self.counted)
        return [(s, zero) for s in self.system.initial_states()]

    def successors(self, cs):
        if cs == FAILURE:
            return []
        s, ctr = cs
        out = []
        for s2, p in self.system.successors(s):
            c2 = _bump(ctr, self.counted, self.system.credited(p), self.b)
            out.append((FAILURE if c2 is None else (s2, c2), p))
        return out


def _bump(ctr: tuple, counted: tuple, credited: Iterable[int], b: int):
    credited = set(credited)
    out = []
    for c, p in zip(ctr, counted):
        c = 0 if p in credited else c + 1
        if c > b:
            return None
        out.append(c)
    return tuple(out)


@dataclass(frozen=True)
class FairnessSpec:
    kind: str  # unconditional | global-bounded | local-bounded
    b: int | None = None
    scope: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        if self.kind not in ("unconditional", "global-bounded", "local-bounded"):
            raise ValueError(f"unknown fairness kind {self.kind!r}")
        if self.kind != "unconditional" and (self.b is None or self.b < 1):
            raise ValueError("bounded fairness needs b >= 1")
        if self.kind == "local-bounded" and not self.scope:
            raise ValueError("local bounded fairness needs a non-empty scope")
        object.__setattr__(self, "scope", frozenset(self.scope))

    @classmethod
    def gb(cls, b: int) -> "FairnessSpec":
        return cls("global-bounded", b)

    @classmethod
    def lb(cls, b: int, scope: Iterable[int]) -> "FairnessSpec":
        return cls("local-bounded", b, frozenset(scope))


@dataclass(frozen=True)
class SystemLasso:
    """Ultimately periodic run; each step is ``(state, label)`` where the label says who moves next.

    For guarded systems the label is the moving process; token systems use
    action tuples. The last period step leads back to ``period[0]``.
    """

    prefix: tuple[tuple[tuple, object], ...]
    period: tuple[tuple[tuple, object], ...]

    def __post_init__(self):
        if not self.period:
            raise ValueError("lasso period must be non-empty")
        object.__setattr__(self, "prefix", tuple((tuple(s), m) for s, m in self.prefix))
        object.__setattr__(self, "period", tuple((tuple(s), m) for s, m in self.period))

    def __len__(self) -> int:
        return len(self.prefix) + len(self.period)

    def steps(self):
        return self.prefix + self.period

    def step(self, t: int):
        u = len(self.prefix)
        if t < u:
            return self.prefix[t]
        return self.period[(t - u) % len(self.period)]

    def state(self, t: int) -> tuple:
        return self.step(t)[0]

    def label(self, t: int):
        return self.step(t)[1]

    def unrolled(self, length: int) -> list:
        return [self.step(t) for t in range(length)]

    def transitions(self):
        """``(t, state, label, next_state)`` for one folded copy of the run."""
        steps = self.steps()
        u = len(self.prefix)
        for t, (s, m) in enumerate(steps):
            nxt = steps[t + 1][0] if t + 1 < len(steps) else steps[u][0]
            yield t, s, m, nxt

    def validate(self, system, initial=None) -> None:
        """Replay every step through ``system``; raise :class:`ReplayError` on the first bad one."""
        inits = system.initial_states() if initial is None else [initial]
        if self.steps()[0][0] not in inits:
            raise ReplayError("run does not start in an initial state", 0)
        for t, s, m, s2 in self.transitions():
            if not system.step_ok(s, m, s2):
                raise ReplayError(f"{system.describe_label(m)} cannot move {s} -> {s2}", t)

    def is_valid(self, system) -> bool:
        try:
            self.validate(system)
        except ReplayError:
            return False
        return True


def windows_ok(prefix_hits: Sequence[bool], period_hits: Sequence[bool], b: int) -> bool:
    """Every window of b+1 consecutive moments contains a hit (and hits recur)."""
    if not any(period_hits):
        return False
    u, v = len(prefix_hits), len(period_hits)
    seq = list(prefix_hits) + [period_hits[i % v] for i in range(v + b + 1)]
    gap = 0
    for t, hit in enumerate(seq):
        gap = 0 if hit else gap + 1
        if gap > b:
            return False
    return True


def is_fair(x: SystemLasso, f: FairnessSpec, processes: Iterable[int]) -> bool:
    processes = list(processes)
    pre = [x.prefix[t][1] for t in range(len(x.prefix))]
    per = [m for _, m in x.period]
    if not all(p in per for p in processes):
        return False
    if f.kind == "unconditional":
        return True
    scope = processes if f.kind == "global-bounded" else [p for p in processes if p in f.scope]
    return all(windows_ok([m == p for m in pre], [m == p for m in per], f.b) for p in scope)


def project(x: SystemLasso, procs: Iterable[int], system=None) -> LassoWord:
    """Letterize a run: each state becomes the atoms of ``procs`` that hold in it."""
    procs = list(procs)
    atom = system.atom_of if system is not None else (
        lambda p, s: Atom("A", None, s[0]) if p == 0 else Atom("B", p, s[p]))
    conv = lambda s: frozenset(atom(p, s) for p in procs)
    return LassoWord(tuple(conv(s) for s, _ in x.prefix), tuple(conv(s) for s, _ in x.period))


def reachable(initials: Iterable[Hashable], succ: Callable) -> dict:
    """Breadth-first reachable set; maps each state to its BFS parent."""
    parent: dict = {}
    queue: deque = deque()
    for s in initials:
        if s not in parent:
            parent[s] = None
            queue.append(s)
    while queue:
        s = queue.popleft()
        for s2 in succ(s):
            if s2 not in parent:
                parent[s2] = s
                queue.append(s2)
    return parent


def find_deadlocks(system: GuardedSystem) -> set[tuple[str, ...]]:
    seen = reachable(system.initial_states(), lambda s: [t for t, _ in system.successors(s)])
    return {s for s in seen if not system.successors(s)}
