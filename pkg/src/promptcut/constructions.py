"""Executable run transformations between system sizes.

Each construction reads a lasso of one system and emits a lasso of another,
then checks three things on the output: it replays as a run, the kept
processes' views stay d-stutter equivalent, and it is fair at the stated
bound. The checks always run and failures are reported, never raised away.

All transformations are deterministic transducers over the steps of the
input. The output lasso is closed once the transducer's control state
repeats at a period boundary of the input.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Hashable, Sequence

from .formula import Atom, LassoWord
from .protocol import FairnessSpec, GuardedSystem, ReplayError, SystemLasso, classify, is_fair
from .stutter import min_d
from .tokens import (TokenGraph, TokenSystem, bit_of, connectivity_vector,
                     immediately_sends_paths, synth_reduction_graph, token_fair)

__all__ = [
    "ConstructionReport", "PreconditionError", "establish_interleaving", "mon_disj",
    "bound_disj", "mon_conj", "bound_conj", "mon_token", "bound_token", "view",
    "min_fair_bound", "min_token_bound", "LEMMAS",
]


class PreconditionError(ValueError):
    pass


@dataclass
class ConstructionReport:
    lemma: str
    source: SystemLasso
    output: SystemLasso | None
    system: object
    claimed_d: int
    measured_d: int | None
    claimed_bound: int
    fairness_kind: str
    valid: bool
    d_ok: bool
    fair: bool
    extra: dict = field(default_factory=dict)
    errors: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.valid and self.d_ok and self.fair and all(
            v for k, v in self.extra.items() if k.endswith("_ok"))

    @property
    def failures(self) -> list[str]:
        out = [name for name, good in (("run validity", self.valid),
                                       (f"d_equiv at d={self.claimed_d}", self.d_ok),
                                       (f"{self.fairness_kind} fairness at b={self.claimed_bound}",
                                        self.fair)) if not good]
        out += [k for k, v in self.extra.items() if k.endswith("_ok") and not v]
        return out


def view(x: SystemLasso, procs: Sequence[int], local: Callable) -> LassoWord:
    """The kept processes' local states, renumbered 1..len(procs) so views compare across systems."""
    conv = lambda s: frozenset(Atom("B", r + 1, local(s, p)) for r, p in enumerate(procs))
    return LassoWord(tuple(conv(s) for s, _ in x.prefix), tuple(conv(s) for s, _ in x.period))


def _glocal(s, p):
    return s[p]


def _tlocal(s, p):
    return s[p - 1]


def min_fair_bound(x: SystemLasso, procs: Sequence[int]) -> int | None:
    """Least b with every listed process moving in every window of b+1 moments."""
    per = [m for _, m in x.period]
    if any(p not in per for p in procs):
        return None
    u, v = len(x.prefix), len(per)
    movers = [m for _, m in x.prefix] + per * 3
    worst = 0
    for p in procs:
        gap = 0
        for t, m in enumerate(movers):
            gap = 0 if m == p else gap + 1
            if t < u + 2 * v:
                worst = max(worst, gap)
    return max(worst, 1)


def min_token_bound(x: SystemLasso, n: int) -> int | None:
    labs = [lab for _, lab in x.prefix] + [lab for _, lab in x.period] * 3
    per = [lab for _, lab in x.period]
    worst = 0
    for p in range(1, n + 1):
        if not any(l[0] == "snd" and l[2] == p for l in per):
            return None
        gap = 0
        for t, l in enumerate(labs):
            gap = 0 if (l[0] == "snd" and l[2] == p) else gap + 1
            if t < len(x.prefix) + 2 * len(per):
                worst = max(worst, gap)
    return max(worst, 1)


# --------------------------------------------------------------------------
# transducer driver


class _Transducer:
    """Emits output steps for each input step; ``key`` summarizes its control state."""

    def __init__(self, y0: tuple):
        self.y = tuple(y0)
        self.out: list = []

    def emit(self, label, **changes_by_slot):
        raise NotImplementedError

    def move(self, label, changes: dict):
        s = self.y
        self.out.append((s, label))
        s2 = list(s)
        for k, v in changes.items():
            s2[k] = v
        self.y = tuple(s2)

    def key(self) -> Hashable:
        return self.y


def _drive(x: SystemLasso, tr: _Transducer, step: Callable[[int], None], t_min: int = 0,
           max_rounds: int = 10_000) -> SystemLasso:
    u, v = len(x.prefix), len(x.period)
    marks: dict = {}
    t = 0
    while True:
        if t >= max(u, t_min) and (t - u) % v == 0:
            k = (tr.key(), tr.y)
            if k in marks:
                cut = marks[k]
                if cut == len(tr.out):
                    raise AssertionError("constructed period is empty")
                return SystemLasso(tuple(tr.out[:cut]), tuple(tr.out[cut:]))
            marks[k] = len(tr.out)
            if len(marks) > max_rounds:
                raise AssertionError("construction does not become periodic")
        step(t)
        t += 1


def _next_state(x: SystemLasso, t: int) -> tuple:
    return x.state(t + 1)


# --------------------------------------------------------------------------
# interleaving


def establish_interleaving(multi_prefix: Sequence, multi_period: Sequence) -> SystemLasso:
    """Split steps where several processes move at once into consecutive single moves.

    Input entries are ``(state, movers)``; the movers of an entry change their
    local states to those of the next entry, in the listed order.
    """
    def expand(seq, nxt_after):
        out = []
        for k, (s, movers) in enumerate(seq):
            nxt = seq[k + 1][0] if k + 1 < len(seq) else nxt_after
            cur = tuple(s)
            if not movers:
                if tuple(nxt) != cur:
                    raise ValueError(f"entry {k} changes state without a mover")
                continue
            for m in movers:
                out.append((cur, m))
                cur = cur[:m] + (nxt[m],) + cur[m + 1:]
            if cur != tuple(nxt):
                raise ValueError(f"entry {k}: movers do not account for the state change")
        return out

    period = expand(list(multi_period), multi_period[0][0])
    prefix = expand(list(multi_prefix), multi_period[0][0])
    if not period:
        raise ValueError("period has no moves")
    return SystemLasso(tuple(prefix), tuple(period))


def _guarded_report(lemma, x, y, system, procs_x, procs_y, d, bound, kind, scope, extra=None):
    errors = []
    valid = True
    try:
        y.validate(system)
    except ReplayError as e:
        valid = False
        errors.append(str(e))
    md = min_d(view(x, procs_x, _glocal), view(y, procs_y, _glocal))
    f = FairnessSpec.gb(bound) if kind == "gb" else FairnessSpec.lb(bound, scope)
    fair = is_fair(y, f, system.processes)
    return ConstructionReport(lemma, x, y, system, d, md, bound, kind, valid,
                              md is not None and md <= d, fair, extra or {}, errors)


def _check_input(x: SystemLasso, system, label: str):
    try:
        x.validate(system)
    except ReplayError as e:
        raise PreconditionError(f"{label}: input is not a run ({e})") from None


# --------------------------------------------------------------------------
# disjunctive systems


def mon_disj(system: GuardedSystem, x: SystemLasso, b: int, i: int = 2,
             mode: str = "lb") -> ConstructionReport:
    """Add ``B_{n+1}`` copying ``B_i``; every move of ``B_i`` is followed by the copy's move."""
    n = system.n
    if classify(system.a, system.b).kind != "disjunctive":
        raise PreconditionError("mon_disj needs disjunctive templates")
    if n < 2 or not 1 <= i <= n:
        raise PreconditionError("mon_disj needs n >= 2 and 1 <= i <= n")
    _check_input(x, system, "mon_disj")
    scope = (0, 1)
    if not is_fair(x, FairnessSpec.gb(b) if mode == "gb" else FairnessSpec.lb(b, scope), system.processes):
        raise PreconditionError(f"input is not {mode}-fair at b={b}")
    big = GuardedSystem(system.a, system.b, n + 1)

    def lift(seq):
        return [(s + (s[i],), (m, n + 1) if m == i else (m,)) for s, m in seq]

    y = establish_interleaving(lift(x.prefix), lift(x.period))
    return _guarded_report("mon-disj", x, y, big, [0, 1], [0, 1], 2, 2 * b, mode, scope,
                           {"copied": i})


def _bdisj_plan(system: GuardedSystem, x: SystemLasso):
    n = system.n
    u, v = len(x.prefix), len(x.period)
    horizon = u + v
    appear: dict = {}
    for t in range(horizon):
        s = x.state(t)
        for j in range(2, n + 1):
            appear.setdefault(s[j], []).append((t, j))
    inf_owner = {}
    for j in range(2, n + 1):
        for s, _ in x.period:
            inf_owner.setdefault(s[j], j) if s[j] not in inf_owner else None
    plans = []
    for q in sorted(appear):
        f_q, first = min(appear[q])
        if q in inf_owner:
            owner = inf_owner[q]
            r0 = next(t for t in range(f_q, f_q + horizon + v) if x.state(t)[owner] == q)
            plans.append(("inf", q, f_q, first, owner, r0))
        else:
            l_q = max(t for t, _ in appear[q])
            last = min(j for t, j in appear[q] if t == l_q)
            plans.append(("fin", q, f_q, first, l_q, last))
    return plans


def bound_disj(system: GuardedSystem, x: SystemLasso, b: int) -> ConstructionReport:
    """Shrink to ``A || B^c`` with ``c = 2|Q_B| + 1`` by flooding every visited state."""
    n = system.n
    qb = len(system.b.states)
    c = 2 * qb + 1
    if classify(system.a, system.b).kind != "disjunctive":
        raise PreconditionError("bound_disj needs disjunctive templates")
    if n < c:
        raise PreconditionError(f"bound_disj needs n >= 2|Q_B|+1 = {c}, got n = {n}")
    _check_input(x, system, "bound_disj")
    if not is_fair(x, FairnessSpec.lb(b, (0, 1)), system.processes):
        raise PreconditionError(f"input is not lb-fair at b={b}")
    plans = _bdisj_plan(system, x)
    # slots: 0 = A, 1 = B1, then one or two flooders per plan, then fillers copying B2
    roles = []
    for p in plans:
        roles.append(("flood", p, 0))
        if p[0] == "inf":
            roles.append(("flood", p, 1))
    while len(roles) < c - 1:
        roles.append(("fill", None, None))
    small = GuardedSystem(system.a, system.b, c)
    x0 = x.state(0)
    y0 = (x0[0], x0[1]) + tuple(x0[r[1][3]] if r[0] == "flood" else x0[2] for r in roles)
    tr = _Transducer(y0)
    active = {p: 0 for p in plans if p[0] == "inf"}
    cover_ok = [True]
    t_min = 1 + max([p[4] for p in plans if p[0] == "fin"] + [p[5] for p in plans if p[0] == "inf"]
                    + [p[2] for p in plans] + [0])

    def copiers(t, m):
        out = []
        for k, (kind, p, which) in enumerate(roles):
            slot = k + 2
            if kind == "fill":
                if m == 2:
                    out.append(slot)
                continue
            if t < p[2]:
                if m == p[3]:
                    out.append(slot)
            elif p[0] == "fin":
                if t >= p[4] and m == p[5]:
                    out.append(slot)
            elif t >= p[5] and m == p[4] and active[p] == which:
                out.append(slot)
        return out

    def step(t):
        s, m = x.step(t)
        s2 = x.state(t + 1)
        if m in (0, 1):
            tr.move(m, {m: s2[m]})
        else:
            for slot in copiers(t, m):
                tr.move(slot, {slot: s2[m]})
        for p in active:
            if t >= p[5] and m == p[4] and s2[m] == p[1]:
                active[p] ^= 1
        if not set(s2) <= set(tr.y):
            cover_ok[0] = False

    tr.key = lambda: tuple(sorted(active.items()))
    if not set(x0) <= set(y0):
        cover_ok[0] = False
    y = _drive(x, tr, step, t_min)
    # cover is rechecked on the folded output: every x moment maps to a y moment above
    return _guarded_report("bound-disj", x, y, small, [0, 1], [0, 1], c, b * c, "lb", (0, 1),
                           {"cover_ok": cover_ok[0], "c": c, "flooded": len(plans)})


# --------------------------------------------------------------------------
# conjunctive systems


def mon_conj(system: GuardedSystem, x: SystemLasso, b: int, i: int = 2,
             mode: str = "lb") -> ConstructionReport:
    """``B_{n+1}`` shares the run of ``B_i``: one idles in the initial state, roles swap on re-entry."""
    n = system.n
    cls = classify(system.a, system.b)
    if cls.kind != "conjunctive":
        raise PreconditionError("mon_conj needs conjunctive templates with neutral initial states")
    if mode == "gb" and not cls.bounded_initializing:
        raise PreconditionError("global mode needs a bounded-initializing B")
    if n < 2 or not 2 <= i <= n:
        raise PreconditionError("mon_conj needs n >= 2 and a shared process other than B1")
    _check_input(x, system, "mon_conj")
    scope = (0, 1)
    f_in = FairnessSpec.gb(b) if mode == "gb" else FairnessSpec.lb(b, scope)
    if not is_fair(x, f_in, system.processes):
        raise PreconditionError(f"input is not {mode}-fair at b={b}")
    init = system.b.init
    big = GuardedSystem(system.a, system.b, n + 1)
    tr = _Transducer(x.state(0) + (init,))
    who = [i]
    swaps = [0]

    def step(t):
        s, m = x.step(t)
        s2 = x.state(t + 1)
        if m == i:
            w = who[0]
            tr.move(w, {w: s2[i]})
            if s2[i] == init:
                who[0] = n + 1 if w == i else i
                swaps[0] += 1
        else:
            tr.move(m, {m: s2[m]})

    tr.key = lambda: who[0]
    y = _drive(x, tr, step)
    bound = b if mode == "lb" else b + len(system.b.states)
    return _guarded_report("mon-conj", x, y, big, [0, 1], [0, 1], 1, bound, mode, scope,
                           {"swaps": swaps[0]})


def bound_conj(system: GuardedSystem, x: SystemLasso, b: int) -> ConstructionReport:
    """Keep only A and B1 and delete every other move."""
    if classify(system.a, system.b).kind != "conjunctive":
        raise PreconditionError("bound_conj needs conjunctive templates with neutral initial states")
    _check_input(x, system, "bound_conj")
    if not is_fair(x, FairnessSpec.gb(b), system.processes):
        raise PreconditionError(f"input is not globally fair at b={b}")
    small = GuardedSystem(system.a, system.b, 1)
    tr = _Transducer(x.state(0)[:2])

    def step(t):
        s, m = x.step(t)
        if m in (0, 1):
            tr.move(m, {m: x.state(t + 1)[m]})

    y = _drive(x, tr, step)
    return _guarded_report("bound-conj", x, y, small, [0, 1], [0, 1], b, b, "gb", ())


# --------------------------------------------------------------------------
# token passing


def _holder(s) -> int:
    return next(p + 1 for p, q in enumerate(s) if bit_of(q) == 1)


def _token_report(lemma, x, y, system, procs_x, procs_y, d, bound, extra):
    errors = []
    valid = True
    try:
        y.validate(system)
    except ReplayError as e:
        valid = False
        errors.append(str(e))
    md = min_d(view(x, procs_x, _tlocal), view(y, procs_y, _tlocal))
    fair = token_fair(y, bound, system.n)
    return ConstructionReport(lemma, x, y, system, d, md, bound, "token", valid,
                              md is not None and md <= d, fair, extra, errors)


def _paths_or_fail(t):
    res = immediately_sends_paths(t)
    if res is None:
        raise PreconditionError("process has no immediately-sends states")
    return res


def mon_token(system: TokenSystem, x: SystemLasso, b: int, g: int = 1, h: int = 2,
              a: int | None = None) -> ConstructionReport:
    """Insert vertex n+1 behind ``a``: every send of ``a`` is relayed at once by the new process."""
    n, G = system.n, system.g
    if n < 3:
        raise PreconditionError("mon_token needs n >= 3")
    a = a if a is not None else min(v for v in range(1, n + 1) if v not in (g, h))
    if a in (g, h):
        raise PreconditionError("the rerouted vertex must differ from g and h")
    rel = _paths_or_fail(system.t)
    _check_input(x, system, "mon_token")
    if not token_fair(x, b, n):
        raise PreconditionError(f"input is not token-fair at b={b}")
    new = n + 1
    edges = {(p, q) for p, q in G.edges if p != a} | {(new, q) for p, q in G.edges if p == a} | {(a, new)}
    g2 = TokenGraph(n + 1, frozenset(edges))
    big = TokenSystem(system.t, g2)
    tr = _Transducer(x.state(0) + (rel.init,))
    for act, q in rel.warmup:
        tr.move(("eps", new), {new - 1: q})

    def step(t):
        s, lab = x.step(t)
        s2 = x.state(t + 1)
        if lab[0] == "eps":
            p = lab[1]
            tr.move(lab, {p - 1: s2[p - 1]})
        elif lab[1] != a:
            p, q = lab[1], lab[2]
            tr.move(lab, {p - 1: s2[p - 1], q - 1: s2[q - 1]})
        else:
            z = lab[2]
            tr.move(("snd", a, new), {a - 1: s2[a - 1], new - 1: rel.relay_in[0][1]})
            for _, q in rel.relay_in[1:]:
                tr.move(("eps", new), {new - 1: q})
            tr.move(("snd", new, z), {new - 1: rel.relay_out[0][1], z - 1: s2[z - 1]})
            for _, q in rel.relay_out[1:]:
                tr.move(("eps", new), {new - 1: q})

    y = _drive(x, tr, step)
    qt = len(system.t.states)
    v1, v2 = connectivity_vector(G, g, h), connectivity_vector(g2, g, h)
    bound = b + (b - n + 2) * qt
    return _token_report("mon-token", x, y, big, [g, h], [g, h], qt + 1, bound,
                         {"vector_ok": v1 == v2, "vector": v1, "graph": sorted(g2.edges),
                          "rerouted": a})


def _route(g2: TokenGraph, src: int, dst: int) -> list[int]:
    """Shortest helper chain from ``src`` to ``dst`` through vertices 3 and 4 only."""
    frontier = [[src]]
    seen = {src}
    while frontier:
        nxt = []
        for path in frontier:
            for w in g2.out[path[-1]]:
                if w == dst and len(path) > 1:
                    return path[1:]
                if w in (3, 4) and w not in seen:
                    seen.add(w)
                    nxt.append(path + [w])
        frontier = nxt
    raise PreconditionError(f"no helper route from {src} to {dst} in the reduced graph")


def bound_token(system: TokenSystem, x: SystemLasso, b: int, g: int = 1, h: int = 2) -> ConstructionReport:
    """Keep ``T_g, T_h`` as vertices 1, 2 of a 4-vertex graph; helpers 3, 4 carry the token outside."""
    n, G = system.n, system.g
    if n < 4:
        raise PreconditionError("bound_token needs n >= 4")
    if g == h:
        raise PreconditionError("g and h must differ")
    rel = _paths_or_fail(system.t)
    _check_input(x, system, "bound_token")
    if not token_fair(x, b, n):
        raise PreconditionError(f"input is not token-fair at b={b}")
    v = connectivity_vector(G, g, h)
    g2 = synth_reduction_graph(v)
    small = TokenSystem(system.t, g2)
    slot = {g: 1, h: 2}
    u_len, per = len(x.prefix), len(x.period)

    def next_receiver(t):
        for t2 in range(t + 1, t + 1 + u_len + 2 * per + 1):
            lab = x.label(t2)
            if lab[0] == "snd" and lab[2] in slot:
                return t2, lab[2]
        raise PreconditionError("token never returns to the kept processes")

    x0 = x.state(0)
    holder = _holder(x0)
    helpers = {3: rel.init, 4: rel.init}
    waiting: list = [None]  # (helper, out path) of the helper that will deliver next
    pre_moves = []
    if holder not in slot:
        if rel.holder_init is None:
            raise PreconditionError("no token-holding initial state can relay")
        _, target = next_receiver(-1)
        w = 3 if slot[target] == 2 else 4
        if (w, slot[target]) not in g2.edges:
            raise PreconditionError("reduced graph lacks the helper edge into the kept process")
        helpers[w] = rel.holder_init
        pre_moves += [(w, q) for _, q in rel.holder_start]
        waiting[0] = (w, rel.holder_out)
    for hp in (3, 4):
        if waiting[0] is None or waiting[0][0] != hp:
            pre_moves += [(hp, q) for _, q in rel.warmup]
    tr = _Transducer((x0[g - 1], x0[h - 1], helpers[3], helpers[4]))
    for hp, q in pre_moves:
        tr.move(("eps", hp), {hp - 1: q})

    def relay_through(chain, src_label_changes, src):
        # the first helper receives from src; all but the last relay immediately
        prev = src
        for k, w in enumerate(chain):
            if k == 0:
                tr.move(("snd", prev, w), {**src_label_changes, w - 1: rel.relay_in[0][1]})
            else:
                tr.move(("snd", prev, w), {prev - 1: rel.relay_out[0][1], w - 1: rel.relay_in[0][1]})
                for _, q in rel.relay_out[1:]:
                    tr.move(("eps", prev), {prev - 1: q})
            for _, q in rel.relay_in[1:]:
                tr.move(("eps", w), {w - 1: q})
            prev = w
        waiting[0] = (chain[-1], rel.relay_out)

    def step(t):
        s, lab = x.step(t)
        s2 = x.state(t + 1)
        if lab[0] == "eps":
            if lab[1] in slot:
                p = slot[lab[1]]
                tr.move(("eps", p), {p - 1: s2[lab[1] - 1]})
            return
        src, dst = lab[1], lab[2]
        if src in slot and dst in slot:
            tr.move(("snd", slot[src], slot[dst]),
                    {slot[src] - 1: s2[src - 1], slot[dst] - 1: s2[dst - 1]})
        elif src in slot:
            _, target = next_receiver(t)
            chain = _route(g2, slot[src], slot[target])
            relay_through(chain, {slot[src] - 1: s2[src - 1]}, slot[src])
        elif dst in slot:
            w, out = waiting[0]
            tr.move(("snd", w, slot[dst]), {w - 1: out[0][1], slot[dst] - 1: s2[dst - 1]})
            for _, q in out[1:]:
                tr.move(("eps", w), {w - 1: q})
            waiting[0] = None

    tr.key = lambda: waiting[0]
    y = _drive(x, tr, step)
    qt = len(system.t.states)
    bound = 2 * qt + b + (b - n + 2) * qt
    v2 = connectivity_vector(g2, 1, 2)
    return _token_report("bound-token", x, y, small, [g, h], [1, 2], qt + 1, bound,
                         {"vector_ok": v == v2, "vector": v, "graph": sorted(g2.edges)})


LEMMAS = {
    "mon-disj": mon_disj, "bound-disj": bound_disj, "mon-conj": mon_conj,
    "bound-conj": bound_conj, "mon-token": mon_token, "bound-token": bound_token,
}
