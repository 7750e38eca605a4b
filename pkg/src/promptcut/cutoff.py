"""Cutoff tables for guarded protocols and token rings, plus index reduction."""

from __future__ import annotations

from dataclasses import dataclass

from .formula import Formula, IndexedFormula, substitute_indices

__all__ = ["CutoffQuery", "CutoffResult", "NoKnownCutoff", "SideConditionError",
           "cutoff_for", "reduce_indexed", "CLASSES", "FAIRNESS", "LOGICS"]

CLASSES = ("disjunctive", "conjunctive", "token")
FAIRNESS = ("lb", "gb")
LOGICS = ("ltl", "prompt")

_ALIASES = {"disj": "disjunctive", "conj": "conjunctive", "ltl-no-x": "ltl",
            "prompt-no-x": "prompt", "local-bounded": "lb", "global-bounded": "gb"}


class SideConditionError(ValueError):
    """The queried row exists but the templates violate its side condition."""


@dataclass(frozen=True)
class CutoffQuery:
    system_class: str
    fairness: str
    logic: str
    h: int
    qb: int | None = None
    bounded_initializing: bool | None = None

    def __post_init__(self):
        for name in ("system_class", "fairness", "logic"):
            v = getattr(self, name)
            object.__setattr__(self, name, _ALIASES.get(v, v))
        if self.system_class not in CLASSES:
            raise ValueError(f"unknown system class {self.system_class!r}")
        if self.fairness not in FAIRNESS:
            raise ValueError(f"unknown fairness {self.fairness!r}")
        if self.logic not in LOGICS:
            raise ValueError(f"unknown logic {self.logic!r}")
        if self.h < 1:
            raise ValueError("h must be at least 1")
        if self.system_class == "disjunctive" and (self.qb is None or self.qb < 1):
            raise ValueError("disjunctive cutoffs need |Q_B| >= 1")


@dataclass(frozen=True)
class CutoffResult:
    c: int
    side_conditions: tuple[str, ...]
    rule: str

    def describe(self) -> str:
        if not self.side_conditions:
            return str(self.c)
        return f"{self.c} (requires {', '.join(self.side_conditions)})"


@dataclass(frozen=True)
class NoKnownCutoff:
    reason: str

    def describe(self) -> str:
        return f"no known cutoff: {self.reason}"


def cutoff_for(q: CutoffQuery) -> CutoffResult | NoKnownCutoff:
    logic = "LTL\\X" if q.logic == "ltl" else "Prompt-LTL\\X"
    fair = "local" if q.fairness == "lb" else "global"
    if q.system_class == "disjunctive":
        if q.logic == "prompt" and q.fairness == "gb":
            return NoKnownCutoff(
                "disjunctive systems under global bounded fairness lack a bounding "
                "construction for Prompt-LTL\\X: removing processes can stretch the "
                "fairness bound with the system size")
        return CutoffResult(2 * q.qb + q.h, (),
                            f"disjunctive, {fair} bounded fairness, {q.h}-indexed {logic}: 2|Q_B|+h")
    if q.system_class == "conjunctive":
        conds = ["initializing runs"]
        if q.fairness == "gb":
            conds.insert(0, "bounded-initializing B")
            if q.bounded_initializing is False:
                raise SideConditionError(
                    "conjunctive cutoff under global bounded fairness needs every cycle of B "
                    "to pass through its initial state")
        return CutoffResult(q.h + 1, tuple(conds),
                            f"conjunctive, {fair} bounded fairness, {q.h}-indexed {logic}: h+1")
    return CutoffResult(2 * q.h, ("graph with matching connectivity vector",),
                        f"token passing, {fair} bounded fairness, {q.h}-indexed {logic}: 2h")


def reduce_indexed(phi: IndexedFormula, n: int) -> Formula:
    """Bind the quantified indices to 1..h; by symmetry this decides the quantified formula."""
    if n < phi.h:
        raise ValueError(f"need at least {phi.h} B-processes, got {n}")
    if len(set(phi.variables)) != phi.h:
        raise ValueError("quantified index variables must be distinct")
    return substitute_indices(phi.body, {v: i + 1 for i, v in enumerate(phi.variables)})
