"""Prompt-LTL without next: syntax, parsing and exact semantics on lassos.

Formulas are kept in negation normal form. ``F`` and ``G`` are sugar for
``true U _`` and ``false R _``; the internal next operator only appears in
formulas produced by :func:`instantiate_k` and :func:`negate`.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Union

__all__ = [
    "Atom", "Const", "Lit", "And", "Or", "Until", "Release", "Next", "Prompt",
    "Formula", "IndexedFormula", "LassoWord", "FormulaSyntaxError",
    "TRUE", "FALSE", "eventually", "globally", "parse_formula", "eval_formula",
    "instantiate_k", "negate", "is_prompt_free", "atoms_of", "to_text",
    "substitute_indices", "depth", "size",
]


class FormulaSyntaxError(ValueError):
    """Raised for malformed formula text; ``pos`` is a 0-based offset."""

    def __init__(self, message: str, pos: int | None = None):
        self.pos = pos
        if pos is not None:
            message = f"{message} (at position {pos})"
        super().__init__(message)


@dataclass(frozen=True, order=True)
class Atom:
    """Local-state proposition ``A.state`` or ``B[index].state``.

    ``index`` is None for the controller, an int for a concrete B-process
    and a str while it is still a quantified index variable.
    """

    role: str
    index: int | str | None
    state: str

    def __str__(self) -> str:
        if self.role == "A":
            return f"A.{self.state}"
        return f"B[{self.index}].{self.state}"

    @property
    def resolved(self) -> bool:
        return not isinstance(self.index, str)

    @property
    def process(self) -> int:
        """Column of this atom in a global state vector (A is 0)."""
        if self.role == "A":
            return 0
        if not isinstance(self.index, int):
            raise ValueError(f"unresolved index variable in {self}")
        return self.index


@dataclass(frozen=True)
class Const:
    value: bool


@dataclass(frozen=True)
class Lit:
    atom: Atom
    positive: bool = True


@dataclass(frozen=True)
class And:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Or:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Until:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Release:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Next:
    operand: "Formula"


@dataclass(frozen=True)
class Prompt:
    operand: "Formula"


Formula = Union[Const, Lit, And, Or, Until, Release, Next, Prompt]


def _cached_hash(self) -> int:
    # unfolded prompt chains get deep; hash each node once
    try:
        return self.__dict__["_hash"]
    except KeyError:
        h = hash((type(self).__name__,) + tuple(getattr(self, f) for f in self.__dataclass_fields__))
        object.__setattr__(self, "_hash", h)
        return h


for _cls in (Const, Lit, And, Or, Until, Release, Next, Prompt):
    _cls.__hash__ = _cached_hash

TRUE = Const(True)
FALSE = Const(False)


def eventually(f: Formula) -> Formula:
    return Until(TRUE, f)


def globally(f: Formula) -> Formula:
    return Release(FALSE, f)


@dataclass(frozen=True)
class IndexedFormula:
    """``forall i1, ..., ih . body``."""

    variables: tuple[str, ...]
    body: Formula

    @property
    def h(self) -> int:
        return len(self.variables)

    def __str__(self) -> str:
        if not self.variables:
            return to_text(self.body)
        return f"forall {', '.join(self.variables)} . {to_text(self.body)}"


@dataclass(frozen=True)
class LassoWord:
    """The infinite word ``prefix . period^omega`` over letters (sets of atoms)."""

    prefix: tuple[frozenset, ...]
    period: tuple[frozenset, ...]

    def __post_init__(self):
        if not self.period:
            raise ValueError("lasso period must be non-empty")
        object.__setattr__(self, "prefix", tuple(frozenset(a) for a in self.prefix))
        object.__setattr__(self, "period", tuple(frozenset(a) for a in self.period))

    def __len__(self) -> int:
        return len(self.prefix) + len(self.period)

    def fold(self, i: int) -> int:
        u = len(self.prefix)
        if i < u:
            return i
        return u + (i - u) % len(self.period)

    def letter(self, i: int) -> frozenset:
        j = self.fold(i)
        u = len(self.prefix)
        return self.prefix[j] if j < u else self.period[j - u]

    def successor(self, p: int) -> int:
        """Successor of a representative position."""
        return p + 1 if p + 1 < len(self) else len(self.prefix)

    def letters(self) -> tuple[frozenset, ...]:
        return self.prefix + self.period


# --------------------------------------------------------------------------
# Structural helpers


def children(f: Formula) -> tuple[Formula, ...]:
    match f:
        case Const() | Lit():
            return ()
        case Next(g) | Prompt(g):
            return (g,)
        case And(l, r) | Or(l, r) | Until(l, r) | Release(l, r):
            return (l, r)
    raise TypeError(f"not a formula: {f!r}")


def subformulas(f: Formula) -> Iterator[Formula]:
    """Post-order traversal; shared subterms appear once."""
    seen: set = set()
    stack: list[tuple[Formula, bool]] = [(f, False)]
    while stack:
        g, expanded = stack.pop()
        if expanded:
            if g not in seen:
                seen.add(g)
                yield g
            continue
        if g in seen:
            continue
        stack.append((g, True))
        for c in reversed(children(g)):
            stack.append((c, False))


def atoms_of(f: Formula) -> set[Atom]:
    return {g.atom for g in subformulas(f) if isinstance(g, Lit)}


def is_prompt_free(f: Formula) -> bool:
    return not any(isinstance(g, Prompt) for g in subformulas(f))


def depth(f: Formula) -> int:
    cs = children(f)
    return 0 if not cs else 1 + max(depth(c) for c in cs)


def size(f: Formula) -> int:
    return 1 + sum(size(c) for c in children(f))


def _rebuild(f: Formula, kids: tuple[Formula, ...]) -> Formula:
    match f:
        case Const() | Lit():
            return f
        case Next():
            return Next(kids[0])
        case Prompt():
            return Prompt(kids[0])
        case And():
            return And(*kids)
        case Or():
            return Or(*kids)
        case Until():
            return Until(*kids)
        case Release():
            return Release(*kids)
    raise TypeError(f)


def substitute_indices(f: Formula, binding: dict[str, int]) -> Formula:
    """Replace index variables by concrete B indices."""
    match f:
        case Lit(atom, pos) if isinstance(atom.index, str) and atom.index in binding:
            return Lit(Atom("B", binding[atom.index], atom.state), pos)
        case Const() | Lit():
            return f
    return _rebuild(f, tuple(substitute_indices(c, binding) for c in children(f)))


# --------------------------------------------------------------------------
# Printing


def to_text(f: Formula) -> str:
    match f:
        case Const(True):
            return "true"
        case Const(False):
            return "false"
        case Lit(atom, True):
            return str(atom)
        case Lit(atom, False):
            return f"!{atom}"
        case And(l, r):
            return f"({to_text(l)} & {to_text(r)})"
        case Or(l, r):
            return f"({to_text(l)} | {to_text(r)})"
        case Until(Const(True), r):
            return f"F {_wrap(r)}"
        case Release(Const(False), r):
            return f"G {_wrap(r)}"
        case Until(l, r):
            return f"({to_text(l)} U {to_text(r)})"
        case Release(l, r):
            return f"({to_text(l)} R {to_text(r)})"
        case Next(g):
            return f"X {_wrap(g)}"
        case Prompt(g):
            return f"Fp {_wrap(g)}"
    raise TypeError(f)


def _wrap(f: Formula) -> str:
    s = to_text(f)
    if isinstance(f, (Const, Lit)) or s.startswith("("):
        return s
    return f"({s})"


# --------------------------------------------------------------------------
# Parsing

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<comment>\#[^\n]*)
  | (?P<arrow><->|->)
  | (?P<punct>[()\[\].,!&|])
  | (?P<num>\d+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_/']*)
    """,
    re.VERBOSE,
)

_KEYWORDS = {"forall", "G", "F", "Fp", "U", "R", "X", "true", "false"}


@dataclass
class _Tok:
    kind: str
    text: str
    pos: int


def _tokenize(text: str) -> list[_Tok]:
    toks: list[_Tok] = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m:
            raise FormulaSyntaxError(f"unexpected character {text[pos]!r}", pos)
        kind = m.lastgroup
        if kind == "arrow":
            raise FormulaSyntaxError(
                f"'{m.group()}' is not supported; rewrite 'a -> b' as '!a | b'", pos)
        if kind not in ("ws", "comment"):
            toks.append(_Tok(kind, m.group(), pos))
        pos = m.end()
    toks.append(_Tok("eof", "", len(text)))
    return toks


@dataclass
class _Parser:
    toks: list[_Tok]
    i: int = 0
    variables: tuple[str, ...] = ()
    used: set = field(default_factory=set)

    def peek(self) -> _Tok:
        return self.toks[self.i]

    def take(self) -> _Tok:
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect(self, text: str) -> _Tok:
        t = self.take()
        if t.text != text:
            raise FormulaSyntaxError(f"expected {text!r}, found {t.text or 'end of input'!r}", t.pos)
        return t

    def at(self, *texts: str) -> bool:
        return self.peek().text in texts

    def parse(self) -> IndexedFormula:
        if self.at("forall"):
            self.take()
            names = [self._ident()]
            while self.at(","):
                self.take()
                names.append(self._ident())
            self.expect(".")
            if len(set(names)) != len(names):
                raise FormulaSyntaxError("duplicate quantified index", self.peek().pos)
            self.variables = tuple(names)
        body = self.disj()
        t = self.peek()
        if t.kind != "eof":
            raise FormulaSyntaxError(f"unexpected {t.text!r}", t.pos)
        return IndexedFormula(self.variables, body)

    def _ident(self) -> str:
        t = self.take()
        if t.kind != "ident" or t.text in _KEYWORDS:
            raise FormulaSyntaxError(f"expected identifier, found {t.text!r}", t.pos)
        return t.text

    def disj(self) -> Formula:
        f = self.conj()
        while self.at("|"):
            self.take()
            f = Or(f, self.conj())
        return f

    def conj(self) -> Formula:
        f = self.binary()
        while self.at("&"):
            self.take()
            f = And(f, self.binary())
        return f

    def binary(self) -> Formula:
        left = self.unary()
        if self.at("U", "R"):
            op = self.take().text
            right = self.binary()
            return Until(left, right) if op == "U" else Release(left, right)
        return left

    def unary(self) -> Formula:
        t = self.peek()
        if t.text == "G":
            self.take()
            return globally(self.unary())
        if t.text == "F":
            self.take()
            return eventually(self.unary())
        if t.text == "Fp":
            self.take()
            return Prompt(self.unary())
        if t.text == "X":
            raise FormulaSyntaxError("the next operator X is not part of the logic", t.pos)
        if t.text == "!":
            self.take()
            nxt = self.peek()
            if nxt.text in ("A", "B", "T"):
                return Lit(self.atom(), False)
            if nxt.text in ("true", "false"):
                self.take()
                return Const(nxt.text == "false")
            raise FormulaSyntaxError("negation only on atoms", t.pos)
        return self.primary()

    def primary(self) -> Formula:
        t = self.peek()
        if t.text == "(":
            self.take()
            f = self.disj()
            self.expect(")")
            return f
        if t.text in ("true", "false"):
            self.take()
            return Const(t.text == "true")
        if t.text in ("A", "B", "T"):
            return Lit(self.atom())
        raise FormulaSyntaxError(f"unexpected {t.text or 'end of input'!r}", t.pos)

    def atom(self) -> Atom:
        t = self.take()
        if t.text == "A":
            self.expect(".")
            return Atom("A", None, self._state())
        self.expect("[")
        it = self.take()
        if it.kind == "num":
            index: int | str = int(it.text)
            if index < 1:
                raise FormulaSyntaxError("process indices start at 1", it.pos)
        elif it.kind == "ident" and it.text not in _KEYWORDS:
            if it.text not in self.variables:
                raise FormulaSyntaxError(f"unquantified index {it.text!r}", it.pos)
            index = it.text
        else:
            raise FormulaSyntaxError("expected process index", it.pos)
        self.expect("]")
        self.expect(".")
        return Atom("B", index, self._state())

    def _state(self) -> str:
        t = self.take()
        if t.kind not in ("ident", "num"):
            raise FormulaSyntaxError(f"expected state name, found {t.text!r}", t.pos)
        return t.text


def parse_formula(text: str) -> IndexedFormula:
    """Parse concrete syntax, e.g. ``forall i . G (!A.w | Fp (A.w & B[i].nr))``."""
    return _Parser(_tokenize(text)).parse()


# --------------------------------------------------------------------------
# Semantics


def eval_formula(w: LassoWord, phi: Formula, i: int = 0, k: int = 0) -> bool:
    """Exact truth of ``(w, i, k) |= phi``.

    Positions past the prefix are folded onto one copy of the period; until
    and release are least/greatest fixpoints over those representatives.
    """
    table = _eval_table(w, phi, k)
    return table[phi][w.fold(i)]


def _eval_table(w: LassoWord, phi: Formula, k: int) -> dict:
    n = len(w)
    succ = [w.successor(p) for p in range(n)]
    letters = w.letters()
    vals: dict = {}
    for g in subformulas(phi):
        match g:
            case Const(v):
                row = [v] * n
            case Lit(atom, pos):
                if not atom.resolved:
                    raise ValueError(f"unresolved index variable in {atom}")
                row = [(atom in letters[p]) == pos for p in range(n)]
            case And(l, r):
                row = [a and b for a, b in zip(vals[l], vals[r])]
            case Or(l, r):
                row = [a or b for a, b in zip(vals[l], vals[r])]
            case Next(h):
                sub = vals[h]
                row = [sub[succ[p]] for p in range(n)]
            case Prompt(h):
                sub = vals[h]
                row = []
                for p in range(n):
                    q, hit = p, False
                    for _ in range(k + 1):
                        if sub[q]:
                            hit = True
                            break
                        q = succ[q]
                    row.append(hit)
            case Until(l, r):
                row = _fixpoint(vals[l], vals[r], succ, least=True)
            case Release(l, r):
                row = _fixpoint(vals[l], vals[r], succ, least=False)
            case _:
                raise TypeError(g)
        vals[g] = row
    return vals


def _fixpoint(lv: list, rv: list, succ: list, least: bool) -> list:
    n = len(succ)
    row = [not least] * n
    changed = True
    while changed:
        changed = False
        for p in range(n - 1, -1, -1):
            if least:
                v = rv[p] or (lv[p] and row[succ[p]])
            else:
                v = rv[p] and (lv[p] or row[succ[p]])
            if v != row[p]:
                row[p] = v
                changed = True
    return row


# --------------------------------------------------------------------------
# Transformations


def instantiate_k(phi: Formula, k: int) -> Formula:
    """Unfold every ``Fp psi`` into ``psi | X(psi | X(... ))`` with k nested layers."""
    if k < 0:
        raise ValueError("k must be non-negative")
    match phi:
        case Const() | Lit():
            return phi
        case Prompt(g):
            inner = instantiate_k(g, k)
            out = inner
            for _ in range(k):
                out = Or(inner, Next(out))
                hash(out)
            return out
    return _rebuild(phi, tuple(instantiate_k(c, k) for c in children(phi)))


def negate(phi: Formula) -> Formula:
    """NNF of the negation of a prompt-free formula."""
    match phi:
        case Const(v):
            return Const(not v)
        case Lit(a, pos):
            return Lit(a, not pos)
        case And(l, r):
            return Or(negate(l), negate(r))
        case Or(l, r):
            return And(negate(l), negate(r))
        case Until(l, r):
            return Release(negate(l), negate(r))
        case Release(l, r):
            return Until(negate(l), negate(r))
        case Next(g):
            return Next(negate(g))
        case Prompt():
            raise ValueError("cannot negate a formula containing Fp")
    raise TypeError(phi)


def conjunction(fs: Iterable[Formula]) -> Formula:
    out: Formula | None = None
    for f in fs:
        out = f if out is None else And(out, f)
    return TRUE if out is None else out
