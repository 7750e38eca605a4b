"""Text formats for templates, systems, token processes and graphs.

    template Writer { init nw; states nw, w;
                      trans nw -> w when exists{any}; trans w -> w when exists{r}; }
    system { A: Writer; B: Reader; }
    token T { base q1, q2; init q1/0, q1/1; trans q1/1 -snd-> q1/0; }
    graph { n: 4; edges: (1,2),(2,3); }

``#`` starts a comment. Errors carry ``line:column``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path

from .protocol import Guard, ProcessTemplate, TemplateError, Transition
from .tokens import TokenGraph, TokenProcess

__all__ = ["LoadError", "parse_templates", "parse_system", "parse_token", "parse_graph",
           "load_system", "SystemSpec"]


class LoadError(ValueError):
    def __init__(self, message: str, line: int | None = None, col: int | None = None,
                 source: str | None = None):
        self.line, self.col, self.source = line, col, source
        where = "" if line is None else f"{line}:{col}: "
        if source:
            where = f"{source}:{where}"
        super().__init__(f"{where}{message}")


_TOKEN = re.compile(r"\s+|#[^\n]*|(-(?:snd|rcv|eps)->|->|[{}();:,]|[A-Za-z0-9_'/.\[\]]+)")


@dataclass
class _Tok:
    text: str
    line: int
    col: int


def _lex(text: str, source: str | None) -> list[_Tok]:
    out = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            line = text.count("\n", 0, pos) + 1
            col = pos - (text.rfind("\n", 0, pos) + 1) + 1
            raise LoadError(f"unexpected character {text[pos]!r}", line, col, source)
        if m.group(1):
            line = text.count("\n", 0, pos) + 1
            col = pos - (text.rfind("\n", 0, pos) + 1) + 1
            out.append(_Tok(m.group(1), line, col))
        pos = m.end()
    return out


class _Reader:
    def __init__(self, text: str, source: str | None):
        self.toks = _lex(text, source)
        self.i = 0
        self.source = source

    def error(self, msg: str, tok: _Tok | None = None):
        tok = tok or self.peek()
        if tok is None:
            return LoadError(f"{msg} (at end of input)", None, None, self.source)
        return LoadError(msg, tok.line, tok.col, self.source)

    def peek(self) -> _Tok | None:
        return self.toks[self.i] if self.i < len(self.toks) else None

    def take(self) -> _Tok:
        t = self.peek()
        if t is None:
            raise self.error("unexpected end of input")
        self.i += 1
        return t

    def expect(self, text: str) -> _Tok:
        t = self.take()
        if t.text != text:
            raise self.error(f"expected {text!r}, found {t.text!r}", t)
        return t

    def word(self) -> _Tok:
        t = self.take()
        if not re.fullmatch(r"[A-Za-z0-9_'/.\[\]]+", t.text):
            raise self.error(f"expected a name, found {t.text!r}", t)
        return t

    def names(self) -> list[_Tok]:
        out = [self.word()]
        while self.peek() and self.peek().text == ",":
            self.take()
            out.append(self.word())
        return out

    def at_end(self) -> bool:
        return self.peek() is None


def _template(r: _Reader):
    r.expect("template")
    name = r.word()
    r.expect("{")
    init = None
    states: list[_Tok] = []
    trans = []
    while r.peek() and r.peek().text != "}":
        kw = r.word()
        if kw.text == "init":
            init = r.word()
        elif kw.text == "states":
            states = r.names()
        elif kw.text == "trans":
            src = r.word()
            r.expect("->")
            dst = r.word()
            r.expect("when")
            quant = r.word()
            if quant.text not in ("exists", "forall"):
                raise r.error(f"guard must be exists{{...}} or forall{{...}}, found {quant.text!r}", quant)
            r.expect("{")
            gs = r.names()
            r.expect("}")
            trans.append((src, dst, quant, gs))
        else:
            raise r.error(f"unknown template item {kw.text!r}", kw)
        r.expect(";")
    r.expect("}")
    if init is None:
        raise r.error(f"template {name.text} has no init", name)
    return name, init, states, trans


def parse_templates(text: str, source: str | None = None) -> dict[str, ProcessTemplate]:
    """All templates in a file. ``any`` in a guard stands for every declared state of the file."""
    r = _Reader(text, source)
    raw = []
    while not r.at_end():
        raw.append(_template(r))
    everything = {s.text for _, _, states, _ in raw for s in states}
    out = {}
    for name, init, states, trans in raw:
        declared = [s.text for s in states]
        ts = []
        for src, dst, quant, gs in trans:
            names = set()
            for g in gs:
                if g.text == "any":
                    names |= everything
                elif g.text not in everything:
                    raise LoadError(f"guard mentions undeclared state {g.text!r}", g.line, g.col, source)
                else:
                    names.add(g.text)
            for tok in (src, dst):
                if tok.text not in declared:
                    raise LoadError(f"state {tok.text!r} is not a state of {name.text}",
                                    tok.line, tok.col, source)
            ts.append(Transition(src.text, Guard(quant.text, frozenset(names)), dst.text))
        if name.text in out:
            raise LoadError(f"duplicate template {name.text!r}", name.line, name.col, source)
        try:
            out[name.text] = ProcessTemplate(name.text, tuple(declared), init.text, tuple(ts))
        except TemplateError as e:
            raise LoadError(str(e), name.line, name.col, source) from None
    return out


@dataclass(frozen=True)
class SystemSpec:
    a: str
    b: str


def parse_system(text: str, source: str | None = None) -> SystemSpec:
    r = _Reader(text, source)
    r.expect("system")
    r.expect("{")
    roles = {}
    while r.peek() and r.peek().text != "}":
        role = r.word()
        if role.text not in ("A", "B"):
            raise r.error(f"system roles are A and B, found {role.text!r}", role)
        r.expect(":")
        roles[role.text] = r.word().text
        r.expect(";")
    r.expect("}")
    if set(roles) != {"A", "B"}:
        raise r.error("system needs both A and B")
    return SystemSpec(roles["A"], roles["B"])


def load_system(system_file: str | Path, template_files=()):
    """Resolve a system file; templates come from the listed files or the system file itself."""
    system_file = Path(system_file)
    text = system_file.read_text()
    # the system block may share a file with its templates
    m = re.search(r"\bsystem\s*\{[^}]*\}", text)
    if m is None:
        raise LoadError("no system block", source=str(system_file))
    spec = parse_system(m.group(0), str(system_file))
    # blank the system block out but keep line numbers for the remaining templates
    rest = text[:m.start()] + re.sub(r"[^\n]", " ", m.group(0)) + text[m.end():]
    sources = [(rest, str(system_file))]
    for f in template_files:
        sources.append((Path(f).read_text(), str(f)))
    templates = {}
    for body, src in sources:
        templates.update(parse_templates(body, src))
    if not templates:
        sibling = system_file.parent
        for f in sorted(sibling.glob("*.tmpl")):
            templates.update(parse_templates(f.read_text(), str(f)))
    for role, name in (("A", spec.a), ("B", spec.b)):
        if name not in templates:
            raise LoadError(f"template {name!r} for {role} not found", source=str(system_file))
    return templates[spec.a], templates[spec.b]


def parse_token(text: str, source: str | None = None) -> TokenProcess:
    r = _Reader(text, source)
    r.expect("token")
    name = r.word()
    r.expect("{")
    base, init, trans = [], [], []
    while r.peek() and r.peek().text != "}":
        kw = r.word()
        if kw.text == "base":
            base = [t.text for t in r.names()]
        elif kw.text == "init":
            init = r.names()
        elif kw.text == "trans":
            src = r.word()
            arrow = r.take()
            if not re.fullmatch(r"-(snd|rcv|eps)->", arrow.text):
                raise r.error(f"expected -snd->, -rcv-> or -eps->, found {arrow.text!r}", arrow)
            dst = r.word()
            trans.append((src, arrow.text[1:-2], dst))
        else:
            raise r.error(f"unknown token item {kw.text!r}", kw)
        r.expect(";")
    r.expect("}")
    for tok in init + [t for s, _, d in trans for t in (s, d)]:
        if not re.fullmatch(r".+/[01]", tok.text) or tok.text.rsplit("/", 1)[0] not in base:
            raise LoadError(f"token state {tok.text!r} must be <base>/<0|1> over declared bases",
                            tok.line, tok.col, source)
    try:
        return TokenProcess(name.text, tuple(base), frozenset(t.text for t in init),
                            tuple((s.text, a, d.text) for s, a, d in trans))
    except TemplateError as e:
        raise LoadError(str(e), name.line, name.col, source) from None


def parse_graph(text: str, source: str | None = None) -> TokenGraph:
    r = _Reader(text, source)
    r.expect("graph")
    r.expect("{")
    n = None
    edges = []
    while r.peek() and r.peek().text != "}":
        kw = r.word()
        r.expect(":")
        if kw.text == "n":
            tok = r.word()
            if not tok.text.isdigit():
                raise r.error("n must be a positive integer", tok)
            n = int(tok.text)
        elif kw.text == "edges":
            while r.peek() and r.peek().text == "(":
                r.take()
                a = r.word()
                r.expect(",")
                b = r.word()
                r.expect(")")
                if not (a.text.isdigit() and b.text.isdigit()):
                    raise r.error("edge endpoints must be vertex numbers", a)
                edges.append((int(a.text), int(b.text), a))
                if r.peek() and r.peek().text == ",":
                    r.take()
        else:
            raise r.error(f"unknown graph item {kw.text!r}", kw)
        r.expect(";")
    r.expect("}")
    if n is None:
        raise r.error("graph needs n")
    for a, b, tok in edges:
        if a == b or not (1 <= a <= n and 1 <= b <= n):
            raise LoadError(f"bad edge ({a},{b}) for n = {n}", tok.line, tok.col, source)
    return TokenGraph(n, frozenset((a, b) for a, b, _ in edges))
