"""Text syntax for formulas and HF sets.

Grammar::

    formula := quant | impl
    quant   := ("A" | "E" | "forall" | "exists") var ["in" term] "." formula
    impl    := disj [("->" | "<->") formula]
    disj    := conj {"or" conj}
    conj    := atom {"and" atom}
    atom    := "!" atom | "(" formula ")" | term ("in" | "notin" | "=" | "!=") term
    term    := var | hfset | decimal
    hfset   := "{" [term {"," term}] "}"

``->``, ``<->`` and ``!`` never reach the AST: they are compiled to NNF with
:func:`negate`. ``A x. x in t -> phi`` is normalized to the bounded
``A x in t. phi`` (and so its negation to ``E x in t. !phi``). Decimal
literals are von Neumann naturals.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable

from .formula import (
    And, Eq, Exists, ExistsIn, Forall, ForallIn, Formula, Literal, Mem,
    NotEq, NotMem, Or, Quantifier, Term, negate,
)
from .hfset import HFSet, make, nat, render_set

__all__ = ["SourceSpan", "ParseError", "SyntaxError", "UnboundVariable",
           "parse", "parse_set", "parse_term", "render", "render_term"]


@dataclass(frozen=True)
class SourceSpan:
    start: int
    end: int

    def line_col(self, text: str) -> tuple[int, int]:
        before = text.encode("utf-8")[: self.start].decode("utf-8", errors="ignore")
        line = before.count("\n") + 1
        col = len(before) - (before.rfind("\n") + 1) + 1
        return line, col


class ParseError(ValueError):
    def __init__(self, span: SourceSpan, message: str, text: str = ""):
        self.span = span
        self.message = message
        line, col = span.line_col(text)
        super().__init__(f"{line}:{col}: {message}")


class SyntaxError(ParseError):  # noqa: A001 - the contract names it so
    pass


class UnboundVariable(ParseError):
    def __init__(self, name: str, span: SourceSpan, text: str = ""):
        self.name = name
        super().__init__(span, f"unbound variable {name!r}", text)


_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<op><->|->|!=|[!(){},.=])
  | (?P<num>[0-9]+)
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
    """,
    re.VERBOSE,
)

_KEYWORDS = {"A", "E", "forall", "exists", "in", "notin", "and", "or"}
_RELATIONS = {"in": Mem, "notin": NotMem, "=": Eq, "!=": NotEq}
MAX_DECIMAL = 16  # brace rendering of nat(k) has 2**k characters


@dataclass(frozen=True)
class _Tok:
    kind: str
    text: str
    start: int
    end: int


def _tokenize(text: str) -> list[_Tok]:
    data = text
    # spans are byte offsets into the UTF-8 input
    offsets = []
    acc = 0
    for ch in data:
        offsets.append(acc)
        acc += len(ch.encode("utf-8"))
    offsets.append(acc)
    toks: list[_Tok] = []
    pos = 0
    while pos < len(data):
        m = _TOKEN.match(data, pos)
        if m is None:
            raise SyntaxError(SourceSpan(offsets[pos], offsets[pos + 1]),
                              f"unexpected character {data[pos]!r}", text)
        kind = m.lastgroup
        if kind != "ws":
            word = m.group()
            if kind == "name" and word in _KEYWORDS:
                kind = "kw"
            toks.append(_Tok(kind, word, offsets[m.start()], offsets[m.end()]))
        pos = m.end()
    toks.append(_Tok("eof", "", acc, acc))
    return toks


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.toks = _tokenize(text)
        self.i = 0
        self.first_use: dict[str, SourceSpan] = {}

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def error(self, message: str, tok: _Tok | None = None) -> SyntaxError:
        tok = tok or self.tok
        return SyntaxError(SourceSpan(tok.start, tok.end), message, self.text)

    def advance(self) -> _Tok:
        tok = self.tok
        self.i += 1
        return tok

    def at(self, *texts: str) -> bool:
        return self.tok.kind in ("op", "kw") and self.tok.text in texts

    def expect(self, text: str) -> _Tok:
        if not self.at(text):
            found = self.tok.text or "end of input"
            raise self.error(f"expected {text!r}, found {found!r}")
        return self.advance()

    def formula(self) -> Formula:
        if self.at("A", "E", "forall", "exists"):
            return self.quant()
        return self.impl()

    def quant(self) -> Formula:
        universal = self.advance().text in ("A", "forall")
        if self.tok.kind != "name":
            raise self.error("expected a variable after quantifier")
        var = self.advance().text
        bound = None
        if self.at("in"):
            self.advance()
            bound = self.term()
            if bound == var:
                raise self.error(f"variable {var!r} cannot bound itself")
        self.expect(".")
        body_start = self.i
        body = self.formula()
        if bound is not None:
            return (ForallIn if universal else ExistsIn)(var, bound, body)
        if universal:
            sugar = self._implication_guard(body_start, var, body)
            if sugar is not None:
                return ForallIn(var, *sugar)
            return Forall(var, body)
        return Exists(var, body)

    def _implication_guard(self, start: int, var: str, body: Formula):
        """Recognize the spelling ``A x. x in t -> phi`` (possibly parenthesized).

        The tokens right after the dot must read ``x in t ->``; the parsed body
        then has that implication at its top exactly when it is
        ``Or(x notin t, phi)``.
        """
        j = start
        while self.toks[j].kind == "op" and self.toks[j].text == "(":
            j += 1
        x, rel, t, arrow = (self.toks + [_Tok("eof", "", 0, 0)] * 4)[j:j + 4]
        if not (x.kind == "name" and x.text == var and rel.kind == "kw" and rel.text == "in"):
            return None
        if not (arrow.kind == "op" and arrow.text == "->"):
            return None
        if t.kind == "name" and t.text not in _KEYWORDS and t.text != var:
            bound: Term = t.text
        elif t.kind == "num":
            bound = nat(int(t.text))
        else:
            return None
        if not (isinstance(body, Or) and body.left == NotMem(var, bound)):
            return None
        return bound, body.right

    def impl(self) -> Formula:
        left = self.disj()
        if self.at("->"):
            self.advance()
            right = self.formula()
            return Or(negate(left), right)
        if self.at("<->"):
            self.advance()
            right = self.formula()
            return And(Or(negate(left), right), Or(negate(right), left))
        return left

    def disj(self) -> Formula:
        phi = self.conj()
        while self.at("or"):
            self.advance()
            phi = Or(phi, self.conj())
        return phi

    def conj(self) -> Formula:
        phi = self.atom()
        while self.at("and"):
            self.advance()
            phi = And(phi, self.atom())
        return phi

    def atom(self) -> Formula:
        if self.at("!"):
            self.advance()
            return negate(self.atom())
        if self.at("("):
            self.advance()
            phi = self.formula()
            self.expect(")")
            return phi
        if self.at("A", "E", "forall", "exists"):
            return self.quant()
        left = self.term()
        if not self.at(*_RELATIONS):
            found = self.tok.text or "end of input"
            raise self.error(f"expected one of 'in', 'notin', '=', '!=', found {found!r}")
        rel = _RELATIONS[self.advance().text]
        right = self.term()
        return rel(left, right)

    def term(self) -> Term:
        tok = self.tok
        if tok.kind == "name":
            self.advance()
            self.first_use.setdefault(tok.text, SourceSpan(tok.start, tok.end))
            return tok.text
        if tok.kind == "num":
            self.advance()
            k = int(tok.text)
            if k > MAX_DECIMAL:
                raise self.error(f"decimal literal {k} exceeds {MAX_DECIMAL}", tok)
            return nat(k)
        if self.at("{"):
            return self.hfset()
        found = tok.text or "end of input"
        raise self.error(f"expected a term, found {found!r}")

    def hfset(self) -> HFSet:
        self.expect("{")
        elems = []
        if not self.at("}"):
            while True:
                start = self.tok
                t = self.term()
                if isinstance(t, str):
                    raise self.error("set literals may only contain constants", start)
                elems.append(t)
                if not self.at(","):
                    break
                self.advance()
        self.expect("}")
        return make(elems)

    def done(self) -> None:
        if self.tok.kind != "eof":
            raise self.error(f"unexpected {self.tok.text!r}")


def parse(text: str, free: Iterable[str] | None = None) -> Formula:
    """Parse a formula. With ``free`` given, any other free variable is an error."""
    p = _Parser(text)
    phi = p.formula()
    p.done()
    if free is not None:
        allowed = set(free)
        extra = sorted(phi.free - allowed, key=lambda v: p.first_use[v].start)
        if extra:
            raise UnboundVariable(extra[0], p.first_use[extra[0]], text)
    return phi


def parse_term(text: str) -> Term:
    p = _Parser(text)
    t = p.term()
    p.done()
    return t


def parse_set(text: str) -> HFSet:
    t = parse_term(text)
    if not isinstance(t, HFSet):
        raise SyntaxError(SourceSpan(0, len(text.encode("utf-8"))), "expected a constant set", text)
    return t


def render_term(t: Term, naturals: bool = False) -> str:
    return t if isinstance(t, str) else render_set(t, naturals)


_REL_TEXT = {Mem: "in", NotMem: "notin", Eq: "=", NotEq: "!="}


def render(phi: Formula, naturals: bool = False) -> str:
    """Canonical text for ``phi``; ``parse(render(phi)) == phi``."""
    return _formula(phi, naturals)


def _formula(phi: Formula, nat_: bool) -> str:
    if isinstance(phi, Quantifier):
        q = "A" if phi.universal else "E"
        if phi.bounded:
            return f"{q} {phi.var} in {render_term(phi.bound, nat_)}. {_formula(phi.body, nat_)}"
        return f"{q} {phi.var}. {_formula(phi.body, nat_)}"
    return _disj(phi, nat_)


def _disj(phi: Formula, nat_: bool) -> str:
    if isinstance(phi, Or):
        return f"{_disj(phi.left, nat_)} or {_conj(phi.right, nat_)}"
    return _conj(phi, nat_)


def _conj(phi: Formula, nat_: bool) -> str:
    if isinstance(phi, And):
        return f"{_conj(phi.left, nat_)} and {_atom(phi.right, nat_)}"
    return _atom(phi, nat_)


def _atom(phi: Formula, nat_: bool) -> str:
    if isinstance(phi, Literal):
        a, b = phi.args
        return f"{render_term(a, nat_)} {_REL_TEXT[type(phi)]} {render_term(b, nat_)}"
    return f"({_formula(phi, nat_)})"
