"""Reading and writing the textual ``.rwspt`` net format.

Grammar (whitespace-insensitive)::

    doc   ::= "net" "=" net ["m0" "=" bag]
    net   ::= tran (";" tran)*
    tran  ::= "[" bag "," bag "," bag "]" ("|->" | "->") "<<" string "," float ">>"
    bag   ::= "nilP" | term ("+" term)*
    term  ::= nat "." place
    place ::= "p(" pair+ ")"
    pair  ::= "<" string ";" nat ">"

As a small extension, ``net =`` may be followed directly by ``m0`` or the
end of input, which denotes the empty net.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Tuple

from .errors import DuplicateTransitionError, ParseError, SemanticError
from .multiset import NIL, Bag
from .net import Net, Place, System, Transition, bag_text

FILE_EXTENSION = ".rwspt"


@dataclass(frozen=True)
class NetDocument:
    """A parsed document: a net and an optional initial marking."""

    net: Net
    initial_marking: Optional[Bag] = None

    def system(self) -> System:
        return System(self.net, self.initial_marking if self.initial_marking is not None else Bag())


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<string>"(?:[^"\\]|\\.)*")
  | (?P<number>-?\d+(?:\.\d+)?(?:[eE][+-]?\d+)?)
  | (?P<word>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<punct>\|->|->|<<|>>|[\[\]();,.+=<>])
    """,
    re.VERBOSE | re.DOTALL,
)


@dataclass
class _Token:
    kind: str
    text: str
    line: int
    col: int


def _tokenize(text: str) -> List[_Token]:
    tokens: List[_Token] = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        chunk = m.group()
        if kind != "ws":
            tokens.append(_Token(kind, chunk, line, pos - line_start + 1))
        newlines = chunk.count("\n")
        if newlines:
            line += newlines
            line_start = pos + chunk.rindex("\n") + 1
        pos = m.end()
    tokens.append(_Token("eof", "", line, pos - line_start + 1))
    return tokens


def _unquote(s: str) -> str:
    return re.sub(r"\\(.)", r"\1", s[1:-1])


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.i = 0

    @property
    def tok(self) -> _Token:
        return self.tokens[self.i]

    def error(self, message: str, tok: Optional[_Token] = None) -> ParseError:
        tok = tok or self.tok
        found = "end of input" if tok.kind == "eof" else repr(tok.text)
        return ParseError(f"{message}, found {found}", tok.line, tok.col)

    def accept(self, text: str) -> bool:
        if self.tok.text == text and self.tok.kind in ("punct", "word"):
            self.i += 1
            return True
        return False

    def expect(self, text: str) -> _Token:
        tok = self.tok
        if not self.accept(text):
            raise self.error(f"expected {text!r}")
        return tok

    def expect_kind(self, kind: str, what: str) -> _Token:
        tok = self.tok
        if tok.kind != kind:
            raise self.error(f"expected {what}")
        self.i += 1
        return tok

    def nat(self) -> int:
        tok = self.tok
        if tok.kind != "number" or not tok.text.isdigit():
            raise self.error("expected a natural number")
        self.i += 1
        return int(tok.text)

    def document(self) -> NetDocument:
        self.expect("net")
        self.expect("=")
        transitions: List[Tuple[Transition, _Token]] = []
        if self.tok.text == "[":
            transitions.append(self.transition())
            while self.accept(";"):
                transitions.append(self.transition())
        marking = None
        if self.accept("m0"):
            self.expect("=")
            marking = self.bag()
        if self.tok.kind != "eof":
            raise self.error("expected ';', 'm0' or end of input")
        seen = set()
        for t, tok in transitions:
            if t.identity in seen:
                raise SemanticError(f"duplicate transition tagged {t.tag!r}", tok.line, tok.col)
            seen.add(t.identity)
        try:
            net = Net(t for t, _ in transitions)
        except DuplicateTransitionError as exc:  # pragma: no cover - guarded above
            raise SemanticError(str(exc), 1, 1) from exc
        if marking is not None:
            stray = [p for p in marking if p not in net.places]
            if stray:
                tok = self.tokens[-1]
                raise SemanticError(f"initial marking uses unknown place {stray[0]}", tok.line, tok.col)
        return NetDocument(net, marking)

    def transition(self) -> Tuple[Transition, _Token]:
        start = self.expect("[")
        bags = [self.bag()]
        for _ in range(2):
            self.expect(",")
            bags.append(self.bag())
        self.expect("]")
        if not (self.accept("|->") or self.accept("->")):
            raise self.error("expected '|->' or '->'")
        self.expect("<<")
        tag = _unquote(self.expect_kind("string", "a quoted tag").text)
        self.expect(",")
        rate_tok = self.expect_kind("number", "a rate")
        self.expect(">>")
        rate = float(rate_tok.text)
        if not rate > 0.0 or rate == float("inf"):
            raise SemanticError(f"rate must be positive and finite, got {rate_tok.text}", rate_tok.line, rate_tok.col)
        return Transition(bags[0], bags[1], bags[2], tag, rate), start

    def bag(self) -> Bag:
        if self.accept(NIL):
            return Bag()
        terms = [self.term()]
        while self.accept("+"):
            terms.append(self.term())
        return Bag(terms)

    def term(self) -> Tuple[Place, int]:
        k = self.nat()
        self.expect(".")
        return self.place(), k

    def place(self) -> Place:
        self.expect("p")
        self.expect("(")
        pairs = [self.pair()]
        while self.tok.text == "<":
            pairs.append(self.pair())
        self.expect(")")
        return Place(tuple(pairs))

    def pair(self) -> Tuple[str, int]:
        self.expect("<")
        tok = self.expect_kind("string", "a quoted tag")
        tag = _unquote(tok.text)
        if not tag:
            raise SemanticError("label tags must be nonempty", tok.line, tok.col)
        self.expect(";")
        idx = self.nat()
        self.expect(">")
        return tag, idx


def parse_net(text: str) -> NetDocument:
    """Parse a ``.rwspt`` document.

    Raises
    ------
    ParseError
        On malformed input, with 1-based line and column.
    SemanticError
        On duplicate transitions or non-positive rates.
    """
    return _Parser(text).document()


def parse_bag(text: str) -> Bag:
    """Parse a bare bag expression such as ``2 . p(< "s" ; 0 >)``."""
    p = _Parser(text)
    bag = p.bag()
    if p.tok.kind != "eof":
        raise p.error("expected end of input")
    return bag


def load(path: str | Path) -> NetDocument:
    return parse_net(Path(path).read_text(encoding="utf-8"))


def _net_text(transitions) -> str:
    if not transitions:
        return "net ="
    return "net =\n  " + " ;\n  ".join(t.text for t in transitions)


def serialize_document(doc: NetDocument) -> str:
    """Text of ``doc`` keeping the transition order."""
    out = _net_text(doc.net.transitions)
    if doc.initial_marking is not None:
        out += f"\nm0 = {bag_text(doc.initial_marking)}"
    return out + "\n"


def serialize_net(net: Net) -> str:
    """Canonical text of a net: transitions sorted by (tag, arcs)."""
    cached = net.__dict__.get("_canonical_text")
    if cached is None:
        cached = _net_text(net.canonical_transitions)
        net.__dict__["_canonical_text"] = cached
    return cached


def serialize_system(s: System) -> str:
    """Canonical state key: sorted net text followed by the marking."""
    return f"{serialize_net(s.net)}\nm0 = {bag_text(s.marking)}\n"


def parse_system(text: str) -> System:
    return parse_net(text).system()
