"""Reader for the clause text format.

Clauses end with ``.``, ``%`` starts a comment, bodies may use ``,`` for
conjunction and ``;`` (with parentheses) for disjunction.  Disjunctions are
expanded at read time into several clauses sharing the same head.
"""
from __future__ import annotations

import itertools
import re
from typing import Iterator, List, NamedTuple, Optional, Tuple

from ..errors import ParseError
from .terms import BUILTINS, Clause, Const, Literal, Str, Var

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>%[^\n]*)
  | (?P<neck>:-)
  | (?P<op>=<|>=|<|>)
  | (?P<punct>[(),;.])
  | (?P<string>"(?:[^"\\\n]|\\.)*")
  | (?P<qatom>'(?:[^'\\\n]|\\.)*')
  | (?P<int>-?\d+)
  | (?P<var>[A-Z_][A-Za-z0-9_]*)
  | (?P<atom>[a-z][A-Za-z0-9_]*(?:-[A-Za-z0-9_]+)*)
    """,
    re.VERBOSE,
)

_ESCAPES = {"n": "\n", "t": "\t", "\\": "\\", '"': '"', "'": "'"}


def _unescape(body: str) -> str:
    return re.sub(r"\\(.)", lambda m: _ESCAPES.get(m.group(1), m.group(1)), body)


class _Tok(NamedTuple):
    kind: str
    text: str
    line: int


def _tokenize(text: str, source=None) -> List[_Tok]:
    toks = []
    line = 1
    pos = 0
    n = len(text)
    while pos < n:
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", source, line)
        kind = m.lastgroup
        tok = m.group()
        if kind == "nl":
            line += 1
        elif kind == "int" and tok.startswith("-") and toks and toks[-1].kind in ("int", "var", "atom", "string", "qatom") and toks[-1].text != ")":
            # "X-1" style arithmetic is not part of the language
            raise ParseError(f"unexpected '-' after {toks[-1].text!r}", source, line)
        elif kind not in ("ws", "comment"):
            toks.append(_Tok(kind, tok, line))
        pos = m.end()
    return toks


class _Parser:
    def __init__(self, toks: List[_Tok], source=None):
        self.toks = toks
        self.i = 0
        self.source = source

    def peek(self) -> Optional[_Tok]:
        return self.toks[self.i] if self.i < len(self.toks) else None

    def line(self) -> int:
        tok = self.peek()
        if tok is not None:
            return tok.line
        return self.toks[-1].line if self.toks else 1

    def error(self, msg):
        raise ParseError(msg, self.source, self.line())

    def next(self) -> _Tok:
        tok = self.peek()
        if tok is None:
            self.error("unexpected end of input")
        self.i += 1
        return tok

    def expect(self, text):
        tok = self.next()
        if tok.text != text:
            self.i -= 1
            self.error(f"expected {text!r}, found {tok.text!r}")
        return tok

    def term(self, varmap):
        tok = self.next()
        if tok.kind == "var":
            if tok.text == "_":
                return Var(f"_G{len(varmap)}")
            return varmap.setdefault(tok.text, Var(tok.text))
        if tok.kind == "int":
            return int(tok.text)
        if tok.kind == "string":
            return Str(_unescape(tok.text[1:-1]))
        if tok.kind == "atom":
            return Const(tok.text)
        if tok.kind == "qatom":
            return Const(_unescape(tok.text[1:-1]))
        self.i -= 1
        self.error(f"expected a term, found {tok.text!r}")

    def literal(self, varmap) -> Literal:
        tok = self.peek()
        if tok is not None and tok.kind in ("atom", "qatom"):
            nxt = self.toks[self.i + 1] if self.i + 1 < len(self.toks) else None
            if nxt is None or nxt.kind != "op":
                self.next()
                name = tok.text if tok.kind == "atom" else _unescape(tok.text[1:-1])
                args = []
                if self.peek() is not None and self.peek().text == "(":
                    self.next()
                    args.append(self.term(varmap))
                    while self.peek() is not None and self.peek().text == ",":
                        self.next()
                        args.append(self.term(varmap))
                    self.expect(")")
                return Literal(name, tuple(args))
        left = self.term(varmap)
        op = self.next()
        if op.kind != "op":
            self.i -= 1
            self.error(f"expected a comparison operator, found {op.text!r}")
        right = self.term(varmap)
        return Literal(op.text, (left, right))

    def disjunction(self, varmap) -> List[List[Literal]]:
        alts = self.conjunction(varmap)
        while self.peek() is not None and self.peek().text == ";":
            self.next()
            alts = alts + self.conjunction(varmap)
        return alts

    def conjunction(self, varmap) -> List[List[Literal]]:
        parts = [self.item(varmap)]
        while self.peek() is not None and self.peek().text == ",":
            self.next()
            parts.append(self.item(varmap))
        return [list(itertools.chain.from_iterable(combo)) for combo in itertools.product(*parts)]

    def item(self, varmap) -> List[List[Literal]]:
        tok = self.peek()
        if tok is not None and tok.text == "(":
            self.next()
            alts = self.disjunction(varmap)
            self.expect(")")
            return alts
        return [[self.literal(varmap)]]

    def clauses(self) -> Iterator[Tuple[int, List[Clause]]]:
        while self.peek() is not None:
            line = self.line()
            varmap = {}
            head = self.literal(varmap)
            if head.predicate in BUILTINS:
                raise ParseError(f"cannot define builtin {head.predicate}", self.source, line)
            alts = [[]]
            if self.peek() is not None and self.peek().kind == "neck":
                self.next()
                alts = self.disjunction(varmap)
            self.expect(".")
            yield line, [Clause(head, tuple(body)) for body in alts]


def read_clauses(text: str, source=None) -> Iterator[Tuple[int, Clause]]:
    """Yield ``(line, clause)`` for each clause in ``text``."""
    parser = _Parser(_tokenize(text, source), source)
    for line, group in parser.clauses():
        for clause in group:
            yield line, clause


def parse_clause(text: str) -> Clause:
    clauses = [c for _, c in read_clauses(text)]
    if len(clauses) != 1:
        raise ParseError(f"expected exactly one clause, got {len(clauses)}")
    return clauses[0]


def parse_literal(text: str) -> Literal:
    text = text.strip()
    if not text.endswith("."):
        text += "."
    clause = parse_clause(text)
    if clause.body:
        raise ParseError("expected a literal, got a rule")
    return clause.head
