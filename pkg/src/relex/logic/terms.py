"""Terms, literals and clauses.

Terms are flat (no function symbols): a term is a :class:`Var`, a
:class:`Const`, a :class:`Str` or a plain ``int``.  Ground terms are ordinary
hashable Python values so that fact lookup stays cheap.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Dict, Iterable, Iterator, NamedTuple, Optional, Tuple, Union

BUILTINS = frozenset({"<", "=<", ">", ">="})

_ATOM_RE = re.compile(r"[a-z][A-Za-z0-9_]*(?:-[A-Za-z0-9_]+)*\Z")


class Var(str):
    """A logic variable.

    Stored as its name behind a NUL prefix so hashing and equality run at
    C speed while never colliding with a :class:`Const` of the same text.
    """

    __slots__ = ()

    def __new__(cls, name: str):
        return str.__new__(cls, "\x00" + name)

    @property
    def name(self) -> str:
        return str.__str__(self)[1:]

    def __reduce__(self):
        return Var, (self.name,)

    def __str__(self):
        return self.name

    def __repr__(self):
        return f"Var({self.name!r})"


class Const(str):
    """A symbolic constant. Equal to the plain string with the same name."""

    __slots__ = ()

    def __repr__(self):
        return f"Const({str.__repr__(self)})"


class Str:
    """A quoted text constant, distinct from a :class:`Const` of equal text."""

    __slots__ = ("value", "_hash")

    def __init__(self, value: str):
        self.value = value
        self._hash = hash(('"', value))

    def __eq__(self, other):
        return type(other) is Str and other.value == self.value

    def __hash__(self):
        return self._hash

    def __lt__(self, other):
        return term_sort_key(self) < term_sort_key(other)

    def __repr__(self):
        return f"Str({self.value!r})"


Term = Union[Var, Const, Str, int]


def is_ground_term(t) -> bool:
    return type(t) is not Var


def term_sort_key(t):
    if type(t) is int:
        return (0, t, "")
    if type(t) is Str:
        return (2, 0, t.value)
    if type(t) is Var:
        return (3, 0, t.name)
    return (1, 0, str(t))


def format_term(t, names: Optional[Dict[Var, str]] = None) -> str:
    tt = type(t)
    if tt is Var:
        if names is not None and t in names:
            return names[t]
        return t.name
    if tt is int:
        return str(t)
    if tt is Str:
        body = t.value.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n")
        return f'"{body}"'
    s = str(t)
    if _ATOM_RE.match(s):
        return s
    body = s.replace("\\", "\\\\").replace("'", "\\'").replace("\n", "\\n")
    return f"'{body}'"


def is_bare_atom(name: str) -> bool:
    return bool(_ATOM_RE.match(name))


class Literal(NamedTuple):
    predicate: str
    args: Tuple[Term, ...] = ()

    @property
    def arity(self) -> int:
        return len(self.args)

    @property
    def key(self) -> Tuple[str, int]:
        return (self.predicate, len(self.args))

    def is_ground(self) -> bool:
        return all(type(a) is not Var for a in self.args)

    def variables(self) -> Iterator[Var]:
        for a in self.args:
            if type(a) is Var:
                yield a

    def format(self, names: Optional[Dict[Var, str]] = None) -> str:
        if self.predicate in BUILTINS and len(self.args) == 2:
            return f"{format_term(self.args[0], names)} {self.predicate} {format_term(self.args[1], names)}"
        if not self.args:
            return format_term(Const(self.predicate))
        inner = ",".join(format_term(a, names) for a in self.args)
        return f"{format_term(Const(self.predicate))}({inner})"

    def __str__(self):
        return self.format()


@dataclass(frozen=True)
class Clause:
    head: Literal
    body: Tuple[Literal, ...] = ()

    def __post_init__(self):
        if not isinstance(self.body, tuple):
            object.__setattr__(self, "body", tuple(self.body))

    def is_fact(self) -> bool:
        return not self.body and self.head.is_ground()

    def variables(self) -> list:
        """Variables in order of first occurrence (head first)."""
        seen = {}
        for lit in (self.head,) + self.body:
            for v in lit.variables():
                seen.setdefault(v, None)
        return list(seen)

    def variable_names(self) -> Dict[Var, str]:
        return {v: _letter_name(i) for i, v in enumerate(self.variables())}

    def format(self) -> str:
        names = self.variable_names()
        head = self.head.format(names)
        if not self.body:
            return head + "."
        return head + " :- " + ", ".join(b.format(names) for b in self.body) + "."

    def __str__(self):
        return self.format()

    def with_body(self, body: Iterable[Literal]) -> "Clause":
        return Clause(self.head, tuple(body))


def _letter_name(i: int) -> str:
    letter = chr(ord("A") + i % 26)
    return letter if i < 26 else f"{letter}{i // 26}"


Substitution = Dict[Var, Term]


def walk(t, subst: Substitution):
    while type(t) is Var:
        nxt = subst.get(t)
        if nxt is None:
            return t
        t = nxt
    return t


def substitute(lit: Literal, subst: Substitution) -> Literal:
    if not subst:
        return lit
    return Literal(lit.predicate, tuple(walk(a, subst) if type(a) is Var else a for a in lit.args))


def resolve(subst: Substitution) -> Substitution:
    """Fully dereferenced (idempotent) copy of a substitution."""
    return {v: walk(v, subst) for v in subst}


def unify(a: Literal, b: Literal, subst: Optional[Substitution] = None) -> Optional[Substitution]:
    """Most general unifier of two literals extending ``subst``, or None.

    Terms are flat, so the occurs check reduces to refusing to bind a
    variable to itself.
    """
    s = dict(subst) if subst else {}
    if a.predicate != b.predicate or len(a.args) != len(b.args):
        return None
    for x, y in zip(a.args, b.args):
        x = walk(x, s)
        y = walk(y, s)
        if x == y:
            continue
        if type(x) is Var:
            s[x] = y
        elif type(y) is Var:
            s[y] = x
        else:
            return None
    return resolve(s)
