"""Graph model of a parsed sentence and entity-oriented graph reduction."""
from __future__ import annotations

import re
from collections import deque
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Callable, Dict, Iterable, List, NamedTuple, Optional, Sequence, Set, Tuple, Union

from .corpus import EntityMention, Sentence
from .errors import DataError, ParseError

BOS, EOS = "bos", "eos"


class Edge(NamedTuple):
    kind: str  # dep | next | member | chunk_next
    label: str
    source: str
    target: str


def coarse_pos(tag: str) -> str:
    m = re.match(r"[a-z]+", tag)
    return m.group()[:2] if m else tag


def orthography(surface: str) -> str:
    if not any(ch.isalnum() for ch in surface):
        return "punct"
    if any(ch.isdigit() for ch in surface):
        return "hasDigit"
    letters = [ch for ch in surface if ch.isalpha()]
    if all(ch.isupper() for ch in letters):
        return "allCaps" if len(letters) > 1 else "upperInit"
    if all(ch.islower() for ch in letters):
        return "allLower"
    if letters[0].isupper() and all(ch.islower() for ch in letters[1:]):
        return "upperInit"
    return "mixedCaps"


def morph_type(surface: str) -> str:
    if re.fullmatch(r"[0-9]+(?:[.,][0-9]+)*", surface):
        return "number"
    if any(ch.isalpha() for ch in surface):
        return "word"
    return "symbol"


def _ngram(tags: List[str], start: int, n: int) -> str:
    out = []
    for j in range(start, start + n):
        out.append(BOS if j < 0 else EOS if j >= len(tags) else tags[j])
    return "-".join(out)


@dataclass
class SentenceGraph:
    sentence: Sentence
    nodes: Dict[str, dict]
    edges: List[Edge]

    def copy(self) -> "SentenceGraph":
        return SentenceGraph(self.sentence, {k: dict(v) for k, v in self.nodes.items()}, list(self.edges))

    def remove_node(self, tid: str):
        del self.nodes[tid]
        self.edges = [e for e in self.edges if e.target != tid and (e.kind == "member" or e.source != tid)]

    def dep_edges(self) -> List[Edge]:
        return [e for e in self.edges if e.kind == "dep"]

    def edges_of(self, kind: str) -> List[Edge]:
        return [e for e in self.edges if e.kind == kind]

    def in_labels(self, tid: str) -> Set[str]:
        return {e.label for e in self.edges if e.kind == "dep" and e.target == tid}

    def out_labels(self, tid: str) -> Set[str]:
        return {e.label for e in self.edges if e.kind == "dep" and e.source == tid}

    def dep_distances(self, start: str) -> Dict[str, int]:
        adj: Dict[str, List[str]] = {n: [] for n in self.nodes}
        for e in self.edges:
            if e.kind == "dep":
                adj[e.source].append(e.target)
                adj[e.target].append(e.source)
        dist = {start: 0}
        queue = deque([start])
        while queue:
            u = queue.popleft()
            for v in adj[u]:
                if v not in dist:
                    dist[v] = dist[u] + 1
                    queue.append(v)
        return dist

    def connected(self, a: str, b: str) -> bool:
        return a in self.nodes and b in self.nodes and b in self.dep_distances(a)


def build_graph(s: Sentence) -> SentenceGraph:
    tags = [t.pos.lower() for t in s.tokens]
    chunk_of = {}
    for ci, c in enumerate(s.chunks):
        for tid in c.token_ids:
            chunk_of[tid] = (ci, c)
    root_chunk = chunk_of.get(s.root, (None, None))[0] if s.root else None
    nodes: Dict[str, dict] = {}
    for i, t in enumerate(s.tokens):
        attrs = {
            "surface": t.surface, "lemma": t.lemma, "pos": tags[i], "char_start": t.char_start,
            "char_end": t.char_end, "ner": t.ner.lower() if t.ner and t.ner.upper() != "O" else None,
            "gpos": coarse_pos(tags[i]), "length": len(t.surface), "orth": orthography(t.surface),
            "morph": morph_type(t.surface),
            "bigPosBef": _ngram(tags, i - 2, 2), "bigPosAft": _ngram(tags, i + 1, 2),
            "trigPosBef": _ngram(tags, i - 3, 3), "trigPosAft": _ngram(tags, i + 1, 3),
            "chunk": None, "chunk_type": None, "chunk_head": False, "is_root": t.id == s.root,
            "entities": [],
        }
        if t.id in chunk_of:
            ci, c = chunk_of[t.id]
            attrs["chunk"] = c.id
            attrs["chunk_type"] = c.type
            attrs["chunk_head"] = c.head_token == t.id
            if root_chunk is not None:
                attrs["chunk_rel_root"] = ci - root_chunk
        nodes[t.id] = attrs
    for e in s.entities:
        for tid in e.token_ids:
            nodes[tid]["entities"].append(e.id)
    edges = [Edge("dep", d.label, d.governor, d.dependent) for d in s.dependencies]
    edges += [Edge("next", "", a.id, b.id) for a, b in zip(s.tokens, s.tokens[1:])]
    for c in s.chunks:
        edges += [Edge("member", c.id, c.id, tid) for tid in c.token_ids]
    edges += [Edge("chunk_next", f"{a.id} {b.id}", a.head_token, b.head_token) for a, b in zip(s.chunks, s.chunks[1:])]
    return SentenceGraph(s, nodes, edges)


# -- reduction rules -------------------------------------------------------------

_SET_FEATURES = {
    "pos": lambda g, n, ctx: {g.nodes[n]["pos"]},
    "gpos": lambda g, n, ctx: {g.nodes[n]["gpos"]},
    "ner": lambda g, n, ctx: {g.nodes[n]["ner"]} - {None},
    "chunk_type": lambda g, n, ctx: {g.nodes[n]["chunk_type"]} - {None},
    "in_edge": lambda g, n, ctx: g.in_labels(n),
    "out_edge": lambda g, n, ctx: g.out_labels(n),
    "edge": lambda g, n, ctx: g.in_labels(n) | g.out_labels(n),
}
_FLAGS = {
    "in_entity": lambda g, n, ctx: bool(g.nodes[n]["entities"]),
    "in_pair_entity": lambda g, n, ctx: n in ctx.pair_tokens,
    "is_chunk_head": lambda g, n, ctx: g.nodes[n]["chunk_head"],
    "is_root": lambda g, n, ctx: g.nodes[n]["is_root"],
    "on_path": lambda g, n, ctx: n in ctx.on_path(g),
    "true": lambda g, n, ctx: True,
}
_CMP = {"<": int.__lt__, "<=": int.__le__, ">": int.__gt__, ">=": int.__ge__, "=": int.__eq__, "!=": int.__ne__}
ACTIONS = ("delete-node", "delete-edge", "redirect-edge-to-chunk-head")

_RULE_TOKEN = re.compile(r"""\s*(?:(?P<str>"[^"]*")|(?P<op><=|>=|!=|[<>={},()])|(?P<word>[^\s{},()"<>=!]+))""")


class _Context:
    def __init__(self, heads: Tuple[str, str], pair_tokens: Set[str]):
        self.heads = heads
        self.pair_tokens = pair_tokens
        self._cache_key = None
        self._hops = None
        self._path = None

    def _refresh(self, g: SentenceGraph):
        key = (len(g.nodes), tuple(g.dep_edges()))
        if key == self._cache_key:
            return
        self._cache_key = key
        d1 = g.dep_distances(self.heads[0])
        d2 = g.dep_distances(self.heads[1])
        self._hops = {n: min(d1.get(n, 10**9), d2.get(n, 10**9)) for n in g.nodes}
        total = d1.get(self.heads[1])
        self._path = set()
        if total is not None:
            self._path = {n for n in g.nodes if n in d1 and n in d2 and d1[n] + d2[n] == total}

    def hops(self, g, n) -> int:
        self._refresh(g)
        return self._hops[n]

    def on_path(self, g) -> Set[str]:
        self._refresh(g)
        return self._path


Condition = Callable[[SentenceGraph, str, _Context], bool]


class _CondParser:
    def __init__(self, text: str):
        self.toks = []
        pos = 0
        text = text.strip()
        while pos < len(text):
            m = _RULE_TOKEN.match(text, pos)
            if m is None or m.end() == pos:
                raise ParseError(f"cannot read condition near {text[pos:]!r}")
            self.toks.append(m.group("str")[1:-1] if m.group("str") else (m.group("op") or m.group("word")))
            pos = m.end()
            while pos < len(text) and text[pos].isspace():
                pos += 1
        self.i = 0

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else None

    def take(self, expected=None):
        tok = self.peek()
        if tok is None or (expected is not None and tok != expected):
            raise ParseError(f"expected {expected or 'more input'} in condition, found {tok!r}")
        self.i += 1
        return tok

    def parse(self) -> Condition:
        cond = self.disj()
        if self.peek() is not None:
            raise ParseError(f"unexpected {self.peek()!r} in condition")
        return cond

    def disj(self):
        parts = [self.conj()]
        while self.peek() == "OR":
            self.take()
            parts.append(self.conj())
        return parts[0] if len(parts) == 1 else (lambda g, n, c: any(p(g, n, c) for p in parts))

    def conj(self):
        parts = [self.neg()]
        while self.peek() == "AND":
            self.take()
            parts.append(self.neg())
        return parts[0] if len(parts) == 1 else (lambda g, n, c: all(p(g, n, c) for p in parts))

    def neg(self):
        if self.peek() == "NOT":
            self.take()
            inner = self.neg()
            return lambda g, n, c: not inner(g, n, c)
        if self.peek() == "(":
            self.take()
            inner = self.disj()
            self.take(")")
            return inner
        return self.atom()

    def items(self) -> frozenset:
        self.take("{")
        values = []
        while self.peek() != "}":
            values.append(self.take().lower())
            if self.peek() == ",":
                self.take()
        self.take("}")
        return frozenset(values)

    def atom(self):
        word = self.take()
        if word in _SET_FEATURES:
            self.take("in")
            values = self.items()
            feature = _SET_FEATURES[word]
            return lambda g, n, c: bool(feature(g, n, c) & values)
        if word == "hops":
            op = self.take()
            if op not in _CMP:
                raise ParseError(f"unknown comparison {op!r}")
            try:
                bound = int(self.take())
            except ValueError:
                raise ParseError("hops needs an integer bound") from None
            cmp = _CMP[op]
            return lambda g, n, c: cmp(c.hops(g, n), bound)
        if word in _FLAGS:
            return _FLAGS[word]
        raise ParseError(f"unknown condition {word!r}")


@dataclass(frozen=True)
class ReductionRule:
    name: str
    condition_text: str
    action: str
    labels: Optional[frozenset] = None
    condition: Condition = field(compare=False, repr=False, default=None)

    def format(self) -> str:
        action = self.action
        if self.labels:
            action += " {" + ", ".join(sorted(self.labels)) + "}"
        return f"{self.name}: IF {self.condition_text} THEN {action}"

    def __reduce__(self):
        # the compiled condition is a closure; rebuild it from the text
        return parse_rule, (self.format(),)


_RULE_RE = re.compile(r"^\s*([A-Za-z0-9_\-]+)\s*:\s*IF\s+(.*?)\s+THEN\s+(\S+)(?:\s*\{([^}]*)\})?\s*$")


def parse_rule(line: str) -> ReductionRule:
    m = _RULE_RE.match(line)
    if m is None:
        raise ParseError(f"not a reduction rule: {line!r}")
    name, cond_text, action, labels = m.groups()
    if action not in ACTIONS:
        raise ParseError(f"unknown action {action!r}")
    label_set = None
    if labels is not None:
        if action != "delete-edge":
            raise ParseError("only delete-edge takes a label set")
        label_set = frozenset(x.strip().lower() for x in labels.split(",") if x.strip())
    return ReductionRule(name, cond_text, action, label_set, _CondParser(cond_text).parse())


def parse_rules(text: str, source=None) -> List[ReductionRule]:
    rules = []
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        try:
            rules.append(parse_rule(line))
        except ParseError as exc:
            raise ParseError(str(exc), source, lineno) from None
    return rules


def load_rules(path: Union[str, Path, None] = None) -> List[ReductionRule]:
    if path is None:
        text = resources.files("relex.data").joinpath("default_rules.txt").read_text(encoding="utf-8")
        return parse_rules(text, "default_rules.txt")
    path = Path(path)
    return parse_rules(path.read_text(encoding="utf-8"), str(path))


def _apply(g: SentenceGraph, node: str, rule: ReductionRule) -> bool:
    if rule.action == "delete-node":
        g.remove_node(node)
        return True
    if rule.action == "delete-edge":
        before = len(g.edges)
        g.edges = [e for e in g.edges if not (e.kind == "dep" and e.target == node
                                              and (rule.labels is None or e.label in rule.labels))]
        return len(g.edges) != before
    attrs = g.nodes[node]
    chunk = attrs["chunk"]
    if chunk is None or attrs["chunk_head"]:
        return False
    head = next((t for t, a in g.nodes.items() if a["chunk"] == chunk and a["chunk_head"]), None)
    if head is None or not g.connected(node, head):
        return False
    changed = False
    edges = []
    present = set(g.edges)
    for e in g.edges:
        if e.kind == "dep" and e.source == node and e.target != head:
            moved = Edge("dep", e.label, head, e.target)
            changed = True
            if moved in present:
                continue
            present.add(moved)
            edges.append(moved)
        else:
            edges.append(e)
    g.edges = edges
    return changed


def reduce_graph(g: SentenceGraph, rules: Sequence[ReductionRule],
                 pair: Tuple[EntityMention, EntityMention], max_rounds: int = 100) -> SentenceGraph:
    """Apply reduction rules in order until nothing changes.

    An action is rolled back if it would remove a head token of the pair or
    disconnect two heads that were connected through dependencies.
    """
    g = g.copy()
    if not rules:
        return g
    heads = (pair[0].head_token, pair[1].head_token)
    ctx = _Context(heads, set(pair[0].token_ids) | set(pair[1].token_ids))
    linked = g.connected(*heads)
    for _ in range(max_rounds):
        changed = False
        for rule in rules:
            for node in list(g.nodes):
                if node not in g.nodes or not rule.condition(g, node, ctx):
                    continue
                if rule.action == "delete-node" and node in heads:
                    continue
                trial = g.copy()
                if not _apply(trial, node, rule):
                    continue
                if linked and not trial.connected(*heads):
                    continue
                g = trial
                changed = True
        if not changed:
            return g
    raise DataError(f"graph reduction did not reach a fixpoint in {max_rounds} rounds")
