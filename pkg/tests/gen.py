"""Seeded random fact bases, mode sets and clauses for oracle comparisons."""
from __future__ import annotations

import random
from typing import List, Tuple

from relex.logic import Clause, Const, KnowledgeBase, Literal, Var
from relex.modes import ModeSet, parse_mode_file

TOKENS = [Const(f"t{i}") for i in range(6)]
CHUNKS = [Const(f"c{i}") for i in range(2)]
TAGS = [Const(x) for x in ("nn", "vb", "dt")]
LABELS = [Const(x) for x in ("a", "b")]

_MODE_LINES = [
    ":- modeb(*, nxt(+token, -token)).",
    ":- modeb(1, pos(+token, #tag)).",
    ":- modeb(2, dep(#lab, +token, -token)).",
    ":- modeb(*, inck(-chunk, +token)).",
    ":- modeb(1, hd(+chunk, -token)).",
]


def random_flat_kb(rng: random.Random, max_facts: int = 200) -> Tuple[List[Literal], list]:
    """Untyped fact base: at most 8 constants and 6 predicates of arity 1 to 3."""
    consts = [Const(f"k{i}") for i in range(rng.randint(2, 8))]
    preds = [(f"p{i}", rng.randint(1, 3)) for i in range(rng.randint(1, 6))]
    facts = []
    for _ in range(rng.randint(1, max_facts)):
        name, arity = rng.choice(preds)
        facts.append(Literal(name, tuple(rng.choice(consts) for _ in range(arity))))
    return facts, consts, preds


def random_query(rng: random.Random, consts, preds, max_vars: int = 3) -> List[Literal]:
    names = [Var(n) for n in "XYZ"[:max_vars]]
    goals = []
    for _ in range(rng.randint(1, 3)):
        name, arity = rng.choice(preds)
        args = tuple(rng.choice(names) if rng.random() < 0.7 else rng.choice(consts) for _ in range(arity))
        goals.append(Literal(name, args))
    return goals


def random_typed_kb(rng: random.Random, density: float = 0.5) -> List[Literal]:
    facts = [Literal("token", (t,)) for t in TOKENS] + [Literal("chunk", (c,)) for c in CHUNKS]
    for a in TOKENS:
        for b in TOKENS:
            if a != b and rng.random() < density / 3:
                facts.append(Literal("nxt", (a, b)))
            if a != b and rng.random() < density / 4:
                facts.append(Literal("dep", (rng.choice(LABELS), a, b)))
        if rng.random() < density * 1.5:
            facts.append(Literal("pos", (a, rng.choice(TAGS))))
        if rng.random() < density:
            facts.append(Literal("inck", (rng.choice(CHUNKS), a)))
    for c in CHUNKS:
        if rng.random() < density * 1.5:
            facts.append(Literal("hd", (c, rng.choice(TOKENS))))
    rng.shuffle(facts)
    return facts


def random_modes(rng: random.Random) -> ModeSet:
    lines = list(_MODE_LINES)
    rng.shuffle(lines)
    return parse_mode_file("\n".join([":- modeh(1, r(+token, +token))."] + lines))


def random_pair(rng: random.Random) -> Literal:
    a, b = rng.sample(TOKENS, 2)
    return Literal("r", (a, b))


def kb_of(facts) -> KnowledgeBase:
    return KnowledgeBase(facts)


def shuffled_clause(rng: random.Random, c: Clause, max_body: int) -> Clause:
    """A random sub-clause of ``c`` keeping body order, with at most ``max_body`` literals."""
    body = list(c.body)
    if len(body) > max_body:
        keep = sorted(rng.sample(range(len(body)), max_body))
        body = [body[i] for i in keep]
    return Clause(c.head, tuple(body))
