"""Seeded synthetic corpora with planted relation patterns, used for end-to-end checks."""
from __future__ import annotations

import random
from typing import List, Optional, Sequence, Tuple

from .corpus import Chunk, Corpus, DependencyEdge, Document, EntityMention, RelationInstance, Sentence, Token

ENTITY_NAMES = ("KinA", "KinB", "SpoA", "SpoB", "RapA", "RapC", "PhoP", "PhoR", "ComK", "ComS",
                "DegU", "DegS", "AbrB", "SinR")
ALT_ENTITY_NAMES = ("YfiA", "YfiB", "GerE", "GerD", "CodY", "CcpA", "ResD", "ResE", "FliA", "FlgM",
                    "MotA", "MotB", "LytR", "LytS")
ADVERBS = ("strongly", "directly", "also")
OTHER_VERBS = ("regulates", "activates", "represses")
OTHER_PARTICIPLES = ("regulated", "activated", "repressed")
RELATION = "rel"
PATTERN_ACTIVE = "active"
PATTERN_PASSIVE = "passive"


class _Builder:
    """Accumulates one sentence: words with tags, chunks, dependencies and mentions."""

    def __init__(self):
        self.words: List[Tuple[str, str]] = []
        self.chunks: List[Tuple[str, List[int]]] = []
        self.deps: List[Tuple[str, int, int]] = []
        self.mentions: List[Tuple[int, str]] = []
        self.root: Optional[int] = None

    def add(self, word: str, pos: str, chunk: Optional[str] = None, join: bool = False) -> int:
        i = len(self.words)
        self.words.append((word, pos))
        if chunk is not None:
            if join and self.chunks and self.chunks[-1][0] == chunk:
                self.chunks[-1][1].append(i)
            else:
                self.chunks.append((chunk, [i]))
        return i

    def entity(self, name: str, ent_type: str = "protein") -> int:
        i = self.add(name, "NNP", "np")
        self.mentions.append((i, ent_type))
        return i

    def build(self, sid: str, gold: Sequence[Tuple[int, int]]) -> Sentence:
        tokens, off = [], 0
        for i, (w, p) in enumerate(self.words):
            tokens.append(Token(f"t{i + 1}", w, w, p, off, off + len(w), "PROTEIN" if i in dict(self.mentions) else "O"))
            off += len(w) + 1
        tid = lambda i: f"t{i + 1}"
        chunks = tuple(Chunk(f"c{j + 1}", typ, tuple(tid(i) for i in idx), tid(idx[-1]))
                       for j, (typ, idx) in enumerate(self.chunks))
        deps = tuple(DependencyEdge(lab, tid(g), tid(d)) for lab, g, d in self.deps)
        ents, eid = [], {}
        for j, (i, typ) in enumerate(self.mentions):
            eid[i] = f"e{j + 1}"
            ents.append(EntityMention(eid[i], (tid(i),), tid(i), typ, None, "name"))
        rels = tuple(RelationInstance(RELATION, *sorted((eid[a], eid[b])), sid, True) for a, b in gold)
        root = tid(self.root) if self.root is not None else None
        return Sentence(sid, tuple(tokens), chunks, deps, tuple(ents), rels, root)


def _verb_phrase(b: _Builder, rng: random.Random, verb: str) -> int:
    adv = None
    if rng.random() < 0.5:
        adv = b.add(rng.choice(ADVERBS), "RB", "vp")
    v = b.add(verb, "VBZ", "vp", join=adv is not None)
    if adv is not None:
        b.deps.append(("advmod", v, adv))
    b.root = v
    return v


def _finish(b: _Builder, rng: random.Random):
    if rng.random() < 0.5:
        b.add(".", ".")


def _active(rng, e1, e2, verb="interacts"):
    b = _Builder()
    a = b.entity(e1)
    v = _verb_phrase(b, rng, verb)
    c = b.entity(e2)
    b.deps += [("nsubj", v, a), ("dobj", v, c)]
    _finish(b, rng)
    return b, (a, c)


def _with(rng, e1, e2):
    b = _Builder()
    a = b.entity(e1)
    v = _verb_phrase(b, rng, "interacts")
    b.add("with", "IN", "pp")
    c = b.entity(e2)
    b.deps += [("nsubj", v, a), ("prep_with", v, c)]
    _finish(b, rng)
    return b, (a, c)


def _of(rng, e1, e2):
    b = _Builder()
    p = b.add("protein", "NN", "np")
    b.add("of", "IN", "pp")
    a = b.entity(e1)
    v = _verb_phrase(b, rng, "interacts")
    c = b.entity(e2)
    b.deps += [("prep_of", p, a), ("nsubj", v, p), ("dobj", v, c)]
    _finish(b, rng)
    return b, (a, c)


def _passive(rng, e1, e2, verb="bound"):
    b = _Builder()
    a = b.entity(e1)
    aux = b.add("is", "VBZ", "vp")
    v = b.add(verb, "VBN", "vp", join=True)
    b.add("by", "IN", "pp")
    c = b.entity(e2)
    b.root = v
    b.deps += [("nsubjpass", v, a), ("auxpass", v, aux), ("agent", v, c)]
    _finish(b, rng)
    return b, (a, c)


def _single(rng, e1):
    b = _Builder()
    det = b.add("the", "DT", "np")
    g = b.add("gene", "NN", "np", join=True)
    a = b.entity(e1)
    b.deps += [("det", a, det), ("nn", a, g)]
    b.root = a
    _finish(b, rng)
    return b, None


def planted_corpus(seed: int = 0, n_docs: int = 40, sentences_per_doc: int = 5, n_pos: int = 60,
                   n_neg: int = 120, patterns: Sequence[str] = (PATTERN_ACTIVE,),
                   names: Sequence[str] = ENTITY_NAMES, doc_prefix: str = "d") -> Corpus:
    """Corpus whose gold pairs are exactly those matched by the planted patterns.

    Positives are split evenly across ``patterns``.  Negatives are near misses
    split evenly between another verb, a prepositional object and a subject
    that is a non-entity noun; with the passive pattern a fourth kind, the
    passive of another verb, joins them.  Remaining sentences hold a single
    mention.
    """
    rng = random.Random(seed)
    total = n_docs * sentences_per_doc
    if n_pos + n_neg > total:
        raise ValueError("more examples requested than sentences available")
    pick = lambda: rng.sample(list(names), 2)
    kinds: List[Tuple[str, object]] = []
    for i in range(n_pos):
        kinds.append(("pos", patterns[i * len(patterns) // n_pos]))
    near = ("verb", "with", "of") + (("passive",) if PATTERN_PASSIVE in patterns else ())
    for i in range(n_neg):
        kinds.append(("neg", near[i * len(near) // n_neg]))
    kinds += [("single", None)] * (total - len(kinds))
    rng.shuffle(kinds)
    built = []
    for label, kind in kinds:
        if label == "single":
            built.append(_single(rng, rng.choice(list(names))))
        elif label == "pos":
            e1, e2 = pick()
            b, pair = _active(rng, e1, e2) if kind == PATTERN_ACTIVE else _passive(rng, e1, e2)
            built.append((b, pair))
        else:
            e1, e2 = pick()
            if kind == "verb":
                b, _ = _active(rng, e1, e2, rng.choice(OTHER_VERBS))
            elif kind == "with":
                b, _ = _with(rng, e1, e2)
            elif kind == "passive":
                b, _ = _passive(rng, e1, e2, rng.choice(OTHER_PARTICIPLES))
            else:
                b, _ = _of(rng, e1, e2)
            built.append((b, None))
    docs = []
    for d in range(n_docs):
        sents = []
        for j in range(sentences_per_doc):
            b, gold = built[d * sentences_per_doc + j]
            sents.append(b.build(f"s{j + 1}", [gold] if gold else []))
        docs.append(Document(f"{doc_prefix}{d + 1}", tuple(sents)))
    return Corpus(tuple(docs))
