"""Background-knowledge generation: sentence graphs to a fact file."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence

from .corpus import Corpus, EntityMention, Sentence, Taxonomy, scoped_constant, sentence_pairs
from .errors import ConfigError, DataError
from .graph import ReductionRule, SentenceGraph, build_graph, reduce_graph
from .logic import Clause, Const, KnowledgeBase, Literal, Str, parse_fact_base, read_clauses
from .logic.terms import format_term


@dataclass(frozen=True)
class Thresholds:
    short_max: int = 5
    medium_max: int = 15
    near: int = 3
    far: int = 8

    def __post_init__(self):
        if not 0 <= self.short_max < self.medium_max:
            raise ConfigError(f"length thresholds must satisfy 0 <= short ({self.short_max}) < medium ({self.medium_max})")
        if not 0 <= self.near < self.far:
            raise ConfigError(f"distance thresholds must satisfy 0 <= near ({self.near}) < far ({self.far})")


_INTENSIONAL = """\
length_type(short). length_type(medium). length_type(long).
tok_length(T, short) :- token(T), t_length(T, X), X =< {short}.
tok_length(T, medium) :- token(T), t_length(T, X), X > {short}, X =< {medium}.
tok_length(T, long) :- token(T), t_length(T, X), X > {medium}.
ck_dist_root(CK, near) :- ck_posRelPred(CK, X), X >= -{near}, X =< {near}.
ck_dist_root(CK, far) :- ck_posRelPred(CK, X), ((X >= -{far}, X < -{near}) ; (X > {near}, X =< {far})).
ck_dist_root(CK, very_far) :- ck_posRelPred(CK, X), ((X < -{far}) ; (X > {far})).
"""


def emit_intentional_bk(thresholds: Thresholds = Thresholds()) -> List[Clause]:
    """Discretising clauses for token length and chunk distance to the root."""
    text = _INTENSIONAL.format(short=thresholds.short_max, medium=thresholds.medium_max,
                               near=thresholds.near, far=thresholds.far)
    return [c for _, c in read_clauses(text, "<intensional>")]


def _lit(pred: str, *args) -> str:
    return Literal(pred, tuple(args)).format() + "."


def _cls(tax: Optional[Taxonomy], name: str, where: str) -> List[str]:
    if tax is None:
        return [name]
    try:
        cls = tax.canonical(name)
    except DataError:
        raise DataError(f"{where}: unknown taxonomy class {name!r}") from None
    return [cls] + tax.ancestors(cls)


def pair_facts(g: SentenceGraph, doc_id: str, k: int, tax: Optional[Taxonomy]) -> List[str]:
    """Facts describing one reduced, pair-focused view of a sentence, in group order."""
    s = g.sentence
    c = lambda local: scoped_constant(doc_id, s.id, k, local)
    where = f"{doc_id}/{s.id}"
    toks = [t.id for t in s.tokens if t.id in g.nodes]
    attrs = g.nodes
    chunks = [ch for ch in s.chunks if any(t in g.nodes for t in ch.token_ids)]
    out: List[str] = []

    out += [_lit("chunk", c(ch.id)) for ch in chunks]
    out += [_lit("token", c(t)) for t in toks]

    for t in toks:
        a = attrs[t]
        out += [_lit("t_stem", c(t), Str(a["lemma"])), _lit("t_length", c(t), a["length"]),
                _lit("t_orth", c(t), Const(a["orth"])), _lit("t_morph_type", c(t), Const(a["morph"]))]

    for t in toks:
        a = attrs[t]
        out += [_lit(p, c(t), Const(a[key])) for p, key in (
            ("t_pos", "pos"), ("t_gpos", "gpos"), ("t_bigPosBef", "bigPosBef"), ("t_bigPosAft", "bigPosAft"),
            ("t_trigPosBef", "trigPosBef"), ("t_trigPosAft", "trigPosAft"))]

    for ch in chunks:
        if ch.head_token in g.nodes:
            out.append(_lit("ck_hasHead", c(ch.id), c(ch.head_token)))
        out.append(_lit("ck_hasType", c(ch.id), Const(ch.type)))
        rel = attrs.get(ch.head_token, {}).get("chunk_rel_root") if ch.head_token in g.nodes else None
        if rel is None:
            rel = next((attrs[t]["chunk_rel_root"] for t in ch.token_ids
                        if t in g.nodes and "chunk_rel_root" in attrs[t]), None)
        if rel is not None:
            out.append(_lit("ck_posRelPred", c(ch.id), rel))
    for t in toks:
        a = attrs[t]
        if a["chunk_head"] and a["chunk_type"] == "np":
            out.append(_lit("t_isHeadNP", c(t)))
        if a["chunk_type"] is not None:
            out.append(_lit("t_ck_tag_type", c(t), Const(a["chunk_type"])))

    out += [_lit("t_ner", c(t), Const(attrs[t]["ner"])) for t in toks if attrs[t]["ner"]]

    mentions = {e.id: e for e in s.entities}
    for t in toks:
        for eid in attrs[t]["entities"]:
            e = mentions[eid]
            for cls in _cls(tax, e.type, where):
                out.append(_lit("t_type", c(t), Const(cls)))
            subs = _cls(tax, e.subtype, where) if e.subtype else ["none"]
            for cls in subs:
                out.append(_lit("t_subtype", c(t), Const(cls)))
            out.append(_lit("t_mtype", c(t), Const(e.mention_type)))

    out += [_lit("t_next", c(a), c(b)) for a, b in zip(toks, toks[1:])]
    heads = [ch.head_token for ch in chunks if ch.head_token in g.nodes]
    out += [_lit("t_next_head", c(a), c(b)) for a, b in zip(heads, heads[1:])]
    for ch in chunks:
        out += [_lit("ck_hasToken", c(ch.id), c(t)) for t in ch.token_ids if t in g.nodes]
    headed = [ch for ch in chunks if ch.head_token in g.nodes]
    out += [_lit("ck_hasSucc", c(a.id), c(b.id)) for a, b in zip(headed, headed[1:])]
    out += [_lit("t_hasDep", Const(e.label), c(e.source), c(e.target)) for e in g.dep_edges()]
    if s.root is not None and s.root in g.nodes:
        out.append(_lit("t_root", c(s.root)))
    return _dedup(out)


def _dedup(lines: Iterable[str]) -> List[str]:
    return list(dict.fromkeys(lines))


def emit_bk(corpus: Corpus, taxonomy: Optional[Taxonomy], rules: Sequence[ReductionRule], relation: str,
            thresholds: Thresholds = Thresholds()) -> str:
    """Fact-file text: one reduced view per candidate pair, then the intensional clauses."""
    lines = [f"% background knowledge for relation {relation}"]
    for doc in corpus.documents:
        lines.append(f"% document {doc.id}")
        lines.append(_lit("doc", Const(doc.id)))
        for s in doc.sentences:
            lines.append(f"% sentence {doc.id}/{s.id}")
            lines.append(_lit("sent", Const(f"{doc.id}_{s.id}")))
            pairs = sentence_pairs(s)
            if not pairs:
                continue
            g = build_graph(s)
            for k, a, b in pairs:
                lines.append(f"% pair {k}: {a.id} {b.id}")
                lines += pair_facts(reduce_graph(g, rules, (a, b)), doc.id, k, taxonomy)
    lines.append("% intensional background knowledge")
    lines += [cl.format() for cl in emit_intentional_bk(thresholds)]
    return "".join(line + "\n" for line in lines)


class FactStore:
    """Parsed background knowledge kept per document.

    Every fact is scoped to one document, so the knowledge base of any
    document subset is the concatenation of the per-document facts, in
    corpus order, plus the shared intensional clauses.
    """

    def __init__(self, corpus: Corpus, taxonomy: Optional[Taxonomy], rules: Sequence[ReductionRule], relation: str,
                 thresholds: Thresholds = Thresholds()):
        clauses = emit_intentional_bk(thresholds)
        # ground facts of the intensional text come last, after every document
        self.shared = [c.head for c in clauses if not c.body]
        self.intensional = [c for c in clauses if c.body]
        shared = set(self.shared)
        self.by_doc = {}
        for doc in corpus.documents:
            kb = knowledge_base(Corpus((doc,)), taxonomy, rules, relation, thresholds)
            self.by_doc[doc.id] = [f for f in kb.facts if f not in shared]

    def knowledge_base(self, corpus: Corpus) -> KnowledgeBase:
        facts = [f for doc in corpus.documents for f in self.by_doc[doc.id]]
        return KnowledgeBase(facts + self.shared, self.intensional)


def knowledge_base(corpus: Corpus, taxonomy: Optional[Taxonomy], rules: Sequence[ReductionRule], relation: str,
                   thresholds: Thresholds = Thresholds()) -> KnowledgeBase:
    text = emit_bk(corpus, taxonomy, rules, relation, thresholds)
    return parse_fact_base(text, "<generated background knowledge>")
