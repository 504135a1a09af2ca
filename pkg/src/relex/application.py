"""Applying a learned theory to unseen data and exporting typed relation instances."""
from __future__ import annotations

import re
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple, Union

from .corpus import CandidatePair, Corpus, EntityMention, Taxonomy
from .errors import DataError, ParseError
from .evaluation import best_rule, fmt4
from .induction import Theory
from .logic import KnowledgeBase, Literal, SolveBounds
from .logic.engine import DEFAULT_BOUNDS

HEADER = ("subject_id", "relation", "object_id", "confidence", "subject_class", "object_class", "sentence_id",
          "subject_text", "object_text", "rule")

_SCOPED = re.compile(r"^(?P<sent>.+)_p(?P<k>\d+)_(?P<local>[^_]+)$")


@dataclass(frozen=True)
class ExtractedInstance:
    relation: str
    arg1: str
    arg2: str
    head1: Optional[str]
    head2: Optional[str]
    doc_id: str
    sentence_id: str
    confidence: Fraction
    matched_rule: int
    pair_index: int = 0

    def __post_init__(self):
        if self.confidence <= 0:
            raise ValueError("an extracted instance needs positive confidence")
        if self.matched_rule < 0:
            raise ValueError("matched_rule must index into the theory")

    def key(self) -> tuple:
        """Identity modulo formatting: what survives an export/parse round trip."""
        return (self.relation, self.arg1, self.arg2, self.doc_id, self.sentence_id, fmt4(self.confidence),
                self.matched_rule)


def _from_literal(lit: Literal) -> Tuple[str, str, int, str, str]:
    # scoped constants look like <doc>_<sent>_p<k>_<token>
    parts = []
    for a in lit.args:
        m = _SCOPED.match(str(a))
        if m is None:
            raise DataError(f"candidate argument {a} is not a scoped token constant")
        parts.append(m)
    sent, k = parts[0]["sent"], int(parts[0]["k"])
    return "", sent, k, parts[0]["local"], parts[1]["local"]


def apply_theory(t: Theory, kb: KnowledgeBase, candidates: Sequence[Union[CandidatePair, Literal]],
                 bounds: SolveBounds = DEFAULT_BOUNDS) -> List[ExtractedInstance]:
    """Score every candidate and keep those some rule covers.

    Each kept candidate carries the index of its highest-Laplace covering rule
    (first index on ties).  Output follows sentence order of first appearance,
    then decreasing confidence, then pair index.
    """
    out = []
    order: Dict[Tuple[str, str], int] = {}
    for cand in candidates:
        if isinstance(cand, CandidatePair):
            lit = cand.literal
            doc_id, sent_id, k = cand.doc_id, cand.sentence_id, cand.pair_index
            arg1, arg2 = cand.arg1.id, cand.arg2.id
            head1, head2 = cand.arg1.head_token, cand.arg2.head_token
        else:
            lit = cand
            doc_id, sent_id, k, head1, head2 = _from_literal(lit)
            arg1, arg2 = str(lit.args[0]), str(lit.args[1])
        order.setdefault((doc_id, sent_id), len(order))
        conf, idx = best_rule(t, kb, lit, bounds)
        if idx is None:
            continue
        out.append(ExtractedInstance(lit.predicate, arg1, arg2, head1, head2, doc_id, sent_id, conf, idx, k))
    out.sort(key=lambda x: (order[(x.doc_id, x.sentence_id)], -x.confidence, x.pair_index))
    return out


def most_specific_class(e: EntityMention, tax: Optional[Taxonomy]) -> str:
    name = e.subtype or e.type
    if tax is None:
        return name
    return tax.canonical(name)


def _mention(corpus: Corpus, x: ExtractedInstance, eid: str) -> Tuple[EntityMention, str]:
    try:
        s = corpus.sentence(x.doc_id, x.sentence_id)
        e = s.entity(eid)
    except (KeyError, DataError):
        raise DataError(f"cannot resolve entity {eid!r} in sentence {x.doc_id}/{x.sentence_id}") from None
    text = " ".join(s.token(t).surface for t in e.token_ids)
    return e, text


def _clean(text: str) -> str:
    return text.replace("\t", " ").replace("\n", " ")


def export_instances(xs: Sequence[ExtractedInstance], tax: Optional[Taxonomy], corpus: Corpus) -> str:
    """Tab-separated instance file with a header line; one record per instance, in input order."""
    lines = ["\t".join(HEADER)]
    for x in xs:
        e1, text1 = _mention(corpus, x, x.arg1)
        e2, text2 = _mention(corpus, x, x.arg2)
        try:
            c1, c2 = most_specific_class(e1, tax), most_specific_class(e2, tax)
        except DataError as exc:
            raise DataError(f"{x.doc_id}/{x.sentence_id}: {exc}") from None
        lines.append("\t".join([x.arg1, x.relation, x.arg2, fmt4(x.confidence), c1, c2,
                                f"{x.doc_id}/{x.sentence_id}", _clean(text1), _clean(text2), str(x.matched_rule)]))
    return "".join(line + "\n" for line in lines)


def parse_instances(text: str, source=None, corpus: Optional[Corpus] = None) -> List[ExtractedInstance]:
    """Read an instance file back.  Head tokens are filled in only when ``corpus`` is given."""
    rows = text.splitlines()
    if not rows or tuple(rows[0].split("\t")) != HEADER:
        raise ParseError("missing or malformed instance header", source, 1)
    out = []
    for lineno, row in enumerate(rows[1:], 2):
        if not row.strip():
            continue
        cols = row.split("\t")
        if len(cols) != len(HEADER):
            raise ParseError(f"expected {len(HEADER)} columns, found {len(cols)}", source, lineno)
        arg1, relation, arg2, conf, _, _, sid, _, _, rule = cols
        doc_id, sep, sent_id = sid.partition("/")
        if not sep:
            raise ParseError(f"sentence id {sid!r} is not of the form doc/sentence", source, lineno)
        try:
            x = ExtractedInstance(relation, arg1, arg2, None, None, doc_id, sent_id, Fraction(conf), int(rule))
        except ValueError as exc:
            raise ParseError(str(exc), source, lineno) from None
        if corpus is not None:
            e1, _ = _mention(corpus, x, arg1)
            e2, _ = _mention(corpus, x, arg2)
            x = replace(x, head1=e1.head_token, head2=e2.head_token)
        out.append(x)
    return out
