"""Corpus model, loader, taxonomy and relation-example generation."""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Dict, Iterable, List, NamedTuple, Optional, Sequence, Tuple, Union

import jsonschema

from .errors import DataError
from .logic import Const, Literal

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Token:
    id: str
    surface: str
    lemma: str
    pos: str
    char_start: int
    char_end: int
    ner: Optional[str] = None


@dataclass(frozen=True)
class Chunk:
    id: str
    type: str
    token_ids: Tuple[str, ...]
    head_token: str


@dataclass(frozen=True)
class DependencyEdge:
    label: str
    governor: str
    dependent: str


@dataclass(frozen=True)
class EntityMention:
    id: str
    token_ids: Tuple[str, ...]
    head_token: str
    type: str
    subtype: Optional[str] = None
    mention_type: str = "name"
    referent: Optional[str] = None

    @property
    def entity(self) -> str:
        return self.referent or self.id


@dataclass(frozen=True)
class RelationInstance:
    type: str
    arg1: str
    arg2: str
    sentence_id: str
    gold: bool = True


@dataclass(frozen=True)
class Sentence:
    id: str
    tokens: Tuple[Token, ...]
    chunks: Tuple[Chunk, ...] = ()
    dependencies: Tuple[DependencyEdge, ...] = ()
    entities: Tuple[EntityMention, ...] = ()
    relations: Tuple[RelationInstance, ...] = ()
    root: Optional[str] = None

    def token(self, tid: str) -> Token:
        return self.token_index()[tid]

    def token_index(self) -> Dict[str, Token]:
        return {t.id: t for t in self.tokens}

    def position(self, tid: str) -> int:
        for i, t in enumerate(self.tokens):
            if t.id == tid:
                return i
        raise KeyError(tid)

    def entity(self, eid: str) -> EntityMention:
        for e in self.entities:
            if e.id == eid:
                return e
        raise KeyError(eid)


@dataclass(frozen=True)
class Document:
    id: str
    sentences: Tuple[Sentence, ...]


@dataclass(frozen=True)
class Corpus:
    documents: Tuple[Document, ...] = ()

    def sentences(self) -> Iterable[Tuple[Document, Sentence]]:
        for doc in self.documents:
            for s in doc.sentences:
                yield doc, s

    def subset(self, doc_ids: Iterable[str]) -> "Corpus":
        keep = set(doc_ids)
        return Corpus(tuple(d for d in self.documents if d.id in keep))

    def sentence(self, doc_id: str, sent_id: str) -> Sentence:
        for d in self.documents:
            if d.id == doc_id:
                for s in d.sentences:
                    if s.id == sent_id:
                        return s
        raise KeyError(f"{doc_id}/{sent_id}")


@lru_cache(maxsize=1)
def _schema():
    text = resources.files("relex.data").joinpath("corpus.schema.json").read_text(encoding="utf-8")
    return json.loads(text)


@lru_cache(maxsize=8)
def load_label_inventory(path: Optional[str] = None) -> Tuple[frozenset, Tuple[str, ...]]:
    if path is None:
        text = resources.files("relex.data").joinpath("dependency_labels.txt").read_text(encoding="utf-8")
    else:
        text = Path(path).read_text(encoding="utf-8")
    exact, prefixes = set(), []
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if line.endswith("*"):
            prefixes.append(line[:-1])
        else:
            exact.add(line)
    return frozenset(exact), tuple(prefixes)


def _label_ok(label: str, inventory) -> bool:
    exact, prefixes = inventory
    return label in exact or any(label.startswith(p) and len(label) > len(p) for p in prefixes)


def _unique(ids: Sequence[str], what: str, where: str, source, line):
    seen = set()
    for i in ids:
        if i in seen:
            raise DataError(f"{where}: duplicate {what} id {i!r}", source, line)
        seen.add(i)


def _build_sentence(raw: dict, doc_id: str, inventory, source, line) -> Sentence:
    sid = raw["id"]
    where = f"{doc_id}/{sid}"
    tokens = []
    prev_end = None
    for t in raw["tokens"]:
        if t["char_end"] <= t["char_start"]:
            raise DataError(f"{where}: token {t['id']} has empty or negative extent", source, line)
        if prev_end is not None and t["char_start"] < prev_end:
            raise DataError(f"{where}: token {t['id']} overlaps or precedes the previous token", source, line)
        prev_end = t["char_end"]
        tokens.append(Token(t["id"], t["surface"], t.get("lemma", t["surface"]), t["pos"],
                            t["char_start"], t["char_end"], t.get("ner")))
    pos_of = {t.id: i for i, t in enumerate(tokens)}
    _unique([t.id for t in tokens], "token", where, source, line)

    def need(tid, ctx):
        if tid not in pos_of:
            raise DataError(f"{where}: {ctx} references unknown token {tid!r}", source, line)
        return pos_of[tid]

    def span(ids, ctx):
        idx = [need(t, ctx) for t in ids]
        if idx != list(range(idx[0], idx[0] + len(idx))):
            raise DataError(f"{where}: {ctx} tokens are not contiguous and ordered", source, line)
        return idx

    chunks = []
    chunked = set()
    for c in raw.get("chunks", []):
        ctx = f"chunk {c['id']}"
        span(c["tokens"], ctx)
        head = c.get("head", c["tokens"][-1])
        if head != c["tokens"][-1]:
            raise DataError(f"{where}: {ctx} head must be its rightmost token", source, line)
        if chunked & set(c["tokens"]):
            raise DataError(f"{where}: {ctx} overlaps another chunk", source, line)
        chunked.update(c["tokens"])
        chunks.append(Chunk(c["id"], c["type"], tuple(c["tokens"]), head))
    chunks.sort(key=lambda c: pos_of[c.token_ids[0]])

    deps = []
    for d in raw.get("dependencies", []):
        ctx = f"dependency {d['label']}({d['governor']}, {d['dependent']})"
        need(d["governor"], ctx)
        need(d["dependent"], ctx)
        if d["governor"] == d["dependent"]:
            raise DataError(f"{where}: {ctx} is a self loop", source, line)
        if not _label_ok(d["label"], inventory):
            raise DataError(f"{where}: {ctx} uses an undeclared label", source, line)
        deps.append(DependencyEdge(d["label"], d["governor"], d["dependent"]))

    root = raw.get("root")
    if root is not None:
        need(root, "root")

    entities = []
    for e in raw.get("entities", []):
        ctx = f"entity {e['id']}"
        span(e["tokens"], ctx)
        head = e.get("head", e["tokens"][-1])
        if head not in e["tokens"]:
            raise DataError(f"{where}: {ctx} head is outside its span", source, line)
        entities.append(EntityMention(e["id"], tuple(e["tokens"]), head, e["type"], e.get("subtype"),
                                      e.get("mention_type", "name"), e.get("referent")))
    entities.sort(key=lambda e: (pos_of[e.token_ids[0]], e.id))
    _unique([e.id for e in entities], "entity", where, source, line)
    _unique([t.id for t in tokens] + [c.id for c in chunks], "token/chunk", where, source, line)

    by_id = {e.id: e for e in entities}
    relations = []
    for r in raw.get("relations", []):
        for arg in (r["arg1"], r["arg2"]):
            if arg not in by_id:
                raise DataError(f"{where}: relation references unknown entity {arg!r}", source, line)
        a, b = sorted((r["arg1"], r["arg2"]))
        if a == b or by_id[a].entity == by_id[b].entity:
            log.warning("%s: dropping self-interaction %s(%s, %s)", where, r["type"], a, b)
            continue
        relations.append(RelationInstance(r["type"], a, b, sid, r.get("gold", True)))
    return Sentence(sid, tuple(tokens), tuple(chunks), tuple(deps), tuple(entities), tuple(relations), root)


def parse_corpus(text: str, source=None, label_inventory: Optional[str] = None) -> Corpus:
    validator = jsonschema.Draft202012Validator(_schema())
    inventory = load_label_inventory(label_inventory)
    docs = []
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        try:
            raw = json.loads(line)
        except json.JSONDecodeError as exc:
            raise DataError(f"invalid JSON: {exc.msg}", source, lineno) from None
        errors = sorted(validator.iter_errors(raw), key=lambda e: list(e.absolute_path))
        if errors:
            err = errors[0]
            path = "/".join(str(p) for p in err.absolute_path) or "<document>"
            raise DataError(f"schema violation at {path}: {err.message}", source, lineno)
        sentences = tuple(_build_sentence(s, raw["id"], inventory, source, lineno) for s in raw["sentences"])
        _unique([s.id for s in sentences], "sentence", raw["id"], source, lineno)
        docs.append(Document(raw["id"], sentences))
    _unique([d.id for d in docs], "document", "corpus", source, None)
    return Corpus(tuple(docs))


def load_corpus(path: Union[str, Path], label_inventory: Optional[str] = None) -> Corpus:
    path = Path(path)
    return parse_corpus(path.read_text(encoding="utf-8"), str(path), label_inventory)


def corpus_to_jsonl(corpus: Corpus) -> str:
    lines = []
    for doc in corpus.documents:
        sents = []
        for s in doc.sentences:
            rec = {
                "id": s.id,
                "tokens": [{"id": t.id, "surface": t.surface, "lemma": t.lemma, "pos": t.pos,
                            "char_start": t.char_start, "char_end": t.char_end, "ner": t.ner}
                           for t in s.tokens],
                "chunks": [{"id": c.id, "type": c.type, "tokens": list(c.token_ids), "head": c.head_token}
                           for c in s.chunks],
                "dependencies": [{"label": d.label, "governor": d.governor, "dependent": d.dependent}
                                 for d in s.dependencies],
                "root": s.root,
                "entities": [],
                "relations": [{"type": r.type, "arg1": r.arg1, "arg2": r.arg2, "gold": r.gold}
                              for r in s.relations],
            }
            for e in s.entities:
                ent = {"id": e.id, "tokens": list(e.token_ids), "head": e.head_token, "type": e.type,
                       "subtype": e.subtype, "mention_type": e.mention_type}
                if e.referent is not None:
                    ent["referent"] = e.referent
                rec["entities"].append(ent)
            sents.append(rec)
        lines.append(json.dumps({"id": doc.id, "sentences": sents}, ensure_ascii=False))
    return "".join(line + "\n" for line in lines)


# -- taxonomy ---------------------------------------------------------------

@dataclass
class Taxonomy:
    parents: Dict[str, str] = field(default_factory=dict)
    synonyms: Dict[str, str] = field(default_factory=dict)
    roots: Tuple[str, ...] = ()

    def classes(self) -> List[str]:
        seen = dict.fromkeys(self.roots)
        for child, parent in self.parents.items():
            seen.setdefault(parent, None)
            seen.setdefault(child, None)
        return list(seen)

    def __contains__(self, name: str) -> bool:
        return name in self.parents or name in self.roots or name in self.synonyms

    def canonical(self, name: str) -> str:
        name = self.synonyms.get(name, name)
        if name not in self.parents and name not in self.roots:
            raise DataError(f"unknown taxonomy class {name!r}")
        return name

    def ancestors(self, name: str) -> List[str]:
        cls = self.canonical(name)
        out = []
        while cls in self.parents:
            cls = self.parents[cls]
            out.append(cls)
        return out

    def depth(self, name: str) -> int:
        return len(self.ancestors(name))


def parse_taxonomy(text: str, source=None) -> Taxonomy:
    """Read ``child<TAB>parent`` lines, ``=synonym<TAB>class`` lines and bare root lines."""
    parents: Dict[str, str] = {}
    synonyms: Dict[str, str] = {}
    declared_roots: List[str] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = [p.strip() for p in line.split("\t") if p.strip()]
        if len(parts) == 1 and not parts[0].startswith("="):
            declared_roots.append(parts[0])
        elif len(parts) == 2 and parts[0].startswith("="):
            synonyms[parts[0][1:]] = parts[1]
        elif len(parts) == 2:
            child, parent = parts
            if child in parents and parents[child] != parent:
                raise DataError(f"class {child!r} has two parents", source, lineno)
            parents[child] = parent
        else:
            raise DataError(f"malformed taxonomy line {raw!r}", source, lineno)
    for start in parents:
        seen = {start}
        cls = start
        while cls in parents:
            cls = parents[cls]
            if cls in seen:
                raise DataError(f"taxonomy cycle through {cls!r}", source)
            seen.add(cls)
    nodes = dict.fromkeys(declared_roots)
    for child, parent in parents.items():
        nodes.setdefault(child, None)
        nodes.setdefault(parent, None)
    roots = tuple(n for n in nodes if n not in parents)
    if nodes and len(roots) != 1:
        raise DataError(f"taxonomy must have a single root, found {list(roots)}", source)
    tax = Taxonomy(parents, synonyms, roots)
    for syn, cls in synonyms.items():
        if cls not in nodes:
            raise DataError(f"synonym {syn!r} names unknown class {cls!r}", source)
    return tax


def load_taxonomy(path: Union[str, Path]) -> Taxonomy:
    path = Path(path)
    return parse_taxonomy(path.read_text(encoding="utf-8"), str(path))


def ancestors(tax: Taxonomy, cls: str) -> List[str]:
    return tax.ancestors(cls)


# -- examples -----------------------------------------------------------------

def scoped_constant(doc_id: str, sent_id: str, pair_index: int, local_id: str) -> Const:
    """Constant naming a token or chunk inside one entity-pair view of a sentence."""
    return Const(f"{doc_id}_{sent_id}_p{pair_index}_{local_id}")


class CandidatePair(NamedTuple):
    doc_id: str
    sentence_id: str
    pair_index: int
    arg1: EntityMention
    arg2: EntityMention
    literal: Literal
    gold: bool


def sentence_pairs(sentence: Sentence) -> List[Tuple[int, EntityMention, EntityMention]]:
    """Unordered mention pairs of a sentence in canonical order, self-interactions removed."""
    out = []
    ents = sentence.entities
    k = 0
    for i in range(len(ents)):
        for j in range(i + 1, len(ents)):
            a, b = ents[i], ents[j]
            if a.entity == b.entity or a.head_token == b.head_token:
                continue
            k += 1
            out.append((k, a, b))
    return out


def candidate_pairs(c: Corpus, relation: str) -> List[CandidatePair]:
    out = []
    for doc, s in c.sentences():
        gold = {frozenset((r.arg1, r.arg2)) for r in s.relations if r.type == relation and r.gold}
        for k, a, b in sentence_pairs(s):
            lit = Literal(relation, (scoped_constant(doc.id, s.id, k, a.head_token),
                                     scoped_constant(doc.id, s.id, k, b.head_token)))
            out.append(CandidatePair(doc.id, s.id, k, a, b, lit, frozenset((a.id, b.id)) in gold))
    return out


def generate_examples(c: Corpus, relation: str) -> Tuple[List[Literal], List[Literal]]:
    pos, neg = [], []
    for cand in candidate_pairs(c, relation):
        (pos if cand.gold else neg).append(cand.literal)
    return pos, neg


def corpus_stats(c: Corpus, relation: str) -> Tuple[int, int, int]:
    pos, neg = generate_examples(c, relation)
    n_sent = sum(1 for _ in c.sentences())
    return n_sent, len(pos), len(neg)
