"""Fold planning, metrics and the cross-validation / cross-corpus protocols."""
from __future__ import annotations

import json
import random
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from .bk import FactStore, Thresholds, knowledge_base
from .corpus import Corpus, Taxonomy, candidate_pairs
from .errors import ConfigError, DataError
from .graph import ReductionRule
from .induction import LearnParams, Theory, learn
from .logic import KnowledgeBase, Literal, SolveBounds, provable, unify
from .logic.engine import DEFAULT_BOUNDS
from .modes import ModeSet


@dataclass(frozen=True)
class FoldPlan:
    k: int
    assignment: Dict[str, int]
    rng_seed: int

    def folds(self) -> List[List[str]]:
        out: List[List[str]] = [[] for _ in range(self.k)]
        for doc_id, f in self.assignment.items():
            out[f].append(doc_id)
        return out


def kfold(c: Corpus, k: int, rng_seed: int = 0) -> FoldPlan:
    """Shuffle documents with a seeded RNG and deal them round-robin into ``k`` folds."""
    if k < 2:
        raise ConfigError("k must be at least 2")
    ids = [d.id for d in c.documents]
    if k > len(ids):
        raise ConfigError(f"k={k} exceeds the number of documents ({len(ids)})")
    order = list(ids)
    random.Random(rng_seed).shuffle(order)
    dealt = {doc_id: i % k for i, doc_id in enumerate(order)}
    return FoldPlan(k, {doc_id: dealt[doc_id] for doc_id in ids}, rng_seed)


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int = 0
    fp: int = 0
    fn: int = 0
    tn: int = 0

    def __post_init__(self):
        if min(self.tp, self.fp, self.fn, self.tn) < 0:
            raise ValueError("confusion counts must be non-negative")

    def __add__(self, other: "ConfusionCounts") -> "ConfusionCounts":
        return ConfusionCounts(self.tp + other.tp, self.fp + other.fp, self.fn + other.fn, self.tn + other.tn)


@dataclass(frozen=True)
class Metrics:
    precision: Fraction
    recall: Fraction
    f1: Fraction
    auc: Optional[Fraction] = None


def prf(cc: ConfusionCounts) -> Metrics:
    p = Fraction(cc.tp, cc.tp + cc.fp) if cc.tp + cc.fp else Fraction(0)
    r = Fraction(cc.tp, cc.tp + cc.fn) if cc.tp + cc.fn else Fraction(0)
    f1 = 2 * p * r / (p + r) if p + r else Fraction(0)
    return Metrics(p, r, f1)


def auc(scored: Sequence[Tuple[Fraction, bool]]) -> Fraction:
    """Mann-Whitney estimate: concordant pairs plus half the ties, over all pos/neg pairs."""
    pos = sorted(s for s, g in scored if g)
    neg = sorted(s for s, g in scored if not g)
    if not pos or not neg:
        raise DataError("AUC needs at least one positive and one negative example")
    # two-pointer sweep over the sorted negatives
    wins2 = 0
    lo = hi = 0
    for s in pos:
        while lo < len(neg) and neg[lo] < s:
            lo += 1
        while hi < len(neg) and neg[hi] <= s:
            hi += 1
        wins2 += 2 * lo + (hi - lo)
    return Fraction(wins2, 2 * len(pos) * len(neg))


def fmt4(x: Optional[Fraction]) -> str:
    """Round half up to four decimals."""
    if x is None:
        return "NA"
    scaled = Fraction(x) * 10000
    q = (scaled.numerator * 2 + scaled.denominator) // (2 * scaled.denominator)
    sign = "-" if q < 0 else ""
    q = abs(q)
    return f"{sign}{q // 10000}.{q % 10000:04d}"


def score_example(t: Theory, kb: KnowledgeBase, e: Literal, bounds: SolveBounds = DEFAULT_BOUNDS) -> Fraction:
    """Highest Laplace confidence among the rules covering ``e``; 0 when none does."""
    return best_rule(t, kb, e, bounds)[0]


def best_rule(t: Theory, kb: KnowledgeBase, e: Literal,
              bounds: SolveBounds = DEFAULT_BOUNDS) -> Tuple[Fraction, Optional[int]]:
    best, idx = Fraction(0), None
    for i, sc in enumerate(t.rules):
        if sc.laplace <= best:
            continue
        theta = unify(sc.clause.head, e)
        if theta is not None and provable(sc.clause.body, kb, theta, bounds):
            best, idx = sc.laplace, i
    return best, idx


@dataclass
class FoldResult:
    fold: int
    counts: ConfusionCounts
    metrics: Metrics
    theory_size: int
    train_docs: int
    test_docs: int
    scored: List[Tuple[Fraction, bool]] = field(repr=False, default_factory=list)
    theory: str = field(repr=False, default="")
    seconds: float = field(compare=False, default=0.0)


@dataclass
class Report:
    protocol: str
    relation: str
    params: LearnParams
    folds: List[FoldResult]
    pooled_counts: ConfusionCounts
    pooled: Metrics
    macro: Metrics

    COLUMNS = ("fold", "train_docs", "test_docs", "rules", "tp", "fp", "fn", "tn", "precision", "recall", "f1", "auc")

    def rows(self) -> List[List[str]]:
        out = []
        for f in self.folds:
            m, c = f.metrics, f.counts
            out.append([str(f.fold), str(f.train_docs), str(f.test_docs), str(f.theory_size), str(c.tp), str(c.fp),
                        str(c.fn), str(c.tn), fmt4(m.precision), fmt4(m.recall), fmt4(m.f1), fmt4(m.auc)])
        c = self.pooled_counts
        for name, m in (("pooled", self.pooled), ("macro", self.macro)):
            counts = [str(c.tp), str(c.fp), str(c.fn), str(c.tn)] if name == "pooled" else ["", "", "", ""]
            out.append([name, "", "", ""] + counts + [fmt4(m.precision), fmt4(m.recall), fmt4(m.f1), fmt4(m.auc)])
        return out

    def to_tsv(self) -> str:
        lines = ["\t".join(self.COLUMNS)] + ["\t".join(r) for r in self.rows()]
        return "".join(line + "\n" for line in lines)

    def to_json(self) -> str:
        def metrics(m: Metrics):
            return {"precision": fmt4(m.precision), "recall": fmt4(m.recall), "f1": fmt4(m.f1), "auc": fmt4(m.auc)}

        record = {
            "protocol": self.protocol,
            "relation": self.relation,
            "params": asdict(self.params),
            "folds": [{"fold": f.fold, "counts": asdict(f.counts), "metrics": metrics(f.metrics),
                       "rules": f.theory_size, "theory": f.theory} for f in self.folds],
            "pooled": {"counts": asdict(self.pooled_counts), "metrics": metrics(self.pooled)},
            "macro": metrics(self.macro),
        }
        return json.dumps(record, indent=2, sort_keys=True) + "\n"

    def timings_tsv(self) -> str:
        lines = ["fold\tseconds"] + [f"{f.fold}\t{f.seconds:.3f}" for f in self.folds]
        return "".join(line + "\n" for line in lines)


@dataclass(frozen=True)
class Task:
    """Everything a fold needs besides its corpora."""
    relation: str
    modes: ModeSet
    params: LearnParams
    taxonomy: Optional[Taxonomy] = None
    rules: Tuple[ReductionRule, ...] = ()
    thresholds: Thresholds = Thresholds()
    bounds: SolveBounds = DEFAULT_BOUNDS


def _safe_auc(scored) -> Optional[Fraction]:
    try:
        return auc(scored)
    except DataError:
        return None


def _kb(c: Corpus, task: Task, store: Optional[FactStore]) -> KnowledgeBase:
    if store is not None:
        return store.knowledge_base(c)
    return knowledge_base(c, task.taxonomy, task.rules, task.relation, task.thresholds)


def train(c: Corpus, task: Task, params: Optional[LearnParams] = None,
          store: Optional[FactStore] = None) -> Tuple[Theory, KnowledgeBase]:
    params = params or task.params
    kb = _kb(c, task, store)
    cands = candidate_pairs(c, task.relation)
    pos = [x.literal for x in cands if x.gold]
    neg = [x.literal for x in cands if not x.gold]
    if not pos:
        return Theory([], params), kb
    modes = task.modes.for_relation(task.relation)
    return learn(pos, neg, kb, modes, params, task.bounds), kb


def evaluate(t: Theory, c: Corpus, task: Task,
             store: Optional[FactStore] = None) -> Tuple[ConfusionCounts, List[Tuple[Fraction, bool]]]:
    kb = _kb(c, task, store)
    tp = fp = fn = tn = 0
    scored = []
    for cand in candidate_pairs(c, task.relation):
        conf = score_example(t, kb, cand.literal, task.bounds)
        scored.append((conf, cand.gold))
        predicted = conf > 0
        if cand.gold:
            tp, fn = (tp + 1, fn) if predicted else (tp, fn + 1)
        else:
            fp, tn = (fp + 1, tn) if predicted else (fp, tn + 1)
    return ConfusionCounts(tp, fp, fn, tn), scored


def _run_fold(args) -> FoldResult:
    fold, train_c, test_c, task, params, store = args
    start = time.perf_counter()
    theory, _ = train(train_c, task, params, store)
    counts, scored = evaluate(theory, test_c, task, store)
    m = prf(counts)
    m = Metrics(m.precision, m.recall, m.f1, _safe_auc(scored))
    return FoldResult(fold, counts, m, len(theory), len(train_c.documents), len(test_c.documents), scored,
                      theory.format(), time.perf_counter() - start)


def _summarise(protocol: str, task: Task, params: LearnParams, folds: List[FoldResult]) -> Report:
    pooled_counts = ConfusionCounts()
    scored = []
    for f in folds:
        pooled_counts = pooled_counts + f.counts
        scored += f.scored
    p = prf(pooled_counts)
    pooled = Metrics(p.precision, p.recall, p.f1, _safe_auc(scored))
    n = len(folds)
    aucs = [f.metrics.auc for f in folds if f.metrics.auc is not None]
    macro = Metrics(sum((f.metrics.precision for f in folds), Fraction(0)) / n,
                    sum((f.metrics.recall for f in folds), Fraction(0)) / n,
                    sum((f.metrics.f1 for f in folds), Fraction(0)) / n,
                    sum(aucs, Fraction(0)) / len(aucs) if aucs else None)
    return Report(protocol, task.relation, params, folds, pooled_counts, pooled, macro)


def _map(jobs: int, fn, items):
    if jobs <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=min(jobs, len(items))) as pool:
        return list(pool.map(fn, items))


def cross_validate(c: Corpus, task: Task, k: int = 10, rng_seed: int = 0, jobs: int = 1) -> Report:
    """k-fold cross-validation at document level.

    Fold ``i`` learns with ``rng_seed + i`` so results do not depend on
    whether folds run in parallel.
    """
    plan = kfold(c, k, rng_seed)
    store = FactStore(c, task.taxonomy, task.rules, task.relation, task.thresholds)
    items = []
    for i, test_ids in enumerate(plan.folds()):
        test_set = set(test_ids)
        train_c = c.subset(d.id for d in c.documents if d.id not in test_set)
        test_c = c.subset(test_set)
        items.append((i, train_c, test_c, task, task.params.replace(rng_seed=task.params.rng_seed + i), store))
    return _summarise("xval", task, task.params, _map(jobs, _run_fold, items))


def _relation_types(c: Corpus) -> set:
    return {r.type for _, s in c.sentences() for r in s.relations}


def cross_corpus(train_c: Corpus, test_c: Corpus, task: Task) -> Report:
    """Learn on all of ``train_c`` and evaluate on all of ``test_c``."""
    for name, c in (("training", train_c), ("test", test_c)):
        types = _relation_types(c)
        if types and task.relation not in types:
            raise DataError(f"relation {task.relation!r} does not occur in the {name} corpus "
                            f"(found {', '.join(sorted(types))})")
    result = _run_fold((0, train_c, test_c, task, task.params, None))
    return _summarise("xcorpus", task, task.params, [result])
