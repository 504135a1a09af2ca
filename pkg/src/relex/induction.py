"""Bottom-up rule induction: ARMG beam search, negative-based reduction, covering."""
from __future__ import annotations

import logging
import random
from dataclasses import asdict, dataclass, field, fields
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple, Union

from .errors import ConfigError, DataError, InvariantError, ParseError
from .logic import Clause, KnowledgeBase, Literal, SolveBounds, Var, parse_clause, parse_literal, unify
from .logic.engine import DEFAULT_BOUNDS, BuiltinError, provable, satisfiable_prefix
from .logic.terms import BUILTINS, walk
from .modes import ModeSet, SaturationParams, bottom_clause, head_inputs, is_well_formed, linked_mask

log = logging.getLogger(__name__)

EVALFNS = ("coverage", "precision", "laplace")

Number = Union[int, Fraction]


@dataclass(frozen=True)
class LearnParams:
    depth_i: int = 3
    recall_cap: int = 100
    beam_width: int = 5
    sample_size: int = 10
    evalfn: str = "coverage"
    minpos: int = 3
    minprec: float = 0.5
    noise: float = 0.3
    noise_mode: str = "fraction"
    theory_construction: str = "global"
    rng_seed: int = 0

    def __post_init__(self):
        if self.beam_width < 1 or self.sample_size < 1 or self.minpos < 1:
            raise ConfigError("beam_width, sample_size and minpos must be >= 1")
        if self.depth_i < 1 or self.recall_cap < 1:
            raise ConfigError("depth_i and recall_cap must be >= 1")
        if self.evalfn not in EVALFNS:
            raise ConfigError(f"evalfn must be one of {', '.join(EVALFNS)}")
        if not 0 <= self.minprec <= 1:
            raise ConfigError("minprec must lie in [0, 1]")
        if self.noise_mode not in ("fraction", "count"):
            raise ConfigError("noise_mode must be 'fraction' or 'count'")
        if self.noise < 0 or (self.noise_mode == "fraction" and self.noise > 1):
            raise ConfigError("noise must lie in [0, 1] (or be a non-negative count)")
        if self.theory_construction not in ("incremental", "global"):
            raise ConfigError("theory_construction must be 'incremental' or 'global'")

    @property
    def saturation(self) -> SaturationParams:
        return SaturationParams(self.depth_i, self.recall_cap)

    def replace(self, **changes) -> "LearnParams":
        values = asdict(self)
        values.update(changes)
        return LearnParams(**values)

    def format(self) -> str:
        return " ".join(f"{f.name}={getattr(self, f.name)}" for f in fields(self))

    @classmethod
    def from_strings(cls, values: Dict[str, str]) -> "LearnParams":
        kwargs = {}
        for f in fields(cls):
            if f.name not in values:
                continue
            raw = values[f.name]
            default = f.default
            try:
                if isinstance(default, bool):
                    kwargs[f.name] = raw.lower() in ("1", "true", "yes")
                elif isinstance(default, int):
                    kwargs[f.name] = int(raw)
                elif isinstance(default, float):
                    kwargs[f.name] = float(raw)
                else:
                    kwargs[f.name] = raw
            except ValueError:
                raise ConfigError(f"bad value for {f.name}: {raw!r}") from None
        return cls(**kwargs)


def score_value(pos_cov: int, neg_cov: int, evalfn: str) -> Number:
    if evalfn == "coverage":
        return pos_cov - neg_cov
    if evalfn == "precision":
        total = pos_cov + neg_cov
        return Fraction(pos_cov, total) if total else Fraction(0)
    if evalfn == "laplace":
        return Fraction(pos_cov + 1, pos_cov + neg_cov + 2)
    raise ConfigError(f"unknown evalfn {evalfn!r}")


@dataclass(frozen=True)
class ScoredClause:
    clause: Clause
    pos_cov: int
    neg_cov: int
    score: Number

    @property
    def precision(self) -> Fraction:
        total = self.pos_cov + self.neg_cov
        return Fraction(self.pos_cov, total) if total else Fraction(0)

    @property
    def laplace(self) -> Fraction:
        return Fraction(self.pos_cov + 1, self.pos_cov + self.neg_cov + 2)


@dataclass
class Theory:
    rules: List[ScoredClause]
    params_used: LearnParams
    provenance: List[Optional[Literal]] = field(default_factory=list)

    def __len__(self):
        return len(self.rules)

    def format(self) -> str:
        lines = ["% relex theory", f"% params: {self.params_used.format()}"]
        for i, sc in enumerate(self.rules):
            seed = self.provenance[i] if i < len(self.provenance) else None
            lines.append(sc.clause.format())
            lines.append(f"% pos={sc.pos_cov} neg={sc.neg_cov} score={_fmt_score(sc.score)} "
                         f"seed={seed if seed is not None else '-'}")
        return "\n".join(lines) + "\n"


def _fmt_score(s: Number) -> str:
    if isinstance(s, int) or (isinstance(s, Fraction) and s.denominator == 1):
        return str(int(s))
    return f"{float(s):.6f}"


def parse_theory(text: str, source=None) -> Theory:
    params = LearnParams()
    rules: List[ScoredClause] = []
    provenance: List[Optional[Literal]] = []
    pending: Optional[Clause] = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("%"):
            body = line[1:].strip()
            if body.startswith("params:"):
                pairs = dict(item.split("=", 1) for item in body[len("params:"):].split())
                params = LearnParams.from_strings(pairs)
            elif body.startswith("pos="):
                if pending is None:
                    raise ParseError("rule statistics without a rule", source, lineno)
                stats = dict(item.split("=", 1) for item in body.split())
                try:
                    p, n = int(stats["pos"]), int(stats["neg"])
                except (KeyError, ValueError):
                    raise ParseError("malformed rule statistics", source, lineno) from None
                rules.append(ScoredClause(pending, p, n, score_value(p, n, params.evalfn)))
                seed = stats.get("seed", "-")
                provenance.append(None if seed == "-" else parse_literal(seed))
                pending = None
            continue
        if pending is not None:
            raise ParseError("rule without statistics line", source, lineno - 1)
        try:
            pending = parse_clause(line)
        except ParseError as exc:
            raise ParseError(str(exc), source, lineno) from None
    if pending is not None:
        raise ParseError("rule without statistics line", source)
    return Theory(rules, params, provenance)


class CoverageCache:
    """Memoised coverage of clauses over fixed positive/negative lists.

    Coverage is antimonotone in the body: deleting literals can only add
    covered examples.  Callers pass a ``parent`` clause whose body is a
    superset to skip examples already known to be covered.
    """

    def __init__(self, kb: KnowledgeBase, pos: Sequence[Literal], neg: Sequence[Literal],
                 bounds: SolveBounds = DEFAULT_BOUNDS):
        self.kb = kb
        self.pos = list(pos)
        self.neg = list(neg)
        self.bounds = bounds
        self._cache: Dict[Clause, Tuple[frozenset, frozenset]] = {}
        self.reduced: Dict[Clause, Clause] = {}
        self.generalised: Dict[Tuple[Clause, int], Clause] = {}

    def armg(self, clause: Clause, i: int, modes: ModeSet) -> Clause:
        key = (clause, i)
        out = self.generalised.get(key)
        if out is None:
            out = self.generalised[key] = armg(clause, self.pos[i], self.kb, modes, self.bounds)
        return out

    def _covered(self, clause: Clause, examples: Sequence[Literal], skip: frozenset) -> frozenset:
        out = set(skip)
        for i, e in enumerate(examples):
            if i in skip:
                continue
            theta = unify(clause.head, e)
            if theta is not None and provable(clause.body, self.kb, theta, self.bounds):
                out.add(i)
        return frozenset(out)

    def coverage(self, clause: Clause, parent: Optional[Clause] = None) -> Tuple[frozenset, frozenset]:
        hit = self._cache.get(clause)
        if hit is not None:
            return hit
        skip_p = skip_n = frozenset()
        if parent is not None and parent in self._cache:
            skip_p, skip_n = self._cache[parent]
        result = (self._covered(clause, self.pos, skip_p), self._covered(clause, self.neg, skip_n))
        self._cache[clause] = result
        return result

    def scored(self, clause: Clause, evalfn: str, pos_subset: Optional[frozenset] = None,
               parent: Optional[Clause] = None) -> ScoredClause:
        p, n = self.coverage(clause, parent)
        pc = len(p if pos_subset is None else p & pos_subset)
        return ScoredClause(clause, pc, len(n), score_value(pc, len(n), evalfn))


def _check_head(c: Clause, e: Literal):
    if c.head.key != e.key:
        raise DataError(f"example {e} does not match clause head {c.head.predicate}/{c.head.arity}")


def armg(c: Clause, e: Literal, kb: KnowledgeBase, modes: ModeSet,
         bounds: SolveBounds = DEFAULT_BOUNDS) -> Clause:
    """Asymmetric relative minimal generalisation of ``c`` covering ``e``.

    Repeatedly drops the first body literal at which the body prefix stops
    having a solution for ``e`` and then any later literal left unlinked.
    Computed in one left-to-right pass that keeps every partial solution of
    the literals kept so far.
    """
    _check_head(c, e)
    theta = unify(c.head, e)
    if theta is None:
        raise DataError(f"example {e} does not unify with {c.head}")
    try:
        return _armg_join(c, theta, kb, modes, bounds)
    except _TooMany:
        return _armg_prefix(c, theta, kb, modes, bounds)


class _TooMany(Exception):
    pass


ARMG_STATE_CAP = 20_000


_ARMG_PLANS: Dict[int, tuple] = {}


def _armg_plan(c: Clause, modes: ModeSet):
    """Per-clause tables for the join: variable slots, linkedness options and live slots."""
    hit = _ARMG_PLANS.get(id(c))
    if hit is not None and hit[0] is c:
        return hit[1]
    slots: Dict[Var, int] = {}
    for v in c.variables():
        slots[v] = len(slots)
    last = [-1] * len(slots)
    for i, lit in enumerate(c.body):
        for a in lit.variables():
            last[slots[a]] = i
    steps = []
    for i, lit in enumerate(c.body):
        opts = tuple(frozenset(slots[lit.args[j]] for j in ins) for ins in modes.input_positions(lit)
                     if all(type(lit.args[j]) is Var for j in ins))
        spec = tuple(slots[a] if type(a) is Var else -1 for a in lit.args)
        lvars = tuple(dict.fromkeys(slots[a] for a in lit.variables()))
        steps.append((lit, spec, opts, lvars))
    plan = (slots, last, steps, [Var(f"_S{k}") for k in range(len(slots))])
    if len(_ARMG_PLANS) > 4096:
        _ARMG_PLANS.clear()
    _ARMG_PLANS[id(c)] = (c, plan)
    return plan


def _armg_join(c: Clause, theta, kb: KnowledgeBase, modes: ModeSet, bounds: SolveBounds) -> Clause:
    slots, last, steps, pattern_vars = _armg_plan(c, modes)
    avail = {slots[v] for v in head_inputs(c.head, modes)}
    keys = tuple(slots[v] for v in slots if v in theta and last[slots[v]] >= 0)
    states = [tuple(walk(v, theta) for v in slots if v in theta and last[slots[v]] >= 0)]
    where = {s: k for k, s in enumerate(keys)}
    budget = bounds.max_steps
    kept = []
    for i, (lit, spec, opts, lvars) in enumerate(steps):
        if not any(o <= avail for o in opts):
            continue
        pred = lit.predicate
        if all(s < 0 or s in where for s in spec) and pred not in BUILTINS and not kb.rules_for(pred, len(spec)):
            # a pure check: keep the states that satisfy it
            pos = [(j, where[s]) for j, s in enumerate(spec) if s >= 0]
            base = list(lit.args)
            nxt = []
            for st in states:
                for j, k in pos:
                    base[j] = st[k]
                if (pred, tuple(base)) in kb._factset:
                    nxt.append(st)
            budget -= len(states)
            if budget < 0:
                raise _TooMany
            if nxt:
                states = nxt
                avail.update(lvars)
                kept.append(lit)
            continue
        new_keys = [s for s in keys if last[s] > i]
        new_keys += [s for s in lvars if last[s] > i and s not in where]
        # each kept slot comes either from the old state or from a matched row
        source = [(True, where[s]) if s in where else (False, spec.index(s)) for s in new_keys]
        seen = set()
        nxt = []
        for st in states:
            args = tuple(a if s < 0 else (st[where[s]] if s in where else pattern_vars[s])
                         for a, s in zip(lit.args, spec))
            if pred in BUILTINS:
                x, y = args
                if type(x) is not int or type(y) is not int:
                    raise BuiltinError(f"comparison {lit} called with non-integer argument {x!r}, {y!r}")
                rows = [args] if _compare(pred, x, y) else []
            else:
                rows = kb.matches(pred, args, bounds)
            budget -= len(rows) + 1
            if budget < 0:
                raise _TooMany
            for row in rows:
                key = tuple(st[k] if old else row[k] for old, k in source)
                if key in seen:
                    continue
                seen.add(key)
                nxt.append(key)
                if len(nxt) > ARMG_STATE_CAP:
                    raise _TooMany
        if not nxt:
            continue
        states = nxt
        keys = tuple(new_keys)
        where = {s: k for k, s in enumerate(keys)}
        avail.update(lvars)
        kept.append(lit)
    return canonical(Clause(c.head, tuple(kept)))


def _compare(op: str, x: int, y: int) -> bool:
    return (op == "<" and x < y) or (op == "=<" and x <= y) or (op == ">" and x > y) or (op == ">=" and x >= y)


def _armg_prefix(c: Clause, theta, kb: KnowledgeBase, modes: ModeSet, bounds: SolveBounds) -> Clause:
    body = list(c.body)
    k = 0
    while True:
        k = satisfiable_prefix(body, kb, theta, bounds, known=k)
        if k >= len(body):
            break
        keep = [True] * len(body)
        keep[k] = False
        mask = linked_mask(c.head, body, modes, keep)
        body = [b for i, b in enumerate(body) if i < k or (i > k and mask[i])]
    return canonical(Clause(c.head, tuple(body)))


def canonical(c: Clause) -> Clause:
    """Rename variables to A, B, ... in order of first occurrence."""
    names = {v: Var(n) for v, n in c.variable_names().items()}
    ren = lambda lit: Literal(lit.predicate, tuple(names.get(a, a) if type(a) is Var else a for a in lit.args))
    return Clause(ren(c.head), tuple(ren(b) for b in c.body))


def clause_score(c: Clause, pos: Sequence[Literal], neg: Sequence[Literal], kb: KnowledgeBase,
                 evalfn: str = "coverage", bounds: SolveBounds = DEFAULT_BOUNDS) -> ScoredClause:
    p, n = CoverageCache(kb, pos, neg, bounds).coverage(c)
    return ScoredClause(c, len(p), len(n), score_value(len(p), len(n), evalfn))


def is_acceptable(sc: ScoredClause, p: LearnParams) -> bool:
    total = sc.pos_cov + sc.neg_cov
    if sc.score <= 0 or sc.pos_cov < p.minpos or total == 0:
        return False
    if Fraction(sc.pos_cov, total) < Fraction(p.minprec).limit_denominator(10**9):
        return False
    if p.noise_mode == "count":
        return sc.neg_cov <= p.noise
    return sc.neg_cov <= Fraction(p.noise).limit_denominator(10**9) * total


def _reduce(c: Clause, cache: CoverageCache, modes: ModeSet) -> Clause:
    done = cache.reduced.get(c)
    if done is None:
        done = cache.reduced[c] = _reduce_uncached(c, cache, modes)
    return done


def _reduce_uncached(c: Clause, cache: CoverageCache, modes: ModeSet) -> Clause:
    kb, bounds = cache.kb, cache.bounds
    neg_base = cache.coverage(c)[1]
    body = list(c.body)
    # for every uncovered negative, the length of the longest satisfiable body prefix;
    # deleting only literals beyond it cannot make that negative covered
    theta, block = {}, {}
    for i, e in enumerate(cache.neg):
        if i in neg_base:
            continue
        t = unify(c.head, e)
        if t is not None:
            theta[i] = t
            block[i] = satisfiable_prefix(body, kb, t, bounds)
    order = list(block)
    changed = True
    while changed:
        changed = False
        j = len(body) - 1
        while j >= 0:
            keep = [True] * len(body)
            keep[j] = False
            mask = linked_mask(c.head, body, modes, keep)
            cand = [b for b, m in zip(body, mask) if m]
            updates = {}
            for pos, i in enumerate(order):
                if block[i] < j:
                    continue
                k = satisfiable_prefix(cand, kb, theta[i], bounds, known=j)
                if k == len(cand):
                    # this negative blocked the deletion; try it first next time
                    order.insert(0, order.pop(pos))
                    updates = None
                    break
                updates[i] = k
            if updates is not None:
                block.update(updates)
                body = cand
                changed = True
            j -= 1
    return canonical(Clause(c.head, tuple(body)))


def negative_based_reduction(c: Clause, pos: Sequence[Literal], neg: Sequence[Literal], kb: KnowledgeBase,
                             modes: ModeSet, bounds: SolveBounds = DEFAULT_BOUNDS) -> Clause:
    """Drop body literals whose removal leaves negative coverage unchanged.

    Backward passes over the body; each tentative deletion also removes the
    literals it leaves unlinked.  Passes repeat until one commits nothing, so
    the result is 1-minimal.
    """
    return _reduce(c, CoverageCache(kb, pos, neg, bounds), modes)


def _beam_key(sc: ScoredClause):
    return (-sc.score, -sc.pos_cov, len(sc.clause.body), sc.clause.format())


def _best_armg(seed_idx: int, pool: List[int], cache: CoverageCache, modes: ModeSet,
               p: LearnParams, rng: random.Random) -> ScoredClause:
    pos_subset = frozenset(pool)
    bottom = bottom_clause(cache.pos[seed_idx], cache.kb, modes, p.saturation, cache.bounds)
    best = cache.scored(bottom, p.evalfn, pos_subset)
    beam = [best]
    while True:
        uncovered = [i for i in pool if any(i not in cache.coverage(b.clause)[0] for b in beam)]
        if not uncovered:
            break
        sample = rng.sample(uncovered, min(p.sample_size, len(uncovered)))
        candidates: Dict[Clause, ScoredClause] = {}
        for b in beam:
            covered = cache.coverage(b.clause)[0]
            for i in sample:
                if i in covered:
                    cand = b.clause
                else:
                    cand = cache.armg(b.clause, i, modes)
                if cand not in candidates:
                    candidates[cand] = cache.scored(cand, p.evalfn, pos_subset, parent=b.clause)
        beam = sorted(candidates.values(), key=_beam_key)[: p.beam_width]
        if beam[0].score <= best.score:
            break
        best = beam[0]
    return best


def best_armg(seed: Literal, pos: Sequence[Literal], neg: Sequence[Literal], kb: KnowledgeBase,
              modes: ModeSet, p: LearnParams, bounds: SolveBounds = DEFAULT_BOUNDS,
              rng: Optional[random.Random] = None) -> ScoredClause:
    if not pos:
        raise DataError("best_armg needs at least one positive example")
    pos = list(pos)
    if seed not in pos:
        raise DataError(f"seed {seed} is not among the positive examples")
    cache = CoverageCache(kb, pos, neg, bounds)
    rng = rng if rng is not None else random.Random(p.rng_seed)
    return _best_armg(pos.index(seed), list(range(len(pos))), cache, modes, p, rng)


def _candidate(seed_idx: int, pool: List[int], cache: CoverageCache, modes: ModeSet,
               p: LearnParams, rng: random.Random) -> Clause:
    found = _best_armg(seed_idx, pool, cache, modes, p, rng)
    return _reduce(found.clause, cache, modes)


def learn(pos: Sequence[Literal], neg: Sequence[Literal], kb: KnowledgeBase, modes: ModeSet,
          p: LearnParams = LearnParams(), bounds: SolveBounds = DEFAULT_BOUNDS) -> Theory:
    """Covering loop producing a theory of acceptable rules.

    ``incremental`` follows the classic seen-marking loop over uncovered
    positives.  ``global`` first builds one reduced candidate per positive
    seed and then picks rules by greedy set cover.
    """
    pos = list(pos)
    if not pos:
        raise DataError("learning needs at least one positive example")
    if modes.head.key != pos[0].key:
        raise DataError(f"head mode {modes.head.predicate}/{modes.head.arity} does not match examples")
    cache = CoverageCache(kb, pos, neg, bounds)
    rng = random.Random(p.rng_seed)
    if p.theory_construction == "incremental":
        rules, seeds = _learn_incremental(cache, modes, p, rng)
    else:
        rules, seeds = _learn_global(cache, modes, p, rng)
    for sc in rules:
        if not is_well_formed(sc.clause, modes) or not is_acceptable(sc, p):
            raise InvariantError(f"learned rule violates its constraints: {sc.clause}")
    return Theory(rules, p, [pos[i] for i in seeds])


def _learn_incremental(cache: CoverageCache, modes: ModeSet, p: LearnParams, rng: random.Random):
    remaining = list(range(len(cache.pos)))
    seen = set()
    rules, seeds = [], []
    while True:
        unseen = [i for i in remaining if i not in seen]
        if not unseen:
            break
        seed = unseen[0]
        seen.add(seed)
        clause = _candidate(seed, remaining, cache, modes, p, rng)
        local = cache.scored(clause, p.evalfn, frozenset(remaining))
        if not is_acceptable(local, p):
            log.debug("rejected candidate from seed %d: pos=%d neg=%d", seed, local.pos_cov, local.neg_cov)
            continue
        rules.append(cache.scored(clause, p.evalfn))
        seeds.append(seed)
        covered = cache.coverage(clause)[0]
        remaining = [i for i in remaining if i not in covered]
        log.info("rule %d covers %d positives, %d remain", len(rules), len(covered), len(remaining))
    return rules, seeds


def _learn_global(cache: CoverageCache, modes: ModeSet, p: LearnParams, rng: random.Random):
    pool = list(range(len(cache.pos)))
    candidates: Dict[Clause, Tuple[ScoredClause, int]] = {}
    for seed in pool:
        clause = _candidate(seed, pool, cache, modes, p, rng)
        sc = cache.scored(clause, p.evalfn)
        if is_acceptable(sc, p) and clause not in candidates:
            candidates[clause] = (sc, seed)
    uncovered = set(pool)
    rules, seeds = [], []
    while candidates:
        best = None
        for clause, (sc, seed) in candidates.items():
            newly = cache.coverage(clause)[0] & uncovered
            if len(newly) < p.minpos:
                continue
            gain = score_value(len(newly), sc.neg_cov, p.evalfn)
            if gain <= 0:
                continue
            key = (-gain, -sc.pos_cov, len(clause.body), clause.format())
            if best is None or key < best[0]:
                best = (key, clause)
        if best is None:
            break
        clause = best[1]
        sc, seed = candidates.pop(clause)
        rules.append(sc)
        seeds.append(seed)
        uncovered -= cache.coverage(clause)[0]
    return rules, seeds


def predict(theory: Theory, kb: KnowledgeBase, example: Literal, bounds: SolveBounds = DEFAULT_BOUNDS) -> bool:
    """An example is positive iff some rule of the theory covers it."""
    for sc in theory.rules:
        theta = unify(sc.clause.head, example)
        if theta is not None and provable(sc.clause.body, kb, theta, bounds):
            return True
    return False
