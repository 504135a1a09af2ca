"""Ground fact base and the bounded depth-first resolution engine."""
from __future__ import annotations

import logging
from collections import defaultdict
from dataclasses import dataclass
from typing import Dict, Iterable, Iterator, List, Optional, Sequence, Tuple

from ..errors import DataError, ParseError
from .syntax import read_clauses
from .terms import BUILTINS, Clause, Literal, Substitution, Var, walk

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SolveBounds:
    max_depth: int = 12
    max_solutions: int = 500
    max_steps: int = 1_000_000

    def __post_init__(self):
        for name in ("max_depth", "max_solutions", "max_steps"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")


DEFAULT_BOUNDS = SolveBounds()


class BuiltinError(DataError):
    """A comparison builtin was called on a non-integer or unbound argument."""


class KnowledgeBase:
    """Immutable ground fact base plus non-recursive intensional clauses.

    Facts are indexed by ``(predicate, arity)`` and by the value found at
    each argument position; buckets keep insertion order so every lookup
    enumerates matching facts in fact-index order.
    """

    def __init__(self, facts: Iterable[Literal] = (), intensional: Iterable[Clause] = ()):
        self._facts: Dict[Tuple[str, int], List[tuple]] = {}
        self._index: Dict[Tuple[str, int, int], Dict[object, List[tuple]]] = {}
        self._factset = set()
        self._arity: Dict[str, int] = {}
        self._order: List[Literal] = []
        for fact in facts:
            if not fact.is_ground():
                raise DataError(f"non-ground fact {fact}")
            self._check_arity(fact)
            if (fact.predicate, fact.args) in self._factset:
                continue
            self._factset.add((fact.predicate, fact.args))
            self._order.append(fact)
            self._facts.setdefault(fact.key, []).append(fact.args)
        for (pred, arity), rows in self._facts.items():
            for pos in range(arity):
                idx = defaultdict(list)
                for row in rows:
                    idx[row[pos]].append(row)
                self._index[(pred, arity, pos)] = dict(idx)
        self._rules: Dict[Tuple[str, int], List[Clause]] = {}
        self._intensional: List[Clause] = []
        for clause in intensional:
            self._check_arity(clause.head)
            for lit in clause.body:
                if lit.predicate not in BUILTINS:
                    self._check_arity(lit)
            self._rules.setdefault(clause.head.key, []).append(clause)
            self._intensional.append(clause)
        self._check_acyclic()
        self._memo: Dict[tuple, List[tuple]] = {}

    def _check_arity(self, lit: Literal):
        known = self._arity.setdefault(lit.predicate, lit.arity)
        if known != lit.arity:
            raise DataError(f"arity conflict: {lit.predicate}/{known} vs {lit.predicate}/{lit.arity}")

    def _check_acyclic(self):
        deps = {key: {b.key for c in cs for b in c.body if b.predicate not in BUILTINS}
                for key, cs in self._rules.items()}
        state = {}

        def visit(key, path):
            if state.get(key) == 2:
                return
            if state.get(key) == 1:
                raise DataError("recursive intensional clauses: " + " -> ".join(f"{p}/{a}" for p, a in path + [key]))
            state[key] = 1
            for dep in sorted(deps.get(key, ())):
                visit(dep, path + [key])
            state[key] = 2

        for key in sorted(deps):
            visit(key, [])

    @property
    def facts(self) -> List[Literal]:
        return list(self._order)

    @property
    def intensional(self) -> List[Clause]:
        return list(self._intensional)

    def __len__(self):
        return len(self._order)

    def __contains__(self, fact: Literal) -> bool:
        return (fact.predicate, fact.args) in self._factset

    def facts_for(self, predicate: str, arity: int) -> List[tuple]:
        return self._facts.get((predicate, arity), [])

    def rules_for(self, predicate: str, arity: int) -> List[Clause]:
        return self._rules.get((predicate, arity), [])

    def lookup(self, predicate: str, args: Sequence) -> List[tuple]:
        """Candidate fact rows for a goal whose args are already dereferenced."""
        arity = len(args)
        best = None
        for pos, a in enumerate(args):
            if type(a) is not Var:
                bucket = self._index.get((predicate, arity, pos))
                if bucket is None:
                    return []
                rows = bucket.get(a)
                if rows is None:
                    return []
                if best is None or len(rows) < len(best):
                    best = rows
        if best is None:
            return self._facts.get((predicate, arity), [])
        return best

    def matches(self, predicate: str, args: Sequence, bounds: "SolveBounds") -> List[tuple]:
        """Ground argument rows that unify with ``predicate(args)``.

        Facts come first in fact-index order.  Answers derived through
        intensional clauses are memoised per call pattern, which is sound
        because the knowledge base never changes.
        """
        args = tuple(args)
        if (predicate, len(args)) in self._rules:
            names: Dict[Var, Var] = {}
            pattern = tuple(names.setdefault(a, Var(f"_M{len(names)}")) if type(a) is Var else a for a in args)
            key = (predicate, pattern, bounds)
            rows = self._memo.get(key)
            if rows is None:
                answers = solve([Literal(predicate, pattern)], self, None, bounds)
                rows = [tuple(ans[a] if type(a) is Var else a for a in pattern) for ans in answers]
                self._memo[key] = rows
            return rows
        rows = self.lookup(predicate, args)
        free: Dict[Var, int] = {}
        checks = []
        repeats = []
        for i, a in enumerate(args):
            if type(a) is not Var:
                checks.append((i, a))
            elif a in free:
                repeats.append((i, free[a]))
            else:
                free[a] = i
        if len(checks) <= 1 and not repeats:
            return rows
        return [r for r in rows if all(r[i] == a for i, a in checks) and all(r[i] == r[j] for i, j in repeats)]

    def constants(self) -> list:
        seen = {}
        for fact in self._order:
            for a in fact.args:
                seen.setdefault(a, None)
        return list(seen)

    def with_facts(self, facts: Iterable[Literal]) -> "KnowledgeBase":
        return KnowledgeBase(list(self._order) + list(facts), self._intensional)


def parse_fact_base(text: str, source=None) -> KnowledgeBase:
    """Read a fact file.  Rules (``:-``) become intensional clauses."""
    facts = []
    rules = []
    arity = {}
    for line, clause in read_clauses(text, source):
        for lit in (clause.head,) + clause.body:
            if lit.predicate in BUILTINS:
                continue
            known = arity.setdefault(lit.predicate, lit.arity)
            if known != lit.arity:
                raise ParseError(
                    f"arity conflict {lit.predicate}/{known} vs {lit.predicate}/{lit.arity}", source, line)
        if clause.body:
            rules.append(clause)
        elif not clause.head.is_ground():
            raise ParseError(f"non-ground fact {clause.head}", source, line)
        else:
            facts.append(clause.head)
    return KnowledgeBase(facts, rules)


def format_fact_base(kb: KnowledgeBase) -> str:
    lines = [Clause(f).format() for f in kb.facts]
    lines += [c.format() for c in kb.intensional]
    return "".join(line + "\n" for line in lines)


class Solutions(list):
    """Answer substitutions; ``truncated`` is set when a bound cut the search."""

    def __init__(self, items=(), truncated=False, steps=0):
        super().__init__(items)
        self.truncated = truncated
        self.steps = steps


class _OutOfSteps(Exception):
    pass


class _Search:
    """One bounded depth-first proof search over a knowledge base."""

    def __init__(self, kb: KnowledgeBase, bounds: SolveBounds):
        self.kb = kb
        self.bounds = bounds
        self.steps = 0
        self.truncated = False
        self.renames = 0

    def goal(self, lit: Literal, subst: Substitution, depth: int) -> Iterator[Substitution]:
        pred = lit.predicate
        args = tuple(walk(a, subst) if type(a) is Var else a for a in lit.args)
        if pred in BUILTINS and len(args) == 2:
            self.tick()
            x, y = args
            if type(x) is not int or type(y) is not int:
                raise BuiltinError(f"comparison {lit} called with non-integer argument {x!r}, {y!r}")
            if ((pred == "<" and x < y) or (pred == "=<" and x <= y)
                    or (pred == ">" and x > y) or (pred == ">=" and x >= y)):
                yield subst
            return
        kb = self.kb
        rows = kb.lookup(pred, args)
        if rows:
            free = []
            bound = []
            for i, a in enumerate(args):
                (free if type(a) is Var else bound).append((i, a))
            if not free:
                for row in rows:
                    self.tick()
                    if row == args:
                        yield subst
                        break
            else:
                for row in rows:
                    self.tick()
                    ok = True
                    for i, a in bound:
                        if row[i] != a:
                            ok = False
                            break
                    if not ok:
                        continue
                    s = dict(subst)
                    for i, v in free:
                        prev = s.get(v)
                        if prev is None:
                            s[v] = row[i]
                        elif prev != row[i]:
                            ok = False
                            break
                    if ok:
                        yield s
        rules = kb.rules_for(pred, len(args))
        if not rules:
            return
        if depth >= self.bounds.max_depth:
            self.truncated = True
            return
        for clause in rules:
            self.tick()
            self.renames += 1
            suffix = f"#{self.renames}"
            ren = {v: Var(v.name + suffix) for v in clause.variables()}
            head_args = [ren.get(a, a) if type(a) is Var else a for a in clause.head.args]
            s = dict(subst)
            ok = True
            for g, h in zip(args, head_args):
                g = walk(g, s)
                h = walk(h, s)
                if g == h:
                    continue
                if type(h) is Var:
                    s[h] = g
                elif type(g) is Var:
                    s[g] = h
                else:
                    ok = False
                    break
            if not ok:
                continue
            body = [Literal(b.predicate, tuple(ren.get(a, a) if type(a) is Var else a for a in b.args))
                    for b in clause.body]
            yield from self.conjunction(body, s, depth + 1)

    def tick(self):
        self.steps += 1
        if self.steps > self.bounds.max_steps:
            self.steps = self.bounds.max_steps
            self.truncated = True
            raise _OutOfSteps

    def conjunction(self, goals: Sequence[Literal], subst: Substitution, depth: int,
                    progress: Optional[list] = None) -> Iterator[Substitution]:
        n = len(goals)
        if n == 0:
            yield subst
            return
        stack = [self.goal(goals[0], subst, depth)]
        while stack:
            s = next(stack[-1], None)
            if s is None:
                stack.pop()
                continue
            k = len(stack)
            if progress is not None and k > progress[0]:
                progress[0] = k
            if k == n:
                yield s
            else:
                stack.append(self.goal(goals[k], s, depth))


def _project(subst: Substitution, variables) -> Substitution:
    return {v: walk(v, subst) for v in variables}


def _query_vars(goals: Sequence[Literal], theta: Substitution) -> list:
    seen = {}
    for v in theta:
        seen.setdefault(v, None)
    for g in goals:
        for v in g.variables():
            seen.setdefault(v, None)
    return list(seen)


def solve(goals: Sequence[Literal], kb: KnowledgeBase, theta: Optional[Substitution] = None,
          bounds: SolveBounds = DEFAULT_BOUNDS) -> Solutions:
    """All answer substitutions for a conjunctive query, in deterministic order.

    Order is depth-first: goals left to right, candidate facts in fact-index
    order, then intensional clauses in definition order.  Answers are
    projected onto the query's variables and deduplicated.  Hitting a bound
    truncates the result and sets ``truncated``.
    """
    theta = dict(theta or {})
    qvars = _query_vars(goals, theta)
    search = _Search(kb, bounds)
    out = []
    seen = set()
    try:
        for s in search.conjunction(list(goals), theta, 0):
            ans = _project(s, qvars)
            key = tuple(ans[v] for v in qvars)
            if key in seen:
                continue
            seen.add(key)
            out.append(ans)
            if len(out) >= bounds.max_solutions:
                search.truncated = True
                break
    except _OutOfSteps:
        pass
    return Solutions(out, truncated=search.truncated, steps=search.steps)


def _static_order(goals: Tuple[Literal, ...], bound: frozenset) -> Tuple[Literal, ...]:
    """Reorder goals so that each one is called with as many bound arguments as possible.

    Greedy: repeatedly take the goal with the fewest unbound variables
    (comparisons only once fully bound, fully bound goals first), ties
    broken by original position.
    """
    known = set(bound)
    remaining = list(goals)
    out = []
    while remaining:
        best, best_key = 0, None
        for i, g in enumerate(remaining):
            free = sum(1 for a in g.args if type(a) is Var and a not in known)
            if g.predicate in BUILTINS:
                if free:
                    continue
                key = (-1, i)
            else:
                key = (free, i)
            if best_key is None or key < best_key:
                best, best_key = i, key
                if key[0] <= 0:
                    break
        if best_key is None:
            out.extend(remaining)
            break
        g = remaining.pop(best)
        out.append(g)
        known.update(a for a in g.args if type(a) is Var)
    return tuple(out)


_ORDER_CACHE: Dict[Tuple[Tuple[Literal, ...], frozenset], Tuple[Literal, ...]] = {}


def _ordered(goals: Sequence[Literal], theta: Substitution) -> Tuple[Literal, ...]:
    goals = tuple(goals)
    key = (goals, frozenset(theta))
    order = _ORDER_CACHE.get(key)
    if order is None:
        if len(_ORDER_CACHE) > 50_000:
            _ORDER_CACHE.clear()
        order = _ORDER_CACHE[key] = _static_order(goals, key[1])
    return order


class _Fallback(Exception):
    pass


_CHECK, _ENUM, _RULE, _CMP = range(4)


def _compile(goals: Tuple[Literal, ...], bound: frozenset, kb: "KnowledgeBase"):
    """Turn an ordered conjunction into steps over numbered variable slots.

    Returns ``(slots, steps)`` or ``None`` when some goal cannot be planned
    statically (a comparison on a variable that is not yet bound).
    """
    slot: Dict[Var, int] = {}
    for v in bound:
        slot[v] = len(slot)
    known = set(bound)
    steps = []
    for g in goals:
        spec = []
        fresh = []
        for a in g.args:
            if type(a) is not Var:
                spec.append((0, a))
            elif a in known:
                spec.append((1, slot[a]))
            elif a in fresh:
                spec.append((2, slot[a]))
            else:
                slot[a] = len(slot)
                fresh.append(a)
                spec.append((3, slot[a]))
        if g.predicate in BUILTINS and len(g.args) == 2:
            if fresh:
                return None
            steps.append((_CMP, g.predicate, tuple(spec), g))
        elif kb.rules_for(g.predicate, len(g.args)):
            steps.append((_RULE, g.predicate, tuple(spec), g))
        elif not fresh:
            steps.append((_CHECK, g.predicate, tuple(spec), g))
        else:
            steps.append((_ENUM, g.predicate, tuple(spec), g))
        known.update(fresh)
    return slot, steps


_PLAN_CACHE: Dict[tuple, object] = {}


class _PlanRunner:
    def __init__(self, kb: "KnowledgeBase", bounds: SolveBounds):
        self.kb = kb
        self.bounds = bounds
        self.steps_left = bounds.max_steps

    def tick(self, n: int = 1):
        self.steps_left -= n
        if self.steps_left < 0:
            raise _OutOfSteps

    def run(self, steps, i: int, vals: list) -> bool:
        if i == len(steps):
            return True
        kind, pred, spec, lit = steps[i]
        kb = self.kb
        if kind == _CHECK:
            self.tick()
            args = tuple(x if m == 0 else vals[x] for m, x in spec)
            return (pred, args) in kb._factset and self.run(steps, i + 1, vals)
        if kind == _CMP:
            self.tick()
            x, y = (x if m == 0 else vals[x] for m, x in spec)
            if type(x) is not int or type(y) is not int:
                raise BuiltinError(f"comparison {lit} called with non-integer argument {x!r}, {y!r}")
            ok = ((pred == "<" and x < y) or (pred == "=<" and x <= y)
                  or (pred == ">" and x > y) or (pred == ">=" and x >= y))
            return ok and self.run(steps, i + 1, vals)
        if kind == _ENUM:
            arity = len(spec)
            rows = None
            bound = []
            for pos, (m, x) in enumerate(spec):
                if m == 0 or m == 1:
                    v = x if m == 0 else vals[x]
                    bound.append((pos, v))
                    bucket = kb._index.get((pred, arity, pos))
                    cand = bucket.get(v) if bucket is not None else None
                    if not cand:
                        return False
                    if rows is None or len(cand) < len(rows):
                        rows = cand
            if rows is None:
                rows = kb._facts.get((pred, arity), ())
            for row in rows:
                self.tick()
                ok = True
                for pos, v in bound:
                    if row[pos] != v:
                        ok = False
                        break
                if not ok:
                    continue
                for pos, (m, x) in enumerate(spec):
                    if m == 3:
                        vals[x] = row[pos]
                    elif m == 2 and vals[x] != row[pos]:
                        ok = False
                        break
                if ok and self.run(steps, i + 1, vals):
                    return True
            return False
        # intensional goal: memoised answers from the knowledge base
        args = tuple(x if m == 0 else vals[x] if m == 1 else Var(f"_S{x}") for m, x in spec)
        for row in kb.matches(pred, args, self.bounds):
            self.tick()
            ok = True
            for pos, (m, x) in enumerate(spec):
                if m == 3:
                    vals[x] = row[pos]
                elif m == 2 and vals[x] != row[pos]:
                    ok = False
                    break
            if ok and self.run(steps, i + 1, vals):
                return True
        return False


def _plan(goals: Sequence[Literal], theta: Substitution, kb: "KnowledgeBase"):
    goals = tuple(goals)
    key = (goals, frozenset(theta), id(kb))
    plan = _PLAN_CACHE.get(key)
    if plan is None:
        if len(_PLAN_CACHE) > 50_000:
            _PLAN_CACHE.clear()
        plan = _PLAN_CACHE[key] = (_compile(_static_order(goals, key[1]), key[1], kb), kb)
    return plan[0]


def provable(goals: Sequence[Literal], kb: KnowledgeBase, theta: Optional[Substitution] = None,
             bounds: SolveBounds = DEFAULT_BOUNDS) -> bool:
    """Whether the conjunction has at least one solution.

    Goals are proved in a boundness-driven order rather than left to right;
    for a non-recursive fact base this changes only the speed.  Exhausting the
    step bound counts as failure.
    """
    theta = dict(theta or {})
    plan = _plan(goals, theta, kb)
    if plan is not None:
        slots, steps = plan
        vals = [None] * len(slots)
        for v, i in slots.items():
            if v in theta:
                vals[i] = walk(v, theta)
        if not any(type(x) is Var for x in vals[: len(theta)]):
            try:
                return _PlanRunner(kb, bounds).run(steps, 0, vals)
            except _OutOfSteps:
                log.debug("step bound exhausted while proving %d goals", len(goals))
                return False
            except _Fallback:
                pass
    search = _Search(kb, bounds)
    try:
        for _ in search.conjunction(_ordered(goals, theta), theta, 0):
            return True
    except _OutOfSteps:
        log.debug("step bound exhausted while proving %d goals", len(goals))
    return False


def satisfiable_prefix(goals: Sequence[Literal], kb: KnowledgeBase, theta: Optional[Substitution] = None,
                       bounds: SolveBounds = DEFAULT_BOUNDS, known: int = 0) -> int:
    """Length of the longest prefix of ``goals`` that has a solution.

    Prefix satisfiability is monotone, so a binary search over prefix
    lengths finds it.  ``known`` is a prefix length the caller already
    knows to be satisfiable.
    """
    goals = list(goals)
    if provable(goals, kb, theta, bounds):
        return len(goals)
    lo, hi = known, len(goals)  # prefix lo is satisfiable, prefix hi is not
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if provable(goals[:mid], kb, theta, bounds):
            lo = mid
        else:
            hi = mid
    return lo


def _check_example(rule: Clause, example: Literal):
    if example.key != rule.head.key:
        raise DataError(f"example {example} does not match rule head {rule.head.predicate}/{rule.head.arity}")


def covers(rule: Clause, example: Literal, kb: KnowledgeBase, bounds: SolveBounds = DEFAULT_BOUNDS) -> bool:
    from .terms import unify

    _check_example(rule, example)
    theta = unify(rule.head, example)
    if theta is None:
        return False
    return provable(rule.body, kb, theta, bounds)


def coverage_counts(rule: Clause, pos: Sequence[Literal], neg: Sequence[Literal], kb: KnowledgeBase,
                    bounds: SolveBounds = DEFAULT_BOUNDS) -> Tuple[int, int]:
    p = sum(1 for e in pos if covers(rule, e, kb, bounds))
    n = sum(1 for e in neg if covers(rule, e, kb, bounds))
    return p, n
