"""Brute-force reference implementations used as test oracles.

None of these touch the resolution engine: they enumerate ground facts
directly, so agreement with the engine is meaningful.
"""
from __future__ import annotations

import itertools
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from relex.logic import Clause, Literal, Var
from relex.modes import ModeSet


def _facts_by_pred(facts: Sequence[Literal]) -> Dict[Tuple[str, int], List[Literal]]:
    out: Dict[Tuple[str, int], List[Literal]] = {}
    for f in facts:
        out.setdefault(f.key, [])
        if f not in out[f.key]:
            out[f.key].append(f)
    return out


def enumerate_answers(goals: Sequence[Literal], facts: Sequence[Literal], domain: Sequence) -> set:
    """Every assignment of the query variables over ``domain`` that makes all goals facts."""
    factset = set(facts)
    qvars = list(dict.fromkeys(v for g in goals for v in g.variables()))
    out = set()
    for values in itertools.product(domain, repeat=len(qvars)):
        env = dict(zip(qvars, values))
        if all(Literal(g.predicate, tuple(env.get(a, a) for a in g.args)) in factset for g in goals):
            out.add(values)
    return out


def naive_cover(body: Sequence[Literal], theta: Dict[Var, object], facts_by: Dict) -> bool:
    """Depth-first join over raw fact lists; True if the body has a solution extending ``theta``."""
    def go(i, env):
        if i == len(body):
            return True
        lit = body[i]
        for f in facts_by.get(lit.key, ()):
            new = dict(env)
            ok = True
            for a, v in zip(lit.args, f.args):
                if type(a) is Var:
                    if a in new and new[a] != v:
                        ok = False
                        break
                    new[a] = v
                elif a != v:
                    ok = False
                    break
            if ok and go(i + 1, new):
                return True
        return False

    return go(0, dict(theta))


def head_binding(head: Literal, e: Literal) -> Optional[Dict[Var, object]]:
    env: Dict[Var, object] = {}
    if head.key != e.key:
        return None
    for a, v in zip(head.args, e.args):
        if type(a) is Var:
            if a in env and env[a] != v:
                return None
            env[a] = v
        elif a != v:
            return None
    return env


def naive_covers(c: Clause, e: Literal, facts: Sequence[Literal]) -> bool:
    theta = head_binding(c.head, e)
    return theta is not None and naive_cover(c.body, theta, _facts_by_pred(facts))


def naive_linked(head: Literal, body: Sequence[Literal], modes: ModeSet) -> bool:
    """Every body literal matches a body mode whose ``+`` args are already available."""
    avail = {a for a, m in zip(head.args, modes.head.markers) if m.mode == "+" and type(a) is Var}
    for lit in body:
        ok = False
        for d in modes.body:
            if d.predicate != lit.predicate or len(d.markers) != len(lit.args):
                continue
            if any((m.mode == "#") == (type(a) is Var) for a, m in zip(lit.args, d.markers)):
                continue
            if all(a in avail for a, m in zip(lit.args, d.markers) if m.mode == "+"):
                ok = True
                break
        if not ok:
            return False
        avail.update(lit.variables())
    return True


def embeds(small: Clause, big: Clause) -> bool:
    """``small`` is a sub-multiset of ``big`` under some injective variable renaming."""
    def match(a, b, env, used):
        if a.key != b.key:
            return None
        env, used = dict(env), set(used)
        for x, y in zip(a.args, b.args):
            if (type(x) is Var) != (type(y) is Var):
                return None
            if type(x) is not Var:
                if x != y:
                    return None
            elif x in env:
                if env[x] != y:
                    return None
            elif y in used:
                return None
            else:
                env[x] = y
                used.add(y)
        return env, used

    start = match(small.head, big.head, {}, set())
    if start is None:
        return False

    def go(i, env, used, taken):
        if i == len(small.body):
            return True
        for j, b in enumerate(big.body):
            if j not in taken:
                r = match(small.body[i], b, env, used)
                if r is not None and go(i + 1, r[0], r[1], taken | {j}):
                    return True
        return False

    return go(0, *start, frozenset())


def saturate(seed: Literal, facts: Sequence[Literal], modes: ModeSet, depth_i: int, recall_cap: int) -> Clause:
    """Layered saturation by exhaustive query enumeration.

    Every layer re-queries every input instantiation (old ones included) and
    relies on duplicate removal; answers come in fact order.
    """
    by = _facts_by_pred(facts)
    var_of: Dict[tuple, Var] = {}
    layer_of: Dict[tuple, int] = {}
    order: List[tuple] = []

    def var_for(key, layer):
        if key not in var_of:
            var_of[key] = Var(f"W{len(var_of)}")
            layer_of[key] = layer
            order.append(key)
        return var_of[key]

    head_args = []
    for m, c in zip(modes.head.markers, seed.args):
        head_args.append(c if m.mode == "#" else var_for((c, m.type), 0))
    body: List[Literal] = []
    for layer in range(1, depth_i + 1):
        avail = [k for k in order if layer_of[k] < layer]
        for d in modes.body:
            ins = [i for i, m in enumerate(d.markers) if m.mode == "+"]
            limit = recall_cap if d.recall == "*" else d.recall
            choices = [[k for k in avail if k[1] == d.markers[i].type] for i in ins]
            for combo in itertools.product(*choices):
                answers = []
                for f in by.get((d.predicate, len(d.markers)), ()):
                    if all(f.args[i] == combo[n][0] for n, i in enumerate(ins)):
                        ans = tuple(f.args[i] for i in range(len(d.markers)) if i not in ins)
                        if ans not in answers:
                            answers.append(ans)
                    if len(answers) >= limit:
                        break
                for ans in answers:
                    it = iter(ans)
                    args = []
                    for i, m in enumerate(d.markers):
                        if m.mode == "+":
                            args.append(var_of[combo[ins.index(i)]])
                        else:
                            v = next(it)
                            args.append(v if m.mode == "#" else var_for((v, m.type), layer))
                    lit = Literal(d.predicate, tuple(args))
                    if lit not in body:
                        body.append(lit)
    return Clause(Literal(seed.predicate, tuple(head_args)), tuple(body))


def armg_subset(c: Clause, e: Literal, facts: Sequence[Literal], modes: ModeSet) -> Clause:
    """Among all linked body subsets covering ``e``, the one keeping the earliest literals.

    Subsets are compared by their keep/drop vectors, lexicographically with
    keep before drop, so the winner is maximal under inclusion too.
    """
    n = len(c.body)
    by = _facts_by_pred(facts)
    theta = head_binding(c.head, e)
    for mask in itertools.product((True, False), repeat=n):
        sub = [b for b, k in zip(c.body, mask) if k]
        if naive_linked(c.head, sub, modes) and naive_cover(sub, theta, by):
            return Clause(c.head, tuple(sub))
    raise AssertionError("the empty body always qualifies")


def coverage_set(c: Clause, examples: Sequence[Literal], facts: Sequence[Literal]) -> frozenset:
    by = _facts_by_pred(facts)
    out = set()
    for i, e in enumerate(examples):
        theta = head_binding(c.head, e)
        if theta is not None and naive_cover(c.body, theta, by):
            out.add(i)
    return frozenset(out)


def deletion_closure(c: Clause, j: int, modes: ModeSet) -> Clause:
    """Delete body literal ``j`` and then every later literal left unlinked."""
    kept: List[Literal] = []
    for i, lit in enumerate(c.body):
        if i == j:
            continue
        if naive_linked(c.head, kept + [lit], modes):
            kept.append(lit)
    return Clause(c.head, tuple(kept))


def pairwise_auc(scored: Sequence[Tuple[Fraction, bool]]) -> Fraction:
    pos = [s for s, g in scored if g]
    neg = [s for s, g in scored if not g]
    total = Fraction(0)
    for p in pos:
        for n in neg:
            total += 1 if p > n else Fraction(1, 2) if p == n else 0
    return total / (len(pos) * len(neg))
