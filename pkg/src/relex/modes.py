"""Mode declarations, bottom-clause saturation and linkedness checks."""
from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple, Union

from .errors import ConfigError, DataError, ParseError
from .logic import Clause, Const, KnowledgeBase, Literal, SolveBounds, Var, solve
from .logic.engine import DEFAULT_BOUNDS

UNBOUNDED = "*"

_MODE_RE = re.compile(r"^:-\s*mode([hb])\s*\(\s*(\*|\d+)\s*,\s*([a-z][A-Za-z0-9_]*)\s*\((.*)\)\s*\)\s*\.\s*$")
_MARKER_RE = re.compile(r"^([+\-#])\s*([a-z][A-Za-z0-9_]*)$")


@dataclass(frozen=True)
class PlaceMarker:
    mode: str  # '+', '-' or '#'
    type: str

    def __str__(self):
        return f"{self.mode}{self.type}"


@dataclass(frozen=True)
class ModeDecl:
    kind: str  # 'head' or 'body'
    recall: Union[int, str]
    predicate: str
    markers: Tuple[PlaceMarker, ...]

    @property
    def arity(self) -> int:
        return len(self.markers)

    @property
    def key(self):
        return (self.predicate, len(self.markers))

    def positions(self, mode: str) -> List[int]:
        return [i for i, m in enumerate(self.markers) if m.mode == mode]

    def recall_limit(self, recall_cap: int) -> int:
        return recall_cap if self.recall == UNBOUNDED else int(self.recall)

    def format(self) -> str:
        inner = ", ".join(str(m) for m in self.markers)
        return f":- mode{self.kind[0]}({self.recall}, {self.predicate}({inner}))."


@dataclass(frozen=True)
class ModeSet:
    head: ModeDecl
    body: Tuple[ModeDecl, ...]
    _inputs: Dict[Literal, Tuple[Tuple[int, ...], ...]] = field(default_factory=dict, init=False,
                                                               compare=False, hash=False, repr=False)

    def input_positions(self, lit: Literal) -> Tuple[Tuple[int, ...], ...]:
        """``+`` positions of every body mode that ``lit`` matches."""
        found = self._inputs.get(lit)
        if found is None:
            found = tuple(tuple(d.positions("+")) for d in self.body if _matches(lit, d))
            self._inputs[lit] = found
        return found

    def for_relation(self, predicate: str) -> "ModeSet":
        head = ModeDecl("head", self.head.recall, predicate, self.head.markers)
        return ModeSet(head, self.body)

    def format(self) -> str:
        return "".join(m.format() + "\n" for m in (self.head,) + self.body)


@dataclass(frozen=True)
class SaturationParams:
    depth_i: int = 3
    recall_cap: int = 100

    def __post_init__(self):
        if self.depth_i < 1 or self.recall_cap < 1:
            raise ConfigError("depth_i and recall_cap must be >= 1")


def parse_mode_file(text: str, source=None) -> ModeSet:
    head = None
    body = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("%", 1)[0].strip()
        if not line:
            continue
        m = _MODE_RE.match(line)
        if m is None:
            raise ParseError(f"not a mode declaration: {line!r}", source, lineno)
        kind, recall, pred, inner = m.groups()
        markers = []
        for part in inner.split(","):
            pm = _MARKER_RE.match(part.strip())
            if pm is None:
                raise ParseError(f"unknown place marker {part.strip()!r}", source, lineno)
            markers.append(PlaceMarker(pm.group(1), pm.group(2)))
        if recall != UNBOUNDED:
            recall = int(recall)
            if recall < 1:
                raise ParseError("recall must be positive", source, lineno)
        decl = ModeDecl("head" if kind == "h" else "body", recall, pred, tuple(markers))
        if decl.kind == "head":
            if head is not None:
                raise ParseError("more than one modeh declaration", source, lineno)
            head = decl
        else:
            body.append(decl)
    if head is None:
        raise ParseError("no modeh declaration", source)
    return ModeSet(head, tuple(body))


def _check_seed(seed: Literal, modes: ModeSet):
    if seed.key != modes.head.key:
        raise DataError(f"seed {seed} does not match head mode {modes.head.predicate}/{modes.head.arity}")
    if not seed.is_ground():
        raise DataError(f"seed {seed} is not ground")


def bottom_clause(seed: Literal, kb: KnowledgeBase, modes: ModeSet,
                  sp: SaturationParams = SaturationParams(),
                  bounds: SolveBounds = DEFAULT_BOUNDS) -> Clause:
    """Most-specific clause of ``seed`` under ``modes``, saturated layer by layer.

    One variable stands for each (constant, type) pair.  Layer ``d`` only
    queries input instantiations that use at least one pair introduced in
    layer ``d - 1``; older instantiations would only reproduce literals
    already present.
    """
    _check_seed(seed, modes)
    var_of: Dict[Tuple[object, str], Var] = {}
    order: List[Tuple[object, str]] = []
    layer_of: Dict[Tuple[object, str], int] = {}

    def var_for(const, typ, layer):
        key = (const, typ)
        v = var_of.get(key)
        if v is None:
            v = var_of[key] = Var(f"V{len(var_of)}")
            order.append(key)
            layer_of[key] = layer
        return v

    head_args = []
    for marker, const in zip(modes.head.markers, seed.args):
        if marker.mode == "#":
            head_args.append(const)
            continue
        if marker.mode == "+" and Literal(marker.type, (const,)) not in kb:
            raise DataError(f"seed constant {const} has no {marker.type}/1 typing fact")
        head_args.append(var_for(const, marker.type, 0))
    head = Literal(seed.predicate, tuple(head_args))

    body: List[Literal] = []
    seen = set()
    for layer in range(1, sp.depth_i + 1):
        available = [k for k in order if layer_of[k] < layer]
        for decl in modes.body:
            ins = decl.positions("+")
            choices = [[k for k in available if k[1] == decl.markers[i].type] for i in ins]
            limit = decl.recall_limit(sp.recall_cap)
            for combo in itertools.product(*choices):
                if ins and max(layer_of[k] for k in combo) != layer - 1:
                    continue
                if not ins and layer != 1:
                    continue
                query_args = []
                qvars = {}
                for i, m in enumerate(decl.markers):
                    if m.mode == "+":
                        query_args.append(combo[ins.index(i)][0])
                    else:
                        query_args.append(qvars.setdefault(i, Var(f"_Q{i}")))
                goal = Literal(decl.predicate, tuple(query_args))
                answers = solve([goal], kb, None, SolveBounds(bounds.max_depth, limit, bounds.max_steps))
                for ans in answers:
                    lit_args = []
                    for i, m in enumerate(decl.markers):
                        if m.mode == "+":
                            lit_args.append(var_of[combo[ins.index(i)]])
                        else:
                            const = ans[qvars[i]]
                            if m.mode == "#":
                                lit_args.append(const)
                            else:
                                lit_args.append(var_for(const, m.type, layer))
                    lit = Literal(decl.predicate, tuple(lit_args))
                    if lit not in seen:
                        seen.add(lit)
                        body.append(lit)
    clause = Clause(head, tuple(body))
    names = {v: Var(n) for v, n in clause.variable_names().items()}
    return Clause(_rename(head, names), tuple(_rename(b, names) for b in body))


def _rename(lit: Literal, names) -> Literal:
    return Literal(lit.predicate, tuple(names.get(a, a) if type(a) is Var else a for a in lit.args))


def _matches(lit: Literal, decl: ModeDecl) -> bool:
    if lit.key != decl.key:
        return False
    for a, m in zip(lit.args, decl.markers):
        if (m.mode == "#") == (type(a) is Var):
            return False
    return True


def head_inputs(head: Literal, modes: ModeSet) -> set:
    return {a for a, m in zip(head.args, modes.head.markers) if m.mode == "+" and type(a) is Var}


def linked_mask(head: Literal, body: Sequence[Literal], modes: ModeSet, keep: Optional[Sequence[bool]] = None) -> List[bool]:
    """Which body literals stay linked, scanning left to right.

    A literal is linked if some matching body mode finds all of its ``+``
    variables among the head inputs and the variables of earlier linked
    literals.  Literals with ``keep[i]`` false are treated as deleted.
    """
    available = head_inputs(head, modes)
    out = []
    for i, lit in enumerate(body):
        if keep is not None and not keep[i]:
            out.append(False)
            continue
        ok = False
        for ins in modes.input_positions(lit):
            if all(lit.args[j] in available for j in ins):
                ok = True
                break
        out.append(ok)
        if ok:
            available.update(a for a in lit.args if type(a) is Var)
    return out


def is_well_formed(rule: Clause, modes: ModeSet) -> bool:
    if rule.head.key != modes.head.key:
        return False
    for a, m in zip(rule.head.args, modes.head.markers):
        if (m.mode == "#") == (type(a) is Var):
            return False
    return all(linked_mask(rule.head, rule.body, modes))


def load_default_modes() -> ModeSet:
    from importlib import resources

    text = resources.files("relex.data").joinpath("default.modes").read_text(encoding="utf-8")
    return parse_mode_file(text, "default.modes")
