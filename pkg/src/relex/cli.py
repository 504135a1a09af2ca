"""Command-line front end: ``relex <subcommand> [flags]``.

Every option can also come from a ``--config`` file of ``key = value`` lines;
command-line flags win over the file, and the file wins over built-in
defaults.  Outputs are byte-identical for identical inputs and seeds.  Wall
clock timings only ever go to the separate ``--timings`` file.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Dict, List, Optional

from .application import apply_theory, export_instances
from .bk import Thresholds, emit_bk, knowledge_base
from .corpus import Corpus, candidate_pairs, corpus_stats, corpus_to_jsonl, load_corpus, load_taxonomy
from .errors import ConfigError, DataError, InvariantError
from .evaluation import Report, Task, cross_corpus, cross_validate, train
from .graph import load_rules
from .induction import LearnParams, parse_theory
from .logic import SolveBounds
from .modes import load_default_modes, parse_mode_file
from .synthetic import PATTERN_ACTIVE, PATTERN_PASSIVE, planted_corpus

log = logging.getLogger("relex")

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_INVARIANT = 0, 2, 3, 4

COMMANDS = ("bkgen", "learn", "apply", "xval", "xcorpus", "stats", "synth")

# option name -> (type, default, help); None defaults mean "not set"
_PATHS = {
    "corpus": "corpus file (JSON lines)",
    "test_corpus": "evaluation corpus for xcorpus",
    "modes": "mode declaration file (default: bundled modes)",
    "taxonomy": "entity taxonomy file",
    "rules": "graph reduction rule file (default: bundled rules)",
    "labels": "dependency label inventory (default: bundled list)",
    "theory": "theory file to apply",
    "out": "output file (default: stdout)",
    "timings": "file receiving per-fold wall-clock timings",
}
_SCALARS = {
    "relation": (str, None, "target relation name"),
    "seed": (int, None, "random seed (sets rng_seed)"),
    "jobs": (int, 1, "parallel fold workers"),
    "k": (int, 10, "number of cross-validation folds"),
    "format": (str, "tsv", "report format: tsv or json"),
    "max_depth": (int, SolveBounds.max_depth, "proof depth bound"),
    "max_solutions": (int, SolveBounds.max_solutions, "answer cap per query"),
    "max_steps": (int, SolveBounds.max_steps, "inference step cap per query"),
    "short_max": (int, Thresholds.short_max, "longest 'short' token"),
    "medium_max": (int, Thresholds.medium_max, "longest 'medium' token"),
    "near": (int, Thresholds.near, "largest 'near' chunk distance"),
    "far": (int, Thresholds.far, "largest 'far' chunk distance"),
    "patterns": (str, PATTERN_ACTIVE, "synth: comma-separated planted patterns"),
}
_NEEDS = {
    "bkgen": ("corpus", "relation"),
    "learn": ("corpus", "relation"),
    "apply": ("corpus", "relation", "theory"),
    "xval": ("corpus", "relation"),
    "xcorpus": ("corpus", "test_corpus", "relation"),
    "stats": ("corpus", "relation"),
    "synth": (),
}
_PARAM_FIELDS = [f.name for f in fields(LearnParams)]


def read_config(path: str) -> Dict[str, str]:
    """Flat ``key = value`` file; ``#`` starts a comment."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"config: cannot read {path}: {exc.strerror}") from None
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"config {path}:{lineno}: expected key = value")
        key = key.strip().replace("-", "_")
        if key not in _PATHS and key not in _SCALARS and key not in _PARAM_FIELDS:
            raise ConfigError(f"config {path}:{lineno}: unknown key {key!r}")
        out[key] = value.strip()
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="relex", description="Relational rule learning for relation extraction.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="key = value configuration file")
        for key, text in _PATHS.items():
            p.add_argument("--" + key.replace("_", "-"), dest=key, help=text)
        for key, (_, default, text) in _SCALARS.items():
            p.add_argument("--" + key.replace("_", "-"), dest=key, help=f"{text} (default {default})")
        for key in _PARAM_FIELDS:
            p.add_argument("--" + key.replace("_", "-"), dest=key,
                           help=f"learner parameter (default {getattr(LearnParams, key)})")
    return parser


@dataclass
class RunConfig:
    command: str
    values: Dict[str, str]

    def get(self, key: str):
        raw = self.values.get(key)
        if key in _SCALARS:
            typ, default, _ = _SCALARS[key]
            if raw is None:
                return default
            try:
                return typ(raw)
            except ValueError:
                raise ConfigError(f"{key}: expected {typ.__name__}, got {raw!r}") from None
        return raw

    def path(self, key: str) -> Optional[Path]:
        raw = self.values.get(key)
        if raw is None:
            return None
        p = Path(raw)
        if not p.is_file():
            raise ConfigError(f"{key}: file not found: {raw}")
        return p

    def params(self) -> LearnParams:
        given = {k: self.values[k] for k in _PARAM_FIELDS if k in self.values}
        if self.values.get("seed") is not None:
            given["rng_seed"] = self.values["seed"]
        try:
            return LearnParams.from_strings(given)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from None

    def bounds(self) -> SolveBounds:
        try:
            return SolveBounds(self.get("max_depth"), self.get("max_solutions"), self.get("max_steps"))
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def thresholds(self) -> Thresholds:
        return Thresholds(self.get("short_max"), self.get("medium_max"), self.get("near"), self.get("far"))


def make_config(argv: Optional[List[str]] = None) -> RunConfig:
    ns = build_parser().parse_args(argv)
    values: Dict[str, str] = {}
    if ns.config is not None:
        values.update(read_config(ns.config))
    for key, value in vars(ns).items():
        if key not in ("command", "config") and value is not None:
            values[key] = value
    cfg = RunConfig(ns.command, values)
    for key in _NEEDS[ns.command]:
        if cfg.values.get(key) is None:
            raise ConfigError(f"{key}: required for {ns.command}")
    for key in _PATHS:
        if key not in ("out", "timings"):
            cfg.path(key)
    if cfg.get("jobs") < 1:
        raise ConfigError("jobs: must be >= 1")
    if cfg.get("format") not in ("tsv", "json"):
        raise ConfigError("format: must be tsv or json")
    return cfg


def _write(cfg: RunConfig, text: str, key: str = "out"):
    target = cfg.values.get(key)
    if target is None:
        sys.stdout.write(text)
        return
    with open(target, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _corpus(cfg: RunConfig, key: str = "corpus") -> Corpus:
    labels = cfg.path("labels")
    return load_corpus(cfg.path(key), str(labels) if labels else None)


def _task(cfg: RunConfig) -> Task:
    modes_path = cfg.path("modes")
    if modes_path is None:
        modes = load_default_modes()
    else:
        modes = parse_mode_file(modes_path.read_text(encoding="utf-8"), str(modes_path))
    tax_path = cfg.path("taxonomy")
    taxonomy = load_taxonomy(tax_path) if tax_path else None
    return Task(cfg.get("relation"), modes, cfg.params(), taxonomy, tuple(load_rules(cfg.path("rules"))),
                cfg.thresholds(), cfg.bounds())


def _report(cfg: RunConfig, report: Report):
    _write(cfg, report.to_json() if cfg.get("format") == "json" else report.to_tsv())
    if cfg.values.get("timings"):
        _write(cfg, report.timings_tsv(), "timings")


def run(cfg: RunConfig) -> int:
    cmd = cfg.command
    if cmd == "synth":
        patterns = tuple(p.strip() for p in cfg.get("patterns").split(",") if p.strip())
        bad = [p for p in patterns if p not in (PATTERN_ACTIVE, PATTERN_PASSIVE)]
        if bad or not patterns:
            raise ConfigError(f"patterns: unknown pattern(s) {', '.join(bad) or '<none>'}")
        _write(cfg, corpus_to_jsonl(planted_corpus(seed=cfg.get("seed") or 0, patterns=patterns)))
        return EXIT_OK
    corpus = _corpus(cfg)
    relation = cfg.get("relation")
    if cmd == "stats":
        n, pos, neg = corpus_stats(corpus, relation)
        _write(cfg, f"{n}  {pos}  {neg}\n")
        return EXIT_OK
    task = _task(cfg)
    if cmd == "bkgen":
        _write(cfg, emit_bk(corpus, task.taxonomy, task.rules, relation, task.thresholds))
    elif cmd == "learn":
        theory, _ = train(corpus, task)
        _write(cfg, theory.format())
    elif cmd == "apply":
        theory_path = cfg.path("theory")
        theory = parse_theory(theory_path.read_text(encoding="utf-8"), str(theory_path))
        kb = knowledge_base(corpus, task.taxonomy, task.rules, relation, task.thresholds)
        xs = apply_theory(theory, kb, candidate_pairs(corpus, relation), task.bounds)
        _write(cfg, export_instances(xs, task.taxonomy, corpus))
    elif cmd == "xval":
        _report(cfg, cross_validate(corpus, task, cfg.get("k"), task.params.rng_seed, cfg.get("jobs")))
    elif cmd == "xcorpus":
        _report(cfg, cross_corpus(corpus, _corpus(cfg, "test_corpus"), task))
    return EXIT_OK


def _setup_logging():
    level = os.environ.get("RELEX_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")


def main(argv: Optional[List[str]] = None) -> int:
    _setup_logging()
    try:
        return run(make_config(argv))
    except ConfigError as exc:
        print(f"relex: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"relex: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except InvariantError as exc:
        print(f"relex: internal invariant violated: {exc}", file=sys.stderr)
        return EXIT_INVARIANT


if __name__ == "__main__":
    sys.exit(main())
