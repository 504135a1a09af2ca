"""Acceptance criteria, one test per criterion.

A PASS/FAIL line per criterion is printed in the terminal summary.
"""
import json
import os
import random
import time
from fractions import Fraction
from math import comb

import pytest

from gen import (kb_of, random_flat_kb, random_modes, random_pair, random_query, random_typed_kb,
                 shuffled_clause)
from oracles import (armg_subset, coverage_set, deletion_closure, embeds, enumerate_answers, naive_covers, pairwise_auc,
                     saturate)
from relex.bk import emit_bk
from relex.cli import main
from relex.corpus import corpus_stats, corpus_to_jsonl, generate_examples, load_corpus, load_taxonomy
from relex.evaluation import ConfusionCounts, Task, auc, cross_validate, fmt4, prf
from relex.graph import load_rules
from relex.induction import LearnParams, armg, canonical, negative_based_reduction
from relex.logic import SolveBounds, covers, solve
from relex.modes import SaturationParams, bottom_clause, is_well_formed, load_default_modes
from relex.synthetic import PATTERN_ACTIVE, PATTERN_PASSIVE, RELATION, planted_corpus

PLANTED = 'rel(A,B) :- t_hasDep(nsubj,C,A), t_hasDep(dobj,C,B), t_stem(C,"interacts").'


def _task():
    return Task(RELATION, load_default_modes(), LearnParams(), None, tuple(load_rules()))


@pytest.mark.criterion(1, "solve equals exhaustive ground enumeration on 100 x 100 random queries")
def test_criterion_1_resolution_oracle():
    start = time.perf_counter()
    bounds = SolveBounds(max_solutions=10**6)
    for k in range(100):
        rng = random.Random(k)
        facts, consts, preds = random_flat_kb(rng)
        assert len(facts) <= 200 and len(consts) <= 8 and len(preds) <= 6
        kb = kb_of(facts)
        for _ in range(100):
            goals = random_query(rng, consts, preds)
            qvars = list(dict.fromkeys(v for g in goals for v in g.variables()))
            got = solve(goals, kb, None, bounds)
            rows = [tuple(a[v] for v in qvars) for a in got]
            assert len(set(rows)) == len(rows)
            assert set(rows) == enumerate_answers(goals, facts, consts), goals
    assert time.perf_counter() - start < 60


@pytest.mark.criterion(2, "bottom clause equals the brute-force saturation oracle on 50 instances")
def test_criterion_2_bottom_clause_oracle():
    for k in range(50):
        rng = random.Random(k)
        facts = random_typed_kb(rng)
        modes = random_modes(rng)
        seed = random_pair(rng)
        depth, cap = rng.randint(1, 3), rng.randint(1, 4)
        start = time.perf_counter()
        got = bottom_clause(seed, kb_of(facts), modes, SaturationParams(depth, cap))
        assert time.perf_counter() - start < 1
        assert got.format() == saturate(seed, facts, modes, depth, cap).format()


@pytest.mark.criterion(3, "ARMG covers, stays a sub-multiset and matches the maximal-subset oracle")
def test_criterion_3_armg_properties():
    for k in range(1000):
        rng = random.Random(k)
        facts = random_typed_kb(rng)
        modes = random_modes(rng)
        kb = kb_of(facts)
        bottom = bottom_clause(random_pair(rng), kb, modes, SaturationParams(rng.randint(1, 3), 3))
        c = shuffled_clause(rng, bottom, 10)
        e = random_pair(rng)
        out = armg(c, e, kb, modes)
        assert covers(out, e, kb) and naive_covers(out, e, facts)
        assert embeds(out, c)
        assert out == canonical(armg_subset(c, e, facts, modes))
        for e0 in (random_pair(rng) for _ in range(3)):
            if covers(c, e0, kb):
                assert covers(out, e0, kb)


@pytest.mark.criterion(4, "negative-based reduction keeps neg coverage, never loses pos, is 1-minimal")
def test_criterion_4_reduction():
    for k in range(1000):
        rng = random.Random(10_000 + k)
        facts = random_typed_kb(rng)
        modes = random_modes(rng)
        kb = kb_of(facts)
        pos = [random_pair(rng) for _ in range(6)]
        neg = [random_pair(rng) for _ in range(6)]
        c = bottom_clause(pos[0], kb, modes, SaturationParams(rng.randint(1, 3), 3))
        r = negative_based_reduction(c, pos, neg, kb, modes)
        assert is_well_formed(r, modes)
        neg_after = coverage_set(r, neg, facts)
        assert neg_after == coverage_set(c, neg, facts)
        assert coverage_set(c, pos, facts) <= coverage_set(r, pos, facts)
        for j in range(len(r.body)):
            assert coverage_set(deletion_closure(r, j, modes), neg, facts) != neg_after


@pytest.mark.criterion(5, "planted rule: xval pooled F1 = AUC = 1 in under 60 s")
def test_criterion_5_planted_rule_recovery():
    c = planted_corpus()
    assert corpus_stats(c, RELATION) == (200, 60, 120)
    assert len(c.documents) == 40
    start = time.perf_counter()
    report = cross_validate(c, _task())
    elapsed = time.perf_counter() - start
    assert report.pooled.f1 == 1 and report.pooled.auc == 1
    assert all(PLANTED in f.theory for f in report.folds)
    assert elapsed < 60, f"cross-validation took {elapsed:.1f}s"


@pytest.mark.criterion(6, "two planted patterns: exactly 2 rules and pooled F1 = 1")
def test_criterion_6_two_patterns():
    from relex.evaluation import train

    c = planted_corpus(patterns=(PATTERN_ACTIVE, PATTERN_PASSIVE))
    theory, _ = train(c, _task())
    assert len(theory) == 2
    report = cross_validate(c, _task())
    assert report.pooled.f1 == 1


@pytest.mark.criterion(7, "emit_bk on the Kandel fixture reproduces the golden fact file")
def test_criterion_7_golden_bk(fixtures):
    c = load_corpus(fixtures / "kandel.jsonl")
    text = emit_bk(c, load_taxonomy(fixtures / "toy.taxonomy"), load_rules(), "located")
    golden = (fixtures / "kandel.bk").read_text(encoding="utf-8")
    assert text == golden
    families = ["chunk(", "token(", "t_stem(", "t_length(", "t_orth(", "t_morph_type(", "t_pos(", "t_gpos(",
                "t_bigPosBef(", "t_bigPosAft(", "t_trigPosBef(", "t_trigPosAft(", "ck_hasHead(", "ck_hasType(",
                "ck_posRelPred(", "t_isHeadNP(", "t_ck_tag_type(", "t_ner(", "t_type(", "t_subtype(", "t_mtype(",
                "t_next(", "t_next_head(", "ck_hasToken(", "ck_hasSucc(", "t_hasDep(", "t_root("]
    for fam in families:
        assert any(line.startswith(fam) for line in golden.splitlines()), fam
    for clause in ("tok_length(A,short) :- token(A), t_length(A,B), B =< 5.",
                   "tok_length(A,medium) :- token(A), t_length(A,B), B > 5, B =< 15.",
                   "ck_dist_root(A,near) :- ck_posRelPred(A,B), B >= -3, B =< 3.",
                   "ck_dist_root(A,very_far) :- ck_posRelPred(A,B), B > 8."):
        assert clause in golden.splitlines()


@pytest.mark.criterion(8, "example count equals sum of C(k,2) minus self-interactions")
def test_criterion_8_example_identity(fixtures):
    for path, relation in ((fixtures / "kandel.jsonl", "located"), (fixtures / "mini.jsonl", "ppi")):
        c = load_corpus(path)
        pos, neg = generate_examples(c, relation)
        expected = 0
        for _, s in c.sentences():
            ents = s.entities
            selfs = sum(1 for i in range(len(ents)) for j in range(i + 1, len(ents))
                        if ents[i].entity == ents[j].entity or ents[i].head_token == ents[j].head_token)
            expected += comb(len(ents), 2) - selfs
        assert len(pos) + len(neg) == expected
    kandel = load_corpus(fixtures / "kandel.jsonl")
    assert corpus_stats(kandel, "located") == (1, 1, 2)
    assert corpus_stats(load_corpus(fixtures / "mini.jsonl"), "ppi") == (4, 2, 7)


@pytest.mark.criterion(9, "prf and auc match 20 committed hand/brute-force cases")
def test_criterion_9_metrics(fixtures):
    cases = json.loads((fixtures / "metrics_cases.json").read_text())
    assert len(cases) == 20
    for case in cases:
        m = prf(ConfusionCounts(*case["counts"]))
        assert (m.precision, m.recall, m.f1) == tuple(Fraction(case[k]) for k in ("precision", "recall", "f1"))
        scored = [(Fraction(s), g) for s, g in case["scored"]]
        assert auc(scored) == Fraction(case["auc"]) == pairwise_auc(scored)
        assert fmt4(auc(scored)) == fmt4(Fraction(case["auc"]))


def _run_all(tmp, corpus_path, jobs):
    out = tmp
    out.mkdir()
    common = ["--corpus", str(corpus_path), "--relation", RELATION, "--seed", "3", "--jobs", str(jobs)]
    runs = {
        "synth.jsonl": ["synth", "--seed", "3", "--jobs", str(jobs)],
        "stats.txt": ["stats"] + common,
        "bk.pl": ["bkgen"] + common,
        "theory.txt": ["learn"] + common,
        "xval.tsv": ["xval", "--k", "4"] + common,
        "xval.json": ["xval", "--k", "4", "--format", "json"] + common,
        "xcorpus.tsv": ["xcorpus", "--test-corpus", str(corpus_path)] + common,
    }
    for name, argv in runs.items():
        assert main(argv + ["--out", str(out / name)]) == 0, name
    assert main(["apply", "--theory", str(out / "theory.txt"), "--out", str(out / "instances.tsv")] + common) == 0
    return {p.name: p.read_bytes() for p in out.iterdir()}


@pytest.mark.criterion(10, "every subcommand is byte-identical across reruns and --jobs 1 vs 8")
def test_criterion_10_determinism(tmp_path):
    small = planted_corpus(seed=5, n_docs=16, sentences_per_doc=5, n_pos=24, n_neg=48)
    path = tmp_path / "small.jsonl"
    path.write_text(corpus_to_jsonl(small), encoding="utf-8")
    first, second, third = (_run_all(tmp_path / name, path, jobs) for name, jobs in (("a", 1), ("b", 8), ("c", 1)))
    assert first.keys() == second.keys() == third.keys()
    for name in first:
        assert first[name] == second[name] == third[name], name


@pytest.mark.criterion(11, "stretch: LLL statistics (77, 164, 166) when the corpus is supplied")
def test_criterion_11_lll_stretch():
    path = os.environ.get("RELEX_LLL_CORPUS")
    if not path:
        pytest.skip("set RELEX_LLL_CORPUS to a converted LLL corpus to run this check")
    c = load_corpus(path)
    assert corpus_stats(c, os.environ.get("RELEX_LLL_RELATION", "ppi")) == (77, 164, 166)
