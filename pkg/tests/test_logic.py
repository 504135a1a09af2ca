import random

import pytest
from hypothesis import given, settings, strategies as st

from gen import kb_of, random_flat_kb, random_query
from oracles import enumerate_answers
from relex.bk import emit_intentional_bk
from relex.errors import DataError, ParseError
from relex.logic import (BuiltinError, Clause, Const, KnowledgeBase, Literal, SolveBounds, Str, Var,
                         coverage_counts, covers, format_fact_base, parse_clause, parse_fact_base, parse_literal,
                         solve, substitute, unify)

X, Y, T = Var("X"), Var("Y"), Var("T")
a, b = Const("a"), Const("b")


def lit(text):
    return parse_literal(text)


class TestTerms:
    def test_var_and_const_never_equal(self):
        assert Var("a") != Const("a")
        assert hash(Var("A")) != hash(Const("A")) or Var("A") != Const("A")

    def test_var_pickles(self):
        import pickle

        assert pickle.loads(pickle.dumps(Var("Q"))) == Var("Q")
        assert type(pickle.loads(pickle.dumps(Var("Q")))) is Var

    def test_str_quoting(self):
        assert Literal("t_stem", (Const("t1"), Str("Myron"))).format() == 't_stem(t1,"Myron")'


class TestUnify:
    def test_binds_variable(self):
        assert unify(Literal("p", (X, a)), Literal("p", (b, a))) == {X: b}

    def test_repeated_variable_fails(self):
        assert unify(Literal("p", (X, X)), Literal("p", (a, b))) is None

    def test_typed_token(self):
        assert unify(lit("t_pos(T, nnp)"), lit("t_pos(t1, nnp)")) == {T: Const("t1")}

    def test_predicate_mismatch(self):
        assert unify(Literal("p", (X,)), Literal("q", (a,))) is None


_atoms = st.sampled_from([Const(c) for c in "abc"] + [Var(v) for v in "XYZ"] + [3, -2])


@st.composite
def _literal_pairs(draw):
    n = draw(st.integers(1, 3))
    return (Literal("p", tuple(draw(_atoms) for _ in range(n))),
            Literal("p", tuple(draw(_atoms) for _ in range(n))))


@settings(max_examples=10_000, deadline=None)
@given(_literal_pairs())
def test_unifier_soundness(pair):
    l1, l2 = pair
    s = unify(l1, l2)
    if s is not None:
        assert substitute(l1, s) == substitute(l2, s)


class TestParse:
    def test_single_fact(self):
        kb = parse_fact_base("t_next(t1, t2).")
        assert len(kb) == 1
        assert kb.facts_for("t_next", 2) == [(Const("t1"), Const("t2"))]

    def test_empty(self):
        assert len(parse_fact_base("")) == 0

    def test_arity_conflict(self):
        with pytest.raises(DataError, match="arity"):
            parse_fact_base("t_length(t1, 5).\nt_length(t1).")

    def test_syntax_error_has_line(self):
        with pytest.raises(ParseError) as exc:
            parse_fact_base("p(a).\n% c\np(a b).")
        assert exc.value.line == 3

    def test_non_ground_fact(self):
        with pytest.raises(DataError):
            parse_fact_base("p(X).")

    def test_round_trip(self):
        text = 't_stem(t1,"Myron").\nt_length(t1,5).\nck_posRelPred(c1,-3).\nt_type(t1,state-or-province).\n'
        kb = parse_fact_base(text)
        assert format_fact_base(kb) == text
        assert format_fact_base(parse_fact_base(format_fact_base(kb))) == text

    def test_clause_variable_naming(self):
        c = parse_clause("r(X, Y) :- t_next(X, Z), t_pos(Z, nn).")
        assert c.format() == "r(A,B) :- t_next(A,C), t_pos(C,nn)."

    def test_disjunction_splits(self):
        clauses = emit_intentional_bk()
        heads = [c.head.predicate for c in clauses if c.body]
        assert heads.count("tok_length") == 3


@settings(max_examples=300, deadline=None)
@given(st.lists(st.tuples(st.sampled_from(["p", "q"]), st.sampled_from(["a", "b-c", "d1"]),
                          st.one_of(st.integers(-50, 50), st.text("xyz \"\\", max_size=4))), max_size=8))
def test_fact_base_round_trip(rows):
    facts = [Literal(p, (Const(c), v if isinstance(v, int) else Str(v))) for p, c, v in rows]
    text = format_fact_base(KnowledgeBase(facts))
    assert format_fact_base(parse_fact_base(text)) == text


class TestSolve:
    def test_chain(self):
        kb = parse_fact_base("t_next(t1,t2). t_next(t2,t3).")
        got = solve([lit("t_next(t1,X)"), lit("t_next(X,Y)")], kb)
        assert got == [{X: Const("t2"), Y: Const("t3")}]

    def test_intensional_length(self):
        kb = KnowledgeBase(parse_fact_base("token(t1). t_length(t1,5).").facts, emit_intentional_bk())
        assert solve([lit("tok_length(t1,L)")], kb) == [{Var("L"): Const("short")}]

    def test_long_and_near(self):
        kb = KnowledgeBase(parse_fact_base("token(t). t_length(t,16). ck_posRelPred(ck,0).").facts,
                           emit_intentional_bk())
        assert solve([lit("tok_length(t,long)")], kb) == [{}]
        assert solve([lit("ck_dist_root(ck,near)")], kb) == [{}]

    def test_empty_kb(self):
        assert solve([lit("p(X)")], KnowledgeBase()) == []

    def test_builtin_unbound(self):
        with pytest.raises(BuiltinError):
            solve([Literal(">", (X, 3))], KnowledgeBase())
        with pytest.raises(BuiltinError):
            solve([Literal(">", (a, 3))], KnowledgeBase())

    def test_truncation(self):
        kb = parse_fact_base("p(a). p(b). p(c).")
        got = solve([lit("p(X)")], kb, None, SolveBounds(max_solutions=2))
        assert len(got) == 2 and got.truncated

    def test_step_bound(self):
        facts = " ".join(f"e(n{i},n{j})." for i in range(8) for j in range(8))
        kb = parse_fact_base(facts)
        got = solve([lit("e(A,B)"), lit("e(B,C)"), lit("e(C,D)")], kb, None,
                    SolveBounds(max_solutions=10**6, max_steps=100))
        assert got.truncated and got.steps <= 100

    def test_recursion_rejected(self):
        with pytest.raises(DataError, match="recursive"):
            KnowledgeBase([], [parse_clause("p(X) :- q(X)."), parse_clause("q(X) :- p(X).")])

    def test_deterministic(self):
        rng = random.Random(7)
        facts, consts, preds = random_flat_kb(rng)
        kb = kb_of(facts)
        for _ in range(50):
            q = random_query(rng, consts, preds)
            assert solve(q, kb) == solve(q, kb)


def test_matches_agrees_with_solve_on_rules():
    kb = KnowledgeBase(parse_fact_base("token(t1). t_length(t1,5). token(t2). t_length(t2,9).").facts,
                       emit_intentional_bk())
    rows = kb.matches("tok_length", (Var("T"), Var("L")), SolveBounds())
    assert sorted(rows) == sorted([(Const("t1"), Const("short")), (Const("t2"), Const("medium"))])
    assert kb.matches("tok_length", (Const("t2"), Var("L")), SolveBounds()) == [(Const("t2"), Const("medium"))]


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6))
def test_solve_matches_enumeration(seed):
    rng = random.Random(seed)
    facts, consts, preds = random_flat_kb(rng, 40)
    q = random_query(rng, consts, preds)
    qvars = list(dict.fromkeys(v for g in q for v in g.variables()))
    got = {tuple(s[v] for v in qvars) for s in solve(q, kb_of(facts), None, SolveBounds(max_solutions=10**6))}
    assert got == enumerate_answers(q, facts, consts)


PART_RULE = parse_clause("part_w(A,B) :- t_next(A,B), t_pos(A,nnp), t_ne_type(B,gpl), t_subtype(A,pop-center).")


class TestCovers:
    kb = parse_fact_base("t_next(t1,t2). t_pos(t1,nnp). t_ne_type(t2,gpl). t_subtype(t1,pop-center).")

    def test_covered(self):
        assert covers(PART_RULE, lit("part_w(t1,t2)"), self.kb)

    def test_reversed(self):
        assert not covers(PART_RULE, lit("part_w(t2,t1)"), self.kb)

    def test_empty_body(self):
        assert covers(parse_clause("part_w(A,B)."), lit("part_w(x,y)"), KnowledgeBase())

    def test_predicate_mismatch(self):
        with pytest.raises(DataError):
            covers(PART_RULE, lit("other(t1,t2)"), self.kb)

    def test_counts(self):
        rule = parse_clause("r(A,B) :- e(A,B).")
        kb = parse_fact_base("e(a,b).")
        assert coverage_counts(rule, [lit("r(a,b)")], [lit("r(b,a)"), lit("r(a,c)")], kb) == (1, 0)
        assert coverage_counts(parse_clause("r(A,B) :- false_pred(A)."), [lit("r(a,b)")], [lit("r(b,a)")],
                               kb) == (0, 0)


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 10**6))
def test_covers_monotone_under_deletion(seed):
    from gen import random_modes, random_pair, random_typed_kb
    from relex.modes import SaturationParams, bottom_clause, linked_mask

    rng = random.Random(seed)
    facts = random_typed_kb(rng)
    modes = random_modes(rng)
    kb = kb_of(facts)
    c = bottom_clause(random_pair(rng), kb, modes, SaturationParams(2, 3))
    if not c.body:
        return
    j = rng.randrange(len(c.body))
    keep = [i != j for i in range(len(c.body))]
    mask = linked_mask(c.head, c.body, modes, keep)
    smaller = Clause(c.head, tuple(x for x, m in zip(c.body, mask) if m))
    for _ in range(5):
        e = random_pair(rng)
        if covers(c, e, kb):
            assert covers(smaller, e, kb)
