import random

import pytest
from hypothesis import given, settings, strategies as st

from gen import kb_of, random_modes, random_pair, random_typed_kb
from oracles import saturate
from relex.errors import DataError, ParseError
from relex.logic import covers, parse_clause, parse_fact_base, parse_literal
from relex.modes import (UNBOUNDED, SaturationParams, bottom_clause, is_well_formed, load_default_modes,
                         parse_mode_file)

MODES = parse_mode_file("""
:- modeh(1, r(+token, +token)).
:- modeb(*, t_next(+token, -token)).
:- modeb(*, t_pos(+token, #pos)).
""")


class TestParse:
    def test_head(self):
        ms = parse_mode_file(":- modeh(1, work_for(+token, +token)).")
        assert ms.head.recall == 1 and ms.head.predicate == "work_for"
        assert [str(m) for m in ms.head.markers] == ["+token", "+token"]

    def test_unbounded_body(self):
        ms = parse_mode_file(":- modeh(1, r(+token, +token)).\n:- modeb(*, t_next(+token, -token)).")
        assert ms.body[0].recall == UNBOUNDED
        assert ms.body[0].recall_limit(7) == 7

    def test_integer_recall_is_not_capped(self):
        ms = parse_mode_file(":- modeh(1, r(+token, +token)).\n:- modeb(4, t_next(+token, -token)).")
        assert ms.body[0].recall_limit(2) == 4

    def test_two_heads(self):
        with pytest.raises(ParseError):
            parse_mode_file(":- modeh(1, r(+token, +token)).\n:- modeh(1, s(+token, +token)).")

    def test_no_head(self):
        with pytest.raises(ParseError):
            parse_mode_file(":- modeb(*, t_next(+token, -token)).")

    def test_bad_marker(self):
        with pytest.raises(ParseError, match="marker"):
            parse_mode_file(":- modeh(1, r(+token, ?token)).")

    def test_default_round_trip(self):
        ms = load_default_modes()
        assert parse_mode_file(ms.format()) == ms
        assert ms.head.predicate == "rel"
        assert ms.for_relation("ppi").head.predicate == "ppi"


class TestBottomClause:
    kb = parse_fact_base("token(t1). token(t2). t_next(t1,t2). t_pos(t1,nnp). t_pos(t2,nn).")

    def test_depth_two(self):
        c = bottom_clause(parse_literal("r(t1,t2)"), self.kb, MODES, SaturationParams(2))
        assert c.format() == "r(A,B) :- t_next(A,B), t_pos(A,nnp), t_pos(B,nn)."

    def test_depth_one_stops_at_new_variables(self):
        kb = parse_fact_base("token(t1). token(t2). token(t3). t_next(t2,t3). t_pos(t1,nnp). t_pos(t3,vb).")
        c = bottom_clause(parse_literal("r(t1,t2)"), kb, MODES, SaturationParams(1))
        assert c.format() == "r(A,B) :- t_next(B,C), t_pos(A,nnp)."
        deeper = bottom_clause(parse_literal("r(t1,t2)"), kb, MODES, SaturationParams(2))
        assert "t_pos(C,vb)" in deeper.format()

    def test_seed_mismatch(self):
        with pytest.raises(DataError):
            bottom_clause(parse_literal("s(t1,t2)"), self.kb, MODES)


class TestWellFormed:
    def test_linked(self):
        assert is_well_formed(parse_clause("r(A,B) :- t_next(A,B)."), MODES)

    def test_unlinked(self):
        assert not is_well_formed(parse_clause("r(A,B) :- t_pos(C,nnp)."), MODES)

    def test_constant_where_variable_expected(self):
        assert not is_well_formed(parse_clause("r(A,B) :- t_next(A,c)."), MODES)

    def test_taxonomy_rule(self):
        ms = parse_mode_file(":- modeh(1, located(+token, +token)).\n"
                             ":- modeb(*, t_hasDep(#dep, +token, -token)).\n"
                             ":- modeb(*, t_subtype(+token, #subtype)).")
        rule = parse_clause("located(A,B) :- t_hasDep(prep_in,A,B), t_subtype(B,state-or-province).")
        assert is_well_formed(rule, ms)


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 10**6))
def test_bottom_clause_properties(seed):
    rng = random.Random(seed)
    facts = random_typed_kb(rng)
    modes = random_modes(rng)
    kb = kb_of(facts)
    e = random_pair(rng)
    cap = rng.randint(1, 4)
    layers = [bottom_clause(e, kb, modes, SaturationParams(d, cap)) for d in (1, 2, 3)]
    for c in layers:
        assert covers(c, e, kb)
        assert is_well_formed(c, modes)
    # variable names are first-occurrence letters, so compare printed literal sets
    sets = [set(str(c).split(" :- ")[1].rstrip(".").split(", ")) if c.body else set() for c in layers]
    assert sets[0] <= sets[1] <= sets[2]
    assert bottom_clause(e, kb, modes, SaturationParams(3, cap)).format() == layers[2].format()
    assert layers[1].format() == saturate(e, facts, modes, 2, cap).format()
