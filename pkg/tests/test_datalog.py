import random

import pytest

from csplab.datalog import (FALSE, TC_PROGRAM, Atom, DatalogProgram, ProgramError, Rule,
                            derives_false, evaluate, format_program, parse_program,
                            program_width, replay_trace)
from csplab.generators import random_digraph
from csplab.structure import Signature, digraph
from oracles import acyclic


@pytest.fixture(scope="module")
def tc():
    return parse_program(TC_PROGRAM)


def edges(*pairs, domain=()):
    return digraph(pairs, "edge", domain)


def test_tc_parses(tc):
    assert len(tc.rules) == 3
    assert program_width(tc) == (2, 3)
    assert parse_program(format_program(tc)) == tc


def test_rejections():
    with pytest.raises(ProgramError):
        parse_program("edb e 2\nidb p 1\np(x) :- .")
    with pytest.raises(ProgramError):
        parse_program("edb e 2\nidb p 1\np(x) :- q(x).")
    with pytest.raises(ProgramError):
        parse_program("edb e 2\nidb p 1\ne(x,y) :- p(x), p(y).")
    with pytest.raises(ProgramError):
        parse_program("edb e 2\nidb p 1\np(x) :- e(x).")
    with pytest.raises(ProgramError):
        parse_program("edb e 2\nidb p 1\np(x) :- e(y,y).")


def test_widths():
    assert program_width(parse_program("edb e 2\nfalse :- e(x,y).")) == (0, 2)
    assert program_width(DatalogProgram(Signature(()), Signature(()), ())) == (0, 0)


def test_tc_on_path(tc):
    facts, trace = evaluate(tc, edges(("a", "b"), ("b", "c")))
    assert facts.relation("tc") == {("a", "b"), ("b", "c"), ("a", "c")}
    assert not facts.holds(FALSE, ())
    assert len(trace) == 3


def test_tc_on_cycles(tc):
    assert derives_false(tc, edges(("a", "b"), ("b", "c"), ("c", "a")))
    assert derives_false(tc, edges(("a", "b"), ("b", "a")))
    assert derives_false(tc, edges(("a", "a")))


def test_tc_edgeless(tc):
    facts, trace = evaluate(tc, edges(domain=["a", "b"]))
    assert not facts.tuples("tc") and len(trace) == 0


def test_empty_instance_nothing_fires():
    p = parse_program("edb e 2\nidb q 1\nq(x) :- e(x,y).\nfalse :- q(x), e(x,x).")
    assert not derives_false(p, digraph([], "e"))


def test_naive_equals_seminaive(tc):
    rng = random.Random(5)
    for _ in range(60):
        s = random_digraph(rng, rng.randint(1, 6), 0.3, loops=True, symbol="edge")
        a, _ = evaluate(tc, s, method="seminaive")
        b, _ = evaluate(tc, s, method="naive")
        assert a == b
        assert a.holds(FALSE, ()) == (not acyclic(s, "edge"))


def test_each_fact_derived_once_and_replays(tc):
    s = edges(("a", "b"), ("b", "c"), ("c", "d"), ("d", "b"))
    facts, trace = evaluate(tc, s)
    derived = trace.derived()
    assert len(derived) == len(set(derived))
    replayed = replay_trace(trace, tc, s)
    assert replayed == {f for f in facts.facts() if f[0] in tc.idbs}


def test_replay_rejects_tampering(tc):
    s = edges(("a", "b"), ("b", "a"))
    _, trace = evaluate(tc, s)
    from csplab.datalog import DerivationTrace
    assert replay_trace(DerivationTrace(trace.steps[1:]), tc, s) is None


def test_non_injective_matching():
    # x and y may denote the same element
    p = DatalogProgram(Signature.of(e=2), Signature.of(),
                       (Rule(Atom(FALSE), (Atom("e", ("x", "y")), Atom("e", ("y", "x")))),))
    assert derives_false(p, digraph([("a", "a")], "e"))
