import os
import random

import pytest

from csplab.generators import graphs_up_to, random_digraph
from csplab.mmsnp import (INEQUALITY, NEGATED_INPUT, NON_MONADIC, SYNTAX, MmsnpError,
                          connectivity_report, decide_by_obstructions,
                          disjoint_union_closure_probe, find_colouring, load_mmsnp,
                          model_check, model_check_by_obstructions, obstruction_structures,
                          parse_mmsnp)
from csplab.structure import (BudgetExceeded, Signature, Structure, canonical_query, clique,
                              digraph, graph)
from oracles import two_partition_triangle_free

DATA = os.path.join(os.path.dirname(__file__), os.pardir, "demos", "data")


@pytest.fixture(scope="module")
def tri():
    return load_mmsnp(os.path.join(DATA, "tri2part.mmsnp"))


def test_parse_triangle_sentence(tri):
    assert tri.monadic == ("P",)
    assert len(tri.clauses) == 2
    assert parse_mmsnp(str(tri)) == tri


@pytest.mark.parametrize("text, rule", [
    ("input E 2\nmonadic R 2\ndeny E(x,y)\n", NON_MONADIC),
    ("input E 2\nmonadic P\ndeny E(x,y), P(x,y)\n", NON_MONADIC),
    ("input E 2\nmonadic P\ndeny !E(x,y), P(x)\n", NEGATED_INPUT),
    ("input E 2\nmonadic P\ndeny E(x,y), x != y\n", INEQUALITY),
    ("input E 2\nmonadic P\ndeny E(x,y), x = y\n", INEQUALITY),
    ("input E 2\ndeny F(x)\n", SYNTAX),
    ("input E 2\ndeny E(x)\n", SYNTAX),
    ("inputs E 2\n", SYNTAX),
    ("input E 2\ndeny\n", SYNTAX),
])
def test_rejections(text, rule):
    with pytest.raises(MmsnpError) as info:
        parse_mmsnp(text)
    assert info.value.rule == rule


def test_unary_inputs_are_legal():
    phi = parse_mmsnp("input P 1\ninput Q 1\ndeny P(x), Q(x)\n")
    assert phi.monadic == ()


def test_k5_k6(tri):
    # any split of five vertices leaves three on one side, and they form a triangle
    assert not model_check(tri, clique(5))
    assert not model_check(tri, clique(6))
    assert model_check(tri, clique(4))


def test_empty_structure(tri):
    assert model_check(tri, Structure(Signature.of(E=2), [], {}))


def test_unsatisfiable_single_element():
    phi = parse_mmsnp("input E 2\nmonadic P\ndeny P(x)\ndeny !P(x)\n")
    one = Structure(Signature.of(E=2), ["a"], {})
    assert not model_check(phi, one)
    assert model_check(phi, Structure(Signature.of(E=2), [], {}))


def test_matches_partition_search(tri):
    for s in graphs_up_to(5):
        assert model_check(tri, s) == two_partition_triangle_free(s)


def test_colouring_is_a_witness(tri):
    g = graph([(0, 1), (1, 2), (0, 2), (2, 3), (3, 0)])
    col = find_colouring(tri, g)
    part = {x for x, ps in col.items() if "P" in ps}
    for a, b, c in [(0, 1, 2), (0, 2, 3)]:
        assert not {a, b, c} <= part and {a, b, c} & part


def test_independent_checker_agrees(tri):
    for s in graphs_up_to(5):
        assert model_check_by_obstructions(tri, s) == model_check(tri, s)


def test_budget(tri):
    with pytest.raises(BudgetExceeded):
        model_check(tri, clique(6), budget=16)


def test_obstructions(tri):
    obs = obstruction_structures(tri)
    assert len(obs) == len(tri.clauses) == 2
    first, second = obs
    assert len(first.tuples("P")) == 3 and not first.tuples("P'")
    assert len(second.tuples("P'")) == 3 and not second.tuples("P")
    assert len(first.tuples("E")) == 3
    assert connectivity_report(obs) == [True, True]


def test_loop_clause():
    phi = parse_mmsnp("input E 2\ndeny E(x,x)\n")
    (o,) = obstruction_structures(phi)
    assert len(o.domain) == 1 and list(o.tuples("E")) == [("x", "x")]
    assert connectivity_report(obstruction_structures(phi)) == [True]


def test_disconnected_flag():
    phi = parse_mmsnp("input E 2\nmonadic P\nmonadic Q\ndeny P(x), Q(y)\n")
    assert connectivity_report(obstruction_structures(phi)) == [False]


def test_obstruction_round_trip(tri):
    for clause, o in zip(tri.clauses, obstruction_structures(tri)):
        q = canonical_query(o)
        rename = dict(zip(q.variables, clause.variables()))
        atoms = sorted((sym, tuple(rename[a] for a in args)) for sym, args in q.atoms)
        expected = sorted((l.symbol if l.positive else l.symbol + "'", l.args)
                          for l in clause.literals)
        assert atoms == expected


def test_obstruction_decision():
    sig = Signature.of(E=2)
    k3 = clique(3)
    loop = digraph([(0, 0)])
    assert decide_by_obstructions([], clique(4))
    single = Structure(sig, [0], {})
    assert not decide_by_obstructions([single], digraph([(1, 2)]))
    assert decide_by_obstructions([k3, loop], clique(2))
    assert not decide_by_obstructions([k3, loop], clique(3))
    with pytest.raises(ValueError):
        decide_by_obstructions([Structure(Signature.of(F=2), [0], {})], k3)


def test_closure_probe_triangle(tri):
    rng = random.Random(4)
    pairs = []
    for _ in range(50):
        a = random_digraph(rng, rng.randint(1, 5), 0.5)
        b = random_digraph(rng, rng.randint(1, 5), 0.5)
        pairs.append((a, b))
    report = disjoint_union_closure_probe(tri, pairs)
    assert report.checked == 50 and report.closed


def test_closure_violation():
    # the same-variable clause cannot see across components
    same = parse_mmsnp("input P 1\ninput Q 1\ndeny P(x), Q(x)\n")
    cross = parse_mmsnp("input P 1\ninput Q 1\ndeny P(x), Q(y)\n")
    sig = Signature.of(P=1, Q=1)
    a = Structure(sig, ["a"], {"P": [("a",)]})
    b = Structure(sig, ["b"], {"Q": [("b",)]})
    assert disjoint_union_closure_probe(same, [(a, b)]).closed
    report = disjoint_union_closure_probe(cross, [(a, b)])
    assert not report.closed and report.violations[0][0] == 0


def test_empty_sentence_closed():
    phi = parse_mmsnp("input E 2\n")
    s = digraph([(0, 1)])
    assert disjoint_union_closure_probe(phi, [(s, s)]).closed


def test_adding_facts_never_helps(tri):
    rng = random.Random(12)
    for _ in range(60):
        s = random_digraph(rng, rng.randint(2, 6), 0.4)
        extra = random_digraph(rng, len(s.domain), 0.2)
        bigger = s.with_facts(extra.facts())
        if model_check(tri, bigger):
            assert model_check(tri, s)
