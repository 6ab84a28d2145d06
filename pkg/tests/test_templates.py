import pytest

from csplab.structure import clique, digraph, directed_cycle
from csplab.templates import (AssignmentClass, CapExceeded, TemplateHandle, class_holds,
                              class_of_assignment_checked, class_of_assignment, classes,
                              decide_csp, parse_template_selector, restrict_class)
from csplab.generators import all_digraphs_up_to
from oracles import acyclic, henson_ok, henson_type_count, weak_order_count


@pytest.mark.parametrize("m", [1, 2, 3, 4])
def test_qorder_counts(qorder, m):
    assert len(classes(qorder, m)) == weak_order_count(m)


@pytest.mark.parametrize("m", [1, 2, 3, 4])
def test_henson_counts(henson, m):
    assert len(classes(henson, m)) == henson_type_count(m)


def test_frozen_counts(qorder, henson):
    assert [len(classes(qorder, m)) for m in range(5)] == [1, 1, 3, 13, 75]
    assert [len(classes(henson, m)) for m in range(5)] == [1, 1, 3, 14, 98]


def test_cap(qorder):
    with pytest.raises(CapExceeded):
        classes(qorder, 5)
    assert len(classes(qorder.with_cap(5), 5)) == 541


def test_restriction_examples(qorder, henson):
    chain = next(c for c in classes(qorder, 3) if c.payload == ((0,), (1,), (2,)))
    assert restrict_class(chain, (0, 2)).payload == ((0,), (1,))
    assert restrict_class(chain, (0, 1, 2)) == chain
    edge = next(c for c in classes(henson, 2) if class_holds(henson, "E", c))
    assert restrict_class(edge, (0,)) == classes(henson, 1)[0]


def test_restriction_commutes(qorder, henson):
    for t in (qorder, henson):
        for c in classes(t, 4):
            assert restrict_class(restrict_class(c, (3, 1, 0)), (2, 0)) == restrict_class(c, (0, 3))


def test_class_holds(qorder, henson):
    eq = next(c for c in classes(qorder, 2) if len(c.payload) == 1)
    lt = next(c for c in classes(qorder, 2) if c.payload == ((0,), (1,)))
    assert not class_holds(qorder, "E", eq)
    assert class_holds(qorder, "E", lt)
    edge = [c for c in classes(henson, 2) if class_holds(henson, "E", c)]
    assert len(edge) == 1 and edge[0].payload[1] == ((0, 1),)


def test_decide_examples(qorder, henson):
    assert not decide_csp(qorder, directed_cycle(3)).satisfiable
    assert not decide_csp(henson, clique(3)).satisfiable
    dag = digraph([("a", "b"), ("a", "c"), ("c", "b")])
    res = decide_csp(qorder, dag)
    assert res.satisfiable and res.witness[0] == "order"
    order = list(res.witness[1])
    assert all(order.index(x) < order.index(y) for x, y in dag.tuples("E"))


def test_oracles_against_reference(qorder, henson):
    for s in all_digraphs_up_to(4, loops=True):
        assert decide_csp(qorder, s).satisfiable == acyclic(s)
        assert decide_csp(henson, s).satisfiable == henson_ok(s)


def test_finite_assignment_classes(k2):
    c = class_of_assignment(k2, ("0", "1"))
    assert c.payload == ("0", "1")
    assert class_of_assignment(k2, ("0", "0")).payload == ("0", "0")
    with pytest.raises(ValueError):
        class_of_assignment_checked(k2, ("0",), 2)
    with pytest.raises(TypeError):
        class_of_assignment(TemplateHandle.qorder(), (1, 2))


def test_selector_symbol_follows_instance(tmp_path):
    t = parse_template_selector("qorder", digraph([("a", "b")], "lt"))
    assert t.symbol == "lt"
    assert parse_template_selector("henson").symbol == "E"
    with pytest.raises(ValueError):
        parse_template_selector("nope")
    p = tmp_path / "k2.struct"
    p.write_text("rel E 2\nE 0 1\nE 1 0\n")
    assert parse_template_selector(f"finite:{p}").structure.relation("E") == {("0", "1"), ("1", "0")}
