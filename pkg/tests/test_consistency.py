import itertools
import random

import pytest

from csplab.consistency import (ac_solves, arc_consistency, arc_consistency_classes,
                                establish_lk_consistency, materialize_canonical_program,
                                power_structure, solves_on, store_violations)
from csplab.datalog import derives_false, program_width
from csplab.generators import (graphs_up_to, implication_structure, random_digraph)
from csplab.structure import (Signature, Structure, clique, digraph, directed_cycle, hom_exists)
from csplab.templates import TemplateHandle, classes
from oracles import brute_hom


def test_cycle_fails_qorder(qorder):
    store = establish_lk_consistency(directed_cycle(3), qorder, 2, 3)
    assert store.failed
    assert all(not cls for cls in store.entries.values())


def test_path_prunes_to_order(qorder):
    path = digraph([("a", "b"), ("b", "c")])
    store = establish_lk_consistency(path, qorder, 2, 3)
    assert store.accepted
    (only,) = store.entries[("a", "c")]
    assert only.payload == ((0,), (1,))
    assert store.classes_on(("c", "a")) == {type(only)("qorder", 2, ((1,), (0,)))}


@pytest.mark.parametrize("name", ["qorder", "henson", "k2", "k3"])
def test_single_free_variable(name, request):
    t = request.getfixturevalue(name)
    s = Structure(t.signature, ["x"], {})
    store = establish_lk_consistency(s, t, 1, 2)
    assert store.accepted and store.entries[("x",)] == frozenset(classes(t, 1))


def test_preconditions(qorder, lin3):
    s = directed_cycle(3)
    for l, k in [(0, 2), (2, 2), (3, 2)]:
        with pytest.raises(ValueError):
            establish_lk_consistency(s, qorder, l, k)
    with pytest.raises(ValueError):
        establish_lk_consistency(s, qorder, 2, 5)
    with pytest.raises(ValueError):
        establish_lk_consistency(Structure(lin3.signature, [], {}), lin3, 1, 2)


def test_qorder_random_agreement(qorder):
    rng = random.Random(2024)
    for _ in range(300):
        s = random_digraph(rng, rng.randint(1, 6), 0.25, loops=rng.random() < 0.2)
        accepted, agrees = solves_on(s, qorder, 2, 3)
        assert agrees, s


def test_henson_graphs(henson):
    for s in graphs_up_to(5):
        assert solves_on(s, henson, 2, 3)[1]


def test_k3_k4_negative_control(k3):
    accepted, agrees = solves_on(clique(4), k3, 2, 3)
    assert accepted and not agrees


def test_store_invariants_and_schedules(qorder, henson, k3):
    rng = random.Random(9)
    for t in (qorder, henson, k3):
        for _ in range(40):
            s = random_digraph(rng, rng.randint(1, 5), 0.3)
            a = establish_lk_consistency(s, t, 2, 3, schedule="fifo")
            b = establish_lk_consistency(s, t, 2, 3, schedule="lifo")
            assert a.entries == b.entries and a.failed == b.failed
            assert store_violations(a, s) == []


def test_json_shape(qorder):
    data = establish_lk_consistency(digraph([("a", "b")]), qorder, 1, 2).to_json()
    assert set(data) == {"accepted", "entries", "iterations"}
    assert data["entries"][0] == {"vars": [], "classes": [[]]}


# canonical program ---------------------------------------------------------

ORDER2 = Structure(Signature.of(lt=2), [0, 1], {"lt": [(0, 1)]})


def test_materialized_unary_idbs():
    p = materialize_canonical_program(TemplateHandle.finite(ORDER2), 1, 2)
    unary = {frozenset(v[0] for v in rel) for rel in p.meaning.values()
             if not rel or len(next(iter(rel))) == 1}
    assert {frozenset({0}), frozenset({1}), frozenset()} <= unary
    l, k = program_width(p)
    assert l <= 1 and k <= 2


def test_materialized_empty_relations():
    t = TemplateHandle.finite(Structure(Signature.of(lt=2), [0, 1], {}))
    p = materialize_canonical_program(t, 1, 2)
    # only the empty relation can be learnt: any fact refutes
    assert all(not rel for rel in p.meaning.values())


@pytest.mark.parametrize("template", [ORDER2, clique(2, "lt")], ids=["order", "k2"])
def test_materialized_matches_fixpoint(template):
    t = TemplateHandle.finite(template)
    p = materialize_canonical_program(t, 1, 2)
    rng = random.Random(17)
    for _ in range(100):
        s = random_digraph(rng, rng.randint(1, 6), 0.3, loops=rng.random() < 0.2, symbol="lt")
        assert derives_false(p, s) == establish_lk_consistency(s, t, 1, 2).failed


# arc-consistency -----------------------------------------------------------


def test_ac_k4(k3):
    res = arc_consistency(clique(4), k3)
    assert res.accepted and all(len(d) == 3 for d in res.domains.values())
    assert brute_hom(clique(4), k3.structure) is None


def test_ac_implication_conflict(impl):
    s = Structure(impl.signature, ["x", "y"], {"one": [("x",)], "impl": [("x", "y")], "zero": [("y",)]})
    assert arc_consistency(s, impl).failed
    assert arc_consistency(Structure(impl.signature, [], {}), impl).accepted


def test_ac_variants_agree(impl, k2, k3):
    rng = random.Random(4)
    for _ in range(300):
        n = rng.randint(1, 4)
        v = list(range(n))
        facts = [("impl", (a, b)) for a in v for b in v if rng.random() < 0.25]
        facts += [("one", (a,)) for a in v if rng.random() < 0.15]
        facts += [("zero", (a,)) for a in v if rng.random() < 0.15]
        s = Structure.from_facts(impl.signature, facts, domain=v)
        a = arc_consistency(s, impl).accepted
        assert a == arc_consistency_classes(s, impl).accepted
        joint = arc_consistency(s, impl, joint=True).accepted
        assert joint == arc_consistency_classes(s, impl, joint=True).accepted
        # the implication relation is reflexive, so repeats never matter here
        assert a == joint == establish_lk_consistency(s, impl, 1, 2).accepted
        # the power-structure characterisation of AC acceptance
        assert a == hom_exists(s, power_structure(impl))


def test_power_structures(qorder, henson, k2):
    ps = power_structure(k2)
    both = frozenset(k2.structure.domain)
    assert ps.holds("E", (both, both))
    assert len(ps.domain) == 3
    for t in (qorder, henson):
        ps = power_structure(t)
        (v,) = ps.domain
        assert ps.holds("E", (v, v))


def test_power_structure_is_arc_consistent(k2, k3, impl):
    for t in (k2, k3, impl):
        assert arc_consistency(power_structure(t), t).accepted


def test_joint_reading_refutes_loops(k2):
    loop = digraph([("a", "a")])
    assert arc_consistency(loop, k2).accepted
    assert arc_consistency(loop, k2, joint=True).failed


def test_finite_class_ac_matches_values(k2, k3):
    rng = random.Random(8)
    for t in (k2, k3):
        for _ in range(50):
            s = random_digraph(rng, rng.randint(1, 5), 0.3, loops=True)
            for joint in (False, True):
                assert arc_consistency(s, t, joint).accepted == \
                    arc_consistency_classes(s, t, joint).accepted


def test_power_cap():
    with pytest.raises(ValueError):
        power_structure(TemplateHandle.finite(clique(6)))


def test_ac_solves(k2, impl, qorder, henson):
    assert not ac_solves(k2)
    assert arc_consistency(directed_cycle(3), TemplateHandle.finite(clique(2))).accepted
    assert ac_solves(impl)
    assert not ac_solves(qorder)
    assert not ac_solves(henson)
