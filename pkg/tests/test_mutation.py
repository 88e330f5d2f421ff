import warnings

import pytest
from hypothesis import given, settings, strategies as st

from conftest import find, load, model_of
from declafl.ast import paragraph_body, params, pretty_print, print_node, structurally_equal
from declafl.errors import DeclaflError, Exhausted, InvalidMutant
from declafl.finder import Session
from declafl.finder.evaluate import Evaluator
from declafl.finder.oracle import count_valuations, enumerate_instances
from declafl.mutation import (
    apply_op, applicable_ops, compose, first_order_mutants, generate_killing_tests, is_equivalent,
    second_order_mutants,
)
from declafl.randgen import random_model_source
from declafl.scope import Scope
from declafl.suite import run_test, run_tests


def mutated_text(mut):
    return print_node(mut.model.node(mut.map_id(mut.node_id)), 0)


# -- operators --------------------------------------------------------------------

OPS = """
sig A { r: set A }
sig B {}
pred biimp { some A <=> some B }
pred dot[a: A] { some a.r }
pred minus { some A - B.~(A->B) }
pred branch { some A => some B else no B }
pred conj { some A && some B }
pred uni { some A + A }
"""


def test_bor_iff_to_implies():
    m = model_of(OPS)
    n = find(m, "some A <=> some B")
    assert ("BOR", "implies") in applicable_ops(m, n.id)
    assert mutated_text(apply_op("BOR", "implies", n.id, m)) == "some A => some B"


def test_uoi_inserts_transpose():
    m = model_of(OPS)
    n = find(m, "a.r")
    r = n.children[1]
    assert ("UOI", "transpose") in applicable_ops(m, r.id)
    mut = apply_op("UOI", "transpose", r.id, m)
    assert print_node(mut.model.node(mut.map_id(n.id)), 0) == "a.~r"


def test_leaf_has_no_uod():
    m = model_of(OPS)
    leaf = find(m, "a.r").children[0]
    assert all(op != "UOD" for op, _ in applicable_ops(m, leaf.id))


def test_lor_and_to_or():
    m = model_of(OPS)
    n = find(m, "some A && some B")
    assert mutated_text(apply_op("LOR", "or", n.id, m)) == "some A || some B"


def test_boe_swaps_difference():
    m = model_of(OPS)
    n = find(m, "A - B.~(A->B)")
    assert mutated_text(apply_op("BOE", 0, n.id, m)) == "B.~(A->B) - A"


def test_ieoe_swaps_branches():
    m = model_of(OPS)
    n = find(m, "some A => some B else no B")
    assert mutated_text(apply_op("IEOE", 0, n.id, m)) == "some A => no B else some B"


def test_inapplicable_rejected():
    m = model_of(OPS)
    n = find(m, "some A && some B")
    with pytest.raises(InvalidMutant):
        apply_op("IEOE", 0, n.id, m)


def test_mor_and_pbd_on_signature():
    m = model_of("sig A {} { some A }\n")
    sig = m.sigs["A"]
    assert set(applicable_ops(m, sig.id)) == {("MOR", "one"), ("MOR", "lone")}
    mut = apply_op("MOR", "one", sig.id, m)
    assert mut.model.sigs["A"].attrs["mult"] == "one"
    fact = sig.children[-1]
    assert ("PBD", 0) in applicable_ops(m, fact.id)
    assert apply_op("PBD", 0, fact.id, m).model.sigs["A"].children == []


@pytest.mark.parametrize("name", ["farmer_faulty.mdl", "sll.mdl", "friends.mdl", "rbac.mdl"])
def test_mutants_differ_only_at_target(name):
    m = load(name)
    for mut in first_order_mutants(m):
        assert not structurally_equal(mut.model, m)
        home = m.paragraph_of(mut.node_id)
        for p, q in zip(m.paragraphs, mut.model.paragraphs):
            if p is not home:
                assert structurally_equal(p, q)
        # nodes before the target in pre-order keep their ids and operators
        for i in range(mut.node_id):
            assert m.nodes[i].op == mut.model.nodes[i].op


def test_mutant_order_is_deterministic():
    m = load("sll.mdl")
    assert [x.key for x in first_order_mutants(m)] == sorted(x.key for x in first_order_mutants(m))


# -- equivalence ------------------------------------------------------------------


def test_commutative_union_equivalent():
    m = model_of("sig A {}\nsig B {}\npred p { some A + B }\n")
    n = find(m, "A + B")
    swapped = model_of("sig A {}\nsig B {}\npred p { some B + A }\n")
    assert is_equivalent(m, swapped, Scope(2))
    # BOE applies only to non-commutative ops; the union has none
    assert ("BOE", 0) not in applicable_ops(m, n.id)


def test_pbd_on_excluding_fact_not_equivalent():
    m = model_of("sig A {}\nfact F { lone A }\n")
    body = paragraph_body(m.facts[0])
    mut = apply_op("PBD", 0, body.id, m)
    assert not is_equivalent(m, mut, Scope(2))
    # enumeration: the instance sets differ
    scope = Scope(2)
    a = {frozenset(i.rel("A")) for i in enumerate_instances(m, scope) if Evaluator(m, i).facts_ok()}
    b = {frozenset(i.rel("A")) for i in enumerate_instances(mut.model, scope) if Evaluator(mut.model, i).facts_ok()}
    assert a != b


def test_qor_all_to_some_not_equivalent():
    m = model_of("sig A {}\npred p { all a: A | no a }\n")
    q = find(m, "all a: A | no a")
    mut = apply_op("QOR", "some", q.id, m)
    assert not is_equivalent(m, mut, Scope(1))


def equivalence_oracle(m, mut, scope):
    """Instance-by-instance comparison of facts, parameterless predicates
    and assertions."""
    mm = mut.model
    for inst in enumerate_instances(m, scope):
        eo, em = Evaluator(m, inst), Evaluator(mm, inst)
        if not eo.structural_ok():
            continue
        fo, fm = eo.facts_ok(), em.facts_ok()
        if fo != fm:
            return False
        if not fo:
            continue
        for name, p in m.preds.items():
            if params(p):
                continue
            if eo.formula(paragraph_body(p), {}, m) != em.formula(paragraph_body(mm.preds[name]), {}, mm):
                return False
        for name, a in m.asserts.items():
            if eo.formula(paragraph_body(a), {}, m) != em.formula(paragraph_body(mm.asserts[name]), {}, mm):
                return False
    return True


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6))
def test_equivalence_matches_enumeration(seed):
    try:
        m = model_of(random_model_source(seed))
    except DeclaflError:
        return
    scope = m.commands[0].scope
    if count_valuations(m, scope) > 1 << 10:
        return
    s = Session()
    for mut in list(first_order_mutants(m))[:12]:
        home = m.paragraph_of(mut.node_id)
        if mut.op == "MOR" or home.op == "sig" or (home.op == "pred" and params(home)):
            continue
        assert is_equivalent(m, mut, scope, s) == equivalence_oracle(m, mut, scope)


# -- killing tests ----------------------------------------------------------------


def test_pbd_killing_test_encodes_empty_instance():
    m = model_of("sig A {}\nfact F { some A }\n")
    pbd = apply_op("PBD", 0, paragraph_body(m.facts[0]).id, m)
    ks = generate_killing_tests(m, Scope(2), mutants=[pbd])
    (gt,) = ks.generated
    assert gt.expect is False
    assert "no A" in gt.body
    (t,) = ks.tests
    # enumeration: the empty instance violates the original and fits the mutant
    assert (run_test(m, t).status, run_test(pbd.model, t).status) == ("unsat", "sat")


def test_no_live_mutants_no_tests():
    m = model_of("sig A {}\nsig B {}\npred p { some A + B }\n")
    eq = model_of("sig A {}\nsig B {}\npred p { some B + A }\n")
    ks = generate_killing_tests(m, Scope(2), mutants=[])
    assert ks.tests == [] and ks.text == ""
    assert is_equivalent(m, eq, Scope(2))


def test_generated_tests_pass_on_original(farmer_correct):
    ks = generate_killing_tests(farmer_correct, Scope(4), Session(),
                                mutants=list(first_order_mutants(farmer_correct))[:30])
    assert ks.tests
    assert all(r.passed for r in run_tests(farmer_correct, ks.tests))


def test_reuse_keeps_suite_smaller():
    m = load("friends.mdl")
    s = Session()
    small = generate_killing_tests(m, Scope(3), s)
    full = generate_killing_tests(m, Scope(3), s, reuse=False)
    assert len(small.tests) <= len(full.tests)
    assert len(small.mutants) == len(full.mutants)


# -- second-order mutants ---------------------------------------------------------


def test_second_order_zero():
    assert second_order_mutants(load("sll.mdl"), 0, 1) == []


def test_compose_keeps_both():
    m = model_of(OPS)
    a = apply_op("LOR", "or", find(m, "some A && some B").id, m)
    b = apply_op("BOR", "implies", find(m, "some A <=> some B").id, m)
    c = compose(a, b)
    text = pretty_print(c.model)
    assert "some A || some B" in text and "some A => some B }" in text
    assert len(c.parts) == 2
    with pytest.raises(InvalidMutant):
        compose(a, apply_op("LOD", 0, find(m, "some A && some B").id, m))


def test_second_order_deterministic_and_killed():
    m = load("sll.mdl")
    s = Session()
    suite = generate_killing_tests(m, Scope(3), s).tests
    a = second_order_mutants(m, 5, 42, suite, session=s)
    b = second_order_mutants(m, 5, 42, suite, session=Session())
    assert [x.parts for x in a] == [x.parts for x in b]
    assert len(a) == 5
    for x in a:
        (p, q) = x.parts
        assert p[0] != q[0]
        ro = run_tests(m, suite, session=s)
        rm = run_tests(x.model, suite, session=s)
        assert any(u.status != v.status for u, v in zip(ro, rm))


def test_second_order_exhausted():
    m = model_of("sig A {}\nfact F { some A }\n")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        with pytest.raises(Exhausted) as e:
            second_order_mutants(m, 10**4, 0, scope=Scope(2))
    assert isinstance(e.value.mutants, list)
