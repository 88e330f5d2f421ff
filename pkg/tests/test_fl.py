import math
import random

import pytest
from hypothesis import given, settings, strategies as st

from conftest import find, model_of, random_parents, tree_model
from declafl.errors import NoFailingTests, NoUnsatFailures
from declafl.fl import (
    DSTAR_CAP, FORMULAS, Entry, Formula, HitMap, collapse_report, compute_suspiciousness,
    fl_co, fl_hy, fl_mu, fl_su, fl_un, hy_scores, localize, rank, record_core_hit,
)
from declafl.fl.techniques import body_root, co_scores, mu_scores, mutation_sites
from declafl.suite import load_suite_text, run_tests


# -- formulas ---------------------------------------------------------------------


def test_ochiai_zero_failed_is_zero():
    assert Formula("ochiai")(0, 3, 2, 5) == 0.0


def test_tarantula_full_fail_zero_pass_is_one():
    assert Formula("tarantula")(4, 0, 4, 7) == 1.0


def test_dstar_hand_value():
    # 3^2 / (1 + (4 - 3))
    assert Formula("dstar")(3, 1, 4, 2) == pytest.approx(4.5)


def test_dstar_exponent_three():
    # 2^3 / (1 + 1)
    assert Formula("dstar", 3)(2, 1, 3, 4) == pytest.approx(4.0)


def test_dstar_zero_denominator_capped():
    assert Formula("dstar")(2, 0, 2, 9) == DSTAR_CAP


def test_op2_may_be_negative():
    assert Formula("op2")(0, 2, 1, 3) == pytest.approx(-0.5)


@pytest.mark.parametrize("name", FORMULAS)
def test_no_failing_tests_rejected(name):
    with pytest.raises(NoFailingTests):
        Formula(name)(0, 0, 0, 3)


@pytest.mark.parametrize("args", [(2, 0, 1, 0), (0, 3, 1, 2), (-1, 0, 1, 0)])
def test_counts_out_of_range(args):
    with pytest.raises(ValueError):
        compute_suspiciousness(Formula(), *args)


def test_bad_formula_arguments():
    with pytest.raises(ValueError):
        Formula("nope")
    with pytest.raises(ValueError):
        Formula("dstar", 0)


@pytest.mark.parametrize("name", FORMULAS)
def test_formulas_monotone_on_grid(name):
    f = Formula(name)
    for tf in range(1, 6):
        for tp in range(0, 6):
            for fe in range(tf + 1):
                for pe in range(tp + 1):
                    s = f(fe, pe, tf, tp)
                    if fe < tf:
                        assert f(fe + 1, pe, tf, tp) >= s - 1e-12
                    if pe < tp:
                        assert f(fe, pe + 1, tf, tp) <= s + 1e-12


@settings(max_examples=200, deadline=None)
@given(st.sampled_from(FORMULAS), st.integers(1, 30), st.integers(0, 30), st.data())
def test_formula_finite_and_bounded(name, tf, tp, data):
    fe = data.draw(st.integers(0, tf))
    pe = data.draw(st.integers(0, tp))
    s = Formula(name)(fe, pe, tf, tp)
    assert math.isfinite(s)
    if name in ("tarantula", "ochiai", "barinel"):
        assert 0.0 <= s <= 1.0
    if name == "dstar":
        assert 0.0 <= s <= DSTAR_CAP


# -- hit-map ----------------------------------------------------------------------

# 0 -> {1, 4}; 1 -> {2, 3}; 4 -> {5}
SMALL = [None, 0, 1, 1, 0, 4]


def test_hit_first_record_counts_subtree():
    m = tree_model(SMALL)
    h = record_core_hit(HitMap(), m, [1])
    assert [h[i] for i in range(6)] == [0, 1, 1, 1, 0, 0]


def test_hit_overlapping_second_record():
    m = tree_model(SMALL)
    h = record_core_hit(HitMap(), m, [2])
    record_core_hit(h, m, [1])
    assert [h[i] for i in range(6)] == [0, 1, 2, 1, 0, 0]


def test_hit_leaf_only():
    m = tree_model(SMALL)
    h = record_core_hit(HitMap(), m, [5])
    assert [h[i] for i in range(6)] == [0, 0, 0, 0, 0, 1]


def test_hit_nested_nodes_in_one_record_count_once():
    m = tree_model(SMALL)
    h = record_core_hit(HitMap(), m, [1, 2, 3])
    assert [h[i] for i in range(6)] == [0, 1, 1, 1, 0, 0]


def test_fronts_exclude_root():
    m = tree_model(SMALL)
    h = record_core_hit(HitMap(), m, [0])
    assert h.fronts(m) == []
    record_core_hit(h, m, [4])
    assert sorted(h.fronts(m)) == [4]


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_hit_child_at_least_parent(seed):
    rng = random.Random(seed)
    parents = random_parents(rng, rng.randint(1, 25))
    m = tree_model(parents)
    h = HitMap()
    for _ in range(rng.randint(1, 6)):
        record_core_hit(h, m, rng.sample(range(len(parents)), rng.randint(0, min(3, len(parents)))))
        for i, p in enumerate(parents):
            if p is not None:
                assert h[i] >= h[p]


# -- ranking and collapse ---------------------------------------------------------


def test_rank_ties_prefer_smaller_subtree_then_id():
    m = tree_model(SMALL)
    r = rank(m, {1: 0.5, 4: 0.5, 2: 0.5, 3: 0.9})
    assert [e.node_id for e in r] == [3, 2, 4, 1]


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.01, 100))
def test_rank_permutation_and_scaling_invariant(seed, c):
    rng = random.Random(seed)
    parents = random_parents(rng, rng.randint(2, 20))
    m = tree_model(parents)
    scores = {i: float(rng.randint(0, 3)) for i in range(len(parents)) if rng.random() < 0.7}
    base = [e.node_id for e in rank(m, scores)]
    items = list(scores.items())
    rng.shuffle(items)
    assert [e.node_id for e in rank(m, dict(items))] == base
    assert [e.node_id for e in rank(m, {n: s * c for n, s in items})] == base
    assert len(set(base)) == len(base)


def test_collapse_parent_and_children_equal():
    m = tree_model(SMALL)
    out = collapse_report(m, [Entry(2, 0.5), Entry(3, 0.5), Entry(1, 0.5)])
    assert out == [Entry(1, 0.5)]


def test_collapse_not_when_scores_differ():
    m = tree_model(SMALL)
    r = [Entry(1, 0.5), Entry(2, 0.4)]
    assert collapse_report(m, r) == r


def test_collapse_keeps_order_of_survivors():
    m = tree_model(SMALL)
    r = [Entry(5, 0.9), Entry(2, 0.7), Entry(4, 0.9), Entry(1, 0.7), Entry(3, 0.1)]
    assert collapse_report(m, r) == [Entry(4, 0.9), Entry(1, 0.7), Entry(3, 0.1)]


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_collapse_removes_only_equal_descendants(seed):
    rng = random.Random(seed)
    parents = random_parents(rng, rng.randint(2, 20))
    m = tree_model(parents)
    scores = {i: float(rng.randint(1, 2)) for i in range(len(parents)) if rng.random() < 0.6}
    r = rank(m, scores)
    out = collapse_report(m, r)
    kept = {e.node_id for e in out}
    assert kept <= set(scores)
    for n in set(scores) - kept:
        anc = m.parent(n)
        while anc is not None and not (anc in kept and scores[anc] == scores[n]):
            anc = m.parent(anc)
        assert anc is not None
    # no survivor has an equally scored surviving ancestor
    for n in kept:
        anc = m.parent(n)
        while anc is not None:
            assert not (anc in kept and scores[anc] == scores[n])
            anc = m.parent(anc)


# -- techniques on small models ---------------------------------------------------

SMALL_MODEL = """
sig A { r: set A }
sig B {}
fact F { some A }
pred p { some r }
pred q { no B }
"""


def small():
    m = model_of(SMALL_MODEL)
    suite = load_suite_text("""
pred t1 { no A }
run t1 for 2 expect 1
pred t2 { p }
run t2 for 2 expect 1
pred t3 { q }
run t3 for 2 expect 1
""", m)
    return m, suite


def test_co_ranks_failing_fact_first():
    m, suite = small()
    rs = run_tests(m, suite)
    assert [r.passed for r in rs] == [False, True, True]
    r = fl_co(m, suite, results=rs)
    fact = m.facts[0]
    assert r[0].node_id == body_root(fact).id
    assert r[0].score == pytest.approx(1 / math.sqrt(1 * 3))
    # signature A is used by every test, like the fact
    assert r[1].node_id == m.sigs["A"].id and r[1].score == r[0].score
    # paragraphs no failing test uses trail at 0
    assert {e.node_id for e in r if e.score == 0} == {
        m.sigs["B"].id, body_root(m.preds["p"]).id, body_root(m.preds["q"]).id}


def test_co_in_paragraph_nodes_share_score():
    m, suite = small()
    sc = co_scores(m, suite)
    f = m.facts[0]
    assert {sc[n] for n in m.descendants(f.id, inclusive=True)} == {sc[f.id]}


def test_co_smaller_paragraph_first_on_ties():
    m = model_of("sig A {}\nfact big { some A && some A && some A }\nfact small { some A }\n")
    suite = load_suite_text("pred t { no A }\nrun t for 1 expect 1\n", m)
    r = fl_co(m, suite)
    big, sm = m.facts
    ids = [e.node_id for e in r]
    assert r[ids.index(body_root(sm).id)].score == r[ids.index(body_root(big).id)].score
    assert ids.index(body_root(sm).id) < ids.index(body_root(big).id)


def test_un_single_core():
    m = model_of("sig A {}\nfact F { no A }\n")
    suite = load_suite_text("pred t { some A }\nrun t for 1 expect 1\n", m)
    r = fl_un(m, suite)
    assert r[0].node_id == find(m, "no A").id


def test_un_requires_unsat_failure():
    m = model_of("sig A {}\n")
    suite = load_suite_text("pred t { some A }\nrun t for 1 expect 0\n", m)
    with pytest.raises(NoUnsatFailures):
        fl_un(m, suite)


def test_su_uses_coverage_for_sat_failures():
    m = model_of("sig A {}\npred p { some A }\n")
    suite = load_suite_text("pred t { p }\nrun t for 1 expect 0\n", m)
    r = fl_su(m, suite)
    # the test module is separate: the model fronts are p and the sig it uses
    assert sorted(e.node_id for e in r) == sorted([m.sigs["A"].id, m.preds["p"].id])


def test_no_failing_tests_rejected_by_techniques():
    m = model_of("sig A {}\n")
    suite = load_suite_text("pred t { some A }\nrun t for 1 expect 1\n", m)
    for tech in ("co", "un", "su", "mu", "hy"):
        with pytest.raises(NoFailingTests):
            localize(tech, m, suite)


def test_mu_node_killed_by_all_failing_only():
    # the fact is the only constraint the failing test trips over
    m = model_of("sig A {}\nfact F { no A }\npred other { some A }\n")
    suite = load_suite_text("pred t { some A }\nrun t for 2 expect 1\n", m)
    r = fl_mu(m, suite)
    top = r[0]
    assert top.score == pytest.approx(1.0)
    assert m.paragraph_of(top.node_id) is m.facts[0]
    # predicate `other` is not covered by the failing test
    other = m.preds["other"]
    assert all(m.paragraph_of(e.node_id) is not other for e in r)


@pytest.mark.parametrize("name", FORMULAS)
def test_mu_scores_bounded_and_covered(name):
    m, suite = small()
    rs = run_tests(m, suite)
    sites = set(mutation_sites(m, rs))
    ms = mu_scores(m, suite, Formula(name), results=rs)
    assert ms.evaluated > 0
    for n, s in ms.scores.items():
        assert n in sites
        assert 0.0 <= s <= DSTAR_CAP


def test_hy_average():
    assert hy_scores({1: 0.8, 2: 0.3}, {1: 0.4}) == {1: pytest.approx(0.6), 2: 0.3}


def test_hy_uses_co_for_unmutable_nodes():
    m = model_of("sig A {}\nfact F { no A }\npred other { some A }\n")
    suite = load_suite_text("pred t { some A }\nrun t for 2 expect 1\n", m)
    co = co_scores(m, suite)
    mu = mu_scores(m, suite).scores
    h = {e.node_id: e.score for e in fl_hy(m, suite)}
    for n, s in h.items():
        expect = (co[n] + mu[n]) / 2 if n in mu else co[n]
        assert s == pytest.approx(expect)


def test_unknown_technique():
    m, suite = small()
    with pytest.raises(ValueError):
        localize("xx", m, suite)
