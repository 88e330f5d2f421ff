import pytest

from conftest import data_path, model_of
from declafl.errors import UnmatchedCommand
from declafl.finder import Session
from declafl.finder.oracle import brute_force_sat
from declafl.scope import Scope
from declafl.suite import (
    classify, default_expect, load_suite, load_suite_text, model_suite, run_tests, summarize,
)


@pytest.mark.parametrize("status, expect, passed", [
    ("sat", True, True), ("sat", False, False), ("unsat", True, False), ("unsat", False, True),
])
def test_classify(status, expect, passed):
    assert classify(status, expect) is passed


def test_default_expectations():
    assert default_expect("run", None) is True
    assert default_expect("check", None) is False
    assert default_expect("run", 0) is False
    assert default_expect("check", 1) is True


def test_farmer_test1_suite(farmer_faulty, farmer_correct, session):
    (t,) = load_suite(data_path("farmer_test1.tst"), farmer_faulty)
    assert (t.name, t.kind, t.scope, t.expect) == ("test1", "run", Scope(4), True)
    (r,) = run_tests(farmer_faulty, [t], session=session)
    assert (r.status, r.passed) == ("unsat", False)
    (t,) = load_suite(data_path("farmer_test1.tst"), farmer_correct)
    (r,) = run_tests(farmer_correct, [t], session=session)
    assert (r.status, r.passed) == ("sat", True)


def test_pred_without_command_warns():
    m = model_of("sig A {}\n")
    with pytest.warns(UserWarning):
        assert load_suite_text("pred t { some A }\n", m) == []


def test_two_commands_on_one_pred():
    m = model_of("sig A {}\n")
    suite = load_suite_text("pred t { some A }\nrun t for 1\nrun t for 2 expect 0\n", m)
    assert [(t.name, t.scope.default, t.expect) for t in suite] == [("t#1", 1, True), ("t#2", 2, False)]


def test_unmatched_command():
    m = model_of("sig A {}\n")
    with pytest.raises(UnmatchedCommand):
        load_suite_text("run nothing for 1\n", m)


def test_simple_run_passes():
    m = model_of("sig A {}\n")
    (r,) = run_tests(m, load_suite_text("run { some A } for 1\n", m))
    assert (r.status, r.passed) == ("sat", True)


def test_check_against_enumeration():
    m = model_of("sig A {}\nfact { some A }\n")
    suite = load_suite_text("check { no A } for 1\n", m)
    (r,) = run_tests(m, suite)
    t = suite[0]
    counterexample = brute_force_sat(m, "check", t.target, t.scope, t.module)
    assert (r.status == "sat") == counterexample
    assert r.passed == (not counterexample)
    assert (r.status, r.passed) == ("sat", False)


def test_order_and_idempotence(farmer_faulty, farmer_suite, session):
    a = run_tests(farmer_faulty, farmer_suite, session=session)
    b = run_tests(farmer_faulty, farmer_suite, session=Session())
    assert [r.test.name for r in a] == [t.name for t in farmer_suite]
    assert [(r.status, r.passed) for r in a] == [(r.status, r.passed) for r in b]


def test_cores_only_for_failing_unsat(farmer_faulty, farmer_suite, session):
    rs = run_tests(farmer_faulty, farmer_suite, want_cores=True, session=session)
    for r in rs:
        assert (r.core is not None) == (r.failed and r.status == "unsat")
    assert all(r.core is None for r in run_tests(farmer_faulty, farmer_suite, session=session))


def test_errored_tests_are_excluded():
    m = model_of("sig A { r: set A }\n")
    suite = load_suite_text("run { some r } for 3\nrun { no A } for 1 expect 0\n", m)
    rs = run_tests(m, suite, session=Session(max_vars=5))
    assert rs[0].errored and not rs[0].failed and not rs[0].passed
    s = summarize(rs)
    assert (s.errored, s.failed, s.passed) == (1, 1, 0)


def test_model_commands_as_suite():
    m = model_of("sig A {}\nrun { some A } for 2\ncheck { some A } for 2\n")
    rs = run_tests(m, model_suite(m))
    assert [(r.status, r.passed) for r in rs] == [("sat", True), ("sat", False)]
