import pytest

from conftest import find, load, model_of
from declafl.analysis import covered_paragraphs, dependency_graph, static_coverage
from declafl.errors import ArityError, NameResolutionError, UnknownTest
from declafl.scope import Scope
from declafl.suite import TestCase, load_suite_text


def cov_names(model, test):
    return {p.name for p in covered_paragraphs(model, test)}


def test_param_reference_resolves_to_variable():
    m = model_of("sig S {}\npred p[s: S] { some s }")
    ref = find(m, "s")
    assert m.resolution[ref.id] == ("var", "s")


def test_farmer_call_resolves(farmer_faulty):
    calls = [n for n in farmer_faulty.nodes if n.op == "call" and n.name == "crossRiver"]
    assert len(calls) == 2
    for c in calls:
        assert farmer_faulty.resolution[c.id] == ("pred", "crossRiver")
        assert len(c.children) == 4


def test_undeclared_name():
    with pytest.raises(NameResolutionError) as e:
        model_of("sig A {}\nfact { some Q }")
    assert e.value.identifier == "Q"


def test_wrong_arity():
    with pytest.raises(ArityError):
        model_of("sig A {}\npred p[x: A] { some x }\nfact { p[A, A] }")


def test_unused_binding_prunes_dependency():
    m = model_of("sig S {}\nsig T {}\npred p[x: S] { some x }\n")
    (t,) = load_suite_text("pred t { all s: S, t: T | some s && p[s] }\nrun t for 2\n", m)
    assert cov_names(m, t) == {"S", "p"}


def test_facts_always_covered():
    m = model_of("sig A {}\nsig B {}\nfact F { some B }\n")
    (t,) = load_suite_text("pred t { some A }\nrun t for 1\n", m)
    cov = static_coverage(m, t)
    assert set(m.descendants(m.facts[0].id, inclusive=True)) <= cov
    assert cov_names(m, t) == {"A", "B", "F"}


def test_field_use_covers_owner():
    m = model_of("sig A { r: set B }\nsig B {}\nsig C {}\n")
    (t,) = load_suite_text("pred t { some r }\nrun t for 1\n", m)
    assert "A" in cov_names(m, t)
    assert "C" not in cov_names(m, t)


def test_ordering_counts_when_used(farmer_faulty):
    (t,) = load_suite_text("pred t { some ord/first }\nrun t for 2\n", farmer_faulty)
    assert "State" in cov_names(farmer_faulty, t)


def test_unknown_test():
    m = model_of("sig A {}\n")
    with pytest.raises(UnknownTest):
        static_coverage(m, TestCase("x", "run", "missing", Scope(1), True))


# -- reachability oracle ----------------------------------------------------------

CALLS = """
sig A { r: set A }
sig B {}
sig C {}
pred leaf { some B }
pred mid { leaf && some r }
pred top { mid }
pred lone_p { some C }
fun f: set A { A.r }
pred usesf { some f }
"""


def reach_oracle(model, module, target):
    """Paragraphs reachable from `target` through resolved references."""
    owner = {}
    for s in model.sigs.values():
        owner[s.name] = s.name
    for fname, s in model.field_owner.items():
        owner[fname] = s.name
    todo = [module.preds[target]]
    seen: set[str] = set()
    while todo:
        p = todo.pop()
        for n in p.walk():
            kind = (module.resolution.get(n.id) if module.owns(n) else model.resolution.get(n.id)) or ()
            if not kind:
                continue
            if kind[0] in ("sig", "field"):
                name = owner[kind[1]]
            elif kind[0] in ("pred", "fun"):
                name = kind[1]
            else:
                continue
            if name not in seen:
                seen.add(name)
                todo.append(model.find_paragraph(name))
    return seen


@pytest.mark.parametrize("body", ["top", "mid", "leaf", "lone_p", "usesf", "top && lone_p", "no A"])
def test_coverage_matches_reachability(body):
    m = model_of(CALLS)
    (t,) = load_suite_text(f"pred t {{ {body} }}\nrun t for 2\n", m)
    assert cov_names(m, t) == reach_oracle(m, t.module, "t")


def test_coverage_monotone_under_added_call():
    m = model_of(CALLS)
    (a,) = load_suite_text("pred t { mid }\nrun t for 2\n", m)
    (b,) = load_suite_text("pred t { mid && lone_p }\nrun t for 2\n", m)
    assert static_coverage(m, a) <= static_coverage(m, b)


def test_coverage_deterministic(farmer_faulty, farmer_suite):
    t = farmer_suite[0]
    assert static_coverage(farmer_faulty, t) == static_coverage(farmer_faulty, t)


def test_dependency_graph_edges():
    m = model_of(CALLS)
    g = dependency_graph(m)
    assert g.edges["top"] == {"mid"}
    assert g.edges["mid"] == {"leaf", "A"}
    for name, deps in g.edges.items():
        assert name not in deps


def test_dependency_graph_coverage(farmer_faulty, farmer_suite):
    g = dependency_graph(farmer_faulty, farmer_suite)
    assert set(g.coverage) == {t.name for t in farmer_suite}
    js = g.as_json()
    assert js["edges"]["stateTransition"] == ["Farmer", "State", "crossRiver"]
    assert js["edges"]["crossRiver"] == ["Farmer", "Object"]


def test_bundled_models_resolve():
    for name in ("sll.mdl", "bt.mdl", "friends.mdl", "rbac.mdl", "farmer_correct.mdl"):
        assert load(name).resolution is not None
