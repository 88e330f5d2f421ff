import pytest
from hypothesis import given, settings, strategies as st

from conftest import data_path, find, load
from declafl.ast import (
    paragraph_body, parse, parse_file, pretty_print, print_node, sig_fields, structurally_equal,
)
from declafl.errors import ParseError, UnknownNode
from declafl.mutation import apply_op
from declafl.randgen import random_model_source

BUNDLED = ["farmer_faulty.mdl", "farmer_correct.mdl", "sll.mdl", "bt.mdl", "friends.mdl", "rbac.mdl"]


def test_sig_with_two_fields():
    m = parse("sig State { near, far: set Object }")
    (p,) = m.paragraphs
    assert (p.op, p.name) == ("sig", "State")
    assert [f.name for f in sig_fields(p)] == ["near", "far"]


def test_empty_source():
    assert parse("").paragraphs == []


def test_farmer_paragraphs(farmer_faulty):
    names = [(p.op, p.name) for p in farmer_faulty.paragraphs]
    assert names == [
        ("sig", "Object"), ("sig", "Farmer"), ("sig", "Fox"), ("sig", "Chicken"), ("sig", "Grain"),
        ("fact", "eating"), ("sig", "State"), ("fact", "initialState"), ("pred", "crossRiver"),
        ("fact", "stateTransition"), ("pred", "solvePuzzle"),
    ]
    assert [(o.sig, o.alias) for o in farmer_faulty.orderings] == [("State", "ord")]


@pytest.mark.parametrize("src, line, col", [
    ("sig {", 1, 5),
    ("sig A {}\nfact { some }", 2, 13),
    ("pred p { a && }", 1, 15),
])
def test_syntax_errors_carry_position(src, line, col):
    with pytest.raises(ParseError) as e:
        parse(src)
    assert (e.value.line, e.value.col) == (line, col)


def test_round_trip_small():
    m = parse("sig A {}")
    assert structurally_equal(parse(pretty_print(m)), m)


@pytest.mark.parametrize("name", BUNDLED)
def test_round_trip_bundled(name):
    m = parse_file(data_path(name))
    text = pretty_print(m)
    again = parse(text)
    assert structurally_equal(again, m)
    assert pretty_print(again) == text
    assert len(again.nodes) == len(m.nodes)


def test_mutated_print_shows_operator(farmer_faulty):
    n = find(farmer_faulty, "from' = from - Farmer - item && to' = to - to.eats + Farmer + item")
    mut = apply_op("LOR", "or", n.id, farmer_faulty)
    text = pretty_print(mut.model)
    assert "from' = from - Farmer - item || to' = to - to.eats + Farmer + item" in text
    assert print_node(mut.model.nodes[n.id]).count("||") == 1


def test_spans_cover_source(farmer_faulty):
    src = farmer_faulty.source
    n = find(farmer_faulty, "from - Farmer")
    assert src[n.span.start:n.span.end] == "from - Farmer"
    assert n.span.line == src[:n.span.start].count("\n") + 1


def test_implies_else_arity():
    m = parse("pred p { a => b else c }")
    ite = next(n for n in m.nodes if n.op == "ite")
    assert len(ite.children) == 3
    assert len(m.descendants(ite.id)) == 3


def test_leaf_descendants():
    m = parse("pred p { a }")
    leaf = m.nodes[-1]
    assert m.descendants(leaf.id) == []
    assert m.descendants(leaf.id, inclusive=True) == [leaf.id]


def test_descendants_brute_force(farmer_faulty):
    body = paragraph_body(farmer_faulty.preds["crossRiver"])
    walked = sorted(n.id for n in body.walk() if n is not body)
    assert farmer_faulty.descendants(body.id) == walked
    assert farmer_faulty.descendant_count(body.id) == len(walked)


def test_unknown_node(farmer_faulty):
    with pytest.raises(UnknownNode):
        farmer_faulty.descendants(10**6)
    with pytest.raises(UnknownNode):
        farmer_faulty.parent(-1)


@pytest.mark.parametrize("name", BUNDLED)
def test_tree_invariants(name):
    m = load(name)
    roots = [n.id for n in m.nodes if m.parent(n.id) is None]
    assert roots == [m.root.id]
    for n in m.nodes:
        assert m.nodes[n.id] is n
        assert m.descendant_count(n.id) == sum(1 + m.descendant_count(c.id) for c in n.children)
        for c in n.children:
            assert m.parent(c.id) == n.id


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 10**6))
def test_round_trip_random_models(seed):
    src = random_model_source(seed)
    m = parse(src)
    assert structurally_equal(parse(pretty_print(m)), m)
