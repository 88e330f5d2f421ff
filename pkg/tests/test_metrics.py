import json
import random

import pytest
from hypothesis import given, settings, strategies as st

from conftest import data_path, load, random_parents, tree_model
from declafl.errors import NoFaultLabels, UnknownNode
from declafl.fl import Entry
from declafl.metrics import (
    METRICS, FaultLabel, Tree, fault_label, metric, nnd, nndw, nnud, select_node, top_k,
)


def worked_tree():
    return json.loads(data_path("worked_tree.json").read_text())


# -- oracles ----------------------------------------------------------------------


def all_pairs(parents):
    """Floyd-Warshall over the undirected parent/child edges."""
    n = len(parents)
    inf = float("inf")
    d = [[0 if i == j else inf for j in range(n)] for i in range(n)]
    for i, p in enumerate(parents):
        if p is not None:
            d[i][p] = d[p][i] = 1
    for k in range(n):
        for i in range(n):
            for j in range(n):
                if d[i][k] + d[k][j] < d[i][j]:
                    d[i][j] = d[i][k] + d[k][j]
    return d


def nnud_oracle(parents, ranked, faults, k):
    d = all_pairs(parents)
    top = ranked[:k]
    if not top:
        return 0
    radius = min(d[s][f] for s in top for f in faults)
    return sum(1 for v in range(len(parents)) if min(d[s][v] for s in top) <= radius)


def depth_below(parents, anc, v):
    """Edges from anc down to v, or None when v is not in anc's subtree."""
    d = 0
    while v is not None:
        if v == anc:
            return d
        v = parents[v]
        d += 1
    return None


def walk_oracle(parents, ranked, faults, worst):
    root = parents.index(None)
    seen: set[int] = set()
    for s in list(ranked) + [root]:
        if s in seen:
            continue
        sub = {v: depth_below(parents, s, v) for v in range(len(parents))}
        sub = {v: dv for v, dv in sub.items() if dv is not None}
        fdepths = [sub[f] for f in faults if f in sub]
        if not fdepths:
            seen |= set(sub)
            continue
        lim = min(fdepths)
        new = [v for v, dv in sub.items() if v not in seen and (worst or dv <= lim)]
        return len(seen) + len(new)
    raise AssertionError


def random_case(rng):
    n = rng.randint(1, 15)
    parents = random_parents(rng, n)
    faults = rng.sample(range(n), rng.randint(1, min(3, n)))
    ranked = rng.sample(range(n), rng.randint(0, n))
    return parents, ranked, faults


# -- worked tree --------------------------------------------------------------------


def test_worked_tree_values():
    fx = worked_tree()
    t = Tree(tuple(fx["parents"]))
    assert nnud(t, fx["ranking"], fx["faults"], 2) == fx["expected"]["nnud2"] == 6
    assert nnd(t, fx["ranking"], fx["faults"]) == fx["expected"]["nnd"] == 6
    assert nndw(t, fx["ranking"], fx["faults"]) == fx["expected"]["nndw"] == 10


def test_worked_tree_oracles_agree():
    fx = worked_tree()
    p = fx["parents"]
    assert nnud_oracle(p, fx["ranking"], fx["faults"], 2) == 6
    assert walk_oracle(p, fx["ranking"], fx["faults"], False) == 6
    assert walk_oracle(p, fx["ranking"], fx["faults"], True) == 10


# -- hand examples ----------------------------------------------------------------

SMALL = (None, 0, 1, 1, 0, 4)


def test_suspect_is_fault():
    t = Tree(SMALL)
    assert nnud(t, [3], [3], 1) == 1
    assert nnd(t, [3, 0], [3]) == 1
    assert nndw(t, [3], [3]) == 1


def test_faulty_root_subtree_walk():
    t = Tree(SMALL)
    # suspect 4 has no fault below: its 2 nodes are read, then the root
    # subtree down to the fault depth (0, 1, 2, 3 are new; 4 was seen)
    assert nnd(t, [4], [2]) == 2 + 4
    assert nndw(t, [4], [2]) == 6


def test_empty_ranking_falls_back_to_root():
    t = Tree(SMALL)
    # the fault sits at depth 2, the deepest level: every node is read
    assert nnd(t, [], [5]) == 6
    assert nnd(t, [], [5]) == walk_oracle(list(SMALL), [], [5], False)
    assert nndw(t, [], [5]) == 6
    assert nnud(t, [], [5], 3) == 0


def test_entries_accepted():
    t = Tree(SMALL)
    assert nnd(t, [Entry(3, 1.0)], [3]) == 1


def test_top_k():
    assert top_k([4, 1, 7], [4], 1) == 1
    assert top_k(list(range(20, 30)), [1, 2], 10) == 0
    # set-intersection oracle
    ranked, faults = [9, 3, 5, 8, 2, 1], {3, 2, 7}
    assert top_k(ranked, faults, 5) == len(set(ranked[:5]) & faults) == 2


def test_errors():
    t = Tree(SMALL)
    with pytest.raises(NoFaultLabels):
        nnd(t, [1], [])
    with pytest.raises(UnknownNode):
        nnd(t, [1], [17])
    with pytest.raises(ValueError):
        nnud(t, [1], [1], 0)
    with pytest.raises(NoFaultLabels):
        FaultLabel(frozenset())
    with pytest.raises(ValueError):
        metric("nope", t, [1], [1])
    with pytest.raises(ValueError):
        Tree((None, None))


def test_metric_dispatch():
    t = Tree(SMALL)
    assert metric("nnud1", t, [3], [3]) == 1
    assert metric("top1", t, [3], [3]) == 1
    assert metric("nndw", t, [4], [2]) == 6
    assert set(METRICS) >= {"nnud1", "nnud5", "nnud10", "nnd", "nndw", "top1", "top5", "top10"}


def test_metrics_on_model_tree():
    m = tree_model(list(SMALL))
    assert nnd(m, [4], [2]) == nnd(Tree(SMALL), [4], [2])


def test_fault_label_selectors():
    m = load("friends.mdl")
    n = next(x for x in m.nodes if x.op != "root" and x.span is not None and x.children)
    outer = select_node(m, {"span": [n.span.start, n.span.end]})
    assert m.nodes[outer].span == n.span
    assert m.depth(outer) <= m.depth(n.id)
    lab = fault_label(m, {"faulty_nodes": [{"node_id": n.id}, {"span": [n.span.start, n.span.end]}]})
    assert n.id in lab.faulty_nodes or outer in lab.faulty_nodes
    with pytest.raises(UnknownNode):
        select_node(m, {"span": [0, 0]})
    with pytest.raises(NoFaultLabels):
        fault_label(m, {"faulty_nodes": []})


# -- oracle equivalence and properties --------------------------------------------


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_metrics_match_oracles(seed):
    rng = random.Random(seed)
    parents, ranked, faults = random_case(rng)
    t = Tree(tuple(parents))
    for k in (1, 2, 5):
        assert nnud(t, ranked, faults, k) == nnud_oracle(parents, ranked, faults, k)
    assert nnd(t, ranked, faults) == walk_oracle(parents, ranked, faults, False)
    assert nndw(t, ranked, faults) == walk_oracle(parents, ranked, faults, True)


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_walk_properties(seed):
    rng = random.Random(seed)
    parents, ranked, faults = random_case(rng)
    t = Tree(tuple(parents))
    a, b = nnd(t, ranked, faults), nndw(t, ranked, faults)
    assert 1 <= a <= b <= len(parents)
    # a fault ranked first is found at once
    assert nnud(t, [faults[0]] + ranked, faults, 1) == 1
    assert nnd(t, [faults[0]] + ranked, faults) == 1
