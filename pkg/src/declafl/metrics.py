"""Localization accuracy metrics over an AST and labeled faulty nodes.

nnud: size of the tree-distance sphere around the top-k suspects, using
the smallest suspect-to-fault distance as the radius.
nnd / nndw: nodes a user inspects walking suspects downward in rank order
(the root appended last), stopping at the first suspect whose subtree holds
a fault; nnd stops at the fault's depth, nndw reads that whole subtree.
top_k: faulty nodes among the first k entries.
"""

from __future__ import annotations

import json
from collections import deque
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from pathlib import Path

from declafl.ast.nodes import Model
from declafl.errors import NoFaultLabels, UnknownNode


@dataclass(frozen=True)
class Tree:
    """Rooted tree given by a parent array (root has parent None)."""

    parents: tuple[int | None, ...]

    def __post_init__(self):
        roots = [i for i, p in enumerate(self.parents) if p is None]
        if len(roots) != 1:
            raise ValueError("a tree needs exactly one root")
        kids: list[list[int]] = [[] for _ in self.parents]
        for i, p in enumerate(self.parents):
            if p is not None:
                kids[p].append(i)
        object.__setattr__(self, "_kids", tuple(tuple(k) for k in kids))
        object.__setattr__(self, "root", roots[0])

    def __len__(self) -> int:
        return len(self.parents)

    def parent(self, n: int) -> int | None:
        return self.parents[n]

    def children(self, n: int) -> tuple[int, ...]:
        return self._kids[n]

    def neighbors(self, n: int) -> list[int]:
        p = self.parents[n]
        return list(self._kids[n]) + ([] if p is None else [p])

    def check(self, n: int) -> int:
        if not isinstance(n, int) or not 0 <= n < len(self.parents):
            raise UnknownNode(f"no node {n!r}")
        return n


def as_tree(t: Model | Tree) -> Tree:
    if isinstance(t, Tree):
        return t
    return Tree(tuple(t._parent))


def _ids(ranked) -> list[int]:
    return [e if isinstance(e, int) else e.node_id for e in ranked]


def _faults(tree: Tree, faults: Iterable[int]) -> frozenset[int]:
    fs = frozenset(tree.check(f) for f in faults)
    if not fs:
        raise NoFaultLabels("no faulty nodes labeled")
    return fs


def _distances(tree: Tree, sources: Iterable[int]) -> dict[int, int]:
    dist = {s: 0 for s in sources}
    q = deque(dist)
    while q:
        n = q.popleft()
        for m in tree.neighbors(n):
            if m not in dist:
                dist[m] = dist[n] + 1
                q.append(m)
    return dist


def nnud(model: Model | Tree, ranked: Sequence, faults: Iterable[int], k: int) -> int:
    if k < 1:
        raise ValueError("k must be positive")
    tree = as_tree(model)
    fs = _faults(tree, faults)
    top = [tree.check(n) for n in _ids(ranked)[:k]]
    if not top:
        return 0
    dist = _distances(tree, top)  # multi-source: distance to the nearest suspect
    d = min(dist[f] for f in fs)
    return sum(1 for v in dist.values() if v <= d)


def _subtree_levels(tree: Tree, n: int):
    """(node, depth below n) in breadth-first order."""
    q = deque([(n, 0)])
    while q:
        m, d = q.popleft()
        yield m, d
        for c in tree.children(m):
            q.append((c, d + 1))


def _walk(model: Model | Tree, ranked: Sequence, faults: Iterable[int], worst: bool) -> int:
    tree = as_tree(model)
    fs = _faults(tree, faults)
    visited: set[int] = set()
    for s in [tree.check(n) for n in _ids(ranked)] + [tree.root]:
        if s in visited:
            continue
        layer = list(_subtree_levels(tree, s))
        hits = [d for m, d in layer if m in fs]
        if not hits:
            visited.update(m for m, _ in layer)
            continue
        depth = min(hits)
        new = [m for m, d in layer if m not in visited and (worst or d <= depth)]
        return len(visited) + len(new)
    raise AssertionError("the root subtree always holds the faults")


def nnd(model: Model | Tree, ranked: Sequence, faults: Iterable[int]) -> int:
    return _walk(model, ranked, faults, worst=False)


def nndw(model: Model | Tree, ranked: Sequence, faults: Iterable[int]) -> int:
    return _walk(model, ranked, faults, worst=True)


def top_k(ranked: Sequence, faults: Iterable[int], k: int) -> int:
    fs = set(faults)
    return sum(1 for n in _ids(ranked)[:k] if n in fs)


# -- fault labels -----------------------------------------------------------------


@dataclass(frozen=True)
class FaultLabel:
    faulty_nodes: frozenset[int]

    def __post_init__(self):
        if not self.faulty_nodes:
            raise NoFaultLabels("no faulty nodes labeled")


def select_node(model: Model, selector: dict) -> int:
    """Node for a `{"node_id": n}` or `{"span": [start, end]}` selector.
    A span picks the outermost node covering exactly that source range."""
    if "node_id" in selector:
        return model.node(selector["node_id"]).id
    if "span" in selector:
        start, end = selector["span"]
        for n in model.nodes:
            if n.span is not None and n.span.start == start and n.span.end == end:
                return n.id
        raise UnknownNode(f"no node spans [{start}, {end}]")
    raise ValueError(f"bad node selector {selector!r}")


def fault_label(model: Model, data: dict) -> FaultLabel:
    sel = data.get("faulty_nodes") or []
    return FaultLabel(frozenset(select_node(model, s) for s in sel))


def load_fault_label(path: str | Path, model: Model) -> FaultLabel:
    return fault_label(model, json.loads(Path(path).read_text()))


METRICS = ("nnud1", "nnud5", "nnud10", "nnd", "nndw", "top1", "top5", "top10")


def metric(name: str, model: Model | Tree, ranked: Sequence, faults: Iterable[int]) -> int:
    """Evaluate a metric by name: nnudK, nnd, nndw or topK."""
    if name == "nnd":
        return nnd(model, ranked, faults)
    if name == "nndw":
        return nndw(model, ranked, faults)
    if name.startswith("nnud") and name[4:].isdigit():
        return nnud(model, ranked, faults, int(name[4:]))
    if name.startswith("top") and name[3:].isdigit():
        return top_k(ranked, faults, int(name[3:]))
    raise ValueError(f"unknown metric {name!r}")
