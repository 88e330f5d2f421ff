"""Hit counting over AST nodes."""

from __future__ import annotations

from collections import defaultdict

from declafl.ast.nodes import Model


class HitMap:
    """Per-node counters. A record bumps every node of the union of the
    given subtrees exactly once, so a child never falls below its parent."""

    def __init__(self):
        self.counts: dict[int, int] = defaultdict(int)

    def __getitem__(self, nid: int) -> int:
        return self.counts.get(nid, 0)

    def record(self, model: Model, nodes) -> "HitMap":
        hit: set[int] = set()
        for n in nodes:
            if n not in hit:
                hit.update(model.descendants(n, inclusive=True))
        for n in hit:
            self.counts[n] += 1
        return self

    def fronts(self, model: Model) -> list[int]:
        """Nodes counted more often than their parent (the root excluded)."""
        out = []
        for n, c in self.counts.items():
            p = model.parent(n)
            if p is not None and c > self[p]:
                out.append(n)
        return out


def record_core_hit(h: HitMap, model: Model, nodes) -> HitMap:
    return h.record(model, nodes)
