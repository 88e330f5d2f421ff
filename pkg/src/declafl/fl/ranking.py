"""Ranked node lists and the report-collapsing pass."""

from __future__ import annotations

from dataclasses import dataclass

from declafl.ast.nodes import Model


@dataclass(frozen=True)
class Entry:
    node_id: int
    score: float


def rank(model: Model, scores: dict[int, float]) -> list[Entry]:
    """Score descending, then fewer descendants, then lower node id."""
    keyed = sorted(scores.items(), key=lambda kv: (-kv[1], model.descendant_count(kv[0]), kv[0]))
    return [Entry(n, s) for n, s in keyed]


def collapse_report(model: Model, ranked: list[Entry]) -> list[Entry]:
    """Fold entries into an equally scored ancestor that is also listed.

    The ancestor keeps the best position held by any entry it absorbs; the
    order of the surviving entries is otherwise unchanged.
    """
    pos = {e.node_id: i for i, e in enumerate(ranked)}
    score = {e.node_id: e.score for e in ranked}
    alive = set(pos)
    for nid in sorted(pos, key=lambda n: (model.depth(n), n)):
        if nid not in alive:
            continue
        lo = nid + 1
        hi = nid + model.descendant_count(nid) + 1
        for d in [d for d in alive if lo <= d < hi and score[d] == score[nid]]:
            alive.discard(d)
            pos[nid] = min(pos[nid], pos[d])
    return [Entry(n, score[n]) for n in sorted(alive, key=lambda n: pos[n])]
