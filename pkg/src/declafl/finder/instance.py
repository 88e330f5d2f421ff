"""Concrete instances: relation name -> set of atom-name tuples."""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass
class Instance:
    atoms: list[str]
    relations: dict[str, frozenset] = field(default_factory=dict)
    # ordering alias -> atoms of the ordered signature, first to last
    orderings: dict[str, list[str]] = field(default_factory=dict)
    # predicate parameters of a run command
    params: dict[str, frozenset] = field(default_factory=dict)

    def rel(self, name: str) -> frozenset:
        return self.relations.get(name, frozenset())

    def as_json(self) -> dict:
        out = {name: sorted(list(t) for t in ts) for name, ts in sorted(self.relations.items())}
        if self.params:
            out["$params"] = {k: sorted(list(t) for t in v) for k, v in sorted(self.params.items())}
        return out
