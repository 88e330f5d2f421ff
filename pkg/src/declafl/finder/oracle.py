"""Brute-force satisfiability by enumerating every typed instance.

Only practical for tiny scopes. The universe is laid out exactly as the
solver's bounds lay it out; everything else (membership choices, field
valuations, evaluation) is independent of the circuit translation.
"""

from __future__ import annotations

from itertools import chain, combinations

from declafl.analysis import ensure_resolved
from declafl.ast.nodes import Model, sig_fields
from declafl.errors import CapacityError
from declafl.finder.bounds import Bounds
from declafl.finder.circuit import TRUE, Circuit
from declafl.finder.evaluate import Evaluator
from declafl.finder.instance import Instance
from declafl.scope import Scope


def _subsets(items):
    items = list(items)
    return chain.from_iterable(combinations(items, k) for k in range(len(items) + 1))


def count_valuations(model: Model, scope: Scope) -> int:
    """Upper bound on the instances `enumerate_instances` visits."""
    b = Bounds(model, scope, Circuit())
    bits = sum(1 for m in b.sig_rel.values() for v in m.cells.values() if v != TRUE)
    bits += sum(len(m.cells) for m in b.field_rel.values())
    return 1 << bits


def enumerate_instances(model: Model, scope: Scope, limit: int = 1 << 22):
    ensure_resolved(model)
    b = Bounds(model, scope, Circuit())
    names = b.atoms
    sigs = list(model.sigs.values())
    visited = 0

    def members(i: int, chosen: dict):
        if i == len(sigs):
            yield chosen
            return
        s = sigs[i]
        cells = b.sig_rel[s.name].cells
        parent = s.attrs.get("parent")
        fixed = [t for t, v in cells.items() if v == TRUE]
        free = [t for t, v in cells.items() if v != TRUE and (not parent or t in chosen[parent])]
        got = scope.get(s.name)
        for extra in _subsets(sorted(free)):
            sel = frozenset(fixed) | frozenset(extra)
            if parent and got is not None:
                n, exact = got
                if len(sel) > n or (exact and len(sel) != n):
                    continue
            c2 = dict(chosen)
            c2[s.name] = sel
            yield from members(i + 1, c2)

    fields = [(s, f) for s in sigs for f in sig_fields(s)]
    orderings = {o.alias: [names[a] for a in b.sig_atoms[o.sig]] for o in model.orderings}

    def named(rel):
        return frozenset(tuple(names[a] for a in t) for t in rel)

    for chosen in members(0, {}):
        base = {k: named(v) for k, v in chosen.items()}
        live = sorted({a for ts in base.values() for (a,) in ts})

        def fields_rec(j: int, rels: dict):
            nonlocal visited
            if j == len(fields):
                visited += 1
                if visited > limit:
                    raise CapacityError("enumeration limit exceeded")
                yield Instance(live, dict(rels), orderings)
                return
            s, f = fields[j]
            ev = Evaluator(model, Instance(live, rels, orderings))
            typ = sorted(ev.expr(f.children[0], {}, model))
            owners = sorted(rels[s.name])
            cand = [o + t for o in owners for t in typ]
            for sub in _subsets(cand):
                r2 = dict(rels)
                r2[f.name] = frozenset(sub)
                yield from fields_rec(j + 1, r2)

        yield from fields_rec(0, base)


def brute_force_sat(model: Model, kind: str, target: str, scope: Scope,
                    module: Model | None = None, limit: int = 1 << 22) -> bool:
    """Whether some instance within `scope` is a witness of the command."""
    for inst in enumerate_instances(model, scope, limit):
        ev = Evaluator(model, inst)
        if not ev.structural_ok() or not ev.facts_ok():
            continue
        holds = ev.command_holds(kind, target, module)
        if holds if kind == "run" else not holds:
            return True
    return False
