"""Bounded model finding: ground a command, solve it, extract cores.

A `Session` caches grounders by signature layout and keeps one incremental
solver per grounder for status queries. Every constraint goes in as an
assumption literal, so the same solver (and its learned clauses) serves
the original model, its mutants and every test. Instances and cores use a
fresh solver so their results do not depend on query history.
"""

from __future__ import annotations

from collections import OrderedDict
from dataclasses import dataclass, field

from declafl.analysis import ensure_resolved
from declafl.ast.nodes import Model, Node
from declafl.errors import NotUnsat
from declafl.finder.bounds import bounds_key
from declafl.finder.circuit import FALSE, TRUE, Circuit
from declafl.finder.instance import Instance
from declafl.finder.sat import Solver
from declafl.finder.translate import Conjunct, GroundFormula, Grounder, Translator
from declafl.scope import Scope

__all__ = ["CircuitSolver", "GroundFormula", "Instance", "Session", "SolveResult",
           "extract_instance", "ground", "minimize_core", "solve"]

Label = tuple[Model, Node]


class CircuitSolver:
    """A SAT solver fed lazily with the Tseitin clauses of a circuit."""

    def __init__(self, circuit: Circuit, budget_seconds: float | None = 10.0):
        self.circuit = circuit
        self.sat = Solver(budget_seconds)
        self.done: set[int] = set()
        self.sat.add_clause([TRUE])

    def emit(self, lits):
        for g in self.circuit.cone(lits, self.done):
            for cl in self.circuit.clauses_for(g):
                self.sat.add_clause(cl)

    def solve(self, assumptions) -> bool:
        # only the assumptions' cone needs decisions: every gate is fully
        # defined by its inputs, so the rest of the circuit always extends
        assumptions = list(assumptions)
        self.emit(assumptions)
        self.sat.ensure_vars(self.circuit.nvars)
        return self.sat.solve(assumptions, self.circuit.support(assumptions))


@dataclass
class SolveResult:
    status: str                                   # "sat" or "unsat"
    instance: Instance | None = None
    core: list[Label] | None = None               # minimal core labels in the base model
    test_core: list[Label] | None = None          # core labels in the test module

    @property
    def sat(self) -> bool:
        return self.status == "sat"

    def core_ids(self) -> list[int]:
        return sorted(n.id for _, n in self.core or ())


class Session:
    def __init__(self, budget_seconds: float | None = 10.0, max_vars: int = 1 << 20,
                 max_grounders: int = 16):
        self.budget_seconds = budget_seconds
        self.max_vars = max_vars
        self.max_grounders = max_grounders
        self._grounders: OrderedDict = OrderedDict()
        self._status: dict[int, CircuitSolver] = {}
        self._translators: dict[int, OrderedDict] = {}
        self._model_conj: dict[int, OrderedDict] = {}

    def grounder(self, model: Model, scope: Scope, relax=frozenset()) -> Grounder:
        ensure_resolved(model)
        key = bounds_key(model, scope, frozenset(relax))
        g = self._grounders.get(key)
        if g is None:
            g = Grounder(model, scope, relax, self.max_vars)
            self._grounders[key] = g
            if len(self._grounders) > self.max_grounders:
                _, old = self._grounders.popitem(last=False)
                self._status.pop(id(old), None)
                self._translators.pop(id(old), None)
                self._model_conj.pop(id(old), None)
        else:
            self._grounders.move_to_end(key)
        return g

    def translator(self, g: Grounder, base: Model) -> Translator:
        cache = self._translators.setdefault(id(g), OrderedDict())
        got = cache.get(id(base))
        if got is not None and got[0] is base:
            cache.move_to_end(id(base))
            return got[1]
        t = Translator(g, base)
        cache[id(base)] = (base, t)
        if len(cache) > 4:
            cache.popitem(last=False)
        return t

    def model_conjuncts(self, g: Grounder, base: Model) -> list[Conjunct]:
        cache = self._model_conj.setdefault(id(g), OrderedDict())
        got = cache.get(id(base))
        if got is not None and got[0] is base:
            return got[1]
        conj = self.translator(g, base).model_conjuncts()
        cache[id(base)] = (base, conj)
        if len(cache) > 4:
            cache.popitem(last=False)
        return conj

    def ground(self, model: Model, kind: str, target: str, scope: Scope,
               module: Model | None = None, relax=frozenset()) -> GroundFormula:
        """Ground the model's constraints plus a run/check command.

        `module` holds the command's paragraph when it is not in `model`
        (test modules resolve against the model)."""
        g = self.grounder(model, scope, relax)
        t = self.translator(g, model)
        mod = module if module is not None else model
        cmd, env = t.command(mod, kind, target)
        return GroundFormula(self.model_conjuncts(g, model) + cmd, g, model, env)

    def status(self, gf: GroundFormula) -> bool:
        """Satisfiability using the grounder's shared incremental solver."""
        # command conjuncts (e.g. a pinned valuation) first: they settle
        # most inputs, leaving the model constraints to plain propagation
        return self.check(gf.grounder, [c.lit for c in reversed(gf.conjuncts)])

    def solve(self, gf: GroundFormula, want_core: bool = False) -> SolveResult:
        return solve(gf, want_core, self.budget_seconds)

    def check(self, g: Grounder, lits) -> bool:
        """Satisfiability of a conjunction of literals over `g`'s circuit,
        on the shared incremental solver."""
        lits = list(dict.fromkeys(lits))
        if FALSE in lits:
            return False
        cs = self._status.get(id(g))
        if cs is None:
            cs = CircuitSolver(g.circuit, self.budget_seconds)
            self._status[id(g)] = cs
        return cs.solve([x for x in lits if x != TRUE])


def _groups(gf: GroundFormula) -> "OrderedDict[tuple, tuple[Label, list[int]]]":
    out: OrderedDict = OrderedDict()
    for c in gf.conjuncts:
        k = (id(c.module), c.node.id)
        if k not in out:
            out[k] = ((c.module, c.node), [])
        out[k][1].append(c.lit)
    return out


def _extract(gf: GroundFormula, cs: CircuitSolver) -> Instance:
    return extract_instance(gf.grounder, gf.base, cs, gf.params)


def extract_instance(g: Grounder, base: Model, cs: CircuitSolver, params=None) -> Instance:
    b = g.bounds
    sat = cs.sat

    def val(lit: int) -> bool:
        if lit == TRUE:
            return True
        if lit == FALSE:
            return False
        v = sat.model_value(abs(lit))
        return v if lit > 0 else not v

    names = b.atoms
    rels = {}
    for s, m in b.sig_rel.items():
        rels[s] = frozenset((names[t[0]],) for t, lit in m.cells.items() if val(lit))
    for f, m in b.field_rel.items():
        rels[f] = frozenset(tuple(names[a] for a in t) for t, lit in m.cells.items() if val(lit))
    orderings = {o.alias: [names[a] for a in b.sig_atoms[o.sig]] for o in base.orderings
                 if o.alias in b.ordering}
    prm = {k: frozenset(tuple(names[a] for a in t) for t, lit in m.cells.items() if val(lit))
           for k, m in (params or {}).items()}
    live = set()
    for ts in rels.values():
        for t in ts:
            live.update(t)
    return Instance([a for a in names if a in live], rels, orderings, prm)


def solve(gf: GroundFormula, want_core: bool = False, budget_seconds: float | None = 10.0) -> SolveResult:
    """Solve with a fresh solver. On UNSAT with `want_core`, the core is a
    locally minimal set of labels (no label can be dropped)."""
    groups = _groups(gf)
    c = gf.circuit
    glits = {k: c.and_n(lits) for k, (_, lits) in groups.items()}
    cs = CircuitSolver(c, budget_seconds)
    falsy = [k for k, v in glits.items() if v == FALSE]
    if falsy:
        core = [groups[falsy[0]][0]] if want_core else None
        return _unsat(gf, core)
    assumptions = sorted({v for v in glits.values() if v != TRUE})
    if cs.solve(assumptions):
        return SolveResult("sat", _extract(gf, cs))
    if not want_core:
        return SolveResult("unsat")
    by_lit: dict[int, list] = {}
    for k, v in glits.items():
        by_lit.setdefault(v, []).append(k)
    core_keys = [k for lit in cs.sat.core for k in by_lit.get(lit, ())]
    labels = minimize_core(gf, [groups[k][0] for k in core_keys], budget_seconds, _prepared=(groups, glits))
    return _unsat(gf, labels)


def _unsat(gf: GroundFormula, labels) -> SolveResult:
    if labels is None:
        return SolveResult("unsat")
    model_labels = [lb for lb in labels if lb[0] is gf.base]
    test_labels = [lb for lb in labels if lb[0] is not gf.base]
    return SolveResult("unsat", core=model_labels, test_core=test_labels)


def minimize_core(gf: GroundFormula, initial: list[Label], budget_seconds: float | None = 10.0,
                  _prepared=None) -> list[Label]:
    """Deletion-based minimization. Model labels are tried first (highest
    node id first), then test labels. Raises NotUnsat if `initial` is
    satisfiable."""
    if _prepared is None:
        groups = _groups(gf)
        glits = {k: gf.circuit.and_n(lits) for k, (_, lits) in groups.items()}
    else:
        groups, glits = _prepared
    keys = [(id(m), n.id) for m, n in initial]
    for k in keys:
        if glits.get(k) == FALSE:
            return [groups[k][0]]
    cs = CircuitSolver(gf.circuit, budget_seconds)

    def unsat(ks) -> set | None:
        lits = sorted({glits[k] for k in ks if glits[k] != TRUE})
        if cs.solve(lits):
            return None
        failed = cs.sat.core
        return {k for k in ks if glits[k] in failed}

    cur = set(keys)
    got = unsat(cur)
    if got is None:
        raise NotUnsat("the given constraints are satisfiable")
    cur = got
    base_id = id(gf.base)
    order = sorted(cur, key=lambda k: (k[0] != base_id, -k[1]))
    for k in order:
        if k not in cur:
            continue
        trial = cur - {k}
        got = unsat(trial)
        if got is not None:
            cur = got
    return [groups[k][0] for k in sorted(cur, key=lambda k: (k[0] != base_id, k[1]))]


def ground(model: Model, kind: str, target: str, scope: Scope, module: Model | None = None,
           relax=frozenset(), session: Session | None = None) -> GroundFormula:
    return (session or Session()).ground(model, kind, target, scope, module, relax)
