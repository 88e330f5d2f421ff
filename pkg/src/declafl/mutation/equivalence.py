"""Bounded equivalence between a model and a mutant, and distinguishing instances.

Both versions are translated into one grounder so they share relations.
They differ on an instance when their fact conjunctions differ, or when
facts hold in both and some predicate (for a shared parameter valuation)
or assertion evaluates differently. Paragraphs untouched by the mutation
translate to identical literals and drop out.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from declafl.ast.nodes import Model, paragraph_body
from declafl.errors import NoDistinguishingInstance
from declafl.finder import CircuitSolver, Session, extract_instance
from declafl.finder.instance import Instance
from declafl.finder.translate import free_params, pred_lit
from declafl.mutation.operators import Mutant
from declafl.scope import Scope


@dataclass
class Distinction:
    where: str                     # "facts", "pred" or "assert"
    name: str | None
    instance: Instance
    params: dict[str, frozenset] = field(default_factory=dict)


def relax_for(model: Model, mutant: Model) -> frozenset:
    """Signatures whose singleton status differs between the two versions."""
    out = set()
    for name, s in model.sigs.items():
        a = s.attrs.get("mult")
        b = mutant.sigs[name].attrs.get("mult")
        if a != b and "one" in (a, b):
            out.add(name)
    return frozenset(out)


class Comparator:
    def __init__(self, model: Model, scope: Scope, session: Session | None = None):
        self.model = model
        self.scope = scope
        self.session = session or Session()

    def _parts(self, other: Model):
        s = self.session
        relax = relax_for(self.model, other)
        g = s.grounder(self.model, self.scope, relax)
        c = g.circuit
        to = s.translator(g, self.model)
        tm = s.translator(g, other)
        # skolemized conjuncts cannot be negated, so use expanded formulas
        f_o = to.model_formula()
        f_m = tm.model_formula()
        both = c.and_(f_o, f_m)
        parts = [("facts", None, -c.iff(f_o, f_m), {})]
        for name, p in self.model.preds.items():
            q = other.preds[name]
            if to.ctx_id(p, self.model) == tm.ctx_id(q, other):
                continue
            env, _ = free_params(to, p, self.model, name)
            a = pred_lit(to, p, self.model, env)
            b = pred_lit(tm, q, other, env)
            parts.append(("pred", name, c.and_(both, -c.iff(a, b)), env))
        for name, p in self.model.asserts.items():
            q = other.asserts[name]
            if to.ctx_id(p, self.model) == tm.ctx_id(q, other):
                continue
            a = to.tr_f(paragraph_body(p), {}, self.model)
            b = tm.tr_f(paragraph_body(q), {}, other)
            parts.append(("assert", name, c.and_(both, -c.iff(a, b)), {}))
        return g, parts

    def equivalent(self, other: Model | Mutant) -> bool:
        other = other.model if isinstance(other, Mutant) else other
        g, parts = self._parts(other)
        d = g.circuit.or_n(p[2] for p in parts)
        return not self.session.check(g, [d])

    def distinguish(self, other: Model | Mutant) -> Distinction:
        """A first-found instance on which the versions differ. Uses a fresh
        solver so the result does not depend on earlier queries."""
        other = other.model if isinstance(other, Mutant) else other
        g, parts = self._parts(other)
        d = g.circuit.or_n(p[2] for p in parts)
        cs = CircuitSolver(g.circuit, self.session.budget_seconds)
        if not cs.solve([d]):
            raise NoDistinguishingInstance("the versions agree on every instance in scope")
        for where, name, lit, env in parts:
            v = cs.sat.model_value(abs(lit))
            if v == (lit > 0):
                inst = extract_instance(g, self.model, cs, env)
                return Distinction(where, name, inst, inst.params)
        raise NoDistinguishingInstance("no part explains the difference")


def is_equivalent(model: Model, mutant: Mutant | Model, scope: Scope, session: Session | None = None) -> bool:
    return Comparator(model, scope, session).equivalent(mutant)
