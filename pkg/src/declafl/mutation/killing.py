"""Mutant-killing test generation.

For each non-equivalent mutant of a model taken as correct, a
distinguishing instance is written out as a valuation predicate: one
`some disj` quantifier over the instance's atoms that pins every
signature, field and ordering, followed by a call of the predicate that
told the versions apart (if any). The expectation is whatever the
original model says about that instance. A test is kept only if it passes
on the original and fails on its mutant.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

from declafl.analysis import ensure_resolved
from declafl.ast.nodes import Model, paragraph_body, params, sig_fields
from declafl.errors import CapacityError, DeclaflError, NoDistinguishingInstance
from declafl.finder import Session
from declafl.finder.evaluate import Evaluator
from declafl.finder.instance import Instance
from declafl.mutation.equivalence import Comparator, Distinction
from declafl.mutation.operators import Mutant, first_order_mutants
from declafl.scope import Scope
from declafl.suite import TestCase, load_suite_text, run_test

log = logging.getLogger(__name__)


@dataclass
class GeneratedTest:
    name: str
    body: str
    expect: bool
    mutant: Mutant
    scope: Scope

    def source(self) -> str:
        return (f"pred {self.name} {{\n{self.body}\n}}\n"
                f"run {self.name} {self.scope.render()} expect {1 if self.expect else 0}\n")


def _atom_names(model: Model, inst: Instance) -> dict[str, str]:
    taken = set(model.sigs) | set(model.fields) | set(model.preds) | set(model.funs) | set(model.asserts)
    prefix = "_"
    while any(n.startswith(prefix) for n in taken):
        prefix += "_"
    out = {}
    for s in model.sigs.values():
        if s.attrs.get("parent"):
            continue
        for i, (a,) in enumerate(sorted(inst.rel(s.name), key=lambda t: inst_order(inst, t[0]))):
            out[a] = f"{prefix}{s.name}{i}"
    return out


def inst_order(inst: Instance, atom: str) -> int:
    return inst.atoms.index(atom) if atom in inst.atoms else len(inst.atoms)


def _rel_text(tuples, names: dict[str, str], arity: int) -> str | None:
    if not tuples:
        return None
    parts = ["->".join(names[a] for a in t) for t in sorted(tuples, key=lambda t: [names[a] for a in t])]
    return " + ".join(parts)


def valuation_body(model: Model, inst: Instance, call: tuple[str, dict] | None = None) -> str:
    """Predicate body pinning `inst` (optionally calling a predicate)."""
    names = _atom_names(model, inst)
    decls = []
    for s in model.sigs.values():
        if s.attrs.get("parent"):
            continue
        vs = [names[a] for (a,) in sorted(inst.rel(s.name), key=lambda t: inst_order(inst, t[0]))]
        if vs:
            decls.append(f"disj {', '.join(vs)}: {s.name}")
    lines = []
    for o in model.orderings:
        seq = [a for a in inst.orderings.get(o.alias, []) if (a,) in inst.rel(o.sig)]
        if seq:
            lines.append(f"{o.alias}/first = {names[seq[0]]}")
            if len(seq) > 1:
                lines.append(f"{o.alias}/next = " + " + ".join(f"{names[a]}->{names[b]}" for a, b in zip(seq, seq[1:])))
            else:
                lines.append(f"no {o.alias}/next")
    for s in model.sigs.values():
        txt = _rel_text(inst.rel(s.name), names, 1)
        lines.append(f"{s.name} = {txt}" if txt else f"no {s.name}")
    for s in model.sigs.values():
        for f in sig_fields(s):
            txt = _rel_text(inst.rel(f.name), names, 2)
            lines.append(f"{f.name} = {txt}" if txt else f"no {f.name}")
    if call is not None:
        pname, vals = call
        p = model.preds[pname]
        args = []
        for d in params(p):
            arity = model.arity.get(d.children[0].id, 1)
            for nm in d.attrs["names"]:
                txt = _rel_text(vals.get(nm, ()), names, arity)
                args.append(txt if txt else "->".join(["none"] * arity))
        lines.append(f"{pname}[{', '.join(args)}]" if args else pname)
    inner = "\n".join("    " + x for x in lines)
    if not decls:
        return inner
    return f"  some {', '.join(decls)} {{\n{inner}\n  }}"


def expectation(model: Model, dist: Distinction) -> bool:
    ev = Evaluator(model, dist.instance)
    if not (ev.structural_ok() and ev.facts_ok()):
        return False
    if dist.where == "pred":
        p = model.preds[dist.name]
        env = {nm: dist.params.get(nm, frozenset()) for d in params(p) for nm in d.attrs["names"]}
        e: dict = {}
        for d in params(p):
            dom = ev.expr(d.children[0], e, model)
            for nm in d.attrs["names"]:
                v = env[nm]
                k = len(v)
                mult = d.attrs.get("mult", "one")
                if not v <= dom or (mult == "one" and k != 1) or (mult == "lone" and k > 1) \
                        or (mult == "some" and k == 0):
                    return False
                e[nm] = v
        return ev.formula(paragraph_body(p), e, model)
    return True


@dataclass
class KillingSuite:
    tests: list[TestCase]
    generated: list[GeneratedTest]
    text: str
    mutants: list[Mutant]          # non-equivalent mutants considered
    equivalent: int = 0


def _kills(model: Model, mutant: Mutant, test: TestCase, session: Session) -> bool:
    ro = run_test(model, test, session=session)
    rm = run_test(mutant.model, test, session=session)
    return ro.passed and not rm.errored and rm.status != ro.status


def generate_killing_tests(model: Model, scope: Scope, session: Session | None = None,
                           mutants: list[Mutant] | None = None, prefix: str = "test",
                           reuse: bool = True) -> KillingSuite:
    """Killing tests for the non-equivalent first-order mutants of `model`.

    With `reuse`, a mutant already killed by a kept test gets no test of
    its own, which keeps the suite small.
    """
    ensure_resolved(model)
    session = session or Session()
    cmp = Comparator(model, scope, session)
    mutants = list(first_order_mutants(model)) if mutants is None else mutants
    seen: set[str] = set()
    kept: list[GeneratedTest] = []
    kept_tests: list[TestCase] = []
    live: list[Mutant] = []
    equivalent = 0
    for m in mutants:
        try:
            if cmp.equivalent(m):
                equivalent += 1
                continue
            live.append(m)
            if reuse and any(_kills(model, m, t, session) for t in kept_tests):
                continue
            dist = cmp.distinguish(m)
        except NoDistinguishingInstance:
            equivalent += 1
            continue
        except (CapacityError, DeclaflError) as e:
            log.info("skipping mutant %s: %s", m.describe(), e)
            continue
        call = (dist.name, dist.params) if dist.where == "pred" else None
        body = valuation_body(model, dist.instance, call)
        if body in seen:
            continue
        seen.add(body)
        gt = GeneratedTest(f"{prefix}{len(kept) + 1}", body, expectation(model, dist), m, scope)
        try:
            (t,) = load_suite_text(gt.source(), model, "<generated>")
        except DeclaflError as e:
            log.info("dropping test for %s: %s", m.describe(), e)
            continue
        if _kills(model, m, t, session):
            kept.append(gt)
            kept_tests.append(t)
        else:
            log.info("dropping test for %s: it does not kill the mutant", m.describe())
    text = "\n".join(gt.source() for gt in kept)
    tests = load_suite_text(text, model, "<generated>") if kept else []
    return KillingSuite(tests, kept, text, live, equivalent)
