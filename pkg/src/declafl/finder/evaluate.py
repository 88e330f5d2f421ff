"""Direct evaluation of formulas over a concrete instance.

Independent of the circuit translation; used as a test oracle and to fix
the expected outcome of generated tests.
"""

from __future__ import annotations

from itertools import product as cartesian

from declafl.analysis import Lookup, ensure_resolved
from declafl.ast.nodes import Model, Node, paragraph_body, params, sig_fact, sig_fields
from declafl.errors import AnalysisError
from declafl.finder.instance import Instance

Rel = frozenset


def _join(a: Rel, b: Rel) -> Rel:
    return frozenset(s[:-1] + t[1:] for s in a for t in b if s[-1] == t[0])


def _closure(r: Rel) -> Rel:
    cur = set(r)
    while True:
        nxt = cur | _join(frozenset(cur), r)
        if nxt == cur:
            return frozenset(cur)
        cur = nxt


class Evaluator:
    def __init__(self, base: Model, inst: Instance):
        ensure_resolved(base)
        self.base = base
        self.inst = inst
        self.univ = frozenset((a,) for s in base.sigs.values() if not s.attrs.get("parent")
                              for (a,) in inst.rel(s.name))
        self.iden = frozenset((a[0], a[0]) for a in self.univ)

    def look(self, mod: Model) -> Lookup:
        ensure_resolved(mod, self.base)
        return Lookup(mod, self.base)

    # -- formulas -----------------------------------------------------------------

    def formula(self, n: Node, env: dict, mod: Model) -> bool:
        op = n.op
        ch = n.children
        f = self.formula
        if op == "and":
            return f(ch[0], env, mod) and f(ch[1], env, mod)
        if op == "or":
            return f(ch[0], env, mod) or f(ch[1], env, mod)
        if op == "implies":
            return (not f(ch[0], env, mod)) or f(ch[1], env, mod)
        if op == "iff":
            return f(ch[0], env, mod) == f(ch[1], env, mod)
        if op == "ite":
            return f(ch[1], env, mod) if f(ch[0], env, mod) else f(ch[2], env, mod)
        if op == "not":
            return not f(ch[0], env, mod)
        if op == "block":
            return all(f(x, env, mod) for x in ch)
        if op == "in":
            return self.expr(ch[0], env, mod) <= self.expr(ch[1], env, mod)
        if op == "eq":
            return self.expr(ch[0], env, mod) == self.expr(ch[1], env, mod)
        if op == "mult":
            k = len(self.expr(ch[0], env, mod))
            return {"some": k >= 1, "no": k == 0, "lone": k <= 1, "one": k == 1}[n.attrs["kind"]]
        if op == "quant":
            q = n.attrs["q"]
            count = 0
            for e2 in self.bindings(ch[:-1], env, mod):
                if f(ch[-1], e2, mod):
                    count += 1
                    if q in ("some",):
                        return True
                    if q == "no" or (q in ("lone", "one") and count > 1):
                        return False
                elif q == "all":
                    return False
            return {"all": True, "some": False, "no": True, "lone": True, "one": count == 1}[q]
        if op == "let":
            env2 = dict(env)
            env2[n.name] = self.expr(ch[0], env, mod)
            return f(ch[1], env2, mod)
        if op in ("name", "call"):
            pm, p, env2 = self._inline(n, env, mod, "pred")
            return f(paragraph_body(p), env2, pm)
        raise AnalysisError(f"cannot evaluate formula {op!r}")

    def bindings(self, decls, env: dict, mod: Model):
        def rec(i: int, e: dict):
            if i == len(decls):
                yield e
                return
            d = decls[i]
            names = d.attrs["names"]
            dom = sorted(self.expr(d.children[0], e, mod))
            for combo in cartesian(dom, repeat=len(names)):
                if d.attrs.get("disj") and len(set(combo)) < len(combo):
                    continue
                e2 = dict(e)
                for nm, t in zip(names, combo):
                    e2[nm] = frozenset([t])
                yield from rec(i + 1, e2)
        yield from rec(0, env)

    def _inline(self, n: Node, env: dict, mod: Model, kind: str):
        look = self.look(mod)
        got = look.pred(n.name) if kind == "pred" else look.fun(n.name)
        if got is None:
            raise AnalysisError(f"no {kind} {n.name!r}")
        pm, p = got
        names = [x for d in params(p) for x in d.attrs["names"]]
        args = [self.expr(a, env, mod) for a in n.children] if n.op == "call" else []
        return pm, p, dict(zip(names, args))

    # -- expressions ----------------------------------------------------------------

    def expr(self, n: Node, env: dict, mod: Model) -> Rel:
        op = n.op
        ch = n.children
        e = self.expr
        if op == "union":
            return e(ch[0], env, mod) | e(ch[1], env, mod)
        if op == "diff":
            return e(ch[0], env, mod) - e(ch[1], env, mod)
        if op == "inter":
            return e(ch[0], env, mod) & e(ch[1], env, mod)
        if op == "product":
            b = e(ch[1], env, mod)
            return frozenset(s + t for s in e(ch[0], env, mod) for t in b)
        if op == "join":
            return _join(e(ch[0], env, mod), e(ch[1], env, mod))
        if op == "transpose":
            return frozenset((t[1], t[0]) for t in e(ch[0], env, mod))
        if op == "closure":
            return _closure(e(ch[0], env, mod))
        if op == "rclosure":
            return _closure(e(ch[0], env, mod)) | self.iden
        if op == "const":
            w = n.attrs["which"]
            return frozenset() if w == "none" else self.univ if w == "univ" else self.iden
        if op == "let":
            env2 = dict(env)
            env2[n.name] = e(ch[0], env, mod)
            return e(ch[1], env2, mod)
        if op in ("name", "call"):
            r = mod.resolution.get(n.id)
            if r is None:
                raise AnalysisError(f"unresolved node {n!r}")
            boxed = r[0] == "box"
            if boxed:
                r = r[1:]
            if r[0] == "fun":
                pm, p, env2 = self._inline(n, env, mod, "fun")
                return e(p.children[-1], env2, pm)
            m = self._name(n, r, env)
            if boxed:
                for a in ch:
                    m = _join(e(a, env, mod), m)
            return m
        raise AnalysisError(f"cannot evaluate expression {op!r}")

    def _name(self, n: Node, r: tuple, env: dict) -> Rel:
        tag = r[0]
        if tag == "var":
            return env[r[1]]
        if tag in ("sig", "field"):
            return self.inst.rel(r[1])
        if tag == "thisfield":
            return _join(env["this"], self.inst.rel(r[1]))
        if tag == "builtin":
            seq = self.inst.orderings.get(n.name.rsplit("/", 1)[0], [])
            op = r[1]
            if op == "first":
                return frozenset([(seq[0],)]) if seq else frozenset()
            if op == "last":
                return frozenset([(seq[-1],)]) if seq else frozenset()
            pairs = frozenset(zip(seq, seq[1:]))
            return pairs if op == "next" else frozenset((b, a) for a, b in pairs)
        raise AnalysisError(f"{n.name!r} is not an expression")

    # -- whole model ------------------------------------------------------------------

    def structural_ok(self) -> bool:
        """Signature hierarchy, multiplicities and field typing."""
        m = self.base
        rel = self.inst.rel
        for s in m.sigs.values():
            mine = rel(s.name)
            parent = s.attrs.get("parent")
            if parent and not mine <= rel(parent):
                return False
            kids = [x for x in m.sigs.values() if x.attrs.get("parent") == s.name]
            for i, a in enumerate(kids):
                for b in kids[i + 1:]:
                    if rel(a.name) & rel(b.name):
                        return False
            if s.attrs.get("abstract") and kids:
                if not mine <= frozenset().union(*(rel(k.name) for k in kids)):
                    return False
            mult = s.attrs.get("mult")
            if (mult == "one" and len(mine) != 1) or (mult == "lone" and len(mine) > 1) \
                    or (mult == "some" and not mine):
                return False
            for f in sig_fields(s):
                fr = rel(f.name)
                typ = self.expr(f.children[0], {}, m)
                if any((t[0],) not in mine or t[1:] not in typ for t in fr):
                    return False
                mult = f.attrs["mult"]
                if mult != "set":
                    for (a,) in mine:
                        k = sum(1 for t in fr if t[0] == a)
                        if (mult == "one" and k != 1) or (mult == "lone" and k > 1) or (mult == "some" and k == 0):
                            return False
        return True

    def facts_ok(self) -> bool:
        m = self.base
        for p in m.paragraphs:
            if p.op == "fact" and not self.formula(paragraph_body(p), {}, m):
                return False
            if p.op == "sig" and sig_fact(p) is not None:
                for t in self.inst.rel(p.name):
                    if not self.formula(sig_fact(p), {"this": frozenset([t])}, m):
                        return False
        return True

    def command_holds(self, kind: str, target: str, module: Model | None = None) -> bool:
        """Run: some parameter valuation satisfies the predicate. Check: the
        assertion holds (its negation is what the solver looks for)."""
        mod = module if module is not None else self.base
        look = self.look(mod)
        if kind == "run":
            pm, p = look.pred(target)
            return any(self.formula(paragraph_body(p), e, pm) for e in self._param_envs(p, pm))
        for am in look.models():
            if target in am.asserts:
                return self.formula(paragraph_body(am.asserts[target]), {}, am)
        raise AnalysisError(f"no assertion {target!r}")

    def _param_envs(self, p: Node, pm: Model):
        def rec(decls, names, e):
            if not names:
                yield e
                return
            d = decls[0]
            dom = sorted(self.expr(d.children[0], e, pm))
            mult = d.attrs.get("mult", "one")
            for mask in range(1 << len(dom)):
                val = frozenset(t for i, t in enumerate(dom) if mask >> i & 1)
                k = len(val)
                if (mult == "one" and k != 1) or (mult == "lone" and k > 1) or (mult == "some" and k == 0):
                    continue
                e2 = dict(e)
                e2[names[0]] = val
                if len(names) > 1:
                    yield from rec(decls, names[1:], e2)
                else:
                    yield from rec(decls[1:], list(decls[1].attrs["names"]) if len(decls) > 1 else [], e2)

        ds = params(p)
        if not ds:
            yield {}
            return
        yield from rec(ds, list(ds[0].attrs["names"]), {})


def satisfies(base: Model, inst: Instance, kind: str, target: str, module: Model | None = None) -> bool:
    """Whether `inst` is a witness of the command (structure, facts and body)."""
    ev = Evaluator(base, inst)
    if not (ev.structural_ok() and ev.facts_ok()):
        return False
    holds = ev.command_holds(kind, target, module)
    return holds if kind == "run" else not holds
