"""Relational formulas to circuits, split into labeled top-level conjuncts.

`Grounder` owns a circuit and bounds for one (signature layout, scope); any
model with the same layout (the original and most of its mutants) can be
translated into it and share cached sub-circuits. `Translator` handles one
base model; a test module is translated against it.

Conjunctive structure is flattened so each conjunct is labeled with the
finest AST node it comes from: conjunctions and blocks split, implications
and if-then-else move their condition into a guard, universal quantifiers
expand over the bounds, predicate calls are inlined (labels land in the
predicate body), and existentials are skolemized with selector variables.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product as cartesian

from declafl.analysis import Lookup, ensure_resolved
from declafl.ast.nodes import Model, Node, paragraph_body, params, sig_fact, sig_fields
from declafl.errors import AnalysisError, CapacityError
from declafl.finder import matrix as mx
from declafl.finder.bounds import Bounds
from declafl.finder.circuit import FALSE, TRUE, Circuit
from declafl.finder.matrix import Matrix
from declafl.scope import Scope


@dataclass(frozen=True)
class Conjunct:
    node: Node
    module: Model
    lit: int


@dataclass
class GroundFormula:
    """Labeled conjuncts over a shared circuit. The formula is their conjunction."""

    conjuncts: list[Conjunct]
    grounder: "Grounder"
    base: Model
    params: dict[str, Matrix] = field(default_factory=dict)

    @property
    def circuit(self) -> Circuit:
        return self.grounder.circuit

    @property
    def bounds(self) -> Bounds:
        return self.grounder.bounds

    def root(self) -> int:
        return self.circuit.and_n(c.lit for c in self.conjuncts)

    def labels(self) -> list[tuple[Model, Node]]:
        seen = {}
        for c in self.conjuncts:
            seen.setdefault((id(c.module), c.node.id), (c.module, c.node))
        return list(seen.values())


class _Intern:
    def __init__(self):
        self.table: dict = {}

    def __call__(self, key) -> int:
        v = self.table.get(key)
        if v is None:
            v = len(self.table)
            self.table[key] = v
        return v


class Grounder:
    def __init__(self, model: Model, scope: Scope, relax=frozenset(),
                 max_vars: int = 1 << 20, skolem_cap: int = 256, expand_cap: int = 200_000):
        ensure_resolved(model)
        self.model = model
        self.scope = scope
        self.circuit = Circuit(max_vars)
        self.bounds = Bounds(model, scope, self.circuit, relax)
        self.skolem_cap = skolem_cap
        self.expand_cap = expand_cap
        self.cache: dict = {}
        self.intern = _Intern()
        self.skolems: dict = {}
        self._univ: Matrix | None = None
        self._iden: Matrix | None = None

    def univ(self) -> Matrix:
        if self._univ is None:
            self._univ = self.bounds.univ()
            self._iden = Matrix(2, {(t[0], t[0]): v for t, v in self._univ.cells.items()})
        return self._univ

    def iden(self) -> Matrix:
        self.univ()
        return self._iden

    def translator(self, base: Model) -> "Translator":
        return Translator(self, base)

    def skolem(self, key) -> int:
        v = self.skolems.get(key)
        if v is None:
            v = self.circuit.new_var(("$sk",) + key[-1:])
            self.skolems[key] = v
        return v


class Translator:
    def __init__(self, grounder: Grounder, base: Model):
        ensure_resolved(base)
        self.g = grounder
        self.c = grounder.circuit
        self.b = grounder.bounds
        self.base = base
        self._looks: dict[int, Lookup] = {}
        self._fv: dict[int, frozenset] = {}
        self._ctx: dict[int, int] = {}
        self._callees: dict[int, frozenset] = {}
        self._fp: dict[int, int] = {}
        self._sid: dict[int, int] = {}
        self._pinned: list[Model] = [base]

    # -- module plumbing -----------------------------------------------------

    def look(self, mod: Model) -> Lookup:
        lk = self._looks.get(id(mod))
        if lk is None:
            ensure_resolved(mod, self.base)
            lk = Lookup(mod, self.base)
            self._looks[id(mod)] = lk
            self._pinned.append(mod)  # node ids key the caches below
        return lk

    def res(self, n: Node, mod: Model) -> tuple:
        r = mod.resolution.get(n.id) if mod.resolution else None
        if r is None:
            raise AnalysisError(f"unresolved node {n!r}")
        return r

    def sid(self, n: Node, mod: Model) -> int:
        """Interned structural id; name nodes include their resolution."""
        k = id(n)
        v = self._sid.get(k)
        if v is not None:
            return v
        stack = [(n, False)]
        while stack:
            x, done = stack.pop()
            if id(x) in self._sid:
                continue
            if not done:
                stack.append((x, True))
                stack.extend((ch, False) for ch in x.children if id(ch) not in self._sid)
                continue
            attrs = tuple(sorted((a, _freeze(b)) for a, b in x.attrs.items()))
            r = mod.resolution.get(x.id) if x.op in ("name", "call") and mod.resolution else None
            key = (x.op, attrs, r, tuple(self._sid[id(ch)] for ch in x.children))
            self._sid[id(x)] = self.g.intern(key)
        return self._sid[k]

    def callees(self, n: Node, mod: Model) -> frozenset:
        k = id(n)
        v = self._callees.get(k)
        if v is None:
            out = set()
            res = mod.resolution or {}
            for x in n.walk():
                if x.op in ("name", "call"):
                    r = res.get(x.id)
                    if r and r[0] in ("pred", "fun"):
                        out.add(r)
            v = frozenset(out)
            self._callees[k] = v
        return v

    def paragraph_fp(self, kind: str, name: str, mod: Model) -> int:
        look = self.look(mod)
        pm, p = look.pred(name) if kind == "pred" else look.fun(name)
        k = id(p)
        v = self._fp.get(k)
        if v is None:
            self._fp[k] = -1  # recursion is rejected by analysis
            deps = tuple(sorted(self.paragraph_fp(r[0], r[1], pm) for r in self.callees(p, pm)))
            v = self.g.intern(("para", self.sid(p, pm), deps))
            self._fp[k] = v
        return v

    def ctx_id(self, n: Node, mod: Model) -> int:
        k = id(n)
        v = self._ctx.get(k)
        if v is None:
            deps = tuple(sorted(self.paragraph_fp(r[0], r[1], mod) for r in self.callees(n, mod)))
            v = self.g.intern((self.sid(n, mod), deps))
            self._ctx[k] = v
        return v

    def fv(self, n: Node, mod: Model) -> frozenset:
        k = id(n)
        v = self._fv.get(k)
        if v is not None:
            return v
        res = mod.resolution or {}
        op = n.op
        if op in ("name", "call"):
            r = res.get(n.id, ())
            out = set()
            if r and r[0] == "box":
                r = r[1:]
            if r and r[0] == "var":
                out.add(r[1])
            elif r and r[0] == "thisfield":
                out.add("this")
            for ch in n.children:
                out |= self.fv(ch, mod)
        elif op == "quant":
            out = set(self.fv(n.children[-1], mod))
            for d in reversed(n.children[:-1]):
                out -= set(d.attrs["names"])
                out |= self.fv(d.children[0], mod)
        elif op == "let":
            out = (set(self.fv(n.children[1], mod)) - {n.name}) | self.fv(n.children[0], mod)
        else:
            out = set()
            for ch in n.children:
                out |= self.fv(ch, mod)
        v = frozenset(out)
        self._fv[k] = v
        return v

    def key(self, tag: str, n: Node, env: dict, mod: Model):
        fv = self.fv(n, mod)
        if fv:
            intern = self.g.intern
            ek = tuple(intern(env[x].key()) if x in env else -1 for x in sorted(fv))
        else:
            ek = ()
        return (tag, self.ctx_id(n, mod), ek)

    # -- formulas ------------------------------------------------------------------

    def tr_f(self, n: Node, env: dict, mod: Model) -> int:
        if n.op in ("name",):
            return self._tr_f(n, env, mod)
        k = self.key("f", n, env, mod)
        v = self.g.cache.get(k)
        if v is None:
            v = self._tr_f(n, env, mod)
            self.g.cache[k] = v
        return v

    def _tr_f(self, n: Node, env: dict, mod: Model) -> int:
        c = self.c
        op = n.op
        ch = n.children
        if op == "and":
            return c.and_(self.tr_f(ch[0], env, mod), self.tr_f(ch[1], env, mod))
        if op == "or":
            return c.or_(self.tr_f(ch[0], env, mod), self.tr_f(ch[1], env, mod))
        if op == "implies":
            return c.or_(-self.tr_f(ch[0], env, mod), self.tr_f(ch[1], env, mod))
        if op == "iff":
            return c.iff(self.tr_f(ch[0], env, mod), self.tr_f(ch[1], env, mod))
        if op == "ite":
            return c.ite(self.tr_f(ch[0], env, mod), self.tr_f(ch[1], env, mod), self.tr_f(ch[2], env, mod))
        if op == "not":
            return -self.tr_f(ch[0], env, mod)
        if op == "block":
            return c.and_n([self.tr_f(x, env, mod) for x in ch])
        if op == "in":
            return mx.subset(c, self.tr_e(ch[0], env, mod), self.tr_e(ch[1], env, mod))
        if op == "eq":
            return mx.equal(c, self.tr_e(ch[0], env, mod), self.tr_e(ch[1], env, mod))
        if op == "mult":
            m = self.tr_e(ch[0], env, mod)
            kind = n.attrs["kind"]
            if kind == "some":
                return mx.some(c, m)
            if kind == "no":
                return -mx.some(c, m)
            if kind == "lone":
                return mx.lone(c, m)
            return mx.one(c, m)
        if op == "quant":
            return self._quant(n, env, mod)
        if op == "let":
            env2 = dict(env)
            env2[n.name] = self.tr_e(ch[0], env, mod)
            return self.tr_f(ch[1], env2, mod)
        if op in ("call", "name"):
            r = self.res(n, mod)
            if r[0] != "pred":
                raise AnalysisError(f"{n.name!r} is not a formula")
            pm, p, env2 = self._inline(n, env, mod, "pred")
            return self.tr_f(paragraph_body(p), env2, pm)
        raise AnalysisError(f"cannot translate formula {op!r}")

    def bindings(self, decls: list[Node], env: dict, mod: Model):
        """All (env, guard literals) for a declaration list; skips bindings
        whose guard is constant false."""
        out = [(env, [])]
        for d in decls:
            names = d.attrs["names"]
            disj = d.attrs.get("disj")
            nxt = []
            for e, gl in out:
                dom = self.tr_e(d.children[0], e, mod)
                cells = sorted(dom.cells.items())
                for combo in cartesian(cells, repeat=len(names)):
                    atoms = [t[0] for t, _ in combo]
                    if disj and len(set(atoms)) < len(atoms):
                        continue
                    e2 = dict(e)
                    for nm, a in zip(names, atoms):
                        e2[nm] = Matrix.singleton(a)
                    nxt.append((e2, gl + [v for _, v in combo]))
                if len(nxt) > self.g.expand_cap:
                    raise CapacityError("quantifier expansion exceeds the configured cap")
            out = nxt
        return out

    def _quant(self, n: Node, env: dict, mod: Model) -> int:
        c = self.c
        q = n.attrs["q"]
        body = n.children[-1]
        vals = []
        for e2, gl in self.bindings(n.children[:-1], env, mod):
            g = c.and_n(gl)
            b = self.tr_f(body, e2, mod)
            if q == "all":
                vals.append(c.or_(-g, b))
            else:
                vals.append(c.and_(g, b))
        if q == "all":
            return c.and_n(vals)
        if q == "some":
            return c.or_n(vals)
        if q == "no":
            return -c.or_n(vals)
        if q == "lone":
            return c.at_most_one(vals)
        return c.and_(c.or_n(vals), c.at_most_one(vals))

    def _inline(self, n: Node, env: dict, mod: Model, kind: str):
        look = self.look(mod)
        pm, p = look.pred(n.name) if kind == "pred" else look.fun(n.name)
        names = [x for d in params(p) for x in d.attrs["names"]]
        args = [self.tr_e(a, env, mod) for a in n.children] if n.op == "call" else []
        return pm, p, dict(zip(names, args))

    # -- expressions --------------------------------------------------------------

    def tr_e(self, n: Node, env: dict, mod: Model) -> Matrix:
        op = n.op
        if op == "name":
            return self._name(n, env, mod)
        if op == "const":
            w = n.attrs["which"]
            if w == "none":
                return Matrix(1)
            return self.g.univ() if w == "univ" else self.g.iden()
        k = self.key("e", n, env, mod)
        v = self.g.cache.get(k)
        if v is None:
            v = self._tr_e(n, env, mod)
            self.g.cache[k] = v
        return v

    def _name(self, n: Node, env: dict, mod: Model, r=None) -> Matrix:
        r = r or self.res(n, mod)
        tag = r[0]
        if tag == "var":
            return env[r[1]]
        if tag == "sig":
            return self.b.sig_rel[r[1]]
        if tag == "field":
            return self.b.field_rel[r[1]]
        if tag == "thisfield":
            return mx.join(self.c, env["this"], self.b.field_rel[r[1]])
        if tag == "builtin":
            return self.b.ordering[n.name.rsplit("/", 1)[0]][r[1]]
        if tag == "fun":
            pm, p, env2 = self._inline(n, env, mod, "fun")
            return self.tr_e(p.children[-1], env2, pm)
        raise AnalysisError(f"{n.name!r} is not an expression")

    def _tr_e(self, n: Node, env: dict, mod: Model) -> Matrix:
        c = self.c
        op = n.op
        ch = n.children
        if op == "union":
            return mx.union(c, self.tr_e(ch[0], env, mod), self.tr_e(ch[1], env, mod))
        if op == "diff":
            return mx.diff(c, self.tr_e(ch[0], env, mod), self.tr_e(ch[1], env, mod))
        if op == "inter":
            return mx.inter(c, self.tr_e(ch[0], env, mod), self.tr_e(ch[1], env, mod))
        if op == "product":
            return mx.product(c, self.tr_e(ch[0], env, mod), self.tr_e(ch[1], env, mod))
        if op == "join":
            return mx.join(c, self.tr_e(ch[0], env, mod), self.tr_e(ch[1], env, mod))
        if op == "transpose":
            return mx.transpose(c, self.tr_e(ch[0], env, mod))
        if op == "closure":
            return mx.closure(c, self.tr_e(ch[0], env, mod))
        if op == "rclosure":
            return mx.union(c, mx.closure(c, self.tr_e(ch[0], env, mod)), self.g.iden())
        if op == "let":
            env2 = dict(env)
            env2[n.name] = self.tr_e(ch[0], env, mod)
            return self.tr_e(ch[1], env2, mod)
        if op == "call":
            r = self.res(n, mod)
            if r[0] == "fun":
                pm, p, env2 = self._inline(n, env, mod, "fun")
                return self.tr_e(p.children[-1], env2, pm)
            if r[0] == "box":
                m = self._name(n, env, mod, r[1:])
                for a in ch:
                    m = mx.join(c, self.tr_e(a, env, mod), m)
                return m
            raise AnalysisError(f"{n.name!r} is not an expression")
        raise AnalysisError(f"cannot translate expression {op!r}")

    # -- conjunct decomposition ---------------------------------------------------

    def decompose(self, n: Node, env: dict, mod: Model, guard: int, pos: bool, out: list):
        c = self.c
        op = n.op
        ch = n.children
        if guard == FALSE:
            return
        if (op == "block" and pos) or (op == "and" and pos):
            for x in ch:
                self.decompose(x, env, mod, guard, pos, out)
            return
        if op == "or" and not pos:
            for x in ch:
                self.decompose(x, env, mod, guard, pos, out)
            return
        if op == "not":
            self.decompose(ch[0], env, mod, guard, not pos, out)
            return
        if op == "implies":
            if pos:
                self.decompose(ch[1], env, mod, c.and_(guard, self.tr_f(ch[0], env, mod)), True, out)
            else:
                self.decompose(ch[0], env, mod, guard, True, out)
                self.decompose(ch[1], env, mod, guard, False, out)
            return
        if op == "ite":
            cond = self.tr_f(ch[0], env, mod)
            self.decompose(ch[1], env, mod, c.and_(guard, cond), pos, out)
            self.decompose(ch[2], env, mod, c.and_(guard, -cond), pos, out)
            return
        if op == "let":
            env2 = dict(env)
            env2[n.name] = self.tr_e(ch[0], env, mod)
            self.decompose(ch[1], env2, mod, guard, pos, out)
            return
        if op in ("call", "name"):
            r = self.res(n, mod)
            if r[0] == "pred":
                pm, p, env2 = self._inline(n, env, mod, "pred")
                self.decompose(paragraph_body(p), env2, pm, guard, pos, out)
                return
        if op == "quant":
            q = n.attrs["q"]
            universal = {("all", True): True, ("no", True): False, ("some", False): False}
            existential = {("some", True): True, ("all", False): False, ("no", False): True}
            if (q, pos) in universal:
                body_pos = universal[(q, pos)]
                for e2, gl in self.bindings(ch[:-1], env, mod):
                    self.decompose(ch[-1], e2, mod, c.and_(guard, c.and_n(gl)), body_pos, out)
                return
            if (q, pos) in existential:
                self._exists(n, env, mod, guard, pos, existential[(q, pos)], out)
                return
        lit = self.tr_f(n, env, mod)
        lit = c.or_(-guard, lit if pos else -lit)
        if lit != TRUE:
            out.append(Conjunct(n, mod, lit))

    def _exists(self, n: Node, env: dict, mod: Model, guard: int, pos: bool, body_pos: bool, out: list):
        """Existential in conjunctive position: a witness binding must make
        the body hold with polarity `body_pos`."""
        c = self.c
        want = n.attrs["q"]
        decls = list(n.children[:-1])
        body = n.children[-1]
        while want != "no" and body.op == "quant" and body.attrs["q"] == want:
            decls += body.children[:-1]
            body = body.children[-1]
        conj = _flatten(body, body_pos)
        slots = [(d, nm) for d in decls for nm in d.attrs["names"]]
        slot_index = {}
        for i, (_, nm) in enumerate(slots):
            slot_index[nm] = i  # later declarations shadow earlier ones
        # Conjuncts that pin the bound variables prune bindings early. Ones
        # that call predicates or functions are left to decomposition so
        # their own nodes carry the blame.
        checks: dict[int, list] = {}
        for x, xpos in conj:
            idx = [slot_index[v] for v in self.fv(x, mod) if v in slot_index]
            if idx and not self.callees(x, mod):
                checks.setdefault(max(idx), []).append((x, xpos))

        viable: list[tuple[dict, list[int]]] = []
        cap = self.g.skolem_cap
        aborted = False
        dom_cache: dict = {}

        def dfs(k: int, e: dict, gl: list[int], same_decl: list[int]):
            nonlocal aborted
            if aborted:
                return
            if k == len(slots):
                viable.append((e, gl))
                if len(viable) > cap:
                    aborted = True
                return
            d, nm = slots[k]
            first_of_decl = k == 0 or slots[k - 1][0] is not d
            if first_of_decl:
                same_decl = []
            dk = (id(d), tuple(id(e.get(v)) for v in sorted(self.fv(d.children[0], mod))))
            dom = dom_cache.get(dk)
            if dom is None:
                dom = self.tr_e(d.children[0], e, mod)
                dom_cache[dk] = dom
            for (a,), dv in sorted(dom.cells.items()):
                if d.attrs.get("disj") and a in same_decl:
                    continue
                e2 = dict(e)
                e2[nm] = Matrix.singleton(a)
                ok = True
                for x, xpos in checks.get(k, ()):
                    v = self.tr_f(x, e2, mod)
                    if (v if xpos else -v) == FALSE:
                        ok = False
                        break
                if ok:
                    dfs(k + 1, e2, gl + [dv], same_decl + [a])
                if aborted:
                    return

        dfs(0, env, [], [])
        if aborted:
            lit = self.tr_f(n, env, mod)
            out.append(Conjunct(n, mod, c.or_(-guard, lit if pos else -lit)))
            return
        if not viable:
            out.append(Conjunct(n, mod, -guard))
            return
        if len(viable) == 1:
            e2, gl = viable[0]
            g = c.and_n(gl)
            if g != TRUE:
                out.append(Conjunct(n, mod, c.or_(-guard, g)))
            self.decompose(body, e2, mod, guard, body_pos, out)
            return
        base_key = self.key("sk", n, env, mod) + (guard,)
        sels = [self.g.skolem(base_key + (i,)) for i in range(len(viable))]
        out.append(Conjunct(n, mod, c.or_(-guard, c.or_n(sels))))
        for sel, (e2, gl) in zip(sels, viable):
            g = c.and_n(gl)
            if g != TRUE:
                out.append(Conjunct(n, mod, c.or_(-sel, g)))
            self.decompose(body, e2, mod, c.and_(guard, sel), body_pos, out)

    # -- whole formulas -------------------------------------------------------------

    def structural(self) -> list[Conjunct]:
        """Signature and field constraints of the base model."""
        out = [Conjunct(s, self.base, lit) for s, lit in self.b.sig_constraints(self.base)]
        for f, lit in self._field_constraints():
            out.append(Conjunct(f, self.base, lit))
        return out

    def _field_constraints(self) -> list[tuple[Node, int]]:
        c = self.c
        out = []
        m = self.base
        for s in m.sigs.values():
            srel = self.b.sig_rel[s.name]
            for f in sig_fields(s):
                key = ("field", f.name, f.attrs["mult"])
                lit = self.g.cache.get(key)
                if lit is None:
                    rel = self.b.field_rel[f.name]
                    typ = self.tr_e(f.children[0], {}, m)
                    parts = [c.or_(-v, c.and_(srel.get(t[:1]), typ.get(t[1:]))) for t, v in rel.cells.items()]
                    mult = f.attrs["mult"]
                    if mult != "set":
                        for (a,), sv in srel.cells.items():
                            img = Matrix(rel.arity - 1, {t[1:]: v for t, v in rel.cells.items() if t[0] == a})
                            if mult == "one":
                                k = mx.one(c, img)
                            elif mult == "lone":
                                k = mx.lone(c, img)
                            else:
                                k = mx.some(c, img)
                            parts.append(c.or_(-sv, k))
                    lit = c.and_n(parts)
                    self.g.cache[key] = lit
                if lit != TRUE:
                    out.append((f, lit))
        return out

    def facts(self) -> list[Conjunct]:
        out: list[Conjunct] = []
        for p in self.base.paragraphs:
            if p.op == "fact":
                self.decompose(paragraph_body(p), {}, self.base, TRUE, True, out)
            elif p.op == "sig" and sig_fact(p) is not None:
                body = sig_fact(p)
                for t, v in sorted(self.b.sig_rel[p.name].cells.items()):
                    self.decompose(body, {"this": Matrix(1, {t: TRUE})}, self.base, v, True, out)
        return out

    def model_conjuncts(self) -> list[Conjunct]:
        return self.structural() + self.facts()

    def model_formula(self) -> int:
        """Structural constraints and facts as one literal with existentials
        expanded rather than skolemized, so it may be negated."""
        c = self.c
        parts = [x.lit for x in self.structural()]
        for p in self.base.paragraphs:
            if p.op == "fact":
                parts.append(self.tr_f(paragraph_body(p), {}, self.base))
            elif p.op == "sig" and sig_fact(p) is not None:
                body = sig_fact(p)
                for t, v in sorted(self.b.sig_rel[p.name].cells.items()):
                    parts.append(c.or_(-v, self.tr_f(body, {"this": Matrix(1, {t: TRUE})}, self.base)))
        return c.and_n(parts)

    def command(self, module: Model, kind: str, target: str) -> tuple[list[Conjunct], dict[str, Matrix]]:
        """Conjuncts of a run (predicate body, parameters skolemized as fresh
        relations) or check (negated assertion body)."""
        out: list[Conjunct] = []
        look = self.look(module)
        if kind == "run":
            got = look.pred(target)
            if got is None:
                raise AnalysisError(f"no predicate {target!r}")
            pm, p = got
            env, pcons = self.param_relations(p, pm)
            out += pcons
            self.decompose(paragraph_body(p), env, pm, TRUE, True, out)
            return out, env
        a = None
        for m in look.models():
            if target in m.asserts:
                a, am = m.asserts[target], m
                break
        if a is None:
            raise AnalysisError(f"no assertion {target!r}")
        self.decompose(paragraph_body(a), {}, am, TRUE, False, out)
        return out, {}

    def param_relations(self, p: Node, pm: Model):
        """Fresh relation variables for predicate parameters."""
        c = self.c
        env: dict[str, Matrix] = {}
        cons: list[Conjunct] = []
        for d in params(p):
            for nm in d.attrs["names"]:
                dom = self.tr_e(d.children[0], env, pm)
                cells = {}
                parts = []
                for t, dv in sorted(dom.cells.items()):
                    v = self.g.skolem(("param", self.ctx_id(p, pm), nm, t))
                    cells[t] = v
                    parts.append(c.or_(-v, dv))
                rel = Matrix(dom.arity, cells)
                mult = d.attrs.get("mult", "one")
                if mult == "one":
                    parts.append(mx.one(c, rel))
                elif mult == "lone":
                    parts.append(mx.lone(c, rel))
                elif mult == "some":
                    parts.append(mx.some(c, rel))
                lit = c.and_n(parts)
                if lit != TRUE:
                    cons.append(Conjunct(d, pm, lit))
                env[nm] = rel
        return env, cons


def _flatten(n: Node, pos: bool) -> list[tuple[Node, bool]]:
    if (n.op in ("block", "and") and pos) or (n.op == "or" and not pos):
        return [x for ch in n.children for x in _flatten(ch, pos)]
    if n.op == "not":
        return _flatten(n.children[0], not pos)
    return [(n, pos)]


def _freeze(v):
    if isinstance(v, list):
        return tuple(_freeze(x) for x in v)
    if isinstance(v, dict):
        return tuple(sorted((k, _freeze(x)) for k, x in v.items()))
    return v


def free_params(t: Translator, p: Node, pm: Model, tag) -> tuple[dict[str, Matrix], int]:
    """Parameter relations over the whole universe (so that two versions of a
    predicate can be compared on the same valuation), plus the literal saying
    the valuation fits the declarations."""
    c = t.c
    env: dict[str, Matrix] = {}
    parts = []
    univ = t.g.univ()
    for d in params(p):
        arity = pm.arity.get(d.children[0].id, 1)
        for nm in d.attrs["names"]:
            cells = {}
            for combo in cartesian(sorted(univ.cells), repeat=arity):
                tup = tuple(a for (a,) in combo)
                cells[tup] = t.g.skolem(("free", tag, nm, tup))
            rel = Matrix(arity, cells)
            parts.append(declared(t, d, rel, env, pm))
            env[nm] = rel
    return env, c.and_n(parts)


def declared(t: Translator, d: Node, rel: Matrix, env: dict, pm: Model) -> int:
    c = t.c
    dom = t.tr_e(d.children[0], env, pm)
    parts = [mx.subset(c, rel, dom)]
    mult = d.attrs.get("mult", "one")
    if mult == "one":
        parts.append(mx.one(c, rel))
    elif mult == "lone":
        parts.append(mx.lone(c, rel))
    elif mult == "some":
        parts.append(mx.some(c, rel))
    return c.and_n(parts)


def pred_lit(t: Translator, p: Node, pm: Model, env: dict[str, Matrix]) -> int:
    """The predicate holds for the parameter valuation in `env`."""
    c = t.c
    parts = []
    e: dict[str, Matrix] = {}
    for d in params(p):
        for nm in d.attrs["names"]:
            parts.append(declared(t, d, env[nm], e, pm))
            e[nm] = env[nm]
    parts.append(t.tr_f(paragraph_body(p), e, pm))
    return c.and_n(parts)
