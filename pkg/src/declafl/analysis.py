"""Name resolution, arity checking and paragraph-level static coverage."""

from __future__ import annotations

from dataclasses import dataclass, field

from declafl.ast.nodes import (
    COMPARE, EXPR_BINARY, FORMULA_BINARY, REL_UNARY, Model, Node,
    paragraph_body, params, sig_fact, sig_fields,
)
from declafl.errors import AnalysisError, ArityError, NameResolutionError, UnknownTest

ORDERING_OPS = {"first": 1, "last": 1, "next": 2, "prev": 2}


class Lookup:
    """Lookup chain shared by the resolver and the translator: a module
    (tests, or the model itself) backed by an optional base model."""

    def __init__(self, module: Model, base: Model | None = None):
        self.module = module
        self.base = base if base is not None and base is not module else None

    def models(self):
        yield self.module
        if self.base is not None:
            yield self.base

    def sig(self, name):
        for m in self.models():
            if name in m.sigs:
                return m.sigs[name]
        return None

    def field(self, name):
        for m in self.models():
            if name in m.fields:
                return m.fields[name]
        return None

    def field_owner(self, name):
        for m in self.models():
            if name in m.field_owner:
                return m.field_owner[name]
        return None

    def pred(self, name):
        for m in self.models():
            if name in m.preds:
                return m, m.preds[name]
        return None

    def fun(self, name):
        for m in self.models():
            if name in m.funs:
                return m, m.funs[name]
        return None

    def ordering(self, name):
        """`alias/op` -> (sig, op) for the built-in ordering."""
        if "/" not in name:
            return None
        alias, op = name.rsplit("/", 1)
        if op not in ORDERING_OPS:
            return None
        for m in self.models():
            for o in m.orderings:
                if o.alias == alias:
                    return o.sig, op
        return None

    def orderings(self):
        seen = []
        for m in self.models():
            for o in m.orderings:
                if o not in seen:
                    seen.append(o)
        return seen

    def ancestors(self, sig: Node) -> list[Node]:
        out = []
        cur = sig
        while cur.attrs.get("parent"):
            cur = self.sig(cur.attrs["parent"])
            if cur is None:
                break
            out.append(cur)
        return out

    def top(self, sig: Node) -> Node:
        anc = self.ancestors(sig)
        return anc[-1] if anc else sig


class _Resolver:
    def __init__(self, module: Model, base: Model | None):
        self.m = module
        self.look = Lookup(module, base)
        self.res: dict[int, tuple] = {}
        self.arity: dict[int, int] = {}
        self.fun_arity: dict[str, int] = {}
        self.this_sig: Node | None = None

    # -- checks over the whole module ---------------------------------------

    def run(self):
        m = self.m
        self._check_unique()
        for o in m.orderings:
            if self.look.sig(o.sig) is None:
                raise NameResolutionError(o.sig)
        for s in m.sigs.values():
            parent = s.attrs.get("parent")
            if parent and self.look.sig(parent) is None:
                raise NameResolutionError(parent, s.span)
        self._check_recursion()
        for p in m.paragraphs:
            if p.op == "sig":
                for f in sig_fields(p):
                    a = self.expr(f.children[0], {})
                    self.arity[f.id] = a + 1
        for p in m.paragraphs:
            self.paragraph(p)
        m.resolution = self.res
        m.arity = self.arity
        return m

    def _check_unique(self):
        seen: dict[tuple[str, str], Node] = {}
        for p in self.m.paragraphs:
            kind = "sig" if p.op == "sig" else ("fun" if p.op in ("pred", "fun") else p.op)
            key = (kind, p.name)
            if key in seen:
                raise AnalysisError(f"duplicate {p.op} {p.name!r}")
            seen[key] = p
        fields: set[str] = set()
        for s in self.m.sigs.values():
            for f in sig_fields(s):
                if f.name in fields or f.name in self.m.sigs:
                    raise AnalysisError(f"duplicate field {f.name!r}")
                fields.add(f.name)

    def _check_recursion(self):
        graph: dict[str, set[str]] = {}
        for p in self.m.paragraphs:
            if p.op in ("pred", "fun"):
                graph[p.name] = {n.name for n in p.walk()
                                 if n.op in ("call", "name") and n.name in self._callables()}
        state: dict[str, int] = {}

        def visit(v):
            state[v] = 1
            for w in graph.get(v, ()):
                if state.get(w) == 1:
                    raise AnalysisError(f"recursive call through {w!r}")
                if w not in state:
                    visit(w)
            state[v] = 2

        for v in graph:
            if v not in state:
                visit(v)

    def _callables(self):
        out = set(self.m.preds) | set(self.m.funs)
        return out

    # -- paragraphs -----------------------------------------------------------

    def paragraph(self, p: Node):
        if p.op == "sig":
            fact = sig_fact(p)
            if fact is not None:
                self.this_sig = p
                self.formula(fact, {"this": 1})
                self.this_sig = None
            return
        env: dict[str, int] = {}
        for d in params(p):
            a = self.expr(d.children[0], env)
            for name in d.attrs["names"]:
                env[name] = a
        if p.op == "fun":
            self.expr(p.children[-2], env)
            self.expr(p.children[-1], env)
        else:
            self.formula(paragraph_body(p), env)

    def fun_result_arity(self, fm: Model, fn: Node) -> int:
        key = fn.name
        if key not in self.fun_arity:
            # the return type is closed over the parameters
            env: dict[str, int] = {}
            for d in params(fn):
                env.update({n: _static_arity(d.children[0], env, self.look) for n in d.attrs["names"]})
            self.fun_arity[key] = _static_arity(fn.children[-2], env, self.look)
        return self.fun_arity[key]

    # -- formulas -------------------------------------------------------------

    def formula(self, n: Node, env: dict[str, int]):
        a = self.node(n, env)
        if a != 0:
            raise ArityError(f"expected a formula at {_where(n)}")

    def expr(self, n: Node, env: dict[str, int]) -> int:
        a = self.node(n, env)
        if a == 0:
            raise ArityError(f"expected an expression at {_where(n)}")
        return a

    def node(self, n: Node, env: dict[str, int]) -> int:
        a = self._node(n, env)
        self.arity[n.id] = a
        return a

    def _node(self, n: Node, env: dict[str, int]) -> int:
        op = n.op
        if op in FORMULA_BINARY:
            for c in n.children:
                self.formula(c, env)
            return 0
        if op == "not":
            self.formula(n.children[0], env)
            return 0
        if op == "ite":
            for c in n.children:
                self.formula(c, env)
            return 0
        if op == "block":
            for c in n.children:
                self.formula(c, env)
            return 0
        if op in COMPARE:
            a = self.expr(n.children[0], env)
            b = self.expr(n.children[1], env)
            if a != b:
                raise ArityError(f"arity mismatch {a} vs {b} at {_where(n)}")
            return 0
        if op == "mult":
            self.expr(n.children[0], env)
            return 0
        if op == "quant":
            inner = dict(env)
            for d in n.children[:-1]:
                a = self.expr(d.children[0], inner)
                if a != 1:
                    raise ArityError(f"quantifier domain must be a set at {_where(d)}")
                self.arity[d.id] = a
                for name in d.attrs["names"]:
                    inner[name] = a
            self.formula(n.children[-1], inner)
            return 0
        if op == "let":
            a = self.expr(n.children[0], env)
            inner = dict(env)
            inner[n.name] = a
            return self.node(n.children[1], inner)
        if op in ("union", "diff", "inter"):
            a = self.expr(n.children[0], env)
            b = self.expr(n.children[1], env)
            if a != b:
                raise ArityError(f"arity mismatch {a} vs {b} at {_where(n)}")
            return a
        if op == "product":
            return self.expr(n.children[0], env) + self.expr(n.children[1], env)
        if op == "join":
            a = self.expr(n.children[0], env)
            b = self.expr(n.children[1], env)
            if a + b - 2 < 1:
                raise ArityError(f"join of two sets at {_where(n)}")
            return a + b - 2
        if op in REL_UNARY:
            if self.expr(n.children[0], env) != 2:
                raise ArityError(f"{op} needs a binary relation at {_where(n)}")
            return 2
        if op == "const":
            return 2 if n.attrs["which"] == "iden" else 1
        if op == "name":
            kind, a = self.lookup(n.name, env, n)
            self.res[n.id] = kind
            return a
        if op == "call":
            return self.call(n, env)
        raise AnalysisError(f"unexpected node {op!r}")

    def lookup(self, name: str, env: dict[str, int], n: Node) -> tuple[tuple, int]:
        if name in env:
            return ("var", name), env[name]
        look = self.look
        if self.this_sig is not None:
            for s in [self.this_sig] + look.ancestors(self.this_sig):
                for f in sig_fields(s):
                    if f.name == name:
                        return ("thisfield", name), self._field_arity(name) - 1
        if look.sig(name) is not None:
            return ("sig", name), 1
        if look.field(name) is not None:
            return ("field", name), self._field_arity(name)
        o = look.ordering(name)
        if o is not None:
            return ("builtin", o[1], o[0]), ORDERING_OPS[o[1]]
        p = look.pred(name)
        if p is not None and not params(p[1]):
            return ("pred", name), 0
        f = look.fun(name)
        if f is not None and not params(f[1]):
            return ("fun", name), self.fun_result_arity(*f)
        raise NameResolutionError(name, n.span)

    def _field_arity(self, name: str) -> int:
        f = self.look.field(name)
        if f.id in self.arity and self.look.module.owns(f):
            return self.arity[f.id]
        return 1 + _static_arity(f.children[0], {}, self.look)

    def call(self, n: Node, env: dict[str, int]) -> int:
        name = n.name
        look = self.look
        if name not in env:
            p = look.pred(name)
            if p is not None:
                want = len(_names(params(p[1])))
                if want != len(n.children):
                    raise ArityError(f"{name} expects {want} arguments, got {len(n.children)}")
                for c in n.children:
                    self.expr(c, env)
                self.res[n.id] = ("pred", name)
                return 0
            f = look.fun(name)
            if f is not None:
                want = len(_names(params(f[1])))
                if want != len(n.children):
                    raise ArityError(f"{name} expects {want} arguments, got {len(n.children)}")
                for c in n.children:
                    self.expr(c, env)
                self.res[n.id] = ("fun", name)
                return self.fun_result_arity(*f)
        kind, a = self.lookup(name, env, n)
        if kind[0] in ("pred", "fun"):
            raise ArityError(f"{name} takes no arguments")
        self.res[n.id] = ("box",) + kind
        for c in n.children:
            b = self.expr(c, env)
            a = a + b - 2
            if a < 1:
                raise ArityError(f"box join of two sets at {_where(n)}")
        return a


def _names(decls: list[Node]) -> list[str]:
    return [x for d in decls for x in d.attrs["names"]]


def _where(n: Node) -> str:
    if n.span is None:
        return f"node {n.id}"
    return f"{n.span.line}:{n.span.col}"


def _static_arity(n: Node, env: dict[str, int], look: Lookup) -> int:
    """Arity of a declaration-level expression without recording anything."""
    op = n.op
    if op == "name":
        if n.name in env:
            return env[n.name]
        if look.sig(n.name) is not None:
            return 1
        f = look.field(n.name)
        if f is not None:
            return 1 + _static_arity(f.children[0], {}, look)
        o = look.ordering(n.name)
        if o is not None:
            return ORDERING_OPS[o[1]]
        raise NameResolutionError(n.name, n.span)
    if op == "const":
        return 2 if n.attrs["which"] == "iden" else 1
    if op in ("union", "diff", "inter"):
        return _static_arity(n.children[0], env, look)
    if op == "product":
        return sum(_static_arity(c, env, look) for c in n.children)
    if op == "join":
        return sum(_static_arity(c, env, look) for c in n.children) - 2
    if op in REL_UNARY:
        return 2
    if op == "call":
        a = _static_arity(Node("name", [], {"name": n.name}, n.span), env, look)
        for c in n.children:
            a += _static_arity(c, env, look) - 2
        return a
    raise ArityError(f"unsupported declaration expression {op!r}")


def resolve(model: Model, base: Model | None = None) -> Model:
    """Resolve every name in `model` (against `base` for test modules).

    Results land in `model.resolution` (node id -> resolution tuple) and
    `model.arity` (node id -> arity, 0 for formulas). Returns `model`.
    """
    return _Resolver(model, base).run()


def ensure_resolved(model: Model, base: Model | None = None) -> Model:
    if model.resolution is None:
        resolve(model, base)
    return model


# -- static coverage ------------------------------------------------------------


class _Coverage:
    """Paragraph dependencies with unused-binding pruning.

    Paragraphs are identified by node object identity because test
    paragraphs live in a separate module arena."""

    def __init__(self, model: Model):
        self.model = model
        self.memo: dict[int, list[tuple[Model, Node]]] = {}

    def direct(self, module: Model, p: Node) -> list[tuple[Model, Node]]:
        key = id(p)
        if key in self.memo:
            return self.memo[key]
        look = Lookup(module, self.model)
        out: list[tuple[Model, Node]] = []
        if p.op == "sig":
            out += [(module, a) for a in look.ancestors(p)]
            for f in sig_fields(p):
                out += self.walk(module, f.children[0])[0]
            fact = sig_fact(p)
            if fact is not None:
                out += self.walk(module, fact)[0]
        elif p.op in ("pred", "fun", "fact", "assert"):
            deps, used = self.walk(module, paragraph_body(p))
            if p.op == "fun":
                d2, u2 = self.walk(module, p.children[-2])
                deps += d2
                used |= u2
            out += deps
            for d in reversed(params(p)):
                if used & set(d.attrs["names"]):
                    dd, uu = self.walk(module, d.children[0])
                    out += dd
                    used |= uu
        self.memo[key] = out
        return out

    def closure(self, module: Model, roots: list[Node]) -> set[int]:
        """Model paragraph ids reachable from `roots` (roots included)."""
        seen: set[int] = set()
        out: set[int] = set()
        stack = [(module, r) for r in roots]
        while stack:
            m, p = stack.pop()
            if id(p) in seen:
                continue
            seen.add(id(p))
            if self.model.owns(p):
                out.add(p.id)
                m = self.model
            stack.extend(self.direct(m, p))
        return out

    def walk(self, module: Model, n: Node) -> tuple[list[tuple[Model, Node]], set[str]]:
        """(paragraphs referenced, free variable names used) of a subtree."""
        res = module.resolution or {}
        look = Lookup(module, self.model)
        op = n.op
        deps: list[tuple[Model, Node]] = []
        used: set[str] = set()
        if op == "quant":
            deps, used = self.walk(module, n.children[-1])
            for d in reversed(n.children[:-1]):
                names = set(d.attrs["names"])
                if used & names:
                    dd, uu = self.walk(module, d.children[0])
                    deps += dd
                    used = (used - names) | uu
                else:
                    used -= names
            return deps, used
        if op == "let":
            deps, used = self.walk(module, n.children[1])
            if n.name in used:
                dd, uu = self.walk(module, n.children[0])
                deps += dd
                used = (used - {n.name}) | uu
            return deps, used
        if op in ("name", "call"):
            kind = res.get(n.id) or ("var", n.name)
            if kind[0] == "box":
                kind = kind[1:]
            tag = kind[0]
            target = None
            if tag == "var":
                used.add(kind[1])
            elif tag == "sig":
                target = look.sig(kind[1])
            elif tag in ("field", "thisfield"):
                target = look.field_owner(kind[1])
            elif tag == "builtin":
                target = look.sig(kind[2])
            elif tag == "pred":
                target = look.pred(kind[1])[1]
            elif tag == "fun":
                target = look.fun(kind[1])[1]
            if target is not None:
                deps.append((_home(module, self.model, target), target))
        for c in n.children:
            d, u = self.walk(module, c)
            deps += d
            used |= u
        return deps, used

    def facts(self) -> list[Node]:
        return [p for p in self.model.paragraphs
                if p.op == "fact" or (p.op == "sig" and sig_fact(p) is not None)]


def _home(module: Model, model: Model, p: Node) -> Model:
    return model if model.owns(p) else module


def covered_paragraphs(model: Model, test) -> list[Node]:
    """Model paragraphs a test depends on, in model order."""
    module = test.module if test.module is not None else model
    ensure_resolved(model)
    ensure_resolved(module, model)
    target = _test_paragraph(module, test)
    cov = _Coverage(model)
    ids = cov.closure(model, cov.facts()) | cov.closure(module, [target])
    return [p for p in model.paragraphs if p.id in ids]


def static_coverage(model: Model, test) -> set[int]:
    """All model node ids of paragraphs transitively used by `test`.

    Facts are always used. A quantified or let-bound variable that is never
    referenced does not pull in its bounding expression."""
    out: set[int] = set()
    for p in covered_paragraphs(model, test):
        out.update(model.descendants(p.id, inclusive=True))
    return out


def _test_paragraph(module: Model, test) -> Node:
    p = module.preds.get(test.target) if test.kind == "run" else module.asserts.get(test.target)
    if p is None:
        raise UnknownTest(f"test {test.name!r} has no paragraph {test.target!r}")
    return p


@dataclass
class DependencyGraph:
    edges: dict[str, set[str]] = field(default_factory=dict)
    coverage: dict[str, set[int]] = field(default_factory=dict)

    def as_json(self) -> dict:
        return {
            "edges": {k: sorted(v) for k, v in self.edges.items()},
            "coverage": {k: sorted(v) for k, v in self.coverage.items()},
        }


def dependency_graph(model: Model, suite=()) -> DependencyGraph:
    ensure_resolved(model)
    cov = _Coverage(model)
    g = DependencyGraph()
    for p in model.paragraphs:
        g.edges[p.name] = {q.name for _, q in cov.direct(model, p) if model.owns(q) and q is not p}
    for t in suite:
        g.coverage[t.name] = static_coverage(model, t)
    return g
