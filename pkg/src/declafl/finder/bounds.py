"""Universe construction and relation bounds for one scope."""

from __future__ import annotations

from declafl.analysis import Lookup
from declafl.ast.nodes import Model, Node, sig_fields
from declafl.errors import ScopeError
from declafl.finder.circuit import FALSE, TRUE, Circuit
from declafl.finder.matrix import Matrix
from declafl.scope import Scope


class Bounds:
    """Atoms, relation matrices and structural constraints.

    Every top-level signature owns its atoms (`T$i`). A `one sig` gets a
    dedicated atom named after itself and its membership is constant, unless
    the signature is listed in `relax`, in which case its multiplicity is a
    constraint instead. Membership variables are allocated first, in
    declaration order, then field variables with tuples in lexicographic
    order.
    """

    def __init__(self, model: Model, scope: Scope, circuit: Circuit, relax=frozenset()):
        self.model = model
        self.scope = scope
        self.c = circuit
        self.relax = frozenset(relax)
        self.look = Lookup(model)
        self.atoms: list[str] = []
        self.sig_atoms: dict[str, list[int]] = {}   # top-level sig -> atoms
        self.top_of: dict[str, str] = {}
        self.sig_rel: dict[str, Matrix] = {}
        self.field_rel: dict[str, Matrix] = {}
        self.field_upper: dict[str, Matrix] = {}
        self.ordering: dict[str, dict[str, Matrix]] = {}
        self.primary: dict[int, tuple[str, tuple[int, ...]]] = {}
        self._sig_memo: dict = {}
        self._build()

    # -- helpers ----------------------------------------------------------------

    def _children(self, s: Node) -> list[Node]:
        return [x for x in self.model.sigs.values() if x.attrs.get("parent") == s.name]

    def _hierarchy(self, s: Node) -> list[Node]:
        out = [s]
        for ch in self._children(s):
            out.extend(self._hierarchy(ch))
        return out

    def _dedicated(self, s: Node) -> bool:
        return s.attrs.get("mult") == "one" and s.name not in self.relax

    def _var(self, rel: str, t: tuple[int, ...]) -> int:
        v = self.c.new_var((rel, t))
        self.primary[v] = (rel, t)
        return v

    # -- construction -------------------------------------------------------------

    def _build(self):
        model = self.model
        tops = [s for s in model.sigs.values() if not s.attrs.get("parent")]
        ordered = {o.sig for o in model.orderings}
        for o in model.orderings:
            s = model.sigs[o.sig]
            if s.attrs.get("parent"):
                raise ScopeError(f"ordering over subsignature {o.sig!r} is not supported")
        dedicated_atom: dict[str, int] = {}
        exact_top: dict[str, bool] = {}
        for t in tops:
            for s in self._hierarchy(t):
                got = self.scope.get(s.name)
                if got is None and s is t:
                    got = (self.scope.default, False)
                if got is not None and got[0] == 0 and s.attrs.get("mult") in ("one", "some"):
                    raise ScopeError(f"signature {s.name!r} needs at least one atom")
                self.top_of[s.name] = t.name
            hier = self._hierarchy(t)
            ded = [s for s in hier if self._dedicated(s)]
            got = self.scope.get(t.name)
            n, exact = got if got is not None else (self.scope.default, False)
            if t.name in ordered:
                exact = True
            if self._dedicated(t):
                n, exact = 1, True
            if exact and n < len(ded):
                raise ScopeError(f"exact scope {n} for {t.name!r} is below its {len(ded)} singleton subsignatures")
            ids = []
            for s in ded:
                dedicated_atom[s.name] = len(self.atoms)
                ids.append(len(self.atoms))
                self.atoms.append(f"{s.name}$0")
            for i in range(max(0, n - len(ded))):
                ids.append(len(self.atoms))
                self.atoms.append(f"{t.name}${i}")
            self.sig_atoms[t.name] = ids
            exact_top[t.name] = exact

        # membership, in declaration order
        for s in model.sigs.values():
            top = self.top_of[s.name]
            if self._dedicated(s):
                self.sig_rel[s.name] = Matrix(1, {(dedicated_atom[s.name],): TRUE})
                continue
            sub = {x.name for x in self._hierarchy(s)}
            cells = {}
            if s.attrs.get("parent"):
                parent = self.sig_rel[s.attrs["parent"]]
                candidates = [t[0] for t in parent.cells]
            else:
                candidates = self.sig_atoms[top]
            for a in candidates:
                owner = next((k for k, v in dedicated_atom.items() if v == a), None)
                if owner is not None and owner not in sub:
                    continue  # belongs to a singleton elsewhere in the hierarchy
                if owner is not None or (not s.attrs.get("parent") and exact_top[top]):
                    cells[(a,)] = TRUE
                else:
                    cells[(a,)] = self._var(s.name, (a,))
            self.sig_rel[s.name] = Matrix(1, cells)

        for o in model.orderings:
            atoms = self.sig_atoms[o.sig]
            self.ordering[o.alias] = {
                "first": Matrix(1, {(atoms[0],): TRUE} if atoms else {}),
                "last": Matrix(1, {(atoms[-1],): TRUE} if atoms else {}),
                "next": Matrix(2, {(a, b): TRUE for a, b in zip(atoms, atoms[1:])}),
                "prev": Matrix(2, {(b, a): TRUE for a, b in zip(atoms, atoms[1:])}),
            }

        for s in model.sigs.values():
            for f in sig_fields(s):
                upper = self.upper(f.children[0])
                cells = {}
                owner = sorted(t for t in self.sig_rel[s.name].cells)
                for a in owner:
                    for t in sorted(upper):
                        tup = a + t
                        cells[tup] = self._var(f.name, tup)
                self.field_rel[f.name] = Matrix(1 + _arity_of(upper, f), cells)

    def sig_constraints(self, model: Model) -> list[tuple[Node, int]]:
        """(signature node, literal) pairs for hierarchy, abstractness,
        multiplicity and subsignature scopes, read from `model` (which must
        share this layout; relaxed multiplicities may differ)."""
        key = tuple((s.name, s.attrs.get("mult"), bool(s.attrs.get("abstract"))) for s in model.sigs.values())
        got = self._sig_memo.get(key)
        if got is not None:
            return [(model.sigs[name], lit) for name, lit in got]
        c = self.c
        out = []
        for s in model.sigs.values():
            rel = self.sig_rel[s.name]
            parts = []
            parent = s.attrs.get("parent")
            if parent:
                prel = self.sig_rel[parent]
                parts += [c.or_(-v, prel.get(t)) for t, v in rel.cells.items()]
                # disjoint from earlier siblings
                for sib in [x for x in model.sigs.values() if x.attrs.get("parent") == parent]:
                    if sib is s:
                        break
                    srel = self.sig_rel[sib.name]
                    parts += [-c.and_(v, srel.get(t)) for t, v in rel.cells.items()]
            kids = [x for x in model.sigs.values() if x.attrs.get("parent") == s.name]
            if s.attrs.get("abstract") and kids:
                parts += [c.or_(-v, c.or_n([self.sig_rel[k.name].get(t) for k in kids]))
                          for t, v in rel.cells.items()]
            mult = s.attrs.get("mult")
            vals = list(rel.cells.values())
            if mult == "one" and not self._dedicated(s):
                parts.append(c.and_(c.or_n(vals), c.at_most_one(vals)))
            elif mult == "lone":
                parts.append(c.at_most_one(vals))
            elif mult == "some":
                parts.append(c.or_n(vals))
            got = self.scope.get(s.name)
            if got is not None and parent:
                n, exact = got
                parts.append(c.count_between(vals, n if exact else 0, n))
            lit = c.and_n(parts)
            if lit != TRUE:
                out.append((s.name, lit))
        self._sig_memo[key] = out
        return [(model.sigs[name], lit) for name, lit in out]

    # -- upper bounds -----------------------------------------------------------

    def upper(self, e: Node) -> set[tuple[int, ...]]:
        """Over-approximate tuple set of a declaration expression."""
        op = e.op
        if op == "name":
            if e.name in self.sig_rel:
                return set(self.sig_rel[e.name].cells)
            if e.name in self.field_rel:
                return set(self.field_rel[e.name].cells)
            if e.name in self.model.fields:
                raise ScopeError(f"field type refers to later field {e.name!r}")
            o = self.look.ordering(e.name)
            if o is not None:
                return set(self.ordering[o_alias(self.model, e.name)][o[1]].cells)
            raise ScopeError(f"cannot bound {e.name!r}")
        if op == "const":
            w = e.attrs["which"]
            if w == "none":
                return set()
            univ = {(a,) for a in range(len(self.atoms))}
            return univ if w == "univ" else {(a, a) for a in range(len(self.atoms))}
        if op in ("union",):
            return self.upper(e.children[0]) | self.upper(e.children[1])
        if op in ("diff",):
            return self.upper(e.children[0])
        if op == "inter":
            return self.upper(e.children[0]) & self.upper(e.children[1])
        if op == "product":
            return {s + t for s in self.upper(e.children[0]) for t in self.upper(e.children[1])}
        if op == "join":
            a, b = self.upper(e.children[0]), self.upper(e.children[1])
            return {s[:-1] + t[1:] for s in a for t in b if s[-1] == t[0]}
        if op == "transpose":
            return {(t[1], t[0]) for t in self.upper(e.children[0])}
        raise ScopeError(f"unsupported field type expression {op!r}")

    # -- relations ------------------------------------------------------------

    def univ(self) -> Matrix:
        c = self.c
        cells: dict = {}
        for s in self.model.sigs.values():
            if not s.attrs.get("parent"):
                for t, v in self.sig_rel[s.name].cells.items():
                    cells[t] = c.or_(cells[t], v) if t in cells else v
        return Matrix(1, cells)

    def iden(self) -> Matrix:
        return Matrix(2, {(t[0], t[0]): v for t, v in self.univ().cells.items()})

    def ordering_rel(self, alias: str, op: str) -> Matrix:
        return self.ordering[alias][op]

    def var_count(self) -> int:
        return len(self.primary)


def o_alias(model: Model, name: str) -> str:
    return name.rsplit("/", 1)[0]


def _arity_of(upper: set, f: Node) -> int:
    if upper:
        return len(next(iter(upper)))
    # empty type: fall back to the syntactic arity of the declaration
    return _syntactic_arity(f.children[0])


def _syntactic_arity(e: Node) -> int:
    if e.op == "product":
        return _syntactic_arity(e.children[0]) + _syntactic_arity(e.children[1])
    if e.op == "join":
        return _syntactic_arity(e.children[0]) + _syntactic_arity(e.children[1]) - 2
    if e.op in ("union", "diff", "inter"):
        return _syntactic_arity(e.children[0])
    if e.op == "transpose" or (e.op == "const" and e.attrs["which"] == "iden"):
        return 2
    return 1


def bounds_key(model: Model, scope: Scope, relax=frozenset()):
    """Models with equal keys get interchangeable bounds. Multiplicities and
    abstractness only matter for dedicated singleton atoms."""
    sigs = tuple((s.name, s.attrs.get("mult") == "one" and s.name not in relax, s.attrs.get("parent"),
                  tuple((f.name, f.children[0].structure()) for f in sig_fields(s)))
                 for s in model.sigs.values())
    return (sigs, tuple(model.orderings), scope, frozenset(relax))
