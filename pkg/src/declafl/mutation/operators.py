"""Mutation operators over the AST.

Tags: MOR (signature multiplicity), QOR (quantifier / multiplicity test),
UOR (unary operator replacement), BOR (binary operator replacement within
a family), LOR (&& and ||), UOI (unary insertion on binary relations), UOD
(unary deletion), LOD (keep one operand of a logical binary), PBD
(paragraph body deletion), BOE (operand exchange), IEOE (swap then/else).
"""

from __future__ import annotations

from dataclasses import dataclass, field

from declafl.analysis import resolve
from declafl.ast.nodes import Model, Node, paragraph_body, sig_fact
from declafl.ast.printer import print_node
from declafl.errors import DeclaflError, InvalidMutant

OPERATORS = ("MOR", "QOR", "UOR", "BOR", "LOR", "UOI", "UOD", "LOD", "PBD", "BOE", "IEOE")

QUANTS = ("all", "some", "no", "lone", "one")
MULT_TESTS = ("some", "no", "lone", "one")
SIG_MULTS = ("one", "lone", None)
UNARY = ("transpose", "closure", "rclosure")
UNARY_SYM = {"transpose": "~", "closure": "^", "rclosure": "*"}
LOGICAL = ("and", "or", "implies", "iff")
SETOPS = ("union", "diff", "inter")
COMPARES = ("in", "eq")
NONCOMMUTATIVE = ("diff", "join", "product", "implies", "in")


@dataclass
class Mutant:
    base: Model
    node_id: int
    op: str
    variant: object
    model: Model
    # (start id, old size, new size) of each rewritten region, for id mapping
    regions: list[tuple[int, int, int]] = field(default_factory=list)
    parts: tuple = ()

    @property
    def key(self) -> tuple:
        return (self.node_id, OPERATORS.index(self.op), str(self.variant))

    def map_id(self, old: int) -> int | None:
        """Id in the mutant of a base node outside the rewritten subtrees."""
        new = old
        for start, old_size, new_size in sorted(self.regions):
            if start <= old < start + old_size:
                return None if old != start or new_size == 0 else new
            if old >= start + old_size:
                new += new_size - old_size
        return new

    def describe(self) -> str:
        return f"{self.op}@{self.node_id}:{self.variant}"

    def as_json(self) -> dict:
        n = self.base.node(self.node_id)
        out = {"node_id": self.node_id, "operator": self.op, "variant": self.variant,
               "original": _snippet(n)}
        if self.op not in ("MOR", "PBD"):
            m = self.model.node(self.map_id(self.node_id))
            out["mutated"] = _snippet(m)
        if self.parts:
            out["parts"] = [list(p) for p in self.parts]
        return out


def _snippet(n: Node) -> str:
    if n.op == "sig":
        return f"{n.attrs.get('mult') or ''} sig {n.name}".strip()
    try:
        return print_node(n, 0)
    except Exception:  # paragraphs and declarations have no expression form
        return n.op


def _in_field(model: Model, nid: int) -> bool:
    cur = nid
    while cur is not None:
        n = model.nodes[cur]
        if n.op == "field":
            return True
        cur = model._parent[cur]
    return False


def _body_roots(model: Model) -> dict[int, Node]:
    out = {}
    for p in model.paragraphs:
        if p.op in ("fact", "pred", "assert"):
            out[paragraph_body(p).id] = p
        elif p.op == "sig" and sig_fact(p) is not None:
            out[sig_fact(p).id] = p
    return out


def applicable_ops(model: Model, nid: int) -> list[tuple[str, object]]:
    """Every (operator, variant) applicable at node `nid`."""
    n = model.node(nid)
    op = n.op
    out: list[tuple[str, object]] = []
    if nid == model.root.id or _in_field(model, nid) or op in ("decl", "field"):
        return out
    if op == "sig":
        cur = n.attrs.get("mult")
        out += [("MOR", m) for m in SIG_MULTS if m != cur]
        return out
    if op in ("pred", "fact", "assert", "fun"):
        return out
    body_of = _body_roots(model)
    parent = model.nodes[model._parent[nid]]
    if op == "quant":
        out += [("QOR", q) for q in QUANTS if q != n.attrs["q"]]
    elif op == "mult":
        out += [("QOR", k) for k in MULT_TESTS if k != n.attrs["kind"]]
    elif op in UNARY:
        out += [("UOR", u) for u in UNARY if u != op]
        out.append(("UOD", 0))
    elif op == "not":
        out.append(("UOD", 0))
    elif op in LOGICAL:
        swap = {"and": "or", "or": "and"}.get(op)
        out += [("BOR", b) for b in LOGICAL if b != op and b != swap]
        if swap:
            out.append(("LOR", swap))
        out += [("LOD", 0), ("LOD", 1)]
    elif op in SETOPS:
        out += [("BOR", b) for b in SETOPS if b != op]
    elif op in COMPARES:
        out += [("BOR", b) for b in COMPARES if b != op]
    if op in NONCOMMUTATIVE:
        out.append(("BOE", 0))
    if op == "ite":
        out.append(("IEOE", 0))
    if (model.arity.get(nid) == 2 and op not in UNARY and parent.op not in UNARY
            and op not in ("decl",)):
        out += [("UOI", u) for u in UNARY]
    if nid in body_of and not (op == "block" and not n.children):
        out.append(("PBD", 0))
    return out


def _size(n: Node) -> int:
    return sum(1 for _ in n.walk())


def _rewrite(root: Node, nid: int, op: str, variant) -> tuple[int, int]:
    """Rewrite the node with pre-order index `nid` in place. Returns the
    (old, new) sizes of the region starting at `nid`."""
    # locate node and parent by pre-order index
    parent = None
    idx = 0
    target = None
    stack = [(root, None, 0)]
    while stack:
        n, p, ci = stack.pop()
        if idx == nid:
            target, parent, slot = n, p, ci
            break
        idx += 1
        for i in range(len(n.children) - 1, -1, -1):
            stack.append((n.children[i], n, i))
    if target is None:
        raise InvalidMutant(f"no node {nid}")
    n = target
    old = _size(n)

    def replace(new: Node):
        parent.children[slot] = new
        return new

    if op == "MOR":
        n.attrs["mult"] = variant
        return old, old
    if op == "PBD":
        if parent.op == "sig":
            del parent.children[slot]
            parent.attrs["has_fact"] = False
            return old, 0
        replace(Node("block", [], {}, n.span))
        return old, 1
    if op == "QOR":
        n.attrs["q" if n.op == "quant" else "kind"] = variant
    elif op in ("UOR", "BOR", "LOR"):
        n.op = variant
    elif op == "UOD":
        return old, _size(replace(n.children[0]))
    elif op == "LOD":
        return old, _size(replace(n.children[variant]))
    elif op == "BOE":
        n.children.reverse()
    elif op == "IEOE":
        n.children[1], n.children[2] = n.children[2], n.children[1]
    elif op == "UOI":
        replace(Node(variant, [n], {}, n.span))
        return old, old + 1
    else:
        raise InvalidMutant(f"unknown operator {op!r}")
    return old, old


def _rebuild(model: Model, root: Node) -> Model:
    m = Model(root, model.source, model.path, list(model.orderings), list(model.commands))
    try:
        resolve(m)
    except DeclaflError as e:
        raise InvalidMutant(str(e)) from e
    return m


def apply_op(op: str, variant, nid: int, model: Model) -> Mutant:
    """A fresh model with one rewrite applied. Raises InvalidMutant if the
    result does not resolve."""
    if (op, variant) not in applicable_ops(model, nid):
        raise InvalidMutant(f"{op}:{variant} is not applicable at node {nid}")
    root = model.root.clone()
    old, new = _rewrite(root, nid, op, variant)
    return Mutant(model, nid, op, variant, _rebuild(model, root), [(nid, old, new)])


def compose(a: Mutant, b: Mutant) -> Mutant:
    """Apply `b`'s rewrite on top of `a` (subtrees must be disjoint)."""
    base = a.base
    for s, size, _ in a.regions:
        if s <= b.node_id < s + size or b.node_id <= s < b.node_id + base.descendant_count(b.node_id) + 1:
            raise InvalidMutant("overlapping mutations")
    nid = a.map_id(b.node_id)
    if nid is None:
        raise InvalidMutant("second location was rewritten by the first")
    root = a.model.root.clone()
    old, new = _rewrite(root, nid, b.op, b.variant)
    m = _rebuild(base, root)
    regions = a.regions + [(b.node_id, old, new)]
    first = min(a, b, key=lambda x: x.key)
    parts = tuple(sorted([(a.node_id, a.op, a.variant), (b.node_id, b.op, b.variant)],
                         key=lambda p: (p[0], OPERATORS.index(p[1]), str(p[2]))))
    return Mutant(base, first.node_id, first.op, first.variant, m, regions, parts=parts)


def first_order_mutants(model: Model, nodes=None):
    """Valid first-order mutants in (node id, operator, variant) order."""
    ids = sorted(nodes) if nodes is not None else range(len(model.nodes))
    for nid in ids:
        for op, variant in sorted(applicable_ops(model, nid), key=lambda x: (OPERATORS.index(x[0]), str(x[1]))):
            try:
                yield apply_op(op, variant, nid, model)
            except InvalidMutant:
                continue
