"""AST nodes and the node arena (`Model`)."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterator

from declafl.errors import UnknownNode

# Operator tags grouped by role.
FORMULA_BINARY = ("and", "or", "implies", "iff")
COMPARE = ("in", "eq")
SET_BINARY = ("union", "diff", "inter")
REL_BINARY = ("join", "product")
EXPR_BINARY = SET_BINARY + REL_BINARY
REL_UNARY = ("transpose", "closure", "rclosure")
QUANTIFIERS = ("all", "some", "no", "lone", "one")
MULTS = ("some", "no", "lone", "one")
PARAGRAPHS = ("sig", "fact", "pred", "fun", "assert")

SYMBOL = {
    "and": "&&", "or": "||", "implies": "=>", "iff": "<=>",
    "in": "in", "eq": "=",
    "union": "+", "diff": "-", "inter": "&", "join": ".", "product": "->",
    "transpose": "~", "closure": "^", "rclosure": "*", "not": "!",
}


@dataclass(frozen=True)
class Span:
    path: str
    line: int
    col: int
    start: int
    end: int

    def as_dict(self) -> dict:
        return {"file": self.path, "line": self.line, "col": self.col,
                "start": self.start, "end": self.end}


@dataclass(eq=False)
class Node:
    """One AST node.

    `attrs` carries operator-specific data: names for references and
    declarations, the quantifier or multiplicity keyword, signature flags.
    Identity (`id`) is assigned when the node is placed in a `Model`.
    """

    op: str
    children: list["Node"] = field(default_factory=list)
    attrs: dict = field(default_factory=dict)
    span: Span | None = None
    id: int = -1

    @property
    def name(self) -> str | None:
        return self.attrs.get("name")

    def walk(self) -> Iterator["Node"]:
        """Pre-order traversal including self."""
        stack = [self]
        while stack:
            n = stack.pop()
            yield n
            stack.extend(reversed(n.children))

    def clone(self) -> "Node":
        return Node(self.op, [c.clone() for c in self.children], dict(self.attrs), self.span)

    def structure(self):
        """Hashable structural key ignoring ids and spans."""
        attrs = tuple(sorted((k, _freeze(v)) for k, v in self.attrs.items()))
        return (self.op, attrs, tuple(c.structure() for c in self.children))

    def __repr__(self) -> str:
        extra = f" {self.attrs}" if self.attrs else ""
        return f"<{self.op}#{self.id}{extra}>"


def _freeze(v):
    if isinstance(v, list):
        return tuple(_freeze(x) for x in v)
    if isinstance(v, dict):
        return tuple(sorted((k, _freeze(x)) for k, x in v.items()))
    return v


@dataclass(frozen=True)
class Ordering:
    """`open util/ordering[sig] as alias`."""

    sig: str
    alias: str


@dataclass
class Command:
    kind: str  # "run" | "check"
    target: str
    scope: "object"  # declafl.finder.bounds.Scope
    expect: int | None = None
    span: Span | None = None


@dataclass(eq=False)
class Model:
    """Parsed model: the synthetic root, an id-indexed node arena and
    per-kind paragraph tables. Treated as immutable once built."""

    root: Node
    source: str = ""
    path: str = "<string>"
    orderings: list[Ordering] = field(default_factory=list)
    commands: list[Command] = field(default_factory=list)

    def __post_init__(self):
        self.nodes: list[Node] = []
        self._parent: list[int | None] = []
        stack = [(self.root, None)]
        while stack:
            n, p = stack.pop()
            n.id = len(self.nodes)
            self.nodes.append(n)
            self._parent.append(p)
            for c in reversed(n.children):
                stack.append((c, n.id))
        self.sigs: dict[str, Node] = {}
        self.fields: dict[str, Node] = {}
        self.field_owner: dict[str, Node] = {}
        self.preds: dict[str, Node] = {}
        self.funs: dict[str, Node] = {}
        self.asserts: dict[str, Node] = {}
        self.facts: list[Node] = []
        for p in self.root.children:
            if p.op == "sig":
                self.sigs[p.name] = p
                for f in sig_fields(p):
                    self.fields[f.name] = f
                    self.field_owner[f.name] = p
            elif p.op == "pred":
                self.preds[p.name] = p
            elif p.op == "fun":
                self.funs[p.name] = p
            elif p.op == "assert":
                self.asserts[p.name] = p
            elif p.op == "fact":
                self.facts.append(p)
        self.resolution: dict[int, tuple] | None = None
        self.arity: dict[int, int] = {}

    # arena access -------------------------------------------------------

    @property
    def paragraphs(self) -> list[Node]:
        return self.root.children

    def node(self, nid: int) -> Node:
        if not isinstance(nid, int) or nid < 0 or nid >= len(self.nodes):
            raise UnknownNode(f"no node {nid!r} in model")
        return self.nodes[nid]

    def owns(self, n: Node) -> bool:
        return 0 <= n.id < len(self.nodes) and self.nodes[n.id] is n

    def parent(self, nid: int) -> int | None:
        self.node(nid)
        return self._parent[nid]

    @property
    def source_map(self) -> dict[int, Span | None]:
        return {n.id: n.span for n in self.nodes}

    @cached_property
    def _desc_counts(self) -> list[int]:
        counts = [0] * len(self.nodes)
        # children always have larger ids than their parent (pre-order)
        for nid in range(len(self.nodes) - 1, 0, -1):
            counts[self._parent[nid]] += 1 + counts[nid]
        return counts

    def descendant_count(self, nid: int) -> int:
        self.node(nid)
        return self._desc_counts[nid]

    def descendants(self, nid: int, inclusive: bool = False) -> list[int]:
        """Strict (or inclusive) descendants of `nid`, ordered by id."""
        self.node(nid)
        # pre-order numbering makes every subtree a contiguous id range
        end = nid + self._desc_counts[nid] + 1
        start = nid if inclusive else nid + 1
        return list(range(start, end))

    def paragraph_of(self, nid: int) -> Node | None:
        """The paragraph node containing `nid` (None for the synthetic root)."""
        cur = nid
        while cur is not None:
            p = self._parent[cur]
            if p == self.root.id:
                return self.nodes[cur]
            cur = p
        return None

    def depth(self, nid: int) -> int:
        d, cur = 0, self._parent[nid]
        while cur is not None:
            d += 1
            cur = self._parent[cur]
        return d

    def paragraph_key(self, p: Node) -> str:
        return p.name

    def find_paragraph(self, name: str) -> Node | None:
        for p in self.root.children:
            if p.name == name:
                return p
        return None


def sig_fields(sig: Node) -> list[Node]:
    return [c for c in sig.children if c.op == "field"]


def sig_fact(sig: Node) -> Node | None:
    if sig.attrs.get("has_fact"):
        return sig.children[-1]
    return None


def paragraph_body(p: Node) -> Node | None:
    """Root of a paragraph's body formula/expression (None for sigs without
    an appended fact)."""
    if p.op == "sig":
        return sig_fact(p)
    if p.op in ("fact", "pred", "fun", "assert"):
        return p.children[-1]
    return None


def params(p: Node) -> list[Node]:
    """Parameter declarations of a pred/fun."""
    if p.op == "pred":
        return p.children[:-1]
    if p.op == "fun":
        return p.children[:-2]
    return []


def param_names(p: Node) -> list[str]:
    return [name for d in params(p) for name in d.attrs["names"]]


def quant_decls(q: Node) -> list[Node]:
    return q.children[:-1]


def structurally_equal(a: Model | Node, b: Model | Node) -> bool:
    ra = a.root if isinstance(a, Model) else a
    rb = b.root if isinstance(b, Model) else b
    if ra.structure() != rb.structure():
        return False
    if isinstance(a, Model) and isinstance(b, Model):
        return a.orderings == b.orderings
    return True
