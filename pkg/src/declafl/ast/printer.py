"""Canonical pretty-printer; `parse(pretty_print(m))` is structurally equal to `m`."""

from __future__ import annotations

from declafl.ast.nodes import SYMBOL, Model, Node, paragraph_body, params, sig_fact, sig_fields

# binding strength, higher binds tighter
_PREC = {
    "quant": 1, "let": 1,
    "or": 2, "iff": 3, "implies": 4, "ite": 4, "and": 5, "not": 6,
    "in": 7, "eq": 7, "mult": 8,
    "union": 9, "diff": 9, "inter": 10, "product": 11,
    "join": 13, "call": 13,
    "transpose": 14, "closure": 14, "rclosure": 14,
}
_PRIMARY = 15


def _prec(n: Node) -> int:
    return _PREC.get(n.op, _PRIMARY)


def print_node(n: Node, ctx: int = 0) -> str:
    """Render `n`; parenthesize when it binds looser than `ctx` requires."""
    s = _render(n)
    if _prec(n) < ctx:
        return f"({s})"
    return s


def _render(n: Node) -> str:
    op = n.op
    p = _prec(n)
    if op == "name":
        return n.name
    if op == "const":
        return n.attrs["which"]
    if op == "block":
        if not n.children:
            return "{}"
        return "{ " + " ".join(print_node(c, 0) for c in n.children) + " }"
    if op in ("or", "iff", "and", "union", "diff", "inter", "in", "eq"):
        a, b = n.children
        # `!a in b` already parses as `!(a in b)`; the inner compare never needs parens
        return f"{print_node(a, p)} {SYMBOL[op]} {print_node(b, p + 1)}"
    if op == "product":
        a, b = n.children
        return f"{print_node(a, p + 1)}->{print_node(b, p)}"
    if op == "join":
        a, b = n.children
        return f"{print_node(a, p)}.{print_node(b, p + 1)}"
    if op == "implies":
        a, b = n.children
        return f"{print_node(a, p + 1)} => {print_node(b, p)}"
    if op == "ite":
        a, b, c = n.children
        return f"{print_node(a, p + 1)} => {print_node(b, p + 1)} else {print_node(c, p)}"
    if op == "not":
        return "!" + print_node(n.children[0], p)
    if op in ("transpose", "closure", "rclosure"):
        return SYMBOL[op] + print_node(n.children[0], p)
    if op == "mult":
        return f"{n.attrs['kind']} {print_node(n.children[0], _PREC['union'])}"
    if op == "call":
        return n.name + "[" + ", ".join(print_node(c, 0) for c in n.children) + "]"
    if op == "quant":
        decls = ", ".join(_decl(d) for d in n.children[:-1])
        return f"{n.attrs['q']} {decls}{_qbody(n.children[-1])}"
    if op == "let":
        value, body = n.children
        return f"let {n.name} = {print_node(value, _PREC['union'])}{_qbody(body)}"
    raise ValueError(f"cannot print node {op!r}")


def _qbody(body: Node) -> str:
    if body.op == "block":
        return " " + _render(body)
    return " | " + print_node(body, 0)


def _decl(d: Node) -> str:
    mult = d.attrs.get("mult", "one")
    head = ("disj " if d.attrs.get("disj") else "") + ", ".join(d.attrs["names"])
    implicit = "set" if d.children[0].op == "product" else "one"
    mult_s = "" if mult == implicit else mult + " "
    return f"{head}: {mult_s}{print_node(d.children[0], 0)}"


def _braced(body: Node) -> str:
    if body.op == "block":
        return _render(body)
    return "{ " + print_node(body, 0) + " }"


def _synthetic(name: str | None) -> bool:
    return name is not None and "$" in name


def print_paragraph(p: Node) -> str:
    op = p.op
    if op == "sig":
        head = ""
        if p.attrs.get("abstract"):
            head += "abstract "
        if p.attrs.get("mult"):
            head += p.attrs["mult"] + " "
        head += f"sig {p.name}"
        if p.attrs.get("parent"):
            head += f" extends {p.attrs['parent']}"
        fields = ", ".join(f"{f.name}: {f.attrs['mult']} {print_node(f.children[0], 0)}"
                           for f in sig_fields(p))
        out = f"{head} {{ {fields} }}" if fields else f"{head} {{}}"
        fact = sig_fact(p)
        if fact is not None:
            out += " " + _braced(fact)
        return out
    body = paragraph_body(p)
    if op == "fact":
        name = "" if _synthetic(p.name) else f" {p.name}"
        return f"fact{name} {_braced(body)}"
    if op == "assert":
        return f"assert {p.name} {_braced(body)}"
    ps = params(p)
    plist = "[" + ", ".join(_decl(d) for d in ps) + "]" if ps else ""
    if op == "pred":
        return f"pred {p.name}{plist} {_braced(body)}"
    if op == "fun":
        ret = p.children[-2]
        mult = p.attrs.get("mult", "one")
        mult_s = "" if mult == "one" else mult + " "
        return f"fun {p.name}{plist}: {mult_s}{print_node(ret, 0)} {{ {print_node(body, 0)} }}"
    raise ValueError(f"not a paragraph: {op!r}")


def _command(c, inline_body: Node | None = None) -> str:
    target = _braced(inline_body) if inline_body is not None else c.target
    s = f"{c.kind} {target} {c.scope.render()}"
    if c.expect is not None:
        s += f" expect {c.expect}"
    return s


def pretty_print(model: Model) -> str:
    lines = [f"open util/ordering[{o.sig}] as {o.alias}" for o in model.orderings]
    inline = {c.target: c for c in model.commands if _synthetic(c.target)}
    for p in model.paragraphs:
        if p.op in ("pred", "assert") and p.name in inline:
            lines.append(_command(inline[p.name], paragraph_body(p)))
        else:
            lines.append(print_paragraph(p))
    for c in model.commands:
        if not _synthetic(c.target):
            lines.append(_command(c))
    return "\n".join(lines) + "\n"
