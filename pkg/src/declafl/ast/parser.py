"""Recursive-descent parser for the model language.

Grammar sketch (lowest to highest precedence inside formulas)::

    let / quantifier        extend as far right as possible
    ||  or
    <=> iff
    =>  implies  [else]      right associative
    &&  and
    !   not                  prefix
    in  =  !=  !in           non-associative
    some no lone one         prefix multiplicity test on an expression
    +  -
    &
    ->
    .  e[args]               join, box join / predicate call
    ~  ^  *                  prefix
"""

from __future__ import annotations

from declafl.ast.lexer import Token, tokenize
from declafl.ast.nodes import Command, Model, Node, Ordering, Span
from declafl.errors import ParseError
from declafl.scope import Scope

_MULT_WORDS = ("one", "lone", "some", "set")


class Parser:
    def __init__(self, source: str, path: str = "<string>"):
        self.source = source
        self.path = path
        self.toks = tokenize(source, path)
        self.i = 0
        self.orderings: list[Ordering] = []
        self.commands: list[Command] = []
        self.anon_facts = 0
        self.anon_cmds = 0

    # token helpers ------------------------------------------------------

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def peek(self, k: int = 1) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def at(self, *texts: str) -> bool:
        t = self.tok
        return t.kind in ("kw", "sym") and t.text in texts

    def accept(self, *texts: str) -> Token | None:
        if self.at(*texts):
            t = self.tok
            self.i += 1
            return t
        return None

    def expect(self, text: str) -> Token:
        if not self.at(text):
            self.error(f"expected {text!r}, found {self.tok.text or 'end of input'!r}")
        t = self.tok
        self.i += 1
        return t

    def expect_name(self) -> Token:
        if self.tok.kind != "name":
            self.error(f"expected identifier, found {self.tok.text or 'end of input'!r}")
        t = self.tok
        self.i += 1
        return t

    def expect_int(self) -> int:
        if self.tok.kind != "int":
            self.error(f"expected integer, found {self.tok.text or 'end of input'!r}")
        t = self.tok
        self.i += 1
        return int(t.text)

    def error(self, msg: str):
        raise ParseError(msg, self.tok.line, self.tok.col, self.path)

    def span(self, first: Token, last: Token | None = None) -> Span:
        last = last or self.toks[max(self.i - 1, 0)]
        return Span(self.path, first.line, first.col, first.start, max(last.end, first.start))

    def mk(self, op: str, children, first: Token, **attrs) -> Node:
        return Node(op, list(children), attrs, self.span(first))

    # top level ------------------------------------------------------------

    def parse_model(self) -> Model:
        paragraphs: list[Node] = []
        while self.tok.kind != "eof":
            if self.at("open"):
                self.parse_open()
            elif self.at("abstract", "one", "lone", "some", "sig"):
                paragraphs.extend(self.parse_sig())
            elif self.at("fact"):
                paragraphs.append(self.parse_fact())
            elif self.at("pred"):
                paragraphs.append(self.parse_pred())
            elif self.at("fun"):
                paragraphs.append(self.parse_fun())
            elif self.at("assert"):
                paragraphs.append(self.parse_assert())
            elif self.at("run", "check"):
                extra = self.parse_command()
                if extra is not None:
                    paragraphs.append(extra)
            else:
                self.error(f"unexpected {self.tok.text!r} at top level")
        root = Node("model", paragraphs, {}, Span(self.path, 1, 1, 0, self.toks[-1].end))
        return Model(root, self.source, self.path, self.orderings, self.commands)

    def parse_open(self):
        self.expect("open")
        mod = self.expect_name()
        if mod.text != "util/ordering":
            raise ParseError(f"unsupported module {mod.text!r}", mod.line, mod.col, self.path)
        self.expect("[")
        sig = self.expect_name().text
        self.expect("]")
        alias = "ordering"
        if self.accept("as"):
            alias = self.expect_name().text
        self.orderings.append(Ordering(sig, alias))

    def parse_sig(self) -> list[Node]:
        first = self.tok
        abstract = False
        mult = None
        while True:
            if self.accept("abstract"):
                abstract = True
            elif self.at("one", "lone", "some") and mult is None:
                mult = self.tok.text
                self.i += 1
            else:
                break
        self.expect("sig")
        names = [self.expect_name()]
        while self.accept(","):
            names.append(self.expect_name())
        parent = None
        if self.accept("extends"):
            parent = self.expect_name().text
        self.expect("{")
        field_groups: list[tuple[list[Token], Token, str, Node]] = []
        if not self.at("}"):
            while True:
                ftok = self.tok
                fnames = [self.expect_name()]
                while self.accept(","):
                    fnames.append(self.expect_name())
                self.expect(":")
                fmult = None
                if self.at(*_MULT_WORDS):
                    fmult = self.tok.text
                    self.i += 1
                ftype = self.parse_expr()
                if fmult is None:
                    fmult = "set" if ftype.op == "product" else "one"
                field_groups.append((fnames, ftok, fmult, ftype))
                if not self.accept(","):
                    break
        self.expect("}")
        appended = None
        if self.at("{"):
            appended = self.parse_block()
        out = []
        for k, nt in enumerate(names):
            fields = []
            for fnames, ftok, fmult, ftype in field_groups:
                for fn in fnames:
                    t = ftype if (k == 0 and fn is fnames[0]) else ftype.clone()
                    fields.append(Node("field", [t], {"name": fn.text, "mult": fmult},
                                       Span(self.path, fn.line, fn.col, fn.start, ftype.span.end)))
            children = fields + ([appended if k == 0 else appended.clone()] if appended else [])
            out.append(Node("sig", children,
                            {"name": nt.text, "mult": mult, "abstract": abstract,
                             "parent": parent, "has_fact": appended is not None},
                            self.span(first)))
        return out

    def parse_fact(self) -> Node:
        first = self.expect("fact")
        if self.tok.kind == "name":
            name = self.expect_name().text
        else:
            self.anon_facts += 1
            name = f"fact${self.anon_facts}"
        body = self.parse_block()
        return self.mk("fact", [body], first, name=name)

    def parse_params(self) -> list[Node]:
        if self.at("["):
            close = "]"
        elif self.at("("):
            close = ")"
        else:
            return []
        self.i += 1
        decls = []
        if not self.at(close):
            decls = self.parse_decls(allow_mult=True)
        self.expect(close)
        return decls

    def parse_pred(self) -> Node:
        first = self.expect("pred")
        name = self.expect_name().text
        ps = self.parse_params()
        body = self.parse_block()
        return self.mk("pred", ps + [body], first, name=name)

    def parse_fun(self) -> Node:
        first = self.expect("fun")
        name = self.expect_name().text
        ps = self.parse_params()
        self.expect(":")
        mult = "one"
        if self.at(*_MULT_WORDS):
            mult = self.tok.text
            self.i += 1
        ret = self.parse_expr()
        self.expect("{")
        body = self.parse_expr()
        self.expect("}")
        return self.mk("fun", ps + [ret, body], first, name=name, mult=mult)

    def parse_assert(self) -> Node:
        first = self.expect("assert")
        name = self.expect_name().text
        body = self.parse_block()
        return self.mk("assert", [body], first, name=name)

    def parse_command(self) -> Node | None:
        first = self.tok
        kind = self.tok.text
        self.i += 1
        extra = None
        if self.at("{"):
            self.anon_cmds += 1
            name = f"{kind}${self.anon_cmds}"
            body = self.parse_block()
            extra = self.mk("pred" if kind == "run" else "assert", [body], first, name=name)
        else:
            name = self.expect_name().text
        scope = Scope(3)
        if self.accept("for"):
            scope = self.parse_scope()
        expect = None
        if self.accept("expect"):
            expect = self.expect_int()
            if expect not in (0, 1):
                self.error("expect must be 0 or 1")
        self.commands.append(Command(kind, name, scope, expect, self.span(first)))
        return extra

    def parse_scope(self) -> Scope:
        default = 3
        overrides: list[tuple[str, int, bool]] = []
        if self.tok.kind == "int" and self.peek().kind != "name":
            default = self.expect_int()
            if not self.accept("but"):
                return Scope(default)
        while True:
            exact = bool(self.accept("exactly"))
            n = self.expect_int()
            sig = self.expect_name().text
            overrides.append((sig, n, exact))
            if not self.accept(","):
                break
        return Scope(default, tuple(overrides))

    # declarations -----------------------------------------------------------

    def parse_decls(self, allow_mult: bool = False) -> list[Node]:
        decls = [self.parse_decl(allow_mult)]
        while self.at(",") and self._decl_ahead(1):
            self.i += 1
            decls.append(self.parse_decl(allow_mult))
        return decls

    def _decl_ahead(self, k: int) -> bool:
        """Does a declaration (`[disj] a, b: ...`) start k tokens ahead?"""
        j = self.i + k
        toks = self.toks
        if toks[j].kind == "kw" and toks[j].text == "disj":
            j += 1
        if toks[j].kind != "name":
            return False
        j += 1
        while toks[j].kind == "sym" and toks[j].text == "," and toks[j + 1].kind == "name":
            j += 2
        return toks[j].kind == "sym" and toks[j].text == ":"

    def parse_decl(self, allow_mult: bool) -> Node:
        first = self.tok
        disj = bool(self.accept("disj"))
        names = [self.expect_name().text]
        while self.accept(","):
            names.append(self.expect_name().text)
        self.expect(":")
        mult = "one"
        if self.at(*_MULT_WORDS) and not self._quantifier_ahead():
            if not allow_mult:
                self.error("multiplicity not allowed in quantifier declarations")
            mult = self.tok.text
            self.i += 1
            explicit = True
        else:
            explicit = False
        dom = self.parse_expr()
        if not explicit and allow_mult and dom.op == "product":
            mult = "set"
        return self.mk("decl", [dom], first, names=names, disj=disj, mult=mult)

    def _quantifier_ahead(self) -> bool:
        return self.at("some", "one", "lone", "all", "no") and self._decl_ahead(1)

    # formulas -------------------------------------------------------------

    def parse_block(self) -> Node:
        first = self.expect("{")
        items = []
        while not self.at("}"):
            if self.tok.kind == "eof":
                self.error("unterminated block")
            items.append(self.parse_expr())
        self.expect("}")
        if len(items) == 1:
            return items[0]
        return self.mk("block", items, first)

    def parse_expr(self) -> Node:
        return self.parse_or()

    def _binary_left(self, sub, ops: dict[str, str]):
        first = self.tok
        lhs = sub()
        while self.at(*ops):
            op = ops[self.tok.text]
            self.i += 1
            rhs = sub()
            lhs = self.mk(op, [lhs, rhs], first)
        return lhs

    def parse_or(self) -> Node:
        return self._binary_left(self.parse_iff, {"||": "or", "or": "or"})

    def parse_iff(self) -> Node:
        return self._binary_left(self.parse_implies, {"<=>": "iff", "iff": "iff"})

    def parse_implies(self) -> Node:
        first = self.tok
        cond = self.parse_and()
        if self.accept("=>", "implies"):
            then = self.parse_implies_branch()
            if self.accept("else"):
                other = self.parse_implies_branch()
                return self.mk("ite", [cond, then, other], first)
            return self.mk("implies", [cond, then], first)
        return cond

    def parse_implies_branch(self) -> Node:
        return self.parse_implies()

    def parse_and(self) -> Node:
        return self._binary_left(self.parse_not, {"&&": "and", "and": "and"})

    def parse_not(self) -> Node:
        if self.at("!", "not"):
            first = self.tok
            self.i += 1
            return self.mk("not", [self.parse_not()], first)
        return self.parse_compare()

    def parse_compare(self) -> Node:
        first = self.tok
        if self.at("let"):
            return self.parse_let()
        if self._quantifier_ahead():
            return self.parse_quant()
        if self.at("some", "no", "lone", "one"):
            kind = self.tok.text
            self.i += 1
            e = self.parse_union()
            return self.mk("mult", [e], first, kind=kind)
        lhs = self.parse_union()
        neg = False
        if self.at("!", "not") and self.peek().kind == "kw" and self.peek().text == "in":
            self.i += 1
            neg = True
        if self.at("in", "=", "!="):
            sym = self.tok.text
            self.i += 1
            rhs = self.parse_union()
            node = self.mk("in" if sym == "in" else "eq", [lhs, rhs], first)
            if neg or sym == "!=":
                node = self.mk("not", [node], first)
            return node
        if neg:
            self.error("expected 'in'")
        return lhs

    def parse_let(self) -> Node:
        first = self.expect("let")
        binds = []
        while True:
            btok = self.tok
            name = self.expect_name().text
            self.expect("=")
            value = self.parse_union()
            binds.append((btok, name, value))
            if not self.accept(","):
                break
        body = self.parse_quant_body()
        for btok, name, value in reversed(binds):
            body = Node("let", [value, body], {"name": name}, self.span(btok))
        body.span = self.span(first)
        return body

    def parse_quant(self) -> Node:
        first = self.tok
        q = self.tok.text
        self.i += 1
        decls = self.parse_decls()
        body = self.parse_quant_body()
        return self.mk("quant", decls + [body], first, q=q)

    def parse_quant_body(self) -> Node:
        if self.at("{"):
            return self.parse_block()
        self.expect("|")
        return self.parse_expr()

    # expressions ------------------------------------------------------------

    def parse_union(self) -> Node:
        return self._binary_left(self.parse_inter, {"+": "union", "-": "diff"})

    def parse_inter(self) -> Node:
        return self._binary_left(self.parse_product, {"&": "inter"})

    def parse_product(self) -> Node:
        first = self.tok
        lhs = self.parse_postfix()
        if self.accept("->"):
            rhs = self.parse_product()
            return self.mk("product", [lhs, rhs], first)
        return lhs

    def parse_postfix(self) -> Node:
        # `.` and `[...]` share one level and associate to the left, so
        # `a.b[c]` is `(a.b)[c]` and `f[x].g` is `(f[x]).g`
        first = self.tok
        e = self.parse_unary()
        while self.at(".", "["):
            if self.accept("."):
                rhs = self.parse_unary()
                e = self.mk("join", [e, rhs], first)
                continue
            self.i += 1
            args = []
            if not self.at("]"):
                args.append(self.parse_expr())
                while self.accept(","):
                    args.append(self.parse_expr())
            self.expect("]")
            if e.op == "name":
                e = self.mk("call", args, first, name=e.name)
            else:
                for a in args:
                    e = self.mk("join", [a, e], first)
        return e

    def parse_unary(self) -> Node:
        first = self.tok
        for sym, op in (("~", "transpose"), ("^", "closure"), ("*", "rclosure")):
            if self.accept(sym):
                return self.mk(op, [self.parse_unary()], first)
        return self.parse_primary()

    def parse_primary(self) -> Node:
        first = self.tok
        if self.tok.kind == "name":
            self.i += 1
            return self.mk("name", [], first, name=first.text)
        if self.at("none", "univ", "iden"):
            self.i += 1
            return self.mk("const", [], first, which=first.text)
        if self.accept("("):
            e = self.parse_expr()
            self.expect(")")
            return e
        if self.at("{"):
            return self.parse_block()
        if self.at("some", "no", "lone", "one", "all", "let", "!", "not"):
            return self.parse_not()
        self.error(f"unexpected {self.tok.text or 'end of input'!r}")


def parse(source: str, path: str = "<string>") -> Model:
    """Parse model source text into a `Model`."""
    return Parser(source, path).parse_model()


def parse_file(path) -> Model:
    with open(path, encoding="utf-8") as fh:
        return parse(fh.read(), str(path))
