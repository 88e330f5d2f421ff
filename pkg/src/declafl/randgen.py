"""Random small models for differential and property testing."""

from __future__ import annotations

import random
from dataclasses import dataclass


@dataclass
class GenConfig:
    max_sigs: int = 2
    max_scope: int = 3
    max_depth: int = 3
    fields_per_sig: int = 1


class _Gen:
    def __init__(self, rng: random.Random, cfg: GenConfig):
        self.r = rng
        self.cfg = cfg
        self.sigs: list[str] = []
        self.fields: dict[str, tuple[str, int]] = {}   # name -> (owner, arity)
        self.preds: dict[str, list[str]] = {}          # name -> param sigs
        self.ordered = False

    def pick(self, xs):
        return self.r.choice(list(xs))

    # arity-1 and arity-2 expressions over the declared names
    def expr(self, arity: int, depth: int, env: list[str]) -> str:
        r = self.r
        leaf = depth <= 0 or r.random() < 0.35
        if arity == 1:
            if leaf:
                opts = list(self.sigs) + list(env) * 2 + ["univ"]
                if self.ordered:
                    opts += ["ord/first", "ord/last"]
                if r.random() < 0.1:
                    return "none"
                return self.pick(opts)
            k = r.randrange(4)
            if k == 0:
                op = self.pick(["+", "-", "&"])
                return f"({self.expr(1, depth - 1, env)} {op} {self.expr(1, depth - 1, env)})"
            return f"{self.expr(1, depth - 1, env)}.{self.expr(2, depth - 1, env)}"
        bins = [f for f, (_, a) in self.fields.items() if a == 2]
        if leaf:
            if bins and r.random() < 0.8:
                return self.pick(bins)
            if self.ordered and r.random() < 0.5:
                return "ord/next"
            return self.pick(["iden", f"({self.pick(self.sigs)} -> {self.pick(self.sigs)})"])
        k = r.randrange(5)
        if k == 0:
            op = self.pick(["+", "-", "&"])
            return f"({self.expr(2, depth - 1, env)} {op} {self.expr(2, depth - 1, env)})"
        if k == 1:
            return f"({self.expr(1, depth - 1, env)} -> {self.expr(1, depth - 1, env)})"
        if k == 2:
            return f"{self.pick('~^*')}{self.expr(2, 0, env)}"
        if k == 3:
            return f"({self.expr(2, depth - 1, env)}.{self.expr(2, depth - 1, env)})"
        return self.expr(2, 0, env)

    def formula(self, depth: int, env: list[str]) -> str:
        r = self.r
        if depth <= 0 or r.random() < 0.25:
            k = r.randrange(4)
            a = 1 if r.random() < 0.6 else 2
            if k == 0:
                return f"{self.expr(a, depth, env)} in {self.expr(a, depth, env)}"
            if k == 1:
                return f"{self.expr(a, depth, env)} = {self.expr(a, depth, env)}"
            if k == 2 and self.preds:
                name = self.pick(self.preds)
                ps = self.preds[name]
                if not ps:
                    return name
                return f"{name}[{', '.join(self.expr(1, 0, env) for _ in ps)}]"
            return f"{self.pick(['some', 'no', 'lone', 'one'])} {self.expr(a, depth, env)}"
        k = r.randrange(8)
        sub = depth - 1
        if k == 0:
            return f"!({self.formula(sub, env)})"
        if k in (1, 2):
            op = self.pick(["&&", "||", "=>", "<=>"])
            return f"({self.formula(sub, env)}) {op} ({self.formula(sub, env)})"
        if k == 3:
            return f"({self.formula(sub, env)}) => ({self.formula(sub, env)}) else ({self.formula(sub, env)})"
        if k == 4:
            v = f"v{len(env)}"
            return f"let {v} = {self.expr(1, 1, env)} | {self.formula(sub, env + [v])}"
        v = f"v{len(env)}"
        q = self.pick(["all", "some", "no", "lone", "one"])
        disj = ""
        names = v
        if r.random() < 0.25:
            names = f"{v}, v{len(env) + 1}"
            disj = "disj " if r.random() < 0.5 else ""
            inner = env + [v, f"v{len(env) + 1}"]
        else:
            inner = env + [v]
        return f"{q} {disj}{names}: {self.pick(self.sigs)} | {self.formula(sub, inner)}"

    def model(self) -> str:
        r = self.r
        n = r.randint(1, self.cfg.max_sigs)
        lines = []
        ordered = None
        for i in range(n):
            name = "AB"[i]
            self.sigs.append(name)
        if r.random() < 0.15:
            ordered = self.sigs[0]
            self.ordered = True
            lines.append(f"open util/ordering[{ordered}] as ord")
        sub = n > 1 and ordered is None and r.random() < 0.3
        for i, name in enumerate(self.sigs):
            head = ""
            extends = ""
            if i == 1 and sub:
                extends = " extends A"
            if i == 0 and sub and r.random() < 0.3:
                head = "abstract "
            elif ordered != name and r.random() < 0.15:
                head = self.pick(["one ", "lone ", "some "])
            fields = []
            for j in range(r.randint(0, self.cfg.fields_per_sig)):
                fname = f"{name.lower()}{j}"
                target = self.pick(self.sigs)
                mult = self.pick(["set", "set", "lone", "one", "some"])
                fields.append(f"{fname}: {mult} {target}")
                self.fields[fname] = (name, 2)
            lines.append(f"{head}sig {name}{extends} {{ {', '.join(fields)} }}")
        if r.random() < 0.5:
            ps = [self.pick(self.sigs)] if r.random() < 0.5 else []
            env = ["x"] if ps else []
            params = f"[x: {ps[0]}]" if ps else ""
            lines.append(f"pred helper{params} {{ {self.formula(self.cfg.max_depth - 1, env)} }}")
            self.preds["helper"] = ps
        if r.random() < 0.6:
            lines.append(f"fact {{ {self.formula(self.cfg.max_depth, [])} }}")
        scope = r.randint(1, self.cfg.max_scope)
        if r.random() < 0.5:
            ps = r.random() < 0.5
            params = f"[p: {self.pick(self.sigs)}]" if ps else ""
            body = self.formula(self.cfg.max_depth, ["p"] if ps else [])
            lines.append(f"pred target{params} {{ {body} }}")
            lines.append(f"run target for {scope}")
        else:
            lines.append(f"assert target {{ {self.formula(self.cfg.max_depth, [])} }}")
            lines.append(f"check target for {scope}")
        return "\n".join(lines) + "\n"


def random_model_source(seed: int, cfg: GenConfig | None = None) -> str:
    return _Gen(random.Random(seed), cfg or GenConfig()).model()
