"""Hash-consed boolean circuits with lazy Tseitin encoding.

Literals are non-zero ints; `-x` is the negation of `x`. Variable 1 is
reserved for the constant: `TRUE == 1`, `FALSE == -1`.
"""

from __future__ import annotations

from declafl.errors import CapacityError

TRUE = 1
FALSE = -1


class Circuit:
    def __init__(self, max_vars: int = 1 << 20):
        self.max_vars = max_vars
        self.nvars = 1
        # gate var -> tuple of input literals (an AND gate)
        self.gates: dict[int, tuple[int, ...]] = {}
        self._cons: dict[tuple[int, ...], int] = {}
        self.names: dict[int, object] = {}

    def new_var(self, name=None) -> int:
        if self.nvars >= self.max_vars:
            raise CapacityError(f"ground variable count exceeds {self.max_vars}")
        self.nvars += 1
        if name is not None:
            self.names[self.nvars] = name
        return self.nvars

    # -- gates ------------------------------------------------------------------

    def and_(self, *lits: int) -> int:
        return self.and_n(lits)

    def and_n(self, lits) -> int:
        s = set()
        for x in lits:
            if x == FALSE:
                return FALSE
            if x == TRUE:
                continue
            if -x in s:
                return FALSE
            s.add(x)
        if not s:
            return TRUE
        if len(s) == 1:
            return next(iter(s))
        key = tuple(sorted(s))
        g = self._cons.get(key)
        if g is None:
            g = self.new_var()
            self.gates[g] = key
            self._cons[key] = g
        return g

    def or_(self, *lits: int) -> int:
        return -self.and_n([-x for x in lits])

    def or_n(self, lits) -> int:
        return -self.and_n([-x for x in lits])

    def implies(self, a: int, b: int) -> int:
        return self.or_(-a, b)

    def iff(self, a: int, b: int) -> int:
        if a == b:
            return TRUE
        if a == -b:
            return FALSE
        return self.or_(self.and_(a, b), self.and_(-a, -b))

    def ite(self, c: int, a: int, b: int) -> int:
        if a == b:
            return a
        return self.or_(self.and_(c, a), self.and_(-c, b))

    # -- cardinality ------------------------------------------------------------

    def at_most_one(self, lits) -> int:
        lits = [x for x in lits if x != FALSE]
        out = []
        seen = FALSE
        for x in lits:
            out.append(-self.and_(x, seen))
            seen = self.or_(seen, x)
        return self.and_n(out)

    def at_least(self, lits, k: int) -> int:
        """Circuit true iff at least k of `lits` are true."""
        if k <= 0:
            return TRUE
        lits = [x for x in lits if x != FALSE]
        if k > len(lits):
            return FALSE
        # row[j] = at least j among the prefix
        row = [TRUE] + [FALSE] * k
        for x in lits:
            new = [TRUE]
            for j in range(1, k + 1):
                new.append(self.or_(row[j], self.and_(x, row[j - 1])))
            row = new
        return row[k]

    def count_between(self, lits, lo: int, hi: int | None) -> int:
        parts = [self.at_least(lits, lo)]
        if hi is not None:
            parts.append(-self.at_least(lits, hi + 1))
        return self.and_n(parts)

    # -- encoding ---------------------------------------------------------------

    def cone(self, roots, done: set[int]) -> list[int]:
        """Gate vars reachable from `roots` that are not in `done`, inputs
        before users. Marks them done."""
        order: list[int] = []
        stack = [abs(r) for r in roots]
        while stack:
            v = stack.pop()
            if v in done or v not in self.gates:
                continue
            done.add(v)
            order.append(v)
            for x in self.gates[v]:
                if abs(x) not in done and abs(x) in self.gates:
                    stack.append(abs(x))
        return order

    def support(self, roots) -> set[int]:
        """Every variable (gates and inputs) reachable from `roots`."""
        seen: set[int] = set()
        gates = self.gates
        stack = [abs(r) for r in roots]
        while stack:
            v = stack.pop()
            if v in seen:
                continue
            seen.add(v)
            g = gates.get(v)
            if g is not None:
                stack.extend(abs(x) for x in g if abs(x) not in seen)
        return seen

    def clauses_for(self, gate: int) -> list[list[int]]:
        ins = self.gates[gate]
        cls = [[-gate, x] for x in ins]
        cls.append([gate] + [-x for x in ins])
        return cls

    def evaluate(self, lit: int, assignment) -> bool:
        """Evaluate `lit` under `assignment(var) -> bool` for input vars."""
        memo: dict[int, bool] = {}

        def val(v: int) -> bool:
            if v == 1:
                return True
            if v in memo:
                return memo[v]
            if v not in self.gates:
                memo[v] = bool(assignment(v))
                return memo[v]
            stack = [v]
            while stack:
                g = stack[-1]
                pending = [abs(x) for x in self.gates[g]
                           if abs(x) in self.gates and abs(x) not in memo]
                if pending:
                    stack.extend(pending)
                    continue
                stack.pop()
                if g in memo:
                    continue
                memo[g] = all((val(abs(x)) if abs(x) not in self.gates else memo[abs(x)]) == (x > 0)
                              for x in self.gates[g])
            return memo[v]

        r = val(abs(lit))
        return r if lit > 0 else not r
