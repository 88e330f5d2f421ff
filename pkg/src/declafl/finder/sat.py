"""A small deterministic CDCL solver.

Two watched literals for long clauses, implication lists for binary clauses,
first-UIP learning, no restarts. Decisions pick the lowest-numbered
unassigned variable and try it false first, so search is reproducible.
Assumptions follow the MiniSat scheme: each one gets its own decision level
and a failed assumption is explained by `_analyze_final`.
"""

from __future__ import annotations

import time

from declafl.errors import CapacityError


def _idx(lit: int) -> int:
    return (lit << 1) if lit > 0 else ((-lit) << 1) | 1


class Solver:
    def __init__(self, budget_seconds: float | None = 10.0, max_conflicts: int | None = None):
        self.budget_seconds = budget_seconds
        self.max_conflicts = max_conflicts
        self.nvars = 0
        self.val: list[int] = [0]
        self.level: list[int] = [0]
        self.reason: list = [None]
        self.used: list[bool] = [False]
        self.seen: list[bool] = [False]
        self.watches: list[list] = [[], []]
        self.bins: list[list] = [[], []]
        self.trail: list[int] = []
        self.trail_lim: list[int] = []
        self.qhead = 0
        self.ok = True
        self.nlearnt = 0
        self._dptr = 1
        self._dlist: list[int] | None = None
        self._dpos: dict[int, int] = {}
        self.stats = {"solves": 0, "conflicts": 0, "decisions": 0}
        self._model: list[int] | None = None

    # -- setup ------------------------------------------------------------------

    def ensure_vars(self, n: int):
        if n <= self.nvars:
            return
        extra = n - self.nvars
        self.val.extend([0] * extra)
        self.level.extend([0] * extra)
        self.reason.extend([None] * extra)
        self.used.extend([False] * extra)
        self.seen.extend([False] * extra)
        self.watches.extend([] for _ in range(2 * extra))
        self.bins.extend([] for _ in range(2 * extra))
        self.nvars = n

    def value(self, lit: int) -> int:
        v = self.val[abs(lit)]
        return v if lit > 0 else -v

    def add_clause(self, lits) -> bool:
        """Add a permanent clause (only between solves, at level 0)."""
        if not self.ok:
            return False
        assert not self.trail_lim
        out: list[int] = []
        seen = set()
        for x in lits:
            self.ensure_vars(abs(x))
            self.used[abs(x)] = True
            if -x in seen:
                return True
            if x in seen:
                continue
            v = self.value(x)
            if v == 1 and self.level[abs(x)] == 0:
                return True
            if v == -1 and self.level[abs(x)] == 0:
                continue
            seen.add(x)
            out.append(x)
        if not out:
            self.ok = False
            return False
        if len(out) == 1:
            self._assign(out[0], None)
            if self._propagate() is not None:
                self.ok = False
            return self.ok
        self._attach(out)
        return True

    def _attach(self, c: list[int]):
        if len(c) == 2:
            a, b = c
            self.bins[_idx(-a)].append((b, c))
            self.bins[_idx(-b)].append((a, c))
        else:
            self.watches[_idx(-c[0])].append(c)
            self.watches[_idx(-c[1])].append(c)

    # -- core loop --------------------------------------------------------------

    def _assign(self, lit: int, reason):
        v = abs(lit)
        self.val[v] = 1 if lit > 0 else -1
        self.level[v] = len(self.trail_lim)
        self.reason[v] = reason
        self.trail.append(lit)

    def _propagate(self):
        val = self.val
        trail = self.trail
        watches = self.watches
        bins = self.bins
        level = self.level
        reason = self.reason
        lvl = len(self.trail_lim)
        while self.qhead < len(trail):
            p = trail[self.qhead]
            self.qhead += 1
            pi = (p << 1) if p > 0 else ((-p) << 1) | 1
            for q, cl in bins[pi]:
                vq = val[q] if q > 0 else -val[-q]
                if vq == 1:
                    continue
                if vq == -1:
                    return cl
                a = q if q > 0 else -q
                val[a] = 1 if q > 0 else -1
                level[a] = lvl
                reason[a] = cl
                trail.append(q)
            ws = watches[pi]
            false_lit = -p
            i = j = 0
            n = len(ws)
            while i < n:
                c = ws[i]
                i += 1
                if c[0] == false_lit:
                    c[0] = c[1]
                    c[1] = false_lit
                first = c[0]
                vf = val[first] if first > 0 else -val[-first]
                if vf == 1:
                    ws[j] = c
                    j += 1
                    continue
                for k in range(2, len(c)):
                    x = c[k]
                    if (val[x] if x > 0 else -val[-x]) != -1:
                        c[1] = x
                        c[k] = false_lit
                        watches[_idx(-x)].append(c)
                        break
                else:
                    ws[j] = c
                    j += 1
                    if vf == -1:
                        while i < n:
                            ws[j] = ws[i]
                            j += 1
                            i += 1
                        del ws[j:]
                        return c
                    a = first if first > 0 else -first
                    val[a] = 1 if first > 0 else -1
                    level[a] = lvl
                    reason[a] = c
                    trail.append(first)
            del ws[j:]
        return None

    def _analyze(self, confl):
        seen = self.seen
        level = self.level
        trail = self.trail
        cur = len(self.trail_lim)
        learnt = [0]
        counter = 0
        p = None
        index = len(trail) - 1
        cl = confl
        touched = []
        while True:
            for q in cl:
                if q == p:
                    continue
                v = abs(q)
                if not seen[v] and level[v] > 0:
                    seen[v] = True
                    touched.append(v)
                    if level[v] >= cur:
                        counter += 1
                    else:
                        learnt.append(q)
            while not seen[abs(trail[index])]:
                index -= 1
            p = trail[index]
            index -= 1
            cl = self.reason[abs(p)]
            seen[abs(p)] = False
            counter -= 1
            if counter == 0:
                break
        learnt[0] = -p
        for v in touched:
            seen[v] = False
        if len(learnt) == 1:
            return learnt, 0
        best = 1
        for k in range(2, len(learnt)):
            if level[abs(learnt[k])] > level[abs(learnt[best])]:
                best = k
        learnt[1], learnt[best] = learnt[best], learnt[1]
        return learnt, level[abs(learnt[1])]

    def _analyze_final(self, failed: int) -> set[int]:
        """Assumptions responsible for assumption `failed` being false
        (`failed` included)."""
        out = {failed}
        if not self.trail_lim:
            return out
        seen = self.seen
        seen[abs(failed)] = True
        touched = [abs(failed)]
        for i in range(len(self.trail) - 1, self.trail_lim[0] - 1, -1):
            x = self.trail[i]
            v = abs(x)
            if not seen[v]:
                continue
            r = self.reason[v]
            if r is None:
                if self.level[v] > 0:
                    out.add(x)
            else:
                for q in r:
                    w = abs(q)
                    if w != v and self.level[w] > 0 and not seen[w]:
                        seen[w] = True
                        touched.append(w)
            seen[v] = False
        for v in touched:
            seen[v] = False
        return out

    def _backtrack(self, lvl: int):
        if len(self.trail_lim) <= lvl:
            return
        start = self.trail_lim[lvl]
        val = self.val
        reason = self.reason
        low = self._dptr
        if self._dlist is None:
            for x in self.trail[start:]:
                v = abs(x)
                val[v] = 0
                reason[v] = None
                if v < low:
                    low = v
        else:
            pos = self._dpos
            for x in self.trail[start:]:
                v = abs(x)
                val[v] = 0
                reason[v] = None
                i = pos.get(v, low)
                if i < low:
                    low = i
        self._dptr = low
        del self.trail[start:]
        del self.trail_lim[lvl:]
        self.qhead = start

    def solve(self, assumptions=(), decide=None) -> bool:
        """True if satisfiable under `assumptions`. On UNSAT,
        `self.core` holds the failed assumptions.

        `decide` restricts branching to the given variables. This is sound
        when every clause mentioning other variables can always be
        satisfied by extending the assignment (e.g. Tseitin definitions
        outside the assumptions' cone); those variables may stay
        unassigned in the model."""
        self.stats["solves"] += 1
        self._model = None
        self.core: set[int] = set()
        if not self.ok:
            return False
        assumptions = list(assumptions)
        for a in assumptions:
            self.ensure_vars(abs(a))
            self.used[abs(a)] = True
        if decide is not None:
            self._dlist = sorted(decide)
            self._dpos = {v: i for i, v in enumerate(self._dlist)}
            self._dptr = 0
        else:
            self._dlist = None
            self._dpos = {}
            self._dptr = 1
        deadline = None
        if self.budget_seconds is not None:
            deadline = time.monotonic() + self.budget_seconds
        conflicts = 0
        decisions = 0
        try:
            while True:
                confl = self._propagate()
                if confl is not None:
                    conflicts += 1
                    if not self.trail_lim:
                        self.ok = False
                        return False
                    learnt, bt = self._analyze(confl)
                    self._backtrack(bt)
                    if len(learnt) == 1:
                        self._assign(learnt[0], None)
                    else:
                        self._attach(learnt)
                        self.nlearnt += 1
                        self._assign(learnt[0], learnt)
                    if conflicts & 63 == 0 or self.max_conflicts is not None:
                        self._check_budget(deadline, conflicts)
                    continue
                lvl = len(self.trail_lim)
                if lvl < len(assumptions):
                    p = assumptions[lvl]
                    vp = self.value(p)
                    if vp == 1:
                        self.trail_lim.append(len(self.trail))
                        continue
                    if vp == -1:
                        self.core = self._analyze_final(p)
                        return False
                    self.trail_lim.append(len(self.trail))
                    self._assign(p, None)
                    continue
                v = self._pick()
                if v == 0:
                    self._model = list(self.val)
                    return True
                decisions += 1
                if decisions & 1023 == 0:
                    self._check_budget(deadline, conflicts)
                self.trail_lim.append(len(self.trail))
                self._assign(-v, None)
        finally:
            self.stats["conflicts"] += conflicts
            self.stats["decisions"] += decisions
            self._backtrack(0)

    def _pick(self) -> int:
        if self._dlist is not None:
            dl, val = self._dlist, self.val
            i = self._dptr
            while i < len(dl) and val[dl[i]] != 0:
                i += 1
            self._dptr = i
            return dl[i] if i < len(dl) else 0
        val = self.val
        used = self.used
        v = self._dptr
        n = self.nvars
        while v <= n and (val[v] != 0 or not used[v]):
            v += 1
        self._dptr = v
        return v if v <= n else 0

    def _check_budget(self, deadline, conflicts):
        if deadline is not None and time.monotonic() > deadline:
            raise CapacityError("solver time budget exceeded")
        if self.max_conflicts is not None and conflicts > self.max_conflicts:
            raise CapacityError("solver conflict budget exceeded")

    def model_value(self, var: int) -> bool:
        """Value of `var` in the last satisfying assignment (unused vars are false)."""
        if self._model is None:
            raise RuntimeError("no model available")
        return var < len(self._model) and self._model[var] == 1
