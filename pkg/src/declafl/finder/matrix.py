"""Sparse boolean matrices: relations as `{atom tuple: circuit literal}`.

Missing entries are FALSE. Atoms are ints indexing the universe.
"""

from __future__ import annotations

from collections import defaultdict

from declafl.finder.circuit import FALSE, TRUE, Circuit


class Matrix:
    __slots__ = ("arity", "cells")

    def __init__(self, arity: int, cells: dict | None = None):
        self.arity = arity
        self.cells: dict[tuple[int, ...], int] = {}
        if cells:
            for t, v in cells.items():
                if v != FALSE:
                    self.cells[t] = v

    @classmethod
    def singleton(cls, atom: int) -> "Matrix":
        return cls(1, {(atom,): TRUE})

    def get(self, t) -> int:
        return self.cells.get(t, FALSE)

    def key(self):
        return (self.arity, tuple(sorted(self.cells.items())))

    def is_constant(self) -> bool:
        return all(v == TRUE for v in self.cells.values())

    def __repr__(self):
        return f"Matrix({self.arity}, {self.cells})"


def union(c: Circuit, a: Matrix, b: Matrix) -> Matrix:
    out = dict(a.cells)
    for t, v in b.cells.items():
        out[t] = c.or_(out[t], v) if t in out else v
    return Matrix(a.arity, out)


def inter(c: Circuit, a: Matrix, b: Matrix) -> Matrix:
    return Matrix(a.arity, {t: c.and_(v, b.cells[t]) for t, v in a.cells.items() if t in b.cells})


def diff(c: Circuit, a: Matrix, b: Matrix) -> Matrix:
    return Matrix(a.arity, {t: c.and_(v, -b.cells[t]) if t in b.cells else v
                            for t, v in a.cells.items()})


def product(c: Circuit, a: Matrix, b: Matrix) -> Matrix:
    return Matrix(a.arity + b.arity, {s + t: c.and_(u, v)
                                      for s, u in a.cells.items() for t, v in b.cells.items()})


def join(c: Circuit, a: Matrix, b: Matrix) -> Matrix:
    by_first = defaultdict(list)
    for t, v in b.cells.items():
        by_first[t[0]].append((t[1:], v))
    acc: dict[tuple, list[int]] = defaultdict(list)
    for s, u in a.cells.items():
        for rest, v in by_first.get(s[-1], ()):
            acc[s[:-1] + rest].append(c.and_(u, v))
    return Matrix(a.arity + b.arity - 2, {t: c.or_n(vs) for t, vs in acc.items()})


def transpose(c: Circuit, a: Matrix) -> Matrix:
    return Matrix(2, {(t[1], t[0]): v for t, v in a.cells.items()})


def closure(c: Circuit, a: Matrix) -> Matrix:
    atoms = {x for t in a.cells for x in t}
    cur = a
    n = 1
    while n < len(atoms):
        cur = union(c, cur, join(c, cur, cur))
        n *= 2
    return cur


def subset(c: Circuit, a: Matrix, b: Matrix) -> int:
    return c.and_n([c.or_(-v, b.get(t)) for t, v in a.cells.items()])


def equal(c: Circuit, a: Matrix, b: Matrix) -> int:
    keys = set(a.cells) | set(b.cells)
    return c.and_n([c.iff(a.get(t), b.get(t)) for t in keys])


def some(c: Circuit, a: Matrix) -> int:
    return c.or_n(a.cells.values())


def lone(c: Circuit, a: Matrix) -> int:
    return c.at_most_one(a.cells.values())


def one(c: Circuit, a: Matrix) -> int:
    vals = list(a.cells.values())
    return c.and_(c.or_n(vals), c.at_most_one(vals))
