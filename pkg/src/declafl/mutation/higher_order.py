"""Second-order mutants: seeded random pairs of first-order rewrites."""

from __future__ import annotations

import logging
import random
import warnings

from declafl.analysis import ensure_resolved
from declafl.ast.nodes import Model
from declafl.errors import CapacityError, DeclaflError, Exhausted
from declafl.finder import Session
from declafl.mutation.operators import Mutant, compose, first_order_mutants
from declafl.scope import Scope
from declafl.suite import TestCase, run_test

log = logging.getLogger(__name__)


def _disjoint(model: Model, a: Mutant, b: Mutant) -> bool:
    lo, hi = sorted((a.node_id, b.node_id))
    return lo != hi and hi > lo + model.descendant_count(lo)


def killed(model: Model, mutant: Mutant, suite: list[TestCase], session: Session) -> bool:
    """True if some test changes satisfiability on the mutant."""
    for t in suite:
        ro = run_test(model, t, session=session)
        rm = run_test(mutant.model, t, session=session)
        if not ro.errored and not rm.errored and ro.status != rm.status:
            return True
    return False


def second_order_mutants(model: Model, count: int, seed: int, suite: list[TestCase] | None = None,
                         scope: Scope | None = None, session: Session | None = None) -> list[Mutant]:
    """`count` distinct killable second-order mutants, reproducible under `seed`.

    Pairs of first-order mutants at disjoint subtrees are drawn in a seeded
    order and kept when some test of `suite` kills the composition (the
    suite defaults to the killing tests generated for `model`). If fewer
    exist, Exhausted is raised carrying the ones found in `.mutants`.
    """
    if count < 0:
        raise ValueError("count must be non-negative")
    if count == 0:
        return []
    ensure_resolved(model)
    session = session or Session()
    if suite is None:
        from declafl.mutation.killing import generate_killing_tests
        suite = generate_killing_tests(model, scope or Scope(3), session).tests
    firsts = list(first_order_mutants(model))
    pairs = [(i, j) for i in range(len(firsts)) for j in range(i + 1, len(firsts))
             if _disjoint(model, firsts[i], firsts[j])]
    random.Random(seed).shuffle(pairs)
    out: list[Mutant] = []
    for i, j in pairs:
        try:
            m = compose(firsts[i], firsts[j])
            if killed(model, m, suite, session):
                out.append(m)
        except (CapacityError, DeclaflError) as e:
            log.debug("pair %d,%d skipped: %s", i, j, e)
            continue
        if len(out) == count:
            return out
    msg = f"only {len(out)} killable second-order mutants (asked for {count})"
    warnings.warn(msg, stacklevel=2)
    err = Exhausted(msg)
    err.mutants = out
    raise err
