"""The five localization techniques.

co: paragraph-level spectrum. un: hit-map over unsat cores of failing
UNSAT tests. su: un extended with static coverage of failing SAT tests.
mu: mutation-based spectrum over nodes covered by failing tests. hy:
average of co and mu where a node is mutable.
"""

from __future__ import annotations

import logging
import os
from collections.abc import Callable, Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

from declafl.analysis import covered_paragraphs, ensure_resolved, static_coverage
from declafl.ast.nodes import Model, Node, paragraph_body
from declafl.errors import CapacityError, DeclaflError, NoFailingTests, NoUnsatFailures
from declafl.finder import Session
from declafl.fl.formulas import Formula
from declafl.fl.hitmap import HitMap
from declafl.fl.ranking import Entry, rank
from declafl.mutation.equivalence import Comparator
from declafl.mutation.operators import OPERATORS, Mutant, applicable_ops, apply_op
from declafl.suite import TestCase, TestResult, run_test, run_tests

log = logging.getLogger(__name__)

TECHNIQUES = ("co", "un", "su", "mu", "hy")

Progress = Callable[[int, int], None]


def _failing(results: Sequence[TestResult]) -> list[TestResult]:
    return [r for r in results if r.failed]


def _counts(results: Sequence[TestResult]) -> tuple[int, int]:
    tf = sum(1 for r in results if r.failed)
    tp = sum(1 for r in results if r.passed)
    if tf == 0:
        raise NoFailingTests("no failing tests")
    return tf, tp


def _results(model, suite, results, session, cores=False) -> list[TestResult]:
    if results is not None:
        if cores and any(r.failed and r.status == "unsat" and r.core is None for r in results):
            return run_tests(model, suite, True, session)
        return list(results)
    return run_tests(model, suite, cores, session or Session())


def body_root(p: Node) -> Node:
    """The node standing for a paragraph in co rankings."""
    if p.op == "sig":
        return p
    return paragraph_body(p)


# -- co ---------------------------------------------------------------------------


def co_scores(model: Model, suite: Sequence[TestCase], formula: Formula = Formula(),
              results=None, session: Session | None = None) -> dict[int, float]:
    """Score of every node (the score of its paragraph)."""
    ensure_resolved(model)
    results = _results(model, suite, results, session)
    tf, tp = _counts(results)
    failed = {p.id: 0 for p in model.paragraphs}
    passed = dict(failed)
    for r in results:
        if r.errored:
            continue
        for p in covered_paragraphs(model, r.test):
            (passed if r.passed else failed)[p.id] += 1
    out: dict[int, float] = {}
    for p in model.paragraphs:
        s = max(0.0, formula(failed[p.id], passed[p.id], tf, tp))
        for n in model.descendants(p.id, inclusive=True):
            out[n] = s
    return out


def fl_co(model: Model, suite: Sequence[TestCase], formula: Formula = Formula(),
          results=None, session: Session | None = None) -> list[Entry]:
    scores = co_scores(model, suite, formula, results, session)
    return rank(model, {body_root(p).id: scores[p.id] for p in model.paragraphs})


# -- un / su ----------------------------------------------------------------------


def _hit_ranking(model: Model, h: HitMap) -> list[Entry]:
    return rank(model, {n: float(h[n]) for n in h.fronts(model)})


def fl_un(model: Model, suite: Sequence[TestCase], results=None,
          session: Session | None = None) -> list[Entry]:
    ensure_resolved(model)
    results = _results(model, suite, results, session, cores=True)
    failing = _failing(results)
    if not failing:
        raise NoFailingTests("no failing tests")
    unsat = [r for r in failing if r.status == "unsat"]
    if not unsat:
        raise NoUnsatFailures("every failing test is satisfiable")
    h = HitMap()
    for r in unsat:
        h.record(model, r.core or ())
    return _hit_ranking(model, h)


def fl_su(model: Model, suite: Sequence[TestCase], results=None,
          session: Session | None = None) -> list[Entry]:
    ensure_resolved(model)
    results = _results(model, suite, results, session, cores=True)
    failing = _failing(results)
    if not failing:
        raise NoFailingTests("no failing tests")
    h = HitMap()
    for r in failing:
        if r.status == "sat":
            h.record(model, static_coverage(model, r.test))
        else:
            h.record(model, r.core or ())
    return _hit_ranking(model, h)


# -- mu ---------------------------------------------------------------------------


@dataclass
class MutationScores:
    scores: dict[int, float] = field(default_factory=dict)   # mutable nodes only
    evaluated: int = 0
    skipped: int = 0


def mutation_sites(model: Model, results: Sequence[TestResult]) -> list[int]:
    """Nodes of paragraphs covered by at least one failing test."""
    s: set[int] = set()
    for r in _failing(results):
        s |= static_coverage(model, r.test)
    return sorted(s)


def _jobs(model: Model, sites) -> list[tuple[int, str, object]]:
    out = []
    for nid in sites:
        for op, variant in sorted(applicable_ops(model, nid), key=lambda x: (OPERATORS.index(x[0]), str(x[1]))):
            out.append((nid, op, variant))
    return out


class _MutantScorer:
    def __init__(self, model, suite, results, formula, session):
        self.model = model
        self.suite = suite
        self.results = results
        self.formula = formula
        self.session = session
        self.tf, self.tp = _counts(results)
        self.scope = max((t.scope for t in suite), key=lambda s: (s.max_count(), s.default))
        self._cmp: Comparator | None = None

    def kills(self, m: Mutant) -> tuple[int, int, int]:
        """(failing kills, passing kills, errors) over the original non-errored tests."""
        kf = kp = errs = 0
        for r in self.results:
            if r.errored:
                continue
            rm = run_test(m.model, r.test, session=self.session)
            if rm.errored:
                errs += 1
                continue
            if rm.status != r.status:
                if r.passed:
                    kp += 1
                else:
                    kf += 1
        return kf, kp, errs

    def equivalent(self, m: Mutant) -> bool:
        if self._cmp is None:
            self._cmp = Comparator(self.model, self.scope, self.session)
        try:
            return self._cmp.equivalent(m)
        except (CapacityError, DeclaflError):
            return True

    def score(self, job) -> tuple[int, float | None]:
        """(node, score) or (node, None) when the mutant is invalid,
        equivalent or could not be evaluated."""
        nid, op, variant = job
        try:
            m = apply_op(op, variant, nid, self.model)
        except DeclaflError:
            return nid, None
        kf, kp, errs = self.kills(m)
        live = len([r for r in self.results if not r.errored])
        if errs == live:
            return nid, None
        if kf == 0 and kp == 0 and self.equivalent(m):
            return nid, None
        return nid, max(0.0, self.formula(kf, kp, self.tf, self.tp))


_worker: _MutantScorer | None = None


def _init_worker(model, suite, results, formula, budget):
    global _worker
    _worker = _MutantScorer(model, suite, results, formula, Session(budget_seconds=budget))


def _score_chunk(jobs):
    return [_worker.score(j) for j in jobs]


def default_workers() -> int:
    env = os.environ.get("DECLAFL_WORKERS")
    if env:
        return max(1, int(env))
    return max(1, len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity") else os.cpu_count() or 1)


def mu_scores(model: Model, suite: Sequence[TestCase], formula: Formula = Formula(),
              results=None, session: Session | None = None, workers: int = 1,
              progress: Progress | None = None) -> MutationScores:
    """Per-node maximum mutant score over the failing tests' coverage."""
    ensure_resolved(model)
    session = session or Session()
    results = _results(model, suite, results, session)
    _counts(results)
    jobs = _jobs(model, mutation_sites(model, results))
    out = MutationScores()
    total = len(jobs)

    def merge(nid, s):
        if s is None:
            out.skipped += 1
            return
        out.evaluated += 1
        out.scores[nid] = max(out.scores.get(nid, 0.0), s)

    if workers <= 1 or total < 2 * workers:
        scorer = _MutantScorer(model, suite, results, formula, session)
        for i, j in enumerate(jobs):
            merge(*scorer.score(j))
            if progress:
                progress(i + 1, total)
        return out
    import multiprocessing as mp
    size = max(1, total // (workers * 4))
    chunks = [jobs[i:i + size] for i in range(0, total, size)]
    done = 0
    ctx = mp.get_context("fork")
    with ProcessPoolExecutor(workers, ctx, _init_worker,
                             (model, list(suite), list(results), formula, session.budget_seconds)) as ex:
        for part in ex.map(_score_chunk, chunks):
            for nid, s in part:
                merge(nid, s)
            done += len(part)
            if progress:
                progress(done, total)
    return out


def fl_mu(model: Model, suite: Sequence[TestCase], formula: Formula = Formula(),
          results=None, session: Session | None = None, workers: int = 1,
          progress: Progress | None = None) -> list[Entry]:
    ms = mu_scores(model, suite, formula, results, session, workers, progress)
    return rank(model, {n: s for n, s in ms.scores.items() if s > 0})


# -- hy ---------------------------------------------------------------------------


def hy_scores(co: dict[int, float], mu: dict[int, float]) -> dict[int, float]:
    return {n: (c + mu[n]) / 2 if n in mu else c for n, c in co.items()}


def fl_hy(model: Model, suite: Sequence[TestCase], formula: Formula = Formula(),
          results=None, session: Session | None = None, workers: int = 1,
          progress: Progress | None = None) -> list[Entry]:
    session = session or Session()
    results = _results(model, suite, results, session)
    co = co_scores(model, suite, formula, results, session)
    mu = mu_scores(model, suite, formula, results, session, workers, progress).scores
    return rank(model, {n: s for n, s in hy_scores(co, mu).items() if s > 0})


def localize(technique: str, model: Model, suite: Sequence[TestCase], formula: Formula = Formula(),
             results=None, session: Session | None = None, workers: int = 1,
             progress: Progress | None = None) -> list[Entry]:
    if technique == "co":
        return fl_co(model, suite, formula, results, session)
    if technique == "un":
        return fl_un(model, suite, results, session)
    if technique == "su":
        return fl_su(model, suite, results, session)
    if technique == "mu":
        return fl_mu(model, suite, formula, results, session, workers, progress)
    if technique == "hy":
        return fl_hy(model, suite, formula, results, session, workers, progress)
    raise ValueError(f"unknown technique {technique!r}")
