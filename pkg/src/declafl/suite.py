"""Test suites: run/check commands with expectations, executed against a model.

A suite file uses the model grammar. Its predicates (typically valuation
predicates pinning every relation) are resolved against the model under
test, and each `run`/`check` command becomes one `TestCase`.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from pathlib import Path

from declafl.analysis import ensure_resolved, resolve
from declafl.ast import parse
from declafl.ast.nodes import Command, Model, Node
from declafl.errors import CapacityError, DeclaflError, UnmatchedCommand
from declafl.finder import Session
from declafl.scope import Scope

log = logging.getLogger(__name__)


@dataclass
class TestCase:
    __test__ = False  # not a pytest class

    name: str
    kind: str                      # "run" or "check"
    target: str                    # predicate or assertion name
    scope: Scope
    expect: bool                   # True: expect satisfiable
    module: Model | None = None    # where the target lives (None: the model)
    command: Command | None = None

    def body(self, model: Model) -> Node:
        mod = self.module if self.module is not None else model
        table = mod.preds if self.kind == "run" else mod.asserts
        return table.get(self.target) or (model.preds if self.kind == "run" else model.asserts)[self.target]


@dataclass
class TestResult:
    __test__ = False

    test: TestCase
    status: str                    # "sat", "unsat" or "error"
    passed: bool
    core: frozenset[int] | None = None
    error: str | None = None

    @property
    def errored(self) -> bool:
        return self.status == "error"

    @property
    def failed(self) -> bool:
        return not self.errored and not self.passed

    def as_json(self) -> dict:
        out = {"name": self.test.name, "status": self.status, "passed": self.passed}
        if self.core is not None:
            out["core"] = sorted(self.core)
        if self.error:
            out["error"] = self.error
        return out


def classify(status: str, expect: bool) -> bool:
    """Pass iff the observed satisfiability matches the expectation."""
    return (status == "sat") == expect


def default_expect(kind: str, expect: int | None) -> bool:
    if expect is None:
        return kind == "run"
    return expect == 1


def tests_from_module(module: Model, model: Model) -> list[TestCase]:
    out: list[TestCase] = []
    counts: dict[str, int] = {}
    for c in module.commands:
        counts[c.target] = counts.get(c.target, 0) + 1
    seen: dict[str, int] = {}
    for c in module.commands:
        table_m = module.preds if c.kind == "run" else module.asserts
        table_b = model.preds if c.kind == "run" else model.asserts
        if c.target not in table_m and c.target not in table_b:
            raise UnmatchedCommand(f"{c.kind} {c.target}: no such {'predicate' if c.kind == 'run' else 'assertion'}")
        i = seen.get(c.target, 0)
        seen[c.target] = i + 1
        name = c.target if counts[c.target] == 1 else f"{c.target}#{i + 1}"
        out.append(TestCase(name, c.kind, c.target, c.scope, default_expect(c.kind, c.expect),
                            module, c))
    commanded = {c.target for c in module.commands}
    for p in module.preds:
        if p not in commanded and "$" not in p:
            warnings.warn(f"predicate {p!r} has no command and is not a test", stacklevel=3)
    return out


def load_suite_text(text: str, model: Model, path: str = "<tests>") -> list[TestCase]:
    ensure_resolved(model)
    module = parse(text, path)
    resolve(module, model)
    return tests_from_module(module, model)


def load_suite(path: str | Path, model: Model) -> list[TestCase]:
    p = Path(path)
    return load_suite_text(p.read_text(), model, str(p))


def model_suite(model: Model) -> list[TestCase]:
    """Commands declared in the model itself."""
    ensure_resolved(model)
    tests = tests_from_module(model, model)
    for t in tests:
        t.module = None
    return tests


def run_test(model: Model, test: TestCase, want_core: bool = False,
             session: Session | None = None, relax=frozenset()) -> TestResult:
    session = session or Session()
    try:
        gf = session.ground(model, test.kind, test.target, test.scope, test.module, relax)
        sat = session.status(gf)
        status = "sat" if sat else "unsat"
        passed = classify(status, test.expect)
        core = None
        if want_core and not sat and not passed:
            r = session.solve(gf, want_core=True)
            core = frozenset(n.id for _, n in r.core)
        return TestResult(test, status, passed, core)
    except (CapacityError, DeclaflError) as e:
        log.debug("test %s errored: %s", test.name, e)
        return TestResult(test, "error", False, error=str(e))


def run_tests(model: Model, suite: list[TestCase], want_cores: bool = False,
              session: Session | None = None, relax=frozenset()) -> list[TestResult]:
    """One result per test, in suite order. Cores are only computed for
    failing UNSAT tests, and only when asked for."""
    session = session or Session()
    return [run_test(model, t, want_cores, session, relax) for t in suite]


@dataclass
class SuiteSummary:
    failed: int = 0
    passed: int = 0
    errored: int = 0
    names: list[str] = field(default_factory=list)


def summarize(results: list[TestResult]) -> SuiteSummary:
    s = SuiteSummary()
    for r in results:
        if r.errored:
            s.errored += 1
        elif r.passed:
            s.passed += 1
        else:
            s.failed += 1
            s.names.append(r.test.name)
    return s
