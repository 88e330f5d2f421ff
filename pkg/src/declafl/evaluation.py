"""Seeded-fault experiments: mutate a correct model, localize, score.

A fault is a mutant of a model taken as correct that the model's generated
killing suite detects (some test fails on it). The mutated nodes are the
labeled faulty nodes.
"""

from __future__ import annotations

import logging
import random
from dataclasses import dataclass, field

from declafl.ast.nodes import Model
from declafl.errors import CapacityError, DeclaflError, NoFailingTests, NoUnsatFailures
from declafl.finder import Session
from declafl.fl import Formula, collapse_report, localize
from declafl.metrics import FaultLabel, metric
from declafl.mutation.operators import Mutant, first_order_mutants
from declafl.suite import TestCase, TestResult, run_tests

log = logging.getLogger(__name__)


def mutant_fault_label(m: Mutant) -> FaultLabel:
    """Faulty nodes of a mutant, as ids in the mutant model."""
    out = set()
    base = m.base
    locs = [p[0] for p in m.parts] if m.parts else [m.node_id]
    for nid in locs:
        new = _mapped(m, nid)
        if new is None or new >= len(m.model.nodes):
            # a deleted signature fact: blame the signature
            new = _mapped(m, base.parent(nid))
        out.add(new)
    return FaultLabel(frozenset(out))


def _mapped(m: Mutant, nid: int) -> int | None:
    new = nid
    for start, old_size, new_size in sorted(m.regions):
        if start < nid < start + old_size:
            return None
        if nid == start:
            return new if new_size else None
        if nid >= start + old_size:
            new += new_size - old_size
    return new


@dataclass
class Fault:
    mutant: Mutant
    label: FaultLabel
    results: list[TestResult]


def detected_faults(model: Model, suite: list[TestCase], mutants=None,
                    session: Session | None = None) -> list[Fault]:
    """Mutants on which at least one test of `suite` fails."""
    session = session or Session()
    mutants = first_order_mutants(model) if mutants is None else mutants
    out = []
    for m in mutants:
        try:
            rs = run_tests(m.model, suite, True, session)
        except (CapacityError, DeclaflError) as e:
            log.info("mutant %s skipped: %s", m.describe(), e)
            continue
        if any(r.failed for r in rs):
            out.append(Fault(m, mutant_fault_label(m), rs))
    return out


def sample_faults(faults: list[Fault], count: int, seed: int) -> list[Fault]:
    if count >= len(faults):
        return list(faults)
    idx = sorted(random.Random(seed).sample(range(len(faults)), count))
    return [faults[i] for i in idx]


@dataclass
class FaultOutcome:
    fault: Fault
    values: dict[tuple[str, str], float] = field(default_factory=dict)   # (technique, metric)
    errors: dict[str, str] = field(default_factory=dict)


def evaluate_fault(fault: Fault, suite: list[TestCase], techniques, metrics,
                   formula: Formula = Formula(), session: Session | None = None,
                   collapse: bool = False, workers: int = 1) -> FaultOutcome:
    """Metric values of each technique on one fault.

    A technique that does not apply (fl_un without UNSAT failures) gets the
    worst value for every metric: 0 for top-k and the whole tree size for
    the distance metrics."""
    session = session or Session()
    model = fault.mutant.model
    out = FaultOutcome(fault)
    for tech in techniques:
        try:
            ranked = localize(tech, model, suite, formula, fault.results, session, workers)
        except (NoFailingTests, NoUnsatFailures) as e:
            out.errors[tech] = str(e)
            ranked = None
        if ranked is not None and collapse:
            ranked = collapse_report(model, ranked)
        for name in metrics:
            if ranked is None:
                out.values[(tech, name)] = 0 if name.startswith("top") else len(model.nodes)
            else:
                out.values[(tech, name)] = metric(name, model, ranked, fault.label.faulty_nodes)
    return out
