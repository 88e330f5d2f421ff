"""Farmer walkthrough: generate killing tests on the correct model, run them
on the faulty one and print the top entries of every technique."""

import argparse
from importlib import resources
from pathlib import Path

from declafl.analysis import resolve
from declafl.cli import snippet
from declafl.ast import parse_file
from declafl.finder import Session
from declafl.fl import TECHNIQUES, Formula, collapse_report, default_workers, localize
from declafl.mutation import generate_killing_tests
from declafl.scope import Scope
from declafl.suite import load_suite_text, run_tests

DATA = Path(str(resources.files("declafl") / "data"))


def load(name):
    m = parse_file(DATA / name)
    resolve(m)
    return m


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--scope", type=int, default=4)
    ap.add_argument("--top", type=int, default=3)
    ap.add_argument("-f", "--formula", default="ochiai")
    args = ap.parse_args()

    correct, faulty = load("farmer_correct.mdl"), load("farmer_faulty.mdl")
    s = Session()
    ks = generate_killing_tests(correct, Scope(args.scope), s)
    print(f"{len(ks.tests)} killing tests for {len(ks.mutants)} mutants ({ks.equivalent} equivalent)")
    suite = load_suite_text(ks.text, faulty)
    results = run_tests(faulty, suite, True, s)
    for r in results:
        if r.failed:
            print(f"failing: {r.test.name} ({r.status})")
    for t in TECHNIQUES:
        ranked = collapse_report(faulty, localize(t, faulty, suite, Formula(args.formula), results, s,
                                                  default_workers()))
        print(f"\n{t}:")
        for k, e in enumerate(ranked[:args.top], 1):
            print(f"  {k}. {e.score:.4f}  node {e.node_id}  {snippet(faulty.node(e.node_id))[:90]}")


if __name__ == "__main__":
    main()
