"""Command-line entry point.

Exit codes: 0 ok, 1 usage error, 2 analysis error, 3 no failing tests (or
no UNSAT failures for the core-based techniques).
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import random
import sys
from pathlib import Path

from declafl.analysis import dependency_graph, ensure_resolved
from declafl.ast import parse_file, pretty_print, print_node
from declafl.ast.nodes import Model, Node
from declafl.errors import (CapacityError, DeclaflError, Exhausted, NoFailingTests,
                            NoUnsatFailures, UnknownNode)
from declafl.finder import Session
from declafl.fl import FORMULAS, TECHNIQUES, Formula, collapse_report, default_workers, localize
from declafl.metrics import METRICS, load_fault_label, metric
from declafl.mutation import first_order_mutants, generate_killing_tests, second_order_mutants
from declafl.scope import Scope
from declafl.suite import load_suite, model_suite, run_tests, summarize

log = logging.getLogger("declafl")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _span(n: Node) -> dict | None:
    return n.span.as_dict() if n.span is not None else None


def snippet(n: Node) -> str:
    if n.op == "sig":
        return f"sig {n.name}"
    if n.op in ("pred", "fun", "fact", "assert"):
        return f"{n.op} {n.name or ''}".strip()
    try:
        return print_node(n, 0)
    except Exception:  # declarations and other non-expression nodes
        return n.op


def _emit(obj):
    json.dump(obj, sys.stdout, indent=2, sort_keys=False)
    sys.stdout.write("\n")


def _load(path: str) -> Model:
    if not Path(path).is_file():
        raise UsageError(f"no such file: {path}")
    m = parse_file(path)
    ensure_resolved(m)
    return m


def _suite(model: Model, path: str | None):
    if path is None:
        return model_suite(model)
    if not Path(path).is_file():
        raise UsageError(f"no such file: {path}")
    return load_suite(path, model)


def _scope(args, base: Scope | None = None) -> Scope:
    sc = base or Scope(3)
    if getattr(args, "scope", None) is not None:
        sc = Scope(args.scope, sc.overrides)
    for item in getattr(args, "sig_scope", None) or []:
        name, _, n = item.partition("=")
        if not n.isdigit():
            raise UsageError(f"bad --sig-scope {item!r}, expected Name=N")
        sc = sc.with_override(name, int(n))
    return sc


def _session(args) -> Session:
    return Session(budget_seconds=args.budget)


# -- subcommands ------------------------------------------------------------------


def cmd_parse(args) -> int:
    m = _load(args.model)
    if args.json:
        _emit({"nodes": len(m.nodes),
               "paragraphs": [{"kind": p.op, "name": p.name, "node_id": p.id, "span": _span(p)}
                              for p in m.paragraphs]})
    else:
        sys.stdout.write(pretty_print(m))
    return 0


def cmd_deps(args) -> int:
    m = _load(args.model)
    suite = _suite(m, args.tests) if args.tests else []
    _emit(dependency_graph(m, suite).as_json())
    return 0


def cmd_solve(args) -> int:
    m = _load(args.model)
    cmds = m.commands
    if args.command:
        cmds = [c for c in cmds if c.target == args.command]
    if not cmds:
        raise UsageError("no matching run/check command in the model")
    c = cmds[0]
    scope = _scope(args, c.scope)
    s = _session(args)
    gf = s.ground(m, c.kind, c.target, scope)
    r = s.solve(gf, want_core=args.core)
    out: dict = {"status": r.status}
    if r.instance is not None:
        out["instance"] = r.instance.as_json()
    if args.core and r.core is not None:
        out["core_nodes"] = [{"node_id": n.id, "span": _span(n)} for _, n in r.core]
    if args.json:
        _emit(out)
    else:
        print(f"{c.kind} {c.target} {scope.render()}: {r.status}")
        for d in out.get("core_nodes", []):
            print(f"  core node {d['node_id']}: {snippet(m.node(d['node_id']))}")
        if r.instance is not None:
            for name, tuples in sorted(r.instance.relations.items()):
                print(f"  {name} = {sorted(tuples)}")
    return 0


def cmd_run(args) -> int:
    m = _load(args.model)
    suite = _suite(m, args.tests)
    if not suite:
        raise NoFailingTests("no failing tests: the suite is empty")
    results = run_tests(m, suite, session=_session(args))
    if args.json:
        _emit([{"name": r.test.name, "status": r.status, "passed": r.passed} for r in results])
    else:
        for r in results:
            print(f"{r.test.name}\t{r.status}\t{'pass' if r.passed else 'FAIL'}")
        s = summarize(results)
        print(f"{s.passed} passed, {s.failed} failed, {s.errored} errored", file=sys.stderr)
    return 0


def _mutants(args, m: Model, s: Session):
    if args.order == 2:
        suite = _suite(m, args.tests) if args.tests else None
        try:
            return second_order_mutants(m, args.sample or 10, args.seed, suite, _scope(args), s)
        except Exhausted as e:
            print(f"warning: {e}", file=sys.stderr)
            return e.mutants
    ms = list(first_order_mutants(m))
    if args.sample is not None and args.sample < len(ms):
        idx = sorted(random.Random(args.seed).sample(range(len(ms)), args.sample))
        ms = [ms[i] for i in idx]
    return ms


def cmd_mutate(args) -> int:
    m = _load(args.model)
    _emit([mu.as_json() for mu in _mutants(args, m, _session(args))])
    return 0


def cmd_gen_tests(args) -> int:
    m = _load(args.model)
    s = _session(args)
    mutants = _mutants(args, m, s) if (args.order == 2 or args.sample is not None) else None
    ks = generate_killing_tests(m, _scope(args), s, mutants, prefix=args.prefix)
    text = ks.text + ("\n" if ks.text and not ks.text.endswith("\n") else "")
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    print(f"{len(ks.tests)} tests for {len(ks.mutants)} non-equivalent mutants "
          f"({ks.equivalent} equivalent)", file=sys.stderr)
    return 0


def _progress(done: int, total: int):
    if sys.stderr.isatty():
        end = "\n" if done == total else ""
        print(f"\rmutants {done}/{total}", end=end, file=sys.stderr, flush=True)
    elif done == total or done * 10 // total != (done - 1) * 10 // total:
        print(f"mutants {done}/{total}", file=sys.stderr, flush=True)


def _ranked(args, m: Model, suite, technique: str, s: Session):
    formula = Formula(args.formula, args.dstar_exp)
    ranked = localize(technique, m, suite, formula, session=s, workers=args.workers,
                      progress=_progress if technique in ("mu", "hy") and not args.quiet else None)
    if args.collapse:
        ranked = collapse_report(m, ranked)
    return ranked


def annotate(source: str, m: Model, entries) -> str:
    """Source text with `[k[` ... `]k]` around the span of the rank-k node."""
    opens: dict[int, list[tuple[int, int]]] = {}
    closes: dict[int, list[tuple[int, int]]] = {}
    for k, e in enumerate(entries, 1):
        sp = m.node(e.node_id).span
        if sp is None:
            continue
        width = sp.end - sp.start
        opens.setdefault(sp.start, []).append((-width, k))
        closes.setdefault(sp.end, []).append((width, k))
    out = []
    for i in range(len(source) + 1):
        for _, k in sorted(closes.get(i, [])):
            out.append(f"]{k}]")
        for _, k in sorted(opens.get(i, [])):
            out.append(f"[{k}[")
        if i < len(source):
            out.append(source[i])
    return "".join(out)


def cmd_localize(args) -> int:
    m = _load(args.model)
    suite = _suite(m, args.tests)
    ranked = _ranked(args, m, suite, args.technique, _session(args))
    top = ranked[:args.top] if args.top else ranked
    if args.annotate:
        sys.stdout.write(annotate(m.source, m, top))
        return 0
    rows = [{"rank": k, "node_id": e.node_id, "span": _span(m.node(e.node_id)),
             "score": e.score, "snippet": snippet(m.node(e.node_id))} for k, e in enumerate(top, 1)]
    if args.json:
        _emit(rows)
    else:
        for r in rows:
            print(f"{r['rank']:>3}  {r['score']:.4f}  node {r['node_id']:<5} {r['snippet']}")
    return 0


def cmd_eval(args) -> int:
    m = _load(args.model)
    suite = _suite(m, args.tests)
    label = load_fault_label(args.faults, m)
    techniques = [t for t in args.techniques.split(",") if t]
    metrics = [x for x in args.metrics.split(",") if x]
    for t in techniques:
        if t not in TECHNIQUES:
            raise UsageError(f"unknown technique {t!r}")
    for x in metrics:
        try:
            metric(x, m, [], [0])
        except ValueError:
            raise UsageError(f"unknown metric {x!r}") from None
        except DeclaflError:
            pass
    s = _session(args)
    results = run_tests(m, suite, True, s)
    formula = Formula(args.formula, args.dstar_exp)
    rows = []
    for t in techniques:
        try:
            ranked = localize(t, m, suite, formula, results, s, args.workers)
        except NoUnsatFailures:
            ranked = None
        if ranked is not None and args.collapse:
            ranked = collapse_report(m, ranked)
        for x in metrics:
            if ranked is None:
                value = 0 if x.startswith("top") else len(m.nodes)
            else:
                value = metric(x, m, ranked, label.faulty_nodes)
            rows.append({"model": Path(args.model).name, "metric": x, "technique": t, "value": value})
    if args.csv:
        w = csv.DictWriter(sys.stdout, ["model", "metric", "technique", "value"], lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    else:
        _emit(rows)
    return 0


# -- parser -----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="declafl", description="Fault localization for relational models.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress details")
    p.add_argument("--budget", type=float, default=10.0, help="per-solve time budget in seconds")
    sub = p.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    sp = sub.add_parser("parse", help="parse a model and print it back")
    sp.add_argument("model")
    sp.add_argument("--json", action="store_true")
    sp.set_defaults(fn=cmd_parse)

    sp = sub.add_parser("deps", help="paragraph dependency graph as JSON")
    sp.add_argument("model")
    sp.add_argument("tests", nargs="?")
    sp.set_defaults(fn=cmd_deps)

    sp = sub.add_parser("solve", help="solve one command of the model")
    sp.add_argument("model")
    sp.add_argument("--command", help="target of the run/check command (default: the first)")
    sp.add_argument("--scope", type=int)
    sp.add_argument("--sig-scope", action="append", metavar="NAME=N")
    sp.add_argument("--core", action="store_true", help="report a minimal unsat core")
    sp.add_argument("--json", action="store_true")
    sp.set_defaults(fn=cmd_solve)

    sp = sub.add_parser("run", help="run a test suite against a model")
    sp.add_argument("model")
    sp.add_argument("tests", nargs="?")
    sp.add_argument("--json", action="store_true")
    sp.set_defaults(fn=cmd_run)

    for name, fn, hlp in (("mutate", cmd_mutate, "list mutants as JSON"),
                          ("gen-tests", cmd_gen_tests, "generate mutant-killing tests")):
        sp = sub.add_parser(name, help=hlp)
        sp.add_argument("model")
        sp.add_argument("--order", type=int, choices=(1, 2), default=1)
        sp.add_argument("--sample", type=int)
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--scope", type=int, default=3)
        sp.add_argument("--sig-scope", action="append", metavar="NAME=N")
        sp.add_argument("--tests", help="suite used to filter second-order mutants")
        if name == "gen-tests":
            sp.add_argument("-o", "--output")
            sp.add_argument("--prefix", default="test")
        sp.set_defaults(fn=fn)

    def fl_flags(sp):
        sp.add_argument("model")
        sp.add_argument("tests", nargs="?")
        sp.add_argument("-f", "--formula", choices=FORMULAS, default="ochiai")
        sp.add_argument("--dstar-exp", type=int, default=2)
        sp.add_argument("--workers", type=int, default=None)
        sp.add_argument("--no-collapse", dest="collapse", action="store_false",
                        help="report raw rankings without merging equal-score subtrees")

    sp = sub.add_parser("localize", help="rank suspicious AST nodes")
    fl_flags(sp)
    sp.add_argument("-t", "--technique", choices=TECHNIQUES, default="mu")
    sp.add_argument("--top", type=int, default=10, help="entries to report (0: all)")
    sp.add_argument("-q", "--quiet", action="store_true", help="no progress output")
    out = sp.add_mutually_exclusive_group()
    out.add_argument("--json", action="store_true")
    out.add_argument("--annotate", action="store_true")
    sp.set_defaults(fn=cmd_localize)

    sp = sub.add_parser("eval", help="score techniques against labeled faulty nodes")
    fl_flags(sp)
    sp.add_argument("--faults", required=True)
    sp.add_argument("--techniques", default=",".join(TECHNIQUES))
    sp.add_argument("--metrics", default=",".join(METRICS))
    sp.add_argument("--csv", action="store_true")
    sp.set_defaults(fn=cmd_eval)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        print(f"declafl: error: {e}", file=sys.stderr)
        return 1
    except SystemExit as e:  # --help
        return 0 if not e.code else 1
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "workers", 1) is None:
        args.workers = default_workers()
    try:
        return args.fn(args)
    except UsageError as e:
        print(f"declafl: error: {e}", file=sys.stderr)
        return 1
    except (NoFailingTests, NoUnsatFailures) as e:
        print(f"declafl: {e}", file=sys.stderr)
        return 3
    except (DeclaflError, CapacityError) as e:
        code = 1 if isinstance(e, UnknownNode) else 2
        print(f"declafl: error: {e}", file=sys.stderr)
        return code
    except ValueError as e:
        print(f"declafl: error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
