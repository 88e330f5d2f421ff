import csv
import io
import json

import jsonschema
import pytest

from conftest import DATA, bundled, data_path, find
from declafl.ast import parse, pretty_print
from declafl.analysis import resolve
from declafl.cli import main
from declafl.fl import collapse_report, localize
from declafl.metrics import metric
from declafl.suite import load_suite

FARMER = str(data_path("farmer_faulty.mdl"))
CORRECT = str(data_path("farmer_correct.mdl"))
TESTS = str(data_path("farmer.tst"))


def cli(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def schema(name):
    return json.loads((DATA / "schemas" / f"{name}.json").read_text())


def valid(name, text):
    doc = json.loads(text)
    jsonschema.validate(doc, schema(name))
    return doc


# -- schemas ----------------------------------------------------------------------


def test_parse_json(capsys):
    code, out, _ = cli(capsys, "parse", FARMER, "--json")
    assert code == 0
    doc = valid("parse", out)
    assert [p["kind"] for p in doc["paragraphs"]][:2] == ["sig", "sig"]


def test_parse_text_round_trips(capsys):
    code, out, _ = cli(capsys, "parse", FARMER)
    assert code == 0
    m = parse(out)
    resolve(m)
    assert pretty_print(m) == out


def test_deps_json(capsys):
    code, out, _ = cli(capsys, "deps", FARMER, TESTS)
    assert code == 0
    doc = valid("deps", out)
    assert doc["edges"]["crossRiver"] == ["Farmer", "Object"]


def test_solve_json_with_core(capsys, tmp_path):
    p = tmp_path / "c.mdl"
    p.write_text("sig A {}\nfact F { no A }\npred t { some A }\nrun t for 2\n")
    code, out, _ = cli(capsys, "solve", str(p), "--core", "--json")
    assert code == 0
    doc = valid("solve", out)
    assert doc["status"] == "unsat"
    assert len(doc["core_nodes"]) == 2


def test_solve_json_instance(capsys, tmp_path):
    p = tmp_path / "s.mdl"
    p.write_text("sig A {}\npred t { some A }\nrun t for 2\n")
    code, out, _ = cli(capsys, "solve", str(p), "--json", "--scope", "1")
    assert code == 0
    doc = valid("solve", out)
    assert doc["status"] == "sat" and "instance" in doc


def test_run_json(capsys):
    code, out, _ = cli(capsys, "run", FARMER, TESTS, "--json")
    assert code == 0
    doc = valid("run", out)
    assert len(doc) == 19
    assert [r["name"] for r in doc if not r["passed"]] == ["test1"]


def test_mutate_json(capsys):
    code, out, _ = cli(capsys, "mutate", str(data_path("sll.mdl")), "--sample", "5", "--seed", "3")
    assert code == 0
    assert len(valid("mutate", out)) == 5


def test_localize_mu_farmer(capsys, farmer_faulty):
    code, out, _ = cli(capsys, "localize", "-t", "mu", "-f", "ochiai", FARMER, TESTS, "--json", "-q")
    assert code == 0
    doc = valid("localize", out)
    node = find(farmer_faulty, "from' = from - Farmer - item && to' = to - to.eats + Farmer + item")
    assert doc[0]["rank"] == 1 and doc[0]["node_id"] == node.id
    assert doc[0]["span"] == node.span.as_dict()


def test_localize_annotate(capsys):
    code, out, _ = cli(capsys, "localize", "-t", "un", FARMER, TESTS, "--annotate", "--top", "1")
    assert code == 0
    assert "[1[" in out and "]1]" in out
    assert out.replace("[1[", "").replace("]1]", "") == data_path("farmer_faulty.mdl").read_text()


# -- exit codes -------------------------------------------------------------------


def test_usage_errors(capsys):
    assert cli(capsys, "localize", "-t", "nope", FARMER)[0] == 1
    assert cli(capsys)[0] == 1
    assert cli(capsys, "localize", FARMER, TESTS, "--json", "--annotate")[0] == 1


def test_analysis_errors(capsys, tmp_path):
    bad = tmp_path / "bad.mdl"
    bad.write_text("sig A {\n")
    assert cli(capsys, "parse", str(bad))[0] == 2
    undeclared = tmp_path / "u.mdl"
    undeclared.write_text("sig A {}\nfact { some Q }\n")
    assert cli(capsys, "parse", str(undeclared))[0] == 2


def test_empty_suite_exit_3(capsys, tmp_path):
    empty = tmp_path / "empty.tst"
    empty.write_text("")
    code, _, err = cli(capsys, "run", FARMER, str(empty))
    assert code == 3 and "no failing tests" in err


def test_no_failures_exit_3(capsys):
    assert cli(capsys, "localize", "-t", "co", CORRECT, TESTS, "-q")[0] == 3
    assert cli(capsys, "localize", "-t", "un", CORRECT, TESTS, "-q")[0] == 3


# -- eval vs API and determinism --------------------------------------------------


@pytest.fixture(scope="module")
def labeled_mutant(tmp_path_factory):
    """A detected sll fault written out as model, suite and label files."""
    b = bundled("sll")
    fault = next(f for f in b.faults if any(r.failed and r.status == "unsat" for r in f.results))
    d = tmp_path_factory.mktemp("mut")
    (d / "m.mdl").write_text(pretty_print(fault.mutant.model))
    (d / "t.tst").write_text(b.killing.text)
    m = parse((d / "m.mdl").read_text())
    resolve(m)
    spans = [m.node(n).span for n in sorted(fault.label.faulty_nodes)]
    (d / "f.json").write_text(json.dumps({"faulty_nodes": [{"span": [s.start, s.end]} for s in spans]}))
    return d, m, fault


def test_eval_csv_matches_api(capsys, labeled_mutant):
    d, m, fault = labeled_mutant
    techs = "co,un,su,mu,hy"
    code, out, _ = cli(capsys, "eval", str(d / "m.mdl"), str(d / "t.tst"), "--faults", str(d / "f.json"),
                       "--techniques", techs, "--csv", "--workers", "1")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    suite = load_suite(d / "t.tst", m)
    faulty = fault.label.faulty_nodes
    assert len(rows) == 5 * 8
    for t in techs.split(","):
        ranked = collapse_report(m, localize(t, m, suite, workers=1))
        for r in (r for r in rows if r["technique"] == t):
            assert r["model"] == "m.mdl"
            assert int(r["value"]) == metric(r["metric"], m, ranked, faulty)


def test_eval_json_schema(capsys, labeled_mutant):
    d, _, _ = labeled_mutant
    code, out, _ = cli(capsys, "eval", str(d / "m.mdl"), str(d / "t.tst"), "--faults", str(d / "f.json"),
                       "--techniques", "co,un", "--workers", "1")
    assert code == 0
    valid("eval", out)


@pytest.mark.parametrize("argv", [
    ("localize", "-t", "hy", FARMER, TESTS, "--json", "-q", "--workers", "2"),
    ("mutate", CORRECT, "--order", "2", "--sample", "4", "--seed", "9"),
    ("gen-tests", str(data_path("friends.mdl")), "--scope", "2"),
    ("solve", FARMER, "--json", "--core"),
])
def test_output_byte_identical(capsys, argv):
    a = cli(capsys, *argv)
    b = cli(capsys, *argv)
    assert a[0] == 0
    assert a[1] == b[1] and a[1]
