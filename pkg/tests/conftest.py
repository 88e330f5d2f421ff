from importlib import resources
from pathlib import Path

import pytest

from declafl.ast import parse, parse_file
from declafl.analysis import resolve
from declafl.finder import Session
from declafl.suite import load_suite

DATA = Path(str(resources.files("declafl") / "data"))


def data_path(name: str) -> Path:
    return DATA / name


def load(name: str):
    m = parse_file(data_path(name))
    resolve(m)
    return m


def model_of(src: str, path: str = "<test>"):
    m = parse(src, path)
    resolve(m)
    return m


def find(model, text: str):
    """The outermost node whose printed form is `text`."""
    from declafl.ast import print_node
    for n in model.nodes:
        try:
            if print_node(n, 0) == text:
                return n
        except Exception:
            continue
    raise LookupError(text)


@pytest.fixture(scope="session")
def farmer_faulty():
    return load("farmer_faulty.mdl")


@pytest.fixture(scope="session")
def farmer_correct():
    return load("farmer_correct.mdl")


@pytest.fixture(scope="session")
def farmer_suite(farmer_faulty):
    return load_suite(data_path("farmer.tst"), farmer_faulty)


@pytest.fixture(scope="session")
def session():
    return Session()


def tree_model(parents):
    """A bare Model whose node tree has the given parent array (parents
    must precede children and ids come out in pre-order)."""
    from declafl.ast.nodes import Model, Node
    nodes = [Node("n", attrs={"k": i}) for i in range(len(parents))]
    for i, p in enumerate(parents):
        if p is not None:
            nodes[p].children.append(nodes[i])
    m = Model(nodes[0])
    return m


def random_parents(rng, n: int):
    """Parent array of a random pre-order-numbered tree with n nodes."""
    parents = [None]
    path = [0]   # the rightmost path: the only places a new pre-order node can attach
    for i in range(1, n):
        k = rng.randrange(len(path))
        del path[k + 1:]
        parents.append(path[-1])
        path.append(i)
    return parents


BUNDLED = ("sll", "friends", "rbac")


class Bundled:
    def __init__(self, name, model, scope, killing, faults):
        self.name = name
        self.model = model
        self.scope = scope
        self.killing = killing
        self.faults = faults

    @property
    def suite(self):
        return self.killing.tests


_bundled_cache: dict = {}


def bundled(name: str) -> Bundled:
    """Model, generated killing suite and detected faults (cached per run)."""
    if name not in _bundled_cache:
        from declafl.evaluation import detected_faults
        from declafl.mutation import generate_killing_tests
        from declafl.scope import Scope
        m = load(f"{name}.mdl")
        scope = Scope(4 if name.startswith("farmer") else 3)
        s = Session()
        ks = generate_killing_tests(m, scope, s)
        faults = detected_faults(m, ks.tests, session=s) if not name.startswith("farmer") else None
        _bundled_cache[name] = Bundled(name, m, scope, ks, faults)
    return _bundled_cache[name]
