from importlib.resources import files

import pytest

from gglab.ball import build_ball
from gglab.presentation import Presentation
from gglab.space import GroupSpace
from gglab.subgroups import fold, load_subgroup

FIXTURES = files("gglab") / "fixtures"


def fixture_path(name: str) -> str:
    return str(FIXTURES / name)


@pytest.fixture(scope="session")
def f2():
    return Presentation.free("ab")


@pytest.fixture(scope="session")
def ball8(f2):
    return build_ball(f2, 8)


@pytest.fixture(scope="session")
def ball10(f2):
    return build_ball(f2, 10)


@pytest.fixture(scope="session")
def space8(ball8):
    return GroupSpace.of(ball8)


@pytest.fixture(scope="session")
def space10(ball10):
    return GroupSpace.of(ball10)


@pytest.fixture(scope="session")
def subs(f2):
    """The four shipped free-group subgroup fixtures, by file stem."""
    return {name: load_subgroup(fixture_path(f"{name}.sub"), f2) for name in ("a", "a2b2", "kernel", "abaB")}


@pytest.fixture(scope="session")
def gens():
    return {"a": ["a"], "a2b2": ["aabb"], "kernel": ["a", "bb", "baB"], "abaB": ["a", "baB"]}


@pytest.fixture(scope="session")
def annulus():
    p = Presentation.load(fixture_path("ex65.txt"))
    return p, load_subgroup(fixture_path("ex65.sub"), p)


@pytest.fixture
def axis_a(f2):
    return fold(["a"], f2.alphabet)


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[n])
