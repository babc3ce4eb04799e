import pytest

from semrobust.graph import CausalGraph
from semrobust.numerics import Instantiation


@pytest.fixture
def chain():
    return CausalGraph(("x", "y", "z"), {("x", "y"), ("y", "z")})


@pytest.fixture
def chain3():
    return CausalGraph(("X1", "X2", "X3"), {("X1", "X2"), ("X2", "X3")})


@pytest.fixture
def bow():
    return CausalGraph(("x", "y"), {("x", "y")}, {("x", "y")})


@pytest.fixture
def chain_inst(chain):
    """b = 0.5, c = 0.4 with error variances giving unit-variance variables."""
    return Instantiation(
        chain,
        {("x", "y"): 0.5, ("y", "z"): 0.4},
        {("x", "x"): 1.0, ("y", "y"): 0.75, ("z", "z"): 0.84},
    )


# -- acceptance summary: one PASS/FAIL line per criterion -----------------------

_criteria: dict[int, tuple[str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): numbered acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when == "teardown" or (rep.when == "setup" and rep.passed):
        return
    n = mark.args[0]
    doc = (item.function.__doc__ or item.name).strip().splitlines()[0]
    _criteria[n] = ("PASS" if rep.passed else "FAIL", doc)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_criteria):
        status, doc = _criteria[n]
        terminalreporter.write_line(f"criterion {n:>2}: {status}  {doc}")
