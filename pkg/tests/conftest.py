import os

import numpy as np
import pytest
from hypothesis import settings

from coarse_ricci import build_space, graph_generator, grid_generator, make_generator

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, text): acceptance criterion covered by a test")


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.failed):
        return
    mark = getattr(report, "criterion", None)
    if mark is not None:
        _CRITERIA[mark[0]] = (mark[1], report.outcome)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    m = item.get_closest_marker("criterion")
    if m is not None:
        rep.criterion = m.args


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        text, outcome = _CRITERIA[n]
        status = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"criterion {n:2d}: {status}  {text}")


@pytest.fixture
def two_point():
    L = make_generator([[-1.0, 1.0], [1.0, -1.0]], "markov-generator")
    S = build_space([[0.0, 1.0], [1.0, 0.0]], points=["a", "b"])
    return L, S


@pytest.fixture
def triangle():
    return graph_generator([("a", "b"), ("b", "c"), ("c", "a")])


@pytest.fixture
def cycle4():
    return graph_generator([("a", "b"), ("b", "c"), ("c", "d"), ("d", "a")])


@pytest.fixture(scope="session")
def small_grid():
    ax = np.linspace(0.0, 1.0, 11)
    return grid_generator([ax, ax])
