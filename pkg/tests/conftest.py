import numpy as np
import pytest

from hirob.io import fixture_path, parse_problem


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def load(name):
    return parse_problem(fixture_path(name))


@pytest.fixture
def exhrob():
    return load("exhrob")


@pytest.fixture
def ex1():
    return load("ex1-nec1")


@pytest.fixture
def ex2():
    return load("ex2-nec1")


@pytest.fixture
def neckkt():
    return load("ex-neckkt")


@pytest.fixture
def disk():
    return load("disk")


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[k][1])
