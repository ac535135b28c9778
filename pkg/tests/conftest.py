from fractions import Fraction
from pathlib import Path

import pytest
from hypothesis import settings

from hopfreal.diffops import System

DATA = Path(__file__).parent / "data"

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


def linear_system():
    """x' = u x, f = x, x(0) = 1."""
    return System.from_strings([["x1"]], "x1", [1])


def bilinear_system():
    """x1' = u1 x2, x2' = u2 x1, f = x1, x(0) = (1, 0)."""
    return System.from_strings([["x2", "0"], ["0", "x1"]], "x1", [1, 0])


def quadratic_system():
    return System.from_strings([["x2", "x1^2"], ["x1*x2", "1"]], "x1 + x2^2", [1, Fraction(1, 2)])


SYSTEMS = {"linear": linear_system, "bilinear": bilinear_system, "quadratic": quadratic_system}


@pytest.fixture(params=sorted(SYSTEMS))
def named_system(request):
    return request.param, SYSTEMS[request.param]()


@pytest.fixture
def data_dir():
    return DATA


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is None or not getattr(mod, "RESULTS", None):
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.summary_lines():
        terminalreporter.write_line(line)
