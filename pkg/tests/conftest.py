import numpy as np
import pytest

from abmrc.model import InfluenceKernel


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def ghk16():
    return InfluenceKernel.ghk(1.6)


@pytest.fixture
def const1():
    return InfluenceKernel.constant(1.0)


ACCEPTANCE = {}


def pytest_runtest_logreport(report):
    if report.when == "call" and "test_acceptance.py::test_criterion_" in report.nodeid:
        key = report.nodeid.split("test_criterion_")[1]
        num = int(key.split("_")[0])
        ACCEPTANCE[num] = (key, report.passed)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE):
        key, ok = ACCEPTANCE[num]
        terminalreporter.write_line(f"criterion {num:2d} {'PASS' if ok else 'FAIL'}  {key}")
