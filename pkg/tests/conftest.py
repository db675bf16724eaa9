import numpy as np
import pytest

from ctmpfit.graph import Graph, generate_path

ACCEPTANCE_REPORT = []


def report(criterion, ok, detail=""):
    ACCEPTANCE_REPORT.append((criterion, bool(ok), detail))


@pytest.fixture
def path3():
    return generate_path(3)


@pytest.fixture
def single():
    return Graph(1, ())


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_REPORT:
        return
    terminalreporter.section("acceptance criteria")
    for criterion, ok, detail in ACCEPTANCE_REPORT:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {criterion}  {detail}")
