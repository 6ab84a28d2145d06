import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from csplab.generators import clique_template, implication_structure, lin3_structure  # noqa: E402
from csplab.templates import TemplateHandle  # noqa: E402


@pytest.fixture(scope="session")
def qorder():
    return TemplateHandle.qorder("E")


@pytest.fixture(scope="session")
def henson():
    return TemplateHandle.henson("E")


@pytest.fixture(scope="session")
def k2():
    return clique_template(2)


@pytest.fixture(scope="session")
def k3():
    return clique_template(3)


@pytest.fixture(scope="session")
def impl():
    return TemplateHandle.finite(implication_structure())


@pytest.fixture(scope="session")
def lin3():
    return TemplateHandle.finite(lin3_structure())


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        ok, line = results[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {line}")
