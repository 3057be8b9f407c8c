import os
import sys
from pathlib import Path

import pytest

from lobkit.book import CORES, Book

sys.path.insert(0, os.path.dirname(__file__))

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(params=["python", "compiled"])
def core(request):
    if request.param not in CORES:
        pytest.skip("compiled core not built")
    return request.param


@pytest.fixture
def book(core):
    return Book(core)


@pytest.fixture
def fixtures_dir():
    return FIXTURES


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
