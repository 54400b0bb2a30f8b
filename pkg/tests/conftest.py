from __future__ import annotations

import functools
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from halftsp import HalfIntegralTSP, library  # noqa: E402

ACCEPTANCE_LINES: list[str] = []


@functools.lru_cache(maxsize=None)
def lib():
    return library()


@functools.lru_cache(maxsize=None)
def fitted(name: str) -> HalfIntegralTSP:
    return HalfIntegralTSP().fit(lib()[name])


@pytest.fixture(scope="session")
def instances():
    return lib()


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
