"""Shared, cached heavy objects for the test suite."""

from __future__ import annotations

from functools import lru_cache

import pytest

from rspr.curvature import CurvatureContext, compute_records, select_classes
from rspr.graph import build_full_graph

ACCEPTANCE_LINES: list[str] = []


@lru_cache(maxsize=None)
def full_graph(n: int):
    return build_full_graph(n)


@lru_cache(maxsize=None)
def context(n: int) -> CurvatureContext:
    return CurvatureContext(full_graph(n))


@lru_cache(maxsize=None)
def classes(n: int, mode: str, per_distance: int = 50, seed: int = 0):
    return tuple(select_classes(full_graph(n), mode, context(n), per_distance=per_distance, seed=seed))


@lru_cache(maxsize=None)
def records(n: int, mode: str, with_ric: bool = False, per_distance: int = 50, seed: int = 0):
    return tuple(compute_records(classes(n, mode, per_distance, seed), context(n), with_ric=with_ric))


@pytest.fixture(scope="session")
def graph4():
    return full_graph(4)


@pytest.fixture(scope="session")
def graph5():
    return full_graph(5)


@pytest.fixture(scope="session")
def graph6():
    return full_graph(6)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
