"""Shared instance generators for the test suite."""

import numpy as np
import pytest

from subproj import CardinalityFunction, permutahedron, substream


def random_concave_g(n: int, rng: np.random.Generator, integral: bool = False):
    """Random nondecreasing concave g with g(0)=0 (valid cardinality spec)."""
    if integral:
        incs = np.sort(rng.integers(0, 2 * n + 1, n))[::-1]
    else:
        incs = np.sort(rng.uniform(0.0, 2.0, n))[::-1]
    return [0.0] + list(np.cumsum(incs.astype(float)))


def random_cardinality(n: int, rng: np.random.Generator, integral: bool = False):
    return CardinalityFunction(random_concave_g(n, rng, integral))


def gaussian_point(n: int, rng: np.random.Generator, scale: float = None):
    return rng.normal(0.0, n if scale is None else scale, n)


@pytest.fixture
def rng():
    return substream(20260823, "tests")


# one pass/fail line per acceptance criterion, echoed after the test summary
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


__all__ = ["random_concave_g", "random_cardinality", "gaussian_point", "permutahedron"]
