import numpy as np
import pytest

from drd.core import make_instance


def overlap_instance(weights=(1, 1, 1)):
    """Two overlapping regions: h0 left only, h1 in both, h2 right only."""
    return make_instance(list(weights), [[0, 0], [1, 0], [1, 1]], [[0, 1], [1, 2]])


def orthogonal_instance():
    """Four uniform hypotheses in singleton regions, two binary tests splitting 2/2."""
    return make_instance([1, 1, 1, 1], [[0, 0], [0, 1], [1, 0], [1, 1]], [[0], [1], [2], [3]])


def all_shared_instance(n=5, tests=3, regions=2, seed=0):
    rng = np.random.default_rng(seed)
    out = rng.integers(0, 2, size=(n, tests))
    return make_instance([1] * n, out, [list(range(n))] * regions)


@pytest.fixture
def overlap():
    return overlap_instance()


@pytest.fixture
def orthogonal():
    return orthogonal_instance()


# one line per acceptance criterion, printed after the test run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
