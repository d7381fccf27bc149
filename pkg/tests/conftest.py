import numpy as np
import pytest

from fastmapd.graph import DirectedGraph, random_strongly_connected

ACCEPTANCE_LINES: list[str] = []


def record(criterion: str, ok: bool | None, detail: str = "") -> bool | None:
    status = "SKIP" if ok is None else "PASS" if ok else "FAIL"
    ACCEPTANCE_LINES.append(f"[{status}] criterion {criterion}: {detail}")
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def two_cycle():
    # a=0, b=1: w(a->b)=1, w(b->a)=3
    return DirectedGraph.from_edges(2, [(0, 1, 1.0), (1, 0, 3.0)])


@pytest.fixture
def three_cycle():
    return DirectedGraph.from_edges(3, [(0, 1, 1.0), (1, 2, 1.0), (2, 0, 1.0)])


def symmetric(n, undirected):
    edges = [(u, v, w) for u, v, w in undirected] + [(v, u, w) for u, v, w in undirected]
    return DirectedGraph.from_edges(n, edges)


@pytest.fixture
def path3():
    return symmetric(3, [(0, 1, 1.0), (1, 2, 1.0)])


def random_graph(seed, n=None, density=3):
    rng = np.random.default_rng(seed)
    n = n or int(rng.integers(2, 61))
    return random_strongly_connected(n, density * n, rng)
