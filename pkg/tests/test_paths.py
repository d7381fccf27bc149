import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fastmapd.graph import DirectedGraph, GraphError, NotStronglyConnectedError, reverse_graph
from fastmapd.paths import all_pairs_oracle, average_distance, sssp

from conftest import random_graph


def test_sssp_two_cycle(two_cycle):
    assert sssp(two_cycle, 0).tolist() == [0, 1]


def test_sssp_three_cycle(three_cycle):
    assert sssp(three_cycle, 0).tolist() == [0, 1, 2]


def test_sssp_invalid_root(two_cycle):
    with pytest.raises(GraphError):
        sssp(two_cycle, 2)


def test_sssp_unreachable_is_inf():
    g = DirectedGraph.from_edges(3, [(0, 1, 1.0)])
    d = sssp(g, 0)
    assert d[1] == 1 and np.isinf(d[2])


def test_zero_weight_edges():
    g = DirectedGraph.from_edges(3, [(0, 1, 0.0), (1, 2, 0.0), (0, 2, 1.0), (2, 0, 0.0)])
    assert sssp(g, 0).tolist() == [0, 0, 0]


def test_parallel_edges_and_self_loops():
    g = DirectedGraph.from_edges(2, [(0, 1, 5.0), (0, 1, 2.0), (0, 0, 7.0), (1, 0, 1.0)])
    assert sssp(g, 0).tolist() == [0, 2]
    assert all_pairs_oracle(g).tolist() == [[0, 2], [1, 0]]


def test_average_distance_examples(two_cycle, three_cycle):
    assert average_distance(two_cycle, 0).tolist() == [0, 2]
    # hand trace: d(a,b)=1 forward, d(b,a)=2 around the cycle
    assert average_distance(three_cycle, 0)[1] == 1.5
    for r in range(3):
        assert average_distance(three_cycle, r)[r] == 0


def test_average_distance_names_unreachable_vertex():
    g = DirectedGraph.from_edges(3, [(0, 1, 1.0), (1, 0, 1.0), (1, 2, 1.0)])
    with pytest.raises(NotStronglyConnectedError) as e:
        average_distance(g, 0)
    assert e.value.vertex == 2


def test_oracle_two_cycle(two_cycle):
    assert all_pairs_oracle(two_cycle).tolist() == [[0, 1], [3, 0]]


def test_oracle_cap():
    with pytest.raises(GraphError):
        all_pairs_oracle(random_graph(0, n=20), cap=10)


def test_oracle_triangle_inequality():
    d = all_pairs_oracle(random_graph(1, n=25))
    assert np.all(d[:, None, :] <= d[:, :, None] + d[None, :, :] + 1e-12)


@pytest.mark.parametrize("seed", range(5))
def test_sssp_matches_oracle_40(seed):
    g = random_graph(seed, n=40)
    full = all_pairs_oracle(g)
    for r in range(g.n):
        np.testing.assert_allclose(sssp(g, r), full[r], rtol=0, atol=1e-9)


def test_sssp_matches_oracle_30():
    g = random_graph(99, n=30)
    full = all_pairs_oracle(g)
    for r in range(g.n):
        np.testing.assert_allclose(sssp(g, r), full[r], rtol=0, atol=1e-9)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10**6))
def test_relaxation_stable(seed):
    g = random_graph(seed)
    r = int(seed % g.n)
    d = sssp(g, r)
    assert d[r] == 0
    assert np.all(d[g.src] + g.weight >= d[g.dst])


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6))
def test_average_distance_symmetric_and_reverse_invariant(seed):
    g = random_graph(seed)
    avg = np.array([average_distance(g, r) for r in range(g.n)])
    # trees may sum the same path in a different order
    np.testing.assert_allclose(avg, avg.T, rtol=0, atol=1e-9)
    rg = reverse_graph(g)
    for r in range(0, g.n, 7):
        np.testing.assert_allclose(average_distance(rg, r), avg[r], rtol=0, atol=1e-9)
