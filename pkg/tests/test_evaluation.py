import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fastmapd.embed import EmbedConfig, embed_average_distances
from fastmapd.evaluation import (CSV_FIELDS, EvalReport, SweepConfig, mean_nrmse, nrmse, nrmse_from_samples,
                                 odot_distance, read_reports_csv, sample_pairs, sweep, write_reports_csv)
from fastmapd.graph import DirectedGraph, GraphError, GridMap, grid_to_directed_graph
from fastmapd.nn import NnTrainConfig
from fastmapd.paths import all_pairs_oracle

from conftest import random_graph, symmetric


def test_odot_example():
    assert odot_distance([0, 0, 1], [3, 4, 2]) == 6
    assert odot_distance([3, 4, 2], [0, 0, 1]) == 4


def test_odot_equal_potentials_is_euclidean():
    assert odot_distance([1, 2, 7], [4, 6, 7]) == 5


def test_odot_errors():
    with pytest.raises(ValueError):
        odot_distance([0, 1], [0, 1, 2])
    with pytest.raises(ValueError):
        odot_distance([0], [1])


@given(st.lists(st.floats(-1e3, 1e3), min_size=4, max_size=4), st.lists(st.floats(-1e3, 1e3), min_size=4, max_size=4))
def test_odot_sum_is_twice_euclidean(a, b):
    a, b = np.array(a), np.array(b)
    euc = np.linalg.norm(b[:-1] - a[:-1])
    assert odot_distance(a, b) + odot_distance(b, a) == pytest.approx(2 * euc, abs=1e-9)


def test_nrmse_formula_examples():
    assert nrmse_from_samples([2.0], [3.0]) == 0.5
    assert nrmse_from_samples([2.0, 2.0], [3.0, 1.0]) == 0.5
    assert nrmse_from_samples([1.0, 4.0], [1.0, 4.0]) == 0


def test_nrmse_degenerate():
    with pytest.raises(ValueError):
        nrmse_from_samples([0.0, 0.0], [1.0, 1.0])


def test_sample_pairs_truth_and_size():
    g = random_graph(5, n=40)
    full = all_pairs_oracle(g)
    p = sample_pairs(g, 50, seed=3)
    assert len(p) == 8 * 7  # smallest S with S(S-1) >= 50
    assert np.all(p.src != p.dst)
    np.testing.assert_allclose(p.dist, full[p.src, p.dst], atol=1e-9)
    assert len(sample_pairs(g, 10**9, 0)) == 40 * 39
    assert len(sample_pairs(g, 1, 0)) == 2


def test_exact_embedding_scores_zero(path3):
    emb = embed_average_distances(path3, EmbedConfig(k_max=2, rng_seed=0))
    assert nrmse(path3, emb, 10, 0) == 0


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10**6), st.floats(-1e4, 1e4))
def test_nrmse_gauge_invariant(seed, shift):
    g = random_graph(seed, n=25)
    emb = embed_average_distances(g, EmbedConfig(k_max=3, rng_seed=seed))
    emb = emb.with_potential(np.random.default_rng(seed).normal(size=g.n))
    a = nrmse(g, emb, 200, seed)
    b = nrmse(g, emb.with_potential(emb.potential + shift), 200, seed)
    assert abs(a - b) < 1e-12


@pytest.fixture(scope="module")
def small_grid():
    return grid_to_directed_graph(GridMap(6, 5, np.ones((5, 6), bool)), "poly")


def test_sweep_cells_and_determinism(small_grid):
    cfg = SweepConfig(ks=(3, 4), degrees=(1, 2), seeds=(1, 2), n_pairs=200,
                      methods=("fastmap", "fastmapd-lasso", "fastmapd-nn", "direct-nn"),
                      nn=NnTrainConfig(hidden=(8,), epochs=2), direct_hidden=(8, 4))
    a = sweep(small_grid.graph, cfg, small_grid.cells, "open6x5", "poly")
    # fastmap: K x seeds, others: K x D x seeds
    assert len(a) == 2 * 2 + 3 * 2 * 2 * 2
    assert {r.method for r in a} == set(cfg.methods)
    assert all(0 <= r.nrmse < np.inf and r.N == 15 * 14 for r in a)
    b = sweep(small_grid.graph, cfg, small_grid.cells, "open6x5", "poly")
    strip = lambda rs: [(r.key(), r.nrmse) for r in rs]
    assert strip(a) == strip(b)


def test_sweep_parallel_matches_serial(small_grid):
    cfg = SweepConfig(ks=(3, 4), seeds=(1, 2), n_pairs=100)
    serial = sweep(small_grid.graph, cfg)
    par = sweep(small_grid.graph, SweepConfig(ks=(3, 4), seeds=(1, 2), n_pairs=100, jobs=3))
    assert [(r.key(), r.nrmse) for r in serial] == [(r.key(), r.nrmse) for r in par]


def test_sweep_symmetric_graph_reports_finite():
    g = symmetric(8, [(i, (i + 1) % 8, 1.0 + i % 3) for i in range(8)])
    reports = sweep(g, SweepConfig(ks=(3,), seeds=(0,), n_pairs=40))
    assert len(reports) == 2 and all(np.isfinite(r.nrmse) for r in reports)


def test_sweep_fastmap_uses_k_euclidean_columns(small_grid):
    g = small_grid.graph
    [rep] = sweep(g, SweepConfig(ks=(4,), seeds=(5,), n_pairs=100, methods=("fastmap",)))
    emb = embed_average_distances(g, EmbedConfig(k_max=5, rng_seed=5))
    assert emb.k == 4
    assert rep.nrmse == nrmse(g, emb, 100, 5)


def test_direct_nn_needs_cells(small_grid):
    with pytest.raises(ValueError):
        sweep(small_grid.graph, SweepConfig(ks=(3,), seeds=(0,), n_pairs=20, methods=("direct-nn",),
                                            nn=NnTrainConfig(hidden=(4,), epochs=1)))


def test_unknown_method():
    with pytest.raises(ValueError):
        SweepConfig(methods=("magic",))


def test_reports_csv_roundtrip(tmp_path):
    reps = [EvalReport("m", "poly", "fastmap", 4, 0, 1, 10, 0.25, 1.0, 0.0, 2.0)]
    write_reports_csv(reps, tmp_path / "r.csv")
    assert (tmp_path / "r.csv").read_text().splitlines()[0] == ",".join(CSV_FIELDS)
    assert read_reports_csv(tmp_path / "r.csv") == reps
    assert mean_nrmse(reps, "fastmap", 4) == 0.25


def test_unreachable_pair_detected():
    g = DirectedGraph.from_edges(3, [(0, 1, 1.0), (1, 2, 1.0)])
    with pytest.raises(GraphError):
        sample_pairs(g, 6, 0)
