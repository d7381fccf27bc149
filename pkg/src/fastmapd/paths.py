"""Single-source shortest paths, to-and-fro average distances, and a
Floyd-Warshall oracle for testing."""
from __future__ import annotations

import heapq

import numba
import numpy as np

from .graph import DirectedGraph, GraphError, NotStronglyConnectedError

ORACLE_CAP = 512

UNREACHABLE = np.inf


@numba.njit(cache=True, nogil=True)
def _dijkstra(indptr, targets, weights, root):
    n = indptr.shape[0] - 1
    dist = np.full(n, np.inf)
    done = np.zeros(n, dtype=np.bool_)
    dist[root] = 0.0
    heap = [(0.0, np.int64(root))]
    while heap:
        d, u = heapq.heappop(heap)
        if done[u]:
            continue  # stale entry
        done[u] = True
        for e in range(indptr[u], indptr[u + 1]):
            v = targets[e]
            nd = d + weights[e]
            if nd < dist[v]:
                dist[v] = nd
                heapq.heappush(heap, (nd, np.int64(v)))
    return dist


def sssp(g: DirectedGraph, root: int) -> np.ndarray:
    """Distances d_G(root, v) for every v; unreachable vertices are ``inf``."""
    if not 0 <= root < g.n:
        raise GraphError(f"root {root} out of range [0, {g.n})")
    indptr, targets, weights = g.csr
    return _dijkstra(indptr, targets, weights, np.int64(root))


def to_from_distances(g: DirectedGraph, root: int) -> tuple[np.ndarray, np.ndarray]:
    """(d_G(root, v), d_G(v, root)) for all v, one tree on g and one on its reverse."""
    out = sssp(g, root)
    back = sssp(g.reversed, root)
    bad = ~(np.isfinite(out) & np.isfinite(back))
    if bad.any():
        raise NotStronglyConnectedError(int(np.flatnonzero(bad)[0]), root)
    return out, back


def average_distance(g: DirectedGraph, root: int) -> np.ndarray:
    out, back = to_from_distances(g, root)
    return (out + back) / 2.0


def all_pairs_oracle(g: DirectedGraph, cap: int = ORACLE_CAP) -> np.ndarray:
    if g.n > cap:
        raise GraphError(f"all-pairs oracle limited to {cap} vertices, graph has {g.n}")
    d = np.full((g.n, g.n), np.inf)
    # parallel edges: keep the lightest
    np.minimum.at(d, (g.src, g.dst), g.weight)
    np.fill_diagonal(d, 0.0)
    for k in range(g.n):
        np.minimum(d, d[:, k:k + 1] + d[k:k + 1, :], out=d)
    return d
