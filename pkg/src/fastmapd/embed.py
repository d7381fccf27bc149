"""Euclidean embedding of to-and-fro average distances by iterative pivot
projection (the FastMap phase), with the clamping / reassignment /
unit-fallback enhancements switchable as a group."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .graph import DirectedGraph, GraphError, require_strongly_connected
from .paths import average_distance


@dataclass(frozen=True)
class EmbedConfig:
    k_max: int = 8
    epsilon: float = 1e-4
    pivot_iters: int = 10
    rng_seed: int = 0
    enhancements: bool = True

    def __post_init__(self):
        if self.k_max < 2:
            raise ValueError("k_max must be >= 2")
        if self.epsilon < 0:
            raise ValueError("epsilon must be >= 0")
        if self.pivot_iters < 1:
            raise ValueError("pivot_iters must be >= 1")


@dataclass
class Embedding:
    """``coords`` is (n, k+1); the last column holds the potential (0 until learned)."""

    k: int
    coords: np.ndarray
    pivots: list[tuple[int, int]]
    config: EmbedConfig
    clamp_count: int = 0
    reassign_count: int = 0
    fallback_iters: list[int] = field(default_factory=list)
    pivot_residuals: list[float] = field(default_factory=list)

    @property
    def n(self) -> int:
        return self.coords.shape[0]

    @property
    def euclidean(self) -> np.ndarray:
        return self.coords[:, : self.k]

    @property
    def potential(self) -> np.ndarray:
        return self.coords[:, self.k]

    def pivot_vertices(self) -> list[int]:
        seen = dict.fromkeys(v for pair in self.pivots for v in pair)
        return list(seen)

    def with_potential(self, values) -> "Embedding":
        coords = self.coords.copy()
        coords[:, self.k] = values
        return Embedding(self.k, coords, list(self.pivots), self.config, self.clamp_count,
                         self.reassign_count, list(self.fallback_iters), list(self.pivot_residuals))

    def truncated(self, k: int) -> "Embedding":
        """First ``k`` Euclidean columns with a fresh zero potential column."""
        if not 1 <= k <= self.k:
            raise ValueError(f"cannot truncate a {self.k}-column embedding to {k}")
        coords = np.zeros((self.n, k + 1))
        coords[:, :k] = self.coords[:, :k]
        return Embedding(k, coords, self.pivots[:k], self.config)


class _AverageDistances:
    """Memo of average_distance per root; roots recur across pivot rounds."""

    def __init__(self, g: DirectedGraph, capacity: int = 64):
        self.g = g
        self.capacity = capacity
        self.cache: dict[int, np.ndarray] = {}
        self.calls = 0

    def __call__(self, root: int) -> np.ndarray:
        hit = self.cache.get(root)
        if hit is None:
            self.calls += 1
            hit = average_distance(self.g, root)
            if len(self.cache) >= self.capacity:
                self.cache.pop(next(iter(self.cache)))
            self.cache[root] = hit
        return hit


def residual_sq(d, p_i, p_j, k: int, clamp: bool = True):
    """Squared distance left over after the first ``k - 1`` coordinates.

    ``d`` and ``p_j`` may be arrays over vertices (``p_j`` of shape (n, >=k-1));
    ``p_i`` is a single coordinate row.
    """
    d = np.asarray(d, dtype=float)
    p_i = np.asarray(p_i, dtype=float)
    p_j = np.asarray(p_j, dtype=float)
    diff = p_j[..., : k - 1] - p_i[..., : k - 1]
    r = d * d - np.sum(diff * diff, axis=-1)
    return np.maximum(r, 0.0) if clamp else r


def _residuals_from(avg, coords, root, k, clamp):
    return residual_sq(avg(root), coords[root], coords, k, clamp)


def choose_farthest_pair(g: DirectedGraph, coords: np.ndarray, k: int, cfg: EmbedConfig,
                         rng: np.random.Generator, avg=None, stats: dict | None = None):
    """Heuristic farthest pair w.r.t. residual distances in iteration ``k`` (1-based)."""
    n = g.n
    if n < 2:
        raise GraphError("need at least two vertices to choose a pivot pair")
    avg = avg or _AverageDistances(g)
    clamp = cfg.enhancements
    v_a = int(rng.integers(n))
    v_b = v_a
    best, best_res = None, -np.inf
    rounds = retries = 0
    while rounds < cfg.pivot_iters:
        rounds += 1
        res = _residuals_from(avg, coords, v_a, k, clamp)
        v_c = int(np.argmax(res))  # ties -> lowest id
        if v_c != v_b:
            v_b, v_a = v_a, v_c
            continue
        if v_a != v_b and res[v_b] > best_res:
            best, best_res = (v_a, v_b), float(res[v_b])
        if not cfg.enhancements or res[v_b] >= cfg.epsilon:
            break
        if retries >= n:
            v_a, v_b = best if best is not None else (v_a, v_b)
            break
        # degenerate pair: restart from a random pair
        retries += 1
        rounds = 0
        v_a, v_b = (int(x) for x in rng.choice(n, size=2, replace=False))
    if v_a == v_b:
        # only reachable when every residual is 0 and the start already maximises
        v_b = int(rng.choice(np.delete(np.arange(n), v_a)))
    if stats is not None:
        stats["reassign"] = stats.get("reassign", 0) + retries
    return v_a, v_b


def compute_coordinate_column(g: DirectedGraph, coords: np.ndarray, k: int, pair, cfg: EmbedConfig,
                              avg=None, stats: dict | None = None) -> float | None:
    """Fill column ``k - 1`` of ``coords`` in place.

    Returns the d'_ab actually used, or None when the iteration terminates
    (residual below epsilon with enhancements off).
    """
    avg = avg or _AverageDistances(g)
    v_a, v_b = pair
    clamp = cfg.enhancements
    ra = _residuals_from(avg, coords, v_a, k, clamp=False)
    rb = _residuals_from(avg, coords, v_b, k, clamp=False)
    d_ab = ra[v_b]
    fallback = False
    if d_ab < cfg.epsilon:
        if not cfg.enhancements:
            return None
        d_ab, fallback = 1.0, True
    if clamp:
        if stats is not None:
            stats["clamp"] = stats.get("clamp", 0) + int(np.count_nonzero(ra < 0) + np.count_nonzero(rb < 0))
        ra = np.maximum(ra, 0.0)
        rb = np.maximum(rb, 0.0)
    col = (ra + d_ab - rb) / (2.0 * np.sqrt(d_ab))
    if not fallback:
        # exact pivot values; the formula can be off by an ulp
        col[v_a] = 0.0
        col[v_b] = np.sqrt(d_ab)
    coords[:, k - 1] = col
    if stats is not None and fallback:
        stats.setdefault("fallback", []).append(k)
    return float(d_ab)


def embed_average_distances(g: DirectedGraph, cfg: EmbedConfig = EmbedConfig()) -> Embedding:
    require_strongly_connected(g)
    rng = np.random.default_rng(cfg.rng_seed)
    avg = _AverageDistances(g, capacity=max(64, 2 * cfg.pivot_iters))
    coords = np.zeros((g.n, cfg.k_max))
    pivots, residuals, stats = [], [], {}
    k_done = 0
    for k in range(1, cfg.k_max):
        if g.n < 2:
            break
        pair = choose_farthest_pair(g, coords, k, cfg, rng, avg, stats)
        d_ab = compute_coordinate_column(g, coords, k, pair, cfg, avg, stats)
        if d_ab is None:
            break
        pivots.append(pair)
        residuals.append(d_ab)
        k_done = k
    out = np.zeros((g.n, k_done + 1))
    out[:, :k_done] = coords[:, :k_done]
    return Embedding(k_done, out, pivots, cfg, stats.get("clamp", 0), stats.get("reassign", 0),
                     stats.get("fallback", []), residuals)


# --- serialization ---------------------------------------------------------

def save_embedding(emb: Embedding, csv_path, json_path=None) -> None:
    with open(csv_path, "w") as f:
        f.write("vertex," + ",".join(f"c{i + 1}" for i in range(emb.k + 1)) + "\n")
        for i, row in enumerate(emb.coords.tolist()):
            f.write(f"{i}," + ",".join(repr(x) for x in row) + "\n")
    json_path = json_path or f"{csv_path}.json"
    meta = {
        "k": emb.k,
        "pivots": [list(p) for p in emb.pivots],
        "seed": emb.config.rng_seed,
        "config": asdict(emb.config),
        "clamp_count": emb.clamp_count,
        "reassign_count": emb.reassign_count,
        "fallback_iters": emb.fallback_iters,
        "pivot_residuals": emb.pivot_residuals,
    }
    with open(json_path, "w") as f:
        json.dump(meta, f, indent=2)


def load_embedding(csv_path, json_path=None) -> Embedding:
    json_path = json_path or f"{csv_path}.json"
    with open(json_path) as f:
        meta = json.load(f)
    data = np.loadtxt(csv_path, delimiter=",", skiprows=1, ndmin=2)
    coords = data[np.argsort(data[:, 0]), 1:]
    if coords.shape[1] != meta["k"] + 1:
        raise ValueError(f"{csv_path}: expected {meta['k'] + 1} coordinate columns, found {coords.shape[1]}")
    return Embedding(meta["k"], coords, [tuple(p) for p in meta["pivots"]], EmbedConfig(**meta["config"]),
                     meta.get("clamp_count", 0), meta.get("reassign_count", 0),
                     meta.get("fallback_iters", []), meta.get("pivot_residuals", []))
