"""Distance estimates, NRMSE, and the method/K/D sweep harness."""
from __future__ import annotations

import csv
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .embed import EmbedConfig, Embedding, embed_average_distances
from .graph import DirectedGraph, GraphError
from .nn import NnTrainConfig, predict_correction, sample_tree_training_data, train_on_samples
from .paths import sssp
from .potential import assign_last_coordinate, fit_potential

METHODS = ("fastmap", "fastmapd-lasso", "fastmapd-nn", "direct-nn")
CSV_FIELDS = ["map", "heights", "method", "K", "D", "seed", "N", "nrmse", "embed_ms", "fit_ms", "eval_ms"]
DEFAULT_PAIRS = 100_000


def odot_distance(p_i, p_j) -> np.ndarray | float:
    """Euclidean distance over all but the last entry plus the signed
    difference of the last entries. Works row-wise on 2-d input."""
    p_i = np.asarray(p_i, dtype=float)
    p_j = np.asarray(p_j, dtype=float)
    if p_i.shape != p_j.shape:
        raise ValueError(f"length mismatch: {p_i.shape} vs {p_j.shape}")
    if p_i.shape[-1] < 2:
        raise ValueError("points need at least 2 entries")
    diff = p_j[..., :-1] - p_i[..., :-1]
    return np.sqrt(np.sum(diff * diff, axis=-1)) + (p_j[..., -1] - p_i[..., -1])


def nrmse_from_samples(true, est) -> float:
    true = np.asarray(true, dtype=float)
    est = np.asarray(est, dtype=float)
    mean = true.mean()
    if mean == 0:
        raise ValueError("mean true distance is zero; NRMSE undefined")
    return float(np.sqrt(np.mean((true - est) ** 2)) / mean)


@dataclass
class PairSample:
    src: np.ndarray
    dst: np.ndarray
    dist: np.ndarray

    def __len__(self):
        return self.src.size


def sample_pairs(g: DirectedGraph, n_pairs: int = DEFAULT_PAIRS, seed: int = 0) -> PairSample:
    """All ordered pairs among S random vertices, S the smallest with S(S-1) >= n_pairs.

    One shortest-path tree per sampled source; S is capped at |V|.
    """
    if n_pairs < 1:
        raise ValueError("need at least one pair")
    if g.n < 2:
        raise GraphError("need at least two vertices to sample pairs")
    s = min(g.n, max(2, math.ceil((1 + math.sqrt(1 + 4 * n_pairs)) / 2)))
    rng = np.random.default_rng(seed)
    verts = np.sort(rng.choice(g.n, size=s, replace=False))
    src, dst, dist = [], [], []
    for v in verts.tolist():
        d = sssp(g, v)
        others = verts[verts != v]
        src.append(np.full(others.size, v))
        dst.append(others)
        dist.append(d[others])
    out = PairSample(np.concatenate(src), np.concatenate(dst), np.concatenate(dist))
    if not np.all(np.isfinite(out.dist)):
        raise GraphError("sampled pair is unreachable; graph not strongly connected")
    return out


def embedding_estimates(emb: Embedding, src, dst) -> np.ndarray:
    return odot_distance(emb.coords[src], emb.coords[dst])


def nrmse(g: DirectedGraph, emb: Embedding, n_pairs: int = DEFAULT_PAIRS, seed: int = 0,
          pairs: PairSample | None = None, estimator=None) -> float:
    """NRMSE of ⊙-distances (or of ``estimator(src, dst)``) against true distances."""
    pairs = pairs or sample_pairs(g, n_pairs, seed)
    est = estimator(pairs.src, pairs.dst) if estimator else embedding_estimates(emb, pairs.src, pairs.dst)
    return nrmse_from_samples(pairs.dist, est)


# --- sweep -----------------------------------------------------------------

@dataclass
class EvalReport:
    map: str
    heights: str
    method: str
    K: int
    D: int
    seed: int
    N: int
    nrmse: float
    embed_ms: float = 0.0
    fit_ms: float = 0.0
    eval_ms: float = 0.0

    def key(self):
        return (self.method, self.K, self.D, self.seed)


@dataclass
class SweepConfig:
    ks: tuple[int, ...] = (4, 8, 16)
    degrees: tuple[int, ...] = (2,)
    seeds: tuple[int, ...] = (1, 2, 3)
    methods: tuple[str, ...] = ("fastmap", "fastmapd-lasso")
    n_pairs: int = DEFAULT_PAIRS
    lam: float = 1e-3
    epsilon: float = 1e-4
    pivot_iters: int = 10
    min_samples: int | None = None
    nn: NnTrainConfig = field(default_factory=lambda: NnTrainConfig(hidden=(64, 32), epochs=10))
    direct_hidden: tuple[int, ...] = (64, 32, 16, 16)
    jobs: int = 1

    def __post_init__(self):
        unknown = set(self.methods) - set(METHODS)
        if unknown:
            raise ValueError(f"unknown methods {sorted(unknown)}; choose from {METHODS}")
        if min(self.ks) < 2:
            raise ValueError("every K must be >= 2")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["nn"]["hidden"] = list(self.nn.hidden)
        return d


def _ms(t0):
    return (time.perf_counter() - t0) * 1000.0


class _EmbeddingCache:
    def __init__(self, g, cfg: SweepConfig):
        self.g, self.cfg, self.store = g, cfg, {}

    def get(self, k_max, seed):
        key = (k_max, seed)
        if key not in self.store:
            t0 = time.perf_counter()
            ec = EmbedConfig(k_max=k_max, epsilon=self.cfg.epsilon, pivot_iters=self.cfg.pivot_iters, rng_seed=seed)
            self.store[key] = (embed_average_distances(self.g, ec), _ms(t0))
        return self.store[key]


def _run_cell(g, method, K, D, seed, cfg: SweepConfig, pairs: PairSample, embs: _EmbeddingCache,
              cells, map_name, heights):
    fit_ms = 0.0
    if method == "fastmap":
        # K Euclidean columns, zero potential
        emb, embed_ms = embs.get(K + 1, seed)
        estimate = lambda s, t: embedding_estimates(emb, s, t)
    else:
        emb, embed_ms = embs.get(K, seed)
        t0 = time.perf_counter()
        if method == "fastmapd-lasso":
            model = fit_potential(g, emb, D, cfg.lam, seed, cfg.min_samples)
            fitted = assign_last_coordinate(emb, model)
            estimate = lambda s, t: embedding_estimates(fitted, s, t)
        else:
            samples = sample_tree_training_data(g, emb, seed=seed)
            if method == "fastmapd-nn":
                nn_cfg = replace(cfg.nn, seed=seed, mode="pair")
                net = train_on_samples(samples, emb.euclidean, nn_cfg).model
                x = emb.euclidean

                def estimate(s, t):
                    diff = x[t] - x[s]
                    return np.sqrt(np.sum(diff * diff, axis=1)) + predict_correction(net, x[s], x[t])
            else:
                if cells is None:
                    raise ValueError("direct-nn needs grid coordinates for every vertex")
                nn_cfg = replace(cfg.nn, seed=seed, mode="grid", hidden=cfg.direct_hidden)
                feats = np.asarray(cells, dtype=float)
                net = train_on_samples(samples, feats, nn_cfg, target="distance").model
                estimate = lambda s, t: predict_correction(net, feats[s], feats[t])
        fit_ms = _ms(t0)
    t0 = time.perf_counter()
    value = nrmse_from_samples(pairs.dist, estimate(pairs.src, pairs.dst))
    eval_ms = _ms(t0)
    d_report = 0 if method == "fastmap" else D
    return EvalReport(map_name, heights, method, K, d_report, seed, len(pairs), value, embed_ms, fit_ms, eval_ms)


def sweep(g: DirectedGraph, cfg: SweepConfig = SweepConfig(), cells=None, map_name: str = "graph",
          heights: str = "") -> list[EvalReport]:
    """One report per (method, K, D, seed); FastMap ignores D and is reported once with D=0.

    Every method for a given seed is scored on the same sampled pairs.
    """
    embs = _EmbeddingCache(g, cfg)
    jobs = []
    for seed in cfg.seeds:
        for K in cfg.ks:
            for method in cfg.methods:
                for D in ((0,) if method == "fastmap" else cfg.degrees):
                    jobs.append((method, K, D, seed))
    pair_sets = {seed: sample_pairs(g, cfg.n_pairs, seed) for seed in cfg.seeds}

    def run(job):
        method, K, D, seed = job
        return _run_cell(g, method, K, D, seed, cfg, pair_sets[seed], embs, cells, map_name, heights)

    if cfg.jobs > 1:
        # embeddings first, so concurrent cells do not race on the cache
        for seed in cfg.seeds:
            for K in cfg.ks:
                embs.get(K, seed)
                if "fastmap" in cfg.methods:
                    embs.get(K + 1, seed)
        with ThreadPoolExecutor(cfg.jobs) as ex:
            reports = list(ex.map(run, jobs))
    else:
        reports = [run(j) for j in jobs]
    return sorted(reports, key=EvalReport.key)


def write_reports_csv(reports, path) -> None:
    with open(path, "w", newline="") as f:
        w = csv.DictWriter(f, fieldnames=CSV_FIELDS)
        w.writeheader()
        for r in reports:
            row = asdict(r)
            row["nrmse"] = repr(r.nrmse)
            for key in ("embed_ms", "fit_ms", "eval_ms"):
                row[key] = f"{row[key]:.1f}"
            w.writerow(row)


def read_reports_csv(path) -> list[EvalReport]:
    out = []
    with open(path, newline="") as f:
        for row in csv.DictReader(f):
            out.append(EvalReport(row["map"], row["heights"], row["method"], int(row["K"]), int(row["D"]),
                                  int(row["seed"]), int(row["N"]), float(row["nrmse"]),
                                  float(row["embed_ms"]), float(row["fit_ms"]), float(row["eval_ms"])))
    return out


def mean_nrmse(reports, method, K, D=None) -> float:
    vals = [r.nrmse for r in reports if r.method == method and r.K == K and (D is None or r.D == D)]
    if not vals:
        raise KeyError(f"no reports for {method} K={K} D={D}")
    return float(np.mean(vals))
