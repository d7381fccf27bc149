"""Polynomial potential fitted with LASSO to the antisymmetric part of the
directed distances."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from itertools import combinations_with_replacement

import numba
import numpy as np

from .embed import Embedding
from .graph import DirectedGraph
from .paths import to_from_distances

MAX_MONOMIALS = 10**6


def monomial_count(k: int, degree: int) -> int:
    return sum(math.comb(i + k - 1, k - 1) for i in range(degree + 1))


def enumerate_monomials(k: int, degree: int) -> np.ndarray:
    """Exponent table (M, k) in graded-lex order; row 0 is the constant."""
    if k < 1 or degree < 0:
        raise ValueError("need k >= 1 and degree >= 0")
    m = monomial_count(k, degree)
    if m > MAX_MONOMIALS:
        raise ValueError(f"{m} monomials exceeds the limit of {MAX_MONOMIALS}; lower the degree")
    rows = []
    for d in range(degree + 1):
        for combo in combinations_with_replacement(range(k), d):
            e = [0] * k
            for var in combo:
                e[var] += 1
            rows.append(e)
    return np.array(rows, dtype=np.int64).reshape(m, k)


def monomial_features(x: np.ndarray, exponents: np.ndarray) -> np.ndarray:
    """Evaluate every monomial at each row of ``x`` -> (n, M)."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    out = np.ones((x.shape[0], exponents.shape[0]))
    for h, e in enumerate(exponents):
        for var in np.flatnonzero(e):
            out[:, h] *= x[:, var] ** e[var]
    return out


@dataclass
class PolynomialModel:
    k: int
    degree: int
    exponents: np.ndarray
    coefficients: np.ndarray
    lam: float = 0.0
    stats: dict = field(default_factory=dict)

    @classmethod
    def zero(cls, k: int, degree: int = 0) -> "PolynomialModel":
        e = enumerate_monomials(k, degree)
        return cls(k, degree, e, np.zeros(e.shape[0]))

    @property
    def m(self) -> int:
        return self.exponents.shape[0]

    def __call__(self, x) -> np.ndarray:
        return monomial_features(x, self.exponents) @ self.coefficients

    def to_json(self) -> dict:
        return {
            "k": self.k,
            "D": self.degree,
            "monomials": self.exponents.tolist(),
            "coefficients": self.coefficients.tolist(),
            "lambda": self.lam,
            "training": self.stats,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "PolynomialModel":
        e = np.array(obj["monomials"], dtype=np.int64).reshape(-1, obj["k"])
        return cls(obj["k"], obj["D"], e, np.array(obj["coefficients"], dtype=float),
                   obj.get("lambda", 0.0), obj.get("training", {}))


def save_model(model: PolynomialModel, path) -> None:
    with open(path, "w") as f:
        json.dump(model.to_json(), f, indent=2)


def load_model(path) -> PolynomialModel:
    with open(path) as f:
        return PolynomialModel.from_json(json.load(f))


# --- sampling --------------------------------------------------------------

@dataclass
class SamplingPlan:
    s1: np.ndarray
    s2: np.ndarray
    seed: int
    min_samples: int

    @property
    def n_samples(self) -> int:
        return len(self.s1) * len(self.s2)


def build_sampling_plan(emb: Embedding, g: DirectedGraph, m: int, seed: int,
                        min_samples: int | None = None) -> SamplingPlan:
    """S1 = the pivot vertices, S2 = a random subset big enough that |S1||S2| >= M."""
    s1 = np.array(emb.pivot_vertices(), dtype=np.int64)
    if s1.size == 0:
        raise ValueError("embedding has no pivots")
    if min_samples is None:
        min_samples = min(10 * m, g.n * s1.size)
    size2 = min(math.ceil(max(m, min_samples) / s1.size), g.n)
    if s1.size * size2 < m:
        raise ValueError(
            f"only {s1.size * size2} training pairs available but the polynomial has {m} "
            "terms; use a smaller degree or more dimensions"
        )
    rng = np.random.default_rng(seed)
    s2 = np.sort(rng.choice(g.n, size=size2, replace=False))
    return SamplingPlan(s1, s2, seed, min_samples)


@dataclass
class TrainingSet:
    a: np.ndarray
    b: np.ndarray
    pairs: np.ndarray  # (S, 2) rows (v_i, v_j)


def design_rows(p_i: np.ndarray, p_j: np.ndarray, exponents: np.ndarray) -> np.ndarray:
    return monomial_features(p_j, exponents) - monomial_features(p_i, exponents)


def build_training_set(plan: SamplingPlan, emb: Embedding, g: DirectedGraph,
                       exponents: np.ndarray) -> TrainingSet:
    x = emb.euclidean
    feats2 = monomial_features(x[plan.s2], exponents)
    a_blocks, b_blocks, pairs = [], [], []
    for v_i in plan.s1.tolist():
        out, back = to_from_distances(g, v_i)
        d = out[plan.s2]
        d_avg = (out[plan.s2] + back[plan.s2]) / 2.0
        b_blocks.append(d - d_avg)
        a_blocks.append(feats2 - monomial_features(x[v_i], exponents))
        pairs.append(np.stack([np.full(plan.s2.size, v_i), plan.s2], axis=1))
    return TrainingSet(np.vstack(a_blocks), np.concatenate(b_blocks), np.vstack(pairs))


# --- LASSO -----------------------------------------------------------------

@dataclass
class LassoResult:
    coef: np.ndarray
    n_iter: int
    converged: bool
    objective: np.ndarray  # value after each sweep, index 0 = start


def soft_threshold(x, t):
    return np.sign(x) * np.maximum(np.abs(x) - t, 0.0)


@numba.njit(cache=True)
def _cd(gram, q, bb, lam, c, tol, max_iters):
    m = c.shape[0]
    hist = np.empty(max_iters + 1)
    gc = gram @ c

    def obj(c, gc):
        return 0.5 * (c @ gc - 2.0 * (c @ q) + bb) + lam * np.abs(c).sum()

    hist[0] = obj(c, gc)
    it = 0
    converged = False
    while it < max_iters:
        it += 1
        delta = 0.0
        for j in range(m):
            if gram[j, j] <= 0.0:
                if c[j] != 0.0:
                    gc -= gram[:, j] * c[j]
                    c[j] = 0.0
                continue
            rho = q[j] - gc[j] + gram[j, j] * c[j]
            if rho > lam:
                new = (rho - lam) / gram[j, j]
            elif rho < -lam:
                new = (rho + lam) / gram[j, j]
            else:
                new = 0.0
            step = new - c[j]
            if step != 0.0:
                gc += gram[:, j] * step
                c[j] = new
                if abs(step) > delta:
                    delta = abs(step)
        hist[it] = obj(c, gc)
        if delta < tol:
            converged = True
            break
    return c, it, converged, hist[: it + 1]


def lasso_fit(a, b, lam: float, tol: float = 1e-10, max_iters: int = 100_000,
              init=None) -> LassoResult:
    """Minimise ``0.5 * ||a c - b||^2 + lam * ||c||_1`` by cyclic coordinate descent.

    Zero columns get coefficient 0. Stops when the largest coefficient step
    in a sweep falls below ``tol``.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.ndim != 2 or b.shape != (a.shape[0],):
        raise ValueError(f"shape mismatch: A {a.shape}, b {b.shape}")
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise ValueError("A and b must be finite")
    if lam < 0:
        raise ValueError("lambda must be non-negative")
    gram = a.T @ a
    q = a.T @ b
    c0 = np.zeros(a.shape[1]) if init is None else np.array(init, dtype=float)
    c, it, conv, hist = _cd(gram, q, float(b @ b), float(lam), c0, float(tol), int(max_iters))
    return LassoResult(c, int(it), bool(conv), hist)


# --- pipeline --------------------------------------------------------------

def fit_potential(g: DirectedGraph, emb: Embedding, degree: int = 2, lam: float = 1e-3,
                  seed: int = 0, min_samples: int | None = None, tol: float = 1e-10,
                  max_iters: int = 100_000) -> PolynomialModel:
    """Sample, standardise, solve, and map coefficients back to raw coordinates.

    Columns are scaled to unit root-mean-square and ``b`` likewise, so
    ``lam`` is relative to a unit-scale problem.
    """
    exponents = enumerate_monomials(emb.k, degree)
    m = exponents.shape[0]
    plan = build_sampling_plan(emb, g, m, seed, min_samples)
    ts = build_training_set(plan, emb, g, exponents)
    col_scale = np.sqrt(np.mean(ts.a**2, axis=0))
    col_scale[col_scale == 0] = 1.0
    b_scale = float(np.sqrt(np.mean(ts.b**2))) or 1.0
    res = lasso_fit(ts.a / col_scale, ts.b / b_scale, lam, tol, max_iters)
    coef = res.coef / col_scale * b_scale
    resid = ts.a @ coef - ts.b
    stats = {
        "M": m,
        "n_samples": int(ts.b.size),
        "s1": len(plan.s1),
        "s2": len(plan.s2),
        "seed": seed,
        "iterations": res.n_iter,
        "converged": res.converged,
        "train_rmse": float(np.sqrt(np.mean(resid**2))),
        "nonzero": int(np.count_nonzero(coef)),
    }
    return PolynomialModel(emb.k, degree, exponents, coef, lam, stats)


def assign_last_coordinate(emb: Embedding, model) -> Embedding:
    """Write ``model(first k coords)`` into the potential column.

    ``model`` is any callable on (n, k) arrays with a ``k`` attribute.
    """
    if model.k != emb.k:
        raise ValueError(f"model arity {model.k} does not match embedding dimension {emb.k}")
    return emb.with_potential(model(emb.euclidean))
