"""Feed-forward regressor (numpy, manual backprop) used as the alternative
learning module, plus the direct grid-coordinate baseline.

Modes
-----
pair       network sees [p_i, p_j] (2k inputs) and predicts the correction
grid       network sees grid coords [x_i, y_i, x_j, y_j] (baseline)
potential  network is a k-input potential; prediction is f(p_j) - f(p_i)
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .embed import Embedding
from .graph import DirectedGraph
from .paths import to_from_distances

MODES = ("pair", "grid", "potential")


@dataclass
class MlpModel:
    sizes: list[int]
    weights: list[np.ndarray]  # weights[l] has shape (sizes[l+1], sizes[l])
    biases: list[np.ndarray]
    mode: str = "pair"
    # endpoint feature standardisation and target scale, applied outside the net
    in_mean: np.ndarray | None = None
    in_scale: np.ndarray | None = None
    out_scale: float = 1.0

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        for l, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.shape != (self.sizes[l + 1], self.sizes[l]) or b.shape != (self.sizes[l + 1],):
                raise ValueError(f"layer {l} has inconsistent shapes {w.shape}, {b.shape}")

    @classmethod
    def init(cls, sizes, mode: str = "pair", seed: int = 0) -> "MlpModel":
        rng = np.random.default_rng(seed)
        ws = [rng.normal(0.0, np.sqrt(2.0 / fan_in), (fan_out, fan_in))
              for fan_in, fan_out in zip(sizes[:-1], sizes[1:])]
        bs = [np.zeros(s) for s in sizes[1:]]
        return cls(list(sizes), ws, bs, mode)

    @property
    def k(self) -> int:
        """Arity as a potential over embedding coordinates."""
        return self.sizes[0] if self.mode == "potential" else self.sizes[0] // 2

    def params(self) -> list[np.ndarray]:
        return [p for wb in zip(self.weights, self.biases) for p in wb]

    def copy(self) -> "MlpModel":
        return MlpModel(list(self.sizes), [w.copy() for w in self.weights], [b.copy() for b in self.biases],
                        self.mode, None if self.in_mean is None else self.in_mean.copy(),
                        None if self.in_scale is None else self.in_scale.copy(), self.out_scale)

    def _normalise(self, x):
        if self.in_mean is None:
            return x
        return (x - self.in_mean) / self.in_scale

    def __call__(self, x) -> np.ndarray:
        """Potential values for rows of ``x`` (potential mode only)."""
        if self.mode != "potential":
            raise ValueError("only potential-mode networks define a per-vertex potential")
        return mlp_forward(self, self._normalise(np.atleast_2d(x))) * self.out_scale

    def to_json(self) -> dict:
        return {
            "mode": self.mode,
            "sizes": self.sizes,
            "weights": [w.ravel().tolist() for w in self.weights],
            "biases": [b.tolist() for b in self.biases],
            "in_mean": None if self.in_mean is None else self.in_mean.tolist(),
            "in_scale": None if self.in_scale is None else self.in_scale.tolist(),
            "out_scale": self.out_scale,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "MlpModel":
        sizes = obj["sizes"]
        ws = [np.array(w, dtype=float).reshape(o, i) for w, i, o in zip(obj["weights"], sizes[:-1], sizes[1:])]
        bs = [np.array(b, dtype=float) for b in obj["biases"]]
        mean = None if obj.get("in_mean") is None else np.array(obj["in_mean"])
        scale = None if obj.get("in_scale") is None else np.array(obj["in_scale"])
        return cls(sizes, ws, bs, obj["mode"], mean, scale, obj.get("out_scale", 1.0))


def save_mlp(model: MlpModel, path, extra: dict | None = None) -> None:
    obj = model.to_json()
    if extra:
        obj["training"] = extra
    with open(path, "w") as f:
        json.dump(obj, f)


def load_mlp(path) -> MlpModel:
    with open(path) as f:
        return MlpModel.from_json(json.load(f))


# --- forward / backward ----------------------------------------------------

def _forward(model: MlpModel, x):
    acts = [x]
    pre = []
    h = x
    last = len(model.weights) - 1
    for l, (w, b) in enumerate(zip(model.weights, model.biases)):
        z = h @ w.T + b
        pre.append(z)
        h = z if l == last else np.maximum(z, 0.0)
        acts.append(h)
    return acts, pre


def mlp_forward(model: MlpModel, x) -> np.ndarray | float:
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != model.sizes[0]:
        raise ValueError(f"input width {x.shape[-1]} != input layer size {model.sizes[0]}")
    single = x.ndim == 1
    acts, _ = _forward(model, np.atleast_2d(x))
    out = acts[-1][:, 0]
    return float(out[0]) if single else out


def _backward(model: MlpModel, acts, pre, dout):
    """Parameter gradients given d(loss)/d(output) of shape (n,)."""
    grads_w = [None] * len(model.weights)
    grads_b = [None] * len(model.weights)
    delta = dout[:, None]
    for l in range(len(model.weights) - 1, -1, -1):
        grads_w[l] = delta.T @ acts[l]
        grads_b[l] = delta.sum(axis=0)
        if l:
            delta = (delta @ model.weights[l]) * (pre[l - 1] > 0)
    return [g for wb in zip(grads_w, grads_b) for g in wb]


def _split(model: MlpModel, x):
    half = x.shape[1] // 2
    return x[:, :half], x[:, half:]


def loss_and_grads(model: MlpModel, x, y):
    """Mean squared error and its gradient w.r.t. ``model.params()``.

    ``x`` holds raw network inputs: for potential mode, rows are [p_i, p_j].
    """
    y = np.asarray(y, dtype=float)
    n = y.shape[0]
    if model.mode == "potential":
        xi, xj = _split(model, x)
        both = np.vstack([xi, xj])
        acts, pre = _forward(model, both)
        f = acts[-1][:, 0]
        r = f[n:] - f[:n] - y
        dout = np.concatenate([-r, r]) * (2.0 / n)
    else:
        acts, pre = _forward(model, x)
        r = acts[-1][:, 0] - y
        dout = r * (2.0 / n)
    return float(np.mean(r * r)), _backward(model, acts, pre, dout)


def _raw_predict(model: MlpModel, x):
    if model.mode == "potential":
        xi, xj = _split(model, x)
        return mlp_forward(model, xj) - mlp_forward(model, xi)
    return mlp_forward(model, x)


# --- training --------------------------------------------------------------

@dataclass
class NnTrainConfig:
    hidden: tuple[int, ...] = (1000, 500)
    learning_rate: float = 1e-3
    batch_size: int = 256
    epochs: int = 20
    seed: int = 0
    mode: str = "pair"
    optimizer: str = "adam"
    normalize: bool = True

    def __post_init__(self):
        if self.learning_rate < 0 or self.batch_size < 1 or self.epochs < 1:
            raise ValueError("learning rate must be >= 0, batch size and epochs >= 1")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.optimizer not in ("adam", "sgd"):
            raise ValueError("optimizer must be 'adam' or 'sgd'")


@dataclass
class TrainResult:
    model: MlpModel
    losses: list[float] = field(default_factory=list)


def _fit_normalisation(model: MlpModel, x, y):
    half = x.shape[1] // 2
    endpoints = np.vstack([x[:, :half], x[:, half:]])
    mean = endpoints.mean(axis=0)
    scale = endpoints.std(axis=0)
    scale[scale == 0] = 1.0
    if model.mode == "potential":
        model.in_mean, model.in_scale = mean, scale
    else:
        model.in_mean, model.in_scale = np.tile(mean, 2), np.tile(scale, 2)
    model.out_scale = float(np.sqrt(np.mean(y**2))) or 1.0


def _prepare_inputs(model: MlpModel, x):
    """Normalise a [endpoint_i, endpoint_j] batch into raw network inputs."""
    if model.in_mean is None:
        return x
    if model.mode == "potential":
        xi, xj = _split(model, x)
        return np.hstack([model._normalise(xi), model._normalise(xj)])
    return model._normalise(x)


def mlp_train(model: MlpModel, x, y, cfg: NnTrainConfig) -> TrainResult:
    """Minibatch training on MSE. ``x`` rows are concatenated endpoint features."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if y.size == 0:
        raise ValueError("no training data")
    if cfg.mode != model.mode:
        raise ValueError(f"config mode {cfg.mode!r} does not match model mode {model.mode!r}")
    model = model.copy()
    if cfg.normalize:
        _fit_normalisation(model, x, y)
    xs = _prepare_inputs(model, x)
    ys = y / model.out_scale

    rng = np.random.default_rng(cfg.seed)
    params = model.params()
    m1 = [np.zeros_like(p) for p in params]
    m2 = [np.zeros_like(p) for p in params]
    beta1, beta2, eps = 0.9, 0.999, 1e-8
    step = 0
    losses = []
    n = ys.size
    for epoch in range(cfg.epochs):
        order = rng.permutation(n)
        total = 0.0
        for lo in range(0, n, cfg.batch_size):
            idx = order[lo:lo + cfg.batch_size]
            loss, grads = loss_and_grads(model, xs[idx], ys[idx])
            if not np.isfinite(loss):
                raise FloatingPointError(f"non-finite loss at epoch {epoch}, batch starting {lo}")
            total += loss * idx.size
            step += 1
            for p, g, a, v in zip(params, grads, m1, m2):
                if cfg.optimizer == "sgd":
                    p -= cfg.learning_rate * g
                    continue
                a *= beta1
                a += (1 - beta1) * g
                v *= beta2
                v += (1 - beta2) * g * g
                p -= cfg.learning_rate * (a / (1 - beta1**step)) / (np.sqrt(v / (1 - beta2**step)) + eps)
        losses.append(total / n)
    return TrainResult(model, losses)


def predict_correction(model: MlpModel, f_i, f_j) -> np.ndarray:
    """Prediction for pairs given endpoint features (embedding rows or grid coords)."""
    f_i = np.atleast_2d(np.asarray(f_i, dtype=float))
    f_j = np.atleast_2d(np.asarray(f_j, dtype=float))
    expected = model.sizes[0] if model.mode == "potential" else model.sizes[0] // 2
    if f_i.shape[1] != expected or f_j.shape[1] != expected:
        raise ValueError(f"{model.mode} model expects {expected} features per endpoint, got {f_i.shape[1]}")
    x = _prepare_inputs(model, np.hstack([f_i, f_j]))
    return _raw_predict(model, x) * model.out_scale


# --- training data ---------------------------------------------------------

@dataclass
class TreeSamples:
    roots: np.ndarray
    src: np.ndarray
    dst: np.ndarray
    dist: np.ndarray
    avg: np.ndarray

    @property
    def correction(self) -> np.ndarray:
        return self.dist - self.avg

    def __len__(self):
        return self.src.size


def sample_tree_training_data(g: DirectedGraph, emb: Embedding, n_roots: int | None = None,
                              seed: int = 0) -> TreeSamples:
    """All (root, v) pairs from the shortest-path trees of random roots.

    ``n_roots`` defaults to the number of distinct pivot vertices.
    """
    if n_roots is None:
        n_roots = len(emb.pivot_vertices())
    n_roots = max(1, min(n_roots, g.n))
    rng = np.random.default_rng(seed)
    roots = np.sort(rng.choice(g.n, size=n_roots, replace=False))
    src, dst, dist, avg = [], [], [], []
    everyone = np.arange(g.n)
    for r in roots.tolist():
        out, back = to_from_distances(g, r)
        src.append(np.full(g.n, r))
        dst.append(everyone)
        dist.append(out)
        avg.append((out + back) / 2.0)
    return TreeSamples(roots, np.concatenate(src), np.concatenate(dst), np.concatenate(dist), np.concatenate(avg))


def default_sizes(mode: str, k: int, hidden) -> list[int]:
    width = {"pair": 2 * k, "grid": 4, "potential": k}[mode]
    return [width, *hidden, 1]


def train_on_samples(samples: TreeSamples, features: np.ndarray, cfg: NnTrainConfig,
                     target: str = "correction") -> TrainResult:
    """Build and train a fresh model; ``features`` is the per-vertex feature table."""
    y = samples.correction if target == "correction" else samples.dist
    x = np.hstack([features[samples.src], features[samples.dst]])
    k = features.shape[1]
    sizes = [4, *cfg.hidden, 1] if cfg.mode == "grid" else default_sizes(cfg.mode, k, cfg.hidden)
    model = MlpModel.init(sizes, cfg.mode, cfg.seed)
    return mlp_train(model, x, y, cfg)


def config_dict(cfg: NnTrainConfig) -> dict:
    d = asdict(cfg)
    d["hidden"] = list(cfg.hidden)
    return d
