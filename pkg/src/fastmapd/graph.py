"""Directed graphs, MovingAI grid maps and height-based weight synthesis."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np


class GraphError(ValueError):
    pass


class MapParseError(ValueError):
    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


class NotStronglyConnectedError(GraphError):
    def __init__(self, vertex: int, root: int):
        super().__init__(
            f"graph not strongly connected: vertex {vertex} is unreachable to/from vertex {root}"
        )
        self.vertex = vertex
        self.root = root


@dataclass(frozen=True, eq=False)
class DirectedGraph:
    """Weighted digraph stored as parallel edge arrays plus a CSR out-index.

    Vertices are ``0..n-1``. Arrays are made read-only at construction.
    """

    n: int
    src: np.ndarray
    dst: np.ndarray
    weight: np.ndarray

    def __post_init__(self):
        src = np.ascontiguousarray(self.src, dtype=np.int64)
        dst = np.ascontiguousarray(self.dst, dtype=np.int64)
        w = np.ascontiguousarray(self.weight, dtype=np.float64)
        if self.n < 1:
            raise GraphError("graph needs at least one vertex")
        if not (src.shape == dst.shape == w.shape) or src.ndim != 1:
            raise GraphError("edge arrays must be 1-d and of equal length")
        if src.size:
            if src.min() < 0 or dst.min() < 0 or src.max() >= self.n or dst.max() >= self.n:
                raise GraphError(f"vertex id out of range [0, {self.n})")
            if not np.all(np.isfinite(w)) or w.min() < 0:
                raise GraphError("edge weights must be finite and non-negative")
        for a in (src, dst, w):
            a.setflags(write=False)
        object.__setattr__(self, "src", src)
        object.__setattr__(self, "dst", dst)
        object.__setattr__(self, "weight", w)

    @classmethod
    def from_edges(cls, n: int, edges) -> "DirectedGraph":
        edges = list(edges)
        if not edges:
            return cls(n, np.empty(0, np.int64), np.empty(0, np.int64), np.empty(0))
        s, d, w = zip(*edges)
        return cls(n, np.array(s), np.array(d), np.array(w, dtype=float))

    @property
    def edge_count(self) -> int:
        return int(self.src.size)

    def edges(self) -> list[tuple[int, int, float]]:
        return list(zip(self.src.tolist(), self.dst.tolist(), self.weight.tolist()))

    @cached_property
    def csr(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(indptr, targets, weights) ordered by source, stable in edge order."""
        order = np.argsort(self.src, kind="stable")
        indptr = np.zeros(self.n + 1, dtype=np.int64)
        np.cumsum(np.bincount(self.src, minlength=self.n), out=indptr[1:])
        return indptr, self.dst[order].copy(), self.weight[order].copy()

    def neighbors(self, u: int):
        indptr, tgt, w = self.csr
        lo, hi = indptr[u], indptr[u + 1]
        return zip(tgt[lo:hi].tolist(), w[lo:hi].tolist())

    @cached_property
    def reversed(self) -> "DirectedGraph":
        return DirectedGraph(self.n, self.dst, self.src, self.weight)


def reverse_graph(g: DirectedGraph) -> DirectedGraph:
    return DirectedGraph(g.n, g.dst, g.src, g.weight)


def _reachable(g: DirectedGraph, root: int) -> np.ndarray:
    indptr, tgt, _ = g.csr
    seen = np.zeros(g.n, dtype=bool)
    seen[root] = True
    queue = deque([root])
    while queue:
        u = queue.popleft()
        for v in tgt[indptr[u]:indptr[u + 1]].tolist():
            if not seen[v]:
                seen[v] = True
                queue.append(v)
    return seen


def unreachable_vertex(g: DirectedGraph, root: int = 0) -> int | None:
    """First vertex not mutually reachable with ``root``, or None."""
    both = _reachable(g, root) & _reachable(g.reversed, root)
    missing = np.flatnonzero(~both)
    return int(missing[0]) if missing.size else None


def is_strongly_connected(g: DirectedGraph) -> bool:
    return unreachable_vertex(g, 0) is None


def require_strongly_connected(g: DirectedGraph) -> None:
    v = unreachable_vertex(g, 0)
    if v is not None:
        raise NotStronglyConnectedError(v, 0)


# --- grid maps -------------------------------------------------------------

PASSABLE = frozenset(".GS")
BLOCKED = frozenset("@OTW")


@dataclass(frozen=True, eq=False)
class GridMap:
    width: int
    height: int
    passable: np.ndarray  # (height, width) bool, row y / column x

    def __post_init__(self):
        p = np.asarray(self.passable, dtype=bool)
        if p.shape != (self.height, self.width):
            raise ValueError(f"passable mask shape {p.shape} != {(self.height, self.width)}")
        p = p.copy()
        p.setflags(write=False)
        object.__setattr__(self, "passable", p)

    @property
    def n_passable(self) -> int:
        return int(self.passable.sum())

    def to_text(self) -> str:
        rows = ["".join("." if c else "@" for c in row) for row in self.passable]
        return f"type octile\nheight {self.height}\nwidth {self.width}\nmap\n" + "\n".join(rows) + "\n"


def load_movingai_map(text: str) -> GridMap:
    lines = text.splitlines()
    header: dict[str, str] = {}
    i = 0
    while i < len(lines):
        line = lines[i].strip()
        i += 1
        if not line:
            continue
        if line.lower() == "map":
            break
        parts = line.split()
        if len(parts) != 2 or parts[0].lower() not in ("type", "height", "width"):
            raise MapParseError(f"malformed header entry {line!r}", i)
        header[parts[0].lower()] = parts[1]
    else:
        raise MapParseError("missing 'map' line", max(len(lines), 1))
    try:
        height = int(header["height"])
        width = int(header["width"])
    except KeyError as e:
        raise MapParseError(f"header lacks {e.args[0]!r}", i) from None
    except ValueError:
        raise MapParseError("height/width must be integers", i) from None
    if height <= 0 or width <= 0:
        raise MapParseError("height and width must be positive", i)

    passable = np.zeros((height, width), dtype=bool)
    for y in range(height):
        lineno = i + y + 1
        if i + y >= len(lines):
            raise MapParseError(f"expected {height} rows, found {y}", lineno)
        row = lines[i + y].rstrip("\r\n")
        if len(row) != width:
            raise MapParseError(f"row has {len(row)} cells, expected {width}", lineno)
        for x, ch in enumerate(row):
            if ch in PASSABLE:
                passable[y, x] = True
            elif ch not in BLOCKED:
                raise MapParseError(f"unknown cell character {ch!r}", lineno)
    return GridMap(width, height, passable)


def random_grid_map(width: int, height: int, obstacle_frac: float, seed: int) -> GridMap:
    rng = np.random.default_rng(seed)
    return GridMap(width, height, rng.random((height, width)) >= obstacle_frac)


_OFFSETS = {
    4: ((1, 0), (0, 1), (-1, 0), (0, -1)),
    8: ((1, 0), (0, 1), (-1, 0), (0, -1), (1, 1), (-1, 1), (1, -1), (-1, -1)),
}


def largest_region(gm: GridMap, connectivity: int = 4) -> GridMap:
    """Keep only the largest connected passable region."""
    label = np.full(gm.passable.shape, -1, dtype=np.int64)
    sizes = []
    for y0, x0 in zip(*np.nonzero(gm.passable)):
        if label[y0, x0] >= 0:
            continue
        lab = len(sizes)
        label[y0, x0] = lab
        queue, size = deque([(y0, x0)]), 0
        while queue:
            y, x = queue.popleft()
            size += 1
            for dx, dy in _OFFSETS[connectivity]:
                yy, xx = y + dy, x + dx
                if 0 <= yy < gm.height and 0 <= xx < gm.width and gm.passable[yy, xx] and label[yy, xx] < 0:
                    label[yy, xx] = lab
                    queue.append((yy, xx))
        sizes.append(size)
    if not sizes:
        return gm
    return GridMap(gm.width, gm.height, label == int(np.argmax(sizes)))


# --- height functions ------------------------------------------------------

def poly_height(x, y):
    return x + y**2 + (x + y) ** 3


def exp_height(x, y):
    return 1.01**x + 1.02**y + 1.03 ** (x + y)


HEIGHTS: dict[str, Callable] = {"poly": poly_height, "exp": exp_height}


def height_function(name: str) -> Callable:
    try:
        return HEIGHTS[name]
    except KeyError:
        raise ValueError(f"unknown height function {name!r}; choose from {sorted(HEIGHTS)}") from None


def directed_weight(h_from, h_to):
    """Uphill costs twice the climb, downhill half the drop."""
    h_from = np.asarray(h_from, dtype=float)
    h_to = np.asarray(h_to, dtype=float)
    return np.where(h_to >= h_from, 2.0 * (h_to - h_from), (h_from - h_to) / 2.0)


@dataclass(frozen=True, eq=False)
class GridGraph:
    graph: DirectedGraph
    cells: np.ndarray  # (n, 2) int, columns (x, y)
    heights: str
    connectivity: int
    vertex_of: dict = field(repr=False, default_factory=dict)


def grid_to_directed_graph(gm: GridMap, heights="poly", connectivity: int = 4) -> GridGraph:
    """One vertex per passable cell (row-major); two directed edges per adjacent pair."""
    if connectivity not in _OFFSETS:
        raise ValueError("connectivity must be 4 or 8")
    h = height_function(heights) if isinstance(heights, str) else heights
    ys, xs = np.nonzero(gm.passable)  # row-major
    if xs.size == 0:
        raise GraphError("map has no passable cells")
    index = np.full(gm.passable.shape, -1, dtype=np.int64)
    index[ys, xs] = np.arange(xs.size)
    hv = h(xs.astype(float), ys.astype(float))

    src, dst = [], []
    # each undirected pair once: offsets with dy > 0 or (dy == 0 and dx > 0)
    for dx, dy in _OFFSETS[connectivity]:
        if dy < 0 or (dy == 0 and dx < 0):
            continue
        xx, yy = xs + dx, ys + dy
        ok = (xx >= 0) & (xx < gm.width) & (yy >= 0) & (yy < gm.height)
        ok[ok] = gm.passable[yy[ok], xx[ok]]
        a = np.flatnonzero(ok)
        b = index[yy[ok], xx[ok]]
        src.append(a)
        dst.append(b)
    a = np.concatenate(src)
    b = np.concatenate(dst)
    # interleave (a->b, b->a) and order by source so output is deterministic
    s = np.concatenate([a, b])
    d = np.concatenate([b, a])
    order = np.lexsort((d, s))
    s, d = s[order], d[order]
    w = directed_weight(hv[s], hv[d])
    name = heights if isinstance(heights, str) else getattr(heights, "__name__", "custom")
    cells = np.stack([xs, ys], axis=1)
    return GridGraph(DirectedGraph(int(xs.size), s, d, w), cells, name, connectivity,
                     {(int(x), int(y)): i for i, (x, y) in enumerate(cells)})


# --- TSV interchange -------------------------------------------------------

def write_graph_tsv(g: DirectedGraph, path) -> None:
    with open(path, "w") as f:
        f.write(f"#vertices {g.n}\n")
        for s, d, w in g.edges():
            f.write(f"{s}\t{d}\t{w!r}\n")


def read_graph_tsv(path) -> DirectedGraph:
    with open(path) as f:
        first = f.readline()
        parts = first.split()
        if len(parts) != 2 or parts[0] != "#vertices":
            raise GraphError(f"{path}: expected '#vertices N' header, got {first.strip()!r}")
        n = int(parts[1])
        edges = []
        for lineno, line in enumerate(f, start=2):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            cols = line.split("\t")
            if len(cols) != 3:
                raise GraphError(f"{path}:{lineno}: expected 3 tab-separated fields")
            edges.append((int(cols[0]), int(cols[1]), float(cols[2])))
    return DirectedGraph.from_edges(n, edges)


def write_cells_csv(cells: np.ndarray, path) -> None:
    with open(path, "w") as f:
        f.write("vertex,x,y\n")
        for i, (x, y) in enumerate(cells.tolist()):
            f.write(f"{i},{x},{y}\n")


def read_cells_csv(path) -> np.ndarray:
    data = np.loadtxt(path, delimiter=",", skiprows=1, dtype=np.int64, ndmin=2)
    return data[np.argsort(data[:, 0]), 1:3]


def random_strongly_connected(n: int, extra_edges: int, rng, max_weight: float = 10.0) -> DirectedGraph:
    """Random digraph guaranteed strongly connected via a hidden Hamiltonian cycle."""
    perm = rng.permutation(n)
    s = list(perm)
    d = list(np.roll(perm, -1))
    if extra_edges:
        s += rng.integers(0, n, extra_edges).tolist()
        d += rng.integers(0, n, extra_edges).tolist()
    w = rng.uniform(0.0, max_weight, len(s))
    return DirectedGraph(n, np.array(s), np.array(d), w)
