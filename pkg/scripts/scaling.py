"""Wall-clock of embedding and the full pipeline against grid size.

    python3 scripts/scaling.py --sizes 64 128 256
"""
import argparse
import time

import numpy as np

from fastmapd.embed import EmbedConfig, embed_average_distances
from fastmapd.evaluation import nrmse
from fastmapd.graph import grid_to_directed_graph, largest_region, random_grid_map
from fastmapd.paths import sssp
from fastmapd.potential import assign_last_coordinate, fit_potential


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[64, 128, 256])
    ap.add_argument("--k-max", type=int, default=8)
    ap.add_argument("--repeats", type=int, default=3)
    args = ap.parse_args()

    print(f"{'size':>5} {'|V|':>7} {'|E|':>7} {'sssp_ms':>8} {'embed_s':>8} {'pipeline_s':>10} {'nrmse':>7}")
    for size in args.sizes:
        g = grid_to_directed_graph(largest_region(random_grid_map(size, size, 0.2, 8)), "poly").graph
        sssp(g, 0)  # JIT warm-up
        t0 = time.perf_counter()
        for r in range(20):
            sssp(g, r % g.n)
        t_sssp = (time.perf_counter() - t0) / 20 * 1000
        times = []
        for s in range(args.repeats):
            t0 = time.perf_counter()
            embed_average_distances(g, EmbedConfig(k_max=args.k_max, rng_seed=s))
            times.append(time.perf_counter() - t0)
        t0 = time.perf_counter()
        emb = embed_average_distances(g, EmbedConfig(k_max=args.k_max, rng_seed=1))
        emb = assign_last_coordinate(emb, fit_potential(g, emb, 2, seed=1))
        value = nrmse(g, emb, seed=1)
        total = time.perf_counter() - t0
        print(f"{size:>5} {g.n:>7} {g.edge_count:>7} {t_sssp:8.2f} {np.median(times):8.3f} {total:10.2f} {value:7.4f}")


if __name__ == "__main__":
    main()
