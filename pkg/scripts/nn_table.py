"""FastMap-D with LASSO and NN potentials vs a direct NN on grid coordinates, at one K.

    python3 scripts/nn_table.py --size 64 --k 16 --epochs 10
"""
import argparse
from pathlib import Path

from fastmapd.evaluation import SweepConfig, mean_nrmse, sweep, write_reports_csv
from fastmapd.graph import grid_to_directed_graph, largest_region, load_movingai_map, random_grid_map
from fastmapd.nn import NnTrainConfig

METHODS = ("fastmap", "fastmapd-lasso", "fastmapd-nn", "direct-nn")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--map", help="MovingAI .map file (default: random grid)")
    ap.add_argument("--size", type=int, default=64)
    ap.add_argument("--map-seed", type=int, default=2026)
    ap.add_argument("--heights", choices=("poly", "exp"), default="poly")
    ap.add_argument("--k", type=int, default=16)
    ap.add_argument("--seeds", type=int, nargs="+", default=[1])
    ap.add_argument("--hidden", type=int, nargs="+", default=[256, 128])
    ap.add_argument("--direct-hidden", type=int, nargs="+", default=[256, 128, 64, 64])
    ap.add_argument("--epochs", type=int, default=10)
    ap.add_argument("--n-pairs", type=int, default=100_000)
    ap.add_argument("--out", default="results/nn_table.csv")
    args = ap.parse_args()

    if args.map:
        gm, name = load_movingai_map(Path(args.map).read_text()), Path(args.map).stem
    else:
        gm, name = random_grid_map(args.size, args.size, 0.2, args.map_seed), f"random{args.size}"
    gg = grid_to_directed_graph(largest_region(gm), args.heights)
    cfg = SweepConfig(ks=(args.k,), seeds=tuple(args.seeds), methods=METHODS, n_pairs=args.n_pairs,
                      nn=NnTrainConfig(hidden=tuple(args.hidden), epochs=args.epochs),
                      direct_hidden=tuple(args.direct_hidden))
    reports = sweep(gg.graph, cfg, gg.cells, name, args.heights)
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    write_reports_csv(reports, args.out)
    print(f"{name}: |V|={gg.graph.n}, K={args.k}")
    for m in METHODS:
        print(f"{m:>15} {mean_nrmse(reports, m, args.k):.4f}")


if __name__ == "__main__":
    main()
