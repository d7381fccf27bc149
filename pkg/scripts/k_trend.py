"""NRMSE of FastMap vs FastMap-D (LASSO) across K on a random grid map.

    python3 scripts/k_trend.py --size 64 --ks 4 8 16 --out results/k_trend.csv
"""
import argparse
from pathlib import Path

from fastmapd.evaluation import SweepConfig, mean_nrmse, sweep, write_reports_csv
from fastmapd.graph import grid_to_directed_graph, largest_region, load_movingai_map, random_grid_map


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--map", help="MovingAI .map file (default: random grid)")
    ap.add_argument("--size", type=int, default=64)
    ap.add_argument("--obstacles", type=float, default=0.2)
    ap.add_argument("--map-seed", type=int, default=2026)
    ap.add_argument("--heights", choices=("poly", "exp"), default="poly")
    ap.add_argument("--connectivity", type=int, choices=(4, 8), default=4)
    ap.add_argument("--ks", type=int, nargs="+", default=[4, 8, 16])
    ap.add_argument("--degrees", type=int, nargs="+", default=[2])
    ap.add_argument("--seeds", type=int, nargs="+", default=[1, 2, 3])
    ap.add_argument("--n-pairs", type=int, default=100_000)
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--out", default="results/k_trend.csv")
    args = ap.parse_args()

    if args.map:
        gm = load_movingai_map(Path(args.map).read_text())
        name = Path(args.map).stem
    else:
        gm = random_grid_map(args.size, args.size, args.obstacles, args.map_seed)
        name = f"random{args.size}-{args.obstacles:g}"
    gg = grid_to_directed_graph(largest_region(gm, args.connectivity), args.heights, args.connectivity)
    cfg = SweepConfig(ks=tuple(args.ks), degrees=tuple(args.degrees), seeds=tuple(args.seeds),
                      n_pairs=args.n_pairs, jobs=args.jobs)
    reports = sweep(gg.graph, cfg, gg.cells, name, args.heights)
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    write_reports_csv(reports, args.out)

    print(f"{name}: |V|={gg.graph.n} |E|={gg.graph.edge_count}")
    print(f"{'K':>4} {'FastMap':>9}" + "".join(f" {'D=' + str(d):>9}" for d in args.degrees))
    for k in args.ks:
        row = f"{k:>4} {mean_nrmse(reports, 'fastmap', k):9.4f}"
        row += "".join(f" {mean_nrmse(reports, 'fastmapd-lasso', k, d):9.4f}" for d in args.degrees)
        print(row)
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
