"""fastmapd command line: synth, embed, fit, fit-nn, eval, sweep, oracle-check.

Exit codes: 0 success, 1 computation error, 2 usage or I/O error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .embed import EmbedConfig, embed_average_distances, load_embedding, save_embedding
from .evaluation import (DEFAULT_PAIRS, METHODS, SweepConfig, embedding_estimates, nrmse_from_samples,
                         sample_pairs, sweep, write_reports_csv)
from .graph import (GraphError, MapParseError, grid_to_directed_graph, largest_region, load_movingai_map,
                    read_cells_csv, read_graph_tsv, write_cells_csv, write_graph_tsv)
from .nn import (NnTrainConfig, config_dict, load_mlp, predict_correction, sample_tree_training_data,
                 save_mlp, train_on_samples)
from .paths import ORACLE_CAP, all_pairs_oracle, average_distance, sssp
from .potential import (PolynomialModel, assign_last_coordinate, fit_potential, load_model,
                        monomial_count, save_model)

log = logging.getLogger("fastmapd")


class UsageError(Exception):
    pass


def _ints(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(t) for t in text.split(",") if t)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _write_manifest(path, command: str, params: dict, results: dict | None = None) -> None:
    manifest = {"command": command, "version": __version__, "parameters": params}
    if results:
        manifest["results"] = results
    with open(path, "w") as f:
        json.dump(manifest, f, indent=2, default=str)


def _params(args) -> dict:
    return {k: v for k, v in vars(args).items() if k not in ("func",)}


def _require(path) -> Path:
    p = Path(path)
    if not p.is_file():
        raise FileNotFoundError(f"no such file: {path}")
    return p


def _load_graph(path):
    return read_graph_tsv(_require(path))


def _load_emb(path):
    _require(path)
    return load_embedding(path)


# --- subcommands -----------------------------------------------------------

def cmd_synth(args) -> int:
    gm = load_movingai_map(_require(args.map).read_text())
    if args.largest_region:
        gm = largest_region(gm, args.connectivity)
    gg = grid_to_directed_graph(gm, args.heights, args.connectivity)
    out = Path(args.out)
    cells_path = Path(args.cells) if args.cells else out.with_suffix(".cells.csv")
    write_graph_tsv(gg.graph, out)
    write_cells_csv(gg.cells, cells_path)
    _write_manifest(f"{out}.manifest.json", "synth", _params(args),
                    {"vertices": gg.graph.n, "edges": gg.graph.edge_count, "cells": str(cells_path)})
    print(f"{gg.graph.n} vertices, {gg.graph.edge_count} edges -> {out}")
    return 0


def cmd_embed(args) -> int:
    g = _load_graph(args.graph)
    cfg = EmbedConfig(k_max=args.k_max, epsilon=args.epsilon, pivot_iters=args.pivot_iters,
                      rng_seed=args.seed, enhancements=not args.no_enhancements)
    t0 = time.perf_counter()
    emb = embed_average_distances(g, cfg)
    elapsed = time.perf_counter() - t0
    save_embedding(emb, args.out)
    _write_manifest(f"{args.out}.manifest.json", "embed", _params(args),
                    {"k": emb.k, "pivots": emb.pivots, "seconds": elapsed})
    print(f"embedded {g.n} vertices in {emb.k} dimensions (+1 potential) in {elapsed:.2f}s -> {args.out}")
    return 0


def cmd_fit(args) -> int:
    g = _load_graph(args.graph)
    emb = _load_emb(args.embedding)
    log.info("fitting degree-%d potential on k=%d, M=%d", args.degree, emb.k, monomial_count(emb.k, args.degree))
    model = fit_potential(g, emb, args.degree, args.lam, args.seed, args.min_samples,
                          tol=args.tol, max_iters=args.max_iters)
    save_model(model, args.out)
    if args.emb_out:
        save_embedding(assign_last_coordinate(emb, model), args.emb_out)
    _write_manifest(f"{args.out}.manifest.json", "fit", _params(args), model.stats)
    s = model.stats
    print(f"M={s['M']} samples={s['n_samples']} iterations={s['iterations']} "
          f"converged={s['converged']} train_rmse={s['train_rmse']:.6g} -> {args.out}")
    return 0


def cmd_fit_nn(args) -> int:
    g = _load_graph(args.graph)
    emb = _load_emb(args.embedding)
    cfg = NnTrainConfig(hidden=args.hidden, learning_rate=args.lr, batch_size=args.batch_size,
                        epochs=args.epochs, seed=args.seed, mode=args.mode)
    samples = sample_tree_training_data(g, emb, args.roots, args.seed)
    if args.mode == "grid":
        if not args.cells:
            raise UsageError("--cells is required for grid mode")
        feats = read_cells_csv(_require(args.cells)).astype(float)
        result = train_on_samples(samples, feats, cfg, target="distance")
    else:
        result = train_on_samples(samples, emb.euclidean, cfg)
    stats = {"samples": len(samples), "roots": samples.roots.tolist(), "losses": result.losses,
             "config": config_dict(cfg)}
    save_mlp(result.model, args.out, stats)
    _write_manifest(f"{args.out}.manifest.json", "fit-nn", _params(args),
                    {"samples": len(samples), "final_loss": result.losses[-1]})
    print(f"trained {args.mode} network on {len(samples)} samples, final loss {result.losses[-1]:.6g} -> {args.out}")
    return 0


def cmd_eval(args) -> int:
    g = _load_graph(args.graph)
    emb = _load_emb(args.embedding)
    pairs = sample_pairs(g, args.n_pairs, args.seed)
    method = "embedding"
    if args.model and args.nn:
        raise UsageError("give at most one of --model and --nn")
    if args.model:
        emb = assign_last_coordinate(emb, load_model(_require(args.model)))
        method = "polynomial"
    if args.nn:
        net = load_mlp(_require(args.nn))
        method = f"nn-{net.mode}"
        if net.mode == "potential":
            emb = assign_last_coordinate(emb, net)
            est = embedding_estimates(emb, pairs.src, pairs.dst)
        elif net.mode == "pair":
            x = emb.euclidean
            diff = x[pairs.dst] - x[pairs.src]
            est = np.linalg.norm(diff, axis=1) + predict_correction(net, x[pairs.src], x[pairs.dst])
        else:
            if not args.cells:
                raise UsageError("--cells is required to evaluate a grid-mode network")
            feats = read_cells_csv(_require(args.cells)).astype(float)
            est = predict_correction(net, feats[pairs.src], feats[pairs.dst])
    else:
        est = embedding_estimates(emb, pairs.src, pairs.dst)
    value = nrmse_from_samples(pairs.dist, est)
    results = {"method": method, "N": len(pairs), "nrmse": value, "k": emb.k}
    if args.out:
        with open(args.out, "w") as f:
            f.write("method,K,N,seed,nrmse\n")
            f.write(f"{method},{emb.k + 1},{len(pairs)},{args.seed},{value!r}\n")
        _write_manifest(f"{args.out}.manifest.json", "eval", _params(args), results)
    print(f"NRMSE {value:.6f} over N={len(pairs)} pairs ({method}, {emb.k}+1 dimensions)")
    return 0


def cmd_sweep(args) -> int:
    cells = None
    if args.map:
        gm = load_movingai_map(_require(args.map).read_text())
        if args.largest_region:
            gm = largest_region(gm, args.connectivity)
        gg = grid_to_directed_graph(gm, args.heights, args.connectivity)
        g, cells = gg.graph, gg.cells
        name, heights = Path(args.map).stem, args.heights
    else:
        g = _load_graph(args.graph)
        name, heights = Path(args.graph).stem, ""
        if args.cells:
            cells = read_cells_csv(_require(args.cells))
    nn_cfg = NnTrainConfig(hidden=args.nn_hidden, learning_rate=args.lr, batch_size=args.batch_size,
                           epochs=args.epochs)
    cfg = SweepConfig(ks=args.ks, degrees=args.degrees, seeds=args.seeds, methods=tuple(args.methods),
                      n_pairs=args.n_pairs, lam=args.lam, epsilon=args.epsilon, pivot_iters=args.pivot_iters,
                      min_samples=args.min_samples, nn=nn_cfg, direct_hidden=args.direct_hidden, jobs=args.jobs)
    reports = sweep(g, cfg, cells, name, heights)
    write_reports_csv(reports, args.out)
    _write_manifest(f"{args.out}.manifest.json", "sweep", {**_params(args), "effective": cfg.to_dict()},
                    {"cells": len(reports), "vertices": g.n, "edges": g.edge_count})
    for r in reports:
        print(f"{r.method:15s} K={r.K:<3d} D={r.D} seed={r.seed} nrmse={r.nrmse:.4f}")
    return 0


def cmd_oracle_check(args) -> int:
    g = _load_graph(args.graph)
    full = all_pairs_oracle(g, args.cap)
    worst = 0.0
    for r in range(g.n):
        worst = max(worst, float(np.nanmax(np.abs(np.where(np.isinf(full[r]), 0, full[r] - sssp(g, r))))))
        if np.all(np.isfinite(full[r])) and np.all(np.isfinite(full[:, r])):
            avg = (full[r] + full[:, r]) / 2.0
            worst = max(worst, float(np.max(np.abs(avg - average_distance(g, r)))))
    ok = worst <= args.tol
    print(f"max |sssp - oracle| = {worst:.3g} over {g.n} roots: {'OK' if ok else 'MISMATCH'}")
    return 0 if ok else 1


# --- parser ----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fastmapd", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    p.add_argument("--jobs", type=int, default=1, help="worker cap for parallel sweep cells")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("synth", help="MovingAI map -> directed TSV graph")
    s.add_argument("map")
    s.add_argument("--heights", choices=("poly", "exp"), default="poly")
    s.add_argument("--connectivity", type=int, choices=(4, 8), default=4)
    s.add_argument("--largest-region", action="store_true", help="drop passable cells outside the largest region")
    s.add_argument("--cells", help="vertex->cell CSV (default: OUT with .cells.csv suffix)")
    s.add_argument("-o", "--out", required=True)
    s.set_defaults(func=cmd_synth)

    def embed_opts(q):
        q.add_argument("--epsilon", type=float, default=1e-4)
        q.add_argument("--pivot-iters", type=int, default=10)

    s = sub.add_parser("embed", help="embed average distances")
    s.add_argument("graph")
    s.add_argument("--k-max", type=int, default=8)
    embed_opts(s)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--no-enhancements", action="store_true")
    s.add_argument("-o", "--out", required=True)
    s.set_defaults(func=cmd_embed)

    s = sub.add_parser("fit", help="fit the polynomial potential with LASSO")
    s.add_argument("graph")
    s.add_argument("embedding")
    s.add_argument("--degree", type=int, default=2)
    s.add_argument("--lam", type=float, default=1e-3)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--min-samples", type=int)
    s.add_argument("--tol", type=float, default=1e-10)
    s.add_argument("--max-iters", type=int, default=100_000)
    s.add_argument("--emb-out", help="also write the embedding with the learned potential column")
    s.add_argument("-o", "--out", required=True)
    s.set_defaults(func=cmd_fit)

    def nn_opts(q, hidden_flag="--hidden", hidden=(1000, 500)):
        q.add_argument(hidden_flag, type=_ints, default=hidden)
        q.add_argument("--lr", type=float, default=1e-3)
        q.add_argument("--batch-size", type=int, default=256)
        q.add_argument("--epochs", type=int, default=20)

    s = sub.add_parser("fit-nn", help="train a neural correction model")
    s.add_argument("graph")
    s.add_argument("embedding")
    s.add_argument("--mode", choices=("pair", "grid", "potential"), default="pair")
    s.add_argument("--cells", help="vertex->cell CSV (grid mode)")
    s.add_argument("--roots", type=int, help="shortest-path tree roots (default: number of pivots)")
    s.add_argument("--seed", type=int, default=0)
    nn_opts(s)
    s.add_argument("-o", "--out", required=True)
    s.set_defaults(func=cmd_fit_nn)

    s = sub.add_parser("eval", help="NRMSE of an embedding, optionally with a learned model")
    s.add_argument("graph")
    s.add_argument("embedding")
    s.add_argument("--model", help="polynomial model JSON")
    s.add_argument("--nn", help="network JSON")
    s.add_argument("--cells")
    s.add_argument("--n-pairs", type=int, default=DEFAULT_PAIRS)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("-o", "--out")
    s.set_defaults(func=cmd_eval)

    s = sub.add_parser("sweep", help="NRMSE over methods x K x D x seeds")
    src = s.add_mutually_exclusive_group(required=True)
    src.add_argument("--map")
    src.add_argument("--graph")
    s.add_argument("--cells")
    s.add_argument("--heights", choices=("poly", "exp"), default="poly")
    s.add_argument("--connectivity", type=int, choices=(4, 8), default=4)
    s.add_argument("--largest-region", action="store_true")
    s.add_argument("--ks", type=_ints, default=(4, 8, 16))
    s.add_argument("--degrees", type=_ints, default=(2,))
    s.add_argument("--seeds", type=_ints, default=(1, 2, 3))
    s.add_argument("--methods", nargs="+", choices=METHODS, default=["fastmap", "fastmapd-lasso"])
    s.add_argument("--n-pairs", type=int, default=DEFAULT_PAIRS)
    s.add_argument("--lam", type=float, default=1e-3)
    embed_opts(s)
    s.add_argument("--min-samples", type=int)
    nn_opts(s, "--nn-hidden", (64, 32))
    s.add_argument("--direct-hidden", type=_ints, default=(64, 32, 16, 16))
    s.add_argument("-o", "--out", required=True)
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("oracle-check", help="compare Dijkstra against Floyd-Warshall")
    s.add_argument("graph")
    s.add_argument("--cap", type=int, default=ORACLE_CAP)
    s.add_argument("--tol", type=float, default=1e-9)
    s.set_defaults(func=cmd_oracle_check)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (FileNotFoundError, IsADirectoryError, PermissionError, MapParseError, UsageError) as e:
        print(f"fastmapd: error: {e}", file=sys.stderr)
        return 2
    except (GraphError, ValueError, FloatingPointError) as e:
        print(f"fastmapd: error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
