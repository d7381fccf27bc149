import json

import numpy as np
import pytest

from fastmapd.cli import main
from fastmapd.embed import load_embedding
from fastmapd.evaluation import read_reports_csv
from fastmapd.graph import GridMap, read_graph_tsv, write_graph_tsv

from conftest import random_graph


def write_map(path, rows):
    path.write_text(f"type octile\nheight {len(rows)}\nwidth {len(rows[0])}\nmap\n" + "\n".join(rows) + "\n")
    return path


@pytest.fixture
def open_map(tmp_path):
    return write_map(tmp_path / "open.map", ["........"] * 6)


def test_synth_open_3x3(tmp_path, capsys):
    m = write_map(tmp_path / "m.map", ["...", "...", "..."])
    assert main(["synth", str(m), "-o", str(tmp_path / "g.tsv")]) == 0
    g = read_graph_tsv(tmp_path / "g.tsv")
    assert g.n == 9 and g.edge_count == 24
    assert (tmp_path / "g.cells.csv").exists()
    manifest = json.loads((tmp_path / "g.tsv.manifest.json").read_text())
    assert manifest["parameters"]["heights"] == "poly" and manifest["parameters"]["connectivity"] == 4


def test_synth_is_deterministic(tmp_path, open_map):
    main(["synth", str(open_map), "--heights", "exp", "-o", str(tmp_path / "a.tsv")])
    main(["synth", str(open_map), "--heights", "exp", "-o", str(tmp_path / "b.tsv")])
    assert (tmp_path / "a.tsv").read_bytes() == (tmp_path / "b.tsv").read_bytes()
    assert (tmp_path / "a.cells.csv").read_bytes() == (tmp_path / "b.cells.csv").read_bytes()


def test_isolated_region_fails_downstream(tmp_path, capsys):
    m = write_map(tmp_path / "m.map", ["..@.."])
    assert main(["synth", str(m), "-o", str(tmp_path / "g.tsv")]) == 0
    assert main(["embed", str(tmp_path / "g.tsv"), "-o", str(tmp_path / "e.csv")]) == 1
    err = capsys.readouterr().err
    assert "not strongly connected" in err and "vertex 2" in err
    assert main(["synth", str(m), "--largest-region", "-o", str(tmp_path / "h.tsv")]) == 0
    assert main(["embed", str(tmp_path / "h.tsv"), "-o", str(tmp_path / "e.csv")]) == 0


def test_bad_map_is_usage_error(tmp_path, capsys):
    m = write_map(tmp_path / "m.map", ["..", "."])
    assert main(["synth", str(m), "-o", str(tmp_path / "g.tsv")]) == 2
    assert "line 6" in capsys.readouterr().err


def test_embed_two_cycle(tmp_path):
    (tmp_path / "g.tsv").write_text("#vertices 2\n0\t1\t1\n1\t0\t3\n")
    assert main(["embed", str(tmp_path / "g.tsv"), "--k-max", "2", "-o", str(tmp_path / "e.csv")]) == 0
    emb = load_embedding(tmp_path / "e.csv")
    assert emb.coords.shape == (2, 2)
    assert sorted(emb.coords[:, 0].tolist()) == [0, 2]
    assert (tmp_path / "e.csv").read_text().splitlines()[0] == "vertex,c1,c2"
    sidecar = json.loads((tmp_path / "e.csv.json").read_text())
    assert sidecar["k"] == 1 and sidecar["seed"] == 0


def test_missing_file_exit_2(tmp_path, capsys):
    assert main(["embed", str(tmp_path / "nope.tsv"), "-o", str(tmp_path / "e.csv")]) == 2
    assert "no such file" in capsys.readouterr().err


def test_bad_arguments_exit_2():
    with pytest.raises(SystemExit) as e:
        main(["embed"])
    assert e.value.code == 2


def test_fit_reports_m_136(tmp_path, capsys):
    m = write_map(tmp_path / "m.map", ["." * 10] * 10)
    main(["synth", str(m), "-o", str(tmp_path / "g.tsv")])
    main(["embed", str(tmp_path / "g.tsv"), "--k-max", "16", "-o", str(tmp_path / "e.csv")])
    capsys.readouterr()
    assert main(["fit", str(tmp_path / "g.tsv"), str(tmp_path / "e.csv"), "--degree", "2",
                 "-o", str(tmp_path / "model.json"), "--emb-out", str(tmp_path / "e2.csv")]) == 0
    assert "M=136" in capsys.readouterr().out
    model = json.loads((tmp_path / "model.json").read_text())
    assert model["k"] == 15 and model["D"] == 2 and len(model["coefficients"]) == 136
    assert load_embedding(tmp_path / "e2.csv").potential.any()


def test_eval_without_model_equals_fastmap_baseline(tmp_path, open_map, capsys):
    main(["synth", str(open_map), "-o", str(tmp_path / "g.tsv")])
    main(["embed", str(tmp_path / "g.tsv"), "--k-max", "5", "--seed", "3", "-o", str(tmp_path / "e.csv")])
    assert main(["eval", str(tmp_path / "g.tsv"), str(tmp_path / "e.csv"), "--seed", "3", "--n-pairs", "300",
                 "-o", str(tmp_path / "eval.csv")]) == 0
    value = float((tmp_path / "eval.csv").read_text().splitlines()[1].split(",")[-1])
    assert main(["sweep", "--graph", str(tmp_path / "g.tsv"), "--ks", "4", "--seeds", "3", "--n-pairs", "300",
                 "--methods", "fastmap", "-o", str(tmp_path / "s.csv")]) == 0
    [rep] = read_reports_csv(tmp_path / "s.csv")
    assert rep.nrmse == value


def test_fit_then_eval_improves(tmp_path, open_map, capsys):
    main(["synth", str(open_map), "-o", str(tmp_path / "g.tsv")])
    main(["embed", str(tmp_path / "g.tsv"), "--k-max", "4", "-o", str(tmp_path / "e.csv")])
    main(["fit", str(tmp_path / "g.tsv"), str(tmp_path / "e.csv"), "-o", str(tmp_path / "m.json")])
    main(["eval", str(tmp_path / "g.tsv"), str(tmp_path / "e.csv"), "-o", str(tmp_path / "plain.csv")])
    main(["eval", str(tmp_path / "g.tsv"), str(tmp_path / "e.csv"), "--model", str(tmp_path / "m.json"),
          "-o", str(tmp_path / "fit.csv")])
    last = lambda p: float(p.read_text().splitlines()[1].split(",")[-1])
    assert last(tmp_path / "fit.csv") < last(tmp_path / "plain.csv")
    manifest = json.loads((tmp_path / "fit.csv.manifest.json").read_text())
    assert manifest["parameters"]["n_pairs"] == 100000 and manifest["results"]["method"] == "polynomial"


@pytest.mark.parametrize("mode", ["pair", "potential", "grid"])
def test_fit_nn_and_eval(tmp_path, open_map, mode):
    main(["synth", str(open_map), "-o", str(tmp_path / "g.tsv")])
    main(["embed", str(tmp_path / "g.tsv"), "--k-max", "4", "-o", str(tmp_path / "e.csv")])
    cells = ["--cells", str(tmp_path / "g.cells.csv")]
    assert main(["fit-nn", str(tmp_path / "g.tsv"), str(tmp_path / "e.csv"), "--mode", mode, *cells,
                 "--hidden", "8,4", "--epochs", "2", "-o", str(tmp_path / "n.json")]) == 0
    assert main(["eval", str(tmp_path / "g.tsv"), str(tmp_path / "e.csv"), "--nn", str(tmp_path / "n.json"),
                 *cells, "--n-pairs", "100"]) == 0


def test_grid_nn_requires_cells(tmp_path, open_map, capsys):
    main(["synth", str(open_map), "-o", str(tmp_path / "g.tsv")])
    main(["embed", str(tmp_path / "g.tsv"), "--k-max", "3", "-o", str(tmp_path / "e.csv")])
    assert main(["fit-nn", str(tmp_path / "g.tsv"), str(tmp_path / "e.csv"), "--mode", "grid",
                 "-o", str(tmp_path / "n.json")]) == 2


def test_sweep_from_map(tmp_path, open_map):
    out = tmp_path / "r.csv"
    assert main(["sweep", "--map", str(open_map), "--ks", "3,4", "--seeds", "1", "--n-pairs", "100",
                 "--methods", "fastmap", "fastmapd-lasso", "direct-nn", "--nn-hidden", "4",
                 "--direct-hidden", "4", "--epochs", "1", "-o", str(out)]) == 0
    reps = read_reports_csv(out)
    assert len(reps) == 6 and {r.map for r in reps} == {"open"}
    manifest = json.loads(out.with_suffix(".csv.manifest.json").read_text())
    assert manifest["parameters"]["effective"]["lam"] == 1e-3


def test_oracle_check(tmp_path, capsys):
    write_graph_tsv(random_graph(7, n=30), tmp_path / "g.tsv")
    assert main(["oracle-check", str(tmp_path / "g.tsv")]) == 0
    assert "OK" in capsys.readouterr().out
    assert main(["oracle-check", str(tmp_path / "g.tsv"), "--cap", "10"]) == 1
