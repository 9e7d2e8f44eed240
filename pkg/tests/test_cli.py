import csv
import json

import numpy as np
import pytest
import yaml

from gog.cli import main, resolve_zeta
from gog.errors import ConfigError


def run(*argv):
    return main([str(a) for a in argv])


@pytest.fixture(scope="module")
def tri(tmp_path_factory):
    out = tmp_path_factory.mktemp("sim")
    assert run("simulate", "--kind", "tridiagonal", "--n", 20, "--seed", 3, "--out", out) == 0
    return out


def test_simulate_outputs(tmp_path):
    assert run("simulate", "--kind", "four_block", "--n", 50, "--out", tmp_path / "a") == 0
    rows = list(csv.reader(open(tmp_path / "a" / "data.csv")))
    assert len(rows[0]) == 19 and len(rows) == 51
    truth = json.loads((tmp_path / "a" / "truth.json").read_text())
    assert sorted(set(truth["labels"])) == [0, 1, 2, 3] and truth["superedges"] == [[1, 2], [2, 3]]
    assert run("simulate", "--kind", "latent", "--n", 30, "--out", tmp_path / "b") == 0
    assert len(next(csv.reader(open(tmp_path / "b" / "data.csv")))) == 35
    assert run("simulate", "--kind", "four_block", "--n", 50, "--out", tmp_path / "c") == 0
    for f in ("data.csv", "truth.json", "manifest.yaml"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "c" / f).read_bytes()


def test_zeta_auto():
    assert resolve_zeta("auto", "coarsened", 1000) == pytest.approx(0.01)
    assert resolve_zeta("auto", "nested", 1000) == pytest.approx(0.001)
    with pytest.raises(ConfigError):
        resolve_zeta("2", "coarsened", 10)


def test_fit_rerun_from_manifest_is_identical(tri, tmp_path):
    args = ["fit", tri / "data.csv", "--iters", 300, "--burnin", 100, "--thin", 2, "--seed", 5]
    assert run(*args, "--out", tmp_path / "a") == 0
    manifest = yaml.safe_load((tmp_path / "a" / "manifest.yaml").read_text())
    assert manifest["resolved"]["zeta"] == pytest.approx(0.5)
    assert run("fit", "--config", tmp_path / "a" / "manifest.yaml", "--out", tmp_path / "b") == 0
    a = (tmp_path / "a" / "samples.jsonl").read_bytes()
    assert a == (tmp_path / "b" / "samples.jsonl").read_bytes()
    assert len(a.splitlines()) == 100


def test_nested_parallelism_identical(tri, tmp_path):
    outs = []
    for par in (1, 2, 4):
        out = tmp_path / f"p{par}"
        assert run("fit", tri / "data.csv", "--algorithm", "nested", "--iters", 40, "--burnin", 0, "--thin", 2,
                   "--n-inner", 20, "--parallelism", par, "--out", out) == 0
        outs.append((out / "samples.jsonl").read_bytes())
    assert outs[0] == outs[1] == outs[2]


def test_exit_codes(tri, tmp_path):
    assert run("fit", tri / "data.csv", "--iters", 10, "--burnin", 10, "--out", tmp_path / "x") == 2
    assert run("fit", tmp_path / "missing.csv", "--out", tmp_path / "x") == 3
    bad = tmp_path / "bad.yaml"
    bad.write_text("nonsense_key: 1\n")
    assert run("fit", tri / "data.csv", "--config", bad, "--out", tmp_path / "x") == 2
    empty = tmp_path / "empty.jsonl"
    empty.write_text("")
    assert run("summarize", empty, "--out", tmp_path / "s") == 3
    const = tmp_path / "const.csv"
    const.write_text("a,b\n1,2\n1,3\n1,4\n")
    assert run("fit", const, "--iters", 5, "--burnin", 0, "--out", tmp_path / "x") == 4


def test_summarize(tri, tmp_path):
    fit = tmp_path / "fit"
    assert run("fit", tri / "data.csv", "--iters", 300, "--burnin", 100, "--out", fit) == 0
    assert run("summarize", fit / "samples.jsonl", "--svg", "--out", tmp_path / "s") == 0
    for f in ("coclustering.csv", "superedges.csv", "partition.json", "graph_of_graphs.json",
              "coclustering.svg", "superedges.svg", "manifest.yaml"):
        assert (tmp_path / "s" / f).exists()
    rows = list(csv.reader(open(tmp_path / "s" / "coclustering.csv")))
    assert rows[0][1:] == [f"V{j}" for j in range(1, 7)]
    P = np.array([[float(v) for v in r[1:]] for r in rows[1:]])
    assert np.allclose(P, P.T) and np.all(np.diag(P) == 1)
    assert run("summarize", fit / "samples.jsonl", "--threshold", 0.99, "--out", tmp_path / "t") == 0
    lo = json.loads((tmp_path / "s" / "graph_of_graphs.json").read_text())
    hi = json.loads((tmp_path / "t" / "graph_of_graphs.json").read_text())
    pairs = lambda g: {tuple(e["pair"]) for e in g["superedges"]}
    assert pairs(hi) <= pairs(lo)


def test_summarize_single_record(tri, tmp_path):
    fit = tmp_path / "fit"
    assert run("fit", tri / "data.csv", "--iters", 5, "--burnin", 4, "--out", fit) == 0
    assert run("summarize", fit / "samples.jsonl", "--out", tmp_path / "a") == 0
    assert run("summarize", fit / "samples.jsonl", "--out", tmp_path / "b") == 0
    for f in ("coclustering.csv", "partition.json", "graph_of_graphs.json"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_roc_single_replicate(tmp_path):
    assert run("roc", "--p", 10, "--n", 500, "--replicates", 1, "--iters", 2000, "--burnin", 200,
               "--out", tmp_path) == 0
    rows = list(csv.DictReader(open(tmp_path / "roc_p10_n500_d0.25.csv")))
    fpr = [float(r["fpr"]) for r in rows]
    tpr = [float(r["tpr"]) for r in rows]
    assert np.all(np.diff(fpr) >= 0) and np.all(np.diff(tpr) >= 0)
    table = list(csv.DictReader(open(tmp_path / "auc.csv")))
    assert len(table) == 1 and {"fpr_at_threshold", "tpr_at_threshold"} <= set(table[0])
