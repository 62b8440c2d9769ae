import json
import subprocess
import sys

import numpy as np
import pytest

from exch_pairs.cli import main


def _run(*argv):
    return main([str(a) for a in argv])


@pytest.fixture(scope="module")
def dataset(tmp_path_factory):
    out = tmp_path_factory.mktemp("gen") / "d"
    assert _run("--quiet", "generate", "--cells", "all", "--per-cell", 2, "--seed", 7,
                "--n-samples", 60, "--out", out) == 0
    return out


def test_generate_counts(dataset):
    files = sorted(p.name for p in dataset.glob("ex*.csv"))
    assert len(files) == 144 and (dataset / "manifest.json").is_file()
    manifest = json.loads((dataset / "manifest.json").read_text())
    assert manifest["settings"]["command"]["per_cell"] == 2


def test_generate_reproducible(dataset, tmp_path):
    other = tmp_path / "again"
    _run("--quiet", "generate", "--cells", "all", "--per-cell", 2, "--seed", 7,
         "--n-samples", 60, "--out", other)
    for f in dataset.iterdir():
        if f.name != "manifest.json":
            assert f.read_bytes() == (other / f.name).read_bytes()
    a = json.loads((dataset / "manifest.json").read_text())
    b = json.loads((other / "manifest.json").read_text())
    a["settings"]["command"]["out"] = b["settings"]["command"]["out"] = None
    assert a == b


def test_usage_errors_exit_2(tmp_path, dataset, capsys):
    assert _run("generate", "--per-cell", 3, "--out", tmp_path / "x") == 2
    assert _run("generate", "--cells", "Sine", "--out", tmp_path / "x") == 2
    assert _run("evaluate", "--data", dataset, "--methods", "FOO") == 2
    assert "unknown method" in capsys.readouterr().err
    with pytest.raises(SystemExit) as exc:
        _run("generate")
    assert exc.value.code == 2


def test_runtime_errors_exit_1(tmp_path):
    assert _run("evaluate", "--data", tmp_path / "missing", "--out", tmp_path / "r.json") == 1
    bad = tmp_path / "r.json"
    bad.write_text(json.dumps({"version": 99}))
    assert _run("fit-weights", "--report", bad, "--out", tmp_path / "w.json") == 1


def test_evaluate_linear_dataset(tmp_path):
    d = tmp_path / "lin"
    _run("--quiet", "generate", "--cells", "Linear", "--per-cell", 4, "--seed", 1,
         "--n-samples", 60, "--out", d)
    rep = tmp_path / "rep.json"
    assert _run("--quiet", "evaluate", "--data", d, "--methods", "IGCI", "--out", rep) == 0
    r = json.loads(rep.read_text())
    assert r["methods"] == ["IGCI"] and 0 <= r["metrics"]["IGCI"]["auroc"] <= 1
    assert len(r["per_cell"]["auroc"][0]) == 9 and r["config"]["methods"] == "IGCI"


def test_evaluate_benchmark_with_screen(mini_benchmark, tmp_path, capsys):
    rep = tmp_path / "rep.json"
    assert _run("evaluate", "--data", mini_benchmark, "--screen", "--threshold", 0.5,
                "--scores", tmp_path / "s.csv", "--out", rep) == 0
    r = json.loads(rep.read_text())
    assert r["kind"] == "benchmark" and r["n_items"] == 2
    # every D is below 1/30, so a 0.5 threshold screens everything
    assert r["screened"] == ["0001", "0002"]
    assert "screened as independent" in capsys.readouterr().out
    assert (tmp_path / "s.csv").read_text().splitlines()[0] == "id,IGCI,RECI,ANM"


def test_quiet_keeps_stdout_for_data(mini_benchmark, tmp_path, capsys):
    _run("--quiet", "evaluate", "--data", mini_benchmark, "--out", tmp_path / "r.json")
    assert capsys.readouterr().out == ""
    _run("--quiet", "screen", "--data", mini_benchmark)
    out = capsys.readouterr().out.splitlines()
    assert out[0] == "id,hoeffding_d,independent" and len(out) == 3


def test_fit_weights_toy(tmp_path):
    report = {"version": 1, "source": "toy", "kind": "dataset", "methods": ["IGCI", "RECI"],
              "metrics": {m: {"auroc": 0.6, "accuracy": 0.6, "weighted_auroc": 0.6,
                              "weighted_accuracy": 0.6} for m in ("IGCI", "RECI")},
              "n_items": 4, "cells": ["a", "b"],
              "per_cell": {"auroc": [[0.9, 0.5], [0.6, 0.8]],
                           "accuracy": [[0.8, 0.5], [0.6, 0.7]]},
              "screened": None, "threshold": None, "extra": {}, "config": {}}
    (tmp_path / "rep.json").write_text(json.dumps(report))
    out = tmp_path / "w.json"
    assert _run("--quiet", "fit-weights", "--report", tmp_path / "rep.json", "--loo",
                "--out", out) == 0
    w = json.loads(out.read_text())
    assert set(w) >= {"methods", "cells", "A", "b", "reg", "w", "objective", "config"}
    assert min(w["w"]) >= 0 and abs(sum(w["w"]) - 1) < 1e-9
    assert w["b"] == [0.707, 0.739]


def test_fit_weights_custom_reference(tmp_path, dataset):
    rep = tmp_path / "rep.json"
    _run("--quiet", "evaluate", "--data", dataset, "--methods", "IGCI,RECI", "--out", rep)
    (tmp_path / "ref.json").write_text(json.dumps({"IGCI": 0.7, "RECI": 0.7}))
    assert _run("--quiet", "fit-weights", "--report", rep, "--reference", tmp_path / "ref.json",
                "--reg", 0.5, "--out", tmp_path / "w.json") == 0
    assert len(json.loads((tmp_path / "w.json").read_text())["w"]) == 72


def test_train_and_score(dataset, mini_benchmark, tmp_path):
    out = tmp_path / "model"
    assert _run("--quiet", "train", "--data", dataset, "--scale", "desk", "--epochs", 2,
                "--batch", 16, "--out", out) == 0
    lines = (out / "history.csv").read_text().splitlines()
    epochs = [int(l.split(",")[0]) for l in lines[1:]]
    assert epochs == [0, 1, 2]
    scores = tmp_path / "scores.csv"
    assert _run("--quiet", "score", "--checkpoint", out / "model.npz", "--data", mini_benchmark,
                "--out", scores) == 0
    rows = scores.read_text().splitlines()[1:]
    assert len(rows) == 2
    assert all(-1 <= float(r.split(",")[1]) <= 1 for r in rows)
    assert (tmp_path / "scores.config.json").is_file()
    # the training output directory is accepted as a checkpoint
    again = tmp_path / "again.csv"
    assert _run("--quiet", "score", "--checkpoint", out, "--data", mini_benchmark,
                "--out", again) == 0
    assert again.read_text() == scores.read_text()


def test_report_with_plots(dataset, tmp_path, capsys):
    rep = tmp_path / "rep.json"
    _run("--quiet", "evaluate", "--data", dataset, "--out", rep, "--scores", tmp_path / "s.csv")
    _run("--quiet", "fit-weights", "--report", rep, "--out", tmp_path / "w.json")
    capsys.readouterr()
    assert _run("report", "--report", rep, "--weights", tmp_path / "w.json", "--reference",
                "published", "--plots", tmp_path / "figs", "--scores", tmp_path / "s.csv") == 0
    text = capsys.readouterr().out
    assert "distance to reference (auroc)" in text and "cell-weighted auroc" in text
    assert {p.name for p in (tmp_path / "figs").iterdir()} == {
        "metrics.png", "per_cell_auroc.png", "score_distributions.png"}


def test_noisify(dataset, tmp_path):
    out = tmp_path / "noisy"
    assert _run("--quiet", "noisify", "--data", dataset, "--noise-add", 0.2, "--noise-mult",
                0.2, "--seed", 1, "--out", out) == 0
    a = np.loadtxt(dataset / "ex00003.csv", delimiter=",", skiprows=1)
    b = np.loadtxt(out / "ex00003.csv", delimiter=",", skiprows=1)
    assert np.array_equal(a[:, 0], b[:, 0]) and not np.array_equal(a[:, 1], b[:, 1])


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "exch_pairs", "--help"], capture_output=True,
                         text=True)
    assert res.returncode == 0 and "fit-weights" in res.stdout
