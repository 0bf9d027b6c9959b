import json
import math

import numpy as np
import pytest

import oracles
from mvm.cli import main
from mvm.tinynet import init_network, mlp_spec, save_checkpoint

TINY = """mode = unconditional
epochs = 3
steps_per_epoch = 4
batch_size = 16
probe_size = 48
spectrum_size = 24
diagnostics_interval = 1
snapshot_interval = 2
gen_hidden = 8
metric_hidden = 8
"""


def write_csv(path, rows):
    path.write_text("".join(",".join(repr(float(v)) for v in r) + "\n" for r in rows))
    return str(path)


def table(text):
    lines = text.strip().splitlines()
    return dict(line.split(",") for line in lines[1:])


def test_train_writes_outputs(tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text(TINY)
    assert main(["train", "--config", str(cfg), "--out", str(tmp_path / "run")]) == 0
    run = tmp_path / "run"
    lines = (run / "trace.csv").read_text().splitlines()
    assert lines[0] == "epoch,d_c,d_g,d_p,d_H,loss_mm,loss_apn,loss_gen"
    assert len(lines) == 4
    eig = (run / "eigen.csv").read_text().splitlines()
    assert eig[0] == "epoch," + ",".join(f"ev{i}" for i in range(1, 11))
    assert [r.split(",")[0] for r in eig[1:]] == ["0", "1", "2", "3"]
    manifest = json.loads((run / "manifest.json").read_text())
    assert manifest["status"] == "ok"
    assert manifest["files"]["snapshots"] == {"2": "snapshots/fake_00002.csv"}
    for name in ("generator.ckpt", "metric.ckpt", "config.txt", "snapshots/fake_00002.csv"):
        assert (run / name).exists()


def test_train_rerun_byte_identical(tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text(TINY)
    for name in ("a", "b"):
        assert main(["train", "--config", str(cfg), "--out", str(tmp_path / name)]) == 0
    for f in ("trace.csv", "eigen.csv", "generator.ckpt", "metric.ckpt"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_train_missing_mode(tmp_path, capsys):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("epochs = 2\n")
    assert main(["train", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2
    assert "'mode'" in capsys.readouterr().err


def test_train_unknown_key_line_number(tmp_path, capsys):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("mode = unconditional\nlamda3 = 1\n")
    assert main(["train", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2
    err = capsys.readouterr().err
    assert ":2:" in err and "lamda3" in err


def test_train_nonfinite_abort_code(tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text(TINY + "gen_lr = 1e300\n")
    assert main(["train", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 3
    manifest = json.loads((tmp_path / "o" / "manifest.json").read_text())
    assert manifest["status"] == "aborted"
    assert (tmp_path / "o" / "generator.ckpt").exists()


def test_descriptors_examples(tmp_path, capsys):
    two = write_csv(tmp_path / "two.csv", [[0, 0], [3, 4]])
    sq = write_csv(tmp_path / "sq.csv", [[0, 0], [1, 0], [0, 1], [1, 1]])
    assert main(["descriptors", "--input", two, "--p", "2"]) == 0
    assert float(table(capsys.readouterr().out)["diam_p2"]) == pytest.approx(5 / math.sqrt(2), abs=1e-12)
    assert main(["descriptors", "--input", sq, "--p", "1,2,8"]) == 0
    out = table(capsys.readouterr().out)
    assert float(out["diam_p2"]) == pytest.approx(1.0, abs=1e-12)
    assert float(out["diam_p8"]) == pytest.approx(oracles.p_diameter([[0, 0], [1, 0], [0, 1], [1, 1]], 8), abs=1e-12)
    assert main(["descriptors", "--input", sq, "--input2", sq]) == 0
    out = table(capsys.readouterr().out)
    assert float(out["hausdorff"]) == 0.0 and float(out["centroid_distance"]) == 0.0


def test_descriptors_ragged_and_dimension_errors(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("0,0\n1,2,3\n")
    assert main(["descriptors", "--input", str(bad)]) == 2
    ckpt = tmp_path / "m.ckpt"
    save_checkpoint(init_network(mlp_spec(3, (4,), 2), seed=0), ckpt)
    pts = write_csv(tmp_path / "p.csv", [[0, 0], [1, 1]])
    assert main(["descriptors", "--input", pts, "--metric", str(ckpt)]) == 2


def test_descriptors_with_checkpoint(tmp_path, capsys):
    net = init_network(mlp_spec(2, (5,), 3), seed=1)
    ckpt = tmp_path / "m.ckpt"
    save_checkpoint(net, ckpt)
    X = np.random.default_rng(0).normal(size=(6, 2))
    pts = write_csv(tmp_path / "p.csv", X)
    assert main(["descriptors", "--input", pts, "--metric", str(ckpt), "--p", "2"]) == 0
    out = table(capsys.readouterr().out)
    assert float(out["diam_p2"]) == pytest.approx(oracles.p_diameter(net(X), 2), rel=1e-12)


def test_diagnose_examples(tmp_path, capsys):
    two = write_csv(tmp_path / "two.csv", [[0, 0], [3, 4]])
    assert main(["diagnose", "--input", two]) == 0
    assert [float(v) for v in table(capsys.readouterr().out).values()] == [1.0, -1.0]

    same = write_csv(tmp_path / "same.csv", [[1, 2]] * 4)
    assert main(["diagnose", "--input", same, "--count", "3"]) == 0
    assert all(float(v) == 0.0 for v in table(capsys.readouterr().out).values())

    X = np.random.default_rng(3).normal(size=(8, 3))
    pts = write_csv(tmp_path / "eight.csv", X)
    pca = tmp_path / "pca.csv"
    assert main(["diagnose", "--input", pts, "--count", "8", "--pca", str(pca)]) == 0
    got = np.array([float(v) for v in table(capsys.readouterr().out).values()])
    D = np.array([[oracles.euclid(a, b) for b in X] for a in X])
    ref = oracles.jacobi_eigenvalues((D / D.max()).tolist())
    np.testing.assert_allclose(got, ref, atol=1e-8)
    assert np.loadtxt(pca, delimiter=",").shape == (8, 2)


def test_diagnose_single_point_fails(tmp_path):
    one = write_csv(tmp_path / "one.csv", [[1, 2]])
    assert main(["diagnose", "--input", one]) == 2


def test_gradcheck_command(capsys):
    assert main(["gradcheck", "--seed", "0"]) == 0
    first = capsys.readouterr().out
    assert "worst" in first
    assert main(["gradcheck", "--seed", "0"]) == 0
    assert capsys.readouterr().out == first
    assert main(["gradcheck", "--seed", "0", "--corrupt", "mm_loss"]) == 1


def test_log_env(monkeypatch, tmp_path):
    monkeypatch.setenv("MVM_LOG", "debug")
    two = write_csv(tmp_path / "two.csv", [[0, 0], [3, 4]])
    assert main(["descriptors", "--input", two]) == 0
