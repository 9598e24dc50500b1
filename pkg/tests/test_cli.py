import hashlib
import json
from pathlib import Path

import pytest
from click.testing import CliRunner

from vegshelf.cli import main

from conftest import build_tree


@pytest.fixture
def runner():
    return CliRunner()


def test_scan(runner, small_tree, tmp_path):
    out = tmp_path / "samples.json"
    result = runner.invoke(main, ["scan", "--root", str(small_tree), "--out", str(out)])
    assert result.exit_code == 0, result.output
    payload = json.loads(out.read_text())
    assert len(payload["samples"]) == 36
    assert payload["tool"] == "vegshelf"


def test_split_deterministic(runner, small_tree, tmp_path):
    args = ["split", "--root", str(small_tree), "--seed", "42"]
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert runner.invoke(main, args + ["--out", str(a)]).exit_code == 0
    assert runner.invoke(main, args + ["--out", str(b)]).exit_code == 0
    assert a.read_text() == b.read_text()


def test_corrupt_count_zero_identity(runner, small_tree, tmp_path):
    out = tmp_path / "noisy"
    result = runner.invoke(main, ["corrupt", "--in", str(small_tree), "--out", str(out),
                                  "--count", "0", "--seed", "3"])
    assert result.exit_code == 0, result.output
    for src in sorted(small_tree.rglob("*.png")):
        dst = out / src.relative_to(small_tree)
        assert hashlib.sha256(dst.read_bytes()).digest() == \
            hashlib.sha256(src.read_bytes()).digest()


def test_reproduce_table5(runner, tmp_path):
    out = tmp_path / "table5.csv"
    result = runner.invoke(main, ["reproduce-table5", "--out", str(out)])
    assert result.exit_code == 0, result.output
    lines = out.read_text().strip().splitlines()
    assert len(lines) == 11
    row = next(l for l in lines if l.startswith("mobilenetv2_deit_fusion"))
    _, veg, spoil, mse_d, smape_d = row.split(",")
    assert float(veg) == pytest.approx(0.01, abs=0.01)
    assert float(spoil) == pytest.approx(-0.06, abs=0.01)
    assert float(mse_d) == pytest.approx(-2.38, abs=0.01)
    assert float(smape_d) == pytest.approx(-3.02, abs=0.01)


def test_unknown_flag_usage_error(runner):
    result = runner.invoke(main, ["scan", "--bogus"])
    assert result.exit_code == 2


def test_train_then_evaluate_smoke(runner, tmp_path):
    root = build_tree(tmp_path / "tree", ["tomato", "brinjal"], [(1, 1), (2, 2), (3, 3)])
    manifest = tmp_path / "manifest.json"
    assert runner.invoke(main, ["split", "--root", str(root), "--ratios", "0.5", "0.25",
                                "0.25", "--out", str(manifest)]).exit_code == 0

    config = tmp_path / "train.json"
    config.write_text(json.dumps({"learning_rate": 1e-3, "epochs": 2,
                                  "batch_size": 12, "seed": 0}))
    out = tmp_path / "runs"
    result = runner.invoke(main, [
        "train", "--root", str(root), "--manifest", str(manifest),
        "--model-id", "mobilenetv2", "--config", str(config),
        "--input-size", "64", "--out", str(out)])
    assert result.exit_code == 0, result.output
    model_dir = out / "mobilenetv2"
    assert (model_dir / "weights.pt").is_file()
    assert (model_dir / "spec.json").is_file()
    history = json.loads((model_dir / "history.json").read_text())
    assert len(history["epochs"]) == 2

    report_path = tmp_path / "report.json"
    result = runner.invoke(main, [
        "evaluate", "--model-dir", str(model_dir), "--root", str(root),
        "--manifest", str(manifest), "--split", "test", "--out", str(report_path)])
    assert result.exit_code == 0, result.output
    report = json.loads(report_path.read_text())[0]
    assert report["n_samples"] > 0
    assert 0 <= report["vegetable_f1"] <= 1
    assert report["mse"] >= 0


def test_explain_cli(runner, tmp_path):
    root = build_tree(tmp_path / "tree", ["tomato", "brinjal"], [(1, 1), (2, 2)])
    manifest = tmp_path / "m.json"
    runner.invoke(main, ["split", "--root", str(root), "--out", str(manifest)])
    config = tmp_path / "c.json"
    config.write_text(json.dumps({"epochs": 1, "batch_size": 12}))
    runner.invoke(main, ["train", "--root", str(root), "--manifest", str(manifest),
                         "--model-id", "mobilenetv2", "--config", str(config),
                         "--input-size", "64", "--out", str(tmp_path / "runs")])
    image = next(root.rglob("*.png"))
    out_dir = tmp_path / "expl"
    result = runner.invoke(main, [
        "explain", "--model-dir", str(tmp_path / "runs" / "mobilenetv2"),
        "--image", str(image), "--segments", "12", "--samples", "60",
        "--seed", "1", "--out", str(out_dir)])
    assert result.exit_code == 0, result.output
    assert (out_dir / "explanation.json").is_file()
    for head in ("vegetable", "spoilage", "day"):
        assert (out_dir / f"overlay_{head}.png").is_file()
