"""Tests for the command-line interface."""

import json

import pytest

from selfclassifier import __version__
from selfclassifier.main import main

TINY_RUN = """\
# tiny run over a 4-d mixture
data_classes = 4
data_dim = 4
data_samples = 64
encoder_layers = 8
proj_hidden = 8
proj_out = 4
head_sizes = 4, 8
batch_size = 16
epochs = 2
eval_every = 1
warmup_epochs = 1
base_lr = 0.02
warmup_start_lr = 0.01
final_lr = 0.0001
queue_capacity = 64
"""


@pytest.fixture
def run_config_file(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text(TINY_RUN)
    return path


@pytest.fixture
def trained_run(run_config_file, tmp_path, capsys):
    """Train once and return the output directory."""
    output_dir = tmp_path / "run"
    assert main(["train", "--config", str(run_config_file), "--output-dir", str(output_dir)]) == 0
    capsys.readouterr()
    return output_dir


def test_version(capsys):
    """Test --version exits cleanly."""
    assert main(["--version"]) == 0
    assert __version__ in capsys.readouterr().out


def test_usage_errors():
    """Test that argparse errors map to exit code 1."""
    assert main([]) == 1
    assert main(["fly"]) == 1
    assert main(["train", "--config", "a", "--preset", "desk"]) == 1


def test_gen_data(tmp_path):
    """Test gen-data writes a dataset CSV."""
    out = tmp_path / "data.csv"
    assert main(["gen-data", "--out", str(out), "--classes", "3", "--dim", "2", "--samples", "30"]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "f0,f1,label"
    assert len(lines) == 31


def test_gen_data_invalid_sizes(tmp_path):
    """Test exit code 1 for an invalid generator request."""
    assert main(["gen-data", "--out", str(tmp_path / "d.csv"), "--classes", "1"]) == 1


def test_train_writes_artifacts(run_config_file, tmp_path, capsys):
    """Test train prints the report path and writes every artifact."""
    output_dir = tmp_path / "run"
    code = main(["train", "--config", str(run_config_file), "--output-dir", str(output_dir)])
    assert code == 0
    assert capsys.readouterr().out.strip() == str(output_dir / "report.json")
    for name in ["model.ckpt", "report.json", "timing.json", "epochs.csv", "metrics.csv"]:
        assert (output_dir / name).exists()
    report = json.loads((output_dir / "report.json").read_text())
    assert len(report["epochs"]) == 2
    assert "wall_time_s" in json.loads((output_dir / "timing.json").read_text())


def test_train_overrides(run_config_file, tmp_path):
    """Test --set applied on top of the config file."""
    output_dir = tmp_path / "run"
    code = main(
        ["train", "--config", str(run_config_file), "--set", "epochs=1", "--output-dir", str(output_dir)]
    )
    assert code == 0
    report = json.loads((output_dir / "report.json").read_text())
    assert len(report["epochs"]) == 1


def test_train_config_errors(tmp_path):
    """Test exit code 1 for missing files, unknown keys and a missing source."""
    assert main(["train", "--config", str(tmp_path / "absent.cfg")]) == 1
    bad = tmp_path / "bad.cfg"
    bad.write_text("colour = blue\n")
    assert main(["train", "--config", str(bad)]) == 1
    assert main(["train"]) == 1


def test_train_non_finite_data_aborts(run_config_file, tmp_path):
    """Test exit code 2 when training hits non-finite values."""
    data = tmp_path / "inf.csv"
    rows = ["f0,f1,f2,f3,label"] + [f"{i},1,2,3,{i % 2}" for i in range(31)] + ["inf,1,2,3,1"]
    data.write_text("\n".join(rows) + "\n")
    code = main(
        [
            "train",
            "--config",
            str(run_config_file),
            "--set",
            f"data_path={data}",
            "--output-dir",
            str(tmp_path / "run"),
        ]
    )
    assert code == 2


def test_eval_prints_metrics(trained_run, tmp_path, capsys):
    """Test eval on the training data with a hierarchy and metrics file."""
    data = tmp_path / "data.csv"
    assert main(["gen-data", "--out", str(data), "--classes", "4", "--dim", "4", "--samples", "64"]) == 0
    hierarchy = tmp_path / "h.tsv"
    hierarchy.write_text("leaf\tlevel\tsuper\n0\tpairs\t0\n1\tpairs\t0\n2\tpairs\t1\n3\tpairs\t1\n")
    out = tmp_path / "metrics.json"
    capsys.readouterr()

    code = main(
        [
            "eval",
            "--checkpoint",
            str(trained_run / "model.ckpt"),
            "--data",
            str(data),
            "--hierarchy",
            str(hierarchy),
            "--knn-k",
            "5",
            "--out",
            str(out),
        ]
    )
    assert code == 0
    printed = json.loads(capsys.readouterr().out)
    assert printed == json.loads(out.read_text())
    assert printed["knn_k"] == 5
    assert printed["heads"][0]["levels"][0]["level"] == "pairs"
    assert (tmp_path / "metrics.csv").exists()


def test_eval_bad_checkpoint(tmp_path):
    """Test exit code 1 for a file that is not a checkpoint."""
    data = tmp_path / "data.csv"
    main(["gen-data", "--out", str(data), "--dim", "2", "--samples", "20"])
    ckpt = tmp_path / "model.ckpt"
    ckpt.write_bytes(b"garbage")
    assert main(["eval", "--checkpoint", str(ckpt), "--data", str(data)]) == 1


def test_report_renders_tables(trained_run, tmp_path, capsys):
    """Test report re-renders the CSV tables into another directory."""
    out = tmp_path / "tables"
    assert main(["report", "--report", str(trained_run / "report.json"), "--out", str(out)]) == 0
    assert (out / "epochs.csv").exists()
    assert (out / "metrics.csv").exists()


def test_grad_check_exit_codes(capsys):
    """Test exit 0 at the default tolerance and 3 when nothing can pass."""
    assert main(["grad-check"]) == 0
    assert "heads.0.weight" in capsys.readouterr().out
    assert main(["grad-check", "--tolerance", "1e-30"]) == 3
