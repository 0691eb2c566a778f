import numpy as np
import pytest

from schedvae import cli
from schedvae.samplefile import read_sample, write_sample
from schedvae.vae import PRESETS, ModelConfig

TINY = [
    "model.block_size=8", "model.batch_size=100", "train.max_epochs=2",
    "experiment.oracle_n=300", "experiment.plots=no",
]


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_shipped_preset_files_match_tables(name):
    cfg = cli.load_config(cli.preset_path(name))
    assert cfg.model == PRESETS[name]
    assert cfg.runs == 5


def test_usage_errors_exit_1(capsys):
    assert cli.main([]) == 1
    assert cli.main(["train", "--config", "nope.cfg", "--data", "x", "--out", "y"]) == 1
    assert cli.main(["experiment", "--config", "ContRNN", "--set", "bogus", "--out", "y"]) == 1


def test_data_errors_exit_2(tmp_path):
    bad = tmp_path / "bad.txt"
    bad.write_text("p1;home:100\n")
    assert cli.main(["train", "--config", "ContRNN-Tiny", "--data", str(bad), "--out", str(tmp_path / "m")]) == 2
    assert cli.main(["generate", "--ckpt", str(tmp_path / "missing"), "-n", "3", "--out", str(tmp_path / "s")]) == 2


def test_divergence_exit_3(tmp_path, monkeypatch):
    from schedvae import pipeline

    def boom(*a, **k):
        raise pipeline.DivergenceError("loss became non-finite")

    monkeypatch.setattr(cli, "train", boom)
    assert cli.main(["experiment", "--config", "ContRNN-Tiny", "--out", str(tmp_path), "--set", "experiment.oracle_n=50"]) == 3


def test_oracle_train_generate_evaluate(tmp_path):
    data = tmp_path / "real.txt"
    assert cli.main(["oracle", "-n", "200", "--seed", "1", "--out", str(data)]) == 0
    assert len(read_sample(data)) == 200
    ckpt = tmp_path / "m.ckpt"
    args = ["train", "--config", "ContRNN-Tiny", "--data", str(data), "--out", str(ckpt),
            "--set", "model.block_size=8", "--set", "train.max_epochs=2", "--report", str(tmp_path / "t.csv")]
    assert cli.main(args) == 0
    syn = tmp_path / "syn.txt"
    assert cli.main(["generate", "--ckpt", str(ckpt), "-n", "150", "--seed", "2", "--out", str(syn)]) == 0
    assert read_sample(syn).kind == "synthetic"
    out = tmp_path / "eval"
    assert cli.main(["evaluate", "--real", str(data), "--syn", str(syn), "--out", str(out), "--no-plots"]) == 0
    assert (out / "report.csv").exists() and (out / "summary.csv").exists()


def test_experiment_is_reproducible(tmp_path):
    args = ["experiment", "--config", "ContRNN-Tiny", "--runs", "2", "--seed", "7"]
    sets = sum((["--set", s] for s in TINY), [])
    assert cli.main(args + sets + ["--out", str(tmp_path / "a")]) == 0
    assert cli.main(args + sets + ["--out", str(tmp_path / "b")]) == 0
    a = (tmp_path / "a" / "summary.csv").read_bytes()
    assert a == (tmp_path / "b" / "summary.csv").read_bytes()
    lines = a.decode().splitlines()
    assert lines[0].startswith("level,name,unit,mean,std")
    assert all(len(l.split(",")) == 7 for l in lines)


def test_single_run_leaves_std_empty(tmp_path):
    cfg = cli.load_config("ContRNN-Tiny", overrides=TINY)
    cfg.runs = 1
    text = cli.run_experiment(cfg, tmp_path).read_text().splitlines()
    assert text[1].split(",")[4] == ""


def test_rank_table_min_ties():
    ranks = cli.rank_table({"validity": [0, 0, 0], "timing": [0.3, 0.1, 0.3, 0.2]})
    assert ranks["validity"] == [1, 1, 1]
    assert ranks["timing"] == [3, 1, 3, 2]
    r = cli.rank_table({"x": [0.5, 0.2, 0.9, 0.1]})["x"]
    assert sorted(r) == [1, 2, 3, 4]


def test_sweep_step_lengths_and_validation(tmp_path):
    assert ModelConfig.from_mapping({"preset": "DiscFF", "step": "120"}).seq_len == 12
    cfg = cli.load_config("DiscFF", overrides=TINY)
    with pytest.raises(Exception, match="divide"):
        cli.step_size_sweep(cfg, [7], tmp_path)
    out = cli.step_size_sweep(cfg, [60, 120], tmp_path)
    rows = out.read_text().splitlines()
    assert rows[0] == "metric,60min,120min"
    assert len(rows) == 1 + len(cli.RANK_METRICS)
    with pytest.raises(cli.UsageError):
        cli.step_size_sweep(cli.load_config("ContRNN-Tiny", overrides=TINY), [10], tmp_path)
