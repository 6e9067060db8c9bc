import json

import pandas as pd
import pytest

from trap_prisma.analytics.baseline import baseline_success
from trap_prisma.cli import main

small = {
    "width": 4,
    "height": 8,
    "target_width": 4,
    "target_height": 4,
    "trials": 6,
    "seed": 3,
}


def write_config(tmp_path, **values):
    path = tmp_path / "config.json"
    path.write_text(json.dumps({**small, **values}))
    return str(path)


def test_baseline_single_point(tmp_path):
    out = tmp_path / "out"
    config = write_config(tmp_path, sweep_targets=[32], sweep_traps=[64])
    assert main(["baseline", "--config", config, "--out", str(out)]) == 0
    table = pd.read_csv(out / "baseline.csv")
    assert len(table) == 1
    assert table["success"][0] == pytest.approx(baseline_success(64, 0.6, 32))
    summary = json.loads((out / "summary.json").read_text())
    assert summary["command"] == "baseline"
    assert (out / "fig3a.csv").exists()
    assert (out / "fig3b.csv").exists()


def test_simulate_and_replay(tmp_path):
    out = tmp_path / "out"
    lossless = {"epsilon": 0.7, "p_alpha": 1.0, "p_nu": 1.0, "tau": None}
    config = write_config(tmp_path, loss=lossless, trace_trials=2)
    assert main(["simulate", "--config", config, "--out", str(out)]) == 0

    trials = pd.read_csv(out / "trials.csv")
    assert len(trials) == 6
    assert {"trial", "success", "cycles", "initial_atoms", "time_total"} <= set(trials.columns)
    for name in ("summary.json", "metadata.json", "trials.json", "fig4b.csv", "fig4c.csv", "fig5b.csv", "fig5c.csv"):
        assert (out / name).exists()

    trace = out / "traces" / "trial_00000.jsonl"
    replay_out = tmp_path / "replay"
    assert main(["replay", "--trace", str(trace), "--out", str(replay_out)]) == 0
    replay = json.loads((replay_out / "summary.json").read_text())
    assert replay["violations"] == []
    assert replay["contains_target"] == bool(trials["success"][0])


def test_simulate_is_reproducible(tmp_path):
    out = tmp_path / "out"
    config = write_config(tmp_path)
    assert main(["simulate", "--config", config, "--out", str(out)]) == 0
    first = (out / "trials.csv").read_bytes()
    summary = (out / "summary.json").read_bytes()
    assert main(["simulate", "--config", config, "--out", str(out)]) == 0
    assert (out / "trials.csv").read_bytes() == first
    assert (out / "summary.json").read_bytes() == summary


def test_benchmark_and_threshold(tmp_path):
    out = tmp_path / "out"
    config = write_config(tmp_path, benchmark_sides=[4], benchmark_samples=3)
    assert main(["benchmark", "--config", config, "--out", str(out)]) == 0
    assert len(pd.read_csv(out / "benchmark.csv")) == 1
    assert (out / "fig2a.csv").exists()

    assert main(["simulate", "--config", config, "--out", str(out)]) == 0
    assert main(["threshold", "--config", config, "--out", str(out), "--records", str(out / "trials.json")]) == 0
    assert (out / "threshold.csv").exists()
    assert (out / "fig6e.csv").exists()


def test_bad_config_exit_code(tmp_path):
    config = write_config(tmp_path, unknown_key=1)
    assert main(["simulate", "--config", config, "--out", str(tmp_path / "out")]) == 2


def test_missing_trace_exit_code(tmp_path):
    assert main(["replay", "--trace", str(tmp_path / "missing.jsonl"), "--out", str(tmp_path)]) == 2


def test_unreachable_threshold_exit_code(tmp_path):
    config = write_config(tmp_path, threshold=10_000)
    assert main(["simulate", "--config", config, "--out", str(tmp_path / "out")]) == 2
