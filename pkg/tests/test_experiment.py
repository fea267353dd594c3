import json

import numpy as np
import pytest

from uavswarm import experiment
from uavswarm.cli import main
from uavswarm.config import ExperimentConfig
from uavswarm.errors import ConfigError, InitError
from uavswarm.experiment import (csv_body, emit_figure_data, load_records, moving_average,
                                 read_csv, run_experiment)

SMALL = dict(n_uavs=4, volume=(30.0, 30.0, 30.0), comm_radius=20.0, ura_nx=4, ura_ny=4,
             max_iterations=40)


@pytest.fixture(scope="module")
def batch(tmp_path_factory):
    out = tmp_path_factory.mktemp("batch")
    cfg = ExperimentConfig(seeds=(0, 1, 2), strategies=("learning", "random-moving", "static"),
                           output_dir=str(out), **SMALL)
    return run_experiment(cfg)


def test_one_record_per_seed_and_strategy(batch):
    assert batch.ok and len(batch.records) == 9
    out = batch.config.output_dir
    for kind in batch.config.strategies:
        header, cols, data = read_csv(f"{out}/aggregate_{kind}.csv")
        assert header["seeds"] == "0,1,2" and len(data) == 40
        assert cols[:2] == ["iter", "n_seeds"] and "capacity@10dB_mean" in cols


def test_headers_carry_hash_and_seed(batch):
    out = batch.config.output_dir
    for rec in batch.records:
        header, _, _ = read_csv(f"{out}/runs/{rec.strategy}/seed_{rec.seed}.csv")
        assert header["config_hash"] == batch.config.digest()
        assert header["seed"] == str(rec.seed)
        summary = json.loads(open(f"{out}/runs/{rec.strategy}/seed_{rec.seed}.json").read())
        assert summary["config"]["n_uavs"] == 4 and summary["config_hash"] == header["config_hash"]


def test_aggregate_recomputable_from_run_files(batch):
    out = batch.config.output_dir
    _, cols, agg = read_csv(f"{out}/aggregate_learning.csv")
    runs = [read_csv(f"{out}/runs/learning/seed_{s}.csv") for s in (0, 1, 2)]
    for metric in ("phi", "mean_reward", "rank", "capacity@20dB"):
        X = np.array([d[:, c.index(metric)] for _, c, d in runs])
        np.testing.assert_allclose(agg[:, cols.index(f"{metric}_mean")], X.mean(axis=0),
                                   rtol=1e-12)
        np.testing.assert_allclose(agg[:, cols.index(f"{metric}_std")], X.std(axis=0),
                                   rtol=1e-9, atol=1e-12)


def test_rerun_is_byte_identical(batch, tmp_path):
    cfg = batch.config.replace(output_dir=str(tmp_path), workers=2)
    run_experiment(cfg)
    for rec in batch.records:
        rel = f"runs/{rec.strategy}/seed_{rec.seed}.csv"
        a = open(f"{batch.config.output_dir}/{rel}").read()
        b = open(f"{tmp_path}/{rel}").read()
        assert csv_body(a) == csv_body(b) and a == b


def test_records_round_trip(batch):
    loaded = load_records(batch.config.output_dir)
    assert len(loaded) == 9
    by_key = {(r.strategy, r.seed): r for r in batch.records}
    for r in loaded:
        orig = by_key[(r.strategy, r.seed)]
        np.testing.assert_array_equal(r.rewards, orig.rewards)
        np.testing.assert_array_equal(r.final_state.cells, orig.final_state.cells)
        assert r.stop_reason == orig.stop_reason


def test_figure_tables(batch, tmp_path):
    recs = batch.records
    paths = emit_figure_data(recs, "fig5", tmp_path)
    assert len(paths) == 6
    for p in paths:
        _, cols, data = read_csv(p)
        assert cols == ["uav", "x", "y", "z"] and data.shape == (4, 4)
    (p4,) = emit_figure_data(recs, "fig4", tmp_path)
    _, cols, data = read_csv(p4)
    static = data[:, cols.index("static_mean")]
    assert np.all(static == static[0])
    (p6,) = emit_figure_data(recs, "fig6", tmp_path)
    _, cols, data = read_csv(p6)
    finals = {r.seed: r.rank[-1] for r in batch.by_strategy("learning")}
    assert data[-1, cols.index("seed_0")] == finals[0]
    (p7,) = emit_figure_data(recs, "fig7", tmp_path)
    header, cols, _ = read_csv(p7)
    assert header["trend"] == "centered-moving-average window=25"
    assert "capacity@0dB_trend" in cols
    (p3,) = emit_figure_data(recs, "fig3", tmp_path)
    assert read_csv(p3)[2].shape == (40, 5)


def test_unknown_figure(batch, tmp_path):
    with pytest.raises(ConfigError):
        emit_figure_data(batch.records, "fig2", tmp_path)
    with pytest.raises(ConfigError):
        emit_figure_data([], "fig3", tmp_path)


def test_moving_average():
    np.testing.assert_allclose(moving_average(np.full(40, 3.0)), 3.0)
    x = np.arange(60, dtype=float)
    np.testing.assert_allclose(moving_average(x), x)  # linear data is preserved
    y = np.random.default_rng(0).random(60)
    assert moving_average(y)[30] == pytest.approx(y[18:43].mean())


def test_failures_are_collected(tmp_path, monkeypatch):
    real = experiment.run_strategy

    def flaky(config, seed, kind, channel=None):
        if seed == 1:
            raise InitError("no connected placement")
        return real(config, seed, kind, channel)

    monkeypatch.setattr(experiment, "run_strategy", flaky)
    cfg = ExperimentConfig(seeds=(0, 1), output_dir=str(tmp_path), **SMALL)
    res = run_experiment(cfg)
    assert not res.ok and len(res.records) == 1
    manifest = json.loads((tmp_path / "failures.json").read_text())
    assert manifest[0]["seed"] == 1 and "InitError" in manifest[0]["error"]
    assert (tmp_path / "runs/learning/seed_0.csv").exists()


def test_cli_run_and_figures(tmp_path, capsys):
    out = tmp_path / "o"
    code = main(["run", "--uavs", "3", "--iterations", "30", "--volume", "30,30,30",
                 "--radius", "20", "--seeds", "2", "--strategy", "learning,static",
                 "--out", str(out)])
    assert code == 0
    assert sorted(p.name for p in (out / "runs/learning").iterdir()) == [
        "seed_0.csv", "seed_0.json", "seed_1.csv", "seed_1.json"]
    assert main(["figures", str(out), "all"]) == 0
    assert len(list((out / "figures").glob("fig*.csv"))) == 4 + 2 * 2
    capsys.readouterr()


def test_cli_failure_exit(tmp_path, capsys):
    code = main(["run", "--uavs", "6", "--iterations", "5", "--radius", "1", "--init-retries",
                 "2", "--seed", "0", "--out", str(tmp_path)])
    assert code == 1
    assert (tmp_path / "failures.json").exists()
    assert main(["run", "--uavs", "-3", "--out", str(tmp_path)]) == 2
    assert "n_uavs" in capsys.readouterr().err


def test_cli_oracle(tmp_path, capsys):
    report = tmp_path / "oracle.json"
    assert main(["oracle", "--trials", "20", "--report", str(report)]) == 0
    data = json.loads(report.read_text())
    assert data["verdict"] == "pass"
    assert data["move_structure"]["states"] == 48 * 47
    capsys.readouterr()
