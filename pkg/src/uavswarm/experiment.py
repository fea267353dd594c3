"""Multi-seed, multi-strategy experiment orchestration and file output.

Output layout under ``config.output_dir``::

    config.txt                     validated config (flat key = value)
    runs/<strategy>/seed_<k>.csv   per-iteration series
    runs/<strategy>/seed_<k>.json  run summary (config echo, stop reason, positions)
    aggregate_<strategy>.csv       mean and std over seeds per iteration
    figures/fig*.csv               figure-ready tables
    failures.json                  only if some run raised

Every CSV starts with ``#`` comment lines carrying the config hash and
seed(s); the body after them is a plain CSV table.  Floats are written
with ``repr`` so identical runs produce identical bytes.
"""
from __future__ import annotations

import csv
import io
import json
import logging
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .baselines import run_strategy
from .config import ExperimentConfig, parse_config, write_config_file
from .engine import RunRecord
from .errors import ConfigError
from .state import state_from_dict, state_to_dict

log = logging.getLogger(__name__)

FIGURES = ("fig3", "fig4", "fig5", "fig6", "fig7")
TREND_WINDOW = 25


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    records: list = field(default_factory=list)
    failures: list = field(default_factory=list)
    files: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures

    def by_strategy(self, kind) -> list:
        return [r for r in self.records if r.strategy == kind]


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def _snr_label(db) -> str:
    return f"capacity@{db:g}dB"


def record_columns(rec: RunRecord) -> list[str]:
    cols = ["iter", "phi", "mean_reward", "rank"]
    cols += [_snr_label(db) for db in rec.config.snr_db]
    cols += ["stay_probability", "uav", "explored", "accepted"]
    cols += [f"r_{m}" for m in range(rec.rewards.shape[1])]
    return cols


def record_rows(rec: RunRecord):
    mean = rec.mean_reward
    for t in range(rec.iterations):
        row = [t + 1, rec.phi[t], mean[t], rec.rank[t], *rec.capacity[t],
               rec.stay_probability[t], rec.uav[t], rec.explored[t], rec.accepted[t],
               *rec.rewards[t]]
        yield [_fmt(v) for v in row]


def _header(lines: dict) -> str:
    return "".join(f"# {k}={v}\n" for k, v in lines.items())


def _table(columns, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    w.writerows(rows)
    return buf.getvalue()


def record_csv(rec: RunRecord) -> str:
    head = _header({"config_hash": rec.config.digest(), "seed": rec.seed,
                    "strategy": rec.label or rec.strategy})
    return head + _table(record_columns(rec), record_rows(rec))


def csv_body(text: str) -> str:
    """Strip the ``#`` header lines."""
    return "".join(line for line in text.splitlines(keepends=True) if not line.startswith("#"))


def read_csv(path) -> tuple[dict, list[str], np.ndarray]:
    """Return ``(header, columns, data)`` of a file written by this module."""
    text = Path(path).read_text()
    header = {}
    for line in text.splitlines():
        if line.startswith("# ") and "=" in line:
            k, v = line[2:].split("=", 1)
            header[k] = v
    rows = list(csv.reader(io.StringIO(csv_body(text))))
    cols = rows[0]
    data = np.array([[float(v) for v in r] for r in rows[1:]]) if len(rows) > 1 \
        else np.empty((0, len(cols)))
    return header, cols, data


def record_summary(rec: RunRecord) -> dict:
    last = rec.iterations - 1
    final = {}
    if rec.iterations:
        final = {"phi": float(rec.phi[last]), "mean_reward": float(rec.mean_reward[last]),
                 "rank": int(rec.rank[last]),
                 "capacity": {_snr_label(db): float(c)
                              for db, c in zip(rec.config.snr_db, rec.capacity[last])}}
    return {
        "config": rec.config.to_dict(),
        "config_hash": rec.config.digest(),
        "seed": rec.seed,
        "strategy": rec.strategy,
        "label": rec.label or rec.strategy,
        "stop_reason": rec.stop_reason,
        "iterations": rec.iterations,
        "initial_state": state_to_dict(rec.initial_state),
        "final_state": state_to_dict(rec.final_state),
        "final_positions": rec.final_state.positions.tolist(),
        "snapshots": {str(k): np.asarray(v).tolist() for k, v in sorted(rec.snapshots.items())},
        "final": final,
    }


def load_record(csv_path) -> RunRecord:
    """Rebuild a :class:`RunRecord` from its CSV and JSON files."""
    csv_path = Path(csv_path)
    summary = json.loads(csv_path.with_suffix(".json").read_text())
    cfg_dict = summary["config"]
    config = ExperimentConfig(**{k: tuple(v) if isinstance(v, list) else v
                                 for k, v in cfg_dict.items()})
    _, cols, data = read_csv(csv_path)
    ix = {c: i for i, c in enumerate(cols)}
    rcols = [i for c, i in ix.items() if c.startswith("r_")]
    caps = [ix[_snr_label(db)] for db in config.snr_db]
    rec = RunRecord(summary["strategy"], summary["seed"], config,
                    state_from_dict(summary["initial_state"]),
                    state_from_dict(summary["final_state"]), summary["stop_reason"],
                    phi=data[:, ix["phi"]], rewards=data[:, rcols],
                    rank=data[:, ix["rank"]].astype(np.int64), capacity=data[:, caps],
                    stay_probability=data[:, ix["stay_probability"]],
                    uav=data[:, ix["uav"]].astype(np.int64),
                    explored=data[:, ix["explored"]].astype(bool),
                    accepted=data[:, ix["accepted"]].astype(bool),
                    label=summary["label"])
    for k, cells in summary["snapshots"].items():
        rec.snapshots[int(k)] = np.asarray(cells, dtype=np.int64)
    return rec


def load_records(out_dir) -> list[RunRecord]:
    paths = sorted(Path(out_dir, "runs").glob("*/seed_*.csv"),
                   key=lambda p: (p.parent.name, int(p.stem.split("_", 1)[1])))
    return [load_record(p) for p in paths]


def _padded(series: list[np.ndarray]) -> np.ndarray:
    """Stack per-seed series; runs that stopped early hold their last value."""
    n = max(len(s) for s in series)
    out = np.empty((len(series), n) + series[0].shape[1:])
    for i, s in enumerate(series):
        out[i, :len(s)] = s
        out[i, len(s):] = s[-1]
    return out


AGG_METRICS = ("phi", "mean_reward", "rank")


def aggregate(records: list[RunRecord]):
    """Per-iteration mean and (population) std over seeds."""
    cfg = records[0].config
    blocks = {"phi": [r.phi for r in records], "mean_reward": [r.mean_reward for r in records],
              "rank": [r.rank.astype(float) for r in records]}
    for j, db in enumerate(cfg.snr_db):
        blocks[_snr_label(db)] = [r.capacity[:, j] for r in records]
    stats = {}
    for k, series in blocks.items():
        X = _padded(series)
        stats[k] = (X.mean(axis=0), X.std(axis=0))
    return stats


def aggregate_csv(records: list[RunRecord]) -> str:
    stats = aggregate(records)
    cfg = records[0].config
    n = len(next(iter(stats.values()))[0])
    cols = ["iter", "n_seeds"]
    for k in stats:
        cols += [f"{k}_mean", f"{k}_std"]
    rows = []
    for t in range(n):
        row = [_fmt(t + 1), _fmt(len(records))]
        for mean, std in stats.values():
            row += [_fmt(mean[t]), _fmt(std[t])]
        rows.append(row)
    head = _header({"config_hash": cfg.digest(),
                    "seeds": ",".join(str(r.seed) for r in records),
                    "strategy": records[0].label or records[0].strategy})
    return head + _table(cols, rows)


def moving_average(x, window: int = TREND_WINDOW) -> np.ndarray:
    """Centered moving average; the window shrinks symmetrically at the ends."""
    x = np.asarray(x, dtype=float)
    n = len(x)
    half = window // 2
    c = np.concatenate([[0.0], np.cumsum(x)])
    out = np.empty(n)
    for i in range(n):
        h = min(half, i, n - 1 - i)
        out[i] = (c[i + h + 1] - c[i - h]) / (2 * h + 1)
    return out


def _figure_header(records, figure, extra=None) -> dict:
    h = {"figure": figure, "config_hash": records[0].config.digest(),
         "seeds": ",".join(str(s) for s in sorted({r.seed for r in records}, key=str))}
    h.update(extra or {})
    return h


def _write(path: Path, text: str) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    return path


def emit_figure_data(records: list[RunRecord], figure: str, out_dir) -> list[Path]:
    """Write the flat tables behind one figure; returns the paths written.

    ``fig3`` stay probability, ``fig4`` reward per strategy, ``fig5``
    initial/final positions, ``fig6`` rank, ``fig7`` capacity per SNR with
    a centered moving-average trend.
    """
    if figure not in FIGURES:
        raise ConfigError(f"unknown figure {figure!r}; choose from {FIGURES}")
    if not records:
        raise ConfigError("no run records to build figures from")
    out = Path(out_dir) / "figures"
    learning = [r for r in records if r.strategy == "learning"] or records
    written = []

    def per_seed(recs, getter, name):
        X = _padded([getter(r) for r in recs])
        cols = ["iter"] + [f"seed_{r.seed}" for r in recs] + ["mean"]
        rows = [[_fmt(t + 1)] + [_fmt(v) for v in X[:, t]] + [_fmt(X[:, t].mean())]
                for t in range(X.shape[1])]
        return _header(_figure_header(recs, name)) + _table(cols, rows)

    if figure == "fig3":
        written.append(_write(out / "fig3_stay_probability.csv",
                              per_seed(learning, lambda r: r.stay_probability, "fig3")))
    elif figure == "fig6":
        written.append(_write(out / "fig6_rank.csv",
                              per_seed(learning, lambda r: r.rank.astype(float), "fig6")))
    elif figure == "fig4":
        labels = []
        for r in records:
            lab = r.label or r.strategy
            if lab not in labels:
                labels.append(lab)
        cols, series = ["iter"], []
        for lab in labels:
            X = _padded([r.mean_reward for r in records if (r.label or r.strategy) == lab])
            series += [X.mean(axis=0), X.std(axis=0)]
            cols += [f"{lab}_mean", f"{lab}_std"]
        n = max(len(s) for s in series)
        rows = [[_fmt(t + 1)] + [_fmt(s[min(t, len(s) - 1)]) for s in series] for t in range(n)]
        written.append(_write(out / "fig4_reward.csv",
                              _header(_figure_header(records, "fig4")) + _table(cols, rows)))
    elif figure == "fig5":
        for r in learning:
            for tag, st in (("initial", r.initial_state), ("final", r.final_state)):
                rows = [[_fmt(m)] + [_fmt(v) for v in p] for m, p in enumerate(st.positions)]
                head = _header(_figure_header([r], "fig5", {"seed": r.seed, "positions": tag}))
                written.append(_write(out / f"fig5_seed{r.seed}_{tag}.csv",
                                      head + _table(["uav", "x", "y", "z"], rows)))
    elif figure == "fig7":
        cfg = learning[0].config
        cols, series = ["iter"], []
        for j, db in enumerate(cfg.snr_db):
            X = _padded([r.capacity[:, j] for r in learning]).mean(axis=0)
            series += [X, moving_average(X)]
            cols += [_snr_label(db), f"{_snr_label(db)}_trend"]
        rows = [[_fmt(t + 1)] + [_fmt(s[t]) for s in series] for t in range(len(series[0]))]
        head = _header(_figure_header(learning, "fig7", {
            "trend": f"centered-moving-average window={TREND_WINDOW}"}))
        written.append(_write(out / "fig7_capacity.csv", head + _table(cols, rows)))
    return written


def _task(args):
    config, seed, kind = args
    try:
        return run_strategy(config, seed, kind), None
    except Exception as exc:  # reported in the failure manifest
        return None, {"seed": seed, "strategy": kind, "error": repr(exc),
                      "traceback": traceback.format_exc()}


def run_experiment(config: ExperimentConfig, write: bool = True) -> ExperimentResult:
    """Run every ``(seed, strategy)`` pair and write outputs.

    Failures do not abort the batch; they are collected, the remaining
    outputs are still written and ``failures.json`` lists what went wrong.
    """
    tasks = [(config, seed, kind) for kind in config.strategies for seed in config.seeds]
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            results = list(pool.map(_task, tasks))
    else:
        results = [_task(t) for t in tasks]
    res = ExperimentResult(config)
    for rec, fail in results:
        if fail:
            log.error("run failed: seed=%s strategy=%s: %s", fail["seed"], fail["strategy"],
                      fail["error"])
            res.failures.append(fail)
        else:
            res.records.append(rec)
    if write:
        res.files = write_outputs(res)
    return res


def write_outputs(res: ExperimentResult) -> list[Path]:
    out = Path(res.config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    files = []
    write_config_file(res.config, out / "config.txt")
    files.append(out / "config.txt")
    for rec in res.records:
        base = out / "runs" / rec.strategy / f"seed_{rec.seed}"
        files.append(_write(base.with_suffix(".csv"), record_csv(rec)))
        files.append(_write(base.with_suffix(".json"),
                            json.dumps(record_summary(rec), indent=1, sort_keys=True)))
    for kind in res.config.strategies:
        recs = res.by_strategy(kind)
        if recs:
            files.append(_write(out / f"aggregate_{kind}.csv", aggregate_csv(recs)))
    manifest = out / "failures.json"
    if res.failures:
        files.append(_write(manifest, json.dumps(res.failures, indent=1)))
    elif manifest.exists():
        manifest.unlink()
    return files


__all__ = ["ExperimentResult", "run_experiment", "emit_figure_data", "parse_config",
           "load_records", "aggregate", "moving_average", "record_csv", "csv_body", "read_csv"]
