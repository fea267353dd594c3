"""Command line: ``uavswarm run | oracle | figures``.

Every ``ExperimentConfig`` field is available as ``--field-name``; the
short aliases ``--uavs``, ``--iterations``, ``--snr``, ``--strategy`` and
``--out`` are accepted too.  ``--seed K`` runs a single seed and
``--seeds N`` runs seeds ``0 .. N-1``.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

from .config import ALIASES, FIELDS, ExperimentConfig, parse_config
from .errors import SwarmError
from .experiment import FIGURES, emit_figure_data, load_records, run_experiment

log = logging.getLogger("uavswarm")

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="flat key = value config file")
    short = {v: k for k, v in ALIASES.items()}
    for name in FIELDS:
        if name in ("seeds", "output_dir"):
            continue
        flags = [f"--{name.replace('_', '-')}"]
        if name in short and short[name] not in ("out",):
            flags.append(f"--{short[name]}")
        p.add_argument(*flags, dest=name, metavar="VALUE", default=None,
                       help=f"override {name}")
    p.add_argument("--seed", type=int, help="run a single seed")
    p.add_argument("--seeds", type=int, metavar="N", help="run seeds 0..N-1")
    p.add_argument("--seed-list", help="explicit comma separated seeds")
    p.add_argument("--out", "--output-dir", dest="output_dir", type=str, default=None,
                   help="output directory (default: $UAVSWARM_OUT or ./runs)")


def config_from_args(args) -> ExperimentConfig:
    overrides = {k: getattr(args, k) for k in FIELDS if k != "seeds" and hasattr(args, k)}
    if args.seed is not None:
        overrides["seeds"] = str(args.seed)
    elif args.seeds is not None:
        if args.seeds < 1:
            raise SwarmError("--seeds must be >= 1")
        overrides["seeds"] = ",".join(str(i) for i in range(args.seeds))
    elif args.seed_list:
        overrides["seeds"] = args.seed_list
    return parse_config(args.config, overrides)


def cmd_run(args) -> int:
    config = config_from_args(args)
    t0 = time.perf_counter()
    res = run_experiment(config)
    for kind in config.strategies:
        for rec in res.by_strategy(kind):
            last = rec.iterations - 1
            log.info("%s seed=%s iterations=%d stop=%s mean_reward=%.4f rank=%d",
                     rec.label or kind, rec.seed, rec.iterations, rec.stop_reason,
                     rec.mean_reward[last], rec.rank[last])
    for fig in args.figures or ():
        emit_figure_data(res.records, fig, config.output_dir)
    print(json.dumps({"output_dir": str(config.output_dir), "config_hash": config.digest(),
                      "runs": len(res.records), "failures": len(res.failures),
                      "seconds": round(time.perf_counter() - t0, 3)}))
    return EXIT_OK if res.ok else EXIT_FAIL


def cmd_oracle(args) -> int:
    from .oracle import TINY, exact_potential_audit, move_structure, verify_stochastic_stability
    from .state import Lattice

    report = {"stochastic_stability": verify_stochastic_stability(TINY)}
    if not args.full_table:
        report["stochastic_stability"]["resistance"].pop("table")
    report["move_structure"] = move_structure(Lattice((4, 4, 3), 5.0, (0.0, 0.0, 5.0)), 2)
    config = parse_config(args.config)
    err = exact_potential_audit(config, trials=args.trials, seed=args.audit_seed)
    report["exact_potential"] = {"trials": args.trials, "max_scaled_error": err,
                                 "tolerance": 1e-12, "holds": err <= 1e-12}
    ss = report["stochastic_stability"]
    ok = (ss["monotone"] and ss["threshold_met"] and ss["resistance"]["within_tolerance"]
          and report["move_structure"]["reversible"] and report["move_structure"]["reachable"]
          and report["exact_potential"]["holds"])
    report["verdict"] = "pass" if ok else "fail"
    text = json.dumps(report, indent=1)
    if args.report:
        args.report.parent.mkdir(parents=True, exist_ok=True)
        args.report.write_text(text + "\n")
    print(text)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_figures(args) -> int:
    records = load_records(args.run_dir)
    if not records:
        raise SwarmError(f"no run records under {args.run_dir}")
    out = args.out or args.run_dir
    ids = FIGURES if "all" in args.ids else args.ids
    written = []
    for fig in ids:
        written += [str(p) for p in emit_figure_data(records, fig, out)]
    print("\n".join(written))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="uavswarm", description=__doc__.split("\n")[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("run", help="run seeds x strategies and write CSV/JSON outputs")
    _add_config_flags(p)
    p.add_argument("--figures", nargs="*", choices=FIGURES, help="also emit figure tables")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("oracle", help="exact checks on tiny instances; prints a JSON verdict")
    p.add_argument("--config", type=Path, help="config for the potential audit scale")
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--audit-seed", type=int, default=0)
    p.add_argument("--full-table", action="store_true", help="include every resistance row")
    p.add_argument("--report", type=Path, help="also write the JSON report here")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("figures", help="emit figure tables from an existing run directory")
    p.add_argument("run_dir", type=Path)
    p.add_argument("ids", nargs="+", choices=FIGURES + ("all",))
    p.add_argument("--out", type=Path, help="defaults to RUN_DIR")
    p.set_defaults(func=cmd_figures)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (SwarmError, ValueError) as exc:
        print(f"uavswarm: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
