"""Command-line entry point: ``filecoin-abm {backtest,run,sweep,experiment}``.

Exit codes: 0 success, 1 validation failure, 2 model breakdown,
3 backtest error above threshold.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

from .data_io import (
    ConfigError,
    config_from_dict,
    fmt,
    initial_state_from_historical,
    load_config,
    load_config_dict,
    load_historical,
    set_path,
    write_backtest,
    write_trajectory,
)
from .engine import SimulationAborted, backtest, run
from .experiments import EXPERIMENTS, run_experiment

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_BREAKDOWN = 2
EXIT_THRESHOLD = 3

SWEEP_COLUMNS = ("value", "agent_id", "cum_reward_fil", "borrow_cost_cum_fil", "net_cum_reward_fil",
                 "onboarded_rb_cum_bytes")

def _err(msg: str) -> None:
    print(f"error: {msg}", file=sys.stderr)


def cmd_backtest(args) -> int:
    config = load_config(args.config)
    historical = load_historical(args.historical)
    if args.seed_from_history:
        init = initial_state_from_historical(historical, config.start_day, config.supply_params,
                                             config.genesis_date, expiry_days=config.initial.expiry_days)
        config = replace(config, initial=init)
    traj, report = backtest(config, historical, threshold=args.max_rel_error)
    write_backtest(traj, report, args.out)
    s = report.summary()
    print(f"backtest: {s['days']} days, max rel error minted {s['max_rel_error_minted']:.3e}, "
          f"circulating {s['max_rel_error_circulating']:.3e} (threshold {s['threshold']:.3g})")
    if not report.passed:
        _err(f"max relative error {report.max_rel_error:.3e} exceeds threshold {report.threshold:.3g}")
        return EXIT_THRESHOLD
    return EXIT_OK


def cmd_run(args) -> int:
    config = load_config(args.config)
    traj = run(config)
    paths = write_trajectory(traj, args.out)
    print(f"run: {len(traj)} days written to {paths['network'].parent}")
    return EXIT_OK


def _sweep_one(raw: dict, out_dir: str):
    """One sweep point; returns (status, message, final per-agent rows)."""
    try:
        config = config_from_dict(raw)
        traj = run(config)
    except ConfigError as exc:
        return EXIT_VALIDATION, str(exc), []
    except SimulationAborted as exc:
        if exc.trajectory is not None:
            write_trajectory(exc.trajectory, out_dir)
        return EXIT_BREAKDOWN, str(exc), []
    write_trajectory(traj, out_dir)
    rows = []
    for aid in traj.agent_ids:
        recs = [r for r in traj.agents if r.agent_id == aid]
        last = recs[-1] if recs else None
        rows.append((aid, last.cum_reward if last else 0.0, last.borrow_cost_cum if last else 0.0,
                     last.net_cum_reward if last else 0.0, last.onboarded_rb_cum if last else 0.0))
    return EXIT_OK, "", rows


def cmd_sweep(args) -> int:
    values = [v.strip() for v in args.values.split(",") if v.strip()]
    if not values:
        raise ConfigError("--values must list at least one value")
    if len(set(values)) != len(values):
        raise ConfigError("--values contains duplicates")
    base = load_config_dict(args.config)
    raws = [set_path(base, args.param, v) for v in values]
    for v, raw in zip(values, raws):
        try:
            config_from_dict(raw)
        except ConfigError as exc:
            raise ConfigError(f"value {v!r}: {exc}") from None
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    dirs = [str(out / f"value_{v}") for v in values]
    if args.jobs > 1 and len(values) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_sweep_one, raws, dirs))
    else:
        results = [_sweep_one(r, d) for r, d in zip(raws, dirs)]
    status = EXIT_OK
    with (out / "comparison.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SWEEP_COLUMNS)
        for v, (code, msg, rows) in zip(values, results):
            if code != EXIT_OK:
                _err(f"sweep value {v}: {msg}")
                status = max(status, code)
            for aid, *nums in rows:
                w.writerow([v, aid, *(fmt(x) for x in nums)])
    print(f"sweep: {len(values)} runs over {args.param} written to {out}")
    return status


def _parse_sets(items):
    pairs = []
    for item in items or ():
        key, sep, value = item.partition("=")
        if not sep or not key.strip():
            raise ConfigError(f"--set expects key=value, got {item!r}")
        pairs.append((key.strip(), value.strip()))
    return pairs


def cmd_experiment(args) -> int:
    result = run_experiment(args.name, args.out, _parse_sets(args.set))
    for check, ok in result.report["checks"].items():
        if isinstance(ok, bool):
            print(f"{args.name}: {check}: {'PASS' if ok else 'FAIL'}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="filecoin-abm", description="Agent-based simulator of storage-network token supply.")
    p.add_argument("-v", "--verbose", action="store_true", help="log warnings such as clamped renewals")
    sub = p.add_subparsers(dest="command", required=True)

    b = sub.add_parser("backtest", help="replay historical power and compare supply series")
    b.add_argument("--config", required=True)
    b.add_argument("--historical", required=True)
    b.add_argument("--out", required=True)
    b.add_argument("--max-rel-error", type=float, default=None,
                   help="override the config's backtest.max_rel_error")
    b.add_argument("--seed-from-history", action="store_true",
                   help="seed the initial network from the history row before start_day")
    b.set_defaults(func=cmd_backtest)

    r = sub.add_parser("run", help="single simulation")
    r.add_argument("--config", required=True)
    r.add_argument("--out", required=True)
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("sweep", help="one run per parameter value plus a comparison CSV")
    s.add_argument("--config", required=True)
    s.add_argument("--param", required=True, help="dot path, e.g. external_rate or agents.a1.discount_rate")
    s.add_argument("--values", required=True, help="comma-separated values")
    s.add_argument("--out", required=True)
    s.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    s.set_defaults(func=cmd_sweep)

    e = sub.add_parser("experiment", help="canned experiments")
    e.add_argument("--name", required=True, choices=EXPERIMENTS)
    e.add_argument("--out", required=True)
    e.add_argument("--set", action="append", metavar="KEY=VALUE",
                   help="override, e.g. days=30 or rates=0.1,0.3 or agents.cc.discount_rate=0.2")
    e.set_defaults(func=cmd_experiment)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse usage errors count as validation failures
        return EXIT_OK if exc.code == 0 else EXIT_VALIDATION
    logging.basicConfig(level=logging.WARNING if args.verbose else logging.ERROR, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        _err(str(exc))
        return EXIT_VALIDATION
    except SimulationAborted as exc:
        _err(f"model breakdown: {exc}")
        return EXIT_BREAKDOWN
    except (ValueError, OSError) as exc:
        _err(str(exc))
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
