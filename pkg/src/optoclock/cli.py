"""Command line: run, validate, analyze, and sweep clock experiments."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import load_config, validate_config
from .errors import OptoclockError
from .experiments import analyze_record, run_experiment
from .io import read_metrics_json, read_ticks, write_metrics_json
from .runner import RunAverages
from .tickstats import FilterConfig, default_threshold


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="optoclock",
        description="Autonomous optomechanical clock simulator")
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run the experiment in a config file")
    run.add_argument("--config", required=True, type=Path)
    run.add_argument("--seed", type=int, default=None,
                     help="override the config seed list with one seed")
    run.add_argument("--out", type=Path, default=None)
    run.add_argument("--jobs", type=int, default=1)

    val = sub.add_parser("validate", help="schema and physics diagnostics")
    val.add_argument("--config", required=True, type=Path)

    ana = sub.add_parser("analyze",
                         help="recompute statistics from a tick file")
    ana.add_argument("--ticks", required=True, type=Path)
    ana.add_argument("--config", type=Path, default=None,
                     help="config supplying parameters and filter settings")
    ana.add_argument("--averages", type=Path, default=None,
                     help="metrics JSON holding avg_* keys for thermodynamics")
    ana.add_argument("--out", type=Path, default=None)

    sw = sub.add_parser("sweep", help="run every sweep point in the config")
    sw.add_argument("--config", required=True, type=Path)
    sw.add_argument("--out", type=Path, default=None)
    sw.add_argument("--jobs", type=int, default=1)
    return ap


def _cmd_validate(args) -> int:
    cfg = load_config(args.config)
    diagnostics = validate_config(cfg)
    worst = 0
    for d in diagnostics:
        print(f"[{d.level}] {d.message}")
        if d.level == "error":
            worst = 2
    return worst


def _cmd_run(args) -> int:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg.seeds = [args.seed]
    errors = [d for d in validate_config(cfg) if d.level == "error"]
    if errors:
        for d in errors:
            print(f"[error] {d.message}", file=sys.stderr)
        return 2
    out = args.out or cfg.output_dir or Path("optoclock-out")
    results = run_experiment(cfg, out, jobs=args.jobs)
    for flat in results:
        keys = [k for k in ("seed", "accuracy_raw", "accuracy_filtered",
                            "resolution_filtered", "entropy_per_tick",
                            "tur_ratio", "period", "regime")
                if k in flat]
        print("  ".join(f"{k}={flat[k]:.4g}" if isinstance(flat[k], float)
                        else f"{k}={flat[k]}" for k in keys))
    print(f"wrote artifacts under {out}")
    return 0


def _cmd_analyze(args) -> int:
    if args.config is not None:
        cfg = load_config(args.config)
        params = cfg.params
        fcfg = cfg.filter_config()
    else:
        from .params import ClockParams
        params = ClockParams()
        fcfg = FilterConfig(gamma=params.Omega_m,
                            i_star=default_threshold(params.M),
                            m_sum=params.M)
        print("[warning] no config given; using reference parameters")
    record = read_ticks(args.ticks, meta={"Omega_m": params.Omega_m})
    averages = None
    if args.averages is not None:
        m = read_metrics_json(args.averages)
        try:
            averages = RunAverages(
                p1=m["avg_p1"], p2=m["avg_p2"], p3=m["avg_p3"],
                nphot=m["avg_nphot"], x=m["avg_x"], p=m["avg_p"],
                x_sq=m["avg_x_sq"], p_sq=m["avg_p_sq"],
                nphot_p=m["avg_nphot_p"], duration=0.0)
        except KeyError as exc:
            print(f"[warning] averages file missing {exc}; skipping "
                  "thermodynamics")
    analysis = analyze_record(record, params, fcfg, averages)
    flat = analysis["metrics"]
    for key in sorted(flat):
        print(f"{key} = {flat[key]}")
    if args.out is not None:
        args.out.mkdir(parents=True, exist_ok=True)
        write_metrics_json(args.out / "metrics.json", flat)
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "validate":
            return _cmd_validate(args)
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "analyze":
            return _cmd_analyze(args)
        if args.command == "sweep":
            return _cmd_run(args)
    except OptoclockError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    raise AssertionError("unreachable")


if __name__ == "__main__":
    sys.exit(main())
