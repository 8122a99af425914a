"""Command-line front end: run one scenario, sweep seeds, compare runs.

Per-run outputs are a CSV round series (the plotting contract) and a JSON
summary.  Exit codes: 0 success, 2 bad configuration or arguments, 3 the
scenario cannot be set up (connectivity).
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import statistics
import sys

from .config import ConfigError, ScenarioConfig, from_json
from .engine import SetupError, run_simulation

CSV_HEADER = "round,packets_delivered,dead_nodes,total_energy"


def _load_config(args) -> ScenarioConfig:
    cfg = from_json(args.config) if args.config else ScenarioConfig()
    overrides = {}
    if getattr(args, "protocol", None):
        overrides["protocol"] = args.protocol
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    if getattr(args, "rounds", None) is not None:
        overrides["rounds_max"] = args.rounds
    if overrides:
        cfg = dataclasses.replace(cfg, **overrides)
    return cfg


def _run_name(summary: dict) -> str:
    return f"{summary['protocol']}_seed{summary['seed']}"


def write_run(out_dir: str, series, summary: dict) -> tuple[str, str]:
    """Write the CSV series and JSON summary; returns both paths.

    Formatting is fully deterministic: integers verbatim, energies through
    shortest round-trip float repr, summary keys sorted.
    """
    os.makedirs(out_dir, exist_ok=True)
    base = os.path.join(out_dir, _run_name(summary))
    csv_path = base + ".csv"
    rows = [CSV_HEADER]
    rows.extend(
        f"{m.round_index},{m.packets_delivered},{m.dead_nodes},{m.total_energy!r}"
        for m in series)
    with open(csv_path, "w") as fh:
        fh.write("\n".join(rows) + "\n")
    json_path = base + ".json"
    with open(json_path, "w") as fh:
        json.dump(summary, fh, sort_keys=True, indent=2)
        fh.write("\n")
    return csv_path, json_path


def _cmd_simulate(args) -> int:
    cfg = _load_config(args)
    series, summary, _ = run_simulation(cfg)
    csv_path, _ = write_run(args.out, series, summary)
    print(f"{cfg.protocol} seed={cfg.seed}: rounds={summary['rounds_run']} "
          f"first_dead={summary['first_dead_round']} "
          f"death={summary['death_round']} "
          f"packets={summary['total_packets']} -> {csv_path}")
    return 0


def _parse_seed_range(text: str) -> range:
    try:
        lo, hi = text.split("..")
        lo, hi = int(lo), int(hi)
    except ValueError:
        raise ConfigError("--seeds expects a..b (for example 0..19)")
    if hi < lo:
        raise ConfigError("--seeds range is empty")
    return range(lo, hi + 1)


def _cmd_sweep(args) -> int:
    seeds = _parse_seed_range(args.seeds)
    base_cfg = _load_config(args)
    for seed in seeds:
        cfg = dataclasses.replace(base_cfg, seed=seed)
        series, summary, _ = run_simulation(cfg)
        write_run(args.out, series, summary)
        print(f"{cfg.protocol} seed={seed}: "
              f"first_dead={summary['first_dead_round']} "
              f"death={summary['death_round']} "
              f"packets={summary['total_packets']}")
    return 0


def _median(values):
    vals = [v for v in values if v is not None]
    return statistics.median(vals) if vals else None


def compare_runs(runs_dir: str) -> dict:
    """Aggregate every summary JSON in a directory by protocol."""
    groups: dict[str, list[dict]] = {}
    try:
        names = sorted(os.listdir(runs_dir))
    except OSError as exc:
        raise ConfigError(f"cannot read runs directory: {exc}") from exc
    for name in names:
        if not name.endswith(".json"):
            continue
        with open(os.path.join(runs_dir, name)) as fh:
            try:
                summary = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"malformed summary {name}: {exc}") from exc
        if "protocol" not in summary:
            continue
        groups.setdefault(summary["protocol"], []).append(summary)
    if not groups:
        raise ConfigError("no run summaries found")
    report: dict = {"protocols": {}}
    for protocol, runs in sorted(groups.items()):
        report["protocols"][protocol] = {
            "runs": len(runs),
            "median_first_dead_round": _median(
                r.get("first_dead_round") for r in runs),
            "median_death_round": _median(
                r.get("death_round") for r in runs),
            "median_total_packets": _median(
                r.get("total_packets") for r in runs),
        }
    ratios = {}
    opt = report["protocols"].get("optimized")
    for baseline in ("leach", "leach-eee"):
        other = report["protocols"].get(baseline)
        if not opt or not other:
            continue
        fd_o, fd_b = opt["median_first_dead_round"], other["median_first_dead_round"]
        if fd_o is not None and fd_b:
            ratios[f"first_dead_vs_{baseline}"] = fd_o / fd_b
        pk_o, pk_b = opt["median_total_packets"], other["median_total_packets"]
        if pk_o is not None and pk_b:
            ratios[f"packets_vs_{baseline}"] = pk_o / pk_b
    report["ratios"] = ratios
    return report


def _cmd_compare(args) -> int:
    report = compare_runs(args.runs)
    report_dir = os.path.dirname(os.path.abspath(args.report))
    os.makedirs(report_dir, exist_ok=True)
    with open(args.report, "w") as fh:
        json.dump(report, fh, sort_keys=True, indent=2)
        fh.write("\n")
    for protocol, row in report["protocols"].items():
        print(f"{protocol}: runs={row['runs']} "
              f"median_first_dead={row['median_first_dead_round']} "
              f"median_packets={row['median_total_packets']}")
    for key, val in sorted(report["ratios"].items()):
        print(f"{key}: {val:.2f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wsnopt",
        description="Round-based sensor-network protocol simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_run_args(p):
        p.add_argument("--config", help="scenario JSON file")
        p.add_argument("--protocol",
                       choices=("leach", "leach-eee", "optimized"))
        p.add_argument("--rounds", type=int, help="round cap override")
        p.add_argument("--out", default="runs", help="output directory")

    sim = sub.add_parser("simulate", help="run one scenario")
    add_run_args(sim)
    sim.add_argument("--seed", type=int)
    sim.set_defaults(func=_cmd_simulate)

    sweep = sub.add_parser("sweep", help="run a seed range")
    add_run_args(sweep)
    sweep.add_argument("--seeds", required=True, help="inclusive range a..b")
    sweep.set_defaults(func=_cmd_sweep)

    cmp_p = sub.add_parser("compare", help="aggregate run summaries")
    cmp_p.add_argument("--runs", required=True, help="directory of summaries")
    cmp_p.add_argument("--report", required=True, help="report JSON path")
    cmp_p.set_defaults(func=_cmd_compare)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except SetupError as exc:
        print(f"setup error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
