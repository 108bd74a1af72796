"""The `tsc` command: convert scenarios, run benchmarks, compare results.

Exit codes: 0 on success, 1 for invalid inputs or configuration, 2 when a run
fails at runtime. Results are written as delimited text plus a JSON summary;
figures are rendered next to them unless --no-plots is given.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import replace
from pathlib import Path

from tscbench.agents.dqn import load_checkpoint  # noqa: F401  (public surface)
from tscbench.config import (
    ConfigError,
    ExperimentConfig,
    guess_format,
    load_experiment,
    run_fingerprint,
    scenario_fingerprint,
)
from tscbench.engine import EngineError
from tscbench.env import EnvError, TrafficEnv
from tscbench.formats import (
    CITYFLOW_STYLE,
    FORMAT_KINDS,
    SUMO_STYLE,
    ConversionOptions,
    complete_routes,
    convert,
    load_flows,
    load_network,
)
from tscbench.formats.errors import FormatError
from tscbench.formats.routing import UnreachableRouteError
from tscbench.metrics import HIGHER_IS_BETTER, METRIC_NAMES
from tscbench.model import ValidationReport, validate_demand
from tscbench.training import (
    CLASSICAL_NAMES,
    classical_policy,
    run_episode,
    run_training,
    wire_env_config,
)

CSV_COLUMNS = ("episode",) + METRIC_NAMES + ("wall_seconds",)
_FORMAT_ALIASES = {"sumo": SUMO_STYLE, "cityflow": CITYFLOW_STYLE,
                   SUMO_STYLE: SUMO_STYLE, CITYFLOW_STYLE: CITYFLOW_STYLE}
_EXTENSIONS = {SUMO_STYLE: "xml", CITYFLOW_STYLE: "json"}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="tsc",
        description="traffic signal control benchmarking toolkit")
    sub = p.add_subparsers(dest="command", required=True)

    pc = sub.add_parser("convert", help="translate a scenario between formats")
    pc.add_argument("--from", dest="src", required=True,
                    choices=sorted(_FORMAT_ALIASES), metavar="FORMAT")
    pc.add_argument("--to", dest="dst", required=True,
                    choices=sorted(_FORMAT_ALIASES), metavar="FORMAT")
    pc.add_argument("--net", required=True, help="network file to read")
    pc.add_argument("--flow", required=True, help="demand file to read")
    pc.add_argument("--yellow", type=float, default=None,
                    help="override every signalized yellow time [s]")
    pc.add_argument("--out", default=".", help="directory for the output pair")
    pc.add_argument("--no-complete-routes", action="store_true",
                    help="keep origin-destination routes as given")

    pr = sub.add_parser("run", help="benchmark one method on one scenario")
    pr.add_argument("--config", required=True, help="experiment YAML")
    pr.add_argument("--seed", type=int, default=None,
                    help="override the experiment seed")
    pr.add_argument("--out", default=None,
                    help="results directory (default runs/<method>-seed<N>)")
    pr.add_argument("--no-plots", action="store_true")

    pp = sub.add_parser("compare", help="rank finished runs per metric")
    pp.add_argument("runs", nargs="+", help="run directories with summary.json")
    pp.add_argument("--out", default="compare")
    pp.add_argument("--no-plots", action="store_true")
    return p


# ----------------------------------------------------------------- convert


def cmd_convert(args) -> int:
    src = _FORMAT_ALIASES[args.src]
    dst = _FORMAT_ALIASES[args.dst]
    net_data = Path(args.net).read_bytes()
    flow_data = Path(args.flow).read_bytes()
    opts = ConversionOptions(yellow_time_override=args.yellow,
                             complete_routes=not args.no_complete_routes)
    report = ValidationReport()
    net_out, flow_out = convert(net_data, flow_data, src, dst, opts, report)
    for line in report.lines():
        print(f"warning: {line}", file=sys.stderr)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    ext = _EXTENSIONS[dst]
    net_path = out / f"network.{ext}"
    flow_path = out / f"flows.{ext}"
    net_path.write_bytes(net_out)
    flow_path.write_bytes(flow_out)
    print(net_path)
    print(flow_path)
    return 0


# --------------------------------------------------------------------- run


def load_scenario(cfg: ExperimentConfig):
    report = ValidationReport()
    net = load_network(guess_format(cfg.network),
                       Path(cfg.network).read_bytes(), report)
    flows = load_flows(guess_format(cfg.flows), Path(cfg.flows).read_bytes())
    demand_report = validate_demand(net, flows)
    if not demand_report.ok:
        raise ConfigError("; ".join(demand_report.lines()))
    flows = complete_routes(net, flows)
    return net, flows, report


def format_csv(rows) -> str:
    lines = [",".join(CSV_COLUMNS)]
    for row in rows:
        cells = [str(row["episode"])]
        cells += [f"{row[name]:.6f}" for name in CSV_COLUMNS[1:]]
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def cmd_run(args) -> int:
    cfg = load_experiment(args.config)
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    net, flows, report = load_scenario(cfg)
    for line in report.lines():
        print(f"warning: {line}", file=sys.stderr)

    out = Path(args.out) if args.out else Path("runs") / f"{cfg.method}-seed{cfg.seed}"
    out.mkdir(parents=True, exist_ok=True)

    sim = replace(cfg.sim, seed=cfg.seed)
    started = time.perf_counter()
    rows = []

    if cfg.method in CLASSICAL_NAMES:
        env = TrafficEnv(net, flows, cfg.env, sim)
        t0 = time.perf_counter()
        metrics = run_episode(env, classical_policy(cfg.method, cfg.controller))
        rows.append({"episode": 0, **metrics,
                     "wall_seconds": time.perf_counter() - t0})
    else:
        env = TrafficEnv(net, flows, wire_env_config(cfg.env, cfg.method), sim)
        ck_dir = out / "checkpoints"
        ck_dir.mkdir(exist_ok=True)
        mark = [time.perf_counter()]

        def on_episode(record):
            now = time.perf_counter()
            rows.append({"episode": record["episode"], **record["eval"],
                         "wall_seconds": now - mark[0]})
            mark[0] = now

        run_training(env, cfg.dqn, seed=cfg.seed,
                     checkpoint_dir=str(ck_dir), on_episode=on_episode)

    (out / "results.csv").write_text(format_csv(rows), encoding="utf-8")

    best_idx = min(range(len(rows)), key=lambda i: rows[i]["travel_time"])
    metric_keys = METRIC_NAMES + ("unfinished",)
    summary = {
        "method": cfg.method,
        "seed": cfg.seed,
        "episodes": len(rows),
        "final": {k: rows[-1][k] for k in metric_keys},
        "best": {k: rows[best_idx][k] for k in metric_keys},
        "best_episode": rows[best_idx]["episode"],
        "fingerprint": run_fingerprint(net, flows, cfg),
        "scenario_fingerprint": scenario_fingerprint(net, flows),
        "wall_seconds_total": time.perf_counter() - started,
    }
    (out / "summary.json").write_text(
        json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8")

    if not args.no_plots:
        from tscbench import plots
        plots.learning_curve(rows, out / "learning_curve.png", cfg.method)

    best = rows[best_idx]
    print(f"{cfg.method} seed {cfg.seed}: best travel_time "
          f"{best['travel_time']:.3f} at episode {best['episode']} "
          f"({len(rows)} episode(s)) -> {out}")
    return 0


# ----------------------------------------------------------------- compare


def cmd_compare(args) -> int:
    if len(args.runs) < 2:
        raise ConfigError("compare needs at least two run directories")
    runs = []
    for run_dir in args.runs:
        path = Path(run_dir) / "summary.json"
        if not path.is_file():
            raise ConfigError(f"{run_dir!r} has no summary.json")
        data = json.loads(path.read_text(encoding="utf-8"))
        runs.append({"dir": str(run_dir), "summary": data,
                     "label": f"{data['method']}-s{data['seed']}",
                     "metrics": data["best"]})
    scenario = {r["summary"]["scenario_fingerprint"] for r in runs}
    if len(scenario) > 1:
        raise ConfigError("runs come from different scenarios; "
                          "their metrics are not comparable")
    seen: dict[str, int] = {}
    for r in runs:
        n = seen.get(r["label"], 0)
        seen[r["label"]] = n + 1
        if n:
            r["label"] = f"{r['label']}#{n + 1}"

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    lines = ["label," + ",".join(METRIC_NAMES)]
    for r in runs:
        lines.append(r["label"] + "," +
                     ",".join(f"{r['metrics'][m]:.6f}" for m in METRIC_NAMES))
    (out / "compare.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")

    for name in METRIC_NAMES:
        reverse = name in HIGHER_IS_BETTER
        ranked = sorted(runs, key=lambda r: r["metrics"][name], reverse=reverse)
        best, second = ranked[0], ranked[1]
        print(f"{name}: best {best['label']} ({best['metrics'][name]:.3f}), "
              f"second {second['label']} ({second['metrics'][name]:.3f})")

    if not args.no_plots:
        from tscbench import plots
        plots.comparison_bars(runs, out / "compare.png")
    print(f"wrote {out / 'compare.csv'}")
    return 0


# -------------------------------------------------------------------- main


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {"convert": cmd_convert, "run": cmd_run, "compare": cmd_compare}
    try:
        return handlers[args.command](args)
    except (ConfigError, FormatError, UnreachableRouteError, EnvError,
            EngineError, FileNotFoundError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except Exception as e:  # noqa: BLE001  - report, don't traceback-dump
        print(f"failed: {type(e).__name__}: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
