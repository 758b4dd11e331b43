"""Command-line interface: run scenarios, compare results, serve the API."""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import replace
from pathlib import Path

from . import csvio, runner, scenario as scenario_mod


def _load(name_or_path: str) -> scenario_mod.ScenarioConfig:
    path = Path(name_or_path)
    if path.exists():
        return scenario_mod.load_scenario(path)
    return scenario_mod.load_bundled(name_or_path)


def _cmd_run(args: argparse.Namespace) -> int:
    cfg = _load(args.scenario)
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    if args.budget is not None:
        cfg = replace(cfg, engine_budget=args.budget)
    result = runner.run_closed_loop(cfg, keep_recommendations=False)
    out = args.out or cfg.output or f"{cfg.name}.csv"
    csvio.export_csv(result, out)
    print(json.dumps({"scenario": cfg.name, "output": str(out),
                      "metrics": result.metrics}))
    return 0


def _cmd_compare(args: argparse.Namespace) -> int:
    data_a = csvio.read_csv(args.a)
    data_b = csvio.read_csv(args.b)
    if args.scenario:
        cfg = _load(args.scenario)
        metrics_a = runner.compute_metrics(cfg, data_a)
        metrics_b = runner.compute_metrics(cfg, data_b)
    else:
        # without a scenario the convergence targets are unknown
        metrics_a = _plain_metrics(data_a)
        metrics_b = _plain_metrics(data_b)
    report = runner.compare((data_a, metrics_a), (data_b, metrics_b))
    print(json.dumps({k: (None if isinstance(v, float) and math.isinf(v) else v)
                      for k, v in report.__dict__.items()}))
    return 0


def _plain_metrics(data) -> dict:
    import numpy as np
    col = {name: data[:, i] for i, name in enumerate(runner.COLUMNS)}
    return {
        "max_abs_ao_dev_pct": float(np.max(np.abs(col["AO_dev_pct"]))),
        "total_effluent_kg": float(col["m_eff_kg"][-1] - col["m_eff_kg"][0]),
        "convergence_time_s": math.inf,
    }


def _cmd_list(args: argparse.Namespace) -> int:
    for name in scenario_mod.bundled_scenario_names():
        print(name)
    return 0


def _cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from ..service.app import create_app

    default_cfg = _load(args.scenario) if args.scenario else None
    app = create_app(default_scenario=default_cfg, console_dir=args.console_dir)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pwradvisor",
        description="PWR load-following simulator with a predictive "
                    "dilution/boration advisory engine")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a closed-loop scenario")
    p_run.add_argument("scenario", help="scenario file or bundled name")
    p_run.add_argument("--out", help="output CSV path")
    p_run.add_argument("--seed", type=int, default=None)
    p_run.add_argument("--budget", type=float, default=None,
                       help="wall-clock budget per solve, s")
    p_run.set_defaults(func=_cmd_run)

    p_cmp = sub.add_parser("compare", help="compare two exported runs")
    p_cmp.add_argument("a")
    p_cmp.add_argument("b")
    p_cmp.add_argument("--scenario", default=None,
                       help="scenario for convergence targets")
    p_cmp.set_defaults(func=_cmd_compare)

    p_ls = sub.add_parser("list-scenarios", help="list bundled scenarios")
    p_ls.set_defaults(func=_cmd_list)

    p_srv = sub.add_parser("serve", help="start the advisory HTTP service")
    p_srv.add_argument("--host", default="127.0.0.1")
    p_srv.add_argument("--port", type=int, default=8000)
    p_srv.add_argument("--scenario", default=None,
                       help="default scenario for new sessions")
    p_srv.add_argument("--console-dir", default=None,
                       help="serve a built operator console from this directory")
    p_srv.set_defaults(func=_cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (scenario_mod.ScenarioError, runner.TimelineMismatchError,
            ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
