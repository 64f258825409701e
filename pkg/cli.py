#!/usr/bin/env python3
"""
Command-line surface of the network flow simulator.

    python cli.py run scenarios/theta_symmetric.json --out runs/theta
    python cli.py atlas --export atlas_out
    python cli.py check scenarios/lens_area_law.json
    python cli.py snapshot scenarios/island.json island.svg --at 0.01
    python cli.py serve
"""
import argparse
import json
import logging
import os
import sys
from typing import Any, Dict, List, Optional

from app.services.runner import (EXIT_CHECK_FAILED, EXIT_ERROR, EXIT_OK, Scenario, atlas_summary, check_scenario,
                                 load_scenario, run)
from flow.engine import initial_state
from flow.trajectory import StopCriteria, run_until
from report.reporter import ReportGenerator
from utils.config import load_config
from utils.errors import NetworkFlowError, ScenarioError
from utils.log import configure_logging

logger = logging.getLogger("cli")


def _add_overrides(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("overrides", "replace scenario settings for this invocation")
    g.add_argument("--h", dest="h_target", type=float, help="target node spacing")
    g.add_argument("--cfl", type=float)
    g.add_argument("--nodes", dest="nodes_per_curve", type=int, help="node cap per curve")
    g.add_argument("--omega", type=float, help="tangential redistribution strength")
    g.add_argument("--max-time", type=float)
    g.add_argument("--max-steps", type=int)
    g.add_argument("--eps-len", type=float)
    g.add_argument("--eps-area", type=float)
    g.add_argument("--k-hi", type=float)
    g.add_argument("--max-transitions", type=int)


def apply_overrides(scenario: Scenario, args: argparse.Namespace) -> Scenario:
    """Copy of the scenario with every given override applied, revalidated."""
    def pick(*names: str) -> Dict[str, Any]:
        return {n: getattr(args, n) for n in names if getattr(args, n, None) is not None}

    data = scenario.model_dump(mode="json")
    data["control"].update(pick("h_target", "cfl", "nodes_per_curve", "omega"))
    data["stop"].update(pick("max_time", "max_steps"))
    data["thresholds"].update(pick("eps_len", "eps_area", "k_hi"))
    data.update(pick("max_transitions"))
    try:
        return Scenario.model_validate(data)
    except ValueError as e:
        raise ScenarioError(f"invalid override: {e}") from e


def cmd_run(args: argparse.Namespace) -> int:
    scenario = apply_overrides(load_scenario(args.scenario), args)
    out_dir = args.out or os.path.join(load_config()["OUTPUT_DIR"], scenario.name)
    output = run(scenario, out_dir)
    print(f"{scenario.name}: {output.summary.reason} at t={output.summary.t_final:.9g}, "
          f"final topology {output.summary.final_topology}, {len(output.summary.transitions)} transition(s)")
    print(f"artifacts in {out_dir}")
    return output.exit_code


def cmd_atlas(args: argparse.Namespace) -> int:
    rows = atlas_summary(args.export)
    for r in rows:
        params = ", ".join(f"{k}={v:.6g}" for k, v in r["parameters"].items())
        print(f"{r['name']:<14} residual={r['residual']:.2e} junction_defect={r['junction_defect']:.2e} "
              f"axes={r['symmetry_axes']} certified={r['certified']} {params}")
    return EXIT_OK if all(r["certified"] for r in rows) else EXIT_CHECK_FAILED


def cmd_check(args: argparse.Namespace) -> int:
    scenario = apply_overrides(load_scenario(args.scenario), args)
    checks = check_scenario(scenario)
    if args.json:
        print(json.dumps(checks, sort_keys=True, indent=2))
    else:
        for name, c in checks.items():
            print(f"{name:<28} {c['value']:.6g} (limit {c['limit']:.6g}) {'ok' if c['passed'] else 'FAILED'}")
    return EXIT_OK if all(c["passed"] for c in checks.values()) else EXIT_CHECK_FAILED


def cmd_snapshot(args: argparse.Namespace) -> int:
    scenario = apply_overrides(load_scenario(args.scenario), args)
    state = initial_state(scenario.build_network())
    if args.at and args.at > 0:
        stop = StopCriteria(max_time=args.at, max_steps=scenario.stop.max_steps)
        traj = run_until(state, scenario.control, stop, scenario.thresholds)
        state = traj.final
        if traj.reason == "event":
            logger.warning("stopped at %s, t=%.9g, before the requested time", traj.event.kind.value, state.t)
    ReportGenerator().emit_snapshot(state.network, args.output, title=f"{scenario.name} t={state.t:.6g}")
    print(f"snapshot at t={state.t:.9g} written to {args.output}")
    return EXIT_OK


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn
    config = load_config()
    uvicorn.run("main:app", host=args.host or config["APP_HOST"], port=args.port or config["APP_PORT"])
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description="Curvature flow of planar networks with at most two triple junctions",
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--log-level", default=None, choices=["DEBUG", "INFO", "WARNING", "ERROR"],
                        help="defaults to LOG_LEVEL from the environment")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="flow a scenario through events and transitions")
    p.add_argument("scenario")
    p.add_argument("--out", help="output directory (default OUTPUT_DIR/<scenario name>)")
    _add_overrides(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("atlas", help="build and certify the shrinker atlas")
    p.add_argument("--export", metavar="DIR", help="write every profile as network JSON and SVG")
    p.set_defaults(func=cmd_atlas)

    p = sub.add_parser("check", help="invariant suite on a scenario")
    p.add_argument("scenario")
    p.add_argument("--json", action="store_true")
    _add_overrides(p)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("snapshot", help="SVG of a scenario network, optionally after flowing")
    p.add_argument("scenario")
    p.add_argument("output")
    p.add_argument("--at", type=float, default=0.0, help="flow for this long first")
    _add_overrides(p)
    p.set_defaults(func=cmd_snapshot)

    p = sub.add_parser("serve", help="start the HTTP API")
    p.add_argument("--host")
    p.add_argument("--port", type=int)
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.log_level)
    try:
        return args.func(args)
    except ScenarioError as e:
        where = f" (field {e.field})" if e.field else f" (line {e.line})" if e.line else ""
        print(f"scenario error{where}: {e}", file=sys.stderr)
        return EXIT_ERROR
    except NetworkFlowError as e:
        logger.error("%s: %s", type(e).__name__, e)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
