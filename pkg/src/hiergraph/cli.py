"""Command-line entry point: ``hiergraph --config case.yaml <command>``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .drivers import MONOLITHIC, RECEDING, StageFailure, run
from .export import VIEWS, to_dot, to_graphml
from .graph import flatten
from .ingest import IngestError, ingest, load_config
from .power.build import DayBuilder
from .power.data import RESERVE_SCENARIOS
from .solver import export_lp, export_mps


def _day_graph(cfg, network, demand):
    return DayBuilder(network, demand, 0, schedule=cfg.schedule).build_day_graph()


def _layer_counts(graph) -> dict:
    counts: dict[str, int] = {}
    for sub in graph.subgraphs:
        layer = sub.attrs.get("layer", "")
        counts[layer] = counts.get(layer, 0) + 1
    return counts


def cmd_build(cfg, args, network, demand) -> int:
    g = _day_graph(cfg, network, demand)
    s = g.stats()
    print(f"nodes={s['nodes']} edges={s['edges']} variables={s['variables']} "
          f"constraints={s['constraints']} binaries={s['binaries']} subgraphs={s['subgraphs']}")
    return 0


def cmd_stats(cfg, args, network, demand) -> int:
    g = _day_graph(cfg, network, demand)
    out = g.stats()
    out["subproblems"] = _layer_counts(g)
    out["buses"] = len(network.buses)
    out["lines"] = len(network.lines)
    out["generators"] = len(network.generators)
    print(json.dumps(out, sort_keys=True))
    return 0


def cmd_solve(cfg, args, network, demand) -> int:
    mode = MONOLITHIC if args.mode == "monolithic" else RECEDING
    plan = cfg.plan(mode, args.days)
    report = run(network, demand, plan)
    out = Path(args.out) if args.out else cfg.output_dir
    out.mkdir(parents=True, exist_ok=True)
    report.write_csv(out / "report.csv")
    report.write_json(out / "summary.json")
    print(json.dumps({"mode": mode, "days": plan.days, "realized_cost": report.realized_cost,
                      "report": str(out / "report.csv"), "summary": str(out / "summary.json")}))
    return 0


def cmd_export_graph(cfg, args, network, demand) -> int:
    g = _day_graph(cfg, network, demand)
    text = to_dot(g, args.view) if args.format == "dot" else to_graphml(g, args.view)
    out = Path(args.out) if args.out else cfg.output_dir / f"day1_{args.view}.{args.format}"
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(text)
    print(str(out))
    return 0


def cmd_export_model(cfg, args, network, demand) -> int:
    g = _day_graph(cfg, network, demand)
    model, _ = flatten(g)
    text = export_mps(model) if args.format == "mps" else export_lp(model)
    out = Path(args.out) if args.out else cfg.output_dir / f"day1.{args.format}"
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_bytes(text)
    print(str(out))
    return 0


def parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hiergraph", description="Graph-structured tri-level market scheduling.")
    p.add_argument("--config", required=True, help="case YAML file")
    p.add_argument("--scenario", choices=sorted(RESERVE_SCENARIOS), help="override the reserve scenario")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("build", help="construct the day graph and print counts")
    sub.add_parser("stats", help="print graph statistics as JSON")
    s = sub.add_parser("solve", help="run a driver and write report.csv / summary.json")
    s.add_argument("--mode", choices=("receding", "monolithic"), default="receding")
    s.add_argument("--days", type=int, default=None)
    s.add_argument("--out", help="output directory (default: config output_dir)")
    e = sub.add_parser("export-graph", help="write a DOT or GraphML view of the day graph")
    e.add_argument("--view", choices=VIEWS, default="full")
    e.add_argument("--format", choices=("dot", "graphml"), default="dot")
    e.add_argument("--out")
    m = sub.add_parser("export-model", help="write the flattened day model as MPS or LP")
    m.add_argument("--format", choices=("mps", "lp"), default="mps")
    m.add_argument("--out")
    return p


COMMANDS = {"build": cmd_build, "stats": cmd_stats, "solve": cmd_solve,
            "export-graph": cmd_export_graph, "export-model": cmd_export_model}


def _fail(record: dict, code: int) -> int:
    print(json.dumps(record, sort_keys=True), file=sys.stderr)
    return code


def main(argv=None) -> int:
    args = parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        cfg = load_config(args.config)
        if args.command == "solve" and args.days is not None and args.days < 1:
            return _fail({"error": "usage", "message": "--days must be at least 1"}, 2)
        network, demand = ingest(cfg, args.scenario)
        return COMMANDS[args.command](cfg, args, network, demand)
    except IngestError as err:
        return _fail(err.record(), 2)
    except StageFailure as err:
        return _fail(err.record(), 1)
    except (ValueError, KeyError) as err:
        return _fail({"error": type(err).__name__, "message": str(err)}, 1)


if __name__ == "__main__":
    sys.exit(main())
