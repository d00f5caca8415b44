"""Command-line entry point.

    tbnet analyze <model> [--no-ta] [--no-relative] [--time-limit R]
                  [--max-states N] [--dot F] [--records F] [--query F]
                  [--simulate --seed S --runs R --steps K] [--coverage]

Exit codes: 0 success, 1 analysis findings (coverage violations or a capped
graph), 2 usage or input errors.  ``TBNET_LOG`` selects the log level.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from fractions import Fraction

from .graph import BuildConfig, build_graph
from .model import TBNetError, validate
from .output import export_dot, export_records
from .parser import parse_net
from .properties import QueryError, run_queries
from .rational import parse_rational
from .simulate import coverage_check, simulate


def _build_arg_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tbnet",
        description="Symbolic time-coverage reachability analysis of "
                    "time-basic Petri nets.")
    sub = parser.add_subparsers(dest="command", required=True)
    analyze = sub.add_parser("analyze", help="build the reachability graph")
    analyze.add_argument("model", help="model file (.tb)")
    analyze.add_argument("--no-ta", action="store_true",
                         help="disable anonymous-timestamp replacement")
    analyze.add_argument("--no-relative", action="store_true",
                         help="keep absolute time references in constraints")
    analyze.add_argument("--time-limit", type=parse_rational, default=None,
                         metavar="R", help="relative time limit")
    analyze.add_argument("--max-states", type=int, default=100000, metavar="N")
    analyze.add_argument("--dot", metavar="F", help="write DOT graph")
    analyze.add_argument("--records", metavar="F", help="write graph records")
    analyze.add_argument("--query", metavar="F", help="run query file")
    analyze.add_argument("--simulate", action="store_true",
                         help="run random concrete traces")
    analyze.add_argument("--coverage", action="store_true",
                         help="check simulated traces against the graph")
    analyze.add_argument("--seed", type=int, default=0)
    analyze.add_argument("--runs", type=int, default=20)
    analyze.add_argument("--steps", type=int, default=30)
    return parser


def run(args: argparse.Namespace) -> int:
    with open(args.model, encoding="utf-8") as handle:
        net = parse_net(handle.read())
    for diagnostic in validate(net):
        print(f"note: {diagnostic}")
    time_limit = args.time_limit
    if time_limit is None and net.time_limit is not None:
        time_limit = net.time_limit
    config = BuildConfig(ta_enabled=not args.no_ta,
                         relative_enabled=not args.no_relative,
                         time_limit=time_limit,
                         max_states=args.max_states)
    graph = build_graph(net, config)
    deadlocks = sum(1 for n in graph.nodes if n.deadlock)
    print(f"graph: {len(graph.nodes)} states, {len(graph.edges)} edges, "
          f"{deadlocks} deadlock states"
          + (" (incomplete: state cap reached)" if graph.capped else ""))
    findings = graph.capped

    if args.dot:
        with open(args.dot, "w", encoding="utf-8") as handle:
            handle.write(export_dot(graph))
        print(f"wrote {args.dot}")
    if args.records:
        with open(args.records, "w", encoding="utf-8") as handle:
            handle.write(export_records(graph))
        print(f"wrote {args.records}")
    if args.query:
        with open(args.query, encoding="utf-8") as handle:
            for outcome in run_queries(graph, handle.read()):
                print(outcome.text)
    if args.simulate and not args.coverage:
        for run_idx in range(args.runs):
            trace = simulate(net, args.seed + run_idx, args.steps)
            print(f"trace {run_idx} ({len(trace.steps)} steps):")
            for i, step in enumerate(trace.steps):
                tup = ",".join(f"{p}@{v}" for p, v in step.tuple_values)
                print(f"  {i}\t{step.transition}\t{tup}\t{step.time}")
    if args.coverage:
        report = coverage_check(net, graph, args.runs, args.steps, args.seed)
        status = "ok" if report.ok else f"{len(report.violations)} violations"
        print(f"coverage: {report.runs} runs, {report.steps_checked} steps "
              f"checked, {status}")
        for violation in report.violations[:10]:
            print(f"  run {violation.run} step {violation.step}: "
                  f"{violation.reason}")
        findings = findings or not report.ok
    return 1 if findings else 0


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(
        level=os.environ.get("TBNET_LOG", "WARNING").upper(),
        format="%(levelname)s %(name)s: %(message)s")
    parser = _build_arg_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        return run(args)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (TBNetError, QueryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
