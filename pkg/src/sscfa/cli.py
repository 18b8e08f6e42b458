"""Command-line front door.

    sscfa analyze <file> [--analysis A] [--summary S] [--policy P] [--gc] ...
    sscfa compare <file>

Exit codes: 0 success, 1 analysis resource failure, 2 usage/parse or
configuration errors.
"""

from __future__ import annotations

import argparse
import sys

from .classical import classical_analyze, classical_flow_sets
from .concrete import run as concrete_run, trace_jsonl, Halted, StepLimit, Stuck
from .domain import MONO, KCallSite
from .dsg import DEFAULT_MAX_EDGES, DEFAULT_MAX_NODES, build_dyck
from .errors import ConfigurationError, ResourceLimit, SourceError
from .export import graph_json_text, graph_to_dot
from .report import (
    flow_json,
    graph_flow_sets,
    graph_flow_sets_per_point,
    per_point_table,
    render_flow_table,
    trace_flow_sets,
)
from .summaries import SCHEMES
from .syntax import anf_of_source

DEFAULT_MAX_STEPS = 10**5

ANALYSES = ("concrete", "classical", "pdcfa", "sscfa", "ssgcfa")


def _parse_policy(text: str):
    if text == "mono":
        return MONO
    if text.startswith("kcall:"):
        try:
            k = int(text.split(":", 1)[1])
        except ValueError:
            raise ConfigurationError(f"bad policy {text!r}; expected mono or kcall:K")
        return KCallSite(k)
    raise ConfigurationError(f"bad policy {text!r}; expected mono or kcall:K")


def _load(path: str):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigurationError(f"cannot read {path}: {exc}")
    return anf_of_source(text)


def _resolve_scheme(args) -> tuple:
    """Map (analysis, summary, gc) flags to (scheme, gc)."""
    analysis = args.analysis
    summary = args.summary
    gc = args.gc
    if analysis == "pdcfa":
        if summary not in (None, "top"):
            raise ConfigurationError("pdcfa fixes the summary to 'top'")
        if gc:
            raise ConfigurationError("pdcfa cannot collect: the top summary has no address view")
        return SCHEMES["top"], False
    if analysis == "ssgcfa":
        gc = True
        summary = summary or "reach-addr"
    elif analysis == "sscfa":
        summary = summary or "frame-set"
    scheme = SCHEMES[summary]
    if gc and not scheme.supports_gc:
        raise ConfigurationError(
            f"summary scheme {scheme.name!r} cannot drive garbage collection"
        )
    return scheme, gc


def _write(path: str | None, text: str):
    if path is not None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def cmd_analyze(args) -> int:
    expr = _load(args.program)
    policy = _parse_policy(args.policy)

    if args.analysis == "concrete":
        if args.dot:
            raise ConfigurationError("the concrete interpreter has no graph to export")
        trace = concrete_run(expr, args.max_steps)
        flows = trace_flow_sets(trace)
        status = trace.status
        if isinstance(status, Halted):
            from .report import render_concrete_value

            print(f"halted after {len(trace.configs) - 1} steps: {render_concrete_value(status.value)}")
        elif isinstance(status, StepLimit):
            print(f"step limit reached ({args.max_steps})")
        else:
            print(f"stuck: {status.reason}")
        _write(args.json, trace_jsonl(trace))
        table = render_flow_table(flows, concrete=True)
        _write(args.report, table)
        if not (args.json or args.report or args.dot):
            print(table, end="")
        return 0

    if args.analysis == "classical":
        if args.dot:
            raise ConfigurationError("the classical baseline has no graph export")
        configs = classical_analyze(expr, policy, gc=args.gc, max_configs=args.max_nodes)
        flows = classical_flow_sets(configs)
        print(f"{len(configs)} reachable configurations")
        _write(args.json, flow_json(flows))
        table = render_flow_table(flows)
        _write(args.report, table)
        if not (args.json or args.report):
            print(table, end="")
        return 0

    scheme, gc = _resolve_scheme(args)
    graph = build_dyck(
        expr,
        scheme,
        policy,
        gc=gc,
        node_merge=args.node_merge,
        max_nodes=args.max_nodes,
        max_edges=args.max_edges,
        canonicalize=args.canonicalize_gc,
    )
    print(
        f"{len(graph.nodes)} nodes, {len(graph.edges)} edges, "
        f"{len(graph.eps)} eps pairs ({graph.iterations} iterations)"
    )
    _write(args.dot, graph_to_dot(graph, scheme))
    _write(args.json, graph_json_text(graph, scheme))
    if args.per_point:
        table = per_point_table(graph_flow_sets_per_point(graph))
    else:
        table = render_flow_table(graph_flow_sets(graph))
    _write(args.report, table)
    if not (args.dot or args.json or args.report):
        print(table, end="")
    return 0


def cmd_compare(args) -> int:
    from .report import comparison_table
    from .summaries import REACH_ADDR, TOP_SCHEME

    expr = _load(args.program)
    classical = classical_flow_sets(classical_analyze(expr, MONO, max_configs=args.max_nodes))
    pdcfa = graph_flow_sets(
        build_dyck(expr, TOP_SCHEME, MONO, max_nodes=args.max_nodes, max_edges=args.max_edges)
    )
    ssgcfa = graph_flow_sets(
        build_dyck(expr, REACH_ADDR, MONO, gc=True, max_nodes=args.max_nodes,
                   max_edges=args.max_edges)
    )
    print(
        comparison_table(
            {"classical-0cfa": classical, "pdcfa": pdcfa, "ssgcfa": ssgcfa}
        ),
        end="",
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sscfa", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    pa = sub.add_parser("analyze", help="run one analysis on a program file")
    pa.add_argument("program")
    pa.add_argument("--analysis", choices=ANALYSES, default="sscfa")
    pa.add_argument("--summary", choices=sorted(SCHEMES), default=None)
    pa.add_argument("--policy", default="mono", help="mono or kcall:K")
    pa.add_argument("--gc", action="store_true")
    pa.add_argument("--dot", metavar="PATH")
    pa.add_argument("--json", metavar="PATH")
    pa.add_argument("--report", metavar="PATH")
    pa.add_argument("--per-point", action="store_true")
    pa.add_argument("--max-steps", type=int, default=DEFAULT_MAX_STEPS)
    pa.add_argument("--max-nodes", type=int, default=DEFAULT_MAX_NODES)
    pa.add_argument("--max-edges", type=int, default=DEFAULT_MAX_EDGES)
    pa.add_argument("--node-merge", action="store_true")
    pa.add_argument("--canonicalize-gc", action="store_true")
    pa.set_defaults(func=cmd_analyze)

    pc = sub.add_parser("compare", help="classical vs pdcfa vs ssgcfa precision table")
    pc.add_argument("program")
    pc.add_argument("--max-nodes", type=int, default=DEFAULT_MAX_NODES)
    pc.add_argument("--max-edges", type=int, default=DEFAULT_MAX_EDGES)
    pc.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (SourceError, ConfigurationError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ResourceLimit as exc:
        print(f"analysis failed: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
