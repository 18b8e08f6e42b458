"""Flow-set reports: per-variable value sets aggregated over an analysis.

The default report aggregates over all reachable configurations (a
whole-program summary per variable); the per-point view keys on the control
expression's label as well.
"""

from __future__ import annotations

import json

from .classical import classical_flow_sets
from .concrete import CClosure, Trace
from .domain import Addr, value_sort_key
from .export import render_value, value_json


def graph_flow_sets(graph) -> dict[str, set]:
    flows: dict[str, set] = {}
    for config in graph.nodes:
        for addr, vals in config.state.store.items():
            if isinstance(addr, Addr) and vals:
                flows.setdefault(addr.var, set()).update(vals)
    return flows


def graph_flow_sets_per_point(graph) -> dict[tuple[int, str], set]:
    flows: dict[tuple[int, str], set] = {}
    for config in graph.nodes:
        label = config.state.expr.label
        for addr, vals in config.state.store.items():
            if isinstance(addr, Addr) and vals:
                flows.setdefault((label, addr.var), set()).update(vals)
    return flows


def trace_flow_sets(trace: Trace) -> dict[str, set]:
    """Binding history of a concrete run: every value each variable's
    addresses took over the trace."""
    flows: dict[str, set] = {}
    for config in trace.configs:
        for addr, value in config.state.store.items():
            flows.setdefault(addr.var, set()).add(value)
    return flows


def render_concrete_value(value) -> str:
    if isinstance(value, CClosure):
        from .syntax import pretty

        return f"{pretty(value.lam)}@{value.lam.label}"
    return str(value)


def render_flow_table(flows: dict[str, set], concrete: bool = False) -> str:
    render = render_concrete_value if concrete else render_value
    lines = []
    width = max((len(v) for v in flows), default=0)
    for var in sorted(flows):
        vals = sorted(render(v) for v in flows[var])
        lines.append(f"{var.ljust(width)}  {{{', '.join(vals)}}}")
    return "\n".join(lines) + ("\n" if lines else "")


def flow_json(flows: dict[str, set], concrete: bool = False) -> str:
    if concrete:
        payload = {var: sorted(map(render_concrete_value, vals)) for var, vals in flows.items()}
    else:
        payload = {
            var: [value_json(v) for v in sorted(vals, key=value_sort_key)]
            for var, vals in flows.items()
        }
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def per_point_table(flows: dict[tuple[int, str], set]) -> str:
    lines = []
    for (label, var) in sorted(flows):
        vals = sorted(render_value(v) for v in flows[(label, var)])
        lines.append(f"@{label} {var}  {{{', '.join(vals)}}}")
    return "\n".join(lines) + ("\n" if lines else "")


def comparison_table(per_analysis: dict[str, dict[str, set]]) -> str:
    """Side-by-side per-variable flow sets, one column per analysis."""
    names = list(per_analysis)
    variables = sorted({v for flows in per_analysis.values() for v in flows})
    rows = [["variable"] + names]
    for var in variables:
        row = [var]
        for name in names:
            vals = per_analysis[name].get(var, set())
            row.append("{" + ", ".join(sorted(render_value(v) for v in vals)) + "}")
        rows.append(row)
    widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
    out = []
    for r in rows:
        out.append("  ".join(cell.ljust(w) for cell, w in zip(r, widths)).rstrip())
    return "\n".join(out) + "\n"


__all__ = [
    "classical_flow_sets",
    "comparison_table",
    "flow_json",
    "graph_flow_sets",
    "graph_flow_sets_per_point",
    "per_point_table",
    "render_concrete_value",
    "render_flow_table",
    "trace_flow_sets",
]
