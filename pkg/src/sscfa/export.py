"""Deterministic DOT and JSON exports of analysis results.

All iteration is sorted, so identical inputs and flags produce byte-identical
output regardless of hash seeding.
"""

from __future__ import annotations

import json

from .domain import AbsConfig, AClosure, Lit, value_sort_key
from .summaries import Eps, Pop, Push
from .syntax import pretty
from .util import fdict


def render_value(v) -> str:
    if isinstance(v, Lit):
        return str(v.value)
    if isinstance(v, AClosure):
        return f"{pretty(v.lam)}@{v.lam.label}"
    return str(v)


def value_json(v):
    if isinstance(v, Lit):
        return v.value
    if isinstance(v, AClosure):
        return {"lam": v.lam.label, "env": env_json(v.env)}
    return str(v)


def env_json(env: fdict) -> dict:
    return {var: env[var].render() for var in sorted(env)}


def store_json(store: fdict) -> dict:
    out = {}
    for addr in sorted(store, key=lambda a: a.sort_key()):
        out[addr.render()] = [value_json(v) for v in sorted(store[addr], key=value_sort_key)]
    return out


def _frame_json(frame) -> dict:
    return {"var": frame.var, "expr": frame.expr.label, "env": env_json(frame.env)}


def _action_json(action) -> tuple[str, dict | None]:
    if isinstance(action, Eps):
        return "eps", None
    if isinstance(action, Push):
        return "push", _frame_json(action.frame)
    if isinstance(action, Pop):
        return "pop", _frame_json(action.frame)
    raise TypeError(f"not a stack action: {action!r}")


def config_sort_key(config, scheme):
    st = config.state
    return (
        st.expr.label,
        tuple(sorted((v, a.sort_key()) for v, a in st.env.items())),
        tuple(sorted((a.render(), tuple(sorted(map(value_sort_key, vs))))
                     for a, vs in st.store.items())),
        st.ctx,
        scheme.sort_key(config.summary),
    )


def _node_ids(graph, scheme) -> dict:
    ordered = sorted(graph.nodes, key=lambda c: config_sort_key(c, scheme))
    return {c: f"n{i}" for i, c in enumerate(ordered)}


def _action_label(action) -> str:
    return action.render()


def graph_to_json(graph, scheme) -> dict:
    ids = _node_ids(graph, scheme)
    nodes = []
    for config, node_id in sorted(ids.items(), key=lambda kv: int(kv[1][1:])):
        st = config.state
        nodes.append(
            {
                "id": node_id,
                "expr": st.expr.label,
                "env": env_json(st.env),
                "store": store_json(st.store),
                "summary": scheme.to_json(config.summary),
            }
        )
    edges = []
    for src, action, dst in graph.edges:
        kind, frame = _action_json(action)
        edges.append({"src": ids[src], "action": kind, "frame": frame, "dst": ids[dst]})
    edges.sort(key=lambda e: (e["src"], e["dst"], e["action"], json.dumps(e["frame"], sort_keys=True)))
    eps = sorted([ids[u], ids[v]] for u, v in graph.eps)
    return {"nodes": nodes, "edges": edges, "eps": eps, "root": ids[graph.root]}


def graph_json_text(graph, scheme) -> str:
    return json.dumps(graph_to_json(graph, scheme), indent=2, sort_keys=True) + "\n"


def _dot_escape(s: str) -> str:
    return s.replace("\\", "\\\\").replace('"', '\\"')


def graph_to_dot(graph, scheme, name: str = "dsg") -> str:
    """Graphviz rendering: nodes labeled with the control expression's label
    and summary; ε-closure edges dashed."""
    ids = _node_ids(graph, scheme)
    lines = [f"digraph {name} {{", "  rankdir=TB;", '  node [shape=box, fontname="monospace"];']
    for config, node_id in sorted(ids.items(), key=lambda kv: int(kv[1][1:])):
        st = config.state
        label = f"@{st.expr.label} {pretty(st.expr)}"
        if len(label) > 40:
            label = label[:37] + "..."
        label += f"\\nss={scheme.render(config.summary)}"
        shape = ' peripheries=2' if config == graph.root else ""
        lines.append(f'  {node_id} [label="{_dot_escape(label)}"{shape}];')
    edge_lines = []
    for src, action, dst in graph.edges:
        edge_lines.append(f'  {ids[src]} -> {ids[dst]} [label="{_dot_escape(_action_label(action))}"];')
    for u, v in graph.eps:
        edge_lines.append(f'  {ids[u]} -> {ids[v]} [style=dashed, color=gray, constraint=false];')
    lines.extend(sorted(edge_lines))
    lines.append("}")
    return "\n".join(lines) + "\n"
