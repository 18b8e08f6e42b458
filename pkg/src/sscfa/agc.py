"""Abstract garbage collection over summarized configurations.

A configuration's root set is its stack summary (viewed as addresses)
together with the bindings of its expression's free variables.  Values touch
addresses through their environments and addresses touch values through the
store, so computing the reachable addresses is a bipartite graph search.
Collection restricts the store to the reachable addresses; the collected
transition relation collects before every transition.
"""

from __future__ import annotations

from collections import deque

from .concrete import CClosure, ConcConfig, ConcState
from .domain import AbsConfig, AbsState, AClosure, Addr, Lit, store_get
from .errors import MalformedValue
from .syntax import free_vars


def touch_clo(value) -> frozenset[Addr]:
    """Addresses referenced by a value: a closure touches the bindings of
    its lambda's free variables; a literal touches nothing."""
    if isinstance(value, Lit):
        return frozenset()
    if isinstance(value, AClosure):
        out = set()
        for v in free_vars(value.lam):
            if v not in value.env:
                raise MalformedValue(
                    f"closure over lambda @{value.lam.label} lacks a binding for {v}"
                )
            out.add(value.env[v])
        return frozenset(out)
    raise TypeError(f"not an abstract value: {value!r}")


def root(config: AbsConfig, scheme) -> frozenset[Addr]:
    """Root set: summary addresses plus the bindings of the free variables
    of the control expression."""
    st = config.state
    out = set(scheme.stack_roots(config.summary))
    for v in free_vars(st.expr):
        out.add(st.env[v])
    return frozenset(out)


def reachable(config: AbsConfig, scheme) -> frozenset[Addr]:
    """Least fixed point of the touching relation seeded by the root set."""
    store = config.state.store
    seen = set(root(config, scheme))
    todo = deque(seen)
    while todo:
        addr = todo.popleft()
        for value in store_get(store, addr):
            for nxt in touch_clo(value):
                if nxt not in seen:
                    seen.add(nxt)
                    todo.append(nxt)
    return frozenset(seen)


def collect(config: AbsConfig, scheme) -> AbsConfig:
    """Restrict the store to the reachable addresses; unreachable entries
    become absent (the empty set)."""
    live = reachable(config, scheme)
    st = config.state
    store = st.store.restrict(live)
    if len(store) == len(st.store):
        return config
    return AbsConfig(AbsState(st.expr, st.env, store, st.ctx), config.summary)


def gc_step(config: AbsConfig, graph, scheme, policy):
    """Successors of the collected configuration: collect, then step.

    Graph look-ups (matching pops to pushes) stay keyed on the original,
    uncollected configuration, which is the node identity.
    """
    from . import dsg

    return dsg.sscfa_step(collect(config, scheme), graph, scheme, policy, at_node=config)


# --- concrete liveness (for differential GC-soundness tests) -----------------


def live_restrict(config: ConcConfig) -> ConcConfig:
    """Restrict a concrete store to the addresses reachable from the current
    expression's free variables and from the stack frames.

    The concrete machine itself never collects; this is the measurement the
    GC-soundness properties compare against.
    """
    st = config.state
    roots = set()
    for v in free_vars(st.expr):
        roots.add(st.env[v])
    for frame in config.stack:
        for v in free_vars(frame.expr) - {frame.var}:
            roots.add(frame.env[v])
    seen = set(roots)
    todo = deque(seen)
    while todo:
        addr = todo.popleft()
        value = st.store.get(addr)
        if isinstance(value, CClosure):
            for v in free_vars(value.lam):
                nxt = value.env[v]
                if nxt not in seen:
                    seen.add(nxt)
                    todo.append(nxt)
    return ConcConfig(ConcState(st.expr, st.env, st.store.restrict(seen)), config.stack)
