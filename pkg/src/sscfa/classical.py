"""Classical finite-state CFA with continuations allocated in the store.

The baseline folds the stack into the store: configurations carry a return
pointer, and non-tail calls allocate an address holding the frame (which
itself records the previous return pointer).  Tail calls and returns fork
over the closures and frames found in the store.  This is the analysis the
pushdown analyses are compared against for precision.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

from .domain import (
    AbsState,
    AClosure,
    Addr,
    FrameAddr,
    Lit,
    MONO,
    abs_atomic_eval,
    closures,
    inject_state,
    store_bind,
    store_get,
)
from .errors import ResourceLimit
from .syntax import Expr, LetCall, Ret, TailCall, free_vars
from .util import fdict

# Never allocated: reading it from the store yields the empty set, which is
# how the machine represents an empty stack.
NULL_RP = FrameAddr("<halt>")


@dataclass(frozen=True)
class StoredFrame:
    """A stack frame as a store value: binder, pending body, environment,
    and the return pointer to restore."""

    var: str
    expr: Expr
    env: fdict
    rp: FrameAddr


@dataclass(frozen=True)
class ClassicalConfig:
    state: AbsState
    rp: FrameAddr


def classical_inject(expr: Expr, policy=MONO) -> ClassicalConfig:
    fv = free_vars(expr)
    if fv:
        raise ValueError(f"program is not closed; free: {sorted(fv)}")
    return ClassicalConfig(inject_state(expr, policy), NULL_RP)


def classical_step(config: ClassicalConfig, policy=MONO) -> set[ClassicalConfig]:
    """The three nondeterministic rules with store-join updates."""
    st = config.state
    e = st.expr
    out: set[ClassicalConfig] = set()
    if isinstance(e, TailCall):
        argv = abs_atomic_eval(e.arg, st.env, st.store)
        for clo in closures(abs_atomic_eval(e.fun, st.env, st.store)):
            ctx = policy.tick(e.label, st.ctx)
            addr = policy.address(clo.lam.param, ctx)
            env = clo.env.set(clo.lam.param, addr)
            store = store_bind(st.store, addr, argv)
            out.add(ClassicalConfig(AbsState(clo.lam.body, env, store, ctx), config.rp))
    elif isinstance(e, LetCall):
        frame = StoredFrame(e.var, e.body, st.env, config.rp)
        rp = policy.frame_address(e.var, st.ctx)
        store = store_bind(st.store, rp, frozenset({frame}))
        out.add(ClassicalConfig(AbsState(e.call, st.env, store, st.ctx), rp))
    elif isinstance(e, Ret):
        vals = abs_atomic_eval(e.atom, st.env, st.store)
        for frame in store_get(st.store, config.rp):
            if not isinstance(frame, StoredFrame):
                continue
            ctx = policy.tick(e.label, st.ctx)
            addr = policy.address(frame.var, ctx)
            env = frame.env.set(frame.var, addr)
            store = store_bind(st.store, addr, vals)
            out.add(ClassicalConfig(AbsState(frame.expr, env, store, ctx), frame.rp))
    else:
        raise TypeError(f"not an ANF expression: {e!r}")
    return out


def collect_classical(config: ClassicalConfig) -> ClassicalConfig:
    """Collect a configuration: roots are the bindings of the expression's
    free variables plus the return pointer; frame chains in the store may be
    cyclic, so traversal keeps a visited set."""
    st = config.state
    roots: set = {config.rp}
    for v in free_vars(st.expr):
        roots.add(st.env[v])
    seen = set(roots)
    todo = deque(seen)
    while todo:
        addr = todo.popleft()
        for value in store_get(st.store, addr):
            touched: set = set()
            if isinstance(value, AClosure):
                for v in free_vars(value.lam):
                    touched.add(value.env[v])
            elif isinstance(value, StoredFrame):
                for v in free_vars(value.expr) - {value.var}:
                    touched.add(value.env[v])
                touched.add(value.rp)
            for nxt in touched:
                if nxt not in seen:
                    seen.add(nxt)
                    todo.append(nxt)
    store = st.store.restrict(seen)
    if len(store) == len(st.store):
        return config
    return ClassicalConfig(AbsState(st.expr, st.env, store, st.ctx), config.rp)


def classical_analyze(expr: Expr, policy=MONO, gc: bool = False,
                      max_configs: int = 10**6) -> set[ClassicalConfig]:
    """All configurations reachable from the injected one; with `gc`, each
    configuration is collected before stepping (classical ΓCFA)."""
    root = classical_inject(expr, policy)
    seen = {root}
    todo = deque([root])
    while todo:
        config = todo.popleft()
        source = collect_classical(config) if gc else config
        for succ in classical_step(source, policy):
            if succ not in seen:
                seen.add(succ)
                if len(seen) > max_configs:
                    raise ResourceLimit("configs", max_configs)
                todo.append(succ)
    return seen


def classical_flow_sets(configs: set[ClassicalConfig]) -> dict[str, set]:
    """Per-variable union of closure/literal store values across all
    reachable configurations (frame bindings excluded)."""
    flows: dict[str, set] = {}
    for config in configs:
        for addr, vals in config.state.store.items():
            if not isinstance(addr, Addr):
                continue
            values = {v for v in vals if isinstance(v, (AClosure, Lit))}
            if values:
                flows.setdefault(addr.var, set()).update(values)
    return flows
