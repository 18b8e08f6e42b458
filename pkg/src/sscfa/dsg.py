"""Dyck configuration graphs: the pushdown analysis and its construction.

The analysis explores a rooted pushdown system whose configurations pair a
control state with a stack summary.  Tail calls leave the summary unchanged,
non-tail calls push a frame through the scheme's `push`, and returns restore
the summary of the configuration that pushed the matching frame.  That
configuration is found incrementally: the builder maintains, next to the
edge set, an epsilon-closure relation H connecting configurations joined by
a path with no net stack change.

Saturation works three worklists (shortcut pairs, transitions,
configurations).  Each processed item is merged into the graph after its
implications against the current graph are computed:

- a configuration implies its no-op/push transitions, plus the pop
  transitions already enabled by pushes into its H-predecessors;
- a no-op transition immediately becomes a shortcut pair;
- a push transition enables pops at every H-successor of its target (the
  target itself included, for the zero-length path) and bridges into new
  shortcut pairs over existing pops;
- a pop transition implies shortcut pairs from the matching pushes;
- a shortcut pair (u, v) enables pops at v for pushes into u, bridges pushes
  into u over existing pops out of v, and closes H under prefix, suffix and
  through-composition.

Every rule that consumes an epsilon path also accepts the empty path, so the
pairwise completion argument covers all interleavings and the final graph is
independent of processing order.
"""

from __future__ import annotations

from collections import defaultdict, deque
from dataclasses import dataclass

from .agc import collect
from .domain import (
    AbsConfig,
    AbsFrame,
    AbsState,
    MONO,
    abs_atomic_eval,
    closures,
    inject_state,
    store_bind,
)
from .errors import ConfigurationError, ResourceLimit
from .summaries import EPS, Eps, Pop, Push, TOP_SCHEME
from .syntax import Expr, LetCall, Ret, TailCall, free_vars

DEFAULT_MAX_NODES = 10**6
DEFAULT_MAX_EDGES = 4 * 10**6

Edge = tuple  # (src, StackAction, dst)


@dataclass(frozen=True)
class DyckGraph:
    """Finished analysis result: immutable and safe to share.

    `eps` is the epsilon-closure relation H: (u, v) present means v is
    reachable from u through some non-empty path with no net stack change.
    """

    root: object
    nodes: frozenset
    edges: frozenset
    eps: frozenset
    iterations: int

    def push_edges(self):
        return [e for e in self.edges if isinstance(e[1], Push)]

    def pop_edges(self):
        return [e for e in self.edges if isinstance(e[1], Pop)]

    def eps_edges(self):
        return [e for e in self.edges if isinstance(e[1], Eps)]


def pred(config, frame, graph: DyckGraph) -> set:
    """Configurations that reach `config` by a path whose net stack change
    is a single push of `frame`: a push edge followed by an ε-path."""
    out = set()
    for src, action, dst in graph.edges:
        if isinstance(action, Push) and action.frame == frame:
            if dst == config or (dst, config) in graph.eps:
                out.add(src)
    return out


# ---------------------------------------------------------------------------
# Machines: anything the builder can saturate
# ---------------------------------------------------------------------------


def eps_push_successors(config: AbsConfig, scheme, policy=MONO) -> list:
    """No-op (tail call) and push (non-tail call) successors; a return
    contributes neither.  Operators with an empty flow set yield no
    successors."""
    st = config.state
    e = st.expr
    out = []
    if isinstance(e, TailCall):
        argv = abs_atomic_eval(e.arg, st.env, st.store)
        for clo in closures(abs_atomic_eval(e.fun, st.env, st.store)):
            ctx = policy.tick(e.label, st.ctx)
            addr = policy.address(clo.lam.param, ctx)
            env = clo.env.set(clo.lam.param, addr)
            store = store_bind(st.store, addr, argv)
            out.append((EPS, AbsConfig(AbsState(clo.lam.body, env, store, ctx), config.summary)))
    elif isinstance(e, LetCall):
        frame = AbsFrame(e.var, e.body, st.env)
        succ = AbsConfig(
            AbsState(e.call, st.env, st.store, st.ctx),
            scheme.push(frame, config.summary),
        )
        out.append((Push(frame), succ))
    return out


def pop_apply(config: AbsConfig, frame: AbsFrame, restored_summary, policy=MONO):
    """Return-transition target for popping `frame` at a return state,
    binding the frame's variable and restoring an older summary; None when
    `config` is not a return state."""
    st = config.state
    if not isinstance(st.expr, Ret):
        return None
    vals = abs_atomic_eval(st.expr.atom, st.env, st.store)
    ctx = policy.tick(st.expr.label, st.ctx)
    addr = policy.address(frame.var, ctx)
    env = frame.env.set(frame.var, addr)
    store = store_bind(st.store, addr, vals)
    return AbsConfig(AbsState(frame.expr, env, store, ctx), restored_summary)


class SscfaMachine:
    """Summarizing transition relation over a program, optionally collected
    before every transition."""

    def __init__(self, expr: Expr, scheme, policy=MONO, gc: bool = False,
                 canonicalize: bool = False):
        fv = free_vars(expr)
        if fv:
            raise ValueError(f"program is not closed; free: {sorted(fv)}")
        if gc and not scheme.supports_gc:
            raise ConfigurationError(
                f"summary scheme {scheme.name!r} cannot drive garbage collection"
            )
        self.expr = expr
        self.scheme = scheme
        self.policy = policy
        self.gc = gc
        self.canonicalize = canonicalize and gc

    def initial(self) -> AbsConfig:
        config = AbsConfig(inject_state(self.expr, self.policy), self.scheme.bottom)
        return self._out(config)

    def _in(self, config: AbsConfig) -> AbsConfig:
        return collect(config, self.scheme) if self.gc else config

    def _out(self, config: AbsConfig) -> AbsConfig:
        return collect(config, self.scheme) if self.canonicalize else config

    def successors(self, config: AbsConfig) -> list:
        """No-op and push successors; pops need graph context."""
        return [
            (action, self._out(succ))
            for action, succ in eps_push_successors(self._in(config), self.scheme, self.policy)
        ]

    def pop_successors(self, config: AbsConfig, frame: AbsFrame, pusher: AbsConfig) -> list:
        """Return-transition targets for popping `frame`, restoring the
        summary of the configuration that pushed it."""
        succ = pop_apply(self._in(config), frame, pusher.summary, self.policy)
        return [] if succ is None else [self._out(succ)]


class PushdownSystem:
    """Explicit rooted pushdown system over opaque states; used to exercise
    the builder independently of the language semantics."""

    def __init__(self, root, transitions):
        self.root = root
        self._eps_push = defaultdict(list)
        self._pops = defaultdict(list)
        self.transitions = list(transitions)
        for src, action, dst in self.transitions:
            if isinstance(action, Pop):
                self._pops[(src, action.frame)].append(dst)
            else:
                self._eps_push[src].append((action, dst))

    def initial(self):
        return self.root

    def successors(self, state) -> list:
        return list(self._eps_push.get(state, ()))

    def pop_successors(self, state, frame, pusher) -> list:
        return list(self._pops.get((state, frame), ()))


# ---------------------------------------------------------------------------
# Saturation
# ---------------------------------------------------------------------------


class DyckBuilder:
    """Worklist construction of the Dyck configuration graph plus its
    epsilon-closure graph."""

    def __init__(self, machine, max_nodes=DEFAULT_MAX_NODES, max_edges=DEFAULT_MAX_EDGES):
        self.machine = machine
        self.max_nodes = max_nodes
        self.max_edges = max_edges
        self.root = machine.initial()

        self.nodes: set = set()
        self.edges: set = set()
        self.H: set = set()
        self.h_fwd = defaultdict(set)  # u -> {v : (u, v) in H}
        self.h_bwd = defaultdict(set)  # v -> {u : (u, v) in H}
        self.pushes_into = defaultdict(set)  # dst -> {(src, frame)}
        self.pops_from = defaultdict(set)  # src -> {(frame, dst)}

        self.dS: deque = deque([self.root])
        self.dE: deque = deque()
        self.dH: deque = deque()
        self.pending_s = {self.root}
        self.pending_e: set = set()
        self.pending_h: set = set()
        self.iterations = 0

    # -- worklist plumbing ---------------------------------------------------

    def _enq_node(self, c):
        if c not in self.nodes and c not in self.pending_s:
            self.pending_s.add(c)
            self.dS.append(c)

    def _enq_edge(self, e):
        if e not in self.edges and e not in self.pending_e:
            self.pending_e.add(e)
            self.dE.append(e)

    def _enq_pair(self, p):
        if p not in self.H and p not in self.pending_h:
            self.pending_h.add(p)
            self.dH.append(p)

    def _enqueue(self, d_s, d_e, d_h):
        for c in d_s:
            self._enq_node(c)
        for e in d_e:
            self._enq_edge(e)
        for p in d_h:
            self._enq_pair(p)

    # -- implication rules -----------------------------------------------------

    def _pop_edges_for(self, source, frame, pusher):
        """Pop transitions out of `source` for a matched (frame, pusher)."""
        out = []
        for dst in self.machine.pop_successors(source, frame, pusher):
            out.append((source, Pop(frame), dst))
        return out

    def _deltas(self, d_s, d_e, d_h):
        """Drop already-known items, keeping first-seen order."""
        seen_s, seen_e, seen_h = set(), set(), set()
        out_s = [x for x in d_s if x not in self.nodes and not (x in seen_s or seen_s.add(x))]
        out_e = [x for x in d_e if x not in self.edges and not (x in seen_e or seen_e.add(x))]
        out_h = [x for x in d_h if x not in self.H and not (x in seen_h or seen_h.add(x))]
        return out_s, out_e, out_h

    def explore(self, c):
        """Transitions implied by a configuration: its no-op and push
        successors, plus pops already enabled by the surrounding graph."""
        d_e = []
        for action, dst in self.machine.successors(c):
            d_e.append((c, action, dst))
        for t in {c} | self.h_bwd[c]:
            for pusher, frame in self.pushes_into[t]:
                d_e.extend(self._pop_edges_for(c, frame, pusher))
        d_s = [dst for (_, _, dst) in d_e]
        return self._deltas(d_s, d_e, [])

    def add_edge(self, edge):
        """Implications of a transition.  A no-op transition immediately
        becomes a shortcut pair; push and pop transitions interact with the
        epsilon closure to enable pops and create shortcut pairs."""
        src, action, dst = edge
        if isinstance(action, Eps):
            return self._deltas([], [], [(src, dst)])
        if isinstance(action, Push):
            frame = action.frame
            d_e, d_h = [], []
            for source in {dst} | self.h_fwd[dst]:
                d_e.extend(self._pop_edges_for(source, frame, src))
                for pframe, pop_dst in self.pops_from[source]:
                    if pframe == frame:
                        d_h.append((src, pop_dst))
            d_s = [t for (_, _, t) in d_e]
            return self._deltas(d_s, d_e, d_h)
        # pop: only new shortcut pairs, from pre-existing matching pushes
        frame = action.frame
        d_h = []
        for target in {src} | self.h_bwd[src]:
            for pusher, pframe in self.pushes_into[target]:
                if pframe == frame:
                    d_h.append((pusher, dst))
        return self._deltas([], [], d_h)

    def add_short(self, pair):
        """Implications of a shortcut pair (u, v): pops at v enabled by
        pushes into u, bridges over existing pops out of v, and the closure
        of H under prefix, suffix, and through-composition."""
        u, v = pair
        d_e, d_h = [], []
        for pusher, frame in self.pushes_into[u]:
            d_e.extend(self._pop_edges_for(v, frame, pusher))
            for pframe, pop_dst in self.pops_from[v]:
                if pframe == frame:
                    d_h.append((pusher, pop_dst))
        before = self.h_bwd[u]
        after = self.h_fwd[v]
        d_h.extend((a, v) for a in before)
        d_h.extend((u, b) for b in after)
        d_h.extend((a, b) for a in before for b in after)
        d_s = [t for (_, _, t) in d_e]
        return self._deltas(d_s, d_e, d_h)

    # -- merging ---------------------------------------------------------------

    def _merge_node(self, c):
        self.nodes.add(c)
        if len(self.nodes) > self.max_nodes:
            raise ResourceLimit("nodes", self.max_nodes)

    def _merge_edge(self, edge):
        src, action, dst = edge
        self.edges.add(edge)
        if len(self.edges) > self.max_edges:
            raise ResourceLimit("edges", self.max_edges)
        if isinstance(action, Push):
            self.pushes_into[dst].add((src, action.frame))
        elif isinstance(action, Pop):
            self.pops_from[src].add((action.frame, dst))
        self._enq_node(src)
        self._enq_node(dst)

    def _merge_pair(self, pair):
        u, v = pair
        self.H.add(pair)
        self.h_fwd[u].add(v)
        self.h_bwd[v].add(u)

    # -- driver ------------------------------------------------------------------

    def run(self, rng=None) -> DyckGraph:
        while self.dH or self.dE or self.dS:
            kind = self._pick_kind(rng)
            if kind == "H":
                pair = self._take(self.dH, self.pending_h, rng)
                deltas = self.add_short(pair)
                self._merge_pair(pair)
            elif kind == "E":
                edge = self._take(self.dE, self.pending_e, rng)
                deltas = self.add_edge(edge)
                self._merge_edge(edge)
            else:
                node = self._take(self.dS, self.pending_s, rng)
                deltas = self.explore(node)
                self._merge_node(node)
            self._enqueue(*deltas)
            self.iterations += 1
        return DyckGraph(
            root=self.root,
            nodes=frozenset(self.nodes),
            edges=frozenset(self.edges),
            eps=frozenset(self.H),
            iterations=self.iterations,
        )

    def _pick_kind(self, rng):
        if rng is None:
            if self.dH:
                return "H"
            if self.dE:
                return "E"
            return "S"
        kinds = [k for k, wl in (("H", self.dH), ("E", self.dE), ("S", self.dS)) if wl]
        return rng.choice(kinds)

    @staticmethod
    def _take(worklist: deque, pending: set, rng):
        if rng is None:
            item = worklist.popleft()
        else:
            i = rng.randrange(len(worklist))
            worklist.rotate(-i)
            item = worklist.popleft()
        pending.discard(item)
        return item


def saturate(machine, max_nodes=DEFAULT_MAX_NODES, max_edges=DEFAULT_MAX_EDGES,
             rng=None) -> DyckGraph:
    return DyckBuilder(machine, max_nodes, max_edges).run(rng)


# ---------------------------------------------------------------------------
# Program-level entry points
# ---------------------------------------------------------------------------


def inject_abs(expr: Expr, scheme, policy=MONO) -> AbsConfig:
    """Root configuration: empty environment and store, bottom summary."""
    fv = free_vars(expr)
    if fv:
        raise ValueError(f"program is not closed; free: {sorted(fv)}")
    return AbsConfig(inject_state(expr, policy), scheme.bottom)


def sscfa_step(config: AbsConfig, graph: DyckGraph, scheme, policy=MONO,
               at_node=None) -> set:
    """All (action, successor) pairs of a configuration.

    No-op and push successors need no graph; pop successors consult the
    graph for matching pushes, keyed on `at_node` (the node identity)
    when it differs from the configuration being stepped.
    """
    out = set(eps_push_successors(config, scheme, policy))
    node = config if at_node is None else at_node
    for src, action, dst in graph.edges:
        if isinstance(action, Push) and (dst == node or (dst, node) in graph.eps):
            succ = pop_apply(config, action.frame, src.summary, policy)
            if succ is not None:
                out.add((Pop(action.frame), succ))
    return out


def build_dyck(expr: Expr, scheme, policy=MONO, gc: bool = False,
               node_merge: bool = False, max_nodes=DEFAULT_MAX_NODES,
               max_edges=DEFAULT_MAX_EDGES, rng=None,
               canonicalize: bool = False) -> DyckGraph:
    """Least Dyck configuration graph of a program under the given scheme,
    policy, and collection mode."""
    if node_merge:
        if gc:
            raise ConfigurationError(
                "node merging cannot be combined with GC: collected stores "
                "depend on the per-state summary"
            )
        return _build_merged(expr, scheme, policy, max_nodes, max_edges, rng)
    machine = SscfaMachine(expr, scheme, policy, gc=gc, canonicalize=canonicalize)
    return saturate(machine, max_nodes, max_edges, rng)


def _build_merged(expr, scheme, policy, max_nodes, max_edges, rng) -> DyckGraph:
    """Node-merging mode: one node per control state, carrying the join of
    every summary the exact analysis would attach to it.

    Without GC the successor states of a transition do not depend on the
    source's summary, so the state graph can be built first (the one-point
    summary makes configurations coincide with states) and the real scheme's
    summaries propagated over it as a monotone dataflow problem.
    """
    base = saturate(SscfaMachine(expr, TOP_SCHEME, policy, gc=False),
                    max_nodes, max_edges, rng)
    state_of = {c: c.state for c in base.nodes}
    summary = {s: scheme.bottom for s in state_of.values()}

    pop_preds = {}
    for src, action, dst in base.edges:
        if isinstance(action, Pop):
            pop_preds[(src, action, dst)] = pred(src, action.frame, base)

    changed = True
    while changed:
        changed = False
        for src, action, dst in base.edges:
            s, t = state_of[src], state_of[dst]
            if isinstance(action, Eps):
                new = scheme.join(summary[t], summary[s])
            elif isinstance(action, Push):
                new = scheme.join(summary[t], scheme.push(action.frame, summary[s]))
            else:
                new = summary[t]
                for p in pop_preds[(src, action, dst)]:
                    new = scheme.join(new, summary[state_of[p]])
            if new != summary[t]:
                summary[t] = new
                changed = True

    def lift(c):
        return AbsConfig(state_of[c], summary[state_of[c]])

    return DyckGraph(
        root=lift(base.root),
        nodes=frozenset(lift(c) for c in base.nodes),
        edges=frozenset((lift(u), a, lift(v)) for u, a, v in base.edges),
        eps=frozenset((lift(u), lift(v)) for u, v in base.eps),
        iterations=base.iterations,
    )
