"""Independent oracles the test suite checks the analyses against.

Each oracle recomputes a result through a structurally different route:
substitution instead of environments, naive bottom-up closure instead of
incremental saturation, explicit stacks instead of epsilon-closure matching.
"""

from __future__ import annotations

from collections import deque

from sscfa.domain import AbsConfig, AbsState, abs_atomic_eval, closures, store_bind
from sscfa.summaries import AbsFrame, Eps, Pop, Push
from sscfa.syntax import IntLit, Lam, LetCall, Ret, TailCall, VarRef, free_vars
from sscfa.util import EMPTY

# ---------------------------------------------------------------------------
# Substitution-based evaluator (concrete ground truth, no environments)
# ---------------------------------------------------------------------------


class _SubstStuck(Exception):
    pass


def _subst_atom(atom, var: str, value, fresh):
    if isinstance(atom, VarRef):
        if atom.name != var:
            return atom
        return IntLit(value) if isinstance(value, int) else value
    if isinstance(atom, IntLit):
        return atom
    if isinstance(atom, Lam):
        return _subst_lam(atom, var, value, fresh)
    raise TypeError(atom)


def _subst_lam(lam: Lam, var: str, value, fresh) -> Lam:
    if lam.param == var:
        return lam
    if not isinstance(value, int) and lam.param in free_vars(value):
        new_param = f"{lam.param}~{next(fresh)}"
        body = _rename(lam.body, lam.param, new_param)
        return Lam(new_param, _subst(body, var, value, fresh), lam.label)
    return Lam(lam.param, _subst(lam.body, var, value, fresh), lam.label)


def _rename(e, old: str, new: str):
    def atom(a):
        if isinstance(a, VarRef):
            return VarRef(new) if a.name == old else a
        if isinstance(a, Lam):
            if a.param == old:
                return a
            return Lam(a.param, _rename(a.body, old, new), a.label)
        return a

    if isinstance(e, Ret):
        return Ret(atom(e.atom), e.label)
    if isinstance(e, TailCall):
        return TailCall(atom(e.fun), atom(e.arg), e.label)
    if isinstance(e, LetCall):
        call = _rename(e.call, old, new)
        if e.var == old:
            return LetCall(e.var, call, e.body, e.label)
        return LetCall(e.var, call, _rename(e.body, old, new), e.label)
    raise TypeError(e)


def _subst(e, var: str, value, fresh):
    if isinstance(e, Ret):
        return Ret(_subst_atom(e.atom, var, value, fresh), e.label)
    if isinstance(e, TailCall):
        return TailCall(
            _subst_atom(e.fun, var, value, fresh),
            _subst_atom(e.arg, var, value, fresh),
            e.label,
        )
    if isinstance(e, LetCall):
        call = _subst(e.call, var, value, fresh)
        if e.var == var:
            return LetCall(e.var, call, e.body, e.label)
        return LetCall(e.var, call, _subst(e.body, var, value, fresh), e.label)
    raise TypeError(e)


def _atom_value(atom):
    """A value is a Lam term or an int; a leftover variable is stuck."""
    if isinstance(atom, Lam):
        return atom
    if isinstance(atom, IntLit):
        return atom.value
    if isinstance(atom, VarRef):
        raise _SubstStuck(f"unbound variable: {atom.name}")
    raise TypeError(atom)


def subst_eval(expr, max_steps: int = 10_000):
    """Iterative CBV evaluation by capture-avoiding substitution.

    Returns ("halt", value), ("limit",), or ("stuck", reason).  Labels are
    preserved through substitution, so a halting lambda can be compared to a
    machine closure by label.
    """
    fresh = iter(range(10**9))
    e = expr
    pending: list[tuple[str, object]] = []
    fuel = max_steps
    try:
        while True:
            if fuel < 0:
                return ("limit",)
            if isinstance(e, Ret):
                value = _atom_value(e.atom)
                if not pending:
                    return ("halt", value)
                var, body = pending.pop()
                e = _subst(body, var, value, fresh)
                fuel -= 1
            elif isinstance(e, TailCall):
                f = _atom_value(e.fun)
                if not isinstance(f, Lam):
                    return ("stuck", "applied a non-closure value")
                a = _atom_value(e.arg)
                e = _subst(f.body, f.param, a, fresh)
                fuel -= 1
            elif isinstance(e, LetCall):
                pending.append((e.var, e.body))
                e = e.call
                fuel -= 1
            else:
                raise TypeError(e)
    except _SubstStuck as exc:
        return ("stuck", str(exc))


# ---------------------------------------------------------------------------
# Epsilon-closure oracles over a fixed edge set
# ---------------------------------------------------------------------------


def same_level_pairs(edges) -> set:
    """Pairs of nodes joined by a non-empty path whose net stack change is
    empty, by naive bottom-up closure of the balanced-path grammar:

        B ::= eps-edge | push(g) B? pop(g) | B B
    """
    eps = {(u, v) for (u, a, v) in edges if isinstance(a, Eps)}
    pushes = [(u, a.frame, v) for (u, a, v) in edges if isinstance(a, Push)]
    pops = [(u, a.frame, v) for (u, a, v) in edges if isinstance(a, Pop)]
    closure = set(eps)
    changed = True
    while changed:
        changed = False
        new = set()
        for (a, g, x) in pushes:
            for (y, g2, b) in pops:
                if g == g2 and (x == y or (x, y) in closure) and (a, b) not in closure:
                    new.add((a, b))
        for (a, b) in closure:
            for (b2, c) in closure:
                if b == b2 and (a, c) not in closure:
                    new.add((a, c))
        if new:
            closure |= new
            changed = True
    return closure


def empty_net_pairs_by_paths(edges, max_len: int = 12) -> set:
    """Literal path enumeration with explicit stacks; exact on small graphs
    whenever every balanced witness fits in `max_len` edges."""
    out_edges = {}
    for (u, a, v) in edges:
        out_edges.setdefault(u, []).append((a, v))
    starts = {u for (u, _, _) in edges} | {v for (_, _, v) in edges}
    found = set()

    def dfs(start, node, stack, length):
        if length > max_len:
            return
        for action, nxt in out_edges.get(node, ()):
            if isinstance(action, Eps):
                new_stack = stack
            elif isinstance(action, Push):
                new_stack = (action.frame,) + stack
            else:
                if not stack or stack[0] != action.frame:
                    continue
                new_stack = stack[1:]
            if not new_stack:
                found.add((start, nxt))
            dfs(start, nxt, new_stack, length + 1)

    for s in starts:
        dfs(s, s, (), 0)
    return found


def pred_by_paths(edges, target, frame, max_len: int = 12) -> set:
    """Start nodes reaching `target` by a push of `frame` followed by a path
    with no net stack change; brute force with explicit stacks.

    This is the predecessor set the pop rule restores summaries from: the
    push edge comes first, so the restored summary is the push source's.
    """
    out_edges = {}
    for (u, a, v) in edges:
        out_edges.setdefault(u, []).append((a, v))
    found = set()

    def dfs(start, node, stack, length):
        if node == target and stack == (frame,):
            found.add(start)
        if length >= max_len:
            return
        for action, nxt in out_edges.get(node, ()):
            if isinstance(action, Eps):
                new_stack = stack
            elif isinstance(action, Push):
                new_stack = (action.frame,) + stack
            else:
                if not stack or stack[0] != action.frame:
                    continue
                new_stack = stack[1:]
            dfs(start, nxt, new_stack, length + 1)

    for (u, a, v) in edges:
        if isinstance(a, Push) and a.frame == frame:
            dfs(u, v, (frame,), 1)
    return found


def explicit_pds_reachable(pds, max_depth: int = 10, max_configs: int = 200_000):
    """BFS over (state, explicit stack); returns (states, edge instances
    taken, truncated?).  With truncated False this is the exact legal
    root-reachable fragment."""
    start = (pds.root, ())
    seen = {start}
    todo = deque([start])
    edges_taken = set()
    truncated = False
    while todo:
        q, stack = todo.popleft()
        for (src, action, dst) in pds.transitions:
            if src != q:
                continue
            if isinstance(action, Eps):
                nxt = (dst, stack)
            elif isinstance(action, Push):
                if len(stack) >= max_depth:
                    truncated = True
                    continue
                nxt = (dst, (action.frame,) + stack)
            else:
                if not stack or stack[0] != action.frame:
                    continue
                nxt = (dst, stack[1:])
            edges_taken.add((src, action, dst))
            if nxt not in seen:
                if len(seen) >= max_configs:
                    truncated = True
                    continue
                seen.add(nxt)
                todo.append(nxt)
    return {q for (q, _) in seen}, edges_taken, truncated


# ---------------------------------------------------------------------------
# Bounded-stack abstract enumeration (graph-free pushdown semantics)
# ---------------------------------------------------------------------------


def bounded_abstract_configs(expr, scheme, policy, max_depth: int = 3,
                             max_configs: int = 50_000):
    """Exhaustively enumerate abstract configurations with explicit stacks
    of bounded depth, then summarize each stack.

    Implements the three transition rules directly over (state, stack); no
    graph, no epsilon closure.  Returns (configs, truncated?).
    """
    start = (AbsState(expr, EMPTY, EMPTY, policy.initial_ctx()), ())
    seen = {start}
    todo = deque([start])
    truncated = False
    while todo:
        st, stack = todo.popleft()
        succs = []
        e = st.expr
        if isinstance(e, TailCall):
            argv = abs_atomic_eval(e.arg, st.env, st.store)
            for clo in closures(abs_atomic_eval(e.fun, st.env, st.store)):
                ctx = policy.tick(e.label, st.ctx)
                addr = policy.address(clo.lam.param, ctx)
                env = clo.env.set(clo.lam.param, addr)
                store = store_bind(st.store, addr, argv)
                succs.append((AbsState(clo.lam.body, env, store, ctx), stack))
        elif isinstance(e, LetCall):
            if len(stack) >= max_depth:
                truncated = True
            else:
                frame = AbsFrame(e.var, e.body, st.env)
                succs.append(
                    (AbsState(e.call, st.env, st.store, st.ctx), (frame,) + stack)
                )
        elif isinstance(e, Ret) and stack:
            frame, rest = stack[0], stack[1:]
            vals = abs_atomic_eval(e.atom, st.env, st.store)
            ctx = policy.tick(e.label, st.ctx)
            addr = policy.address(frame.var, ctx)
            env = frame.env.set(frame.var, addr)
            store = store_bind(st.store, addr, vals)
            succs.append((AbsState(frame.expr, env, store, ctx), rest))
        for nxt in succs:
            if nxt not in seen:
                if len(seen) >= max_configs:
                    truncated = True
                    continue
                seen.add(nxt)
                todo.append(nxt)
    configs = {AbsConfig(st, scheme.alpha_frames(list(stack))) for st, stack in seen}
    return configs, truncated
