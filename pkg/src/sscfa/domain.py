"""Abstract configuration spaces, allocation policies, and abstraction.

Abstract stores map finite addresses to finite sets of values; an absent
address reads as the empty set (bottom), and empty entries are never stored,
so store equality is canonical.  The structural abstraction maps each
concrete component pointwise and joins the images of colliding addresses.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .concrete import CClosure, ConcAddr, ConcConfig, ConcFrame, ConcState
from .errors import ConfigurationError
from .syntax import Expr, IntLit, Lam, VarRef
from .util import EMPTY, fdict


@dataclass(frozen=True)
class Addr:
    """Abstract value address: a variable plus a policy context tag.

    The monovariant policy uses an empty tag, so the address is just the
    variable; call-site policies tag with recent call labels.
    """

    var: str
    ctx: tuple = ()

    def render(self) -> str:
        if not self.ctx:
            return self.var
        return f"{self.var}@" + ",".join(str(l) for l in self.ctx)

    def sort_key(self):
        return (0, self.var, self.ctx)


@dataclass(frozen=True)
class FrameAddr:
    """Return-pointer address used by the classical baseline.

    A distinct type keeps frame bindings apart from value bindings for the
    same variable in the shared store.
    """

    var: str
    ctx: tuple = ()

    def render(self) -> str:
        base = f"rp:{self.var}"
        if not self.ctx:
            return base
        return f"{base}@" + ",".join(str(l) for l in self.ctx)

    def sort_key(self):
        return (1, self.var, self.ctx)


@dataclass(frozen=True)
class Lit:
    value: int


@dataclass(frozen=True)
class AClosure:
    lam: Lam
    env: fdict


AbsValue = Lit | AClosure


@dataclass(frozen=True)
class AbsFrame:
    var: str
    expr: Expr
    env: fdict


@dataclass(frozen=True)
class AbsState:
    expr: Expr
    env: fdict
    store: fdict
    ctx: tuple = ()


@dataclass(frozen=True)
class AbsConfig:
    state: AbsState
    summary: object


def value_sort_key(v: AbsValue):
    if isinstance(v, Lit):
        return (0, v.value, ())
    return (1, v.lam.label, tuple(sorted((k, a.sort_key()) for k, a in v.env.items())))


def frame_sort_key(f: AbsFrame):
    return (f.var, f.expr.label, tuple(sorted((k, a.sort_key()) for k, a in f.env.items())))


# --- stores ------------------------------------------------------------------


def store_get(store: fdict, addr) -> frozenset:
    return store.get(addr, frozenset())


def store_join(a: fdict, b: fdict) -> fdict:
    """Pointwise union of two stores."""
    if len(b) > len(a):
        a, b = b, a
    merged = dict(a)
    for addr, vals in b.items():
        merged[addr] = merged.get(addr, frozenset()) | vals
    return fdict(merged)


def store_bind(store: fdict, addr, values: frozenset) -> fdict:
    """Join `values` into the entry at `addr`; empty joins leave the store
    untouched so absent and empty stay identical."""
    if not values:
        return store
    return store.set(addr, store_get(store, addr) | values)


def abs_atomic_eval(atom, env: fdict, store: fdict) -> frozenset:
    """Abstract value of an atomic expression.  Absence is the empty set,
    which yields no successors downstream; it is never an error."""
    if isinstance(atom, Lam):
        return frozenset({AClosure(atom, env)})
    if isinstance(atom, IntLit):
        return frozenset({Lit(atom.value)})
    if isinstance(atom, VarRef):
        if atom.name not in env:
            return frozenset()
        return store_get(store, env[atom.name])
    raise TypeError(f"not an atom: {atom!r}")


def closures(values) -> list[AClosure]:
    """The closures of a flow set, in deterministic order."""
    return sorted(
        (v for v in values if isinstance(v, AClosure)), key=value_sort_key
    )


# --- allocation policies -----------------------------------------------------


class Monovariant:
    """One abstract address per variable (0CFA-like)."""

    name = "mono"
    supports_abstraction = True

    def initial_ctx(self) -> tuple:
        return ()

    def tick(self, label: int, ctx: tuple) -> tuple:
        return ()

    def address(self, var: str, ctx: tuple) -> Addr:
        return Addr(var)

    def frame_address(self, var: str, ctx: tuple) -> FrameAddr:
        return FrameAddr(var)

    def alpha_addr(self, addr: ConcAddr) -> Addr:
        return Addr(addr.var)


class KCallSite:
    """Addresses tagged with the labels of the k most recent binding
    transitions; a finite polyvariance knob."""

    supports_abstraction = False

    def __init__(self, k: int):
        if k < 1:
            raise ConfigurationError("k-call-site policy requires k >= 1")
        self.k = k
        self.name = f"kcall:{k}"

    def initial_ctx(self) -> tuple:
        return ()

    def tick(self, label: int, ctx: tuple) -> tuple:
        return ((label,) + ctx)[: self.k]

    def address(self, var: str, ctx: tuple) -> Addr:
        return Addr(var, ctx)

    def frame_address(self, var: str, ctx: tuple) -> FrameAddr:
        return FrameAddr(var, ctx)

    def alpha_addr(self, addr: ConcAddr):
        raise ConfigurationError(
            "the abstraction function is defined for the monovariant policy only"
        )


MONO = Monovariant()


def abs_alloc(policy, var: str, state: AbsState) -> Addr:
    """Address for binding `var` at `state` under the policy."""
    return policy.address(var, policy.tick(state.expr.label, state.ctx))


def address_universe(expr: Expr, policy) -> int:
    """Upper bound on the number of value addresses the policy can mint."""
    from .syntax import binders, walk

    nvars = len(set(binders(expr)))
    nlabels = len(list(walk(expr)))
    k = getattr(policy, "k", 0)
    return nvars * max(1, nlabels) ** k


# --- abstraction (Appendix-style structural maps, monovariant) ----------------


def alpha_env(env: fdict, policy=MONO) -> fdict:
    return fdict({v: policy.alpha_addr(a) for v, a in env.items()})


def alpha_value(value, policy=MONO) -> AbsValue:
    if isinstance(value, CClosure):
        return AClosure(value.lam, alpha_env(value.env, policy))
    return Lit(value)


def alpha_store(store: fdict, policy=MONO) -> fdict:
    out: dict = {}
    for addr, value in store.items():
        a = policy.alpha_addr(addr)
        out[a] = out.get(a, frozenset()) | {alpha_value(value, policy)}
    return fdict(out)


def alpha_frame(frame: ConcFrame, policy=MONO) -> AbsFrame:
    return AbsFrame(frame.var, frame.expr, alpha_env(frame.env, policy))


def alpha_state(state: ConcState, policy=MONO) -> AbsState:
    return AbsState(state.expr, alpha_env(state.env, policy), alpha_store(state.store, policy))


def abstract(config: ConcConfig, policy, scheme) -> AbsConfig:
    """Structural abstraction of a concrete configuration; the stack is
    folded into a summary by the scheme."""
    if not policy.supports_abstraction:
        policy.alpha_addr(None)  # raises with the explanatory message
    return AbsConfig(alpha_state(config.state, policy), scheme.alpha(config.stack, policy))


def subsumes(x: AbsConfig, y: AbsConfig, scheme) -> bool:
    """Does `y` cover `x`?  Same expression, environments agreeing on shared
    variables, store pointwise contained, summary below in the scheme's
    lattice."""
    if x.state.expr is not y.state.expr:
        return False
    if x.state.ctx != y.state.ctx:
        return False
    for var, addr in x.state.env.items():
        if var in y.state.env and y.state.env[var] != addr:
            return False
    for addr, vals in x.state.store.items():
        if not vals <= store_get(y.state.store, addr):
            return False
    return scheme.leq(x.summary, y.summary)


def inject_state(expr: Expr, policy=MONO) -> AbsState:
    return AbsState(expr, EMPTY, EMPTY, policy.initial_ctx())
