"""Concrete CESK machine: the ground-truth interpreter.

Configurations pair a control state (expression, environment, store) with an
explicit frame stack.  Stepping is deterministic; `run` produces the trace
used as an oracle by the soundness tests of the abstract analyses.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .errors import DanglingAddress, NotAClosure, UnboundVariable
from .syntax import Expr, IntLit, Lam, LetCall, Ret, TailCall, VarRef, free_vars
from .util import EMPTY, fdict


@dataclass(frozen=True)
class ConcAddr:
    """A concrete address: the bound variable plus a run-global birth serial.

    Carrying the binder lets the monovariant abstraction erase the serial.
    """

    var: str
    serial: int

    def render(self) -> str:
        return f"{self.var}.{self.serial}"


@dataclass(frozen=True)
class CClosure:
    lam: Lam
    env: fdict


ConcValue = CClosure | int


@dataclass(frozen=True)
class ConcFrame:
    var: str
    expr: Expr
    env: fdict


@dataclass(frozen=True)
class ConcState:
    expr: Expr
    env: fdict
    store: fdict


@dataclass(frozen=True)
class ConcConfig:
    state: ConcState
    stack: tuple[ConcFrame, ...]


@dataclass(frozen=True)
class Halted:
    value: ConcValue


@dataclass(frozen=True)
class StepLimit:
    pass


@dataclass(frozen=True)
class Stuck:
    reason: str


@dataclass
class Trace:
    configs: list[ConcConfig]
    status: Halted | StepLimit | Stuck


def atomic_eval(atom, env: fdict, store: fdict) -> ConcValue:
    """Value of an atomic expression: closure creation, variable look-up,
    or a literal evaluating to itself."""
    if isinstance(atom, Lam):
        return CClosure(atom, env)
    if isinstance(atom, IntLit):
        return atom.value
    if isinstance(atom, VarRef):
        if atom.name not in env:
            raise UnboundVariable(atom.name)
        addr = env[atom.name]
        if addr not in store:
            raise DanglingAddress(f"address {addr.render()} missing from store")
        return store[addr]
    raise TypeError(f"not an atom: {atom!r}")


def inject(expr: Expr) -> ConcConfig:
    """Initial configuration: the program with empty environment, store,
    and stack.  The program must be closed."""
    fv = free_vars(expr)
    if fv:
        raise ValueError(f"program is not closed; free: {sorted(fv)}")
    return ConcConfig(ConcState(expr, EMPTY, EMPTY), ())


class CESK:
    """Stepper with a run-global allocation counter."""

    def __init__(self, expr: Expr):
        self.expr = expr
        self._serial = 0

    def alloc(self, var: str, state: ConcState) -> ConcAddr:
        addr = ConcAddr(var, self._serial)
        self._serial += 1
        assert addr not in state.store
        return addr

    def inject(self) -> ConcConfig:
        return inject(self.expr)

    def step(self, config: ConcConfig) -> ConcConfig | None:
        """One deterministic transition; None when the configuration is
        terminal (a return with an empty stack)."""
        st = config.state
        e = st.expr
        if isinstance(e, TailCall):
            fval = atomic_eval(e.fun, st.env, st.store)
            if not isinstance(fval, CClosure):
                raise NotAClosure(fval)
            argv = atomic_eval(e.arg, st.env, st.store)
            addr = self.alloc(fval.lam.param, st)
            env = fval.env.set(fval.lam.param, addr)
            store = st.store.set(addr, argv)
            return ConcConfig(ConcState(fval.lam.body, env, store), config.stack)
        if isinstance(e, LetCall):
            frame = ConcFrame(e.var, e.body, st.env)
            return ConcConfig(
                ConcState(e.call, st.env, st.store), (frame,) + config.stack
            )
        if isinstance(e, Ret):
            if not config.stack:
                return None
            frame, rest = config.stack[0], config.stack[1:]
            value = atomic_eval(e.atom, st.env, st.store)
            addr = self.alloc(frame.var, st)
            env = frame.env.set(frame.var, addr)
            store = st.store.set(addr, value)
            return ConcConfig(ConcState(frame.expr, env, store), rest)
        raise TypeError(f"not an ANF expression: {e!r}")

    def run(self, max_steps: int) -> Trace:
        config = self.inject()
        configs = [config]
        for _ in range(max_steps):
            try:
                nxt = self.step(config)
            except (UnboundVariable, NotAClosure, DanglingAddress) as exc:
                return Trace(configs, Stuck(str(exc)))
            if nxt is None:
                st = config.state
                value = atomic_eval(st.expr.atom, st.env, st.store)
                return Trace(configs, Halted(value))
            config = nxt
            configs.append(config)
        return Trace(configs, StepLimit())


def run(expr: Expr, max_steps: int = 100_000) -> Trace:
    return CESK(expr).run(max_steps)


def addresses_closed(config: ConcConfig) -> bool:
    """Every address in the range of the environment and of frame
    environments is in the store's domain."""
    store = config.state.store
    envs = [config.state.env] + [f.env for f in config.stack]
    for clo in store.values():
        if isinstance(clo, CClosure):
            envs.append(clo.env)
    return all(addr in store for env in envs for addr in env.values())


# --- trace export -----------------------------------------------------------


def _value_json(v: ConcValue):
    if isinstance(v, CClosure):
        return {"lam": v.lam.label, "env": _env_json(v.env)}
    return v


def _env_json(env: fdict) -> dict:
    return {var: env[var].render() for var in sorted(env)}


def trace_jsonl(trace: Trace) -> str:
    """One configuration per line, for differential testing."""
    lines = []
    for step, config in enumerate(trace.configs):
        st = config.state
        lines.append(
            json.dumps(
                {
                    "step": step,
                    "expr_label": st.expr.label,
                    "env": _env_json(st.env),
                    "store": {
                        a.render(): _value_json(st.store[a])
                        for a in sorted(st.store, key=lambda a: (a.serial, a.var))
                    },
                    "stack": [
                        {"var": f.var, "expr_label": f.expr.label, "env": _env_json(f.env)}
                        for f in config.stack
                    ],
                },
                sort_keys=True,
            )
        )
    return "\n".join(lines) + ("\n" if lines else "")
