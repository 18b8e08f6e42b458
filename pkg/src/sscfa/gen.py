"""Random program and pushdown-system generators for the test corpora.

Programs are generated as closed surface terms and then desugared, so every
sample also exercises the front end.  Tests seed the RNG from SSCFA_SEED.
"""

from __future__ import annotations

import random

from .dsg import PushdownSystem
from .summaries import EPS, Pop, Push
from .syntax import Expr, SApp, SInt, SLam, SLet, SVar, desugar


def random_surface(rng: random.Random, max_binders: int = 6):
    """A closed random surface term with at most `max_binders` binders."""
    budget = [rng.randint(1, max_binders)]
    names = iter(f"v{i}" for i in range(max_binders + 1))

    def go(scope: tuple[str, ...], depth: int):
        can_bind = budget[0] > 0 and depth < 8
        choices = []
        if scope:
            choices += ["var"] * 3
        choices += ["int"]
        if can_bind:
            choices += ["lam"] * 3 + ["app"] * 2 + ["let"]
        kind = rng.choice(choices)
        if kind == "var":
            return SVar(rng.choice(scope))
        if kind == "int":
            return SInt(rng.randint(0, 9))
        if kind == "lam":
            budget[0] -= 1
            v = next(names)
            return SLam(v, go(scope + (v,), depth + 1))
        if kind == "app":
            return SApp(go(scope, depth + 1), go(scope, depth + 1))
        budget[0] -= 1
        v = next(names)
        return SLet(v, go(scope, depth + 1), go(scope + (v,), depth + 1))

    return go((), 0)


def random_program(rng: random.Random, max_binders: int = 6) -> Expr:
    return desugar(random_surface(rng, max_binders))


def random_pds(rng: random.Random, max_states: int = 8, max_letters: int = 3,
               edge_factor: float = 2.5) -> PushdownSystem:
    """A random rooted pushdown system over opaque string states."""
    n = rng.randint(2, max_states)
    states = [f"q{i}" for i in range(n)]
    letters = [f"g{i}" for i in range(rng.randint(1, max_letters))]
    transitions = set()
    for _ in range(int(n * edge_factor)):
        src = rng.choice(states)
        dst = rng.choice(states)
        kind = rng.choice(["eps", "push", "pop"])
        if kind == "eps":
            action = EPS
        elif kind == "push":
            action = Push(rng.choice(letters))
        else:
            action = Pop(rng.choice(letters))
        transitions.add((src, action, dst))
    return PushdownSystem("q0", sorted(transitions, key=repr))
