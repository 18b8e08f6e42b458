"""Stack actions, the net-change operator, and pluggable stack summaries.

A stack summary is a finite lattice value abstracting a frame stack.  A
scheme supplies bottom, the order, joins, a summarizing function over whole
stacks, and a `push` operator that must faithfully simulate a concrete push:

    alpha(frame) <= f  and  alpha_stack(stack) <= s
        implies  alpha_stack(frame : stack) <= push(f, s)

Pops need no scheme support: the graph construction restores the summary of
the matching push's source configuration.
"""

from __future__ import annotations

from dataclasses import dataclass

from .domain import Addr, AbsFrame, alpha_frame, frame_sort_key
from .errors import ConfigurationError, MalformedFrame
from .syntax import free_vars
from .util import fdict

# --- stack actions -----------------------------------------------------------


@dataclass(frozen=True)
class Eps:
    def render(self) -> str:
        return "ε"


@dataclass(frozen=True)
class Push:
    frame: object

    def render(self) -> str:
        return f"+{_render_frame(self.frame)}"


@dataclass(frozen=True)
class Pop:
    frame: object

    def render(self) -> str:
        return f"-{_render_frame(self.frame)}"


EPS = Eps()
StackAction = Eps | Push | Pop


def _render_frame(f) -> str:
    if isinstance(f, AbsFrame):
        return f"({f.var},@{f.expr.label})"
    return str(f)


def net(actions) -> list[StackAction]:
    """Compact an action string by deleting no-ops and cancelling adjacent
    matching push-pop pairs until no rule applies.

    The rewriting is confluent, so a single left-to-right pass with a stack
    computes the normal form.
    """
    out: list[StackAction] = []
    for a in actions:
        if isinstance(a, Eps):
            continue
        if isinstance(a, Pop) and out and isinstance(out[-1], Push) and out[-1].frame == a.frame:
            out.pop()
            continue
        out.append(a)
    return out


# --- frame touching ----------------------------------------------------------


def touch_frame(frame: AbsFrame) -> frozenset[Addr]:
    """Addresses directly referenced by a frame: the bindings of the free
    variables of its pending body, minus the variable it will bind."""
    out = set()
    for v in free_vars(frame.expr) - {frame.var}:
        if v not in frame.env:
            raise MalformedFrame(
                f"frame ({frame.var}, @{frame.expr.label}) lacks a binding for {v}"
            )
        out.add(frame.env[v])
    return frozenset(out)


# --- summary schemes ----------------------------------------------------------


class SummaryScheme:
    """Interface every stack-summary scheme implements.

    `stack_roots` exposes the summary as a set of addresses for the garbage
    collector; schemes without an address view refuse GC at configuration
    time via `supports_gc`.
    """

    name: str
    supports_gc: bool

    @property
    def bottom(self):
        raise NotImplementedError

    def leq(self, a, b) -> bool:
        raise NotImplementedError

    def join(self, a, b):
        raise NotImplementedError

    def push(self, frame: AbsFrame, summary):
        raise NotImplementedError

    def alpha_frames(self, frames) -> object:
        """Summary of a stack already given as abstract frames (top first)."""
        raise NotImplementedError

    def alpha(self, stack, policy=None):
        """Summary of a concrete stack (top first)."""
        from .domain import MONO

        policy = policy or MONO
        return self.alpha_frames([alpha_frame(f, policy) for f in stack])

    def stack_roots(self, summary) -> frozenset[Addr]:
        raise NotImplementedError

    def to_json(self, summary):
        raise NotImplementedError

    def render(self, summary) -> str:
        raise NotImplementedError

    def sort_key(self, summary):
        raise NotImplementedError


class FrameSetScheme(SummaryScheme):
    """The set of abstract frames currently on the stack, ignoring order
    and repetition; the lattice is subset inclusion."""

    name = "frame-set"
    supports_gc = True  # conservative: roots via touch_frame over the set

    @property
    def bottom(self) -> frozenset:
        return frozenset()

    def leq(self, a, b) -> bool:
        return a <= b

    def join(self, a, b) -> frozenset:
        return a | b

    def push(self, frame: AbsFrame, summary: frozenset) -> frozenset:
        return summary | {frame}

    def alpha_frames(self, frames) -> frozenset:
        return frozenset(frames)

    def stack_roots(self, summary) -> frozenset[Addr]:
        out: set[Addr] = set()
        for frame in summary:
            out |= touch_frame(frame)
        return frozenset(out)

    def to_json(self, summary):
        return [
            {
                "var": f.var,
                "expr": f.expr.label,
                "env": {v: a.render() for v, a in sorted(f.env.items())},
            }
            for f in sorted(summary, key=frame_sort_key)
        ]

    def render(self, summary) -> str:
        if not summary:
            return "{}"
        parts = [f"({f.var},@{f.expr.label})" for f in sorted(summary, key=frame_sort_key)]
        return "{" + ", ".join(parts) + "}"

    def sort_key(self, summary):
        return tuple(sorted(frame_sort_key(f) for f in summary))


class ReachableAddressScheme(SummaryScheme):
    """All store addresses directly touchable by a frame on the stack; this
    is the summary abstract garbage collection needs."""

    name = "reach-addr"
    supports_gc = True

    @property
    def bottom(self) -> frozenset:
        return frozenset()

    def leq(self, a, b) -> bool:
        return a <= b

    def join(self, a, b) -> frozenset:
        return a | b

    def push(self, frame: AbsFrame, summary: frozenset) -> frozenset:
        return touch_frame(frame) | summary

    def alpha_frames(self, frames) -> frozenset:
        out: set[Addr] = set()
        for f in frames:
            out |= touch_frame(f)
        return frozenset(out)

    def stack_roots(self, summary) -> frozenset[Addr]:
        return summary

    def to_json(self, summary):
        return sorted(a.render() for a in summary)

    def render(self, summary) -> str:
        if not summary:
            return "{}"
        return "{" + ", ".join(sorted(a.render() for a in summary)) + "}"

    def sort_key(self, summary):
        return tuple(sorted(a.sort_key() for a in summary))


class _Top:
    __slots__ = ()

    def __repr__(self):
        return "TOP"


TOP = _Top()


class TopScheme(SummaryScheme):
    """One-point scheme: every stack summarizes to the single top element.

    Satisfies all summary laws vacuously; running the pushdown analysis with
    it reproduces plain pushdown control-flow analysis.
    """

    name = "top"
    supports_gc = False

    @property
    def bottom(self):
        return TOP

    def leq(self, a, b) -> bool:
        return True

    def join(self, a, b):
        return TOP

    def push(self, frame: AbsFrame, summary):
        return TOP

    def alpha_frames(self, frames):
        return TOP

    def stack_roots(self, summary):
        raise ConfigurationError("the top summary carries no address view; GC needs one")

    def to_json(self, summary):
        return "top"

    def render(self, summary) -> str:
        return "⊤"

    def sort_key(self, summary):
        return ()


FRAME_SET = FrameSetScheme()
REACH_ADDR = ReachableAddressScheme()
TOP_SCHEME = TopScheme()

SCHEMES: dict[str, SummaryScheme] = {
    s.name: s for s in (FRAME_SET, REACH_ADDR, TOP_SCHEME)
}
