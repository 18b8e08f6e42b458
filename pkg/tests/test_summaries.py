import json
import random

import pytest

from sscfa.concrete import run
from sscfa.domain import Addr, alpha_frame, frame_sort_key
from sscfa.errors import ConfigurationError, MalformedFrame
from sscfa.gen import random_program
from sscfa.summaries import (
    EPS,
    FRAME_SET,
    REACH_ADDR,
    SCHEMES,
    TOP,
    TOP_SCHEME,
    AbsFrame,
    Eps,
    Pop,
    Push,
    net,
    touch_frame,
)
from sscfa.syntax import anf_of_source
from sscfa.util import EMPTY, fdict

ALL_SCHEMES = [FRAME_SET, REACH_ADDR, TOP_SCHEME]


def frames_of(src: str) -> list[AbsFrame]:
    """Abstract frames harvested from a program's concrete run."""
    expr = anf_of_source(src)
    out = []
    for config in run(expr, 200).configs:
        for f in config.stack:
            out.append(alpha_frame(f))
    return out


def sample_frames() -> list[AbsFrame]:
    frames = frames_of("(let ((r ((lambda (x) x) 3))) (let ((s ((lambda (y) y) r))) s))")
    frames += frames_of("(let ((k (lambda (y) y))) (let ((r (k 5))) (k r)))")
    # dedupe, keep deterministic order
    seen, out = set(), []
    for f in frames:
        if f not in seen:
            seen.add(f)
            out.append(f)
    assert len(out) >= 3
    return out


FRAMES = sample_frames()


def random_stack(rng: random.Random) -> list[AbsFrame]:
    return [rng.choice(FRAMES) for _ in range(rng.randint(0, 5))]


class TestNet:
    def test_eps_deleted(self):
        f = FRAMES[0]
        assert net([EPS, Push(f), EPS]) == [Push(f)]

    def test_iterated_cancellation(self):
        f1, f2 = FRAMES[0], FRAMES[1]
        assert net([Push(f1), Push(f2), Pop(f2), Pop(f1)]) == []

    def test_mismatched_pair_left_intact(self):
        f1, f2 = FRAMES[0], FRAMES[1]
        actions = [Push(f1), Pop(f2)]
        assert net(actions) == actions

    def test_pop_then_push_does_not_cancel(self):
        f = FRAMES[0]
        actions = [Pop(f), Push(f)]
        assert net(actions) == actions

    def test_idempotent_on_random_strings(self, rng):
        for _ in range(300):
            actions = [
                rng.choice([EPS, Push(rng.choice(FRAMES)), Pop(rng.choice(FRAMES))])
                for _ in range(rng.randint(0, 10))
            ]
            once = net(actions)
            assert net(once) == once

    def test_trace_action_strings_reduce_to_pushes_only(self, rng):
        # a legal path from the empty stack nets to unmatched pushes only
        for _ in range(40):
            expr = random_program(rng)
            trace = run(expr, 120)
            actions = []
            for a, b in zip(trace.configs, trace.configs[1:]):
                if len(b.stack) > len(a.stack):
                    actions.append(Push(alpha_frame(b.stack[0])))
                elif len(b.stack) < len(a.stack):
                    actions.append(Pop(alpha_frame(a.stack[0])))
                else:
                    actions.append(EPS)
            assert all(isinstance(x, Push) for x in net(actions))


class TestTouchFrame:
    def test_touches_free_vars_minus_binder(self):
        # frame (x, (x y), [x -> b, y -> a]) touches only y's address
        expr = anf_of_source("((lambda (x) (x x)) (lambda (y) y))")
        body = expr.fun.body  # (x x), free = {x}
        frame = AbsFrame("x", body, fdict({"x": Addr("b")}))
        assert touch_frame(frame) == frozenset()
        frame2 = AbsFrame("z", body, fdict({"x": Addr("a"), "z": Addr("c")}))
        assert touch_frame(frame2) == {Addr("a")}

    def test_missing_binding_is_malformed(self):
        expr = anf_of_source("((lambda (x) (x x)) (lambda (y) y))")
        with pytest.raises(MalformedFrame):
            touch_frame(AbsFrame("q", expr.fun.body, EMPTY))

    def test_result_subset_of_env_range(self):
        for f in FRAMES:
            assert touch_frame(f) <= set(f.env.values())


class TestFrameSetScheme:
    def test_alpha_empty_stack(self):
        assert FRAME_SET.alpha([]) == frozenset()

    def test_alpha_ignores_order_and_repetition(self, rng):
        stack = random_stack(rng) or [FRAMES[0]]
        doubled = stack + stack[::-1]
        assert FRAME_SET.alpha_frames(doubled) == FRAME_SET.alpha_frames(stack)

    def test_alpha_unfolds_through_push(self, rng):
        for _ in range(100):
            stack = random_stack(rng)
            f = rng.choice(FRAMES)
            assert FRAME_SET.alpha_frames([f] + stack) == FRAME_SET.push(
                f, FRAME_SET.alpha_frames(stack)
            )

    def test_push_into_empty_and_idempotent(self):
        f = FRAMES[0]
        assert FRAME_SET.push(f, frozenset()) == {f}
        s = frozenset({f})
        assert FRAME_SET.push(f, s) == s


class TestReachAddrScheme:
    def test_alpha_empty_stack(self):
        assert REACH_ADDR.alpha([]) == frozenset()

    def test_singleton_stack_is_touch(self):
        f = FRAMES[0]
        assert REACH_ADDR.alpha_frames([f]) == touch_frame(f)

    def test_alpha_unfolds_through_push(self, rng):
        for _ in range(100):
            stack = random_stack(rng)
            f = rng.choice(FRAMES)
            assert REACH_ADDR.alpha_frames([f] + stack) == REACH_ADDR.push(
                f, REACH_ADDR.alpha_frames(stack)
            )

    def test_push_unions_touched_addresses(self):
        touching = [f for f in FRAMES if touch_frame(f)]
        assert touching, "need a frame touching at least one address"
        f = touching[0]
        base = frozenset({Addr("zz")})
        assert REACH_ADDR.push(f, base) == touch_frame(f) | base

    def test_push_of_nontouching_frame_is_identity(self):
        silent = [f for f in FRAMES if not touch_frame(f)]
        assert silent
        base = frozenset({Addr("zz")})
        assert REACH_ADDR.push(silent[0], base) == base


class TestTopScheme:
    def test_one_point_carrier(self):
        assert TOP_SCHEME.bottom is TOP
        assert TOP_SCHEME.push(FRAMES[0], TOP) is TOP
        assert TOP_SCHEME.alpha_frames(FRAMES[:2]) is TOP
        assert TOP_SCHEME.leq(TOP, TOP) and TOP_SCHEME.join(TOP, TOP) is TOP

    def test_no_address_view(self):
        with pytest.raises(ConfigurationError):
            TOP_SCHEME.stack_roots(TOP)
        assert not TOP_SCHEME.supports_gc


def random_summary(scheme, rng: random.Random):
    return scheme.alpha_frames(random_stack(rng))


class TestLatticeLaws:
    @pytest.mark.parametrize("scheme", ALL_SCHEMES, ids=lambda s: s.name)
    def test_partial_order_and_join(self, scheme, rng):
        for _ in range(200):
            a = random_summary(scheme, rng)
            b = random_summary(scheme, rng)
            c = random_summary(scheme, rng)
            j = scheme.join(a, b)
            assert scheme.leq(a, a)
            if scheme.leq(a, b) and scheme.leq(b, a):
                assert scheme.sort_key(a) == scheme.sort_key(b)  # antisymmetry
            if scheme.leq(a, b) and scheme.leq(b, c):
                assert scheme.leq(a, c)  # transitivity
            assert scheme.leq(a, j) and scheme.leq(b, j)  # upper bound
            if scheme.leq(a, c) and scheme.leq(b, c):
                assert scheme.leq(j, c)  # least among sampled upper bounds

    @pytest.mark.parametrize("scheme", ALL_SCHEMES, ids=lambda s: s.name)
    def test_push_faithfulness(self, scheme, rng):
        # alpha(f : k) below push(f^, ss) whenever f^ covers f and ss covers k
        for _ in range(200):
            stack = random_stack(rng)
            f = rng.choice(FRAMES)
            ss = scheme.join(random_summary(scheme, rng), scheme.alpha_frames(stack))
            pushed = scheme.push(f, ss)
            assert scheme.leq(scheme.alpha_frames([f] + stack), pushed)

    @pytest.mark.parametrize("scheme", ALL_SCHEMES, ids=lambda s: s.name)
    def test_push_monotone(self, scheme, rng):
        for _ in range(200):
            a = random_summary(scheme, rng)
            b = scheme.join(a, random_summary(scheme, rng))
            f = rng.choice(FRAMES)
            assert scheme.leq(scheme.push(f, a), scheme.push(f, b))


class TestSerialization:
    @pytest.mark.parametrize("scheme", ALL_SCHEMES, ids=lambda s: s.name)
    def test_json_is_deterministic(self, scheme, rng):
        for _ in range(50):
            stack = random_stack(rng)
            s1 = scheme.alpha_frames(stack)
            s2 = scheme.alpha_frames(list(reversed(stack)))
            # same summary regardless of construction order -> same JSON
            if scheme.sort_key(s1) == scheme.sort_key(s2):
                assert json.dumps(scheme.to_json(s1)) == json.dumps(scheme.to_json(s2))

    def test_frame_set_json_sorted(self):
        s = FRAME_SET.alpha_frames(FRAMES[:3])
        blob = FRAME_SET.to_json(s)
        keys = [(f["var"], f["expr"]) for f in blob]
        assert keys == sorted(keys)

    def test_reach_addr_json_sorted(self):
        s = frozenset({Addr("b"), Addr("a"), Addr("c")})
        assert REACH_ADDR.to_json(s) == ["a", "b", "c"]

    def test_registry_names(self):
        assert set(SCHEMES) == {"frame-set", "reach-addr", "top"}
