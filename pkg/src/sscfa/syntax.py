"""Surface S-expression language and its ANF core form.

The surface grammar is

    <e> ::= <var> | <int> | (lambda (<var>) <e>) | (<e> <e>)
          | (let ((<var> <e>)) <e>) | (let* ((<var> <e>) ...) <e>)

with `;` comments.  `desugar` lowers a closed surface program into the core
ANF form, where every call operand is atomic and every intermediate result
is let-named:

    Expr ::= LetCall(v, call, body)   -- non-tail call
           | TailCall(f, arg)         -- tail call
           | Ret(atom)                -- return of an atomic value
    Atom ::= VarRef(v) | Lam(v, body) | IntLit(n)

All binders are renamed apart during desugaring and every Expr/Lam node
carries a unique integer label, so node identity is label identity.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .errors import DesugarError, ParseError

# ---------------------------------------------------------------------------
# Lexer
# ---------------------------------------------------------------------------

KEYWORDS = ("lambda", "let", "let*")

# '#' is reserved for generated names so renamed binders can never collide
# with source identifiers.
_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<comment>;[^\n]*)
  | (?P<lp>\()
  | (?P<rp>\))
  | (?P<int>-?[0-9]+)
  | (?P<sym>[A-Za-z!$%&*+./:<=>?@^_~-][A-Za-z0-9!$%&*+./:<=>?@^_~-]*)
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    col: int


def tokenize(text: str) -> list[Token]:
    tokens = []
    pos = 0
    line, col = 1, 1
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup
        chunk = m.group()
        if kind not in ("ws", "comment"):
            tokens.append(Token(kind, chunk, line, col))
        for ch in chunk:
            if ch == "\n":
                line += 1
                col = 1
            else:
                col += 1
        pos = m.end()
    return tokens


# ---------------------------------------------------------------------------
# Surface AST
# ---------------------------------------------------------------------------

Pos = tuple[int, int]


@dataclass(frozen=True)
class SVar:
    name: str
    pos: Pos = (0, 0)


@dataclass(frozen=True)
class SInt:
    value: int
    pos: Pos = (0, 0)


@dataclass(frozen=True)
class SLam:
    param: str
    body: "SurfaceExpr"
    pos: Pos = (0, 0)


@dataclass(frozen=True)
class SApp:
    fun: "SurfaceExpr"
    arg: "SurfaceExpr"
    pos: Pos = (0, 0)


@dataclass(frozen=True)
class SLet:
    var: str
    rhs: "SurfaceExpr"
    body: "SurfaceExpr"
    pos: Pos = (0, 0)


@dataclass(frozen=True)
class SLetStar:
    bindings: tuple[tuple[str, "SurfaceExpr"], ...]
    body: "SurfaceExpr"
    pos: Pos = (0, 0)


SurfaceExpr = SVar | SInt | SLam | SApp | SLet | SLetStar


class _TokenStream:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.i = 0

    def peek(self) -> Token | None:
        return self.tokens[self.i] if self.i < len(self.tokens) else None

    def next(self, expect: str | None = None) -> Token:
        tok = self.peek()
        if tok is None:
            last = self.tokens[-1] if self.tokens else Token("", "", 1, 1)
            raise ParseError("unexpected end of input", last.line, last.col)
        if expect is not None and tok.kind != expect:
            raise ParseError(f"expected {expect}, got {tok.text!r}", tok.line, tok.col)
        self.i += 1
        return tok


def _parse_name(ts: _TokenStream) -> tuple[str, Pos]:
    tok = ts.next("sym")
    if tok.text in KEYWORDS:
        raise ParseError(f"{tok.text!r} cannot be used as a variable", tok.line, tok.col)
    return tok.text, (tok.line, tok.col)


def _parse_binding(ts: _TokenStream) -> tuple[str, SurfaceExpr]:
    ts.next("lp")
    name, _ = _parse_name(ts)
    rhs = _parse_expr(ts)
    ts.next("rp")
    return name, rhs


def _parse_expr(ts: _TokenStream) -> SurfaceExpr:
    tok = ts.next()
    pos = (tok.line, tok.col)
    if tok.kind == "int":
        return SInt(int(tok.text), pos)
    if tok.kind == "sym":
        if tok.text in KEYWORDS:
            raise ParseError(f"{tok.text!r} cannot be used as a variable", tok.line, tok.col)
        return SVar(tok.text, pos)
    if tok.kind == "rp":
        raise ParseError("unexpected ')'", tok.line, tok.col)
    # tok.kind == "lp"
    head = ts.peek()
    if head is None:
        raise ParseError("unexpected end of input", tok.line, tok.col)
    if head.kind == "sym" and head.text == "lambda":
        ts.next()
        ts.next("lp")
        param, _ = _parse_name(ts)
        extra = ts.peek()
        if extra is not None and extra.kind != "rp":
            raise ParseError("lambda takes exactly one parameter", extra.line, extra.col)
        ts.next("rp")
        body = _parse_expr(ts)
        ts.next("rp")
        return SLam(param, body, pos)
    if head.kind == "sym" and head.text == "let":
        ts.next()
        ts.next("lp")
        var, rhs = _parse_binding(ts)
        extra = ts.peek()
        if extra is not None and extra.kind != "rp":
            raise ParseError("let takes exactly one binding (use let*)", extra.line, extra.col)
        ts.next("rp")
        body = _parse_expr(ts)
        ts.next("rp")
        return SLet(var, rhs, body, pos)
    if head.kind == "sym" and head.text == "let*":
        ts.next()
        ts.next("lp")
        bindings = []
        while True:
            nxt = ts.peek()
            if nxt is None:
                raise ParseError("unexpected end of input in let*", tok.line, tok.col)
            if nxt.kind == "rp":
                break
            bindings.append(_parse_binding(ts))
        ts.next("rp")
        body = _parse_expr(ts)
        ts.next("rp")
        return SLetStar(tuple(bindings), body, pos)
    # application
    fun = _parse_expr(ts)
    arg = _parse_expr(ts)
    extra = ts.peek()
    if extra is not None and extra.kind != "rp":
        raise ParseError(
            "applications take exactly one argument (the language is unary)",
            extra.line,
            extra.col,
        )
    ts.next("rp")
    return SApp(fun, arg, pos)


def parse(text: str) -> SurfaceExpr:
    """Parse a single surface program from `text`."""
    ts = _TokenStream(tokenize(text))
    if ts.peek() is None:
        raise ParseError("empty program", 1, 1)
    expr = _parse_expr(ts)
    trailing = ts.peek()
    if trailing is not None:
        raise ParseError(
            f"trailing input after program: {trailing.text!r}", trailing.line, trailing.col
        )
    return expr


def pretty_surface(s: SurfaceExpr) -> str:
    if isinstance(s, SVar):
        return s.name
    if isinstance(s, SInt):
        return str(s.value)
    if isinstance(s, SLam):
        return f"(lambda ({s.param}) {pretty_surface(s.body)})"
    if isinstance(s, SApp):
        return f"({pretty_surface(s.fun)} {pretty_surface(s.arg)})"
    if isinstance(s, SLet):
        return f"(let (({s.var} {pretty_surface(s.rhs)})) {pretty_surface(s.body)})"
    if isinstance(s, SLetStar):
        binds = " ".join(f"({v} {pretty_surface(r)})" for v, r in s.bindings)
        return f"(let* ({binds}) {pretty_surface(s.body)})"
    raise TypeError(f"not a surface expression: {s!r}")


def surface_free_vars(s: SurfaceExpr) -> frozenset[str]:
    if isinstance(s, SVar):
        return frozenset({s.name})
    if isinstance(s, SInt):
        return frozenset()
    if isinstance(s, SLam):
        return surface_free_vars(s.body) - {s.param}
    if isinstance(s, SApp):
        return surface_free_vars(s.fun) | surface_free_vars(s.arg)
    if isinstance(s, SLet):
        return surface_free_vars(s.rhs) | (surface_free_vars(s.body) - {s.var})
    if isinstance(s, SLetStar):
        acc = surface_free_vars(s.body)
        for var, rhs in reversed(s.bindings):
            acc = (acc - {var}) | surface_free_vars(rhs)
        return acc
    raise TypeError(f"not a surface expression: {s!r}")


# ---------------------------------------------------------------------------
# Core ANF form
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class Lam:
    param: str
    body: "Expr"
    label: int = field(default=-1)

    def __repr__(self):
        return f"Lam({self.param}, @{self.label})"


@dataclass(frozen=True)
class VarRef:
    name: str


@dataclass(frozen=True)
class IntLit:
    value: int


Atom = VarRef | Lam | IntLit


@dataclass(eq=False)
class LetCall:
    """Non-tail call: `(let ((var call)) body)`.

    `call` is the TailCall node the machine moves to when the frame is
    pushed; it is a child node with its own label.
    """

    var: str
    call: "TailCall"
    body: "Expr"
    label: int = field(default=-1)

    def __repr__(self):
        return f"LetCall({self.var}, @{self.label})"


@dataclass(eq=False)
class TailCall:
    fun: Atom
    arg: Atom
    label: int = field(default=-1)

    def __repr__(self):
        return f"TailCall(@{self.label})"


@dataclass(eq=False)
class Ret:
    atom: Atom
    label: int = field(default=-1)

    def __repr__(self):
        return f"Ret(@{self.label})"


Expr = LetCall | TailCall | Ret


def free_vars(e) -> frozenset[str]:
    """Free variables of an ANF expression or atom."""
    if isinstance(e, VarRef):
        return frozenset({e.name})
    if isinstance(e, IntLit):
        return frozenset()
    if isinstance(e, Lam):
        return free_vars(e.body) - {e.param}
    if isinstance(e, Ret):
        return free_vars(e.atom)
    if isinstance(e, TailCall):
        return free_vars(e.fun) | free_vars(e.arg)
    if isinstance(e, LetCall):
        return free_vars(e.call) | (free_vars(e.body) - {e.var})
    raise TypeError(f"not an ANF term: {e!r}")


def pretty(e) -> str:
    """Render an ANF expression or atom back into surface syntax."""
    if isinstance(e, VarRef):
        return e.name
    if isinstance(e, IntLit):
        return str(e.value)
    if isinstance(e, Lam):
        return f"(lambda ({e.param}) {pretty(e.body)})"
    if isinstance(e, Ret):
        return pretty(e.atom)
    if isinstance(e, TailCall):
        return f"({pretty(e.fun)} {pretty(e.arg)})"
    if isinstance(e, LetCall):
        return f"(let (({e.var} {pretty(e.call)})) {pretty(e.body)})"
    raise TypeError(f"not an ANF term: {e!r}")


def walk(e):
    """Yield every Expr and Lam node of an ANF term, preorder."""
    if isinstance(e, Ret):
        yield e
        if isinstance(e.atom, Lam):
            yield from walk(e.atom)
    elif isinstance(e, TailCall):
        yield e
        for a in (e.fun, e.arg):
            if isinstance(a, Lam):
                yield from walk(a)
    elif isinstance(e, LetCall):
        yield e
        yield from walk(e.call)
        yield from walk(e.body)
    elif isinstance(e, Lam):
        yield e
        yield from walk(e.body)
    else:
        raise TypeError(f"not an ANF node: {e!r}")


def label_map(e: Expr) -> dict[int, object]:
    return {node.label: node for node in walk(e)}


def binders(e: Expr) -> list[str]:
    """All binder occurrences (lambda params and let variables), in preorder."""
    out = []
    for node in walk(e):
        if isinstance(node, Lam):
            out.append(node.param)
        elif isinstance(node, LetCall):
            out.append(node.var)
    return out


def validate_anf(e: Expr) -> None:
    """Check the ANF well-formedness invariants, raising ValueError on failure.

    The grammar itself is enforced by the node types; this checks label
    uniqueness and global uniqueness of binders.
    """
    labels = [node.label for node in walk(e)]
    if len(labels) != len(set(labels)):
        raise ValueError("duplicate labels in ANF term")
    if any(lbl < 0 for lbl in labels):
        raise ValueError("unlabeled node in ANF term")
    names = binders(e)
    if len(names) != len(set(names)):
        raise ValueError("binders are not globally unique")


def alpha_equal(a, b) -> bool:
    """Structural equality of ANF terms modulo binder names and labels."""

    def go(x, y, env: dict[str, str]) -> bool:
        if isinstance(x, VarRef) and isinstance(y, VarRef):
            return env.get(x.name, x.name) == y.name
        if isinstance(x, IntLit) and isinstance(y, IntLit):
            return x.value == y.value
        if isinstance(x, Lam) and isinstance(y, Lam):
            return go(x.body, y.body, {**env, x.param: y.param})
        if isinstance(x, Ret) and isinstance(y, Ret):
            return go(x.atom, y.atom, env)
        if isinstance(x, TailCall) and isinstance(y, TailCall):
            return go(x.fun, y.fun, env) and go(x.arg, y.arg, env)
        if isinstance(x, LetCall) and isinstance(y, LetCall):
            return go(x.call, y.call, env) and go(
                x.body, y.body, {**env, x.var: y.var}
            )
        return False

    return go(a, b, {})


# ---------------------------------------------------------------------------
# Desugaring
# ---------------------------------------------------------------------------


class _Namer:
    """Produces globally unique names, keeping source names when possible."""

    def __init__(self):
        self.used: set[str] = set()
        self.counts: dict[str, int] = {}

    def fresh(self, base: str) -> str:
        name = base
        while name in self.used:
            n = self.counts.get(base, 0) + 1
            self.counts[base] = n
            name = f"{base}#{n}"
        self.used.add(name)
        return name


class _Desugarer:
    def __init__(self):
        self.namer = _Namer()
        self._label = -1

    def label(self) -> int:
        self._label += 1
        return self._label

    def expr(self, s: SurfaceExpr, env: dict[str, str]) -> Expr:
        if isinstance(s, SVar):
            if s.name not in env:
                raise DesugarError(f"unbound variable: {s.name}", *s.pos)
            return Ret(VarRef(env[s.name]), label=self.label())
        if isinstance(s, SInt):
            return Ret(IntLit(s.value), label=self.label())
        if isinstance(s, SLam):
            return Ret(self.lam(s, env), label=self.label())
        if isinstance(s, SApp):
            wrap_f, f = self.atomize(s.fun, env)
            wrap_a, a = self.atomize(s.arg, env)
            call = TailCall(f, a, label=self.label())
            return wrap_f(wrap_a(call))
        if isinstance(s, SLet):
            rhs = self.expr(s.rhs, env)
            fresh = self.namer.fresh(s.var)
            body = self.expr(s.body, {**env, s.var: fresh})
            return self.bind(fresh, rhs, body)
        if isinstance(s, SLetStar):
            desugared: SurfaceExpr = s.body
            for var, rhs in reversed(s.bindings):
                desugared = SLet(var, rhs, desugared, s.pos)
            return self.expr(desugared, env)
        raise TypeError(f"not a surface expression: {s!r}")

    def lam(self, s: SLam, env: dict[str, str]) -> Lam:
        fresh = self.namer.fresh(s.param)
        body = self.expr(s.body, {**env, s.param: fresh})
        return Lam(fresh, body, label=self.label())

    def atomize(self, s: SurfaceExpr, env: dict[str, str]):
        """Return (wrapper, atom): non-atomic subterms get let-named."""
        if isinstance(s, SVar):
            if s.name not in env:
                raise DesugarError(f"unbound variable: {s.name}", *s.pos)
            return (lambda e: e), VarRef(env[s.name])
        if isinstance(s, SInt):
            return (lambda e: e), IntLit(s.value)
        if isinstance(s, SLam):
            return (lambda e: e), self.lam(s, env)
        computed = self.expr(s, env)
        tmp = self.namer.fresh("t")
        return (lambda e: self.bind(tmp, computed, e)), VarRef(tmp)

    def bind(self, var: str, rhs: Expr, body: Expr) -> Expr:
        """ANF let-binding of an already-desugared right-hand side."""
        if isinstance(rhs, Ret):
            # let of an atomic RHS compiles to a tail application
            lam = Lam(var, body, label=self.label())
            return TailCall(lam, rhs.atom, label=self.label())
        if isinstance(rhs, TailCall):
            return LetCall(var, rhs, body, label=self.label())
        if isinstance(rhs, LetCall):
            return LetCall(rhs.var, rhs.call, self.bind(var, rhs.body, body), label=self.label())
        raise TypeError(f"not an ANF term: {rhs!r}")


def desugar(s: SurfaceExpr) -> Expr:
    """Lower a closed surface program to the core ANF form.

    Variables are renamed apart and every node is labeled; the result
    satisfies `validate_anf`.
    """
    out = _Desugarer().expr(s, {})
    validate_anf(out)
    return out


def anf_of_source(text: str) -> Expr:
    return desugar(parse(text))
