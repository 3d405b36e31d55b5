# exprdyn.py
"""Polynomial expressions for nonlinear dynamics.

Grammar (whitespace ignored)::

    expr   = term { ("+" | "-") term }
    term   = unary { "*" unary }
    unary  = "-" unary | power
    power  = atom [ "^" INT ]
    atom   = NUMBER | "x" INT | "(" expr ")"

Variables are written ``x1 .. xn`` and stored with 0-based indices.
Derivatives and evaluation are ``functools.singledispatch`` functions over
the node classes.
"""
import re
from dataclasses import dataclass
from functools import cached_property, singledispatch
from typing import List, Sequence, Tuple

import numpy as np

from czreach.errors import DimensionMismatch, ExprSyntaxError, UnknownVariable
from czreach.interval import Interval, IntervalMatrix


class Expr:
    """Base class of expression nodes."""

    def __str__(self):
        return to_text(self)


@dataclass(frozen=True)
class Const(Expr):
    value: float


@dataclass(frozen=True)
class Var(Expr):
    index: int


@dataclass(frozen=True)
class Add(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Sub(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Mul(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Neg(Expr):
    operand: Expr


@dataclass(frozen=True)
class Pow(Expr):
    base: Expr
    exponent: int


ZERO = Const(0.0)
ONE = Const(1.0)


def _is_const(e, value=None):
    return isinstance(e, Const) and (value is None or e.value == value)


# Constructors with constant folding.

def add(a, b):
    if _is_const(a) and _is_const(b):
        return Const(a.value + b.value)
    if _is_const(a, 0.0):
        return b
    if _is_const(b, 0.0):
        return a
    return Add(a, b)


def sub(a, b):
    if _is_const(a) and _is_const(b):
        return Const(a.value - b.value)
    if _is_const(b, 0.0):
        return a
    if _is_const(a, 0.0):
        return neg(b)
    return Sub(a, b)


def mul(a, b):
    if _is_const(b) and not _is_const(a):
        a, b = b, a
    if _is_const(a):
        if _is_const(b):
            return Const(a.value * b.value)
        if a.value == 0.0:
            return ZERO
        if a.value == 1.0:
            return b
        if isinstance(b, Mul) and _is_const(b.left):
            return mul(Const(a.value * b.left.value), b.right)
    return Mul(a, b)


def neg(a):
    if _is_const(a):
        return Const(-a.value)
    if isinstance(a, Neg):
        return a.operand
    if isinstance(a, Mul) and _is_const(a.left):
        return mul(Const(-a.left.value), a.right)
    return Neg(a)


def power(base, exponent):
    if exponent == 0:
        return ONE
    if exponent == 1:
        return base
    if _is_const(base):
        return Const(base.value ** exponent)
    return Pow(base, exponent)


# --- parsing -----------------------------------------------------------

_TOKEN = re.compile(
    r"\s*(?:"
    r"(?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|x(?P<var>\d+)"
    r"|(?P<op>[-+*^()])"
    r")"
)


def _tokenize(text) -> List[Tuple[str, str, int]]:
    tokens = []
    pos = 0
    end = len(text.rstrip())
    while pos < end:
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            bad = pos + len(text[pos:]) - len(text[pos:].lstrip())
            raise ExprSyntaxError(f"unexpected character {text[bad]!r}", bad)
        kind = m.lastgroup
        # The var group holds only the digits; the token starts at its "x".
        start = m.start(kind) - 1 if kind == "var" else m.start(kind)
        tokens.append((kind, text[start:m.end()], start))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text, n):
        self.tokens = _tokenize(text)
        self.i = 0
        self.n = n

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value):
        kind, text, pos = self.take()
        if text != value or kind != "op":
            raise ExprSyntaxError(f"expected {value!r}, found {text or 'end of input'!r}", pos)

    def parse(self):
        e = self.expr()
        kind, text, pos = self.peek()
        if kind != "end":
            raise ExprSyntaxError(f"unexpected {text!r}", pos)
        return e

    def expr(self):
        e = self.term()
        while self.peek()[:2] in (("op", "+"), ("op", "-")):
            _, op, _ = self.take()
            rhs = self.term()
            e = add(e, rhs) if op == "+" else sub(e, rhs)
        return e

    def term(self):
        e = self.unary()
        while self.peek()[:2] == ("op", "*"):
            self.take()
            e = mul(e, self.unary())
        return e

    def unary(self):
        if self.peek()[:2] == ("op", "-"):
            self.take()
            return neg(self.unary())
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[:2] == ("op", "^"):
            self.take()
            kind, text, pos = self.take()
            if kind != "number" or not text.isdigit():
                raise ExprSyntaxError("exponent must be a nonnegative integer", pos)
            return power(base, int(text))
        return base

    def atom(self):
        kind, text, pos = self.take()
        if kind == "number":
            return Const(float(text))
        if kind == "var":
            k = int(text[1:])
            if not 1 <= k <= self.n:
                raise UnknownVariable(f"x{k} at position {pos} is not one of x1..x{self.n}")
            return Var(k - 1)
        if (kind, text) == ("op", "("):
            e = self.expr()
            self.expect(")")
            return e
        raise ExprSyntaxError(f"unexpected {text or 'end of input'!r}", pos)


def parse_expr(text: str, n: int) -> Expr:
    """Parse ``text`` over the state variables x1..xn."""
    return _Parser(text, n).parse()


# --- printing ----------------------------------------------------------

def _fmt(e) -> Tuple[str, int]:
    # (text, precedence): 1 sums, 2 products, 3 unary minus, 4 powers, 5 atoms
    if isinstance(e, Const):
        text = repr(e.value)
        return text, 3 if e.value < 0 or text.startswith("-") else 5
    if isinstance(e, Var):
        return f"x{e.index + 1}", 5
    if isinstance(e, (Add, Sub)):
        left, _ = _fmt(e.left)
        right, rp = _fmt(e.right)
        if isinstance(e, Sub) and rp <= 1:
            right = f"({right})"
        return f"{left} {'+' if isinstance(e, Add) else '-'} {right}", 1
    if isinstance(e, Mul):
        parts = []
        for child in (e.left, e.right):
            text, p = _fmt(child)
            parts.append(f"({text})" if p < 2 else text)
        return "*".join(parts), 2
    if isinstance(e, Neg):
        text, p = _fmt(e.operand)
        return f"-({text})" if p < 3 else f"-{text}", 3
    if isinstance(e, Pow):
        text, p = _fmt(e.base)
        return (f"({text})" if p < 5 else text) + f"^{e.exponent}", 4
    raise TypeError(f"not an expression: {e!r}")


def to_text(e: Expr) -> str:
    return _fmt(e)[0]


# --- differentiation and evaluation -------------------------------------

@singledispatch
def differentiate(e, i):
    """Partial derivative with respect to the 0-based variable ``i``."""
    raise TypeError(f"cannot differentiate {e!r}")


@differentiate.register(Const)
def _(e, i):
    return ZERO


@differentiate.register(Var)
def _(e, i):
    return ONE if e.index == i else ZERO


@differentiate.register(Add)
def _(e, i):
    return add(differentiate(e.left, i), differentiate(e.right, i))


@differentiate.register(Sub)
def _(e, i):
    return sub(differentiate(e.left, i), differentiate(e.right, i))


@differentiate.register(Mul)
def _(e, i):
    return add(
        mul(differentiate(e.left, i), e.right),
        mul(e.left, differentiate(e.right, i)),
    )


@differentiate.register(Neg)
def _(e, i):
    return neg(differentiate(e.operand, i))


@differentiate.register(Pow)
def _(e, i):
    return mul(
        Const(float(e.exponent)),
        mul(power(e.base, e.exponent - 1), differentiate(e.base, i)),
    )


@singledispatch
def eval_real(e, x):
    raise TypeError(f"cannot evaluate {e!r}")


@eval_real.register(Const)
def _(e, x):
    return e.value


@eval_real.register(Var)
def _(e, x):
    return float(x[e.index])


@eval_real.register(Add)
def _(e, x):
    return eval_real(e.left, x) + eval_real(e.right, x)


@eval_real.register(Sub)
def _(e, x):
    return eval_real(e.left, x) - eval_real(e.right, x)


@eval_real.register(Mul)
def _(e, x):
    return eval_real(e.left, x) * eval_real(e.right, x)


@eval_real.register(Neg)
def _(e, x):
    return -eval_real(e.operand, x)


@eval_real.register(Pow)
def _(e, x):
    return eval_real(e.base, x) ** e.exponent


@singledispatch
def eval_interval(e, box):
    """Natural interval extension over ``box`` (a sequence of Interval)."""
    raise TypeError(f"cannot evaluate {e!r}")


@eval_interval.register(Const)
def _(e, box):
    return Interval.point(e.value)


@eval_interval.register(Var)
def _(e, box):
    return box[e.index]


@eval_interval.register(Add)
def _(e, box):
    return eval_interval(e.left, box) + eval_interval(e.right, box)


@eval_interval.register(Sub)
def _(e, box):
    return eval_interval(e.left, box) - eval_interval(e.right, box)


@eval_interval.register(Mul)
def _(e, box):
    return eval_interval(e.left, box) * eval_interval(e.right, box)


@eval_interval.register(Neg)
def _(e, box):
    return -eval_interval(e.operand, box)


@eval_interval.register(Pow)
def _(e, box):
    return eval_interval(e.base, box) ** e.exponent


def gradient(e: Expr, n: int) -> List[Expr]:
    return [differentiate(e, i) for i in range(n)]


def half_hessian(e: Expr, n: int) -> List[List[Expr]]:
    """Upper-triangular half Hessian: H[i][i] = d2e/dxi2 / 2, H[i][j] = d2e/dxidxj for i < j."""
    first = gradient(e, n)
    H = [[ZERO] * n for _ in range(n)]
    for i in range(n):
        H[i][i] = mul(Const(0.5), differentiate(first[i], i))
        for j in range(i + 1, n):
            H[i][j] = differentiate(first[i], j)
    return H


def as_box(lo, hi) -> List[Interval]:
    return [Interval(a, b) for a, b in zip(np.ravel(lo), np.ravel(hi))]


@dataclass(frozen=True)
class NonlinearModel:
    """x(t+1) = f(x(t)) + B_d u(t) with polynomial f."""

    n: int
    f: Tuple[Expr, ...]
    B_d: np.ndarray

    def __post_init__(self):
        f = tuple(self.f)
        B_d = np.atleast_2d(np.asarray(self.B_d, dtype=float))
        if len(f) != self.n:
            raise DimensionMismatch(f"model has dimension {self.n} but {len(f)} expressions")
        if B_d.shape[0] != self.n:
            raise DimensionMismatch(f"B_d must have {self.n} rows, got {B_d.shape[0]}")
        object.__setattr__(self, "f", f)
        object.__setattr__(self, "B_d", B_d)

    @classmethod
    def from_strings(cls, exprs: Sequence[str], B_d):
        n = len(exprs)
        return cls(n, tuple(parse_expr(text, n) for text in exprs), B_d)

    @property
    def m(self):
        return self.B_d.shape[1]

    @cached_property
    def jacobian_exprs(self):
        return [gradient(fq, self.n) for fq in self.f]

    @cached_property
    def half_hessians(self):
        return [half_hessian(fq, self.n) for fq in self.f]

    def evaluate(self, x):
        x = np.asarray(x, dtype=float)
        return np.array([eval_real(fq, x) for fq in self.f])

    def jacobian(self, x):
        x = np.asarray(x, dtype=float)
        return np.array([[eval_real(d, x) for d in row] for row in self.jacobian_exprs])

    def step(self, x, u):
        return self.evaluate(x) + self.B_d @ np.atleast_1d(np.asarray(u, dtype=float))

    def hessian_bounds(self, box) -> List[IntervalMatrix]:
        """Interval enclosures of each half Hessian over ``box``."""
        return [
            IntervalMatrix.from_intervals([[eval_interval(h, box) for h in row] for row in H])
            for H in self.half_hessians
        ]

    def is_affine(self):
        return all(
            _is_const(h, 0.0) for H in self.half_hessians for row in H for h in row
        )
