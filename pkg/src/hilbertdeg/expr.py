"""A small language for potentials phi(x_1, ..., x_k).

Grammar::

    expr    := term (("+" | "-") term)*
    term    := unary (("*" | "/") unary)*
    unary   := "-" unary | power
    power   := atom ("^" ["-"] INT)?
    atom    := NUMBER | "x" INT | call | "(" expr ")"
    call    := "r2(" INT "," INT ")"                    x_a^2 + x_b^2
             | "rad(" INT "," INT "," NUMBER "," INT ")"  (sqrt(x_a^2 + x_b^2) - c)^p, p >= 2
             | "radd(" INT "," INT "," NUMBER "," INT "," INT ")"
                                                        d/dx_j of rad(a, b, c, p)

Trees are immutable; ``to_source`` output parses back to an equal tree.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

import numpy as np


class PotentialSyntaxError(SyntaxError):
    def __init__(self, msg, line, col):
        super().__init__(f"{msg} at line {line}, column {col}")
        self.line = line
        self.col = col


class ArityError(ValueError):
    pass


class NonDifferentiable(ValueError):
    pass


# -- nodes ---------------------------------------------------------------------


@dataclass(frozen=True)
class Expr:
    pos: tuple = field(default=(0, 0), compare=False, repr=False, kw_only=True)

    def __add__(self, o):
        return add(self, o)

    def __sub__(self, o):
        return sub(self, o)

    def __mul__(self, o):
        return mul(self, o)


@dataclass(frozen=True)
class Num(Expr):
    value: float


@dataclass(frozen=True)
class Var(Expr):
    index: int


@dataclass(frozen=True)
class Neg(Expr):
    arg: Expr


@dataclass(frozen=True)
class Bin(Expr):
    op: str
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Pow(Expr):
    base: Expr
    exp: int


@dataclass(frozen=True)
class R2(Expr):
    a: int
    b: int


@dataclass(frozen=True)
class Rad(Expr):
    a: int
    b: int
    c: float
    p: int


@dataclass(frozen=True)
class RadD(Expr):
    a: int
    b: int
    c: float
    p: int
    j: int


ZERO, ONE = Num(0.0), Num(1.0)


def add(a, b):
    if a == ZERO:
        return b
    if b == ZERO:
        return a
    return Bin("+", a, b)


def sub(a, b):
    if b == ZERO:
        return a
    if a == ZERO:
        return Neg(b)
    return Bin("-", a, b)


def mul(a, b):
    if a == ZERO or b == ZERO:
        return ZERO
    if a == ONE:
        return b
    if b == ONE:
        return a
    return Bin("*", a, b)


# -- tokenizer and parser ----------------------------------------------------------

_TOKEN = re.compile(
    r"(?P<ws>\s+)|(?P<num>(\d+\.\d*|\.\d+|\d+)([eE][+-]?\d+)?)|(?P<name>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>[-+*/^(),])"
)
FUNCS = {"r2": 2, "rad": 4, "radd": 5}


def _tokenize(src):
    toks, i, line, col = [], 0, 1, 1
    while i < len(src):
        m = _TOKEN.match(src, i)
        if not m:
            raise PotentialSyntaxError(f"unexpected character {src[i]!r}", line, col)
        kind = m.lastgroup
        text = m.group()
        if kind != "ws":
            toks.append((kind, text, line, col))
        for ch in text:
            if ch == "\n":
                line, col = line + 1, 1
            else:
                col += 1
        i = m.end()
    toks.append(("end", "", line, col))
    return toks


class _Parser:
    def __init__(self, src):
        self.toks = _tokenize(src)
        self.i = 0

    def peek(self):
        return self.toks[self.i]

    def take(self):
        t = self.toks[self.i]
        self.i += 1
        return t

    def fail(self, msg, tok=None):
        tok = tok or self.peek()
        raise PotentialSyntaxError(msg, tok[2], tok[3])

    def expect(self, text):
        t = self.take()
        if t[1] != text:
            self.fail(f"expected {text!r}, found {t[1] or 'end of input'!r}", t)
        return t

    def parse(self):
        e = self.expr()
        if self.peek()[0] != "end":
            self.fail(f"unexpected {self.peek()[1]!r}")
        return e

    def expr(self):
        e = self.term()
        while self.peek()[1] in "+-" and self.peek()[0] == "op":
            t = self.take()
            e = Bin(t[1], e, self.term(), pos=(t[2], t[3]))
        return e

    def term(self):
        e = self.unary()
        while self.peek()[0] == "op" and self.peek()[1] in "*/":
            t = self.take()
            e = Bin(t[1], e, self.unary(), pos=(t[2], t[3]))
        return e

    def unary(self):
        t = self.peek()
        if t[0] == "op" and t[1] == "-":
            self.take()
            nxt = self.peek()
            if nxt[0] == "num" and self.toks[self.i + 1][1] != "^":
                self.take()
                return Num(-float(nxt[1]), pos=(t[2], t[3]))
            return Neg(self.unary(), pos=(t[2], t[3]))
        return self.power()

    def integer(self, signed=False):
        t = self.take()
        sign = 1
        if signed and t[1] == "-":
            sign, t = -1, self.take()
        if t[0] != "num" or not t[1].isdigit():
            self.fail("expected an integer", t)
        return sign * int(t[1])

    def power(self):
        base = self.atom()
        if self.peek()[1] == "^":
            t = self.take()
            return Pow(base, self.integer(signed=True), pos=(t[2], t[3]))
        return base

    def atom(self):
        t = self.take()
        pos = (t[2], t[3])
        if t[0] == "num":
            return Num(float(t[1]), pos=pos)
        if t[0] == "name":
            if re.fullmatch(r"x[1-9]\d*", t[1]):
                return Var(int(t[1][1:]), pos=pos)
            if t[1] in FUNCS:
                return self.call(t[1], pos)
            self.fail(f"unknown name {t[1]!r}", t)
        if t[1] == "(":
            e = self.expr()
            self.expect(")")
            return e
        self.fail(f"unexpected {t[1] or 'end of input'!r}", t)

    def call(self, name, pos):
        self.expect("(")
        args = []
        if self.peek()[1] != ")":
            while True:
                t = self.take()
                sign = 1.0
                if t[1] == "-":
                    sign, t = -1.0, self.take()
                if t[0] != "num":
                    self.fail("function arguments must be numbers", t)
                args.append((sign * float(t[1]), t))
                if self.peek()[1] != ",":
                    break
                self.take()
        self.expect(")")
        if len(args) != FUNCS[name]:
            raise ArityError(f"{name} takes {FUNCS[name]} arguments, got {len(args)} (line {pos[0]}, column {pos[1]})")

        def idx(k):
            v, t = args[k]
            if v != int(v) or v < 1:
                self.fail("variable index must be a positive integer", t)
            return int(v)

        if name == "r2":
            return R2(idx(0), idx(1), pos=pos)
        c, p = args[2][0], args[3][0]
        if p != int(p):
            self.fail("power must be an integer", args[3][1])
        if p < 2:
            raise NonDifferentiable(f"rad needs p >= 2, got {p:g}: the gradient is singular on |z| = c")
        if name == "rad":
            return Rad(idx(0), idx(1), c, int(p), pos=pos)
        return RadD(idx(0), idx(1), c, int(p), idx(4), pos=pos)


def parse_potential(src: str) -> Expr:
    return _Parser(src).parse()


# -- printing ----------------------------------------------------------------------


def _num(v):
    s = repr(float(v))
    return f"({s})" if v < 0 else s


def to_source(e: Expr) -> str:
    if isinstance(e, Num):
        return _num(e.value)
    if isinstance(e, Var):
        return f"x{e.index}"
    if isinstance(e, Neg):
        return f"(-({to_source(e.arg)}))"
    if isinstance(e, Bin):
        return f"({to_source(e.left)} {e.op} {to_source(e.right)})"
    if isinstance(e, Pow):
        return f"({to_source(e.base)})^{e.exp}"
    if isinstance(e, R2):
        return f"r2({e.a},{e.b})"
    if isinstance(e, Rad):
        return f"rad({e.a},{e.b},{e.c!r},{e.p})"
    if isinstance(e, RadD):
        return f"radd({e.a},{e.b},{e.c!r},{e.p},{e.j})"
    raise TypeError(e)


# -- evaluation and differentiation ------------------------------------------------


def variables(e: Expr) -> set[int]:
    if isinstance(e, Var):
        return {e.index}
    if isinstance(e, (R2, Rad)):
        return {e.a, e.b}
    if isinstance(e, RadD):
        return {e.a, e.b, e.j}
    if isinstance(e, Neg):
        return variables(e.arg)
    if isinstance(e, Bin):
        return variables(e.left) | variables(e.right)
    if isinstance(e, Pow):
        return variables(e.base)
    return set()


def _col(X, i):
    return X[:, i - 1] if i <= X.shape[1] else np.zeros(len(X))


def evaluate(e: Expr, X: np.ndarray) -> np.ndarray:
    """Value on each row of X (coordinates beyond X's width are zero)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    m = len(X)
    if isinstance(e, Num):
        return np.full(m, e.value)
    if isinstance(e, Var):
        return _col(X, e.index).copy()
    if isinstance(e, Neg):
        return -evaluate(e.arg, X)
    if isinstance(e, Bin):
        a, b = evaluate(e.left, X), evaluate(e.right, X)
        return {"+": np.add, "-": np.subtract, "*": np.multiply, "/": np.divide}[e.op](a, b)
    if isinstance(e, Pow):
        return evaluate(e.base, X) ** float(e.exp)
    if isinstance(e, R2):
        return _col(X, e.a) ** 2 + _col(X, e.b) ** 2
    rho = np.hypot(_col(X, e.a), _col(X, e.b))
    if isinstance(e, Rad):
        return (rho - e.c) ** e.p
    if isinstance(e, RadD):
        safe = np.where(rho > 0, rho, 1.0)
        # d rho / d x_j, counting j twice when a == b
        k = (e.a == e.j) + (e.b == e.j)
        unit = np.where(rho > 0, k * _col(X, e.j) / safe, 0.0)
        return e.p * (rho - e.c) ** (e.p - 1) * unit
    raise TypeError(e)


def diff(e: Expr, i: int) -> Expr:
    """Symbolic partial derivative with respect to x_i."""
    if isinstance(e, Num):
        return ZERO
    if isinstance(e, Var):
        return ONE if e.index == i else ZERO
    if isinstance(e, Neg):
        d = diff(e.arg, i)
        return ZERO if d == ZERO else Neg(d)
    if isinstance(e, Bin):
        a, b = e.left, e.right
        da, db = diff(a, i), diff(b, i)
        if e.op == "+":
            return add(da, db)
        if e.op == "-":
            return sub(da, db)
        if e.op == "*":
            return add(mul(da, b), mul(a, db))
        # quotient rule
        num = sub(mul(da, b), mul(a, db))
        return ZERO if num == ZERO else Bin("/", num, Pow(b, 2))
    if isinstance(e, Pow):
        d = diff(e.base, i)
        if d == ZERO or e.exp == 0:
            return ZERO
        inner = e.base if e.exp == 2 else Pow(e.base, e.exp - 1)
        return mul(mul(Num(float(e.exp)), inner), d)
    if isinstance(e, R2):
        k = (e.a == i) + (e.b == i)
        return mul(Num(2.0 * k), Var(i)) if k else ZERO
    if isinstance(e, Rad):
        return RadD(e.a, e.b, e.c, e.p, i) if i in (e.a, e.b) else ZERO
    if isinstance(e, RadD):
        raise NonDifferentiable("second derivatives of rad terms are not supported")
    raise TypeError(e)


@dataclass(frozen=True)
class PotentialExpr:
    """Parsed potential with its symbolic gradient."""

    tree: Expr
    source: str = field(default="", compare=False)

    @classmethod
    def parse(cls, src: str) -> PotentialExpr:
        return cls(parse_potential(src), src)

    @property
    def dim(self) -> int:
        v = variables(self.tree)
        return max(v) if v else 1

    @property
    def gradient_exprs(self) -> tuple:
        return tuple(diff(self.tree, i) for i in range(1, self.dim + 1))

    def __call__(self, X) -> np.ndarray:
        return evaluate(self.tree, X)

    def gradient(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return np.column_stack([evaluate(g, X) for g in self.gradient_exprs])

    def to_source(self) -> str:
        return to_source(self.tree)

    def __str__(self):
        return self.to_source()
