"""Scalar-field expressions used in domain-spec files.

Grammar (loosest to tightest binding)::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := ('-' | '+') unary | power
    power  := atom ('^' int)*
    int    := ['-' | '+'] DIGITS | '(' int ')'
    atom   := NUMBER | 'pi' | 'sqrt2' | 'norm2' | 'x'DIGITS
            | ('exp' | 'log' | 'sqrt') '(' expr ')'
            | ('re' | 'im' | 'abs2') '(' DIGITS ')'
            | '(' expr ')'

Variables ``x1 .. x{n}`` are 1-based. ``re(k)``, ``im(k)`` and ``abs2(k)``
refer to the complex coordinate ``z_k = x_{2k-1} + i x_{2k}``; ``norm2`` is
the squared Euclidean norm of the whole evaluation point. There is no ``abs``:
kinks are modelled by piecewise domain data, so every expression is smooth
wherever it is defined.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ExprSyntaxError, NonIntegerExponent, UnknownVariable
from .jets import Jet2, norm2_jet

CONSTANTS = {"pi": math.pi, "sqrt2": math.sqrt(2.0)}
FUNCTIONS = ("exp", "log", "sqrt")
HELPERS = ("re", "im", "abs2")


class Expr:
    """Base class; subclasses are frozen dataclasses so ASTs compare by value."""

    def __str__(self):
        return to_text(self)

    # Python operators build ASTs with light constant folding
    def __add__(self, other):
        return add(self, _wrap(other))

    def __radd__(self, other):
        return add(_wrap(other), self)

    def __sub__(self, other):
        return sub(self, _wrap(other))

    def __rsub__(self, other):
        return sub(_wrap(other), self)

    def __mul__(self, other):
        return mul(self, _wrap(other))

    def __rmul__(self, other):
        return mul(_wrap(other), self)

    def __truediv__(self, other):
        return div(self, _wrap(other))

    def __neg__(self):
        return neg(self)


@dataclass(frozen=True, eq=True)
class Num(Expr):
    value: float


@dataclass(frozen=True)
class Const(Expr):
    name: str


@dataclass(frozen=True)
class Var(Expr):
    index: int  # 1-based


@dataclass(frozen=True)
class Neg(Expr):
    arg: Expr


@dataclass(frozen=True)
class BinOp(Expr):
    op: str
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Pow(Expr):
    base: Expr
    exponent: int


@dataclass(frozen=True)
class Func(Expr):
    name: str
    arg: Expr


@dataclass(frozen=True)
class Helper(Expr):
    name: str
    k: int  # 1-based complex index


@dataclass(frozen=True)
class Norm2(Expr):
    pass


def _wrap(x):
    return x if isinstance(x, Expr) else Num(float(x))


def _is_num(e, v=None):
    return isinstance(e, Num) and (v is None or e.value == v)


def add(a, b):
    if _is_num(a, 0.0):
        return b
    if _is_num(b, 0.0):
        return a
    if _is_num(a) and _is_num(b):
        return Num(a.value + b.value)
    return BinOp("+", a, b)


def sub(a, b):
    if _is_num(b, 0.0):
        return a
    if _is_num(a, 0.0):
        return neg(b)
    if _is_num(a) and _is_num(b):
        return Num(a.value - b.value)
    return BinOp("-", a, b)


def mul(a, b):
    if _is_num(a, 0.0) or _is_num(b, 0.0):
        return Num(0.0)
    if _is_num(a, 1.0):
        return b
    if _is_num(b, 1.0):
        return a
    if _is_num(a) and _is_num(b):
        return Num(a.value * b.value)
    return BinOp("*", a, b)


def div(a, b):
    if _is_num(a, 0.0):
        return Num(0.0)
    if _is_num(b, 1.0):
        return a
    return BinOp("/", a, b)


def neg(a):
    if _is_num(a):
        return Num(-a.value)
    if isinstance(a, Neg):
        return a.arg
    return Neg(a)


def power(b, k):
    if k == 0:
        return Num(1.0)
    if k == 1:
        return b
    return Pow(b, k)


# ---------------------------------------------------------------------------
# tokenizer / parser

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<number>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^(),])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class _Tok:
    kind: str
    text: str
    offset: int  # UTF-8 byte offset


def _tokenize(text):
    toks = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        boff = len(text[:pos].encode("utf-8"))
        if not m:
            raise ExprSyntaxError(f"unexpected character {text[pos]!r}", boff, text)
        if m.lastgroup != "ws":
            toks.append(_Tok(m.lastgroup, m.group(), boff))
        pos = m.end()
    toks.append(_Tok("eof", "", len(text.encode("utf-8"))))
    return toks


class _Parser:
    def __init__(self, text, nvars):
        self.text = text
        self.toks = _tokenize(text)
        self.i = 0
        self.nvars = nvars

    @property
    def tok(self):
        return self.toks[self.i]

    def advance(self):
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect(self, text):
        t = self.tok
        if t.text != text or t.kind == "eof":
            want = repr(text)
            got = "end of input" if t.kind == "eof" else repr(t.text)
            raise ExprSyntaxError(f"expected {want}, got {got}", t.offset, self.text)
        return self.advance()

    def error(self, msg, tok=None):
        tok = tok or self.tok
        raise ExprSyntaxError(msg, tok.offset, self.text)

    def parse(self):
        e = self.expr()
        if self.tok.kind != "eof":
            self.error(f"unexpected {self.tok.text!r}")
        return e

    def expr(self):
        e = self.term()
        while self.tok.text in ("+", "-") and self.tok.kind == "op":
            op = self.advance().text
            e = BinOp(op, e, self.term())
        return e

    def term(self):
        e = self.unary()
        while self.tok.text in ("*", "/") and self.tok.kind == "op":
            op = self.advance().text
            e = BinOp(op, e, self.unary())
        return e

    def unary(self):
        if self.tok.kind == "op" and self.tok.text in ("-", "+"):
            op = self.advance().text
            arg = self.unary()
            return Neg(arg) if op == "-" else arg
        return self.power()

    def power(self):
        e = self.atom()
        while self.tok.kind == "op" and self.tok.text == "^":
            self.advance()
            e = Pow(e, self.int_exponent())
        return e

    def int_exponent(self):
        t = self.tok
        if t.kind == "op" and t.text == "(":
            self.advance()
            k = self.int_exponent()
            self.expect(")")
            return k
        sign = 1
        if t.kind == "op" and t.text in ("-", "+"):
            sign = -1 if t.text == "-" else 1
            self.advance()
            t = self.tok
        if t.kind == "number":
            self.advance()
            if not t.text.isdigit():
                raise NonIntegerExponent(f"exponent {t.text!r} is not an integer", t.offset, self.text)
            return sign * int(t.text)
        if t.kind == "eof":
            self.error("expected integer exponent, got end of input")
        raise NonIntegerExponent(f"exponent must be an integer literal, got {t.text!r}", t.offset, self.text)

    def atom(self):
        t = self.tok
        if t.kind == "number":
            self.advance()
            return Num(float(t.text))
        if t.kind == "op" and t.text == "(":
            self.advance()
            e = self.expr()
            self.expect(")")
            return e
        if t.kind == "name":
            self.advance()
            name = t.text
            if name in CONSTANTS:
                return Const(name)
            if name == "norm2":
                return Norm2()
            if name in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Func(name, arg)
            if name in HELPERS:
                self.expect("(")
                kt = self.tok
                if kt.kind != "number" or not kt.text.isdigit() or int(kt.text) < 1:
                    self.error(f"{name}() takes a complex coordinate index >= 1", kt)
                self.advance()
                self.expect(")")
                k = int(kt.text)
                if self.nvars is not None and 2 * k > self.nvars:
                    raise UnknownVariable(f"{name}({k}) needs x{2 * k}, only x1..x{self.nvars} exist",
                                          kt.offset, self.text)
                return Helper(name, k)
            m = re.fullmatch(r"x(\d+)", name)
            if m and int(m.group(1)) >= 1:
                idx = int(m.group(1))
                if self.nvars is not None and idx > self.nvars:
                    raise UnknownVariable(f"variable {name} out of range x1..x{self.nvars}", t.offset, self.text)
                return Var(idx)
            raise UnknownVariable(f"unknown name {name!r}", t.offset, self.text)
        if t.kind == "eof":
            self.error("unexpected end of input")
        self.error(f"unexpected {t.text!r}")


def parse(text, nvars=None):
    """Parse ``text``; ``nvars`` (optional) bounds the admissible variables."""
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    return _Parser(text, nvars).parse()


# ---------------------------------------------------------------------------
# printing

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2}


def _prec(e):
    if isinstance(e, BinOp):
        return _PREC[e.op]
    if isinstance(e, Neg):
        return 3
    if isinstance(e, Pow):
        return 4
    if isinstance(e, Num) and e.value < 0:
        return 3
    return 5


def _fmt_num(v):
    if math.isfinite(v) and v.is_integer() and abs(v) < 1e15:
        return str(int(v))
    return repr(v)


def to_text(e):
    """Render ``e`` so that ``parse(to_text(e))`` rebuilds parser-produced ASTs exactly."""
    def wrap(sub, ok):
        s = to_text(sub)
        return s if ok else f"({s})"

    if isinstance(e, Num):
        return _fmt_num(e.value) if e.value >= 0 else f"-{_fmt_num(-e.value)}"
    if isinstance(e, Const):
        return e.name
    if isinstance(e, Var):
        return f"x{e.index}"
    if isinstance(e, Norm2):
        return "norm2"
    if isinstance(e, Helper):
        return f"{e.name}({e.k})"
    if isinstance(e, Func):
        return f"{e.name}({to_text(e.arg)})"
    if isinstance(e, Neg):
        return "-" + wrap(e.arg, _prec(e.arg) >= 3)
    if isinstance(e, Pow):
        return f"{wrap(e.base, _prec(e.base) >= 4)}^{e.exponent}"
    if isinstance(e, BinOp):
        p = _PREC[e.op]
        left = wrap(e.left, _prec(e.left) >= p)
        right = wrap(e.right, _prec(e.right) > p)
        sep = f" {e.op} " if p == 1 else e.op
        return f"{left}{sep}{right}"
    raise TypeError(f"not an expression: {e!r}")


# ---------------------------------------------------------------------------
# analysis

def max_variable(e):
    """Largest 1-based variable index referenced (0 for none; -1 for norm2)."""
    if isinstance(e, Var):
        return e.index
    if isinstance(e, Helper):
        return 2 * e.k
    if isinstance(e, Norm2):
        return -1
    if isinstance(e, (Neg, Func)):
        return max_variable(e.arg)
    if isinstance(e, Pow):
        return max_variable(e.base)
    if isinstance(e, BinOp):
        a, b = max_variable(e.left), max_variable(e.right)
        return -1 if -1 in (a, b) else max(a, b)
    return 0


def check_variables(e, nvars):
    m = max_variable(e)
    if m > nvars:
        raise UnknownVariable(f"expression {to_text(e)!r} uses x{m}, only x1..x{nvars} exist")


# ---------------------------------------------------------------------------
# numeric evaluation

def _coord(points, idx):
    n = points.shape[-1]
    if idx > n:
        raise UnknownVariable(f"x{idx} referenced at a point with {n} coordinates")
    return points[..., idx - 1]


def evaluate(e, points, strict=True):
    """Value of ``e`` at ``points`` (last axis = coordinates).

    With ``strict=False`` points outside the smooth domain give ``nan``
    instead of raising :class:`DomainError`.
    """
    p = np.asarray(points, dtype=float)
    with np.errstate(all="ignore"):
        out = _eval(e, p, strict)
    return np.broadcast_to(out, p.shape[:-1]).astype(float) if np.ndim(out) == 0 else out


def _eval(e, p, strict):
    if isinstance(e, Num):
        return np.float64(e.value)
    if isinstance(e, Const):
        return np.float64(CONSTANTS[e.name])
    if isinstance(e, Var):
        return _coord(p, e.index)
    if isinstance(e, Norm2):
        return np.sum(p * p, axis=-1)
    if isinstance(e, Helper):
        x = _coord(p, 2 * e.k - 1)
        y = _coord(p, 2 * e.k)
        return {"re": x, "im": y, "abs2": x * x + y * y}[e.name]
    if isinstance(e, Neg):
        return -_eval(e.arg, p, strict)
    if isinstance(e, BinOp):
        a = _eval(e.left, p, strict)
        b = _eval(e.right, p, strict)
        if e.op == "+":
            return a + b
        if e.op == "-":
            return a - b
        if e.op == "*":
            return a * b
        if strict and np.any(b == 0.0):
            raise DomainError(f"division by zero in {to_text(e)!r}")
        return a / b
    if isinstance(e, Pow):
        b = _eval(e.base, p, strict)
        if e.exponent < 0:
            if strict and np.any(b == 0.0):
                raise DomainError(f"negative power of zero in {to_text(e)!r}")
            return 1.0 / b ** (-e.exponent)
        return b**e.exponent
    if isinstance(e, Func):
        a = _eval(e.arg, p, strict)
        if e.name == "exp":
            return np.exp(a)
        bad = a <= 0.0
        if np.any(bad):
            if strict:
                raise DomainError(f"{e.name} of a non-positive value in {to_text(e)!r}")
            a = np.where(bad, np.nan, a)
        return np.log(a) if e.name == "log" else np.sqrt(a)
    raise TypeError(f"not an expression: {e!r}")


def eval_jet(e, points):
    """Exact 2-jet of ``e`` at ``points`` (a single point or a batch)."""
    p = np.asarray(points, dtype=float)
    if p.ndim == 0:
        raise ValueError("points must have a coordinate axis")
    return _jet(e, p)


def _jet(e, p):
    n = p.shape[-1]
    batch = p.shape[:-1]
    if isinstance(e, Num):
        return Jet2.constant(e.value, n, batch)
    if isinstance(e, Const):
        return Jet2.constant(CONSTANTS[e.name], n, batch)
    if isinstance(e, Var):
        if e.index > n:
            raise UnknownVariable(f"x{e.index} referenced at a point with {n} coordinates")
        return Jet2.coordinate(p, e.index - 1)
    if isinstance(e, Norm2):
        return norm2_jet(p)
    if isinstance(e, Helper):
        if 2 * e.k > n:
            raise UnknownVariable(f"{e.name}({e.k}) referenced at a point with {n} coordinates")
        x = Jet2.coordinate(p, 2 * e.k - 2)
        y = Jet2.coordinate(p, 2 * e.k - 1)
        if e.name == "re":
            return x
        if e.name == "im":
            return y
        return x * x + y * y
    if isinstance(e, Neg):
        return -_jet(e.arg, p)
    if isinstance(e, BinOp):
        a = _jet(e.left, p)
        b = _jet(e.right, p)
        if e.op == "+":
            return a + b
        if e.op == "-":
            return a - b
        if e.op == "*":
            return a * b
        return a / b
    if isinstance(e, Pow):
        return _jet(e.base, p) ** e.exponent
    if isinstance(e, Func):
        a = _jet(e.arg, p)
        return getattr(a, e.name)()
    raise TypeError(f"not an expression: {e!r}")


# ---------------------------------------------------------------------------
# symbolic differentiation (test oracle)

def symbolic_diff(e, var):
    """Exact derivative of ``e`` with respect to the 0-based coordinate ``var``."""
    if var < 0:
        raise ValueError("var must be a 0-based coordinate index")
    v1 = var + 1
    if isinstance(e, (Num, Const)):
        return Num(0.0)
    if isinstance(e, Var):
        return Num(1.0 if e.index == v1 else 0.0)
    if isinstance(e, Norm2):
        return mul(Num(2.0), Var(v1))
    if isinstance(e, Helper):
        re_idx, im_idx = 2 * e.k - 1, 2 * e.k
        if e.name == "re":
            return Num(1.0 if v1 == re_idx else 0.0)
        if e.name == "im":
            return Num(1.0 if v1 == im_idx else 0.0)
        if v1 in (re_idx, im_idx):
            return mul(Num(2.0), Var(v1))
        return Num(0.0)
    if isinstance(e, Neg):
        return neg(symbolic_diff(e.arg, var))
    if isinstance(e, BinOp):
        a, b = e.left, e.right
        da, db = symbolic_diff(a, var), symbolic_diff(b, var)
        if e.op == "+":
            return add(da, db)
        if e.op == "-":
            return sub(da, db)
        if e.op == "*":
            return add(mul(da, b), mul(a, db))
        return div(sub(mul(da, b), mul(a, db)), power(b, 2))
    if isinstance(e, Pow):
        k = e.exponent
        return mul(mul(Num(float(k)), power(e.base, k - 1)), symbolic_diff(e.base, var))
    if isinstance(e, Func):
        du = symbolic_diff(e.arg, var)
        if e.name == "exp":
            return mul(e, du)
        if e.name == "log":
            return div(du, e.arg)
        return div(du, mul(Num(2.0), e))
    raise TypeError(f"not an expression: {e!r}")
