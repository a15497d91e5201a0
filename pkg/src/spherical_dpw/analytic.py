"""Real-analytic functions of one variable, given as expressions.

Grammar (``^`` binds tightest and is right-associative; juxtaposition is
multiplication, so ``2s``, ``0.5cos(s)`` and ``a b`` all parse)::

    expr    := term (('+' | '-') term)*
    term    := unary (('*' | '/') unary | primary)*
    unary   := ('+' | '-') unary | power
    power   := primary ('^' unary)?
    primary := NUMBER | NAME | NAME '(' expr ')' | '(' expr ')'

Names: the free variable (``s`` by default), the constants ``pi`` and ``i``
(imaginary unit), and the functions sin cos tan sinh cosh exp sqrt log.

Evaluation uses complex arithmetic, so evaluating at a complex argument
gives the holomorphic extension.  ``sqrt``, ``log`` and non-integer powers
use the principal branch; landing exactly on the negative real axis is an
evaluation error, as is a division by zero.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import EvaluationError, ExpressionSyntaxError, UnknownIdentifierError

FUNCTIONS = ("sin", "cos", "tan", "sinh", "cosh", "exp", "sqrt", "log")
CONSTANTS = {"pi": complex(math.pi), "i": 1j}

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_][A-Za-z0-9_]*)|(?P<op>[-+*/^()]))"
)


# --------------------------------------------------------------------- nodes

class Node:
    __slots__ = ()

    def eval(self, z):
        raise NotImplementedError

    def diff(self) -> "Node":
        raise NotImplementedError


@dataclass(frozen=True)
class Const(Node):
    value: complex

    def eval(self, z):
        return np.full(np.shape(z), self.value, dtype=complex) if np.ndim(z) else complex(self.value)

    def diff(self):
        return ZERO

    def __str__(self):
        v = complex(self.value)
        if v.imag == 0:
            r = repr(float(v.real))
            return f"({r})" if v.real < 0 else r
        if v.real == 0:
            return f"({float(v.imag)!r}*i)"
        return f"({float(v.real)!r} + {float(v.imag)!r}*i)"


@dataclass(frozen=True)
class Var(Node):
    name: str = "s"

    def eval(self, z):
        return np.asarray(z, dtype=complex) if np.ndim(z) else complex(z)

    def diff(self):
        return ONE

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class Add(Node):
    a: Node
    b: Node

    def eval(self, z):
        return self.a.eval(z) + self.b.eval(z)

    def diff(self):
        return add(self.a.diff(), self.b.diff())

    def __str__(self):
        return f"({self.a} + {self.b})"


@dataclass(frozen=True)
class Sub(Node):
    a: Node
    b: Node

    def eval(self, z):
        return self.a.eval(z) - self.b.eval(z)

    def diff(self):
        return sub(self.a.diff(), self.b.diff())

    def __str__(self):
        return f"({self.a} - {self.b})"


@dataclass(frozen=True)
class Mul(Node):
    a: Node
    b: Node

    def eval(self, z):
        return self.a.eval(z) * self.b.eval(z)

    def diff(self):
        return add(mul(self.a.diff(), self.b), mul(self.a, self.b.diff()))

    def __str__(self):
        return f"({self.a} * {self.b})"


@dataclass(frozen=True)
class Div(Node):
    a: Node
    b: Node

    def eval(self, z):
        den = self.b.eval(z)
        if np.any(den == 0):
            raise EvaluationError("division by zero", _first_bad(z, den == 0))
        return self.a.eval(z) / den

    def diff(self):
        num = sub(mul(self.a.diff(), self.b), mul(self.a, self.b.diff()))
        return div(num, power(self.b, Const(2)))

    def __str__(self):
        return f"({self.a} / {self.b})"


@dataclass(frozen=True)
class Neg(Node):
    a: Node

    def eval(self, z):
        return -self.a.eval(z)

    def diff(self):
        return neg(self.a.diff())

    def __str__(self):
        return f"(-{self.a})"


@dataclass(frozen=True)
class Pow(Node):
    base: Node
    exponent: Node

    def _int_exponent(self):
        if isinstance(self.exponent, Const):
            v = complex(self.exponent.value)
            if v.imag == 0 and float(v.real).is_integer():
                return int(v.real)
        return None

    def eval(self, z):
        b = self.base.eval(z)
        n = self._int_exponent()
        if n is not None:
            if n < 0 and np.any(b == 0):
                raise EvaluationError("negative power of zero", _first_bad(z, b == 0))
            return b ** n
        _check_cut(z, b, "non-integer power")
        return np.exp(self.exponent.eval(z) * np.log(b))

    def diff(self):
        n = self._int_exponent()
        if isinstance(self.exponent, Const):
            c = self.exponent.value
            if n == 0:
                return ZERO
            return mul(mul(Const(c), power(self.base, Const(c - 1))), self.base.diff())
        # d(b^e) = b^e (e' log b + e b'/b)
        inner = add(mul(self.exponent.diff(), call("log", self.base)),
                    div(mul(self.exponent, self.base.diff()), self.base))
        return mul(self, inner)

    def __str__(self):
        return f"({self.base} ^ {self.exponent})"


@dataclass(frozen=True)
class Call(Node):
    fn: str
    arg: Node

    def eval(self, z):
        u = self.arg.eval(z)
        if self.fn in ("sqrt", "log"):
            _check_cut(z, u, self.fn)
            if self.fn == "log" and np.any(u == 0):
                raise EvaluationError("log of zero", _first_bad(z, u == 0))
        with np.errstate(all="ignore"):
            out = getattr(np, self.fn)(u)
        if not np.all(np.isfinite(out)):
            raise EvaluationError(f"{self.fn} is not finite", _first_bad(z, ~np.isfinite(out)))
        return out

    def diff(self):
        u, du = self.arg, self.arg.diff()
        outer = {
            "sin": lambda: call("cos", u),
            "cos": lambda: neg(call("sin", u)),
            "tan": lambda: div(ONE, power(call("cos", u), Const(2))),
            "sinh": lambda: call("cosh", u),
            "cosh": lambda: call("sinh", u),
            "exp": lambda: self,
            "sqrt": lambda: div(Const(0.5), self),
            "log": lambda: div(ONE, u),
        }[self.fn]()
        return mul(outer, du)

    def __str__(self):
        return f"{self.fn}({self.arg})"


ZERO = Const(0j)
ONE = Const(1 + 0j)


def _first_bad(z, mask):
    if np.ndim(z) == 0:
        return complex(z)
    zz = np.broadcast_to(np.asarray(z), np.shape(mask))
    return complex(zz[np.unravel_index(np.argmax(mask), np.shape(mask))])


def _check_cut(z, u, what):
    on_cut = (np.imag(u) == 0) & (np.real(u) < 0)
    if np.any(on_cut):
        raise EvaluationError(f"{what} evaluated on its branch cut", _first_bad(z, on_cut))


# -------------------------------------------------- simplifying constructors

def _is(node, v):
    return isinstance(node, Const) and node.value == v


def add(a: Node, b: Node) -> Node:
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value + b.value)
    if _is(a, 0):
        return b
    if _is(b, 0):
        return a
    return Add(a, b)


def sub(a: Node, b: Node) -> Node:
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value - b.value)
    if _is(b, 0):
        return a
    if _is(a, 0):
        return neg(b)
    return Sub(a, b)


def mul(a: Node, b: Node) -> Node:
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value * b.value)
    if _is(a, 0) or _is(b, 0):
        return ZERO
    if _is(a, 1):
        return b
    if _is(b, 1):
        return a
    return Mul(a, b)


def div(a: Node, b: Node) -> Node:
    if isinstance(a, Const) and isinstance(b, Const) and b.value != 0:
        return Const(a.value / b.value)
    if _is(a, 0) and not _is(b, 0):
        return ZERO
    if _is(b, 1):
        return a
    return Div(a, b)


def neg(a: Node) -> Node:
    if isinstance(a, Const):
        return Const(-a.value)
    if isinstance(a, Neg):
        return a.a
    return Neg(a)


def power(b: Node, e: Node) -> Node:
    if _is(e, 0):
        return ONE
    if _is(e, 1):
        return b
    if isinstance(b, Const) and isinstance(e, Const):
        p = Pow(b, e)
        try:
            return Const(complex(p.eval(0.0)))
        except EvaluationError:
            return p
    return Pow(b, e)


def call(fn: str, a: Node) -> Node:
    node = Call(fn, a)
    if isinstance(a, Const):
        try:
            return Const(complex(node.eval(0.0)))
        except EvaluationError:
            pass
    return node


# -------------------------------------------------------------------- parser

class _Parser:
    def __init__(self, src: str, variable: str):
        self.src = src
        self.variable = variable
        self.tokens = []
        pos = 0
        n = len(src)
        while pos < n:
            if src[pos:].strip() == "":
                break
            m = _TOKEN.match(src, pos)
            if not m:
                off = pos + len(src[pos:]) - len(src[pos:].lstrip())
                raise ExpressionSyntaxError(f"unexpected character {src[off]!r}", off,
                                            {"number", "name", "operator"})
            kind = m.lastgroup
            start = m.start(kind)
            self.tokens.append((kind, m.group(kind), start))
            pos = m.end()
        self.tokens.append(("end", "", len(src)))
        self.i = 0
        self.unknown = []

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        t = self.tokens[self.i]
        self.i += 1
        return t

    def starts_primary(self, tok):
        return tok[0] in ("num", "name") or tok[1] == "("

    def parse(self) -> Node:
        node = self.expr()
        tok = self.peek()
        if tok[0] != "end":
            if tok[1] == ")":
                raise ExpressionSyntaxError("unmatched ')'", tok[2], {"operator", "end of input"})
            raise ExpressionSyntaxError(f"unexpected token {tok[1]!r}", tok[2], {"operator", "end of input"})
        if self.unknown:
            name, off = self.unknown[0]
            raise UnknownIdentifierError(name, off)
        return node

    def expr(self):
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            rhs = self.term()
            node = add(node, rhs) if op == "+" else sub(node, rhs)
        return node

    def term(self):
        node = self.unary()
        while True:
            tok = self.peek()
            if tok[0] == "op" and tok[1] in ("*", "/"):
                self.take()
                rhs = self.unary()
                node = mul(node, rhs) if tok[1] == "*" else div(node, rhs)
            elif self.starts_primary(tok):
                node = mul(node, self.power())
            else:
                return node

    def unary(self):
        tok = self.peek()
        if tok[0] == "op" and tok[1] in ("+", "-"):
            self.take()
            inner = self.unary()
            return inner if tok[1] == "+" else neg(inner)
        return self.power()

    def power(self):
        base = self.primary()
        tok = self.peek()
        if tok[0] == "op" and tok[1] == "^":
            self.take()
            return power(base, self.unary())
        return base

    def primary(self):
        kind, text, off = self.take()
        if kind == "num":
            return Const(complex(float(text)))
        if kind == "name":
            if text in FUNCTIONS:
                tok = self.peek()
                if tok[1] != "(":
                    raise ExpressionSyntaxError(f"function {text!r} needs a parenthesized argument",
                                                tok[2], {"("})
                open_off = self.take()[2]
                arg = self.expr()
                self.close(open_off)
                return call(text, arg)
            if text == self.variable:
                return Var(text)
            if text in CONSTANTS:
                return Const(CONSTANTS[text])
            self.unknown.append((text, off))
            return Var(text)
        if text == "(":
            node = self.expr()
            self.close(off)
            return node
        if kind == "end":
            raise ExpressionSyntaxError("unexpected end of input", off, {"number", "name", "("})
        raise ExpressionSyntaxError(f"unexpected token {text!r}", off, {"number", "name", "("})

    def close(self, open_off):
        tok = self.peek()
        if tok[1] == ")":
            self.take()
            return
        if tok[0] == "end":
            raise ExpressionSyntaxError("unclosed parenthesis", open_off, {")"})
        raise ExpressionSyntaxError(f"unexpected token {tok[1]!r}", tok[2], {")", "operator"})


# ------------------------------------------------------------------ wrapper

class AnalyticFn:
    """An expression tree in one complex variable.

    Calling the object evaluates it (scalar or array argument).  Arithmetic
    with numbers or other ``AnalyticFn`` builds new trees, which is how the
    potential constructors assemble matrix entries.
    """

    def __init__(self, node: Node, variable: str = "s"):
        self.node = node
        self.variable = variable

    @classmethod
    def const(cls, c, variable="s") -> "AnalyticFn":
        return cls(Const(complex(c)), variable)

    @classmethod
    def var(cls, variable="s") -> "AnalyticFn":
        return cls(Var(variable), variable)

    def __call__(self, z):
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            out = self.node.eval(z)
        if not np.all(np.isfinite(out)):
            raise EvaluationError("expression is not finite", _first_bad(z, ~np.isfinite(out)))
        return out

    def __str__(self):
        return str(self.node)

    def __repr__(self):
        return f"AnalyticFn({self})"

    @cached_property
    def _derivative(self) -> "AnalyticFn":
        return AnalyticFn(self.node.diff(), self.variable)

    def derivative(self) -> "AnalyticFn":
        return self._derivative

    @property
    def is_constant(self) -> bool:
        return isinstance(self.node, Const)

    @property
    def is_zero(self) -> bool:
        """True only for the literal constant 0 (no numerical test)."""
        return _is(self.node, 0)

    def _lift(self, other) -> Node:
        if isinstance(other, AnalyticFn):
            return other.node
        return Const(complex(other))

    def __add__(self, o):
        return AnalyticFn(add(self.node, self._lift(o)), self.variable)

    __radd__ = __add__

    def __sub__(self, o):
        return AnalyticFn(sub(self.node, self._lift(o)), self.variable)

    def __rsub__(self, o):
        return AnalyticFn(sub(self._lift(o), self.node), self.variable)

    def __mul__(self, o):
        return AnalyticFn(mul(self.node, self._lift(o)), self.variable)

    __rmul__ = __mul__

    def __truediv__(self, o):
        return AnalyticFn(div(self.node, self._lift(o)), self.variable)

    def __rtruediv__(self, o):
        return AnalyticFn(div(self._lift(o), self.node), self.variable)

    def __neg__(self):
        return AnalyticFn(neg(self.node), self.variable)

    def __pow__(self, o):
        return AnalyticFn(power(self.node, self._lift(o)), self.variable)

    def apply(self, fn: str) -> "AnalyticFn":
        if fn not in FUNCTIONS:
            raise ValueError(f"unknown function {fn!r}")
        return AnalyticFn(call(fn, self.node), self.variable)


def as_fn(x, variable="s") -> AnalyticFn:
    """Coerce an expression string, number or AnalyticFn."""
    if isinstance(x, AnalyticFn):
        return x
    if isinstance(x, str):
        return parse(x, variable)
    return AnalyticFn.const(x, variable)


def parse(src: str, variable: str = "s") -> AnalyticFn:
    return AnalyticFn(_Parser(src, variable).parse(), variable)


def eval_complex(f: AnalyticFn, z) -> complex:
    return f(z)


def derivative(f: AnalyticFn) -> AnalyticFn:
    return f.derivative()


def taylor_coefficients(f: AnalyticFn, x0, count: int) -> list[complex]:
    """Exact Taylor coefficients f^(k)(x0)/k! for k < count, via symbolic derivatives."""
    out, g = [], f
    for k in range(count):
        out.append(complex(g(x0)) / math.factorial(k))
        g = g.derivative()
    return out
