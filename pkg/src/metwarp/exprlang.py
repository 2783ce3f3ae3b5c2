"""Scalar expression language with exact second-order forward derivatives.

Grammar (no implicit multiplication)::

    expr    := expr ('+' | '-') expr | expr ('*' | '/') expr
             | '-' expr | expr '^' expr | atom
    atom    := NUMBER | NAME | FUNC '(' expr ')' | '(' expr ')'

Binding strength, tightest first: ``^`` (right-associative), unary ``-``,
``* /``, ``+ -``. The exponent of ``^`` may itself start with a unary minus,
so ``u^-1`` parses as ``u^(-1)``.

``sigma``, ``sigbar`` and ``pi`` are reserved constants. ``sigma`` and
``sigbar`` need :class:`~metwarp.metallic.MetallicParams` at evaluation time.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Mapping, Sequence, Union

import numpy as np

from .errors import ExprDomainError, ExprSyntaxError, UnboundVariableError, UnknownFunctionError
from .metallic import MetallicParams

FUNCTIONS = ("sin", "cos", "exp", "ln", "sqrt")
CONSTANTS = ("sigma", "sigbar", "pi")


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Const:
    name: str


@dataclass(frozen=True)
class Neg:
    arg: "Expression"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expression"
    right: "Expression"


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Expression"


Expression = Union[Num, Var, Const, Neg, BinOp, Call]


# -- builders ---------------------------------------------------------------

def num(value: float) -> Expression:
    """Literal node; negative values become ``Neg(Num(...))`` so printing round-trips."""
    value = float(value)
    if value < 0 or (value == 0 and math.copysign(1.0, value) < 0):
        return Neg(Num(-value))
    return Num(value)


def add(a: Expression, b: Expression) -> Expression:
    return BinOp("+", a, b)


def mul(a: Expression, b: Expression) -> Expression:
    return BinOp("*", a, b)


def linear_combination(coeffs: Sequence[float], terms: Sequence[Expression], const: float = 0.0) -> Expression:
    out: Expression = num(const)
    for c, t in zip(coeffs, terms):
        out = add(out, mul(num(c), t))
    return out


# -- tokenizer ----------------------------------------------------------------

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op>[-+*/^()]))"
)


@dataclass(frozen=True)
class _Tok:
    kind: str  # 'num', 'name', 'op', 'end'
    text: str
    index: int


def _tokenize(text: str) -> list[_Tok]:
    toks: list[_Tok] = []
    i = 0
    n = len(text)
    while i < n:
        m = _TOKEN.match(text, i)
        if m is None or m.end() == i:
            # Only whitespace remained, or an unrecognised character.
            j = i
            while j < n and text[j].isspace():
                j += 1
            if j == n:
                break
            raise ExprSyntaxError(f"unexpected character {text[j]!r}", text, j,
                                  frozenset({"number", "identifier", "operator"}))
        kind = m.lastgroup
        if kind is None:
            # Trailing whitespace matched with no token.
            break
        toks.append(_Tok(kind, m.group(kind), m.start(kind)))
        i = m.end()
    toks.append(_Tok("end", "", len(text)))
    return toks


# -- Pratt parser ---------------------------------------------------------------

_INFIX = {"+": 10, "-": 10, "*": 20, "/": 20, "^": 40}
_PREFIX_NEG = 30
_START = frozenset({"number", "identifier", "(", "-"})
_AFTER = frozenset({"+", "-", "*", "/", "^", ")", "end"})


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.toks = _tokenize(text)
        self.pos = 0

    def peek(self) -> _Tok:
        return self.toks[self.pos]

    def next(self) -> _Tok:
        tok = self.toks[self.pos]
        self.pos += 1
        return tok

    def error(self, tok: _Tok, expected: frozenset[str]) -> ExprSyntaxError:
        what = "end of input" if tok.kind == "end" else repr(tok.text)
        return ExprSyntaxError(f"unexpected {what}", self.text, tok.index, expected)

    def parse(self) -> Expression:
        expr = self.expr(0)
        tok = self.peek()
        if tok.kind != "end":
            raise self.error(tok, _AFTER)
        return expr

    def expr(self, rbp: int) -> Expression:
        left = self.prefix()
        while True:
            tok = self.peek()
            if tok.kind == "op" and tok.text in _INFIX:
                lbp = _INFIX[tok.text]
                if lbp <= rbp:
                    break
                self.next()
                # Right associativity for '^': parse the right side one notch looser.
                right = self.expr(lbp - 1 if tok.text == "^" else lbp)
                left = BinOp(tok.text, left, right)
            elif tok.kind in ("end",) or (tok.kind == "op" and tok.text == ")"):
                break
            else:
                raise self.error(tok, _AFTER)
        return left

    def prefix(self) -> Expression:
        tok = self.next()
        if tok.kind == "num":
            return Num(float(tok.text))
        if tok.kind == "name":
            if self.peek().kind == "op" and self.peek().text == "(":
                if tok.text not in FUNCTIONS:
                    raise UnknownFunctionError(
                        f"unknown function {tok.text!r}", self.text, tok.index,
                        frozenset(FUNCTIONS))
                self.next()
                arg = self.expr(0)
                self.expect_close()
                return Call(tok.text, arg)
            if tok.text in FUNCTIONS:
                raise ExprSyntaxError(f"function {tok.text!r} needs an argument list",
                                      self.text, self.peek().index, frozenset({"("}))
            if tok.text in CONSTANTS:
                return Const(tok.text)
            return Var(tok.text)
        if tok.kind == "op" and tok.text == "-":
            return Neg(self.expr(_PREFIX_NEG))
        if tok.kind == "op" and tok.text == "(":
            inner = self.expr(0)
            self.expect_close()
            return inner
        raise self.error(tok, _START)

    def expect_close(self) -> None:
        tok = self.next()
        if not (tok.kind == "op" and tok.text == ")"):
            raise self.error(tok, frozenset({")"}) | (_AFTER - {"end"}))


def parse(text: str) -> Expression:
    """Parse expression text into an immutable tree."""
    if not text or not text.strip():
        raise ExprSyntaxError("empty expression", text or "", 0, _START)
    return _Parser(text).parse()


# -- printing ---------------------------------------------------------------------

def to_text(expr: Expression) -> str:
    """Fully parenthesised text; ``parse(to_text(e)) == e`` for parsed trees."""
    if isinstance(expr, Num):
        return repr(expr.value)
    if isinstance(expr, (Var, Const)):
        return expr.name
    if isinstance(expr, Neg):
        return f"(-{to_text(expr.arg)})"
    if isinstance(expr, BinOp):
        return f"({to_text(expr.left)} {expr.op} {to_text(expr.right)})"
    if isinstance(expr, Call):
        return f"{expr.func}({to_text(expr.arg)})"
    raise TypeError(f"not an expression: {expr!r}")


def free_vars(expr: Expression) -> frozenset[str]:
    if isinstance(expr, Var):
        return frozenset({expr.name})
    if isinstance(expr, (Num, Const)):
        return frozenset()
    if isinstance(expr, (Neg, Call)):
        return free_vars(expr.arg)
    if isinstance(expr, BinOp):
        return free_vars(expr.left) | free_vars(expr.right)
    raise TypeError(f"not an expression: {expr!r}")


def is_constant(expr: Expression) -> bool:
    return not free_vars(expr)


# -- evaluation -----------------------------------------------------------------

def _const_value(name: str, params: MetallicParams | None) -> float:
    if name == "pi":
        return math.pi
    if params is None:
        raise UnboundVariableError(f"{name} (no metallic parameters supplied)")
    return params.sigma if name == "sigma" else params.sigbar


def eval(expr: Expression, env: Mapping[str, float], params: MetallicParams | None = None) -> float:  # noqa: A001
    """Evaluate in IEEE double precision."""
    if isinstance(expr, Num):
        return expr.value
    if isinstance(expr, Var):
        try:
            return float(env[expr.name])
        except KeyError:
            raise UnboundVariableError(expr.name) from None
    if isinstance(expr, Const):
        return _const_value(expr.name, params)
    if isinstance(expr, Neg):
        return -eval(expr.arg, env, params)
    if isinstance(expr, BinOp):
        a = eval(expr.left, env, params)
        b = eval(expr.right, env, params)
        if expr.op == "+":
            return a + b
        if expr.op == "-":
            return a - b
        if expr.op == "*":
            return a * b
        if expr.op == "/":
            if b == 0.0:
                raise ExprDomainError("division by zero", to_text(expr))
            return a / b
        return _pow_value(a, b, expr)
    if isinstance(expr, Call):
        x = eval(expr.arg, env, params)
        return _UNARY[expr.func](x, expr)[0]
    raise TypeError(f"not an expression: {expr!r}")


def _pow_value(a: float, b: float, node: Expression) -> float:
    if a < 0 and not float(b).is_integer():
        raise ExprDomainError("negative base with non-integer exponent", to_text(node))
    if a == 0 and b < 0:
        raise ExprDomainError("zero to a negative power", to_text(node))
    try:
        return a ** b
    except OverflowError:
        raise ExprDomainError("power overflows", to_text(node)) from None


# Each entry returns (value, first derivative, second derivative) at x.
def _sin(x, node):
    s, c = math.sin(x), math.cos(x)
    return s, c, -s


def _cos(x, node):
    s, c = math.sin(x), math.cos(x)
    return c, -s, -c


def _exp(x, node):
    e = math.exp(x)
    return e, e, e


def _ln(x, node):
    if x <= 0:
        raise ExprDomainError(f"ln of non-positive value {x!r}", to_text(node))
    return math.log(x), 1 / x, -1 / (x * x)


def _sqrt(x, node):
    if x <= 0:
        raise ExprDomainError(f"sqrt of non-positive value {x!r}", to_text(node))
    r = math.sqrt(x)
    return r, 0.5 / r, -0.25 / (r * x)


_UNARY = {"sin": _sin, "cos": _cos, "exp": _exp, "ln": _ln, "sqrt": _sqrt}


class Jet2:
    """Truncated second-order Taylor expansion: value, gradient, Hessian.

    Every operation propagates all three parts exactly; Hessians stay
    symmetric because each update is a sum of symmetric terms.
    """

    __slots__ = ("value", "gradient", "hessian")

    def __init__(self, value: float, gradient: np.ndarray, hessian: np.ndarray):
        self.value = value
        self.gradient = gradient
        self.hessian = hessian

    @classmethod
    def constant(cls, value: float, n: int) -> "Jet2":
        return cls(float(value), np.zeros(n), np.zeros((n, n)))

    @classmethod
    def variable(cls, value: float, index: int, n: int) -> "Jet2":
        g = np.zeros(n)
        g[index] = 1.0
        return cls(float(value), g, np.zeros((n, n)))

    def __repr__(self) -> str:
        return f"Jet2(value={self.value!r}, gradient={self.gradient!r}, hessian={self.hessian!r})"

    def __add__(self, other: "Jet2") -> "Jet2":
        return Jet2(self.value + other.value, self.gradient + other.gradient, self.hessian + other.hessian)

    def __sub__(self, other: "Jet2") -> "Jet2":
        return Jet2(self.value - other.value, self.gradient - other.gradient, self.hessian - other.hessian)

    def __neg__(self) -> "Jet2":
        return Jet2(-self.value, -self.gradient, -self.hessian)

    def __mul__(self, other: "Jet2") -> "Jet2":
        a, b = self, other
        cross = np.outer(a.gradient, b.gradient)
        return Jet2(
            a.value * b.value,
            a.value * b.gradient + b.value * a.gradient,
            a.value * b.hessian + b.value * a.hessian + (cross + cross.T),
        )

    def scale(self, c: float) -> "Jet2":
        return Jet2(c * self.value, c * self.gradient, c * self.hessian)

    def compose(self, f0: float, f1: float, f2: float) -> "Jet2":
        """Apply a scalar function with value/derivatives ``f0, f1, f2`` at ``self.value``."""
        g = self.gradient
        return Jet2(f0, f1 * g, f1 * self.hessian + f2 * np.outer(g, g))

    def is_constant(self) -> bool:
        return not (self.gradient.any() or self.hessian.any())


def eval_jet2(expr: Expression, env: Mapping[str, float], params: MetallicParams | None = None,
              coords: Sequence[str] | None = None) -> Jet2:
    """Evaluate with exact gradient and Hessian with respect to ``coords``.

    ``coords`` fixes the derivative ordering and defaults to the order of
    ``env``. Names bound in ``env`` but absent from ``coords`` act as constants.
    """
    if coords is None:
        coords = list(env)
    index = {name: i for i, name in enumerate(coords)}
    return _jet(expr, env, params, index, len(coords))


def _jet(expr, env, params, index, n) -> Jet2:
    if isinstance(expr, Num):
        return Jet2.constant(expr.value, n)
    if isinstance(expr, Var):
        try:
            value = float(env[expr.name])
        except KeyError:
            raise UnboundVariableError(expr.name) from None
        i = index.get(expr.name)
        if i is None:
            return Jet2.constant(value, n)
        return Jet2.variable(value, i, n)
    if isinstance(expr, Const):
        return Jet2.constant(_const_value(expr.name, params), n)
    if isinstance(expr, Neg):
        return -_jet(expr.arg, env, params, index, n)
    if isinstance(expr, BinOp):
        a = _jet(expr.left, env, params, index, n)
        b = _jet(expr.right, env, params, index, n)
        op = expr.op
        if op == "+":
            return a + b
        if op == "-":
            return a - b
        if op == "*":
            return a * b
        if op == "/":
            if b.value == 0.0:
                raise ExprDomainError("division by zero", to_text(expr))
            v = b.value
            return a * b.compose(1 / v, -1 / (v * v), 2 / (v * v * v))
        return _jet_pow(a, b, expr)
    if isinstance(expr, Call):
        a = _jet(expr.arg, env, params, index, n)
        return a.compose(*_UNARY[expr.func](a.value, expr))
    raise TypeError(f"not an expression: {expr!r}")


def _jet_pow(a: Jet2, b: Jet2, node: Expression) -> Jet2:
    if b.is_constant():
        c = b.value
        x = a.value
        value = _pow_value(x, c, node)
        if c == 0:
            return Jet2.constant(1.0, a.gradient.shape[0])
        if c == 1:
            return a
        if c == 2:
            return a * a
        if x == 0 and c < 2:
            raise ExprDomainError("power not twice differentiable at zero base", to_text(node))
        try:
            return a.compose(value, c * x ** (c - 1), c * (c - 1) * x ** (c - 2))
        except OverflowError:
            raise ExprDomainError("power derivative overflows", to_text(node)) from None
    # a^b = exp(b ln a) for a varying exponent.
    if a.value <= 0:
        raise ExprDomainError("non-positive base with a variable exponent", to_text(node))
    ln_a = a.compose(*_ln(a.value, node))
    e = b * ln_a
    return e.compose(*_exp(e.value, node))
