"""Integrands as text.

Grammar (whitespace is ignored)::

    expr    := term (('+' | '-') term)*
    term    := unary (('*' | '/') unary)*
    unary   := '-' unary | '+' unary | power
    power   := atom ('^' exponent)?
    exponent:= ['-' | '+'] INTEGER            (|value| <= 64)
    atom    := NUMBER | 'x' | NAME '(' expr ')' | '(' expr ')'

``^`` binds tighter than unary minus, so ``-x^2`` is ``-(x^2)``.  Exponents
must be integer literals; implicit multiplication (``5x``) is rejected.
Evaluation works on floats and on numpy arrays alike.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Union

import numpy as np

MAX_DEPTH = 64
MAX_EXPONENT = 64

FUNCTIONS = ("sin", "cos", "exp", "log", "abs", "sqrt")


class ExprSyntaxError(ValueError):
    def __init__(self, message: str, offset: int, text: str = ""):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset
        self.text = text


class ExprDomainError(ArithmeticError):
    """An operator was applied outside its domain during evaluation."""


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    pass


@dataclass(frozen=True)
class Neg:
    operand: Expr


@dataclass(frozen=True)
class BinOp:
    op: str
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Pow:
    base: Expr
    exponent: int


@dataclass(frozen=True)
class Call:
    name: str
    arg: Expr


Expr = Union[Num, Var, Neg, BinOp, Pow, Call]

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_]\w*)|(?P<op>[-+*/^()]))"
)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos:].isspace():
            break
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            bad = pos + len(text[pos:]) - len(text[pos:].lstrip())
            raise ExprSyntaxError(f"unexpected character {text[bad]!r}", bad, text)
        kind = m.lastgroup
        tokens.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0
        self.depth = 0

    @property
    def tok(self):
        return self.tokens[self.i]

    def error(self, expected: str):
        kind, value, offset = self.tok
        found = "end of input" if kind == "end" else repr(value)
        raise ExprSyntaxError(f"expected {expected}, found {found}", offset, self.text)

    def take(self, value: str) -> bool:
        if self.tok[0] == "op" and self.tok[1] == value:
            self.i += 1
            return True
        return False

    def descend(self):
        self.depth += 1
        if self.depth > MAX_DEPTH:
            raise ExprSyntaxError(f"expression nested deeper than {MAX_DEPTH}", self.tok[2], self.text)

    def parse(self) -> Expr:
        node = self.expr()
        if self.tok[0] != "end":
            self.error("operator or end of input")
        return node

    def expr(self) -> Expr:
        self.descend()
        node = self.term()
        while self.tok[0] == "op" and self.tok[1] in "+-":
            op = self.tok[1]
            self.i += 1
            node = BinOp(op, node, self.term())
        self.depth -= 1
        return node

    def term(self) -> Expr:
        node = self.unary()
        while self.tok[0] == "op" and self.tok[1] in "*/":
            op = self.tok[1]
            self.i += 1
            node = BinOp(op, node, self.unary())
        return node

    def unary(self) -> Expr:
        if self.take("-"):
            self.descend()
            node = Neg(self.unary())
            self.depth -= 1
            return node
        if self.take("+"):
            return self.unary()
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if not self.take("^"):
            return base
        sign = -1 if self.take("-") else 1
        if sign == 1:
            self.take("+")
        kind, value, offset = self.tok
        if kind != "num" or not value.isdigit():
            self.error("integer exponent")
        self.i += 1
        exponent = sign * int(value)
        if abs(exponent) > MAX_EXPONENT:
            raise ExprSyntaxError(f"exponent {exponent} outside [-{MAX_EXPONENT}, {MAX_EXPONENT}]", offset, self.text)
        if self.tok[0] == "op" and self.tok[1] == "^":
            self.error("a single integer exponent (write x^(a*b) as x^n)")
        return Pow(base, exponent)

    def atom(self) -> Expr:
        kind, value, offset = self.tok
        if kind == "num":
            self.i += 1
            return Num(float(value))
        if kind == "name":
            self.i += 1
            if value == "x":
                return Var()
            if value not in FUNCTIONS:
                raise ExprSyntaxError(
                    f"unknown name {value!r} (expected x or one of {', '.join(FUNCTIONS)})", offset, self.text
                )
            if not self.take("("):
                self.error(f"'(' after {value}")
            arg = self.expr()
            if not self.take(")"):
                self.error("')'")
            return Call(value, arg)
        if self.take("("):
            node = self.expr()
            if not self.take(")"):
                self.error("')'")
            return node
        self.error("number, x, function call or '('")


def parse(text: str) -> Expr:
    """Parse integrand text into an expression tree.

    Raises
    ------
    ExprSyntaxError
        With the byte offset of the offending token.
    """
    if not text or not text.strip():
        raise ExprSyntaxError("empty expression", 0, text)
    if not text.isascii():
        bad = next(i for i, ch in enumerate(text) if not ch.isascii())
        raise ExprSyntaxError("non-ASCII character", bad, text)
    return _Parser(text).parse()


_PREC = {"+": 1, "-": 1, "*": 2, "/": 2}


def to_text(e: Expr) -> str:
    """Text that parses back to the same tree."""
    return _show(e, 0)


def _show(e: Expr, ctx: int) -> str:
    # ctx: binding strength the surrounding context requires
    # 1 sum, 2 product, 3 unary, 4 power base
    if isinstance(e, Num):
        return repr(e.value) if ctx < 4 else f"({e.value!r})"
    if isinstance(e, Var):
        return "x"
    if isinstance(e, Call):
        return f"{e.name}({_show(e.arg, 0)})"
    if isinstance(e, Pow):
        text = f"{_show(e.base, 4)}^{e.exponent}"
        return f"({text})" if ctx > 3 else text
    if isinstance(e, Neg):
        text = "-" + _show(e.operand, 3)
        return f"({text})" if ctx > 3 else text
    prec = _PREC[e.op]
    # left-associative: the right operand needs strictly higher binding
    text = f"{_show(e.left, prec)} {e.op} {_show(e.right, prec + 1)}"
    return f"({text})" if ctx > prec else text


def _fault(op: str, value) -> ExprDomainError:
    return ExprDomainError(f"{op} undefined at {value!r}")


def _first(mask, values):
    return float(np.asarray(values).ravel()[int(np.flatnonzero(np.asarray(mask).ravel())[0])])


def evaluate(e: Expr, x):
    """Evaluate at ``x`` (float or array).

    Raises
    ------
    ExprDomainError
        On division by zero, log of a nonpositive value, sqrt of a negative
        value, a negative power of zero, or overflow.
    """
    scalar = np.ndim(x) == 0
    with np.errstate(all="ignore"):
        out = _eval(e, np.asarray(x, dtype=float))
    if scalar:
        return float(out)
    return np.broadcast_to(out, np.shape(x)).astype(float)


def _eval(e: Expr, x: np.ndarray):
    if isinstance(e, Num):
        return e.value
    if isinstance(e, Var):
        return x
    if isinstance(e, Neg):
        return -_eval(e.operand, x)
    if isinstance(e, Pow):
        base = np.asarray(_eval(e.base, x), dtype=float)
        if e.exponent < 0 and np.any(base == 0):
            raise _fault(f"^{e.exponent}", 0.0)
        out = base ** e.exponent
        return _finite(out, "^", base)
    if isinstance(e, Call):
        arg = np.asarray(_eval(e.arg, x), dtype=float)
        if e.name == "log":
            bad = arg <= 0
            if np.any(bad):
                raise _fault("log", _first(bad, arg))
            return np.log(arg)
        if e.name == "sqrt":
            bad = arg < 0
            if np.any(bad):
                raise _fault("sqrt", _first(bad, arg))
            return np.sqrt(arg)
        if e.name == "exp":
            return _finite(np.exp(arg), "exp", arg)
        return {"sin": np.sin, "cos": np.cos, "abs": np.abs}[e.name](arg)
    left = _eval(e.left, x)
    right = _eval(e.right, x)
    if e.op == "+":
        return left + right
    if e.op == "-":
        return left - right
    if e.op == "*":
        return _finite(np.multiply(left, right), "*", left)
    zero = np.asarray(right) == 0
    if np.any(zero):
        raise ExprDomainError(f"division by zero (denominator {to_text(e.right)!r} vanishes)")
    return _finite(np.divide(left, right), "/", left)


def _finite(out, op, operand):
    bad = ~np.isfinite(out)
    if np.any(bad):
        where = np.broadcast_to(operand, np.shape(out))
        raise ExprDomainError(f"{op} overflowed at operand {_first(bad, where)!r}")
    return out


class Integrand:
    """Callable wrapper around a parsed expression."""

    def __init__(self, expr: Expr, label: str | None = None):
        self.expr = expr
        self.label = label or to_text(expr)

    def __call__(self, x):
        return evaluate(self.expr, x)

    def polynomial(self) -> list[float] | None:
        return as_polynomial(self.expr)

    def __repr__(self):
        return f"Integrand({self.label!r})"


def as_polynomial(e: Expr) -> list[float] | None:
    """Coefficients (increasing degree) when ``e`` is a polynomial in x, else None.

    Division is allowed by constants only; negative powers of x are not
    polynomial.
    """
    if isinstance(e, Num):
        return [e.value]
    if isinstance(e, Var):
        return [0.0, 1.0]
    if isinstance(e, Neg):
        p = as_polynomial(e.operand)
        return None if p is None else [-c for c in p]
    if isinstance(e, Call):
        p = as_polynomial(e.arg)
        if p is None or any(c != 0 for c in p[1:]):
            return None
        try:
            return [float(evaluate(e, 0.0))]
        except ExprDomainError:
            return None
    if isinstance(e, Pow):
        p = as_polynomial(e.base)
        if p is None:
            return None
        if e.exponent < 0:
            if any(c != 0 for c in p[1:]) or p[0] == 0:
                return None
            return [p[0] ** e.exponent]
        out = [1.0]
        for _ in range(e.exponent):
            out = _polymul(out, p)
        return out
    left = as_polynomial(e.left)
    right = as_polynomial(e.right)
    if left is None or right is None:
        return None
    if e.op in "+-":
        n = max(len(left), len(right))
        left = left + [0.0] * (n - len(left))
        right = right + [0.0] * (n - len(right))
        sign = 1.0 if e.op == "+" else -1.0
        return [a + sign * b for a, b in zip(left, right)]
    if e.op == "*":
        return _polymul(left, right)
    if any(c != 0 for c in right[1:]) or right[0] == 0:
        return None
    return [c / right[0] for c in left]


def _polymul(p: list[float], q: list[float]) -> list[float]:
    out = [0.0] * (len(p) + len(q) - 1)
    for i, a in enumerate(p):
        for j, b in enumerate(q):
            out[i + j] += a * b
    return out


_BUILTINS = {
    "f1": "(5*x^4+6*x^3-x)/10",
    "f2": "x^20",
}


def builtin(name: str) -> Expr:
    """Test integrand ``f1`` (a quartic) or ``f2`` (``x^20``)."""
    try:
        return parse(_BUILTINS[name])
    except KeyError:
        raise KeyError(f"unknown builtin {name!r}; expected one of {', '.join(_BUILTINS)}") from None


def builtin_text(name: str) -> str:
    builtin(name)
    return _BUILTINS[name]

