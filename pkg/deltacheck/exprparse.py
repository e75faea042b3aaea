# Copyright (C) 2024 The deltacheck contributors
#
# This file is part of deltacheck.
#
# deltacheck is free software: you can redistribute it and/or modify it under the
# terms of the GNU General Public License as published by the Free Software Foundation,
# either version 3 of the License, or (at your option) any later version.
#
# deltacheck is distributed in the hope that it will be useful, but WITHOUT ANY
# WARRANTY; without even the implied warranty of MERCHANTABILITY or FITNESS FOR A
# PARTICULAR PURPOSE.
# See the GNU General Public License for more details.
#
# You should have received a copy of the GNU General Public License along with
# deltacheck. If not, see <https://www.gnu.org/licenses/>.
"""
A small expression language for test functions of one variable t.

Grammar, loosest binding first::

    expr  := term (('+' | '-') term)*
    term  := unary (('*' | '/') unary)*
    unary := '-' unary | power
    power := atom ('^' INT)*              (right-associative)
    atom  := NUMBER | 't' | NAME '(' expr ')' | '(' expr ')'

Exponents are non-negative integer literals and NAME is one of sin, cos, exp and log.
There is no implicit multiplication, "2t" is an error.
"""
import math
import re
from dataclasses import dataclass
from functools import singledispatch
from typing import Callable, Final, Iterator, NamedTuple, Pattern, Union

import numpy as np

from deltacheck.utils.ContextLogger import get_logger
from deltacheck.utils.misc import DeltaCheckError

logger = get_logger(__name__)

__all__ = [
    "ExprSyntaxError",
    "UnknownFunction",
    "DomainError",
    "Const",
    "Var",
    "Add",
    "Sub",
    "Mul",
    "Div",
    "Pow",
    "Call",
    "Expr",
    "FUNCTIONS",
    "MAX_EXPONENT",
    "parse",
    "to_text",
    "eval_expr",
    "compile_expr",
    "compile_grid",
    "classical_derivative",
    "ExprFunction",
    "polynomial_text",
]


class ExprSyntaxError(DeltaCheckError, ValueError):
    def __init__(self, position: int, message: str) -> None:
        super().__init__(f"{message} at position {position}")
        self.position = position
        self.message = message


class UnknownFunction(DeltaCheckError, ValueError):
    def __init__(self, name: str, position: int | None = None) -> None:
        where = "" if position is None else f" at position {position}"
        super().__init__(f"Unknown function '{name}'{where}")
        self.name = name
        self.position = position


class DomainError(DeltaCheckError, ArithmeticError):
    pass


@dataclass(frozen=True, slots=True)
class Const:
    value: float


@dataclass(frozen=True, slots=True)
class Var:
    name: str = "t"


@dataclass(frozen=True, slots=True)
class Add:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True, slots=True)
class Sub:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True, slots=True)
class Mul:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True, slots=True)
class Div:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True, slots=True)
class Pow:
    base: "Expr"
    exponent: int


@dataclass(frozen=True, slots=True)
class Call:
    name: str
    arg: "Expr"


Expr = Union[Const, Var, Add, Sub, Mul, Div, Pow, Call]

FUNCTIONS: Final[dict[str, Callable[[float], float]]] = {
    "sin": math.sin,
    "cos": math.cos,
    "exp": math.exp,
    "log": math.log,
}

VARIABLE: Final = "t"
MAX_EXPONENT: Final = 1024

_TOKEN: Final[Pattern[str]] = re.compile(
    r"\s*(?:(?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_]\w*)"
    r"|(?P<op>[-+*/^()]))"
)


class Token(NamedTuple):
    kind: str
    text: str
    position: int


def _tokenize(text: str) -> Iterator[Token]:
    pos = 0
    while pos < len(text):
        if text[pos:].isspace():
            break
        match = _TOKEN.match(text, pos)
        if not match or match.lastgroup is None:
            start = len(text) - len(text[pos:].lstrip())
            raise ExprSyntaxError(start, f"Unexpected character {text[start]!r}")
        kind = match.lastgroup
        yield Token(kind, match.group(kind), match.start(kind))
        pos = match.end()
    yield Token("end", "", len(text))


class _Parser:
    def __init__(self, text: str) -> None:
        self.tokens = list(_tokenize(text))
        self.index = 0

    @property
    def current(self) -> Token:
        return self.tokens[self.index]

    def advance(self) -> Token:
        token = self.tokens[self.index]
        self.index += 1
        return token

    def accept(self, *ops: str) -> Token | None:
        if self.current.kind == "op" and self.current.text in ops:
            return self.advance()
        return None

    def expect(self, op: str) -> Token:
        if not (token := self.accept(op)):
            raise ExprSyntaxError(
                self.current.position, f"Expected '{op}', found {self._found()}"
            )
        return token

    def _found(self) -> str:
        return "end of input" if self.current.kind == "end" else repr(self.current.text)

    def parse(self) -> Expr:
        e = self.expr()
        if self.current.kind != "end":
            raise ExprSyntaxError(
                self.current.position, f"Unexpected {self._found()}"
            )
        return e

    def expr(self) -> Expr:
        e = self.term()
        while op := self.accept("+", "-"):
            right = self.term()
            e = Add(e, right) if op.text == "+" else Sub(e, right)
        return e

    def term(self) -> Expr:
        e = self.unary()
        while op := self.accept("*", "/"):
            right = self.unary()
            e = Mul(e, right) if op.text == "*" else Div(e, right)
        return e

    def unary(self) -> Expr:
        if self.accept("-"):
            operand = self.unary()
            if isinstance(operand, Const):
                return Const(-operand.value)
            return Mul(Const(-1.0), operand)
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        exponents: list[Token] = []
        while self.accept("^"):
            token = self.advance()
            if token.kind != "number" or not token.text.isdigit():
                raise ExprSyntaxError(
                    token.position, "Exponent has to be a non-negative integer"
                )
            exponents.append(token)
        if not exponents:
            return base
        exponent = 0
        for idx, token in enumerate(reversed(exponents)):
            e = self._exponent(token)
            exponent = e if idx == 0 else self._fold(e, exponent, token)
        return Pow(base, exponent)

    @staticmethod
    def _exponent(token: Token) -> int:
        digits = token.text.lstrip("0")
        # int() of a long digit string is slow, compare lengths first
        if len(digits) > len(str(MAX_EXPONENT)) or int(digits or "0") > MAX_EXPONENT:
            raise ExprSyntaxError(
                token.position, f"Exponent {token.text} is larger than {MAX_EXPONENT}"
            )
        return int(digits or "0")

    @staticmethod
    def _fold(base: int, exponent: int, token: Token) -> int:
        """base^exponent inside a tower of exponents."""
        if (
            base > 1 and exponent > MAX_EXPONENT.bit_length()
        ) or base**exponent > MAX_EXPONENT:
            raise ExprSyntaxError(
                token.position, f"Exponent tower is larger than {MAX_EXPONENT}"
            )
        return base**exponent

    def atom(self) -> Expr:
        token = self.current
        if token.kind == "number":
            self.advance()
            value = float(token.text)
            if not math.isfinite(value):
                raise ExprSyntaxError(
                    token.position, f"Number {token.text} is too large"
                )
            return Const(value)
        if token.kind == "name":
            self.advance()
            if token.text == VARIABLE and not self.accept("("):
                return Var()
            if token.text == VARIABLE:
                raise ExprSyntaxError(token.position, "'t' is not a function")
            if self.current.kind == "op" and self.current.text == "(":
                if token.text not in FUNCTIONS:
                    raise UnknownFunction(token.text, token.position)
                self.advance()
                arg = self.expr()
                self.expect(")")
                return Call(token.text, arg)
            raise ExprSyntaxError(token.position, f"Unknown variable {token.text!r}")
        if self.accept("("):
            e = self.expr()
            self.expect(")")
            return e
        raise ExprSyntaxError(
            token.position, f"Expected an operand, found {self._found()}"
        )


def parse(text: str) -> Expr:
    """
    Parses text into an expression tree.

    Raises:
        ExprSyntaxError: If text is not a well-formed expression
        UnknownFunction: If text calls a function other than sin, cos, exp or log
    """
    if not text.strip():
        raise ExprSyntaxError(0, "Empty expression")
    return _Parser(text).parse()


_ADD: Final = 1
_MUL: Final = 2
_UNARY: Final = 3
_POW: Final = 4
_ATOM: Final = 5


def _precedence(e: Expr) -> int:
    match e:
        case Add() | Sub():
            return _ADD
        case Mul() | Div():
            return _MUL
        case Pow():
            return _POW
        case Const(value) if value < 0 or math.copysign(1.0, value) < 0:
            return _UNARY
        case _:
            return _ATOM


def _fmt_const(value: float) -> str:
    s = repr(float(value))
    return s[:-2] if s.endswith(".0") else s


def to_text(e: Expr) -> str:
    """
    Prints e with the fewest parentheses that parse back into the same tree.
    """
    match e:
        case Const(value):
            return _fmt_const(value)
        case Var(name):
            return name
        case Call(name, arg):
            return f"{name}({to_text(arg)})"
        case Pow(base, exponent):
            b = to_text(base)
            return f"{b if _precedence(base) == _ATOM else f'({b})'}^{exponent}"
        case Add(left, right) | Sub(left, right) | Mul(left, right) | Div(left, right):
            prec = _precedence(e)
            symbol = {Add: " + ", Sub: " - ", Mul: "*", Div: "/"}[type(e)]
            l_text, r_text = to_text(left), to_text(right)
            if _precedence(left) < prec:
                l_text = f"({l_text})"
            if _precedence(right) <= prec and _precedence(right) != _UNARY:
                r_text = f"({r_text})"
            return l_text + symbol + r_text
    raise TypeError(f"Not an expression: {e!r}")


Compiled = Callable[[float], float]
CompiledGrid = Callable[[np.ndarray], np.ndarray]

_GRID_FUNCTIONS: Final[dict[str, np.ufunc]] = {
    "sin": np.sin,
    "cos": np.cos,
    "exp": np.exp,
    "log": np.log,
}


@singledispatch
def _compile(e: Expr) -> Compiled:
    raise TypeError(f"Not an expression: {e!r}")


@_compile.register
def _(e: Const) -> Compiled:
    value = e.value
    return lambda t: value


@_compile.register
def _(e: Var) -> Compiled:
    return lambda t: t


@_compile.register
def _(e: Add) -> Compiled:
    left, right = _compile(e.left), _compile(e.right)
    return lambda t: left(t) + right(t)


@_compile.register
def _(e: Sub) -> Compiled:
    left, right = _compile(e.left), _compile(e.right)
    return lambda t: left(t) - right(t)


@_compile.register
def _(e: Mul) -> Compiled:
    left, right = _compile(e.left), _compile(e.right)
    return lambda t: left(t) * right(t)


@_compile.register
def _(e: Div) -> Compiled:
    left, right = _compile(e.left), _compile(e.right)

    def divide(t: float) -> float:
        denominator = right(t)
        if denominator == 0:
            raise DomainError(f"Division by zero in {to_text(e)} at t={t}")
        return left(t) / denominator

    return divide


@_compile.register
def _(e: Pow) -> Compiled:
    base, exponent = _compile(e.base), e.exponent

    def power(t: float) -> float:
        try:
            return float(base(t) ** exponent)
        except OverflowError as err:
            raise DomainError(f"{to_text(e)} overflows at t={t}") from err

    return power


@_compile.register
def _(e: Call) -> Compiled:
    arg, name = _compile(e.arg), e.name
    fn = FUNCTIONS[name]

    def call(t: float) -> float:
        x = arg(t)
        if name == "log" and x <= 0:
            raise DomainError(f"log of non-positive value {x} at t={t}")
        try:
            return fn(x)
        except (OverflowError, ValueError) as err:
            raise DomainError(f"{name}({x}) is undefined at t={t}") from err

    return call


def compile_expr(e: Expr) -> Compiled:
    """
    e as a plain function of t. The tree is walked once, here.

    The function raises DomainError on division by zero, log of a non-positive value
    or a non-finite result.
    """
    body = _compile(e)

    def evaluate(t: float) -> float:
        value = body(float(t))
        if not math.isfinite(value):
            raise DomainError(f"{to_text(e)} is not finite at t={t}")
        return value

    return evaluate


def eval_expr(e: Expr, t: float) -> float:
    """
    Evaluates e at t.

    Raises:
        DomainError: On division by zero, log of a non-positive value or a non-finite
            result
    """
    return compile_expr(e)(t)


def _first(x: np.ndarray, mask: np.ndarray) -> float:
    return float(x[np.argmax(mask)])


@singledispatch
def _compile_grid(e: Expr) -> CompiledGrid:
    raise TypeError(f"Not an expression: {e!r}")


@_compile_grid.register
def _(e: Const) -> CompiledGrid:
    value = e.value
    return lambda x: np.full(x.shape, value)


@_compile_grid.register
def _(e: Var) -> CompiledGrid:
    return lambda x: x


@_compile_grid.register
def _(e: Add) -> CompiledGrid:
    left, right = _compile_grid(e.left), _compile_grid(e.right)
    return lambda x: left(x) + right(x)


@_compile_grid.register
def _(e: Sub) -> CompiledGrid:
    left, right = _compile_grid(e.left), _compile_grid(e.right)
    return lambda x: left(x) - right(x)


@_compile_grid.register
def _(e: Mul) -> CompiledGrid:
    left, right = _compile_grid(e.left), _compile_grid(e.right)
    return lambda x: left(x) * right(x)


@_compile_grid.register
def _(e: Div) -> CompiledGrid:
    left, right = _compile_grid(e.left), _compile_grid(e.right)

    def divide(x: np.ndarray) -> np.ndarray:
        denominator = right(x)
        if (zero := denominator == 0).any():
            at = _first(x, zero)
            raise DomainError(f"Division by zero in {to_text(e)} at t={at}")
        return left(x) / denominator

    return divide


@_compile_grid.register
def _(e: Pow) -> CompiledGrid:
    base, exponent = _compile_grid(e.base), e.exponent
    return lambda x: np.power(base(x), exponent)


@_compile_grid.register
def _(e: Call) -> CompiledGrid:
    arg, name = _compile_grid(e.arg), e.name
    fn = _GRID_FUNCTIONS[name]

    def call(x: np.ndarray) -> np.ndarray:
        values = arg(x)
        if name == "log" and (bad := values <= 0).any():
            raise DomainError(f"log of non-positive value at t={_first(x, bad)}")
        return np.asarray(fn(values), dtype=float)

    return call


def compile_grid(e: Expr) -> CompiledGrid:
    """
    e as a function of an array of points, evaluated with numpy.

    Overflows surface as non-finite values, so every error of :py:func:`compile_expr`
    is a DomainError here as well.
    """
    body = _compile_grid(e)

    def evaluate(ts: np.ndarray) -> np.ndarray:
        ts = np.asarray(ts, dtype=float)
        with np.errstate(all="ignore"):
            values = np.asarray(body(ts), dtype=float)
        if not (finite := np.isfinite(values)).all():
            raise DomainError(f"{to_text(e)} is not finite at t={_first(ts, ~finite)}")
        return values

    return evaluate


def _add(a: Expr, b: Expr) -> Expr:
    match a, b:
        case Const(x), Const(y):
            return Const(x + y)
        case Const(0.0), _:
            return b
        case _, Const(0.0):
            return a
    return Add(a, b)


def _sub(a: Expr, b: Expr) -> Expr:
    match a, b:
        case Const(x), Const(y):
            return Const(x - y)
        case _, Const(0.0):
            return a
    return Sub(a, b)


def _mul(a: Expr, b: Expr) -> Expr:
    match a, b:
        case Const(x), Const(y):
            return Const(x * y)
        case (Const(0.0), _) | (_, Const(0.0)):
            return Const(0.0)
        case Const(1.0), _:
            return b
        case _, Const(1.0):
            return a
    return Mul(a, b)


def _div(a: Expr, b: Expr) -> Expr:
    match a, b:
        case Const(x), Const(y) if y != 0:
            return Const(x / y)
        case _, Const(1.0):
            return a
    return Div(a, b)


def _pow(base: Expr, exponent: int) -> Expr:
    if exponent == 0:
        return Const(1.0)
    if isinstance(base, Const):
        return Const(base.value**exponent)
    return Pow(base, exponent)


@singledispatch
def classical_derivative(e: Expr) -> Expr:
    """
    d/dt of e. Only constants are folded, no further simplification takes place.
    """
    raise TypeError(f"Not an expression: {e!r}")


@classical_derivative.register
def _(e: Const) -> Expr:
    return Const(0.0)


@classical_derivative.register
def _(e: Var) -> Expr:
    return Const(1.0)


@classical_derivative.register
def _(e: Add) -> Expr:
    return _add(classical_derivative(e.left), classical_derivative(e.right))


@classical_derivative.register
def _(e: Sub) -> Expr:
    return _sub(classical_derivative(e.left), classical_derivative(e.right))


@classical_derivative.register
def _(e: Mul) -> Expr:
    return _add(
        _mul(classical_derivative(e.left), e.right),
        _mul(e.left, classical_derivative(e.right)),
    )


@classical_derivative.register
def _(e: Div) -> Expr:
    numerator = _sub(
        _mul(classical_derivative(e.left), e.right),
        _mul(e.left, classical_derivative(e.right)),
    )
    return _div(numerator, _pow(e.right, 2))


@classical_derivative.register
def _(e: Pow) -> Expr:
    if e.exponent == 0:
        return Const(0.0)
    outer = _mul(Const(float(e.exponent)), _pow(e.base, e.exponent - 1))
    return _mul(outer, classical_derivative(e.base))


@classical_derivative.register
def _(e: Call) -> Expr:
    inner = classical_derivative(e.arg)
    match e.name:
        case "sin":
            outer: Expr = Call("cos", e.arg)
        case "cos":
            outer = _mul(Const(-1.0), Call("sin", e.arg))
        case "exp":
            outer = e
        case "log":
            return _div(inner, e.arg)
        case _:
            raise UnknownFunction(e.name)
    return _mul(outer, inner)


class ExprFunction:
    """
    A parsed expression usable as a real function that knows its classical derivative.

    The expression is compiled once, for single points and for whole grids.
    """

    __slots__ = ("expr", "text", "_evaluate", "_on_grid", "_derivative")

    def __init__(self, expr: Expr, text: str | None = None) -> None:
        self.expr = expr
        self.text = text if text is not None else to_text(expr)
        self._evaluate = compile_expr(expr)
        self._on_grid = compile_grid(expr)
        self._derivative: ExprFunction | None = None

    @classmethod
    def from_text(cls, text: str) -> "ExprFunction":
        return cls(parse(text), text.strip())

    def __call__(self, t: float) -> float:
        return self._evaluate(t)

    def on_grid(self, ts: np.ndarray) -> np.ndarray:
        return self._on_grid(ts)

    def derivative(self) -> "ExprFunction":
        if self._derivative is None:
            self._derivative = ExprFunction(classical_derivative(self.expr))
        return self._derivative

    def __repr__(self) -> str:
        return f"ExprFunction({self.text!r})"

    def __str__(self) -> str:
        return self.text


def polynomial_text(coefficients: list[float]) -> str:
    """
    Text of the polynomial sum(c_k * t^k), leaving out zero coefficients.

    Examples:
        [1, 0, -2] -> '1 - 2*t^2'
        [0, 3] -> '3*t'
    """
    terms: list[str] = []
    for k, c in enumerate(coefficients):
        if c == 0:
            continue
        monomial = "" if k == 0 else ("*t" if k == 1 else f"*t^{k}")
        if not terms:
            terms.append(f"{_fmt_const(c)}{monomial}")
        else:
            sign = " - " if c < 0 else " + "
            terms.append(f"{sign}{_fmt_const(abs(c))}{monomial}")
    return "".join(terms) if terms else "0"
