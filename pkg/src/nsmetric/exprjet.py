"""Expression parsing and order-2 jet evaluation.

Metric components, frame vectors and matter fields are all given as closed
expressions over the four coordinates and named parameters.  Evaluating an
expression produces a ``Jet2``: the value together with its exact gradient
and Hessian at the point, propagated through every operation by the chain
and product rules.  That is the only differentiation mechanism in the
package; curvature needs at most second metric derivatives, so order-2 jets
are sufficient.

Grammar (fixed, no user-defined functions)::

    expr   := term (('+' | '-') term)*          left associative
    term   := unary (('*' | '/') unary)*        left associative
    unary  := '-' unary | power
    power  := atom ('^' unary)?                 right associative
    atom   := NUMBER | IDENT | FUNC '(' expr (',' expr)* ')' | '(' expr ')'

Precedence: '^' > unary '-' > '*','/' > '+','-'.  Functions: sin, cos, tan,
exp, ln, sqrt, tanh, abs and the two-argument pow.  '^' (and pow) with a
negative base require a constant integer exponent; fractional powers of
negative numbers are domain errors, not complex branches.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import EvaluationDomainError, ExpressionSyntaxError, UnknownIdentifierError

DIM = 4

FUNCTIONS = {
    "sin": 1,
    "cos": 1,
    "tan": 1,
    "exp": 1,
    "ln": 1,
    "sqrt": 1,
    "tanh": 1,
    "abs": 1,
    "pow": 2,
}

DEFAULT_COORDS = ("t", "x", "y", "z")


# ---------------------------------------------------------------------------
# AST


@dataclass(frozen=True)
class Num:
    value: float
    span: tuple[int, int] = field(default=(0, 0), compare=False, repr=False)


@dataclass(frozen=True)
class Var:
    name: str
    span: tuple[int, int] = field(default=(0, 0), compare=False, repr=False)


@dataclass(frozen=True)
class Unary:
    op: str
    operand: "Expression"
    span: tuple[int, int] = field(default=(0, 0), compare=False, repr=False)


@dataclass(frozen=True)
class Binary:
    op: str
    left: "Expression"
    right: "Expression"
    span: tuple[int, int] = field(default=(0, 0), compare=False, repr=False)


@dataclass(frozen=True)
class Call:
    func: str
    args: tuple["Expression", ...]
    span: tuple[int, int] = field(default=(0, 0), compare=False, repr=False)


Expression = Num | Var | Unary | Binary | Call

_PRECEDENCE = {"+": 1, "-": 1, "*": 2, "/": 2, "neg": 3, "^": 4}


def to_source(e: Expression) -> str:
    """Print an expression; reparsing the output gives a structurally equal tree."""
    return _print(e, 0)


def _print(e: Expression, parent_prec: int) -> str:
    if isinstance(e, Num):
        if e.value < 0 or (e.value == 0 and math.copysign(1.0, e.value) < 0):
            # negative literals only arise programmatically; print as negation
            inner = repr(-e.value)
            s = f"-{inner}"
            prec = _PRECEDENCE["neg"]
        else:
            s = repr(e.value)
            prec = 5
    elif isinstance(e, Var):
        s = e.name
        prec = 5
    elif isinstance(e, Unary):
        s = "-" + _print(e.operand, _PRECEDENCE["neg"])
        prec = _PRECEDENCE["neg"]
    elif isinstance(e, Call):
        s = e.func + "(" + ", ".join(_print(a, 0) for a in e.args) + ")"
        prec = 5
    elif isinstance(e, Binary):
        prec = _PRECEDENCE[e.op]
        if e.op == "^":
            # right associative; exponent parses at unary level
            left = _print(e.left, prec + 1)
            right = _print(e.right, prec - 1)
        else:
            # left associative: right operand needs the next binding level
            left = _print(e.left, prec)
            right = _print(e.right, prec + 1)
        s = f"{left} {e.op} {right}"
    else:  # pragma: no cover
        raise TypeError(f"not an expression node: {e!r}")
    if prec < parent_prec:
        return f"({s})"
    return s


def identifiers(e: Expression) -> set[str]:
    out: set[str] = set()
    stack = [e]
    while stack:
        node = stack.pop()
        if isinstance(node, Var):
            out.add(node.name)
        elif isinstance(node, Unary):
            stack.append(node.operand)
        elif isinstance(node, Binary):
            stack.extend((node.left, node.right))
        elif isinstance(node, Call):
            stack.extend(node.args)
    return out


# ---------------------------------------------------------------------------
# Tokenizer / parser


@dataclass(frozen=True)
class _Token:
    kind: str  # NUMBER IDENT OP LPAREN RPAREN COMMA EOF
    text: str
    offset: int  # byte offset into the UTF-8 source


def _tokenize(src: str) -> list[_Token]:
    tokens: list[_Token] = []
    i = 0
    byte = 0
    n = len(src)
    while i < n:
        ch = src[i]
        if ch in " \t\r\n":
            byte += len(ch.encode("utf-8"))
            i += 1
            continue
        if ch.isdigit() or (ch == "." and i + 1 < n and src[i + 1].isdigit()):
            j = i
            seen_dot = False
            while j < n and (src[j].isdigit() or (src[j] == "." and not seen_dot)):
                if src[j] == ".":
                    seen_dot = True
                j += 1
            if j < n and src[j] in "eE":
                k = j + 1
                if k < n and src[k] in "+-":
                    k += 1
                if k < n and src[k].isdigit():
                    j = k
                    while j < n and src[j].isdigit():
                        j += 1
            text = src[i:j]
            tokens.append(_Token("NUMBER", text, byte))
            byte += len(text.encode("utf-8"))
            i = j
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (src[j].isalnum() or src[j] == "_"):
                j += 1
            text = src[i:j]
            tokens.append(_Token("IDENT", text, byte))
            byte += len(text.encode("utf-8"))
            i = j
            continue
        if ch in "+-*/^":
            tokens.append(_Token("OP", ch, byte))
        elif ch == "(":
            tokens.append(_Token("LPAREN", ch, byte))
        elif ch == ")":
            tokens.append(_Token("RPAREN", ch, byte))
        elif ch == ",":
            tokens.append(_Token("COMMA", ch, byte))
        else:
            raise ExpressionSyntaxError(
                f"unexpected character '{ch}'", byte,
                frozenset({"number", "identifier", "operator", "'('", "')'"}))
        byte += len(ch.encode("utf-8"))
        i += 1
    tokens.append(_Token("EOF", "", byte))
    return tokens


_ATOM_EXPECTED = frozenset({"number", "identifier", "'('", "'-'"})


class _Parser:
    def __init__(self, src: str, symbols: frozenset[str]):
        self.src = src
        self.symbols = symbols
        self.tokens = _tokenize(src)
        self.pos = 0

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def advance(self) -> _Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def fail(self, expected: Iterable[str]):
        tok = self.peek()
        what = f"unexpected end of input" if tok.kind == "EOF" else f"unexpected token '{tok.text}'"
        raise ExpressionSyntaxError(what, tok.offset, frozenset(expected))

    def parse(self) -> Expression:
        e = self.expr()
        if self.peek().kind != "EOF":
            self.fail({"operator", "end of input"})
        return e

    def expr(self) -> Expression:
        left = self.term()
        while self.peek().kind == "OP" and self.peek().text in "+-":
            op = self.advance().text
            right = self.term()
            left = Binary(op, left, right, (left.span[0], right.span[1]))
        return left

    def term(self) -> Expression:
        left = self.unary()
        while self.peek().kind == "OP" and self.peek().text in "*/":
            op = self.advance().text
            right = self.unary()
            left = Binary(op, left, right, (left.span[0], right.span[1]))
        return left

    def unary(self) -> Expression:
        tok = self.peek()
        if tok.kind == "OP" and tok.text == "-":
            self.advance()
            inner = self.unary()
            return Unary("-", inner, (tok.offset, inner.span[1]))
        return self.power()

    def power(self) -> Expression:
        base = self.atom()
        tok = self.peek()
        if tok.kind == "OP" and tok.text == "^":
            self.advance()
            exponent = self.unary()
            return Binary("^", base, exponent, (base.span[0], exponent.span[1]))
        return base

    def atom(self) -> Expression:
        tok = self.peek()
        if tok.kind == "NUMBER":
            self.advance()
            end = tok.offset + len(tok.text.encode("utf-8"))
            return Num(float(tok.text), (tok.offset, end))
        if tok.kind == "IDENT":
            self.advance()
            end = tok.offset + len(tok.text.encode("utf-8"))
            if tok.text in FUNCTIONS:
                if self.peek().kind != "LPAREN":
                    self.fail({"'('"})
                self.advance()
                args = [self.expr()]
                while self.peek().kind == "COMMA":
                    self.advance()
                    args.append(self.expr())
                if self.peek().kind != "RPAREN":
                    self.fail({"')'", "','"})
                close = self.advance()
                arity = FUNCTIONS[tok.text]
                if len(args) != arity:
                    raise ExpressionSyntaxError(
                        f"function '{tok.text}' takes {arity} argument(s), got {len(args)}",
                        tok.offset, frozenset({f"{arity} argument(s)"}))
                return Call(tok.text, tuple(args), (tok.offset, close.offset + 1))
            if tok.text not in self.symbols:
                raise UnknownIdentifierError(tok.text, tok.offset)
            return Var(tok.text, (tok.offset, end))
        if tok.kind == "LPAREN":
            self.advance()
            inner = self.expr()
            if self.peek().kind != "RPAREN":
                self.fail({"')'", "operator"})
            close = self.advance()
            return _respan(inner, (tok.offset, close.offset + 1))
        self.fail(_ATOM_EXPECTED)
        raise AssertionError  # pragma: no cover


def _respan(e: Expression, span: tuple[int, int]) -> Expression:
    cls = type(e)
    kwargs = {f: getattr(e, f) for f in e.__dataclass_fields__}
    kwargs["span"] = span
    return cls(**kwargs)


def parse_expression(src: str, symbols: Iterable[str]) -> Expression:
    """Parse ``src`` resolving every identifier against ``symbols`` now.

    Raises :class:`ExpressionSyntaxError` (with byte offset and expected
    token set) or :class:`UnknownIdentifierError`.
    """
    if not src or not src.strip():
        raise ExpressionSyntaxError("empty expression", 0, _ATOM_EXPECTED)
    return _Parser(src, frozenset(symbols)).parse()


# ---------------------------------------------------------------------------
# Jets


class Jet2:
    """Value with exact gradient and symmetric Hessian over the 4 coordinates."""

    __slots__ = ("value", "grad", "hess")

    def __init__(self, value: float, grad: np.ndarray, hess: np.ndarray):
        self.value = float(value)
        self.grad = grad
        self.hess = hess

    @staticmethod
    def constant(v: float) -> "Jet2":
        return Jet2(v, np.zeros(DIM), np.zeros((DIM, DIM)))

    @staticmethod
    def coordinate(axis: int, v: float) -> "Jet2":
        g = np.zeros(DIM)
        g[axis] = 1.0
        return Jet2(v, g, np.zeros((DIM, DIM)))

    def __repr__(self):
        return f"Jet2({self.value!r}, grad={self.grad!r})"

    # -- ring operations -----------------------------------------------------

    def __add__(self, other):
        other = _as_jet(other)
        return Jet2(self.value + other.value, self.grad + other.grad, self.hess + other.hess)

    __radd__ = __add__

    def __neg__(self):
        return Jet2(-self.value, -self.grad, -self.hess)

    def __sub__(self, other):
        other = _as_jet(other)
        return Jet2(self.value - other.value, self.grad - other.grad, self.hess - other.hess)

    def __rsub__(self, other):
        return _as_jet(other).__sub__(self)

    def __mul__(self, other):
        other = _as_jet(other)
        cross = np.outer(self.grad, other.grad)
        return Jet2(
            self.value * other.value,
            self.value * other.grad + other.value * self.grad,
            self.value * other.hess + other.value * self.hess + cross + cross.T,
        )

    __rmul__ = __mul__

    def scaled(self, a: float) -> "Jet2":
        return Jet2(a * self.value, a * self.grad, a * self.hess)

    def compose(self, f0: float, f1: float, f2: float) -> "Jet2":
        """Chain rule for a scalar function with derivatives f1, f2 at self.value."""
        outer = np.outer(self.grad, self.grad)
        return Jet2(f0, f1 * self.grad, f1 * self.hess + f2 * outer)


def _as_jet(v) -> Jet2:
    if isinstance(v, Jet2):
        return v
    return Jet2.constant(float(v))


def _domain(node: Expression, message: str):
    raise EvaluationDomainError(message, to_source(node))


def _jet_div(a: Jet2, b: Jet2, node: Expression) -> Jet2:
    if b.value == 0.0:
        _domain(node, "division by zero")
    return a * b.compose(1.0 / b.value, -1.0 / b.value**2, 2.0 / b.value**3)


def _jet_int_pow(a: Jet2, n: int) -> Jet2:
    if n == 0:
        return Jet2.constant(1.0)
    invert = n < 0
    n = abs(n)
    # square-and-multiply keeps huge exponents cheap; jet products carry the
    # chain rule exactly either way
    result = None
    base = a
    while n:
        if n & 1:
            result = base if result is None else result * base
        n >>= 1
        if n:
            base = base * base
    assert result is not None
    if invert:
        result = result.compose(1.0 / result.value, -1.0 / result.value**2,
                                2.0 / result.value**3)
    return result


def _jet_pow(a: Jet2, b: Jet2, node: Expression) -> Jet2:
    exponent_constant = not b.grad.any() and not b.hess.any()
    if exponent_constant and float(b.value).is_integer():
        n = int(b.value)
        if a.value == 0.0 and n < 0:
            _domain(node, "zero raised to a negative power")
        return _jet_int_pow(a, n)
    if a.value < 0.0:
        _domain(node, "negative base with non-integer exponent")
    if a.value == 0.0:
        _domain(node, "zero base with non-integer or varying exponent")
    # a^b = exp(b ln a) for positive base
    ln_a = a.compose(math.log(a.value), 1.0 / a.value, -1.0 / a.value**2)
    e = b * ln_a
    return e.compose(math.exp(e.value), math.exp(e.value), math.exp(e.value))


def _jet_call(func: str, args: list[Jet2], node: Expression) -> Jet2:
    if func == "pow":
        return _jet_pow(args[0], args[1], node)
    (a,) = args
    x = a.value
    if func == "sin":
        return a.compose(math.sin(x), math.cos(x), -math.sin(x))
    if func == "cos":
        return a.compose(math.cos(x), -math.sin(x), -math.cos(x))
    if func == "tan":
        c = math.cos(x)
        if c == 0.0:
            _domain(node, "tangent at an odd multiple of pi/2")
        t = math.tan(x)
        sec2 = 1.0 + t * t
        return a.compose(t, sec2, 2.0 * t * sec2)
    if func == "exp":
        e = math.exp(x)
        return a.compose(e, e, e)
    if func == "ln":
        if x <= 0.0:
            _domain(node, "logarithm of a non-positive value")
        return a.compose(math.log(x), 1.0 / x, -1.0 / x**2)
    if func == "sqrt":
        if x < 0.0:
            _domain(node, "square root of a negative value")
        if x == 0.0:
            _domain(node, "square root derivative at zero")
        r = math.sqrt(x)
        return a.compose(r, 0.5 / r, -0.25 / (r * x))
    if func == "tanh":
        th = math.tanh(x)
        sech2 = 1.0 - th * th
        return a.compose(th, sech2, -2.0 * th * sech2)
    if func == "abs":
        # derivative taken as sign(x) with sign(0) = 0
        s = math.copysign(1.0, x) if x != 0.0 else 0.0
        return a.compose(abs(x), s, 0.0)
    raise AssertionError(func)  # pragma: no cover


def evaluate_jet2(e: Expression, point: Sequence[float],
                  params: Mapping[str, float] | None = None,
                  coords: Sequence[str] = DEFAULT_COORDS) -> Jet2:
    """Evaluate ``e`` as an order-2 jet at ``point``.

    ``coords`` names the four coordinate identifiers in axis order; every
    other identifier must appear in ``params``.
    """
    env: dict[str, Jet2] = {}
    for axis, name in enumerate(coords):
        env[name] = Jet2.coordinate(axis, float(point[axis]))
    for name, v in (params or {}).items():
        env[name] = Jet2.constant(float(v))
    return _eval(e, env)


def _eval(e: Expression, env: Mapping[str, Jet2]) -> Jet2:
    if isinstance(e, Num):
        return Jet2.constant(e.value)
    if isinstance(e, Var):
        try:
            return env[e.name]
        except KeyError:
            raise UnknownIdentifierError(e.name, e.span[0]) from None
    if isinstance(e, Unary):
        return -_eval(e.operand, env)
    if isinstance(e, Binary):
        a = _eval(e.left, env)
        b = _eval(e.right, env)
        if e.op == "+":
            return a + b
        if e.op == "-":
            return a - b
        if e.op == "*":
            return a * b
        if e.op == "/":
            return _jet_div(a, b, e)
        if e.op == "^":
            return _jet_pow(a, b, e)
        raise AssertionError(e.op)  # pragma: no cover
    if isinstance(e, Call):
        return _jet_call(e.func, [_eval(a, env) for a in e.args], e)
    raise TypeError(f"not an expression node: {e!r}")  # pragma: no cover


def evaluate_value(e: Expression, point: Sequence[float],
                   params: Mapping[str, float] | None = None,
                   coords: Sequence[str] = DEFAULT_COORDS) -> float:
    """Plain float evaluation (no derivatives); same domain rules as the jets."""
    env: dict[str, float] = {name: float(point[axis]) for axis, name in enumerate(coords)}
    for name, v in (params or {}).items():
        env[name] = float(v)
    return _eval_value(e, env)


def _eval_value(e: Expression, env: Mapping[str, float]) -> float:
    if isinstance(e, Num):
        return e.value
    if isinstance(e, Var):
        try:
            return env[e.name]
        except KeyError:
            raise UnknownIdentifierError(e.name, e.span[0]) from None
    if isinstance(e, Unary):
        return -_eval_value(e.operand, env)
    if isinstance(e, Binary):
        a = _eval_value(e.left, env)
        b = _eval_value(e.right, env)
        if e.op == "+":
            return a + b
        if e.op == "-":
            return a - b
        if e.op == "*":
            return a * b
        if e.op == "/":
            if b == 0.0:
                _domain(e, "division by zero")
            return a / b
        if e.op == "^":
            return _value_pow(a, b, e)
        raise AssertionError(e.op)  # pragma: no cover
    if isinstance(e, Call):
        args = [_eval_value(a, env) for a in e.args]
        return _value_call(e.func, args, e)
    raise TypeError(f"not an expression node: {e!r}")  # pragma: no cover


def _value_pow(a: float, b: float, node: Expression) -> float:
    if float(b).is_integer():
        if a == 0.0 and b < 0:
            _domain(node, "zero raised to a negative power")
        return a ** int(b)
    if a < 0.0:
        _domain(node, "negative base with non-integer exponent")
    if a == 0.0:
        _domain(node, "zero base with non-integer or varying exponent")
    return a ** b


def _value_call(func: str, args: list[float], node: Expression) -> float:
    if func == "pow":
        return _value_pow(args[0], args[1], node)
    (x,) = args
    if func == "ln":
        if x <= 0.0:
            _domain(node, "logarithm of a non-positive value")
        return math.log(x)
    if func == "sqrt":
        if x < 0.0:
            _domain(node, "square root of a negative value")
        return math.sqrt(x)
    if func == "tan":
        if math.cos(x) == 0.0:
            _domain(node, "tangent at an odd multiple of pi/2")
        return math.tan(x)
    if func == "abs":
        return abs(x)
    return getattr(math, func)(x)
