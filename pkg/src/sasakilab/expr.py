"""Coordinate-expression language: parsing, rendering and jet evaluation.

Grammar::

    expr   := term (('+'|'-') term)*
    term   := factor (('*'|'/') factor)*
    factor := atom ('^' factor)?
    atom   := number | ident | ident '(' expr ')' | '(' expr ')' | '-' factor

``^`` is right-associative and binds tighter than unary minus, so ``-x^2``
means ``-(x^2)``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .jets import Jet, JetDomainError, algebra

FUNCTIONS = ("sin", "cos", "tan", "exp", "log", "sqrt", "sinh", "cosh")
CONSTANTS = {"pi": math.pi}


class ExprError(ValueError):
    """Base class for expression errors."""


class ExprSyntaxError(ExprError):
    def __init__(self, message: str, offset: int, text: str = ""):
        self.offset = offset
        self.text = text
        super().__init__(f"{message} at offset {offset}")


class UnknownIdentifierError(ExprError):
    def __init__(self, name: str, offset: int):
        self.name = name
        self.offset = offset
        super().__init__(f"unknown identifier {name!r} at offset {offset}")


class ArityError(ExprError):
    def __init__(self, name: str, offset: int):
        self.name = name
        self.offset = offset
        super().__init__(f"function {name!r} takes exactly one argument (offset {offset})")


class DomainError(ExprError, ArithmeticError):
    """Evaluation left the domain of an operation or of the chart."""


# -- AST --------------------------------------------------------------------


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Sym:
    name: str
    index: int


@dataclass(frozen=True)
class Const:
    name: str


@dataclass(frozen=True)
class Neg:
    arg: "Node"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Node"


Node = Union[Num, Sym, Const, Neg, BinOp, Call]


@dataclass(frozen=True)
class Chart:
    """Coordinate names plus an optional closed domain box."""

    names: tuple[str, ...]
    box: tuple[tuple[float, float], ...] | None = None

    def __post_init__(self):
        if len(set(self.names)) != len(self.names):
            raise ValueError(f"chart names must be distinct: {self.names}")
        for name in self.names:
            if not re.fullmatch(r"[A-Za-z_][A-Za-z_0-9]*", name):
                raise ValueError(f"invalid coordinate name {name!r}")
            if name in FUNCTIONS or name in CONSTANTS:
                raise ValueError(f"coordinate name {name!r} is reserved")
        if self.box is not None and len(self.box) != len(self.names):
            raise ValueError("domain box must have one interval per coordinate")

    @property
    def dim(self) -> int:
        return len(self.names)

    def contains(self, points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(points)
        if self.box is None:
            return np.ones(len(points), dtype=bool)
        lo = np.array([b[0] for b in self.box])
        hi = np.array([b[1] for b in self.box])
        return np.all((points >= lo) & (points <= hi), axis=1)

    def check(self, points: np.ndarray) -> None:
        inside = self.contains(points)
        if not np.all(inside):
            bad = np.atleast_2d(points)[~inside][0]
            raise DomainError(f"point {bad.tolist()} lies outside the chart domain box")


@dataclass(frozen=True)
class CoordExpr:
    ast: Node
    chart: Chart
    text: str = ""

    def __str__(self) -> str:
        return render(self.ast)

    def depends_on_coordinates(self) -> bool:
        return _has_symbol(self.ast)


def _has_symbol(node: Node) -> bool:
    if isinstance(node, Sym):
        return True
    if isinstance(node, (Neg, Call)):
        return _has_symbol(node.arg)
    if isinstance(node, BinOp):
        return _has_symbol(node.left) or _has_symbol(node.right)
    return False


# -- parsing ----------------------------------------------------------------

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<ident>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>[-+*/^(),]))"
)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    n = len(text)
    while pos < n:
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if not m:
            start = pos + len(text[pos:]) - len(text[pos:].lstrip())
            raise ExprSyntaxError(f"unexpected character {text[start]!r}", _byte_offset(text, start), text)
        kind = m.lastgroup
        tokens.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


def _byte_offset(text: str, index: int) -> int:
    return len(text[:index].encode("utf-8"))


class _Parser:
    def __init__(self, text: str, chart: Chart):
        self.text = text
        self.chart = chart
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def error(self, message: str, tok) -> ExprSyntaxError:
        return ExprSyntaxError(message, _byte_offset(self.text, tok[2]), self.text)

    def expect(self, value: str):
        tok = self.take()
        if tok[1] != value or tok[0] == "end":
            raise self.error(f"expected {value!r}", tok)
        return tok

    def parse(self) -> Node:
        node = self.expr()
        tok = self.peek()
        if tok[0] != "end":
            raise self.error(f"unexpected token {tok[1]!r}", tok)
        return node

    def expr(self) -> Node:
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Node:
        node = self.factor()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            node = BinOp(op, node, self.factor())
        return node

    def factor(self) -> Node:
        tok = self.peek()
        if tok[0] == "op" and tok[1] == "-":
            self.take()
            return Neg(self.factor())
        base = self.atom()
        if self.peek()[0] == "op" and self.peek()[1] == "^":
            self.take()
            return BinOp("^", base, self.factor())
        return base

    def atom(self) -> Node:
        tok = self.take()
        kind, value, _ = tok
        if kind == "num":
            return Num(float(value))
        if kind == "ident":
            if value in FUNCTIONS:
                if self.peek()[1] != "(":
                    raise self.error(f"function {value!r} requires an argument list", self.peek())
                self.take()
                arg = self.expr()
                nxt = self.peek()
                if nxt[1] == ",":
                    raise ArityError(value, _byte_offset(self.text, nxt[2]))
                self.expect(")")
                return Call(value, arg)
            if value in CONSTANTS:
                return Const(value)
            if value in self.chart.names:
                if self.peek()[1] == "(":
                    raise UnknownIdentifierError(value + "()", _byte_offset(self.text, tok[2]))
                return Sym(value, self.chart.names.index(value))
            raise UnknownIdentifierError(value, _byte_offset(self.text, tok[2]))
        if kind == "op" and value == "(":
            node = self.expr()
            self.expect(")")
            return node
        if kind == "end":
            raise self.error("unexpected end of input", tok)
        raise self.error(f"unexpected token {value!r}", tok)


def parse_expr(text: str, chart: Chart | Sequence[str]) -> CoordExpr:
    """Parse ``text`` against the coordinate names of ``chart``."""
    if not isinstance(chart, Chart):
        chart = Chart(tuple(chart))
    return CoordExpr(_Parser(text, chart).parse(), chart, text)


# -- rendering --------------------------------------------------------------

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "neg": 3, "^": 4}


def _prec(node: Node) -> int:
    if isinstance(node, BinOp):
        return _PREC[node.op]
    if isinstance(node, Neg):
        return _PREC["neg"]
    return 5


def render(node: Node) -> str:
    """Render an AST to text that parses back to an equal AST."""
    if isinstance(node, Num):
        return repr(node.value)
    if isinstance(node, Sym):
        return node.name
    if isinstance(node, Const):
        return node.name
    if isinstance(node, Call):
        return f"{node.func}({render(node.arg)})"
    if isinstance(node, Neg):
        inner = render(node.arg)
        # '-' factor: binary ops below '^' need parentheses
        return f"-({inner})" if _prec(node.arg) < _PREC["neg"] else f"-{inner}"
    p = _PREC[node.op]
    left, right = render(node.left), render(node.right)
    if node.op == "^":
        if _prec(node.left) <= p:
            left = f"({left})"
        if _prec(node.right) < p:
            right = f"({right})"
    else:
        if _prec(node.left) < p:
            left = f"({left})"
        if _prec(node.right) <= p:
            right = f"({right})"
    return f"{left}{node.op}{right}"


# -- evaluation -------------------------------------------------------------

_MATH = {
    "sin": math.sin, "cos": math.cos, "tan": math.tan, "exp": math.exp,
    "sinh": math.sinh, "cosh": math.cosh,
}


def evaluate(expr: CoordExpr | Node, point: Sequence[float]) -> float:
    """Plain floating-point evaluation (no derivatives)."""
    node = expr.ast if isinstance(expr, CoordExpr) else expr
    try:
        value = _eval_float(node, point)
    except (ZeroDivisionError, OverflowError) as exc:
        raise DomainError(str(exc)) from None
    if not math.isfinite(value):
        raise DomainError("non-finite value")
    return value


def _eval_float(node: Node, x) -> float:
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Sym):
        return float(x[node.index])
    if isinstance(node, Const):
        return CONSTANTS[node.name]
    if isinstance(node, Neg):
        return -_eval_float(node.arg, x)
    if isinstance(node, Call):
        a = _eval_float(node.arg, x)
        if node.func == "log":
            if a <= 0:
                raise DomainError("log of a nonpositive value")
            return math.log(a)
        if node.func == "sqrt":
            if a < 0:
                raise DomainError("sqrt of a negative value")
            return math.sqrt(a)
        return _MATH[node.func](a)
    a = _eval_float(node.left, x)
    b = _eval_float(node.right, x)
    if node.op == "+":
        return a + b
    if node.op == "-":
        return a - b
    if node.op == "*":
        return a * b
    if node.op == "/":
        if b == 0:
            raise DomainError("division by zero")
        return a / b
    if float(b).is_integer() and not _has_symbol(node.right):
        if a == 0 and b < 0:
            raise DomainError("division by zero")
        return a ** int(b)
    if a <= 0:
        raise DomainError("non-integer power of a nonpositive base")
    return a**b


def eval_jet_batch(expr: CoordExpr, points: np.ndarray, order: int) -> np.ndarray:
    """Taylor-coefficient array of shape (ncoef, P) at a batch of points."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    alg = algebra(expr.chart.dim, order)
    try:
        out = _eval_jet(expr.ast, points, alg, order)
    except JetDomainError as exc:
        raise DomainError(str(exc)) from None
    if not np.all(np.isfinite(out)):
        raise DomainError("non-finite intermediate value")
    return out


def _eval_jet(node: Node, pts: np.ndarray, alg, order: int) -> np.ndarray:
    P = len(pts)
    if isinstance(node, Num):
        return alg.constant(np.full(P, node.value), order)
    if isinstance(node, Const):
        return alg.constant(np.full(P, CONSTANTS[node.name]), order)
    if isinstance(node, Sym):
        return alg.variable(pts[:, node.index], node.index, order)
    if isinstance(node, Neg):
        return -_eval_jet(node.arg, pts, alg, order)
    if isinstance(node, Call):
        u = _eval_jet(node.arg, pts, alg, order)
        if node.func == "tan":
            return alg.div(alg.apply("sin", u, order), alg.apply("cos", u, order), order)
        return alg.apply(node.func, u, order)
    a = _eval_jet(node.left, pts, alg, order)
    if node.op == "^":
        if not _has_symbol(node.right):
            p = _eval_float(node.right, ())
            if float(p).is_integer():
                return alg.int_power(a, int(p), order)
            return alg.real_power(a, p, order)
        if np.any(a[0] <= 0):
            raise JetDomainError("variable exponent requires a positive base")
        b = _eval_jet(node.right, pts, alg, order)
        return alg.apply("exp", alg.mul(b, alg.apply("log", a, order), order), order)
    b = _eval_jet(node.right, pts, alg, order)
    if node.op == "+":
        return a + b
    if node.op == "-":
        return a - b
    if node.op == "*":
        return alg.mul(a, b, order)
    return alg.div(a, b, order)


def eval_jet(expr: CoordExpr, point: Sequence[float], order: int) -> Jet:
    """Value and partial derivatives up to ``order`` of ``expr`` at ``point``."""
    point = np.asarray(point, dtype=float).reshape(1, -1)
    if point.shape[1] != expr.chart.dim:
        raise ValueError(f"point has {point.shape[1]} coordinates, chart has {expr.chart.dim}")
    expr.chart.check(point)
    coeffs = eval_jet_batch(expr, point, order)[:, 0]
    return Jet(order, expr.chart.dim, coeffs)
