"""Closed-form expressions in the variable t, with Taylor-mode jets.

Syntax: numbers, ``t``, ``pi``, ``e``, ``+ - * /``, power ``^`` (or ``**``,
right-associative, binds tighter than unary minus), parentheses and the
functions exp, log, sin, cos, sqrt, abs.

Jets are arrays of Taylor coefficients ``c_k = f^(k)(t0)/k!`` of shape
``(order + 1,) + shape(t0)``, so a single pass evaluates many anchors at once.
"""
import logging
import math
import re
from dataclasses import dataclass
from functools import lru_cache
from typing import List, Optional, Tuple, Union

import numpy as np
from rapidfuzz import fuzz, process
from scipy.optimize import brentq, minimize_scalar

from .utils.config import (
    EXPR_CONSTANTS, EXPR_FUNCTIONS, EXPR_VARIABLE, SINGULARITY_SCAN_POINTS, SINGULARITY_TOL, SUGGESTION_CUTOFF,
)
from .utils.errors import DomainError, ExprSyntaxError

logger = logging.getLogger(__name__)


# --- Jet arithmetic ---

def _constant_jet(value, like: np.ndarray, order: int) -> np.ndarray:
    out = np.zeros((order + 1,) + like.shape)
    out[0] = value
    return out


def jet_mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    out = np.zeros_like(a)
    for k in range(a.shape[0]):
        out[k] = sum(a[i] * b[k - i] for i in range(k + 1))
    return out


def jet_div(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if np.any(b[0] == 0):
        raise DomainError("division by zero")
    out = np.zeros_like(a)
    for k in range(a.shape[0]):
        out[k] = (a[k] - sum(b[i] * out[k - i] for i in range(1, k + 1))) / b[0]
    return out


def jet_exp(a: np.ndarray) -> np.ndarray:
    out = np.zeros_like(a)
    out[0] = np.exp(a[0])
    for k in range(1, a.shape[0]):
        out[k] = sum(i * a[i] * out[k - i] for i in range(1, k + 1)) / k
    return out


def jet_log(a: np.ndarray) -> np.ndarray:
    if np.any(a[0] <= 0):
        raise DomainError("log of a non-positive value")
    out = np.zeros_like(a)
    out[0] = np.log(a[0])
    for k in range(1, a.shape[0]):
        out[k] = (a[k] - sum(i * out[i] * a[k - i] for i in range(1, k)) / k) / a[0]
    return out


def jet_sincos(a: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    s, c = np.zeros_like(a), np.zeros_like(a)
    s[0], c[0] = np.sin(a[0]), np.cos(a[0])
    for k in range(1, a.shape[0]):
        s[k] = sum(i * a[i] * c[k - i] for i in range(1, k + 1)) / k
        c[k] = -sum(i * a[i] * s[k - i] for i in range(1, k + 1)) / k
    return s, c


def jet_sqrt(a: np.ndarray) -> np.ndarray:
    if np.any(a[0] < 0):
        raise DomainError("sqrt of a negative value")
    out = np.zeros_like(a)
    out[0] = np.sqrt(a[0])
    if a.shape[0] > 1:
        if np.any(a[0] == 0):
            raise DomainError("sqrt is not differentiable at 0")
        for k in range(1, a.shape[0]):
            out[k] = (a[k] - sum(out[i] * out[k - i] for i in range(1, k))) / (2 * out[0])
    return out


def jet_abs(a: np.ndarray) -> np.ndarray:
    if a.shape[0] > 1 and np.any(a[0] == 0):
        raise DomainError("abs is not differentiable at 0")
    return np.sign(a[0]) * a if a.shape[0] > 1 else np.abs(a)


def jet_ipow(a: np.ndarray, k: int) -> np.ndarray:
    """Integer power by repeated squaring."""
    if k < 0:
        return jet_div(_constant_jet(1.0, a[0], a.shape[0] - 1), jet_ipow(a, -k))
    result = _constant_jet(1.0, a[0], a.shape[0] - 1)
    base = a
    while k:
        if k & 1:
            result = jet_mul(result, base)
        k >>= 1
        if k:
            base = jet_mul(base, base)
    return result


# --- AST ---

@dataclass(frozen=True)
class Const:
    value: float

    def jet(self, t0, order):
        return _constant_jet(self.value, t0, order)

    def __str__(self):
        return repr(self.value)


@dataclass(frozen=True)
class Var:

    def jet(self, t0, order):
        out = _constant_jet(t0, t0, order)
        if order >= 1:
            out[1] = 1.0
        return out

    def __str__(self):
        return EXPR_VARIABLE


@dataclass(frozen=True)
class Neg:
    arg: "Expr"

    def jet(self, t0, order):
        return -self.arg.jet(t0, order)

    def __str__(self):
        return f"(-{self.arg})"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"

    def jet(self, t0, order):
        a, b = self.left.jet(t0, order), self.right.jet(t0, order)
        if self.op == "+":
            return a + b
        if self.op == "-":
            return a - b
        if self.op == "*":
            return jet_mul(a, b)
        return jet_div(a, b)

    def __str__(self):
        return f"({self.left} {self.op} {self.right})"


@dataclass(frozen=True)
class Pow:
    base: "Expr"
    exponent: "Expr"

    def jet(self, t0, order):
        a = self.base.jet(t0, order)
        if isinstance(self.exponent, Const) and float(self.exponent.value).is_integer():
            return jet_ipow(a, int(self.exponent.value))
        y = self.exponent.jet(t0, order)
        if isinstance(self.exponent, Const) and order == 0:
            if np.any(a[0] < 0):
                raise DomainError("non-integer power of a negative value")
            return np.power(a, self.exponent.value)
        return jet_exp(jet_mul(y, jet_log(a)))

    def __str__(self):
        return f"({self.base} ^ {self.exponent})"


@dataclass(frozen=True)
class Call:
    name: str
    arg: "Expr"

    def jet(self, t0, order):
        a = self.arg.jet(t0, order)
        if self.name == "exp":
            return jet_exp(a)
        if self.name == "log":
            return jet_log(a)
        if self.name == "sin":
            return jet_sincos(a)[0]
        if self.name == "cos":
            return jet_sincos(a)[1]
        if self.name == "sqrt":
            return jet_sqrt(a)
        return jet_abs(a)

    def __str__(self):
        return f"{self.name}({self.arg})"


Expr = Union[Const, Var, Neg, BinOp, Pow, Call]


@dataclass(frozen=True)
class TaylorJet:
    anchor: float
    coeffs: np.ndarray

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    def derivatives(self) -> np.ndarray:
        """Plain derivatives f^(k)(anchor), i.e. coeffs scaled by k!."""
        return np.array([c * math.factorial(k) for k, c in enumerate(self.coeffs)])


# --- Tokenizer and parser ---

_TOKEN_RE = re.compile(r"""
    (?P<ws>\s+)
  | (?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>\*\*|[-+*/^(),])
""", re.VERBOSE)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    offset: int


def tokenize(src: str) -> List[Token]:
    tokens, pos = [], 0
    while pos < len(src):
        match = _TOKEN_RE.match(src, pos)
        if match is None:
            raise ExprSyntaxError(f"unexpected character {src[pos]!r}", pos)
        if match.lastgroup != "ws":
            text = "^" if match.group() == "**" else match.group()
            tokens.append(Token(match.lastgroup, text, pos))
        pos = match.end()
    tokens.append(Token("end", "", len(src)))
    return tokens


def suggest(name: str, choices) -> str:
    best = process.extractOne(name, list(choices), scorer=fuzz.ratio, score_cutoff=SUGGESTION_CUTOFF)
    return f"; did you mean {best[0]!r}?" if best else ""


class _Parser:
    """Recursive descent: expr > term > unary > power > atom."""

    def __init__(self, src: str):
        self.tokens = tokenize(src)
        self.pos = 0

    @property
    def current(self) -> Token:
        return self.tokens[self.pos]

    def advance(self) -> Token:
        token = self.current
        self.pos += 1
        return token

    def expect(self, text: str) -> Token:
        if self.current.text != text:
            found = "end of input" if self.current.kind == "end" else repr(self.current.text)
            raise ExprSyntaxError(f"expected {text!r}, found {found}", self.current.offset)
        return self.advance()

    def parse(self) -> Expr:
        node = self.expr()
        if self.current.kind != "end":
            raise ExprSyntaxError(f"unexpected {self.current.text!r}", self.current.offset)
        return node

    def expr(self) -> Expr:
        node = self.term()
        while self.current.text in ("+", "-"):
            op = self.advance().text
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Expr:
        node = self.unary()
        while self.current.text in ("*", "/"):
            op = self.advance().text
            node = BinOp(op, node, self.unary())
        return node

    def unary(self) -> Expr:
        if self.current.text == "-":
            self.advance()
            arg = self.unary()
            # fold so that t^-2 keeps an integer exponent
            return Const(-arg.value) if isinstance(arg, Const) else Neg(arg)
        if self.current.text == "+":
            self.advance()
            return self.unary()
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self.current.text == "^":
            self.advance()
            return Pow(base, self.unary())
        return base

    def atom(self) -> Expr:
        token = self.current
        if token.kind == "number":
            self.advance()
            return Const(float(token.text))
        if token.kind == "name":
            self.advance()
            if self.current.text == "(":
                if token.text not in EXPR_FUNCTIONS:
                    raise ExprSyntaxError(f"unknown function {token.text!r}{suggest(token.text, EXPR_FUNCTIONS)}",
                                          token.offset)
                self.advance()
                arg = self.expr()
                self.expect(")")
                return Call(token.text, arg)
            if token.text == EXPR_VARIABLE:
                return Var()
            if token.text in EXPR_CONSTANTS:
                return Const(EXPR_CONSTANTS[token.text])
            names = [EXPR_VARIABLE, *EXPR_CONSTANTS]
            raise ExprSyntaxError(f"unknown identifier {token.text!r}{suggest(token.text, names)}", token.offset)
        if token.text == "(":
            self.advance()
            node = self.expr()
            self.expect(")")
            return node
        if token.kind == "end":
            raise ExprSyntaxError("unexpected end of input", token.offset)
        raise ExprSyntaxError(f"unexpected {token.text!r}", token.offset)


def parse(src: str) -> Expr:
    return _Parser(str(src)).parse()


def _as_expr(e: Union[Expr, str]) -> Expr:
    return parse(e) if isinstance(e, str) else e


def jets(e: Union[Expr, str], points, order: int) -> np.ndarray:
    """Taylor coefficients at every point, shape (order + 1,) + shape(points)."""
    if order < 0:
        raise DomainError(f"jet order must be non-negative, got {order}")
    t0 = np.asarray(points, dtype=float)
    with np.errstate(all="ignore"):
        out = _as_expr(e).jet(t0, order) * np.ones_like(t0)
    if not np.all(np.isfinite(out)):
        raise DomainError("expression is not finite at the requested points")
    return out


def jet(e: Union[Expr, str], anchor: float, order: int) -> TaylorJet:
    return TaylorJet(float(anchor), jets(e, float(anchor), order))


def evaluate(e: Union[Expr, str], t):
    """Value at a scalar (returns float) or an array of points."""
    values = jets(e, t, 0)[0]
    return float(values) if np.ndim(values) == 0 else values


def derivative_values(e: Union[Expr, str], points, k: int) -> np.ndarray:
    """f^(k) at each point."""
    return jets(e, points, k)[k] * math.factorial(k)


def is_polynomial(e: Union[Expr, str]) -> Optional[int]:
    """Degree if the expression is a polynomial in t, else None."""
    e = _as_expr(e)
    if isinstance(e, Const):
        return 0
    if isinstance(e, Var):
        return 1
    if isinstance(e, Neg):
        return is_polynomial(e.arg)
    if isinstance(e, BinOp):
        left, right = is_polynomial(e.left), is_polynomial(e.right)
        if left is None or right is None:
            return None
        if e.op in "+-":
            return max(left, right)
        if e.op == "*":
            return left + right
        return left if right == 0 else None
    if isinstance(e, Pow):
        base = is_polynomial(e.base)
        if base is None or not isinstance(e.exponent, Const):
            return None
        k = e.exponent.value
        return base * int(k) if float(k).is_integer() and k >= 0 else None
    return None


# --- Singularities on an interval ---

def _scan_grid(lo: float, hi: float) -> np.ndarray:
    if math.isfinite(lo) and math.isfinite(hi):
        return np.linspace(lo, hi, SINGULARITY_SCAN_POINTS)
    u = np.linspace(0.0, 1.0, SINGULARITY_SCAN_POINTS)[:-1]
    if math.isfinite(lo):
        return lo + u / (1.0 - u)
    if math.isfinite(hi):
        return hi - u[::-1] / (1.0 - u[::-1])
    return np.tan(np.pi * (u[1:] - 0.5))


def _values(e: Expr, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    with np.errstate(all="ignore"):
        try:
            return e.jet(x, 0)[0] * np.ones_like(x)
        except DomainError:
            if x.ndim == 0:
                return np.full_like(x, np.nan)
    return np.array([float(_values(e, xi)) for xi in x])


def _scalar(e: Expr, x: float) -> float:
    return float(_values(e, x))


def _numeric_zeros(e: Expr, grid: np.ndarray) -> List[float]:
    v = _values(e, grid)
    finite = np.isfinite(v)
    if not np.any(finite):
        return []
    scale = float(np.max(np.abs(v[finite])))
    if scale == 0.0:
        return [float(grid[0])]
    zeros = [float(x) for x in grid[finite & (v == 0.0)]]
    both = finite[:-1] & finite[1:]
    for i in np.flatnonzero(both & (v[:-1] * v[1:] < 0)):
        try:
            zeros.append(brentq(lambda t: _scalar(e, t), grid[i], grid[i + 1], xtol=1e-15))
        except (ValueError, RuntimeError):
            zeros.append(0.5 * float(grid[i] + grid[i + 1]))
    # zeros that touch the axis without a sign change
    a = np.abs(v)
    inner = np.flatnonzero(finite[1:-1] & both[:-1] & both[1:] & (a[1:-1] <= a[:-2]) & (a[1:-1] <= a[2:])) + 1
    for i in inner:
        if a[i] == 0.0:
            continue
        res = minimize_scalar(lambda t: abs(_scalar(e, t)), bounds=(grid[i - 1], grid[i + 1]),
                              method="bounded", options={"xatol": 1e-14})
        if abs(res.fun) <= SINGULARITY_TOL * scale:
            zeros.append(float(res.x))
    return zeros


def _zeros(e: Expr, lo: float, hi: float, grid: np.ndarray) -> List[float]:
    """Points of [lo, hi] where the subexpression vanishes."""
    if isinstance(e, Const):
        return [] if e.value != 0 else [float(grid[0])]
    if isinstance(e, Var):
        return [0.0] if lo <= 0.0 <= hi else []
    if isinstance(e, Neg) or (isinstance(e, Call) and e.name in ("sqrt", "abs")):
        return _zeros(e.arg, lo, hi, grid)
    if isinstance(e, Call) and e.name == "exp":
        return []
    if isinstance(e, BinOp) and e.op == "*":
        return _zeros(e.left, lo, hi, grid) + _zeros(e.right, lo, hi, grid)
    if isinstance(e, BinOp) and e.op == "/":
        return _zeros(e.left, lo, hi, grid)
    if isinstance(e, Pow) and isinstance(e.exponent, Const) and e.exponent.value > 0:
        return _zeros(e.base, lo, hi, grid)
    return _numeric_zeros(e, grid)


def _negative_at(e: Expr, grid: np.ndarray) -> List[float]:
    v = _values(e, grid)
    finite = np.isfinite(v)
    if not np.any(finite):
        return []
    scale = float(np.max(np.abs(v[finite])))
    bad = finite & (v < -SINGULARITY_TOL * scale)
    return [float(grid[np.flatnonzero(bad)[np.argmin(v[bad])]])] if np.any(bad) else []


def _singular(e: Expr, lo: float, hi: float, grid: np.ndarray) -> List[Tuple[float, str]]:
    if isinstance(e, (Const, Var)):
        return []
    if isinstance(e, (Neg, Call)):
        found = _singular(e.arg, lo, hi, grid)
        if isinstance(e, Call) and e.name == "log":
            found += [(x, "log of zero") for x in _zeros(e.arg, lo, hi, grid)]
            found += [(x, "log of a negative value") for x in _negative_at(e.arg, grid)]
        if isinstance(e, Call) and e.name == "sqrt":
            found += [(x, "square root of a negative value") for x in _negative_at(e.arg, grid)]
        return found
    if isinstance(e, BinOp):
        found = _singular(e.left, lo, hi, grid) + _singular(e.right, lo, hi, grid)
        if e.op == "/":
            found += [(x, "division by zero") for x in _zeros(e.right, lo, hi, grid)]
        return found
    found = _singular(e.base, lo, hi, grid) + _singular(e.exponent, lo, hi, grid)
    integer = isinstance(e.exponent, Const) and float(e.exponent.value).is_integer()
    negative = isinstance(e.exponent, Const) and e.exponent.value < 0
    if not integer:
        found += [(x, "non-integer power of a negative value") for x in _negative_at(e.base, grid)]
    if negative or not isinstance(e.exponent, Const):
        found += [(x, "power of zero with a negative exponent") for x in _zeros(e.base, lo, hi, grid)]
    return found


@lru_cache(maxsize=256)
def _singularities_cached(e: Expr, lo: float, hi: float) -> Tuple[Tuple[float, str], ...]:
    grid = _scan_grid(lo, hi)
    found = {(round(x, 12), why) for x, why in _singular(e, lo, hi, grid) if lo <= x <= hi}
    return tuple(sorted(found))


def singularities(e: Union[Expr, str], lo: float, hi: float) -> List[Tuple[float, str]]:
    """Points of the closed interval [lo, hi] where the expression is undefined or unbounded.

    Factors of products, quotients and positive powers are split symbolically;
    anything else is scanned for sign changes and touching zeros.
    """
    lo, hi = float(lo), float(hi)
    if not lo <= hi:
        raise DomainError(f"empty interval [{lo}, {hi}]")
    return list(_singularities_cached(_as_expr(e), lo, hi))


def check_regular(e: Union[Expr, str], lo: float, hi: float) -> None:
    found = singularities(e, lo, hi)
    if found:
        x, why = found[0]
        logger.debug("%d singular points of %s on [%g, %g]", len(found), e, lo, hi)
        raise DomainError(f"{why} at t={x:.6g}, inside the support [{lo:g}, {hi:g}]")
