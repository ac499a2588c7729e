"""Generalized Gauss-Radau / Gauss-Lobatto rules

    Q(f) = sum_{j<r} l0_j f^(j)(a) + sum_{i=1..n} l_i f(tau_i) + sum_{j<s} (-1)^j l1_j f^(j)(b)

exact for polynomials of degree 2n+r+s-1. Free nodes are the Gauss nodes of
(t-a)^r (b-t)^s dlambda; every weight is the integral of a Hermite basis
polynomial, kept in factored form and integrated with an auxiliary Gauss rule
of the original measure.
"""
import logging
import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from .measures import RecurrenceMeasure, gauss_rule, modified_measure
from .utils.config import EXACTNESS_TOL, MAX_MULTIPLICITY, NODE_GAP_TOL, POSITIVITY_TOL
from .utils.errors import DomainError, NumericError
from .utils.export import from_json_float
from .utils.precision import Arithmetic, Precision, resolve

logger = logging.getLogger(__name__)

LEFT_SIDE = "left"
RIGHT_SIDE = "right"
INTERIOR_SIDE = "interior"

# a factor (root, power, orientation) is (t - root)^power for orientation +1
# and (root - t)^power for orientation -1
Factor = Tuple[float, int, int]


@dataclass(frozen=True)
class HermiteBasisPoly:
    side: str
    index: int
    scale: float
    factors: Tuple[Factor, ...]
    # Taylor partial sum sum_k c_k (orientation * (t - anchor))^k; (1.0,) when absent
    series_anchor: float = 0.0
    series_orientation: int = 1
    series: Tuple[float, ...] = (1.0,)

    @property
    def degree(self) -> int:
        return sum(p for _, p, _ in self.factors) + len(self.series) - 1

    def evaluate(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        out = np.full(t.shape, self.scale)
        for root, power, orientation in self.factors:
            out = out * (orientation * (t - root)) ** power
        u = self.series_orientation * (t - self.series_anchor)
        acc = np.zeros(t.shape)
        for c in reversed(self.series):
            acc = acc * u + c
        return out * acc

    __call__ = evaluate

    def coefficients(self) -> np.ndarray:
        """Monomial coefficients, lowest degree first (display and tests only)."""
        P = np.polynomial.polynomial
        poly = np.array([self.scale])
        for root, power, orientation in self.factors:
            lin = np.array([-root, 1.0]) * orientation
            for _ in range(power):
                poly = P.polymul(poly, lin)
        lin = np.array([-self.series_anchor, 1.0]) * self.series_orientation
        acc = np.zeros(1)
        for c in reversed(self.series):
            acc = P.polyadd(P.polymul(acc, lin), [c])
        return P.polymul(poly, acc)


@dataclass(frozen=True, eq=False)
class GenGaussRule:
    a: float
    r: int
    b: float
    s: int
    n: int
    nodes: np.ndarray
    interior_weights: np.ndarray
    left_weights: np.ndarray
    right_weights: np.ndarray
    label: str = ""
    precision: str = Precision.DOUBLE.value

    @property
    def degree_exact(self) -> int:
        return 2 * self.n + self.r + self.s - 1

    def all_weights(self) -> np.ndarray:
        return np.concatenate([self.left_weights, self.interior_weights, self.right_weights])

    def monomial_sums(self, k_max: int, with_magnitude: bool = False):
        """Q(t^k) for k = 0..k_max (and the sums of |terms| if requested)."""
        k = np.arange(k_max + 1)
        terms = [self.interior_weights[:, None] * self.nodes[:, None] ** k[None, :]]
        for point, weights, sign in ((self.a, self.left_weights, 1.0), (self.b, self.right_weights, -1.0)):
            for j, w in enumerate(weights):
                terms.append((w * sign ** j * _monomial_derivative(point, j, k))[None, :])
        stacked = np.concatenate(terms, axis=0) if terms else np.zeros((0, k_max + 1))
        sums = stacked.sum(axis=0)
        if with_magnitude:
            return sums, np.abs(stacked).sum(axis=0)
        return sums

    def to_dict(self) -> Dict:
        return {
            "a": self.a, "r": self.r, "b": self.b, "s": self.s, "n": self.n,
            "nodes": self.nodes, "interior_weights": self.interior_weights,
            "left_weights": self.left_weights, "right_weights": self.right_weights,
            "degree_exact": self.degree_exact, "label": self.label, "precision": self.precision,
        }

    @classmethod
    def from_dict(cls, data: Dict) -> "GenGaussRule":
        try:
            rule = cls(a=from_json_float(data["a"]), r=int(data["r"]),
                       b=from_json_float(data["b"]), s=int(data["s"]), n=int(data["n"]),
                       nodes=np.array([float(x) for x in data["nodes"]]),
                       interior_weights=np.array([float(x) for x in data["interior_weights"]]),
                       left_weights=np.array([float(x) for x in data["left_weights"]]),
                       right_weights=np.array([float(x) for x in data["right_weights"]]),
                       label=data.get("label", "stored"),
                       precision=data.get("precision", Precision.DOUBLE.value))
        except (KeyError, TypeError, ValueError) as e:
            raise DomainError(f"malformed rule data: {e}") from e
        if (len(rule.nodes) != rule.n or len(rule.interior_weights) != rule.n
                or len(rule.left_weights) != rule.r or len(rule.right_weights) != rule.s):
            raise DomainError("rule data lengths do not match n, r, s")
        return rule

    def to_frame(self) -> pd.DataFrame:
        rows = [("left", j, self.a, j, w) for j, w in enumerate(self.left_weights)]
        rows += [("interior", i + 1, x, 0, w) for i, (x, w) in enumerate(zip(self.nodes, self.interior_weights))]
        rows += [("right", j, self.b, j, w) for j, w in enumerate(self.right_weights)]
        return pd.DataFrame(rows, columns=["kind", "index", "abscissa", "order", "weight"])


def _monomial_derivative(x: float, j: int, k: np.ndarray) -> np.ndarray:
    """d^j/dt^j t^k at x, elementwise in k."""
    k = np.asarray(k)
    falling = np.ones(k.shape)
    for i in range(j):
        falling = falling * (k - i)
    with np.errstate(divide="ignore", invalid="ignore"):
        power = np.where(k >= j, float(x) ** np.maximum(k - j, 0), 0.0)
    return falling * power


# --- Taylor series of omega and its reciprocal ---

def _omega_series(distances: Sequence[Tuple[float, int]], order: int, arith: Arithmetic) -> List:
    """Series in u of prod (d_i - u)^{m_i} via its logarithm."""
    log_head = arith.scalar(0.0)
    logs = [arith.scalar(0.0) for _ in range(order + 1)]
    for d, mult in distances:
        d = arith.scalar(d)
        log_head = log_head + mult * arith.log(d)
        inv, p = 1 / d, 1 / d
        for k in range(1, order + 1):
            logs[k] = logs[k] - mult * p / k
            p = p * inv
    series = [arith.scalar(1.0)] + [arith.scalar(0.0)] * order
    for k in range(1, order + 1):
        series[k] = sum((i * logs[i] * series[k - i] for i in range(1, k + 1)), arith.scalar(0.0)) / k
    head = arith.exp(log_head)
    return [head * c for c in series]


def _reciprocal(series: Sequence, m: int, arith: Arithmetic) -> List:
    w = list(series) + [arith.scalar(0.0)] * max(0, m + 1 - len(series))
    if w[0] == 0:
        raise DomainError("Taylor reciprocal needs a nonzero head coefficient")
    out = [1 / w[0]]
    for k in range(1, m + 1):
        out.append(-sum((w[i] * out[k - i] for i in range(1, k + 1)), arith.scalar(0.0)) / w[0])
    return out


def taylor_reciprocal(omega_taylor: Sequence[float], m: int,
                      precision: Optional[Precision] = None) -> np.ndarray:
    """First m+1 Taylor coefficients of 1/omega from those of omega."""
    if m < 0:
        raise DomainError(f"order must be non-negative, got {m}")
    arith = Arithmetic(resolve(precision))
    coeffs = [arith.scalar(c) for c in omega_taylor] or [arith.scalar(0.0)]
    return arith.to_float(np.array(_reciprocal(coeffs, m, arith), dtype=object))


# --- Hermite basis polynomials ---

def _check_multiplicities(a: float, r: int, b: float, s: int) -> None:
    if r < 0 or s < 0:
        raise DomainError(f"multiplicities must be non-negative, got r={r}, s={s}")
    if r > MAX_MULTIPLICITY or s > MAX_MULTIPLICITY:
        raise DomainError(f"multiplicities above {MAX_MULTIPLICITY} are not supported")
    if r > 0 and not math.isfinite(a):
        raise DomainError("r > 0 needs a finite left endpoint a")
    if s > 0 and not math.isfinite(b):
        raise DomainError("s > 0 needs a finite right endpoint b")


def _boundary_poly(j, anchor, r, far, s, nodes, orientation, precision) -> Tuple[float, Tuple[Factor, ...], List[float]]:
    """Pieces of ((o(t-anchor))^j / j!) Omega_{r-j-1} omega for the endpoint ``anchor``.

    ``orientation`` is +1 at the left end (variable t-a) and -1 at the right
    end (variable b-t); ``far`` is the opposite endpoint with multiplicity s.
    """
    arith = Arithmetic(resolve(precision, r, s))
    distances = [(abs(far - anchor), s)] if s > 0 else []
    distances += [(abs(tau - anchor), 2) for tau in nodes]
    omega = _omega_series(distances, r - j - 1, arith)
    Omega = arith.to_float(np.array(_reciprocal(omega, r - j - 1, arith), dtype=object))
    factors = [(anchor, j, orientation)] if j > 0 else []
    if s > 0:
        factors.append((far, s, -orientation))
    factors += [(tau, 2, -1) for tau in nodes]
    return 1.0 / math.factorial(j), tuple(factors), list(Omega)


def left_boundary_poly(j: int, a: float, r: int, b: float, s: int, nodes: Sequence[float],
                       precision: Optional[Precision] = None) -> HermiteBasisPoly:
    """P_j = ((t-a)^j / j!) Omega_{r-j-1}(t) omega(t), omega = (b-t)^s prod (tau_k-t)^2."""
    _check_multiplicities(a, r, b, s)
    if not 0 <= j < r:
        raise DomainError(f"left index j={j} outside 0..{r - 1}")
    scale, factors, Omega = _boundary_poly(j, a, r, b, s, list(nodes), +1, precision)
    return HermiteBasisPoly(LEFT_SIDE, j, scale, factors, a, +1, tuple(Omega))


def right_boundary_poly(j: int, a: float, r: int, b: float, s: int, nodes: Sequence[float],
                        precision: Optional[Precision] = None) -> HermiteBasisPoly:
    """Basis polynomial of f^(j)(b); it has the constant sign (-1)^j on [a, b]."""
    _check_multiplicities(a, r, b, s)
    if not 0 <= j < s:
        raise DomainError(f"right index j={j} outside 0..{s - 1}")
    scale, factors, Omega = _boundary_poly(j, b, s, a, r, list(nodes), -1, precision)
    return HermiteBasisPoly(RIGHT_SIDE, j, (-1) ** j * scale, factors, b, -1, tuple(Omega))


def interior_basis_poly(j: int, a: float, r: int, b: float, s: int,
                        nodes: Sequence[float]) -> HermiteBasisPoly:
    """p_j = omega_j / omega_j(tau_j), omega_j = (t-a)^r (b-t)^s prod_{k != j} (tau_k-t)^2.

    ``j`` is 1-based.
    """
    _check_multiplicities(a, r, b, s)
    nodes = list(nodes)
    if not 1 <= j <= len(nodes):
        raise DomainError(f"interior index j={j} outside 1..{len(nodes)}")
    tau = nodes[j - 1]
    factors = []
    if r > 0:
        factors.append((a, r, +1))
    if s > 0:
        factors.append((b, s, -1))
    factors += [(x, 2, -1) for k, x in enumerate(nodes, start=1) if k != j]
    unscaled = HermiteBasisPoly(INTERIOR_SIDE, j, 1.0, tuple(factors))
    value = float(unscaled.evaluate(tau))
    if not value > 0:
        raise NumericError(f"interior basis polynomial {j} vanishes at its own node")
    return HermiteBasisPoly(INTERIOR_SIDE, j, 1.0 / value, tuple(factors))


# --- Rules ---

def _endpoints(m: RecurrenceMeasure, a: Optional[float], b: Optional[float]) -> Tuple[float, float]:
    a = m.support_lo if a is None else float(a)
    b = m.support_hi if b is None else float(b)
    if a > m.support_lo or b < m.support_hi:
        raise DomainError(f"[a, b] = [{a}, {b}] must contain the support of {m.label}")
    return a, b


def free_nodes(m: RecurrenceMeasure, a: float, r: int, b: float, s: int, n: int,
               precision: Optional[Precision] = None) -> np.ndarray:
    """Zeros of the degree-n orthogonal polynomial of (t-a)^r (b-t)^s dlambda."""
    if n < 1:
        raise DomainError(f"free nodes need n >= 1, got {n}")
    _check_multiplicities(a, r, b, s)
    a, b = _endpoints(m, a, b)
    nodes = gauss_rule(modified_measure(m, a, r, b, s, precision), n).nodes
    if not (np.all(nodes > a) and np.all(nodes < b)):
        raise NumericError("free nodes left (a, b); try double-double precision")
    if n > 1:
        gaps = np.diff(nodes)
        scale = (b - a) if math.isfinite(a) and math.isfinite(b) else np.maximum(1.0, np.abs(nodes[1:]))
        if np.any(gaps <= NODE_GAP_TOL * scale):
            raise NumericError("free nodes coalesced; try double-double precision")
    return nodes


def auxiliary_size(n: int, r: int, s: int) -> int:
    return n + (r + s + 1) // 2 + 1


def build_rule(m: RecurrenceMeasure, a: Optional[float], r: int, b: Optional[float], s: int, n: int,
               precision: Optional[Precision] = None, check: bool = True) -> GenGaussRule:
    r, s, n = int(r), int(s), int(n)
    if n < 0:
        raise DomainError(f"n must be non-negative, got {n}")
    if n + r + s < 1:
        raise DomainError("n + r + s must be at least 1")
    if r > 0 and m.unbounded_left or s > 0 and m.unbounded_right:
        raise DomainError(f"{m.label} is unbounded on a side with a derivative block")
    a, b = _endpoints(m, a, b)
    _check_multiplicities(a, r, b, s)
    precision = resolve(precision, r, s)

    nodes = free_nodes(m, a, r, b, s, n, precision) if n > 0 else np.zeros(0)
    aux = gauss_rule(m, auxiliary_size(n, r, s))

    interior = np.array([aux.integrate(interior_basis_poly(j, a, r, b, s, nodes)(aux.nodes))
                         for j in range(1, n + 1)])
    left = np.array([aux.integrate(left_boundary_poly(j, a, r, b, s, nodes, precision)(aux.nodes))
                     for j in range(r)])
    right = np.array([(-1) ** j * aux.integrate(right_boundary_poly(j, a, r, b, s, nodes, precision)(aux.nodes))
                      for j in range(s)])
    rule = GenGaussRule(a=a, r=r, b=b, s=s, n=n, nodes=nodes, interior_weights=interior,
                        left_weights=left, right_weights=right, label=m.label, precision=precision.value)
    if check:
        _check_rule(rule, aux)
    logger.debug("built rule n=%d r=%d s=%d for %s", n, r, s, m.label)
    return rule


def _check_rule(rule: GenGaussRule, aux) -> None:
    beta0 = float(np.sum(aux.weights))
    weights = rule.all_weights()
    if np.any(weights <= -POSITIVITY_TOL * beta0):
        raise NumericError(f"negative weight {weights.min()!r} (n={rule.n}, r={rule.r}, s={rule.s}); "
                           "try double-double precision")
    k_max = rule.degree_exact
    q, magnitude = rule.monomial_sums(k_max, with_magnitude=True)
    x = aux.nodes
    mu = np.array([aux.integrate(x ** k) for k in range(k_max + 1)])
    aux_magnitude = np.array([aux.integrate(np.abs(x) ** k) for k in range(k_max + 1)])
    # odd moments of symmetric measures vanish, so the scale needs a floor
    scale = np.maximum.reduce([np.ones_like(mu), magnitude, aux_magnitude, np.abs(mu)])
    bad = np.abs(q - mu) > EXACTNESS_TOL * scale
    if np.any(bad):
        k = int(np.argmax(bad))
        raise NumericError(f"rule is not exact on t^{k}: Q={q[k]!r}, moment={mu[k]!r}; "
                           "try double-double precision")


def reflect_rule(rule: GenGaussRule) -> GenGaussRule:
    """Rule for the measure reflected by t -> -t."""
    if not (math.isfinite(rule.a) and math.isfinite(rule.b)):
        raise DomainError("cannot reflect a rule with an unbounded side")
    return GenGaussRule(a=-rule.b, r=rule.s, b=-rule.a, s=rule.r, n=rule.n,
                        nodes=-rule.nodes[::-1], interior_weights=rule.interior_weights[::-1].copy(),
                        left_weights=rule.right_weights.copy(), right_weights=rule.left_weights.copy(),
                        label=f"reflected {rule.label}", precision=rule.precision)


# --- Cross-check paths ---

def interior_weights_via_modified_gauss(m: RecurrenceMeasure, a: float, r: int, b: float, s: int, n: int,
                                        precision: Optional[Precision] = None) -> np.ndarray:
    """lambda_j = w_j / ((tau_j - a)^r (b - tau_j)^s) from the modified Gauss rule."""
    g = gauss_rule(modified_measure(m, a, r, b, s, precision), n)
    denom = np.ones(n)
    if r:
        denom = denom * (g.nodes - a) ** r
    if s:
        denom = denom * (b - g.nodes) ** s
    return g.weights / denom


def vandermonde_weights(m: RecurrenceMeasure, a: float, r: int, b: float, s: int,
                        nodes: Sequence[float]) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Weights from the exactness equations on 1, t, ..., t^{2n+r+s-1} (small sizes only)."""
    nodes = np.asarray(nodes, dtype=float)
    n = len(nodes)
    K = 2 * n + r + s
    center, half = 0.5 * (a + b), 0.5 * (b - a)
    k = np.arange(K)
    aux = gauss_rule(m, auxiliary_size(n, r, s) + 1)
    moments = np.array([aux.integrate(((aux.nodes - center) / half) ** kk) for kk in k])
    columns = []
    for j in range(r):
        columns.append(_monomial_derivative(a - center, j, k) / half ** k)
    for x in nodes:
        columns.append(((x - center) / half) ** k)
    for j in range(s):
        columns.append((-1) ** j * _monomial_derivative(b - center, j, k) / half ** k)
    weights, *_ = np.linalg.lstsq(np.array(columns).T, moments, rcond=None)
    return weights[:r], weights[r:r + n], weights[r + n:]
