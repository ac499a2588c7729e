"""Positive measures encoded by three-term recurrence coefficients.

A measure is carried by its monic recurrence

    p_{k+1}(t) = (t - alpha_k) p_k(t) - beta_k p_{k-1}(t),   beta_0 = int dlambda

together with its support interval. Classical families generate coefficients
in closed form; modified and density-defined measures are produced by the
Christoffel chain and the discretised Stieltjes procedure below.
"""
import logging
import math
import threading
from dataclasses import dataclass
from typing import Callable, Dict, Optional, Tuple

import mpmath
import numpy as np
from scipy.linalg import LinAlgError, eigh_tridiagonal
from scipy.special import gammaln, roots_legendre

from . import exprcalc
from .utils.config import MEASURE_FAMILIES, STIELTJES_MAX_POINTS, STIELTJES_START_POINTS, STIELTJES_TOL
from .utils.errors import CapacityError, DomainError, NumericError
from .utils.export import from_json_float
from .utils.precision import Arithmetic, Precision, resolve

logger = logging.getLogger(__name__)

Generator = Callable[[int], Tuple[np.ndarray, np.ndarray]]


class RecurrenceMeasure:
    """Recurrence coefficients plus support, extended on demand.

    ``generator(count)`` must return the first ``count`` alphas and betas.
    Measures without a generator have a fixed capacity.
    """

    def __init__(self, label: str, support: Tuple[float, float],
                 generator: Optional[Generator] = None,
                 alpha=None, beta=None,
                 family: str = "custom", params: Optional[Dict] = None):
        lo, hi = float(support[0]), float(support[1])
        if not lo < hi:
            raise DomainError(f"empty support [{lo}, {hi}]")
        if math.isinf(lo) and lo > 0 or math.isinf(hi) and hi < 0:
            raise DomainError(f"invalid support [{lo}, {hi}]")
        self.label = label
        self.support_lo = lo
        self.support_hi = hi
        self.family = family
        self.params = dict(params or {})
        self._generator = generator
        self._lock = threading.Lock()
        self._alpha = np.zeros(0)
        self._beta = np.zeros(0)
        if alpha is not None:
            self._store(np.asarray(alpha, dtype=float), np.asarray(beta, dtype=float))

    @property
    def unbounded_left(self) -> bool:
        return math.isinf(self.support_lo)

    @property
    def unbounded_right(self) -> bool:
        return math.isinf(self.support_hi)

    @property
    def capacity(self) -> Optional[int]:
        return None if self._generator is not None else len(self._alpha)

    @property
    def mass(self) -> float:
        return float(self.recurrence(1)[1][0])

    def _store(self, alpha: np.ndarray, beta: np.ndarray) -> None:
        if len(alpha) != len(beta):
            raise DomainError("alpha and beta must have the same length")
        if len(beta) and not np.all(beta > 0):
            k = int(np.argmin(beta > 0))
            raise NumericError(f"{self.label}: beta_{k} = {beta[k]!r} is not positive")
        self._alpha, self._beta = alpha, beta

    def recurrence(self, count: int) -> Tuple[np.ndarray, np.ndarray]:
        """First ``count`` alphas and betas (indices 0..count-1)."""
        if count < 0:
            raise DomainError("coefficient count must be non-negative")
        if count > len(self._alpha):
            with self._lock:
                if count > len(self._alpha):
                    if self._generator is None:
                        raise CapacityError(
                            f"{self.label}: {count} recurrence coefficients requested, "
                            f"only {len(self._alpha)} available")
                    alpha, beta = self._generator(count)
                    self._store(np.asarray(alpha, dtype=float)[:count].copy(),
                                np.asarray(beta, dtype=float)[:count].copy())
        return self._alpha[:count], self._beta[:count]

    def to_dict(self) -> Dict:
        return {
            "label": self.label,
            "support": [self.support_lo, self.support_hi],
            "alpha": self._alpha.tolist(),
            "beta": self._beta.tolist(),
        }

    @classmethod
    def from_dict(cls, data: Dict) -> "RecurrenceMeasure":
        lo, hi = (from_json_float(v) for v in data["support"])
        return cls(data.get("label", "stored"), (lo, hi),
                   alpha=[float(v) for v in data["alpha"]],
                   beta=[float(v) for v in data["beta"]])

    def __repr__(self) -> str:
        return f"RecurrenceMeasure({self.label!r}, support=[{self.support_lo}, {self.support_hi}])"


@dataclass(frozen=True, eq=False)
class PlainGaussRule:
    nodes: np.ndarray
    weights: np.ndarray
    degree_exact: int

    def integrate(self, values) -> float:
        return float(np.dot(self.weights, values))


# --- Classical families ---

def _jacobi_coefficients(p: float, q: float, count: int) -> Tuple[np.ndarray, np.ndarray]:
    alpha = np.zeros(count)
    beta = np.zeros(count)
    if count == 0:
        return alpha, beta
    s = p + q
    alpha[0] = (q - p) / (s + 2.0)
    beta[0] = math.exp((s + 1.0) * math.log(2.0) + gammaln(p + 1.0) + gammaln(q + 1.0) - gammaln(s + 2.0))
    if count > 1:
        k = np.arange(1, count, dtype=float)
        alpha[1:] = (q * q - p * p) / ((2 * k + s) * (2 * k + s + 2))
        beta[1] = 4.0 * (p + 1.0) * (q + 1.0) / ((s + 2.0) ** 2 * (s + 3.0))
    if count > 2:
        k = np.arange(2, count, dtype=float)
        beta[2:] = (4 * k * (k + p) * (k + q) * (k + s)
                    / ((2 * k + s) ** 2 * (2 * k + s + 1) * (2 * k + s - 1)))
    return alpha, beta


def jacobi_measure(p: float, q: float) -> RecurrenceMeasure:
    """(1-t)^p (1+t)^q dt on [-1, 1]."""
    p, q = float(p), float(q)
    if not (p > -1 and q > -1):
        raise DomainError(f"Jacobi parameters must exceed -1, got p={p}, q={q}")
    return RecurrenceMeasure(f"jacobi:{p:g},{q:g}", (-1.0, 1.0),
                             generator=lambda count: _jacobi_coefficients(p, q, count),
                             family="jacobi", params={"p": p, "q": q})


def laguerre_measure(p: float) -> RecurrenceMeasure:
    """t^p e^{-t} dt on [0, +inf)."""
    p = float(p)
    if not p > -1:
        raise DomainError(f"Laguerre parameter must exceed -1, got p={p}")

    def generate(count):
        k = np.arange(count, dtype=float)
        beta = k * (k + p)
        if count:
            beta[0] = math.exp(gammaln(p + 1.0))
        return 2 * k + p + 1, beta

    return RecurrenceMeasure(f"laguerre:{p:g}", (0.0, math.inf), generator=generate,
                             family="laguerre", params={"p": p})


# --- Gauss rules (Golub-Welsch) ---

def gauss_rule(m: RecurrenceMeasure, N: int) -> PlainGaussRule:
    if N < 1:
        raise DomainError(f"Gauss rule needs N >= 1, got {N}")
    alpha, beta = m.recurrence(N)
    try:
        nodes, vecs = eigh_tridiagonal(alpha, np.sqrt(beta[1:]))
    except LinAlgError as e:
        raise NumericError(f"eigenvalue iteration failed for {m.label}, N={N}: {e}") from e
    weights = beta[0] * vecs[0, :] ** 2
    if not (np.all(nodes > m.support_lo) and np.all(nodes < m.support_hi)):
        raise NumericError(f"Gauss nodes of {m.label} (N={N}) left the open support")
    return PlainGaussRule(nodes=nodes, weights=weights, degree_exact=2 * N - 1)


def monic_orthogonal_derivatives(m: RecurrenceMeasure, k: int, x, order: int = 0) -> np.ndarray:
    """pi_k^(j)(x) for j = 0..order, shape (order + 1,) + shape(x).

    Differentiates the three-term recurrence, so no monomial expansion is formed.
    """
    x = np.asarray(x, dtype=float)
    alpha, beta = m.recurrence(max(k, 1))
    prev = np.zeros((order + 1,) + x.shape)
    cur = np.zeros_like(prev)
    cur[0] = 1.0
    for i in range(k):
        nxt = (x - alpha[i]) * cur
        nxt[1:] += np.arange(1, order + 1).reshape((-1,) + (1,) * x.ndim) * cur[:-1]
        if i:
            nxt -= beta[i] * prev
        prev, cur = cur, nxt
    return cur


# --- Christoffel modification by linear factors ---

LEFT = +1   # factor (t - c), c at or left of the support
RIGHT = -1  # factor (c - t), c at or right of the support


def _christoffel_step(alpha, beta, c, side: int, label: str):
    """One LR step of the shifted Jacobi matrix; consumes one coefficient.

    Works on float or mpf object arrays alike. For RIGHT the measure is
    reflected, modified on the left and reflected back.
    """
    K = len(alpha) - 1
    if side == RIGHT:
        alpha, c = -alpha, -c
    u = alpha[0] - c
    if not u > 0:
        raise NumericError(f"{label}: Christoffel pivot u_0 = {float(u)!r} is not positive")
    new_alpha = alpha[:K].copy()
    new_beta = beta[:K].copy()
    new_beta[0] = u * beta[0]
    for k in range(K):
        v = beta[k + 1] / u
        u_next = alpha[k + 1] - c - v
        if not u_next > 0:
            raise NumericError(f"{label}: Christoffel pivot u_{k + 1} = {float(u_next)!r} is not positive")
        new_alpha[k] = c + u + v
        if k + 1 < K:
            new_beta[k + 1] = u_next * v
        u = u_next
    if side == RIGHT:
        new_alpha = -new_alpha
    return new_alpha, new_beta


def _check_factor(m: RecurrenceMeasure, c: float, side: int) -> None:
    if side == LEFT:
        if m.unbounded_left or not c <= m.support_lo:
            raise DomainError(f"factor (t - {c}) changes sign on the support of {m.label}")
    elif side == RIGHT:
        if m.unbounded_right or not c >= m.support_hi:
            raise DomainError(f"factor ({c} - t) changes sign on the support of {m.label}")
    else:
        raise DomainError(f"unknown factor orientation {side!r}")


def _factor_schedule(a: float, r: int, b: float, s: int):
    left, right = [(a, LEFT)] * r, [(b, RIGHT)] * s
    schedule = []
    for i in range(max(r, s)):
        if i < r:
            schedule.append(left[i])
        if i < s:
            schedule.append(right[i])
    return schedule


def _chain_generator(m: RecurrenceMeasure, schedule, precision: Precision) -> Generator:
    arith = Arithmetic(precision)

    def generate(count):
        alpha, beta = m.recurrence(count + len(schedule))
        alpha, beta = arith.array(alpha), arith.array(beta)
        for c, side in schedule:
            alpha, beta = _christoffel_step(alpha, beta, arith.scalar(c), side, m.label)
        return arith.to_float(alpha), arith.to_float(beta)

    return generate


def christoffel_modify(m: RecurrenceMeasure, c: float, orientation: int,
                       precision: Optional[Precision] = None) -> RecurrenceMeasure:
    """Multiply ``m`` by (t - c) (``LEFT``) or (c - t) (``RIGHT``)."""
    c = float(c)
    _check_factor(m, c, orientation)
    name = f"(t-{c:g})" if orientation == LEFT else f"({c:g}-t)"
    precision = resolve(precision)
    return RecurrenceMeasure(f"{name}*{m.label}", (m.support_lo, m.support_hi),
                             generator=_chain_generator(m, [(c, orientation)], precision),
                             family="modified", params={"base": m.label})


def modified_measure(m: RecurrenceMeasure, a: float, r: int, b: float, s: int,
                     precision: Optional[Precision] = None) -> RecurrenceMeasure:
    """(t-a)^r (b-t)^s dlambda, factors applied left, right, left, ..."""
    r, s = int(r), int(s)
    if r < 0 or s < 0:
        raise DomainError(f"multiplicities must be non-negative, got r={r}, s={s}")
    if r > 0 and m.unbounded_left:
        raise DomainError(f"{m.label} is unbounded on the left; only r=0 is allowed")
    if s > 0 and m.unbounded_right:
        raise DomainError(f"{m.label} is unbounded on the right; only s=0 is allowed")
    if r == 0 and s == 0:
        return m
    schedule = _factor_schedule(a, r, b, s)
    for c, side in schedule[:2]:
        _check_factor(m, float(c), side)
    precision = resolve(precision, r, s)
    logger.debug("modifying %s with r=%d at %s, s=%d at %s (%s)", m.label, r, a, s, b, precision.value)
    return RecurrenceMeasure(f"(t-{a:g})^{r}({b:g}-t)^{s}*{m.label}", (m.support_lo, m.support_hi),
                             generator=_chain_generator(m, [(float(c), side) for c, side in schedule], precision),
                             family="modified", params={"base": m.label, "a": a, "r": r, "b": b, "s": s})


# --- Discretised Stieltjes procedure ---

def _stieltjes(x: np.ndarray, w: np.ndarray, count: int) -> Tuple[np.ndarray, np.ndarray]:
    alpha = np.zeros(count)
    beta = np.zeros(count)
    beta[0] = w.sum()
    p_prev = np.zeros_like(x)
    p = np.full_like(x, 1.0 / math.sqrt(beta[0]))
    for k in range(count):
        alpha[k] = np.dot(w, x * p * p)
        q = (x - alpha[k]) * p - (math.sqrt(beta[k]) if k else 0.0) * p_prev
        if k + 1 < count:
            beta[k + 1] = np.dot(w, q * q)
            if not beta[k + 1] > 0:
                raise NumericError(f"Stieltjes breakdown at k={k + 1}")
            p_prev, p = p, q / math.sqrt(beta[k + 1])
    return alpha, beta


def stieltjes_from_density(f_density: Callable[[np.ndarray], np.ndarray], lo: float, hi: float,
                           k_max: int, label: str = "density") -> RecurrenceMeasure:
    """Coefficients 0..k_max of f_density(t) dt on [lo, hi].

    The density is sampled on Gauss-Legendre points whose number is doubled
    until the coefficients settle.
    """
    lo, hi = float(lo), float(hi)
    if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
        raise DomainError(f"density interval must be finite and non-empty, got [{lo}, {hi}]")
    count = int(k_max) + 1
    if count < 1:
        raise DomainError(f"k_max must be non-negative, got {k_max}")

    def discretise(M):
        x, w = roots_legendre(M)
        x = 0.5 * (hi - lo) * x + 0.5 * (hi + lo)
        dens = np.asarray(f_density(x), dtype=float) * np.ones_like(x)
        if not np.all(np.isfinite(dens)):
            raise DomainError(f"density of {label} is not finite on [{lo}, {hi}]")
        if np.any(dens < 0):
            t_bad = float(x[np.argmin(dens)])
            raise DomainError(f"density of {label} is negative near t={t_bad:.6g}")
        w = 0.5 * (hi - lo) * w * dens
        if not w.sum() > 0:
            raise DomainError(f"{label} has zero mass on [{lo}, {hi}] (degenerate measure)")
        return x, w

    M = max(STIELTJES_START_POINTS, 2 * count)
    previous = _stieltjes(*discretise(M), count)
    while True:
        M *= 2
        if M > STIELTJES_MAX_POINTS:
            raise NumericError(f"Stieltjes discretisation of {label} did not settle by {STIELTJES_MAX_POINTS} points")
        current = _stieltjes(*discretise(M), count)
        scale = np.abs(current[0]) + np.sqrt(current[1])
        if (np.all(np.abs(current[0] - previous[0]) <= STIELTJES_TOL * scale)
                and np.all(np.abs(current[1] - previous[1]) <= STIELTJES_TOL * current[1])):
            break
        previous = current
    logger.debug("Stieltjes for %s settled at %d points", label, M)
    return RecurrenceMeasure(label, (lo, hi), alpha=current[0], beta=current[1],
                             family="density", params={"lo": lo, "hi": hi})


# --- Moments ---

def monomial_moments(m: RecurrenceMeasure, k_max: int) -> np.ndarray:
    """int t^k dlambda for k = 0..k_max.

    Closed forms (evaluated in mpmath at 50 digits) for Jacobi and Laguerre,
    an exact Gauss rule of the measure otherwise.
    """
    if m.family == "jacobi":
        p, q = m.params["p"], m.params["q"]
        with mpmath.workdps(50):
            p_, q_ = mpmath.mpf(p), mpmath.mpf(q)
            scale = mpmath.power(2, p_ + q_ + 1)
            betas = [mpmath.beta(q_ + i + 1, p_ + 1) for i in range(k_max + 1)]
            out = []
            for k in range(k_max + 1):
                acc = mpmath.fsum(mpmath.binomial(k, i) * mpmath.power(2, i) * (-1) ** (k - i) * betas[i]
                                  for i in range(k + 1))
                out.append(float(scale * acc))
        return np.array(out)
    if m.family == "laguerre":
        p = m.params["p"]
        with mpmath.workdps(50):
            return np.array([float(mpmath.gamma(mpmath.mpf(p) + k + 1)) for k in range(k_max + 1)])
    rule = gauss_rule(m, k_max // 2 + 1)
    return np.array([rule.integrate(rule.nodes ** k) for k in range(k_max + 1)])


# --- Measure specs ("jacobi:p,q", "laguerre:p", "density:<expr>:<lo>:<hi>") ---

def _spec_floats(text: str, count: int, spec: str):
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != count:
        raise DomainError(f"measure spec {spec!r} needs {count} parameter(s)")
    try:
        return [from_json_float(p) for p in parts]
    except ValueError as e:
        raise DomainError(f"bad number in measure spec {spec!r}") from e


def parse_measure(spec: str, capacity: int = 0) -> RecurrenceMeasure:
    """Build a measure from its spec string.

    Density measures carry a fixed number of coefficients, so callers pass
    ``capacity`` (how many recurrence coefficients the job will need).
    """
    spec = str(spec).strip()
    family, _, rest = spec.partition(":")
    family = family.lower()
    if family == "jacobi":
        return jacobi_measure(*_spec_floats(rest, 2, spec))
    if family == "laguerre":
        return laguerre_measure(*_spec_floats(rest, 1, spec))
    if family == "density":
        pieces = rest.rsplit(":", 2)
        if len(pieces) != 3:
            raise DomainError(f"density spec must read density:<expr>:<lo>:<hi>, got {spec!r}")
        expr = exprcalc.parse(pieces[0])
        lo, hi = _spec_floats(pieces[1], 1, spec) + _spec_floats(pieces[2], 1, spec)
        return stieltjes_from_density(lambda t: exprcalc.evaluate(expr, t), lo, hi,
                                      max(int(capacity), 1) - 1, label=f"density {expr}")
    raise DomainError(f"unknown measure family {family!r}{exprcalc.suggest(family, MEASURE_FAMILIES)}")
