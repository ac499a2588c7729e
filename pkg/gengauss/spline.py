"""Moment-preserving splines on [0, 1].

A spline of degree m with n free knots reproduces the moments of f up to
order 2n+m when the measure (-1)^{m+1} f^{(m+1)}(t)/m! dt on [0, 1] is
positive. Its knots and jumps come from the rule with r = s = m+1 for that
measure.
"""
import logging
import math
from dataclasses import dataclass
from typing import Dict, Union

import numpy as np
import pandas as pd
from scipy.special import beta as beta_fn, roots_legendre

from . import exprcalc
from .measures import stieltjes_from_density
from .rulegen import build_rule
from .utils.config import (
    SIGN_CHECK_SAMPLES, SPLINE_AGREEMENT_TOL, SPLINE_MOMENT_CHECK_POINTS, SPLINE_MOMENT_POINTS,
)
from .utils.errors import DomainError, NumericError

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class SplineData:
    m: int
    knots: np.ndarray
    jump_coeffs: np.ndarray
    endpoint_block: np.ndarray

    @property
    def n(self) -> int:
        return len(self.knots)

    def derivative(self, t, k: int = 0, side: str = "right") -> np.ndarray:
        """k-th derivative of sigma; at a knot ``side`` picks the one-sided limit."""
        t = np.asarray(t, dtype=float)
        out = np.zeros(t.shape)
        if k <= self.m:
            factor = (-1) ** k * math.factorial(self.m) / math.factorial(self.m - k)
            for tau, lam in zip(self.knots, self.jump_coeffs):
                gap = tau - t
                active = gap >= 0 if side == "left" else gap > 0
                out = out + np.where(active, lam * factor * np.abs(gap) ** (self.m - k), 0.0)
        for j, c in enumerate(self.endpoint_block):
            if j >= k:
                out = out + c * (t - 1.0) ** (j - k) / math.factorial(j - k)
        return out

    def evaluate(self, t) -> np.ndarray:
        return self.derivative(t, 0)

    def sample(self, count: int) -> pd.DataFrame:
        t = np.linspace(0.0, 1.0, int(count))
        return pd.DataFrame({"t": t, "sigma": self.evaluate(t)})

    def to_dict(self) -> Dict:
        return {"m": self.m, "knots": self.knots, "jump_coeffs": self.jump_coeffs,
                "endpoint_block": self.endpoint_block}


def spline_density(f: exprcalc.Expr, m: int):
    sign = (-1) ** (m + 1)
    scale = 1.0 / math.factorial(m)

    def density(t):
        return sign * scale * exprcalc.derivative_values(f, t, m + 1)

    return density


def moment_spline(f: Union[exprcalc.Expr, str], m: int, n: int, precision=None) -> SplineData:
    f = exprcalc.parse(f) if isinstance(f, str) else f
    m, n = int(m), int(n)
    if m < 0 or n < 0:
        raise DomainError(f"spline degree and knot count must be non-negative, got m={m}, n={n}")
    density = spline_density(f, m)
    samples = density(np.linspace(0.0, 1.0, SIGN_CHECK_SAMPLES))
    if np.any(samples < 0):
        raise DomainError("measure not positive, spline may not exist")
    if not np.any(samples > 0):
        raise DomainError(f"f^({m + 1}) vanishes on [0, 1]: degenerate measure, no spline")
    measure = stieltjes_from_density(density, 0.0, 1.0, n + 2 * m + 2, label=f"spline density of {f}")
    rule = build_rule(measure, 0.0, m + 1, 1.0, m + 1, n, precision)
    derivs = exprcalc.jet(f, 1.0, m).derivatives()
    block = np.array([derivs[j] + (-1) ** m * math.factorial(m) * rule.right_weights[m - j]
                      for j in range(m + 1)])
    logger.info("spline m=%d n=%d built, knots %s", m, n, np.array2string(rule.nodes, precision=6))
    return SplineData(m=m, knots=rule.nodes, jump_coeffs=rule.interior_weights, endpoint_block=block)


def function_moments(f: Union[exprcalc.Expr, str], N: int) -> np.ndarray:
    """int_0^1 t^j f(t) dt for j = 0..N, cross-checked between two Gauss-Legendre sizes."""
    f = exprcalc.parse(f) if isinstance(f, str) else f
    results = []
    for points in (SPLINE_MOMENT_POINTS, SPLINE_MOMENT_CHECK_POINTS):
        x, w = roots_legendre(points)
        t, w = 0.5 * (x + 1.0), 0.5 * w
        values = exprcalc.evaluate(f, t)
        results.append(np.array([np.dot(w, t ** j * values) for j in range(N + 1)]))
    if np.any(np.abs(results[0] - results[1]) > SPLINE_AGREEMENT_TOL * np.maximum(1.0, np.abs(results[1]))):
        raise NumericError("moments of f did not settle between quadrature sizes")
    return results[1]


def spline_moments(sd: SplineData, N: int) -> np.ndarray:
    """int_0^1 t^j sigma(t) dt in closed form."""
    j = np.arange(N + 1)
    out = np.zeros(N + 1)
    for tau, lam in zip(sd.knots, sd.jump_coeffs):
        out += lam * tau ** (j + sd.m + 1) * beta_fn(j + 1, sd.m + 1)
    for i, c in enumerate(sd.endpoint_block):
        out += c * (-1) ** i * beta_fn(j + 1, i + 1) / math.factorial(i)
    return out


def verify_spline_moments(sd: SplineData, f: Union[exprcalc.Expr, str], N: int) -> np.ndarray:
    """|int t^j sigma - mu_j| for j = 0..N."""
    return np.abs(spline_moments(sd, N) - function_moments(f, N))
