"""Applying rules: endpoint jets, remainders, weight-sum bounds, composite rules."""
import logging
import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from joblib import Parallel, delayed

from . import exprcalc
from .measures import RecurrenceMeasure, gauss_rule, monic_orthogonal_derivatives, monomial_moments
from .rulegen import (
    GenGaussRule, auxiliary_size, build_rule, left_boundary_poly, right_boundary_poly,
)
from .utils.config import (
    CHECK_EXACTNESS_TOL, CHECK_LEADING_ABS_TOL, CHECK_LEADING_REL_TOL, N_JOBS,
    REFERENCE_AGREEMENT_TOL, REFERENCE_CHECK_POINTS, REFERENCE_POINTS,
)
from .utils.errors import DomainError, NumericError, UnsupportedError
from .utils.precision import Precision

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class EndpointJet:
    """f(point), f'(point), ..., f^(k)(point) as plain derivatives."""
    point: float
    values: np.ndarray

    @property
    def order(self) -> int:
        return len(self.values) - 1

    @classmethod
    def from_taylor(cls, jet: exprcalc.TaylorJet) -> "EndpointJet":
        return cls(jet.anchor, jet.derivatives())


def _check_jet(jet: Optional[EndpointJet], anchor: float, needed: int, side: str) -> None:
    if needed == 0:
        return
    if jet is None or jet.order < needed - 1:
        have = "none" if jet is None else f"order {jet.order}"
        raise DomainError(f"{side} jet must have order >= {needed - 1}, got {have}")
    if not math.isclose(jet.point, anchor, rel_tol=1e-14, abs_tol=1e-14):
        raise DomainError(f"{side} jet anchored at {jet.point}, rule endpoint is {anchor}")


def apply(rule: GenGaussRule, left: Optional[EndpointJet], interior_values: Sequence[float],
          right: Optional[EndpointJet]) -> float:
    _check_jet(left, rule.a, rule.r, "left")
    _check_jet(right, rule.b, rule.s, "right")
    interior_values = np.asarray(interior_values, dtype=float)
    if interior_values.shape != (rule.n,):
        raise DomainError(f"expected {rule.n} interior values, got {interior_values.size}")
    total = float(np.dot(rule.interior_weights, interior_values))
    if rule.r:
        total += float(np.dot(rule.left_weights, left.values[:rule.r]))
    if rule.s:
        signs = (-1.0) ** np.arange(rule.s)
        total += float(np.dot(signs * rule.right_weights, right.values[:rule.s]))
    return total


def function_jets(rule: GenGaussRule, f: Union[exprcalc.Expr, str]) -> Tuple[Optional[EndpointJet], np.ndarray,
                                                                             Optional[EndpointJet]]:
    f = exprcalc.parse(f) if isinstance(f, str) else f
    exprcalc.check_regular(f, rule.a, rule.b)
    left = EndpointJet.from_taylor(exprcalc.jet(f, rule.a, rule.r - 1)) if rule.r else None
    right = EndpointJet.from_taylor(exprcalc.jet(f, rule.b, rule.s - 1)) if rule.s else None
    values = np.asarray(exprcalc.evaluate(f, rule.nodes), dtype=float) if rule.n else np.zeros(0)
    return left, values, right


def apply_function(rule: GenGaussRule, f: Union[exprcalc.Expr, str]) -> float:
    return apply(rule, *function_jets(rule, f))


def remainder(rule: GenGaussRule, f: Union[exprcalc.Expr, str], reference_integral: float) -> float:
    """R(f) = int f dlambda - Q(f)."""
    return float(reference_integral) - apply_function(rule, f)


def reference_integral(m: RecurrenceMeasure, f: Union[exprcalc.Expr, str]) -> float:
    """int f dlambda by a high-order Gauss rule, cross-checked against a larger one."""
    f = exprcalc.parse(f) if isinstance(f, str) else f
    exprcalc.check_regular(f, m.support_lo, m.support_hi)
    values = []
    for N in (REFERENCE_POINTS, REFERENCE_CHECK_POINTS):
        g = gauss_rule(m, N)
        values.append(g.integrate(exprcalc.evaluate(f, g.nodes)))
    if abs(values[0] - values[1]) > REFERENCE_AGREEMENT_TOL * max(1.0, abs(values[1])):
        raise NumericError(f"reference integral did not settle: {values[0]!r} vs {values[1]!r}")
    return values[1]


# --- Weight sums and bounds ---

def norm_estimate(rule: GenGaussRule) -> float:
    return float(np.sum(rule.left_weights) + np.sum(rule.interior_weights) + np.sum(rule.right_weights))


def rule_mass(rule: GenGaussRule) -> float:
    """Q(1), i.e. the total mass of the measure."""
    total = float(np.sum(rule.interior_weights))
    if rule.r:
        total += float(rule.left_weights[0])
    if rule.s:
        total += float(rule.right_weights[0])
    return total


def norm_bound_rate2(rule: GenGaussRule) -> float:
    """(1 + r^2 (b-a)^r + s^2 (b-a)^s) * int dlambda."""
    if not (math.isfinite(rule.a) and math.isfinite(rule.b)):
        raise DomainError("the weight-sum bound needs a finite interval")
    width = rule.b - rule.a
    return (1.0 + rule.r ** 2 * width ** rule.r + rule.s ** 2 * width ** rule.s) * rule_mass(rule)


def uniform_norm_bound(m: RecurrenceMeasure, a: float, r: int, b: float, s: int,
                       precision: Optional[Precision] = None) -> float:
    """n-independent bound on the weight sums of the (r, s) family.

    int dlambda plus the integrals of the derivative basis polynomials
    (j >= 1) of the rule without free nodes.
    """
    aux = gauss_rule(m, auxiliary_size(0, r, s))
    total = float(np.sum(aux.weights))
    for j in range(1, r):
        total += aux.integrate(left_boundary_poly(j, a, r, b, s, [], precision)(aux.nodes))
    for j in range(1, s):
        total += (-1) ** j * aux.integrate(right_boundary_poly(j, a, r, b, s, [], precision)(aux.nodes))
    return total


def leading_error_integral(m: RecurrenceMeasure, rule: GenGaussRule) -> float:
    """int (t-a)^r (t-b)^s prod (t-tau_j)^2 dlambda, the remainder of t^{2n+r+s}."""
    g = gauss_rule(m, auxiliary_size(rule.n, rule.r, rule.s))
    x = g.nodes
    values = np.ones_like(x)
    if rule.r:
        values *= (x - rule.a) ** rule.r
    if rule.s:
        values *= (x - rule.b) ** rule.s
    for tau in rule.nodes:
        values *= (x - tau) ** 2
    return g.integrate(values)


def _orthogonal_remainder(m: RecurrenceMeasure, rule: GenGaussRule) -> Tuple[float, float]:
    """R(pi_K) and the sum of |terms| of Q(pi_K), K = 2n + r + s.

    int pi_K dlambda = 0, and pi_K - t^K has degree < K, so R(pi_K) = R(t^K)
    without the cancellation of the monomial moment.
    """
    K = 2 * rule.n + rule.r + rule.s
    terms = [rule.interior_weights * monic_orthogonal_derivatives(m, K, rule.nodes)[0]]
    if rule.r:
        terms.append(rule.left_weights * monic_orthogonal_derivatives(m, K, rule.a, rule.r - 1))
    if rule.s:
        signs = (-1.0) ** np.arange(rule.s)
        terms.append(signs * rule.right_weights * monic_orthogonal_derivatives(m, K, rule.b, rule.s - 1))
    flat = np.concatenate([np.ravel(t) for t in terms])
    return -float(np.sum(flat)), float(np.sum(np.abs(flat)))


def rule_checks(m: RecurrenceMeasure, rule: GenGaussRule) -> Dict[str, object]:
    """Positivity, exactness, the leading-error identity and the weight-sum bound.

    Failures are reported, not raised.
    """
    K = 2 * rule.n + rule.r + rule.s
    mu = monomial_moments(m, K - 1)
    q = rule.monomial_sums(K - 1)
    exact_err = np.abs(q - mu) / np.maximum(1.0, np.abs(mu))
    remainder_k, magnitude = _orthogonal_remainder(m, rule)
    leading = leading_error_integral(m, rule)
    leading_gap = abs(remainder_k - leading)
    result = {
        "n": rule.n, "r": rule.r, "s": rule.s,
        "min_weight": float(rule.all_weights().min()),
        "positive": bool(np.all(rule.all_weights() > 0)),
        "max_exactness_error": float(exact_err.max()) if K else 0.0,
        "exact": bool(np.all(exact_err <= CHECK_EXACTNESS_TOL)),
        "leading_error": float(leading),
        "leading_identity": bool(leading_gap <= CHECK_LEADING_REL_TOL * abs(leading)
                                 + CHECK_LEADING_ABS_TOL * magnitude),
        "norm_estimate": norm_estimate(rule),
        "norm_bound": None,
        "bounded": True,
    }
    if math.isfinite(rule.a) and math.isfinite(rule.b):
        bound = norm_bound_rate2(rule)
        result["norm_bound"] = bound
        result["bounded"] = bool(result["norm_estimate"] <= bound * (1.0 + 1e-12))
    result["passed"] = all(result[k] for k in ("positive", "exact", "leading_identity", "bounded"))
    return result


# --- Composite rules (Lebesgue measure only) ---

def affine_map_rule(rule: GenGaussRule, lo: float, hi: float) -> GenGaussRule:
    """Push a rule on [a, b] forward to [lo, hi] for Lebesgue measure.

    Values scale by h, derivative weights of order j by h^(j+1), with h the
    length ratio.
    """
    if not (math.isfinite(rule.a) and math.isfinite(rule.b)):
        raise DomainError("only rules on finite intervals can be mapped")
    h = (hi - lo) / (rule.b - rule.a)
    scale_left = h ** (np.arange(rule.r) + 1.0)
    scale_right = h ** (np.arange(rule.s) + 1.0)
    return GenGaussRule(a=float(lo), r=rule.r, b=float(hi), s=rule.s, n=rule.n,
                        nodes=lo + h * (rule.nodes - rule.a),
                        interior_weights=h * rule.interior_weights,
                        left_weights=scale_left * rule.left_weights,
                        right_weights=scale_right * rule.right_weights,
                        label=f"{rule.label} on [{lo:g}, {hi:g}]", precision=rule.precision)


@dataclass(frozen=True, eq=False)
class CompositeRule:
    partition: np.ndarray
    cell_specs: Tuple[Tuple[int, int, int], ...]
    cell_rules: Tuple[GenGaussRule, ...]

    @property
    def mesh_size(self) -> float:
        return float(np.max(np.diff(self.partition)))


def _is_lebesgue(m: RecurrenceMeasure) -> bool:
    return m.family == "jacobi" and m.params.get("p") == 0.0 and m.params.get("q") == 0.0


def composite_rule(m: RecurrenceMeasure, partition: Sequence[float],
                   specs: Union[Tuple[int, int, int], Sequence[Tuple[int, int, int]]],
                   precision: Optional[Precision] = None) -> CompositeRule:
    """Shifted and scaled copies of Legendre rules, one per cell.

    ``specs`` is a single (n, r, s) or one per cell.
    """
    if not _is_lebesgue(m):
        raise UnsupportedError(f"composite rules need Lebesgue measure (jacobi:0,0), got {m.label}")
    partition = np.asarray(partition, dtype=float)
    if partition.ndim != 1 or len(partition) < 2 or np.any(np.diff(partition) <= 0):
        raise DomainError("partition must be strictly increasing with at least two points")
    cells = len(partition) - 1
    if len(specs) == 3 and all(isinstance(v, (int, np.integer)) for v in specs):
        specs = [tuple(specs)] * cells
    specs = tuple(tuple(int(v) for v in spec) for spec in specs)
    if len(specs) != cells:
        raise DomainError(f"{len(specs)} cell specs for {cells} cells")
    reference = {}
    for spec in set(specs):
        n, r, s = spec
        reference[spec] = build_rule(m, -1.0, r, 1.0, s, n, precision)
    rules = tuple(affine_map_rule(reference[spec], lo, hi)
                  for spec, lo, hi in zip(specs, partition[:-1], partition[1:]))
    return CompositeRule(partition=partition, cell_specs=specs, cell_rules=rules)


def uniform_partition(lo: float, hi: float, cells: int) -> np.ndarray:
    return np.linspace(lo, hi, int(cells) + 1)


def _pairwise_sum(values: List[float]) -> float:
    if len(values) <= 2:
        return float(sum(values))
    mid = len(values) // 2
    return _pairwise_sum(values[:mid]) + _pairwise_sum(values[mid:])


def composite_apply(comp: CompositeRule, f: Union[exprcalc.Expr, str], n_jobs: int = N_JOBS) -> float:
    f = exprcalc.parse(f) if isinstance(f, str) else f
    parts = Parallel(n_jobs=n_jobs, prefer="threads")(
        delayed(apply_function)(rule, f) for rule in comp.cell_rules)
    return _pairwise_sum(list(parts))
