"""Rate studies of R_{n, r_n, s_n}(f) as n grows."""
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from joblib import Parallel, delayed

from . import exprcalc
from .measures import RecurrenceMeasure
from .potential import predicted_rate, solve_support
from .quadrature import function_jets, apply, norm_estimate, reference_integral
from .rulegen import build_rule
from .utils.config import CQ_TARGET_TOL, FIT_SKIP, MIN_FIT_POINTS, N_JOBS, ROUNDOFF_FACTOR
from .utils.precision import Precision

logger = logging.getLogger(__name__)

EPS = float(np.finfo(float).eps)


def schedule_for(alpha: float, beta: float, n: int) -> Tuple[int, int]:
    """(r_n, s_n) = (alpha n, beta n) rounded half up."""
    return int(math.floor(alpha * n + 0.5)), int(math.floor(beta * n + 0.5))


@dataclass
class RateStudy:
    alpha: float
    beta: float
    n_values: List[int]
    r_values: List[int]
    s_values: List[int]
    errors: List[float]
    roundoff_floors: List[float]
    fitted_rate: Optional[float] = None
    predicted_rate: Optional[float] = None
    fit_window: List[int] = field(default_factory=list)

    @property
    def saturated(self) -> bool:
        return self.fitted_rate is None

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"n": self.n_values, "r": self.r_values, "s": self.s_values,
                             "abs_error": self.errors, "roundoff_floor": self.roundoff_floors})

    def to_dict(self) -> Dict:
        rows = [{"n": n, "r": r, "s": s, "abs_error": e}
                for n, r, s, e in zip(self.n_values, self.r_values, self.s_values, self.errors)]
        return {"schedule": {"alpha": self.alpha, "beta": self.beta}, "rows": rows,
                "fitted_rate": self.fitted_rate, "predicted_rate": self.predicted_rate,
                "saturated": self.saturated}


def _error_row(m, f, exact, a, b, n, r, s, precision) -> Tuple[float, float]:
    rule = build_rule(m, a, r, b, s, n, precision)
    left, values, right = function_jets(rule, f)
    error = abs(exact - apply(rule, left, values, right))
    samples = [np.abs(values).max()] if len(values) else []
    samples += [abs(jet.values[0]) for jet in (left, right) if jet is not None]
    floor = EPS * norm_estimate(rule) * max(samples, default=1.0)
    return error, floor


def fit_rate(n_values: Sequence[int], errors: Sequence[float], floors: Sequence[float]) -> Tuple[Optional[float], List[int]]:
    """exp(slope) of log|R_n| against n over the window above the roundoff floor."""
    skip = set(sorted(n_values)[:FIT_SKIP])
    window = [(n, e) for n, e, fl in zip(n_values, errors, floors)
              if n not in skip and e > ROUNDOFF_FACTOR * fl]
    if len(window) < MIN_FIT_POINTS:
        return None, [n for n, _ in window]
    ns = np.array([n for n, _ in window], dtype=float)
    logs = np.log([e for _, e in window])
    slope, _ = np.polyfit(ns, logs, 1)
    return float(math.exp(slope)), [int(n) for n in ns]


def rate_study(m: RecurrenceMeasure, f: Union[exprcalc.Expr, str], exact_integral: Optional[float],
               schedule: Tuple[float, float], n_range: Sequence[int],
               a: Optional[float] = None, b: Optional[float] = None,
               singularity: Optional[complex] = None,
               precision: Optional[Precision] = None, n_jobs: int = N_JOBS) -> RateStudy:
    f = exprcalc.parse(f) if isinstance(f, str) else f
    alpha, beta = (float(v) for v in schedule)
    if exact_integral is None:
        exact_integral = reference_integral(m, f)
    n_values = [int(n) for n in n_range]
    rs = [schedule_for(alpha, beta, n) for n in n_values]
    rows = Parallel(n_jobs=n_jobs, prefer="threads")(
        delayed(_error_row)(m, f, exact_integral, a, b, n, r, s, precision)
        for n, (r, s) in zip(n_values, rs))
    errors = [e for e, _ in rows]
    floors = [fl for _, fl in rows]
    fitted, window = fit_rate(n_values, errors, floors)
    study = RateStudy(alpha, beta, n_values, [r for r, _ in rs], [s for _, s in rs], errors, floors,
                      fitted_rate=fitted, fit_window=window)
    if singularity is not None:
        lo = m.support_lo if a is None else a
        hi = m.support_hi if b is None else b
        study.predicted_rate = predicted_rate(solve_support(lo, alpha, hi, beta), complex(singularity))
    if study.saturated:
        logger.warning("study alpha=%g beta=%g is saturated: no errors above the roundoff floor", alpha, beta)
    else:
        logger.info("study alpha=%g beta=%g: fitted rate %.6g over n=%s", alpha, beta, fitted, window)
    return study


def cq_convergence_check(m: RecurrenceMeasure, f: Union[exprcalc.Expr, str], r: int, s: int, n_max: int,
                         exact_integral: Optional[float] = None, tol: float = CQ_TARGET_TOL,
                         a: Optional[float] = None, b: Optional[float] = None,
                         precision: Optional[Precision] = None, n_jobs: int = N_JOBS) -> bool:
    """Errors fall below ``tol`` and trend down (median of R_{n+2}/R_n below 1)."""
    f = exprcalc.parse(f) if isinstance(f, str) else f
    if exact_integral is None:
        exact_integral = reference_integral(m, f)
    n_values = list(range(1, int(n_max) + 1))
    rows = Parallel(n_jobs=n_jobs, prefer="threads")(
        delayed(_error_row)(m, f, exact_integral, a, b, n, r, s, precision) for n in n_values)
    errors = np.array([e for e, _ in rows])
    ratios = [errors[k + 2] / errors[k] for k in range(len(errors) - 2) if errors[k] > 0]
    if not ratios:
        return bool(errors.min() < tol)
    trend = float(np.median(ratios))
    logger.info("C^q check r=%d s=%d: min error %.3g, median ratio %.3g", r, s, errors.min(), trend)
    return bool(errors.min() < tol and trend < 1.0)


def endpoint_enrichment_comparison(m: RecurrenceMeasure, f: Union[exprcalc.Expr, str],
                                   alpha_beta_list: Sequence[Tuple[float, float]], n_range: Sequence[int],
                                   exact_integral: Optional[float] = None,
                                   singularity: Optional[complex] = None,
                                   precision: Optional[Precision] = None, n_jobs: int = N_JOBS) -> pd.DataFrame:
    """One row per (alpha, beta) schedule, sorted by fitted rate."""
    f = exprcalc.parse(f) if isinstance(f, str) else f
    if exact_integral is None:
        exact_integral = reference_integral(m, f)
    records = []
    for alpha, beta in alpha_beta_list:
        study = rate_study(m, f, exact_integral, (alpha, beta), n_range,
                           singularity=singularity, precision=precision, n_jobs=n_jobs)
        records.append({"alpha": float(alpha), "beta": float(beta),
                        "fitted_rate": np.nan if study.saturated else study.fitted_rate,
                        "predicted_rate": np.nan if study.predicted_rate is None else study.predicted_rate,
                        "saturated": study.saturated})
    table = pd.DataFrame(records, columns=["alpha", "beta", "fitted_rate", "predicted_rate", "saturated"])
    return table.sort_values("fitted_rate", kind="mergesort", na_position="last").reset_index(drop=True)
