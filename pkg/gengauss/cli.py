"""Command-line front door: ``python -m gengauss <command> ...``.

Every command writes one JSON document (default) or one CSV table
(``--csv``) to ``--out`` or stdout. Exit codes: 0 ok, 1 checks failed,
2 domain error, 3 numeric error, 4 I/O error.
"""
import argparse
import logging
import sys
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from . import __version__, exprcalc
from .convergence import endpoint_enrichment_comparison, rate_study
from .measures import RecurrenceMeasure, parse_measure
from .potential import solve_support, trace_contours
from .quadrature import apply_function, rule_checks
from .rulegen import GenGaussRule, build_rule
from .spline import moment_spline, verify_spline_moments
from .utils.config import (
    DEFAULT_RESOLUTION, DEFAULT_SPLINE_SAMPLES, DENSITY_EXTRA_COEFFICIENTS, N_JOBS,
    PRECISION_CHOICES, REFERENCE_CHECK_POINTS,
)
from .utils.errors import DomainError, GenGaussError, NumericError
from .utils.export import from_json_float, read_json, write_csv, write_json
from .utils.precision import Precision, precision_from_env

logger = logging.getLogger(__name__)

CHECK_COLUMNS = ["n", "r", "s", "passed", "positive", "exact", "leading_identity", "bounded",
                 "min_weight", "max_exactness_error", "leading_error", "norm_estimate", "norm_bound", "error"]


# --- Jobs (shared with the HTTP layer) ---

def load_measure(spec: str, n: int = 0, r: int = 0, s: int = 0, reference: bool = False) -> RecurrenceMeasure:
    # rule checks evaluate pi_{2n+r+s} by its recurrence
    capacity = 2 * n + r + s + DENSITY_EXTRA_COEFFICIENTS
    if reference:
        capacity = max(capacity, REFERENCE_CHECK_POINTS)
    return parse_measure(spec, capacity)


def rule_job(measure: str, a: Optional[float], r: int, b: Optional[float], s: int, n: int,
             precision: Optional[Precision] = None) -> Tuple[GenGaussRule, Dict]:
    m = load_measure(measure, n, r, s)
    rule = build_rule(m, a, r, b, s, n, precision)
    return rule, rule_checks(m, rule)


def check_job(measure: str, rule_data: Optional[Dict] = None, n_max: int = 0, r_max: int = 0, s_max: int = 0,
              a: Optional[float] = None, b: Optional[float] = None, sample: Optional[int] = None,
              seed: int = 0, precision: Optional[Precision] = None) -> pd.DataFrame:
    """One row of check results per rule; numeric breakdowns and rejected parameters become failed rows."""
    if rule_data is not None:
        rule = GenGaussRule.from_dict(rule_data)
        m = load_measure(measure, rule.n, rule.r, rule.s)
        return pd.DataFrame([rule_checks(m, rule)], columns=CHECK_COLUMNS)

    grid = [(n, r, s) for n in range(1, n_max + 1) for r in range(r_max + 1) for s in range(s_max + 1)]
    if sample is not None and sample < len(grid):
        picks = np.random.default_rng(seed).choice(len(grid), size=sample, replace=False)
        grid = [grid[k] for k in sorted(picks)]
    m = load_measure(measure, n_max, r_max, s_max)
    rows = []
    for n, r, s in grid:
        try:
            rule = build_rule(m, a, r, b, s, n, precision, check=False)
            rows.append(rule_checks(m, rule))
        except (DomainError, NumericError) as e:
            logger.warning("n=%d r=%d s=%d: %s", n, r, s, e)
            rows.append({"n": n, "r": r, "s": s, "passed": False, "error": str(e)})
    return pd.DataFrame(rows, columns=CHECK_COLUMNS)


def integrate_job(measure: str, a: Optional[float], r: int, b: Optional[float], s: int, n: int, f: str,
                  exact: Optional[float] = None, precision: Optional[Precision] = None) -> Dict:
    m = load_measure(measure, n, r, s)
    rule = build_rule(m, a, r, b, s, n, precision)
    expr = exprcalc.parse(f)
    q = apply_function(rule, expr)
    out = {"f": str(expr), "n": n, "r": r, "s": s, "Q": q}
    if exact is not None:
        out["exact"] = exact
        out["R"] = exact - q
    return out


def levelset_job(a: float, alpha: float, b: float, beta: float, rhos: Sequence[float],
                 window: Optional[Sequence[float]] = None,
                 resolution: Sequence[int] = DEFAULT_RESOLUTION, n_jobs: int = N_JOBS) -> Tuple[Dict, pd.DataFrame]:
    spec = solve_support(a, alpha, b, beta)
    g_b, g_a = spec.residuals()
    contours = [trace_contours(spec, rho, window, resolution, n_jobs) for rho in rhos]
    payload = dict(spec.to_dict(), flags=spec.case_flags, residuals={"B": g_b, "A": g_a},
                   contours=[{"rho": c.rho, "component_count": c.component_count,
                              "polylines": len(c.polylines), "clipped": c.clipped} for c in contours])
    frames = [c.to_frame() for c in contours]
    frame = pd.concat(frames, ignore_index=True) if frames else pd.DataFrame(columns=["rho", "component", "x", "y"])
    return payload, frame


def parse_schedule(text: str) -> Tuple[float, float]:
    parts = str(text).split(",")
    if len(parts) != 2:
        raise DomainError(f"schedule must read alpha,beta, got {text!r}")
    alpha, beta = (from_json_float(p) for p in parts)
    if alpha < 0 or beta < 0:
        raise DomainError(f"schedule rates must be non-negative, got {text!r}")
    return alpha, beta


def parse_point(text: Optional[str]) -> Optional[complex]:
    if text is None:
        return None
    try:
        return complex(str(text).replace(" ", "").replace("i", "j"))
    except ValueError as e:
        raise DomainError(f"bad complex point {text!r}") from e


def converge_job(measure: str, f: str, schedules: Sequence[Tuple[float, float]], n_values: Sequence[int],
                 exact: Optional[float] = None, singularity: Optional[complex] = None,
                 precision: Optional[Precision] = None, n_jobs: int = N_JOBS) -> Tuple[Dict, pd.DataFrame]:
    if not schedules:
        raise DomainError("at least one schedule is needed")
    if not n_values:
        raise DomainError("the n range is empty")
    n_top = max(n_values)
    rs_top = max(int(np.floor(max(al, be) * n_top + 0.5)) for al, be in schedules)
    m = load_measure(measure, n_top, rs_top, rs_top, reference=exact is None)
    expr = exprcalc.parse(f)
    note = None
    degree = exprcalc.is_polynomial(expr)
    if degree is not None:
        note = f"f is a polynomial of degree {degree}: every rule with 2n+r+s > {degree} is exact"
        logger.info(note)
    if len(schedules) == 1:
        study = rate_study(m, expr, exact, schedules[0], n_values, singularity=singularity,
                           precision=precision, n_jobs=n_jobs)
        payload = study.to_dict()
        payload["note"] = note
        return payload, study.to_frame()
    table = endpoint_enrichment_comparison(m, expr, schedules, n_values, exact, singularity, precision, n_jobs)
    return {"comparison": table.to_dict(orient="records"), "note": note}, table


def spline_job(f: str, m: int, n: int, N: Optional[int] = None, samples: int = DEFAULT_SPLINE_SAMPLES,
               precision: Optional[Precision] = None) -> Tuple[Dict, pd.DataFrame, pd.DataFrame]:
    expr = exprcalc.parse(f)
    sd = moment_spline(expr, m, n, precision)
    N = 2 * n + m + 1 if N is None else int(N)
    residuals = verify_spline_moments(sd, expr, N)
    table = pd.DataFrame({"j": np.arange(N + 1), "residual": residuals})
    payload = {"f": str(expr), "n": n, "spline": sd.to_dict(), "moment_order": 2 * n + m,
               "residuals": table.to_dict(orient="records")}
    return payload, table, sd.sample(samples)


# --- Commands ---

def _precision(args) -> Precision:
    return Precision.parse(args.precision) if args.precision else precision_from_env()


def _emit(args, payload, frame: pd.DataFrame) -> None:
    if args.format == "csv":
        write_csv(frame, args.out)
    else:
        write_json(payload, args.out)


def cmd_rule(args) -> int:
    rule, checks = rule_job(args.measure, args.a, args.r, args.b, args.s, args.n, _precision(args))
    _emit(args, rule.to_dict(), rule.to_frame())
    print(f"positive={checks['positive']} exact={checks['exact']} "
          f"min_weight={checks['min_weight']:.6g}", file=sys.stderr)
    return 0


def cmd_check(args) -> int:
    rule_data = read_json(args.rule) if args.rule else None
    table = check_job(args.measure, rule_data, args.n_max, args.r_max, args.s_max, args.a, args.b,
                      args.sample, args.seed, _precision(args))
    _emit(args, {"rows": table.to_dict(orient="records")}, table)
    failed = int((~table["passed"].astype(bool)).sum()) if len(table) else 0
    print(f"{len(table)} rule(s) checked, {failed} failed", file=sys.stderr)
    return 1 if failed else 0


def cmd_integrate(args) -> int:
    result = integrate_job(args.measure, args.a, args.r, args.b, args.s, args.n, args.f, args.exact,
                           _precision(args))
    _emit(args, result, pd.DataFrame([result]))
    return 0


def cmd_levelset(args) -> int:
    payload, frame = levelset_job(args.a, args.alpha, args.b, args.beta, args.rho or [1.05],
                                  args.window, args.resolution, args.jobs)
    _emit(args, payload, frame)
    if args.contours:
        write_csv(frame, args.contours)
    return 0


def cmd_converge(args) -> int:
    schedules = [parse_schedule(text) for text in (args.schedule or ["0,0"])]
    n_values = list(range(args.n_min, args.n_max + 1, args.step))
    payload, frame = converge_job(args.measure, args.f, schedules, n_values, args.exact,
                                  parse_point(args.singularity), _precision(args), args.jobs)
    _emit(args, payload, frame)
    return 0


def cmd_spline(args) -> int:
    payload, _, samples = spline_job(args.f, args.m, args.n, args.moments, args.samples, _precision(args))
    _emit(args, payload, samples)
    return 0


# --- Parser ---

def _add_common(p: argparse.ArgumentParser) -> None:
    fmt = p.add_mutually_exclusive_group()
    fmt.add_argument("--json", dest="format", action="store_const", const="json", help="JSON output (default)")
    fmt.add_argument("--csv", dest="format", action="store_const", const="csv", help="CSV output")
    p.set_defaults(format="json")
    p.add_argument("--out", default=None, help="output file (default stdout)")
    p.add_argument("--precision", choices=PRECISION_CHOICES, default=None,
                   help="arithmetic for rule construction (env GENGAUSS_PRECISION)")


def _add_rule_args(p: argparse.ArgumentParser, with_n: bool = True) -> None:
    p.add_argument("--measure", required=True,
                   help='"jacobi:p,q", "laguerre:p" or "density:<expr>:<lo>:<hi>"')
    p.add_argument("--a", type=float, default=None, help="left endpoint (default: support)")
    p.add_argument("--b", type=float, default=None, help="right endpoint (default: support)")
    if with_n:
        p.add_argument("--r", type=int, default=0, help="derivatives at a")
        p.add_argument("--s", type=int, default=0, help="derivatives at b")
        p.add_argument("--n", type=int, required=True, help="free nodes")


EXPR_HELP = ("expression in t: numbers, pi, e, + - * /, ^ (right-associative), "
             "exp log sin cos sqrt abs")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gengauss",
                                     description="Generalized Gauss-Radau / Gauss-Lobatto rules.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--log-level", default="WARNING",
                        choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("rule", help="build a rule and write its nodes and weights")
    _add_rule_args(p)
    _add_common(p)
    p.set_defaults(handler=cmd_rule)

    p = sub.add_parser("check", help="positivity / exactness / error-identity / bound checks")
    _add_rule_args(p, with_n=False)
    p.add_argument("--rule", default=None, help="rule JSON file to check instead of a sweep")
    p.add_argument("--n-max", type=int, default=0)
    p.add_argument("--r-max", type=int, default=0)
    p.add_argument("--s-max", type=int, default=0)
    p.add_argument("--sample", type=int, default=None, help="check a random subset of the sweep")
    p.add_argument("--seed", type=int, default=0)
    _add_common(p)
    p.set_defaults(handler=cmd_check, format="csv")

    p = sub.add_parser("integrate", help="apply a rule to f")
    _add_rule_args(p)
    p.add_argument("--f", required=True, help=EXPR_HELP)
    p.add_argument("--exact", type=float, default=None, help="known integral; R(f) is reported")
    _add_common(p)
    p.set_defaults(handler=cmd_integrate)

    p = sub.add_parser("levelset", help="support [A, B] and level-set contours")
    p.add_argument("--a", type=float, required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--b", type=float, required=True)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--rho", type=float, action="append", help="level rho > 1 (repeatable, default 1.05)")
    p.add_argument("--window", type=float, nargs=4, default=None, metavar=("XMIN", "XMAX", "YMIN", "YMAX"))
    p.add_argument("--resolution", type=int, nargs=2, default=list(DEFAULT_RESOLUTION), metavar=("NX", "NY"))
    p.add_argument("--contours", default=None, help="also write the contour CSV here")
    p.add_argument("--jobs", type=int, default=N_JOBS)
    _add_common(p)
    p.set_defaults(handler=cmd_levelset)

    p = sub.add_parser("converge", help="error rate of R_{n, alpha n, beta n}(f)")
    p.add_argument("--measure", required=True)
    p.add_argument("--f", required=True, help=EXPR_HELP)
    p.add_argument("--schedule", action="append", help='"alpha,beta" (repeatable, default "0,0")')
    p.add_argument("--n-min", type=int, default=1)
    p.add_argument("--n-max", type=int, required=True)
    p.add_argument("--step", type=int, default=1)
    p.add_argument("--exact", type=float, default=None)
    p.add_argument("--singularity", default=None, help='nearest singularity of f, e.g. "2" or "0+1i"')
    p.add_argument("--jobs", type=int, default=N_JOBS)
    _add_common(p)
    p.set_defaults(handler=cmd_converge)

    p = sub.add_parser("spline", help="moment-preserving spline on [0, 1]")
    p.add_argument("--f", required=True, help=EXPR_HELP)
    p.add_argument("--m", type=int, required=True, help="spline degree")
    p.add_argument("--n", type=int, required=True, help="free knots")
    p.add_argument("--moments", type=int, default=None, help="highest moment to report (default 2n+m+1)")
    p.add_argument("--samples", type=int, default=DEFAULT_SPLINE_SAMPLES, help="rows of the CSV sampling")
    _add_common(p)
    p.set_defaults(handler=cmd_spline)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=getattr(logging, args.log_level),
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    try:
        return args.handler(args)
    except GenGaussError as e:
        logger.error("%s failed: %s", args.command, e)
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code
