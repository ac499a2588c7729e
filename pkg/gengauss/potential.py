"""Weighted equilibrium on [-1, 1] with point charges alpha/2 at a and beta/2 at b.

The support [A, B] of the equilibrium measure comes from a two-equation
system with active constraints A = -1 and/or B = 1. Everything else is
expressed through the exterior Riemann map phi of [A, B]: the level function

    level(z) = |phi|^-2 |(1 - phi phi_a) / (phi (phi - phi_a))|^alpha
                        |(1 - phi phi_b) / (phi (phi - phi_b))|^beta

whose superlevel sets {level >= rho^-2} govern geometric convergence rates.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from scipy import ndimage
from scipy.optimize import brentq

from .utils.config import (
    DEFAULT_RESOLUTION, LOG_LEVEL_CEILING, MIN_GRID, N_JOBS, POLE_RAYS, SUPPORT_NEWTON_MAXITER,
    SUPPORT_NEWTON_START, SUPPORT_RESIDUAL_TOL,
)
from .utils.errors import DomainError, NumericError

logger = logging.getLogger(__name__)

CASES = ("interior", "pinA", "pinB", "pinAB")

# extra Newton starts tried after SUPPORT_NEWTON_START
_FALLBACK_STARTS = ((-0.9, 0.9), (-0.2, 0.2), (-0.9, -0.5), (0.5, 0.9), (-0.9, 0.0), (0.0, 0.9))


# --- Riemann map ---

def phi(z, A: float, B: float):
    """Exterior map of [A, B] onto |w| > 1; on the cut the upper-side limit."""
    z = np.asarray(z, dtype=complex)
    w = np.sqrt((z - A) * (z - B))
    plus = (2 * z - A - B + 2 * w) / (B - A)
    minus = (2 * z - A - B - 2 * w) / (B - A)
    mp, mm = np.abs(plus), np.abs(minus)
    tie = np.isclose(mp, mm, rtol=1e-13, atol=0.0)
    upper = np.where(plus.imag >= minus.imag, plus, minus)
    out = np.where(tie, upper, np.where(mp > mm, plus, minus))
    return out[()] if out.ndim == 0 else out


def green_function(z, A: float, B: float):
    """log|phi(z)|, the Green function of the complement of [A, B] with pole at infinity."""
    return np.log(np.abs(phi(z, A, B)))


# --- Support system ---

def _term(weight: float, num: float, den: float) -> float:
    if weight == 0:
        return 0.0
    if den <= 0:
        return math.inf
    return 0.5 * weight * (math.sqrt(num / den) - 1.0)


def support_residuals(A: float, B: float, a: float, alpha: float, b: float, beta: float) -> Tuple[float, float]:
    """(G_B, G_A): left-hand sides minus 1 of the equations tied to B < 1 and A > -1."""
    g_b = _term(alpha, A - a, B - a) + _term(beta, b - A, b - B) - 1.0
    g_a = _term(alpha, B - a, A - a) + _term(beta, b - B, b - A) - 1.0
    return g_b, g_a


def _support_jacobian(A, B, a, alpha, b, beta) -> np.ndarray:
    p, q, u, v = A - a, B - a, b - A, b - B
    ha, hb = 0.5 * alpha, 0.5 * beta
    cross = ha / (2 * math.sqrt(p * q)) - hb / (2 * math.sqrt(u * v))
    return np.array([
        [cross, -ha * math.sqrt(p) / (2 * q ** 1.5) + hb * math.sqrt(u) / (2 * v ** 1.5)],
        [-ha * math.sqrt(q) / (2 * p ** 1.5) + hb * math.sqrt(v) / (2 * u ** 1.5), cross],
    ])


@dataclass(frozen=True)
class LevelSetSpec:
    a: float
    alpha: float
    b: float
    beta: float
    A: float
    B: float
    case: str

    @property
    def case_flags(self) -> Dict[str, bool]:
        return {"A=-1": self.case in ("pinA", "pinAB"), "B=1": self.case in ("pinB", "pinAB")}

    def residuals(self) -> Tuple[float, float]:
        return support_residuals(self.A, self.B, self.a, self.alpha, self.b, self.beta)

    def to_dict(self) -> Dict:
        return {"a": self.a, "alpha": self.alpha, "b": self.b, "beta": self.beta,
                "A": self.A, "B": self.B, "case": self.case}

    @classmethod
    def from_dict(cls, data: Dict) -> "LevelSetSpec":
        return cls(float(data["a"]), float(data["alpha"]), float(data["b"]), float(data["beta"]),
                   float(data["A"]), float(data["B"]), str(data["case"]))


def _converged(g, jac_norm: float) -> bool:
    return max(abs(g[0]), abs(g[1])) <= SUPPORT_RESIDUAL_TOL * (1.0 + jac_norm)


def _newton_interior(a, alpha, b, beta, start) -> Optional[Tuple[float, float]]:
    def feasible(x):
        return -1.0 < x[0] < x[1] < 1.0

    x = np.array(start, dtype=float)
    g = np.array(support_residuals(*x, a, alpha, b, beta))
    for it in range(SUPPORT_NEWTON_MAXITER):
        jac = _support_jacobian(*x, a, alpha, b, beta)
        if _converged(g, np.abs(jac).max()):
            logger.debug("interior Newton converged in %d steps from %s", it, start)
            return float(x[0]), float(x[1])
        try:
            step = np.linalg.solve(jac, -g)
        except np.linalg.LinAlgError:
            return None
        lam = 1.0
        while lam > 1e-10:
            trial = x + lam * step
            if feasible(trial):
                g_trial = np.array(support_residuals(*trial, a, alpha, b, beta))
                if np.all(np.isfinite(g_trial)) and np.abs(g_trial).max() < np.abs(g).max():
                    x, g = trial, g_trial
                    break
            lam *= 0.5
        else:
            return None
    return None


def _root_1d(func: Callable[[float], float], start: float, end: float) -> Optional[float]:
    """Root of func between start (func < 0) and end, walking geometrically toward end."""
    start = start + (end - start) * 2.0 ** -50
    if not func(start) < 0:
        return None
    previous = start
    for k in range(1, 60):
        x = start + (end - start) * (1.0 - 2.0 ** -k)
        fx = func(x)
        if fx > 0:
            if not math.isfinite(fx):
                previous = x
                continue
            return brentq(func, previous, x, xtol=1e-16, rtol=4 * np.finfo(float).eps, maxiter=200)
        previous = x
    fx = func(end)
    if fx > 0 and math.isfinite(fx):
        return brentq(func, previous, end, xtol=1e-16, rtol=4 * np.finfo(float).eps, maxiter=200)
    return None


def solve_support(a: float, alpha: float, b: float, beta: float) -> LevelSetSpec:
    """Support [A, B] by active set: interior, then A = -1, B = 1, both pinned."""
    a, alpha, b, beta = float(a), float(alpha), float(b), float(beta)
    if alpha < 0 or beta < 0:
        raise DomainError(f"charges must be non-negative, got alpha={alpha}, beta={beta}")
    if a > -1 or b < 1:
        raise DomainError(f"need a <= -1 and b >= 1, got a={a}, b={b}")

    def g(A, B):
        return support_residuals(A, B, a, alpha, b, beta)

    def done(A, B, case):
        logger.info("support [%.12g, %.12g] (%s) for a=%g alpha=%g b=%g beta=%g", A, B, case, a, alpha, b, beta)
        return LevelSetSpec(a, alpha, b, beta, A, B, case)

    if alpha > 0 or beta > 0:
        for start in (SUPPORT_NEWTON_START,) + _FALLBACK_STARTS:
            found = _newton_interior(a, alpha, b, beta, start)
            if found is not None:
                return done(*found, "interior")

    # A = -1: the B-equation holds unless B = 1, the A-equation is an inequality
    B = _root_1d(lambda x: g(-1.0, x)[0], -1.0, 1.0)
    if B is not None and g(-1.0, B)[1] <= SUPPORT_RESIDUAL_TOL:
        return done(-1.0, B, "pinA")
    A = _root_1d(lambda x: g(x, 1.0)[1], 1.0, -1.0)
    if A is not None and g(A, 1.0)[0] <= SUPPORT_RESIDUAL_TOL:
        return done(A, 1.0, "pinB")
    g_b, g_a = g(-1.0, 1.0)
    if g_b <= SUPPORT_RESIDUAL_TOL and g_a <= SUPPORT_RESIDUAL_TOL:
        return done(-1.0, 1.0, "pinAB")
    raise NumericError(f"no active set satisfies the support conditions for a={a}, alpha={alpha}, b={b}, beta={beta}")


def f_functional(spec: LevelSetSpec, A: Optional[float] = None, B: Optional[float] = None) -> float:
    """(1 + alpha/2 + beta/2) log((B-A)/4) + (alpha/2) g(a) + (beta/2) g(b); stationary at the support."""
    A = spec.A if A is None else A
    B = spec.B if B is None else B
    value = (1.0 + 0.5 * spec.alpha + 0.5 * spec.beta) * math.log((B - A) / 4.0)
    if spec.alpha:
        value += 0.5 * spec.alpha * float(green_function(spec.a, A, B))
    if spec.beta:
        value += 0.5 * spec.beta * float(green_function(spec.b, A, B))
    return value


# --- Level function ---

def log_level(z, spec: LevelSetSpec):
    """log of the level function; +inf at the poles a, b."""
    w = phi(z, spec.A, spec.B)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = -2.0 * np.log(np.abs(w))
        for charge, pole in ((spec.alpha, spec.a), (spec.beta, spec.b)):
            if charge == 0:
                continue
            wp = complex(phi(pole, spec.A, spec.B))
            num = np.log(np.abs(1.0 - w * wp))
            den = np.log(np.abs(w)) + np.log(np.abs(w - wp))
            out = out + charge * np.where(np.isneginf(den), np.inf, num - den)
    return out


def level_value(z, spec: LevelSetSpec):
    value = np.exp(log_level(z, spec))
    return float(value) if np.ndim(value) == 0 else value


def _on_support(z, spec: LevelSetSpec):
    z = np.asarray(z, dtype=complex)
    return (z.imag == 0) & (z.real >= spec.A) & (z.real <= spec.B)


def membership(z, spec: LevelSetSpec, rho: float):
    """z in E_rho: level >= rho^-2, or z on [A, B]."""
    if not rho > 1:
        raise DomainError(f"rho must exceed 1, got {rho}")
    inside = (log_level(z, spec) >= -2.0 * math.log(rho)) | _on_support(z, spec)
    return bool(inside) if np.ndim(inside) == 0 else inside


def predicted_rate(spec: LevelSetSpec, singularity: complex) -> float:
    """rho^-2 of the level curve through the singularity; 1 when no geometric rate follows."""
    if bool(_on_support(singularity, spec)):
        return 1.0
    return min(1.0, level_value(complex(singularity), spec))


# --- Contours ---

@dataclass
class ContourSet:
    rho: float
    polylines: List[np.ndarray]
    component_count: int
    clipped: bool = False
    closed: List[bool] = field(default_factory=list)
    # connected component of each polyline; the outer and inner boundary of one component share it
    components: List[int] = field(default_factory=list)

    def to_frame(self) -> pd.DataFrame:
        labels = self.components or list(range(len(self.polylines)))
        frames = [pd.DataFrame({"rho": self.rho, "component": label, "x": line[:, 0], "y": line[:, 1]})
                  for label, line in zip(labels, self.polylines)]
        if not frames:
            return pd.DataFrame(columns=["rho", "component", "x", "y"])
        return pd.concat(frames, ignore_index=True)


def default_window(spec: LevelSetSpec, rho: float) -> Tuple[float, float, float, float]:
    center, half = 0.5 * (spec.A + spec.B), 0.5 * (spec.B - spec.A)
    major = 0.5 * half * (rho + 1.0 / rho)
    minor = 0.5 * half * (rho - 1.0 / rho)
    x_lo = min(spec.a, center - 1.5 * major) - 0.25
    x_hi = max(spec.b, center + 1.5 * major) + 0.25
    y = 1.5 * minor + 0.25
    return x_lo, x_hi, -y, y


# corners: 0 bottom-left, 1 bottom-right, 2 top-right, 3 top-left
# edges: 0 bottom, 1 right, 2 top, 3 left
_SEGMENTS = {
    1: ((3, 0),), 2: ((0, 1),), 3: ((3, 1),), 4: ((1, 2),), 6: ((0, 2),), 7: ((3, 2),),
    8: ((2, 3),), 9: ((0, 2),), 11: ((1, 2),), 12: ((3, 1),), 13: ((0, 1),), 14: ((3, 0),),
}
_SADDLES = {
    # (center inside, center outside)
    5: (((0, 1), (2, 3)), ((3, 0), (1, 2))),
    10: (((3, 0), (1, 2)), ((0, 1), (2, 3))),
}


def _edge_key(i: int, j: int, edge: int) -> Tuple[str, int, int]:
    return (("h", i, j), ("v", i, j + 1), ("h", i + 1, j), ("v", i, j))[edge]


def _edge_point(key, x, y, F) -> Tuple[float, float]:
    kind, i, j = key
    if kind == "h":
        f0, f1 = F[i, j], F[i, j + 1]
        t = f0 / (f0 - f1)
        return x[j] + t * (x[j + 1] - x[j]), y[i]
    f0, f1 = F[i, j], F[i + 1, j]
    t = f0 / (f0 - f1)
    return x[j], y[i] + t * (y[i + 1] - y[i])


def _marching_squares(F: np.ndarray, x: np.ndarray, y: np.ndarray) -> Tuple[List[np.ndarray], List[bool]]:
    inside = F >= 0
    case = (inside[:-1, :-1].astype(int) + 2 * inside[:-1, 1:] + 4 * inside[1:, 1:] + 8 * inside[1:, :-1])
    links: Dict[tuple, List[tuple]] = {}
    for i, j in zip(*np.nonzero((case > 0) & (case < 15))):
        c = int(case[i, j])
        if c in _SADDLES:
            center = 0.25 * (F[i, j] + F[i, j + 1] + F[i + 1, j + 1] + F[i + 1, j])
            pairs = _SADDLES[c][0 if center >= 0 else 1]
        else:
            pairs = _SEGMENTS[c]
        for e0, e1 in pairs:
            k0, k1 = _edge_key(i, j, e0), _edge_key(i, j, e1)
            links.setdefault(k0, []).append(k1)
            links.setdefault(k1, []).append(k0)

    visited = set()
    polylines, closed = [], []
    # open chains (ending on the window border) first, then loops
    starts = sorted(links, key=lambda k: (len(links[k]) != 1, k))
    for start in starts:
        if start in visited:
            continue
        chain = [start]
        visited.add(start)
        previous, current = None, start
        while True:
            nxt = [k for k in links[current] if k != previous and k not in visited]
            if not nxt:
                break
            previous, current = current, nxt[0]
            chain.append(current)
            visited.add(current)
        is_closed = len(chain) > 2 and start in links[current]
        points = [_edge_point(k, x, y, F) for k in chain]
        if is_closed:
            points.append(points[0])
        polylines.append(np.array(points))
        closed.append(is_closed)
    return polylines, closed


def _pole_loop(spec: LevelSetSpec, pole: float, level: float, reach: float) -> Optional[np.ndarray]:
    """Closed curve around a pole whose component is smaller than a grid cell."""
    def field_along(theta):
        direction = complex(math.cos(theta), math.sin(theta))
        return lambda r: float(log_level(pole + r * direction, spec)) - level

    points = []
    for theta in np.linspace(0.0, 2 * math.pi, POLE_RAYS, endpoint=False):
        f = field_along(theta)
        r_out = reach
        while f(r_out) >= 0 and r_out < 1e3 * reach:
            r_out *= 2
        r_in = reach * 1e-14
        if not (f(r_in) > 0 > f(r_out)):
            return None
        r = brentq(f, r_in, r_out, xtol=1e-300, rtol=1e-12)
        points.append((pole + r * math.cos(theta), r * math.sin(theta)))
    points.append(points[0])
    return np.array(points)


def _cell_corners_labeled(labels: np.ndarray, x: np.ndarray, y: np.ndarray, px: float) -> bool:
    j = int(np.clip(np.searchsorted(x, px) - 1, 0, len(x) - 2))
    i = int(np.clip(np.searchsorted(y, 0.0) - 1, 0, len(y) - 2))
    return bool(labels[i:i + 2, j:j + 2].any())


def _polyline_component(labels: np.ndarray, x: np.ndarray, y: np.ndarray, line: np.ndarray) -> int:
    """Label of the superlevel component bordered by a marching-squares polyline."""
    px, py = line[0]
    j = int(np.clip(np.searchsorted(x, px) - 1, 0, len(x) - 2))
    i = int(np.clip(np.searchsorted(y, py) - 1, 0, len(y) - 2))
    ids = labels[i:i + 2, j:j + 2].ravel()
    ids = ids[ids > 0]
    return int(np.bincount(ids).argmax()) if ids.size else 0


def trace_contours(spec: LevelSetSpec, rho: float,
                   window: Optional[Sequence[float]] = None,
                   resolution: Sequence[int] = DEFAULT_RESOLUTION,
                   n_jobs: int = N_JOBS) -> ContourSet:
    """Isolines level = rho^-2 by marching squares on log(level) + 2 log(rho)."""
    if not rho > 1:
        raise DomainError(f"rho must exceed 1, got {rho}")
    x_lo, x_hi, y_lo, y_hi = window if window is not None else default_window(spec, rho)
    nx, ny = (int(v) for v in resolution)
    if nx < MIN_GRID or ny < MIN_GRID:
        raise DomainError(f"resolution must be at least {MIN_GRID}x{MIN_GRID}, got {nx}x{ny}")
    if not (x_lo < min(-1.0, spec.a) and x_hi > max(1.0, spec.b) and y_lo < 0 < y_hi):
        raise DomainError("window must contain [-1, 1] and the poles a, b")
    x = np.linspace(x_lo, x_hi, nx)
    y = np.linspace(y_lo, y_hi, ny)
    shift = 2.0 * math.log(rho)

    def row(yi):
        return log_level(x + 1j * yi, spec)

    rows = Parallel(n_jobs=n_jobs, prefer="threads")(delayed(row)(yi) for yi in y)
    F = np.clip(np.array(rows) + shift, -LOG_LEVEL_CEILING, LOG_LEVEL_CEILING)
    F = np.where(np.isnan(F), LOG_LEVEL_CEILING, F)

    mask = F >= 0
    labels, count = ndimage.label(mask)
    clipped = bool(mask[0, :].any() or mask[-1, :].any() or mask[:, 0].any() or mask[:, -1].any())
    polylines, closed = _marching_squares(F, x, y)
    components = [_polyline_component(labels, x, y, line) for line in polylines]

    reach = math.hypot(x[1] - x[0], y[1] - y[0])
    for charge, pole in ((spec.alpha, spec.a), (spec.beta, spec.b)):
        if charge == 0 or _cell_corners_labeled(labels, x, y, pole):
            continue
        loop = _pole_loop(spec, pole, -shift, reach)
        if loop is not None:
            polylines.append(loop)
            closed.append(True)
            count += 1
            components.append(count)

    order = sorted(range(len(polylines)), key=lambda k: (polylines[k][:, 0].min(), polylines[k][:, 1].min()))
    polylines = [polylines[k] for k in order]
    closed = [closed[k] for k in order]
    # renumber components 0, 1, ... from left to right
    renumber: Dict[int, int] = {}
    for k in order:
        renumber.setdefault(components[k], len(renumber))
    components = [renumber[components[k]] for k in order]
    if clipped:
        logger.warning("level set for rho=%g touches the window border; enlarge the window", rho)
    logger.info("rho=%g: %d component(s), %d polyline(s)", rho, count, len(polylines))
    return ContourSet(rho=float(rho), polylines=polylines, component_count=int(count),
                      clipped=clipped, closed=closed, components=components)
