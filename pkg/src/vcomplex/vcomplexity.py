"""V-complexity and equidistributed step-function approximations.

The complexity of ``f`` on ``[a, b]`` is ``(1/4) * (int |f'|**0.5)**2``.
Two constructions of the approximating step function are provided: the
greedy left-to-right recursion, which keeps the L1 error of every interval
at a fixed budget, and the asymptotic grid obtained by equidistributing
``|f'|**0.5``.
"""
from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import brentq

from .quadrature import DEFAULT_QUADRATURE, QuadratureConfig, integrate

# samples used to bracket level crossings and locate the median level
_SAMPLES = 257


class MedianError(ArithmeticError):
    """Bisection for the L1-optimal constant did not converge."""


class DegenerateFunctionError(ValueError):
    """The function has zero V-complexity, so no graded grid exists."""


@dataclass(frozen=True)
class StepFunction:
    """Piecewise-constant function; ``values[k]`` holds on
    ``(breakpoints[k], breakpoints[k+1]]`` (the first interval is closed)."""

    breakpoints: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        bps = np.asarray(self.breakpoints, dtype=float)
        vals = np.asarray(self.values, dtype=float)
        if bps.ndim != 1 or vals.ndim != 1 or len(bps) != len(vals) + 1:
            raise ValueError("need one more breakpoint than values")
        if len(vals) == 0:
            raise ValueError("a step function needs at least one interval")
        if np.any(np.diff(bps) <= 0):
            raise ValueError("breakpoints must be strictly increasing")
        object.__setattr__(self, "breakpoints", bps)
        object.__setattr__(self, "values", vals)

    @property
    def n_intervals(self) -> int:
        return len(self.values)

    @property
    def domain(self):
        return float(self.breakpoints[0]), float(self.breakpoints[-1])

    def intervals(self):
        return zip(self.breakpoints[:-1], self.breakpoints[1:], self.values)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        idx = np.clip(np.searchsorted(self.breakpoints, x, side="left") - 1,
                      0, len(self.values) - 1)
        y = self.values[idx]
        return float(y) if y.ndim == 0 else y

    def to_csv(self) -> str:
        out = io.StringIO()
        out.write("x_left,x_right,value\n")
        for lo, hi, v in self.intervals():
            out.write(f"{float(lo)!r},{float(hi)!r},{float(v)!r}\n")
        return out.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "StepFunction":
        rows = [ln.split(",") for ln in text.splitlines()
                if ln.strip() and not ln.startswith("#")]
        if rows and rows[0][0].strip() == "x_left":
            rows = rows[1:]
        lefts = [float(r[0]) for r in rows]
        rights = [float(r[1]) for r in rows]
        if any(abs(r - l) > 1e-12 * max(1.0, abs(r)) for r, l in zip(rights[:-1], lefts[1:])):
            raise ValueError("intervals in CSV are not contiguous")
        return cls(np.array(lefts + rights[-1:]), np.array([float(r[2]) for r in rows]))


@dataclass
class ApproxReport:
    step_fn: StepFunction
    per_interval_errors: np.ndarray
    target_epsilon: float
    total_l1_error: float = field(init=False)

    def __post_init__(self):
        self.per_interval_errors = np.asarray(self.per_interval_errors, dtype=float)
        if len(self.per_interval_errors) != self.step_fn.n_intervals:
            raise ValueError("one error per interval required")
        self.total_l1_error = float(math.fsum(self.per_interval_errors))

    @property
    def n_intervals(self) -> int:
        return self.step_fn.n_intervals

    @property
    def v_estimate(self) -> float:
        """N times the realised total error; tends to V(f) as the error shrinks."""
        return self.n_intervals * self.total_l1_error

    def to_csv(self, spec_text: str = "") -> str:
        out = io.StringIO()
        out.write(f"# f={spec_text} epsilon={float(self.target_epsilon)!r} "
                  f"N={self.n_intervals} V_estimate={float(self.v_estimate)!r}\n")
        out.write("x_left,x_right,value,l1_error\n")
        for (lo, hi, v), e in zip(self.step_fn.intervals(), self.per_interval_errors):
            out.write(f"{float(lo)!r},{float(hi)!r},{float(v)!r},{float(e)!r}\n")
        return out.getvalue()


def _slope_density(f):
    return lambda x: np.sqrt(np.abs(f.deriv(x)))


def v_complexity(f, cfg: Optional[QuadratureConfig] = None) -> float:
    """``(1/4) * (integral of |f'|**0.5 over the domain)**2``."""
    total = integrate(_slope_density(f), f.a, f.b, cfg, points=f.critical_points())
    return 0.25 * total * total


def _level_crossings(f, c, d, g, x=None, r=None):
    """Sorted points in (c, d) where f - g changes sign."""
    if x is None:
        x = np.linspace(c, d, _SAMPLES)
        r = f(x) - g
    zero = r == 0
    roots = []
    if zero.any():
        # keep only the ends of each run of exact zeros
        idx = np.flatnonzero(zero)
        ends = idx[np.r_[True, np.diff(idx) > 1] | np.r_[np.diff(idx) > 1, True]]
        roots.extend(x[ends])
    h = lambda t: f(t) - g
    for j in np.flatnonzero(r[:-1] * r[1:] < 0):
        roots.append(brentq(h, x[j], x[j + 1], xtol=1e-15 * max(1.0, abs(x[j]))))
    return sorted(p for p in set(roots) if c < p < d)


def abs_deviation(f, c: float, d: float, g: float,
                  cfg: Optional[QuadratureConfig] = None, _samples=None) -> float:
    """``integral over [c, d] of |f - g|``, split at the crossings of level g."""
    if _samples is None:
        x = np.linspace(c, d, _SAMPLES)
        r = f(x) - g
    else:
        x, r = _samples
    if not np.any(r):
        return 0.0
    edges = [c] + _level_crossings(f, c, d, g, x, r) + [d]
    crit = f.critical_points()
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        pts = [p for p in crit if lo < p < hi]
        total += abs(integrate(lambda t: f(t) - g, lo, hi, cfg, points=pts))
    return total


def _median_level(x, y, max_iter=200):
    """Level g splitting the piecewise-linear interpolant of (x, y) into
    equal measure above and below, by bisection."""
    h = np.diff(x)
    lo_y = np.minimum(y[:-1], y[1:])
    hi_y = np.maximum(y[:-1], y[1:])
    span = hi_y - lo_y
    flat = span == 0
    safe = np.where(flat, 1.0, span)
    half = 0.5 * (x[-1] - x[0])

    def below(g):
        frac = np.where(flat, (lo_y < g) + 0.5 * (lo_y == g),
                        np.clip((g - lo_y) / safe, 0.0, 1.0))
        return float(h @ frac)

    lo, hi = float(y.min()), float(y.max())
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if not lo < mid < hi:
            return mid
        if below(mid) < half:
            lo = mid
        else:
            hi = mid
    raise MedianError(f"median bisection did not converge in {max_iter} iterations")


def optimal_constant(f, c: float, d: float,
                     cfg: Optional[QuadratureConfig] = None) -> tuple[float, float]:
    """L1-optimal constant on ``[c, d]`` and its error.

    The optimum is the median level of f: the value with as much of
    ``[c, d]`` above it as below it.  For monotone f that is f at the
    midpoint, which for an affine piece gives error ``|slope| * (d-c)**2 / 4``.
    """
    if not c < d:
        raise ValueError(f"need c < d, got [{c}, {d}]")
    if c < f.a or d > f.b:
        raise ValueError(f"[{c}, {d}] is not inside [{f.a}, {f.b}]")
    x = np.linspace(c, d, _SAMPLES)
    y = np.asarray(f(x), dtype=float)
    steps = np.diff(y)
    if np.all(steps >= 0) or np.all(steps <= 0):
        g = float(y[_SAMPLES // 2])
    else:
        g = _median_level(x, y)
    return g, abs_deviation(f, c, d, g, cfg, _samples=(x, y - g))


def greedy_equidistribution(f, delta: float,
                            cfg: Optional[QuadratureConfig] = None,
                            max_intervals: int = 1_000_000) -> ApproxReport:
    """Left-to-right step approximation with L1 error ``delta`` per interval.

    Each right endpoint is the largest point whose optimal-constant error
    on the current interval equals ``delta``; the last interval takes the
    remainder and may fall short of the budget.
    """
    if not delta > 0:
        raise ValueError("per-interval error budget must be positive")
    a, b = f.a, f.b
    xtol = 1e-12 * (b - a)
    root_delta = math.sqrt(delta)
    bps, vals, errs = [a], [], []
    x0 = a
    while True:
        if len(vals) >= max_intervals:
            raise RuntimeError(f"more than {max_intervals} intervals; budget too small")
        g_end, e_end = optimal_constant(f, x0, b, cfg)
        if e_end <= delta * (1 + 1e-9) or b - x0 <= xtol:
            bps.append(b)
            vals.append(g_end)
            errs.append(e_end)
            break

        cache = {}

        def excess(x):
            if x <= x0:
                return -root_delta
            cache[x] = optimal_constant(f, x0, x, cfg)
            return math.sqrt(cache[x][1]) - root_delta

        # bracket the endpoint starting from the linearised width
        slope = abs(float(f.deriv(x0)))
        if 0 < slope < math.inf:
            width = 2.0 * math.sqrt(4.0 * delta / slope)
        else:
            width = 1e-6 * (b - x0)
        lo, hi = x0, min(b, x0 + width)
        while hi < b and excess(hi) < 0:
            lo, hi = hi, min(b, x0 + 4.0 * (hi - x0))
        x1 = brentq(excess, lo, hi, xtol=xtol)
        g, e = cache[x1] if x1 in cache else optimal_constant(f, x0, x1, cfg)
        bps.append(x1)
        vals.append(g)
        errs.append(e)
        x0 = x1
    # with a budget of epsilon/N per interval the total budget is N * delta
    return ApproxReport(StepFunction(np.array(bps), np.array(vals)), np.array(errs),
                        target_epsilon=len(vals) * delta)


def equidistribute(f, epsilon: float, cfg: Optional[QuadratureConfig] = None,
                   max_passes: int = 4, rel_tol: float = 0.02) -> ApproxReport:
    """Greedy approximation whose total L1 error is close to ``epsilon``.

    The per-interval budget starts at ``epsilon**2 / V(f)`` (so that about
    ``V/epsilon`` intervals share the error) and is rescaled from the
    realised total until it is within ``rel_tol`` of ``epsilon``.
    """
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    v = v_complexity(f, cfg)
    if v == 0:
        rep = greedy_equidistribution(f, epsilon, cfg)
        rep.target_epsilon = epsilon
        return rep
    delta = epsilon * epsilon / v
    best = None
    for _ in range(max_passes):
        rep = greedy_equidistribution(f, delta, cfg)
        if best is None or abs(rep.total_l1_error - epsilon) < abs(best.total_l1_error - epsilon):
            best = rep
        if abs(rep.total_l1_error - epsilon) <= rel_tol * epsilon or rep.total_l1_error == 0:
            break
        delta *= (epsilon / rep.total_l1_error) ** 2
    best.target_epsilon = epsilon
    return best


def asymptotic_grid(f, epsilon: float,
                    cfg: Optional[QuadratureConfig] = None) -> ApproxReport:
    """Breakpoints ``x_k = y(k * epsilon / V)`` from the monitor ``|f'|**0.5``.

    ``y(s)`` is the point where the cumulative integral of ``|f'|**0.5``
    reaches the fraction ``s`` of its total; ``N = round(V / epsilon)`` and
    the last breakpoint is ``b``.  Values are f at interval midpoints.
    """
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    v = v_complexity(f, cfg)
    if v == 0:
        raise DegenerateFunctionError(
            "V(f) = 0: f is constant, represent it exactly with a single interval")
    n = max(1, round(v / epsilon))
    dens = _slope_density(f)
    crit = f.critical_points()
    total = integrate(dens, f.a, f.b, cfg, points=crit)
    step = total * epsilon / v
    xtol = 1e-13 * (f.b - f.a)

    bps = [f.a]
    for _ in range(1, n):
        x0 = bps[-1]
        pts = [p for p in crit if x0 < p]
        mass = lambda x: integrate(dens, x0, x, cfg, points=[p for p in pts if p < x]) - step
        bps.append(brentq(mass, x0, f.b, xtol=xtol))
    bps.append(f.b)
    bps = np.array(bps)
    mids = 0.5 * (bps[:-1] + bps[1:])
    vals = np.asarray(f(mids), dtype=float)
    errs = [abs_deviation(f, lo, hi, q, cfg) for lo, hi, q in zip(bps[:-1], bps[1:], vals)]
    return ApproxReport(StepFunction(bps, vals), np.array(errs), target_epsilon=epsilon)


def l1_distance(f, q: StepFunction, cfg: Optional[QuadratureConfig] = None) -> float:
    """``||f - q||_1`` summed interval by interval."""
    lo, hi = q.domain
    tol = 1e-12 * (f.b - f.a)
    if abs(lo - f.a) > tol or abs(hi - f.b) > tol:
        raise ValueError(f"step function covers [{lo}, {hi}], f lives on [{f.a}, {f.b}]")
    return math.fsum(abs_deviation(f, max(c, f.a), min(d, f.b), v, cfg)
                     for c, d, v in q.intervals())
