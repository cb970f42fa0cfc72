"""Fourier solution of u_t = D u_xx on [-1, 1] with zero-flux ends, starting
from 1 on [-1, 0) and 0 on (0, 1], and complexity curves of u(., t)."""
from __future__ import annotations

import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.special import ndtr

from .compression import measure_grid
from .quadrature import QuadratureConfig
from .vcomplexity import v_complexity

T_MIN = 1e-9
# below this D*t, u and u_x are summed over mirror images instead of modes
IMAGE_SUM_BELOW = 0.25


class SlowConvergenceError(ArithmeticError):
    pass


@dataclass(frozen=True)
class DiffusionSolution:
    diffusivity: float = 1.0
    tol: float = 1e-12
    max_terms: int = 100_000

    def __post_init__(self):
        if not self.diffusivity > 0:
            raise ValueError("diffusivity must be positive")
        if self.max_terms < 1:
            raise ValueError("max_terms must be >= 1")

    def n_terms(self, t: float, deriv: bool = False) -> int:
        """Terms kept at time t: the first k whose envelope drops below tol."""
        # envelope of term k: (2/pi) e^{-w_k^2 D t} / (2k-1), or e^{-w_k^2 D t} for u_x
        dt = self.diffusivity * t
        k = 1
        while k <= self.max_terms:
            m = 2 * k - 1
            env = math.exp(-(m * math.pi / 2) ** 2 * dt)
            if not deriv:
                env *= (2 / math.pi) / m
            if env < self.tol:
                return k
            k += 1
        raise SlowConvergenceError(
            f"series needs more than {self.max_terms} terms at t={t:g}; use t >= {T_MIN:g}")

    def _modes(self, t, deriv):
        k = self.n_terms(t, deriv)
        m = 2 * np.arange(1, k + 1) - 1
        w = m * np.pi / 2
        return m, w, np.exp(-w ** 2 * self.diffusivity * t)


def _check_t(t):
    if 0 < t < T_MIN:
        raise SlowConvergenceError(f"t={t:g} is below the supported minimum; use t >= {T_MIN:g}")


def _check_x(x):
    x = np.asarray(x, dtype=float)
    if x.size and (np.nanmin(x) < -1 or np.nanmax(x) > 1 or np.isnan(x).any()):
        raise ValueError("x must lie in [-1, 1]")
    return x


def u(x, t: float, sol: Optional[DiffusionSolution] = None):
    sol = sol or DiffusionSolution()
    x = _check_x(x)
    if t < 0:
        raise ValueError("t must be >= 0")
    _check_t(t)
    if t == 0:
        y = np.where(x < 0, 1.0, np.where(x > 0, 0.0, 0.5))
    elif sol.diffusivity * t < IMAGE_SUM_BELOW:
        y = _value_images(x, sol.diffusivity * t)
    else:
        m, w, decay = sol._modes(t, False)
        y = 0.5 - (2 / np.pi) * (np.sin(np.multiply.outer(x, w)) @ (decay / m))
    return float(y) if np.ndim(y) == 0 else y


def u_x(x, t: float, sol: Optional[DiffusionSolution] = None):
    sol = sol or DiffusionSolution()
    x = _check_x(x)
    if not t > 0:
        raise ValueError("u_x needs t > 0")
    _check_t(t)
    dt = sol.diffusivity * t
    if dt < IMAGE_SUM_BELOW:
        y = _slope_images(x, dt)
    else:
        _, w, decay = sol._modes(t, True)
        y = -(np.cos(np.multiply.outer(x, w)) @ decay)
    return float(y) if np.ndim(y) == 0 else y


def _value_images(x, dt):
    """u as the heat kernel applied to the even extension of the initial
    state: 1 on (4k-2, 4k), 0 on (4k, 4k+2)."""
    sigma = math.sqrt(2 * dt)
    reach = 1 + sigma * 40
    k = np.arange(math.floor((-1 - reach) / 4), math.ceil((1 + reach + 2) / 4) + 1)
    lo = (np.subtract.outer(4.0 * k - 2, x)) / sigma
    hi = (np.subtract.outer(4.0 * k, x)) / sigma
    # P(lo < Z < hi), taken from the tail nearer zero to avoid 1 - 1
    upper = lo > 0
    mass = np.where(upper, ndtr(-lo) - ndtr(-hi), ndtr(hi) - ndtr(lo))
    return mass.sum(axis=0)


def _slope_images(x, dt):
    """u_x as a sum of heat kernels at 2j with sign (-1)**j.

    Same function as the cosine series, but without the cancellation that
    leaves ~1e-14 noise where the true slope is far smaller.
    """
    reach = math.sqrt(4 * dt * 40)
    j = np.arange(-math.ceil((1 + reach) / 2) - 1, math.ceil((1 + reach) / 2) + 2)
    d = np.subtract.outer(x, 2.0 * j)
    kern = np.exp(-d ** 2 / (4 * dt)) / math.sqrt(4 * math.pi * dt)
    return -(kern @ np.where(j % 2 == 0, 1.0, -1.0))


class Profile:
    """u(., t) as a function on [-1, 1], usable wherever a FunctionSpec is."""

    a, b = -1.0, 1.0

    def __init__(self, t: float, sol: Optional[DiffusionSolution] = None):
        if not t > 0:
            raise ValueError("profiles need t > 0")
        self.t = t
        self.sol = sol or DiffusionSolution()

    def __call__(self, x):
        return u(x, self.t, self.sol)

    def deriv(self, x):
        return u_x(x, self.t, self.sol)

    def critical_points(self):
        # the slope is concentrated in a layer of width ~sqrt(t) around 0
        s = math.sqrt(self.sol.diffusivity * self.t)
        return sorted({0.0, *(p for p in (-4 * s, -s, s, 4 * s) if -1 < p < 1)})

    def __str__(self):
        return f"u(x,t={self.t:g})"


@dataclass(frozen=True)
class ComplexityCurve:
    times: np.ndarray
    values: np.ndarray
    label: str
    normalization: str = "raw"

    def __post_init__(self):
        if len(self.times) != len(self.values):
            raise ValueError("times and values differ in length")

    def normalized(self) -> "ComplexityCurve":
        peak = float(np.max(self.values))
        if not peak > 0:
            raise ValueError("cannot normalise a curve whose maximum is not positive")
        return ComplexityCurve(self.times, np.asarray(self.values) / peak,
                               self.label, "max-normalized")


def log_times(lo: float = 1e-4, hi: float = 2.0, n: int = 60) -> np.ndarray:
    return np.geomspace(lo, hi, n)


def _map(fn, items, threads):
    if threads <= 1:
        return [fn(t) for t in items]
    with ThreadPoolExecutor(threads) as pool:
        return list(pool.map(fn, items))


def v_curve(times: Sequence[float], sol: Optional[DiffusionSolution] = None,
            cfg: Optional[QuadratureConfig] = None, threads: int = 1) -> ComplexityCurve:
    sol = sol or DiffusionSolution()
    times = np.asarray(times, dtype=float)
    if np.any(times <= 0):
        raise ValueError("v_curve needs t > 0")
    vals = _map(lambda t: v_complexity(Profile(t, sol), cfg), times, threads)
    return ComplexityCurve(times, np.array(vals), "v_complexity")


def rle_product(t: float, dx: float = 1 / 400, r: float = 0.8,
                sol: Optional[DiffusionSolution] = None) -> float:
    """N_RLE times the L1 error of the uniform discretisation of u(., t)."""
    _, n_rle, err = measure_grid(Profile(t, sol), dx, r)
    return n_rle * err


def rle_curve(times: Sequence[float], dx: float = 1 / 400, r: float = 0.8,
              sol: Optional[DiffusionSolution] = None, threads: int = 1) -> ComplexityCurve:
    times = np.asarray(times, dtype=float)
    if np.any(times <= 0):
        raise ValueError("rle_curve needs t > 0")
    vals = _map(lambda t: rle_product(t, dx, r, sol), times, threads)
    return ComplexityCurve(times, np.array(vals), "rle_product")


def curves_csv(v: ComplexityCurve, rle: ComplexityCurve) -> str:
    vn, rn = v.normalized(), rle.normalized()
    out = io.StringIO()
    out.write("t,v_complexity,v_normalized,rle_product,rle_normalized\n")
    for row in zip(v.times, v.values, vn.values, rle.values, rn.values):
        out.write(",".join(repr(float(c)) for c in row) + "\n")
    return out.getvalue()
