"""Discretisation of functions into symbol strings, RLE and LZ77 coding,
and the RLE-complexity built from their scaling with the grid width.

Sizes are counted in pairs (RLE) and tokens (LZ77), not bytes.
"""
from __future__ import annotations

import io
import math
from collections import defaultdict, deque
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Sequence, Union

import numpy as np

from .quadrature import gauss_legendre

DEFAULT_WINDOW = 4096
DEFAULT_MIN_MATCH = 2
DEFAULT_R_GRID = tuple(round(0.1 * i, 10) for i in range(31))
DEFAULT_DX_SEQUENCE = (1 / 200, 1 / 400, 1 / 800, 1 / 1600)


class Lz77DecodeError(ValueError):
    pass


# grids and traces -------------------------------------------------------------

@dataclass(frozen=True)
class GridSpec:
    """Uniform grid of width ``dx`` on ``[a, b]`` with vertical step ``r * dx``.

    ``r = 0`` means samples are kept exactly.
    """

    dx: float
    r: float
    a: float = 0.0
    b: float = 1.0
    n: int = field(init=False)

    def __post_init__(self):
        if not self.dx > 0:
            raise ValueError("dx must be positive")
        if self.r < 0:
            raise ValueError("r must be non-negative")
        n = round((self.b - self.a) / self.dx)
        if n < 1 or abs(n * self.dx - (self.b - self.a)) > 1e-9:
            raise ValueError(f"dx={self.dx} does not divide [{self.a}, {self.b}]")
        object.__setattr__(self, "n", n)

    @classmethod
    def over(cls, f, dx: float, r: float) -> "GridSpec":
        return cls(dx, r, f.a, f.b)

    @property
    def dy(self) -> float:
        return self.r * self.dx

    def midpoints(self) -> np.ndarray:
        return self.a + (np.arange(self.n) + 0.5) * self.dx

    def edges(self) -> np.ndarray:
        e = self.a + np.arange(self.n + 1) * self.dx
        e[-1] = self.b
        return np.minimum(e, self.b)


@dataclass(frozen=True)
class DiscretizedTrace:
    symbols: np.ndarray
    grid: GridSpec
    source: object = None

    @property
    def levels(self) -> np.ndarray:
        """Value of the uniform step function on each cell."""
        if self.grid.r == 0:
            return np.asarray(self.symbols, dtype=float)
        return self.symbols * self.grid.dy

    def __str__(self):
        return "".join(str(s) for s in self.symbols)


def _round_half_up(v):
    return np.floor(v + 0.5).astype(np.int64)


def discretize(f, grid: GridSpec) -> DiscretizedTrace:
    """Sample f at cell midpoints and round to the nearest multiple of dy."""
    y = np.asarray(f(grid.midpoints()), dtype=float)
    if grid.r == 0:
        return DiscretizedTrace(y, grid, f)
    return DiscretizedTrace(_round_half_up(y / grid.dy), grid, f)


def cellwise_abs_deviation(f, lefts, rights, levels, subdivisions: int = 4) -> np.ndarray:
    """``integral of |f - level|`` over each cell, for many cells at once.

    Every cell is cut into ``subdivisions`` panels; panels where f crosses
    the level are split at the crossing (found by vectorised bisection), so
    each remaining piece has a smooth, one-signed integrand for the
    Gauss-Legendre rule.
    """
    lefts = np.asarray(lefts, dtype=float)
    rights = np.asarray(rights, dtype=float)
    levels = np.broadcast_to(np.asarray(levels, dtype=float), lefts.shape)
    t = np.linspace(0.0, 1.0, subdivisions + 1)
    edges = lefts[:, None] + (rights - lefts)[:, None] * t
    lo, hi = edges[:, :-1].ravel(), edges[:, 1:].ravel()
    lev = np.repeat(levels, subdivisions)
    r_lo = f(lo) - lev
    r_hi = f(hi) - lev

    cross = np.flatnonzero(r_lo * r_hi < 0)
    split = hi.copy()
    if cross.size:
        a, b = lo[cross].copy(), hi[cross].copy()
        ra, lc = r_lo[cross], lev[cross]
        for _ in range(60):
            m = 0.5 * (a + b)
            rm = f(m) - lc
            left = np.sign(rm) == np.sign(ra)
            a = np.where(left, m, a)
            b = np.where(left, b, m)
        split[cross] = 0.5 * (a + b)

    g = lambda x, lv: f(x) - lv
    # first piece [lo, split], second piece [split, hi] (empty without a crossing)
    first = gauss_legendre(lambda x: g(x, np.repeat(lev, 20)), lo, split)
    second = np.zeros_like(first)
    if cross.size:
        second[cross] = gauss_legendre(lambda x: g(x, np.repeat(lev[cross], 20)),
                                       split[cross], hi[cross])
    per_panel = np.abs(first) + np.abs(second)
    return per_panel.reshape(-1, subdivisions).sum(axis=1)


def uniform_step_error(f, grid: GridSpec, trace: Optional[DiscretizedTrace] = None) -> float:
    """L1 distance between f and the uniform step function of its trace."""
    trace = trace if trace is not None else discretize(f, grid)
    e = grid.edges()
    return math.fsum(cellwise_abs_deviation(f, e[:-1], e[1:], trace.levels))


# run-length encoding ---------------------------------------------------------

@dataclass(frozen=True)
class RlePairs:
    pairs: tuple

    def __len__(self):
        return len(self.pairs)

    @property
    def n_rle(self) -> int:
        return len(self.pairs)

    def expand(self) -> list:
        out = []
        for sym, run in self.pairs:
            out.extend([sym] * run)
        return out


def _as_array(s):
    if isinstance(s, str):
        s = list(s)
    return np.asarray(s)


def rle_encode(s) -> RlePairs:
    """Maximal runs as (symbol, run length) pairs."""
    arr = _as_array(s)
    if arr.size == 0:
        return RlePairs(())
    starts = np.r_[0, np.flatnonzero(arr[1:] != arr[:-1]) + 1]
    runs = np.diff(np.r_[starts, arr.size])
    return RlePairs(tuple(zip(arr[starts].tolist(), runs.tolist())))


def rle_count(s) -> int:
    """Number of RLE pairs, without building them."""
    arr = _as_array(s)
    if arr.size == 0:
        return 0
    return 1 + int(np.count_nonzero(arr[1:] != arr[:-1]))


# LZ77 -------------------------------------------------------------------------

class Literal(NamedTuple):
    symbol: object


class Match(NamedTuple):
    offset: int
    length: int


Token = Union[Literal, Match]


@dataclass(frozen=True)
class Lz77Tokens:
    tokens: tuple
    window: int = DEFAULT_WINDOW

    def __len__(self):
        return len(self.tokens)

    def to_text(self) -> str:
        lines = []
        for t in self.tokens:
            if isinstance(t, Match):
                lines.append(f"M:{t.offset},{t.length}")
            else:
                lines.append(f"L:{t.symbol}")
        return "".join(line + "\n" for line in lines)

    @classmethod
    def from_text(cls, text: str, window: int = DEFAULT_WINDOW) -> "Lz77Tokens":
        tokens = []
        for line in text.splitlines():
            if not line.strip():
                continue
            kind, _, body = line.partition(":")
            if kind == "M":
                off, length = body.split(",")
                tokens.append(Match(int(off), int(length)))
            elif kind == "L":
                tokens.append(Literal(int(body) if body.lstrip("-").isdigit() else body))
            else:
                raise ValueError(f"bad token line {line!r}")
        return cls(tuple(tokens), window)


def lz77_encode(s, window: int = DEFAULT_WINDOW,
                min_match: int = DEFAULT_MIN_MATCH) -> Lz77Tokens:
    """Greedy longest-match LZ77 over a window of ``window`` symbols.

    Matches may overlap the position being coded.  Among equally long
    matches the smallest offset wins.  Candidate starts are found through
    hash chains keyed on the first ``min_match`` symbols.
    """
    if window < 1:
        raise ValueError("window must be >= 1")
    if min_match < 2:
        raise ValueError("min_match must be >= 2")
    seq = list(s) if not isinstance(s, np.ndarray) else s.tolist()
    n = len(seq)
    chains: dict = defaultdict(deque)
    tokens = []
    inserted = 0  # positions < inserted are in the chains

    def insert_upto(end):
        nonlocal inserted
        last = min(end, n - min_match + 1)
        while inserted < last:
            chains[tuple(seq[inserted:inserted + min_match])].append(inserted)
            inserted += 1

    i = 0
    while i < n:
        best_len, best_off = 0, 0
        if i + min_match <= n:
            chain = chains.get(tuple(seq[i:i + min_match]))
            if chain:
                while chain and i - chain[0] > window:
                    chain.popleft()
                limit = n - i
                # newest first, so the first match of a given length has the smallest offset
                for j in reversed(chain):
                    if best_len and seq[j + best_len] != seq[i + best_len]:
                        continue
                    if seq[j:j + best_len] != seq[i:i + best_len]:
                        continue
                    length = best_len
                    while length < limit and seq[j + length] == seq[i + length]:
                        length += 1
                    if length > best_len:
                        best_len, best_off = length, i - j
                        if length == limit:
                            break
        if best_len >= min_match:
            tokens.append(Match(best_off, best_len))
            i += best_len
        else:
            tokens.append(Literal(seq[i]))
            i += 1
        insert_upto(i)
    return Lz77Tokens(tuple(tokens), window)


def lz77_decode(t: Union[Lz77Tokens, Sequence[Token]]) -> list:
    tokens = t.tokens if isinstance(t, Lz77Tokens) else t
    window = t.window if isinstance(t, Lz77Tokens) else None
    out = []
    for tok in tokens:
        if isinstance(tok, Match):
            off, length = tok
            if off < 1 or off > len(out) or length < 1:
                raise Lz77DecodeError(f"match {tok} refers before the start of the output")
            if window is not None and off > window:
                raise Lz77DecodeError(f"match {tok} reaches beyond the window {window}")
            start = len(out) - off
            for k in range(length):
                out.append(out[start + k])
        else:
            out.append(tok.symbol)
    return out


# scaling factors and RLE-complexity -------------------------------------------

@dataclass
class EtaGamma:
    r: float
    eta: float
    gamma: float
    eta_residual: float
    gamma_residual: float
    rows: list  # (dx, n, n_rle, l1_error)

    @property
    def non_scaling(self) -> bool:
        return max(self.eta_residual, self.gamma_residual) > 0.2


def _slope_through_origin(x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    slope = float(x @ y / (x @ x))
    norm = float(np.linalg.norm(y))
    resid = float(np.linalg.norm(y - slope * x)) / norm if norm > 0 else 0.0
    return slope, resid


def measure_grid(f, dx: float, r: float) -> tuple:
    """(n, N_RLE, L1 error) of the uniform discretisation at (dx, r)."""
    grid = GridSpec.over(f, dx, r)
    trace = discretize(f, grid)
    # r = 0 keeps every sample in its own bin: no run merging by definition
    n_rle = grid.n if r == 0 else rle_count(trace.symbols)
    return grid.n, n_rle, uniform_step_error(f, grid, trace)


def estimate_eta_gamma(f, r: float, dx_sequence=DEFAULT_DX_SEQUENCE) -> EtaGamma:
    """Fit ``N_RLE = eta * n`` and ``error = gamma * dx`` through the origin."""
    dx_sequence = list(dx_sequence)
    if len(dx_sequence) < 3:
        raise ValueError("need at least three grid widths")
    rows = [(dx, *measure_grid(f, dx, r)) for dx in dx_sequence]
    ns = [row[1] for row in rows]
    if r == 0:
        eta, eta_res = 1.0, 0.0
    else:
        eta, eta_res = _slope_through_origin(ns, [row[2] for row in rows])
    gamma, gamma_res = _slope_through_origin(dx_sequence, [row[3] for row in rows])
    return EtaGamma(r, eta, gamma, eta_res, gamma_res, rows)


@dataclass
class RleComplexity:
    c: float
    argmin_r: float
    table: list = field(repr=False)  # EtaGamma per r


def rle_complexity(f, r_grid=DEFAULT_R_GRID, dx_sequence=DEFAULT_DX_SEQUENCE) -> RleComplexity:
    """Minimum over the r grid of ``eta(r) * gamma(r) * (b - a)``.

    That product is the limit of ``N_RLE * error`` as dx shrinks, since
    ``N_RLE * error = eta * n * gamma * dx`` and ``n * dx = b - a``.
    """
    r_grid = list(r_grid)
    if 0 not in r_grid:
        raise ValueError("the r grid must include 0")
    table = [estimate_eta_gamma(f, r, dx_sequence) for r in r_grid]
    length = f.b - f.a
    products = [eg.eta * eg.gamma * length for eg in table]
    k = int(np.argmin(products))  # first minimum: ties go to the smaller r
    return RleComplexity(products[k], r_grid[k], table)


def window_ratio_experiment(f, window: int = DEFAULT_WINDOW, r: float = 0.5,
                            n_values=(100, 200, 500, 1000, 2000, 5000, 10000),
                            min_match: int = DEFAULT_MIN_MATCH) -> list:
    """LZ77 token counts over the left half of the domain (l1) and the whole
    domain (l2) on the same grid, for each number of cells n.

    Returns rows ``(n, l1, l2, l2 / l1)``.
    """
    rows = []
    for n in n_values:
        if n < 2 or n % 2:
            raise ValueError("n must be an even number >= 2")
        grid = GridSpec((f.b - f.a) / n, r, f.a, f.b)
        symbols = discretize(f, grid).symbols
        l1 = len(lz77_encode(symbols[: n // 2], window, min_match))
        l2 = len(lz77_encode(symbols, window, min_match))
        rows.append((n, l1, l2, l2 / l1))
    return rows


def experiment_csv(f, r: float, dx_sequence, window: int = DEFAULT_WINDOW,
                   min_match: int = DEFAULT_MIN_MATCH) -> str:
    out = io.StringIO()
    out.write("dx,n,n_rle,lz77_tokens,l1_error\n")
    for dx in dx_sequence:
        grid = GridSpec.over(f, dx, r)
        trace = discretize(f, grid)
        n_rle = grid.n if r == 0 else rle_count(trace.symbols)
        tokens = len(lz77_encode(trace.symbols, window, min_match)) if r > 0 else grid.n
        out.write(f"{float(dx)!r},{grid.n},{n_rle},{tokens},{uniform_step_error(f, grid, trace)!r}\n")
    return out.getvalue()


def ratio_csv(rows) -> str:
    out = io.StringIO()
    out.write("n,l1,l2,ratio\n")
    for n, l1, l2, ratio in rows:
        out.write(f"{n},{l1},{l2},{float(ratio)!r}\n")
    return out.getvalue()
