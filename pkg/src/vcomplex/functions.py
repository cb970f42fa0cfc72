"""Real functions on an interval: builtin families and sampled tables.

Every function exposes its value, its derivative and the interior points
where the derivative vanishes or loses smoothness, so quadratures of
``|f'|**0.5`` can split there.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from types import MappingProxyType
from typing import Callable, Mapping, NamedTuple

import numpy as np


class OutOfDomainError(ValueError):
    pass


class SpecParseError(ValueError):
    pass


class _Family(NamedTuple):
    value: Callable
    deriv: Callable
    # interior points where f' vanishes or is singular, given (params, a, b)
    critical: Callable
    defaults: Mapping[str, float]


def _integer_valued(alpha: float) -> bool:
    return float(alpha).is_integer()


def _power(p, x):
    return np.power(x, p["alpha"])


def _dpower(p, x):
    alpha = p["alpha"]
    if alpha == 0:
        return np.zeros_like(x)
    if alpha == 1:
        return np.ones_like(x)
    with np.errstate(divide="ignore"):
        return alpha * np.power(x, alpha - 1)


def _sigmoid(p, x):
    return 1.0 / (1.0 + np.exp(-p["alpha"] * x))


def _dsigmoid(p, x):
    alpha = p["alpha"]
    # written via |x| so large alpha*x cannot overflow
    e = np.exp(-alpha * np.abs(x))
    return alpha * e / (1.0 + e) ** 2


def _cos_critical(p, a, b):
    n = p["n"]
    if n == 0:
        return []
    lo, hi = math.ceil(a * n), math.floor(b * n)
    return [k / n for k in range(lo, hi + 1)]


def _sin2_critical(p, a, b):
    k = p["k"]
    if k == 0:
        return []
    lo, hi = math.ceil(2 * k * a), math.floor(2 * k * b)
    return [j / (2 * k) for j in range(lo, hi + 1)]


FAMILIES: dict[str, _Family] = {
    "power": _Family(_power, _dpower, lambda p, a, b: [0.0], {"alpha": 1.0}),
    "quadratic": _Family(
        lambda p, x: p["c"] * (x - p["shift"]) ** 2,
        lambda p, x: 2 * p["c"] * (x - p["shift"]),
        lambda p, a, b: [p["shift"]],
        {"c": 1.0, "shift": 0.0}),
    "quartic": _Family(
        lambda p, x: p["c"] * x ** 4,
        lambda p, x: 4 * p["c"] * x ** 3,
        lambda p, a, b: [0.0],
        {"c": 1.0}),
    "sigmoid": _Family(_sigmoid, _dsigmoid, lambda p, a, b: [], {"alpha": 1.0}),
    "cos": _Family(
        lambda p, x: np.cos(p["n"] * np.pi * x),
        lambda p, x: -p["n"] * np.pi * np.sin(p["n"] * np.pi * x),
        _cos_critical,
        {"n": 1.0}),
    "sin2": _Family(
        lambda p, x: np.sin(p["k"] * np.pi * x) ** 2,
        lambda p, x: p["k"] * np.pi * np.sin(2 * p["k"] * np.pi * x),
        _sin2_critical,
        {"k": 1.0}),
    "const": _Family(
        lambda p, x: np.full_like(x, p["c"]),
        lambda p, x: np.zeros_like(x),
        lambda p, a, b: [],
        {"c": 0.0}),
    "affine": _Family(
        lambda p, x: p["slope"] * x + p["intercept"],
        lambda p, x: np.full_like(x, p["slope"]),
        lambda p, a, b: [],
        {"slope": 1.0, "intercept": 0.0}),
}

# accepted spellings in the text form
_ALIASES = {"constant": "const", "x2": "quadratic", "x4": "quartic",
            "sin_squared": "sin2", "linear": "affine"}


@dataclass(frozen=True, eq=False)
class FunctionSpec:
    """A real function on ``[a, b]``.

    ``family`` names a builtin (see ``FAMILIES``) or is ``"sampled"``, in
    which case ``nodes``/``values`` define a piecewise-linear interpolant.
    Builtins evaluate analytically; sampled derivatives use central
    differences.
    """

    family: str
    a: float
    b: float
    params: Mapping[str, float] = field(default_factory=dict)
    nodes: tuple = ()
    values: tuple = ()
    text: str = ""

    def __post_init__(self):
        if not self.a < self.b:
            raise ValueError(f"empty domain [{self.a}, {self.b}]")
        if self.family == "sampled":
            nodes = np.asarray(self.nodes, dtype=float)
            if len(nodes) < 2 or len(nodes) != len(self.values):
                raise ValueError("sampled function needs >= 2 nodes and one value per node")
            if np.any(np.diff(nodes) <= 0):
                raise ValueError("sample nodes must be strictly increasing")
            if nodes[0] > self.a or nodes[-1] < self.b:
                raise ValueError("sample nodes must span the domain")
            object.__setattr__(self, "_nodes", nodes)
            object.__setattr__(self, "_values", np.asarray(self.values, dtype=float))
            object.__setattr__(self, "params", MappingProxyType({}))
            return
        if self.family not in FAMILIES:
            raise ValueError(f"unknown function family {self.family!r}")
        fam = FAMILIES[self.family]
        unknown = set(self.params) - set(fam.defaults)
        if unknown:
            raise ValueError(f"unknown parameters for {self.family}: {sorted(unknown)}")
        merged = {**fam.defaults, **{k: float(v) for k, v in self.params.items()}}
        if self.family == "power":
            if merged["alpha"] < 0:
                raise ValueError("power family needs alpha >= 0")
            if self.a < 0 and not _integer_valued(merged["alpha"]):
                raise ValueError("x**alpha with non-integer alpha needs a >= 0")
        object.__setattr__(self, "params", MappingProxyType(merged))

    @property
    def kind(self) -> str:
        return "sampled" if self.family == "sampled" else "analytic-builtin"

    @property
    def domain(self) -> tuple[float, float]:
        return (self.a, self.b)

    def _check(self, x):
        x = np.asarray(x, dtype=float)
        if x.size and (np.min(x) < self.a or np.max(x) > self.b or np.isnan(x).any()):
            raise OutOfDomainError(f"argument outside [{self.a}, {self.b}]")
        return x

    def __call__(self, x):
        x = self._check(x)
        if self.family == "sampled":
            y = np.interp(x, self._nodes, self._values)
        else:
            y = FAMILIES[self.family].value(self.params, x)
        return float(y) if y.ndim == 0 else y

    def deriv(self, x):
        x = self._check(x)
        if self.family == "sampled":
            y = self._fd_deriv(x)
        else:
            y = FAMILIES[self.family].deriv(self.params, x)
        return float(y) if np.ndim(y) == 0 else y

    def _fd_deriv(self, x):
        h = np.maximum(1e-6, 1e-6 * np.abs(x))
        lo = np.maximum(x - h, self.a)
        hi = np.minimum(x + h, self.b)
        # one-sided at the endpoints: the clipped side collapses onto x
        f = lambda t: np.interp(t, self._nodes, self._values)
        fd = (f(hi) - f(lo)) / (hi - lo)
        # with both stencil points on one segment the quotient is that
        # segment's slope; use it exactly rather than the rounded difference
        nodes = self._nodes
        seg_lo = np.clip(np.searchsorted(nodes, lo, side="right") - 1, 0, len(nodes) - 2)
        seg_hi = np.clip(np.searchsorted(nodes, hi, side="left") - 1, 0, len(nodes) - 2)
        slopes = np.diff(self._values) / np.diff(nodes)
        return np.where(seg_lo == seg_hi, slopes[seg_lo], fd)

    def critical_points(self) -> list[float]:
        """Interior points where f' vanishes or is not smooth."""
        if self.family == "sampled":
            pts = self._nodes
        else:
            pts = FAMILIES[self.family].critical(self.params, self.a, self.b)
        return [float(p) for p in pts if self.a < p < self.b]

    def __str__(self):
        return self.text or format_spec(self)


def eval_value(f: FunctionSpec, x):
    return f(x)


def eval_deriv(f: FunctionSpec, x):
    return f.deriv(x)


def builtin(family: str, a: float, b: float, **params) -> FunctionSpec:
    return FunctionSpec(family, float(a), float(b), params)


def sampled(nodes, values, a=None, b=None) -> FunctionSpec:
    nodes = tuple(float(v) for v in nodes)
    a = nodes[0] if a is None else a
    b = nodes[-1] if b is None else b
    return FunctionSpec("sampled", float(a), float(b), nodes=nodes,
                        values=tuple(float(v) for v in values))


def read_samples(path) -> tuple[list[float], list[float]]:
    """Two-column ``x,y`` CSV; a non-numeric first row is taken as a header."""
    xs, ys = [], []
    with open(path, newline="") as fh:
        for i, row in enumerate(csv.reader(fh)):
            if not row or row[0].lstrip().startswith("#"):
                continue
            try:
                x, y = float(row[0]), float(row[1])
            except (ValueError, IndexError):
                if i == 0:
                    continue
                raise SpecParseError(f"{path}: bad sample row {row!r}")
            xs.append(x)
            ys.append(y)
    return xs, ys


def parse_spec(text: str, base_dir=None) -> FunctionSpec:
    """Parse the compact form ``family[:k=v,...]@a,b``.

    Examples: ``power:alpha=2@0,1``, ``cos:n=3@0,1``,
    ``sampled:file=data.csv@0,1``.
    """
    try:
        head, dom = text.rsplit("@", 1)
        a_s, b_s = dom.split(",")
        a, b = float(a_s), float(b_s)
    except ValueError:
        raise SpecParseError(f"expected family[:k=v,...]@a,b, got {text!r}") from None
    family, _, arglist = head.partition(":")
    family = _ALIASES.get(family.strip(), family.strip())
    args = {}
    for item in filter(None, (s.strip() for s in arglist.split(","))):
        key, eq, val = item.partition("=")
        if not eq:
            raise SpecParseError(f"parameter {item!r} is not key=value")
        args[key.strip()] = val.strip()
    try:
        if family == "sampled":
            if set(args) != {"file"}:
                raise SpecParseError("sampled functions take exactly one parameter: file")
            path = Path(args["file"])
            if base_dir is not None and not path.is_absolute():
                path = Path(base_dir) / path
            xs, ys = read_samples(path)
            spec = sampled(xs, ys, a, b)
        else:
            spec = FunctionSpec(family, a, b, {k: float(v) for k, v in args.items()})
    except SpecParseError:
        raise
    except (ValueError, OSError) as exc:
        raise SpecParseError(f"{text!r}: {exc}") from None
    object.__setattr__(spec, "text", text)
    return spec


def _num(v: float) -> str:
    # shortest text that parses back to the same float
    short = f"{v:g}"
    return short if float(short) == v else repr(float(v))


def format_spec(f: FunctionSpec) -> str:
    dom = f"{_num(f.a)},{_num(f.b)}"
    if f.family == "sampled":
        return f"sampled:n={len(f.nodes)}@{dom}"
    args = ",".join(f"{k}={_num(v)}" for k, v in f.params.items())
    return f"{f.family}{':' + args if args else ''}@{dom}"
