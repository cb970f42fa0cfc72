"""CSV tables behind each reproduced figure, and optional static plots of them.

Every builder returns ``{filename: csv_text}`` so callers decide where the
files go; plotting only reads those tables back.
"""
from __future__ import annotations

import csv
import io
from pathlib import Path

import numpy as np

from . import diffusion, lattice
from .compression import DEFAULT_WINDOW, ratio_csv, rle_complexity, window_ratio_experiment
from .functions import builtin
from .vcomplexity import equidistribute, v_complexity

FIGURES = ("fig2", "fig3", "fig4", "fig6", "fig7", "fig9")

# desk-scale automaton: 200 segments, diffusion time 0.9 at the end
DESK_NODES = 201
DESK_STEPS = 18_000
DESK_REPLICAS = 20
DESK_SAMPLE_EVERY = 200


def fig2(epsilon: float = 0.07) -> dict:
    f = builtin("power", -1, 1, alpha=2)
    rep = equidistribute(f, epsilon)
    xs = np.linspace(f.a, f.b, 401)
    curve = io.StringIO()
    curve.write("x,f,step\n")
    for x, y, q in zip(xs, f(xs), rep.step_fn(xs)):
        curve.write(f"{float(x)!r},{float(y)!r},{float(q)!r}\n")
    return {"approx.csv": rep.to_csv(str(f)), "curve.csv": curve.getvalue()}


def fig3(alphas=None) -> dict:
    alphas = np.arange(0, 5.0001, 0.25) if alphas is None else alphas
    out = io.StringIO()
    out.write("alpha,v,c_rle,argmin_r\n")
    for alpha in alphas:
        f = builtin("power", 0, 1, alpha=float(alpha))
        rc = rle_complexity(f)
        out.write(f"{float(alpha)!r},{float(v_complexity(f))!r},{float(rc.c)!r},{float(rc.argmin_r)!r}\n")
    return {"curve.csv": out.getvalue()}


def fig4(window: int = DEFAULT_WINDOW, r: float = 0.5) -> dict:
    f = builtin("sin2", 0, 1, k=1)
    return {"ratio.csv": ratio_csv(window_ratio_experiment(f, window, r))}


def _desk_run(seed: int, threads: int) -> lattice.ExperimentResult:
    cfg = lattice.SimConfig(DESK_NODES, DESK_STEPS, seed=seed, replicas=DESK_REPLICAS)
    times = range(0, DESK_STEPS + 1, DESK_SAMPLE_EVERY)
    return lattice.run_experiment(cfg, 20, 12, times, threads=threads)


def fig6(seed: int = 0, threads: int = 1) -> dict:
    res = _desk_run(seed, threads)
    out = io.StringIO()
    out.write("time,fraction_top\n")
    for t, ft in zip(res.times, res.fraction_top):
        out.write(f"{t},{float(ft)!r}\n")
    return {"curve.csv": out.getvalue()}


def fig7(seed: int = 0, threads: int = 1) -> dict:
    return {"curve.csv": _desk_run(seed, threads).curve_csv()}


def fig9(threads: int = 1) -> dict:
    times = diffusion.log_times()
    v = diffusion.v_curve(times, threads=threads)
    rle = diffusion.rle_curve(times, threads=threads)
    return {"curve.csv": diffusion.curves_csv(v, rle)}


def build(which: str, seed: int = 0, threads: int = 1) -> dict:
    if which not in FIGURES:
        raise KeyError(which)
    if which in ("fig6", "fig7"):
        return globals()[which](seed=seed, threads=threads)
    if which == "fig9":
        return fig9(threads=threads)
    return globals()[which]()


# columns drawn per figure: (csv file, x column, y columns, log-x)
_PLOTS = {
    "fig2": ("curve.csv", "x", ["f", "step"], False),
    "fig3": ("curve.csv", "alpha", ["v", "c_rle"], False),
    "fig4": ("ratio.csv", "n", ["ratio"], True),
    "fig6": ("curve.csv", "time", ["fraction_top"], False),
    "fig7": ("curve.csv", "time", ["apparent_complexity"], False),
    "fig9": ("curve.csv", "t", ["v_normalized", "rle_normalized"], True),
}


def plot(which: str, out_dir: Path) -> Path:
    """Render ``<which>.png`` from the CSV already written in ``out_dir``."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    name, xcol, ycols, logx = _PLOTS[which]
    with open(out_dir / name, newline="") as fh:
        rows = list(csv.DictReader(line for line in fh if not line.startswith("#")))
    x = [float(r[xcol]) for r in rows]
    fig, ax = plt.subplots(figsize=(6, 4))
    for col in ycols:
        style = "o" if col in ("c_rle", "rle_normalized") else "-"
        ax.plot(x, [float(r[col]) for r in rows], style, label=col, markersize=3)
    if logx:
        ax.set_xscale("log")
    ax.set_xlabel(xcol)
    ax.legend()
    path = out_dir / f"{which}.png"
    fig.savefig(path, dpi=120, bbox_inches="tight")
    plt.close(fig)
    return path
