"""Command-line entry point: one subcommand per experiment.

Exit codes: 0 success, 2 usage or parse error, 3 numerical failure, 4 I/O
failure.  Settings come from flags, then from ``--config FILE`` (TOML; top
level keys apply to every subcommand, a table named after the subcommand
overrides them), then from the built-in defaults.
"""
from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__, diffusion, figures, lattice
from .compression import (DEFAULT_MIN_MATCH, DEFAULT_WINDOW, experiment_csv, ratio_csv,
                          window_ratio_experiment)
from .functions import SpecParseError, parse_spec
from .quadrature import QuadratureConfig
from .vcomplexity import asymptotic_grid, equidistribute, v_complexity

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

EXIT_USAGE, EXIT_NUMERIC, EXIT_IO = 2, 3, 4


class UsageError(Exception):
    pass


def _float_list(text: str) -> list:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _int_list(text: str) -> list:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def parse_times(text: str) -> np.ndarray:
    """``log:lo,hi,n``, ``lin:lo,hi,n`` or an explicit comma list."""
    kind, sep, rest = text.partition(":")
    try:
        if sep and kind in ("log", "lin"):
            lo, hi, n = rest.split(",")
            space = np.geomspace if kind == "log" else np.linspace
            return space(float(lo), float(hi), int(n))
        return np.array(_float_list(text))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad time list {text!r}")


def _build_parser(suppress: bool = False) -> argparse.ArgumentParser:
    """The full parser; with ``suppress`` no defaults are filled in, which
    tells explicitly given flags apart from defaults."""

    def opt(p, *names, default=None, **kw):
        if suppress:
            default = argparse.SUPPRESS
        elif default is not None and "help" in kw:
            kw["help"] += " (default: %(default)s)"
        p.add_argument(*names, default=default, **kw)

    common = argparse.ArgumentParser(add_help=False)
    opt(common, "--config", type=Path, help="TOML file with settings")
    opt(common, "--out", type=Path, default=Path("out"), help="output directory")
    opt(common, "--seed", type=int, default=0, help="base random seed")
    opt(common, "--threads", type=int, default=1, help="worker threads, 0 = all cores")

    quad = argparse.ArgumentParser(add_help=False)
    opt(quad, "--rel-tol", type=float, default=1e-10, help="quadrature relative tolerance")
    opt(quad, "--abs-tol", type=float, default=1e-12, help="quadrature absolute tolerance")
    opt(quad, "--max-subdivisions", type=int, default=4000, help="quadrature panel budget")

    parser = argparse.ArgumentParser(
        prog="vcomplex", description="V-complexity, compression complexity and "
        "the cream-in-coffee complexity curve.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True

    p = sub.add_parser("vc", parents=[common, quad], help="print V(f)")
    p.add_argument("spec", help="function, e.g. power:alpha=2@-1,1")

    p = sub.add_parser("approx", parents=[common, quad], help="step-function approximation")
    p.add_argument("spec")
    opt(p, "--epsilon", type=float, default=0.07, help="target total L1 error")
    opt(p, "--method", choices=("greedy", "asymptotic"), default="greedy",
        help="greedy recursion or asymptotic grid")

    p = sub.add_parser("compress", parents=[common], help="RLE and LZ77 sizes of a discretisation")
    p.add_argument("spec")
    opt(p, "--dx", type=_float_list, default="0.005,0.0025,0.00125,0.000625",
        help="comma-separated grid widths")
    opt(p, "--r", type=float, default=0.8, help="vertical to horizontal step ratio")
    opt(p, "--window", type=int, default=DEFAULT_WINDOW, help="LZ77 window")
    opt(p, "--min-match", type=int, default=DEFAULT_MIN_MATCH, help="shortest LZ77 match")

    p = sub.add_parser("ratio", parents=[common], help="LZ77 whole/half encoding ratio")
    p.add_argument("spec")
    opt(p, "--n", type=_int_list, default="100,200,500,1000,2000,5000,10000",
        help="comma-separated cell counts")
    opt(p, "--r", type=float, default=0.5, help="vertical to horizontal step ratio")
    opt(p, "--window", type=int, default=DEFAULT_WINDOW, help="LZ77 window")
    opt(p, "--min-match", type=int, default=DEFAULT_MIN_MATCH, help="shortest LZ77 match")

    p = sub.add_parser("lattice", parents=[common], help="lattice gas apparent complexity")
    opt(p, "--nodes", type=int, default=figures.DESK_NODES, help="number of nodes N")
    opt(p, "--steps", type=int, default=figures.DESK_STEPS, help="time steps T")
    opt(p, "--split", type=int, help="last node of the cream region (default: half split)")
    opt(p, "--groups", type=int, default=20, help="coarse-graining groups G")
    opt(p, "--bins", type=int, default=12, help="colour bins B")
    opt(p, "--replicas", type=int, default=figures.DESK_REPLICAS, help="independent runs")
    opt(p, "--sample-every", type=int, default=figures.DESK_SAMPLE_EVERY,
        help="steps between samples")

    p = sub.add_parser("diffusion", parents=[common], help="complexity curves of u(., t)")
    opt(p, "--times", type=parse_times, default="log:1e-4,2,60",
        help="log:lo,hi,n, lin:lo,hi,n or a list")
    opt(p, "--dx", type=float, default=0.0025, help="grid width for the RLE curve")
    opt(p, "--r", type=float, default=0.8, help="vertical to horizontal step ratio")

    p = sub.add_parser("figures", parents=[common], help="tables for one figure")
    p.add_argument("which", help="one of " + ", ".join(figures.FIGURES))
    opt(p, "--plot", action="store_true", help="also render a PNG (needs matplotlib)")
    return parser


def _load_config(path: Path, command: str) -> dict:
    with open(path, "rb") as fh:
        data = tomllib.load(fh)
    merged = {k: v for k, v in data.items() if not isinstance(v, dict)}
    merged.update(data.get(command, {}))
    return {k.replace("-", "_"): v for k, v in merged.items()}


def resolve(argv) -> argparse.Namespace:
    """Flags over config file over defaults."""
    parser = _build_parser()
    args = parser.parse_args(argv)
    given = vars(_build_parser(suppress=True).parse_args(argv))
    if args.config is not None:
        try:
            file_cfg = _load_config(args.config, args.command)
        except tomllib.TOMLDecodeError as exc:
            raise UsageError(f"{args.config}: {exc}")
        # reparse so file values go through the same type conversion as flags
        sub = parser._subparsers._group_actions[0].choices[args.command]
        for key, value in file_cfg.items():
            if key in given or key in ("config", "command"):
                continue
            action = next((a for a in sub._actions if a.dest == key), None)
            if action is None:
                raise UsageError(f"{args.config}: unknown setting {key!r} for {args.command}")
            if isinstance(value, list):
                value = ",".join(str(v) for v in value)
            if action.type is not None and not isinstance(value, bool):
                try:
                    value = action.type(value if action.type in (int, float) else str(value))
                except (TypeError, ValueError) as exc:
                    raise UsageError(f"{args.config}: bad value for {key!r}: {exc}")
            setattr(args, key, value)
    if args.threads == 0:
        args.threads = os.cpu_count() or 1
    if args.threads < 0:
        raise UsageError("--threads must be >= 0")
    return args


def _fmt(value) -> str:
    if isinstance(value, np.ndarray):
        value = value.tolist()
    if isinstance(value, (list, tuple)):
        return ",".join(_fmt(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_manifest(out_dir: Path, args: argparse.Namespace) -> None:
    lines = [f"vcomplex {__version__}"]
    for key in sorted(vars(args)):
        lines.append(f"{key} = {_fmt(getattr(args, key))}")
    (out_dir / "manifest.txt").write_text("\n".join(lines) + "\n")


def _write(out_dir: Path, name: str, text: str) -> Path:
    path = out_dir / name
    with open(path, "w", newline="\n") as fh:
        fh.write(text)
    return path


def _quad(args) -> QuadratureConfig:
    return QuadratureConfig(args.rel_tol, args.abs_tol, args.max_subdivisions)


def cmd_vc(args, out: Path) -> None:
    f = parse_spec(args.spec)
    v = v_complexity(f, _quad(args))
    _write(out, "vc.csv", f"spec,v\n{args.spec},{float(v)!r}\n")
    print(f"{v:.10g}")


def cmd_approx(args, out: Path) -> None:
    f = parse_spec(args.spec)
    build = equidistribute if args.method == "greedy" else asymptotic_grid
    rep = build(f, args.epsilon, _quad(args))
    _write(out, "approx.csv", rep.to_csv(args.spec))
    print(f"N={rep.n_intervals} total_error={rep.total_l1_error:.6g} "
          f"V_estimate={rep.v_estimate:.6g}")


def cmd_compress(args, out: Path) -> None:
    f = parse_spec(args.spec)
    _write(out, "compress.csv", experiment_csv(f, args.r, args.dx, args.window, args.min_match))


def cmd_ratio(args, out: Path) -> None:
    f = parse_spec(args.spec)
    rows = window_ratio_experiment(f, args.window, args.r, args.n, args.min_match)
    _write(out, "ratio.csv", ratio_csv(rows))
    for n, _, _, ratio in rows:
        print(f"n={n} ratio={ratio:.4f}")


def cmd_lattice(args, out: Path) -> None:
    if args.sample_every < 1:
        raise UsageError("--sample-every must be >= 1")
    cfg = lattice.SimConfig(args.nodes, args.steps, args.split, args.seed, args.replicas)
    times = sorted(set(range(0, args.steps + 1, args.sample_every)) | {args.steps})
    res = lattice.run_experiment(cfg, args.groups, args.bins, times, threads=args.threads)
    for t in res.times:
        _write(out, f"profile_t{t}.csv", res.profile_csv(t))
    _write(out, "curve.csv", res.curve_csv())
    print(f"complexity: start={res.complexity[0]} max={max(res.complexity)} "
          f"end={res.complexity[-1]}; fraction_top end={res.fraction_top[-1]:.4f}")


def cmd_diffusion(args, out: Path, filename: str = "curve.csv") -> None:
    v = diffusion.v_curve(args.times, threads=args.threads)
    rle = diffusion.rle_curve(args.times, args.dx, args.r, threads=args.threads)
    _write(out, filename, diffusion.curves_csv(v, rle))


def cmd_figures(args, out: Path) -> None:
    if args.which not in figures.FIGURES:
        raise UsageError(f"unknown figure {args.which!r}; choose from {', '.join(figures.FIGURES)}")
    for name, text in figures.build(args.which, args.seed, args.threads).items():
        _write(out, name, text)
    if args.plot:
        try:
            figures.plot(args.which, out)
        except ImportError:
            raise UsageError("--plot needs matplotlib (pip install 'artifact[plot]')")


COMMANDS = {"vc": cmd_vc, "approx": cmd_approx, "compress": cmd_compress,
            "ratio": cmd_ratio, "lattice": cmd_lattice, "diffusion": cmd_diffusion,
            "figures": cmd_figures}


def main(argv=None) -> int:
    try:
        args = resolve(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    except (UsageError, argparse.ArgumentTypeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO

    out = args.out
    kwargs = {}
    if args.command == "diffusion" and out.suffix == ".csv":
        # `--out curve.csv` names the file itself
        out, kwargs["filename"] = out.parent, out.name
    try:
        out.mkdir(parents=True, exist_ok=True)
        COMMANDS[args.command](args, out, **kwargs)
        write_manifest(out, args)
    except (UsageError, SpecParseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ArithmeticError, RuntimeError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return 0


if __name__ == "__main__":
    sys.exit(main())
