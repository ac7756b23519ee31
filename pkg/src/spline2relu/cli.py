"""Command line entry point: compile splines, verify and evaluate networks,
run rate experiments and basis-system numerics, and emit CSV/SVG artifacts."""

import argparse
import math
import os
import sys
from dataclasses import dataclass

import numpy as np

from . import approx, cpwl, riesz
from .compiler import (compile_fourier_sum, compile_spline, fourier_atom,
                       fourier_oracle, takagi_network)
from .errors import Spline2ReluError
from .network import extract_cpwl, read_network, write_network

DEFAULT_SEED = 42


@dataclass
class RunConfig:
    """Parsed invocation: one command plus its inputs, outputs, and knobs."""

    command: str
    inputs: tuple = ()
    out: str = None
    svg: str = None
    width: int = 8
    grid_n: int = 101
    seed: int = DEFAULT_SEED
    family: str = "takagi"
    alpha: float = 1.0
    ms: tuple = ()
    order: int = 10
    kind: str = None
    index: int = None
    terms: tuple = ()
    K: int = 32
    gap_k: int = 64
    trials: int = 100


def _workers():
    raw = os.environ.get("SPLINE2RELU_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _parse_sizes(text):
    """Size list: either comma separated values or an inclusive a:b range."""
    text = text.strip()
    try:
        if ":" in text:
            lo, hi = text.split(":", 1)
            return tuple(range(int(lo), int(hi) + 1))
        return tuple(int(tok) for tok in text.split(",") if tok)
    except ValueError:
        raise Spline2ReluError(f"bad size list {text!r}; use 'a:b' or 'a,b,c'") from None


def _parse_terms(text):
    """Trigonometric sum terms 'j:a:b,j:a:b' -> ((j, a, b), ...)."""
    out = []
    for tok in text.split(","):
        if not tok:
            continue
        try:
            j, a, b = tok.split(":")
            out.append((int(j), float(a), float(b)))
        except ValueError:
            raise Spline2ReluError(f"bad term {tok!r}; expected index:cos:sin") from None
    return tuple(out)


def _svg_loglog(path, series):
    """Minimal log-log SVG scatter/line plot; series is [(label, xs, ys)]."""
    width, height, margin = 640, 440, 60
    pts = [(x, y) for _, xs, ys in series for x, y in zip(xs, ys)
           if x > 0 and y > 0 and math.isfinite(y)]
    if not pts:
        raise Spline2ReluError("nothing to plot: no positive finite points")
    lx = [math.log10(p[0]) for p in pts]
    ly = [math.log10(p[1]) for p in pts]
    x0, x1 = min(lx), max(lx)
    y0, y1 = min(ly), max(ly)
    x1 = x1 if x1 > x0 else x0 + 1.0
    y1 = y1 if y1 > y0 else y0 + 1.0

    def to_px(x, y):
        px = margin + (math.log10(x) - x0) / (x1 - x0) * (width - 2 * margin)
        py = height - margin - (math.log10(y) - y0) / (y1 - y0) * (height - 2 * margin)
        return px, py

    colors = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd")
    lines = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
             f'<rect x="{margin}" y="{margin}" width="{width - 2 * margin}" '
             f'height="{height - 2 * margin}" fill="none" stroke="black"/>']
    for i, (label, xs, ys) in enumerate(series):
        color = colors[i % len(colors)]
        coords = " ".join("%.2f,%.2f" % to_px(x, y) for x, y in zip(xs, ys)
                          if x > 0 and y > 0 and math.isfinite(y))
        if coords:
            lines.append(f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        lines.append(f'<text x="{margin + 8}" y="{margin + 18 + 16 * i}" '
                     f'fill="{color}" font-size="13">{label}</text>')
    lines.append(f'<text x="{margin}" y="{height - margin + 28}" font-size="12">'
                 f'log10 x in [{x0:.2f}, {x1:.2f}]</text>')
    lines.append(f'<text x="{margin}" y="{margin - 10}" font-size="12">'
                 f'log10 y in [{y0:.2f}, {y1:.2f}]</text>')
    lines.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def _report_line(report):
    text = (f"width={report.width} depth={report.depth} params={report.params} "
            f"budget={report.budget_bound} breakpoints={report.target_breakpoints}")
    if report.note:
        text += f" note={report.note}"
    return text


def _run_compile(cfg):
    target = cpwl.read_spline(cfg.inputs[0])
    net, report = compile_spline(target, cfg.width)
    if cfg.out:
        write_network(net, cfg.out)
    print(_report_line(report))
    return 0


def _run_verify(cfg):
    net = read_network(cfg.inputs[0])
    target = cpwl.read_spline(cfg.inputs[1])
    deviation = cpwl.sup_diff(extract_cpwl(net), target)
    print(f"max deviation = {deviation:.17g}")
    return 0


def _run_eval(cfg):
    net = read_network(cfg.inputs[0])
    xs = np.linspace(0.0, 1.0, cfg.grid_n)
    ys = net.forward(xs)
    rows = ["x,value"] + ["%.17g,%.17g" % (x, y) for x, y in zip(xs, ys)]
    text = "\n".join(rows) + "\n"
    if cfg.out:
        with open(cfg.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def _rates_setup(cfg):
    if cfg.family == "takagi":
        f = approx.TargetFunction(_dyadic_sawtooth_sum(max(cfg.ms) + 20))
        builder = lambda m: takagi_network([2.0 ** -(i + 1) for i in range(m)])
    elif cfg.family == "lip":
        f = approx.TargetFunction(lambda x: np.abs(np.asarray(x, dtype=float) - 0.5),
                                  lip_alpha=(cfg.alpha, 1.0))
        builder = lambda m: approx.lip_alpha_approximant(f, cfg.alpha, m, cfg.width)[0]
    else:
        raise Spline2ReluError(f"unknown rate family {cfg.family!r}")
    return f, builder


def _run_rates(cfg):
    if not cfg.ms:
        raise Spline2ReluError("no sizes given; use --ms")
    f, builder = _rates_setup(cfg)
    records = approx.rate_experiment(f, builder, cfg.ms, grid_n=cfg.grid_n,
                                     workers=_workers())
    text = approx.records_to_csv(records)
    if cfg.out:
        with open(cfg.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if cfg.svg:
        ms = [r.m for r in records]
        errs = [r.sup_error for r in records]
        mlogm = [m * math.log(max(m, 2)) for m in ms]
        _svg_loglog(cfg.svg, [("error vs m", ms, errs),
                              ("error vs m*ln(m)", mlogm, errs)])
    return 0


def _run_riesz(cfg):
    lo, hi = riesz.frame_bounds(cfg.K)
    rows = [("frame_K", float(cfg.K)), ("lambda_min", lo), ("lambda_max", hi)]
    for kind in ("cosine", "sine"):
        rows.append((f"gap_base_{kind}", riesz.operator_gap(kind, cfg.gap_k)))
        rows.append((f"gap_adjoint_{kind}",
                     riesz.operator_gap(kind, cfg.gap_k, adjoint=True)))
    rng = np.random.default_rng(cfg.seed)
    worst = 0.0
    for _ in range(cfg.trials):
        u = rng.uniform(0.0, 1.0, int(rng.integers(2, 16)))
        bound = math.pi ** 4 / 192.0 * float(np.sum(u * u))
        if bound > 0:
            worst = max(worst, riesz.lemsum_lhs(u) / bound)
    rows.append(("lemsum_worst_ratio", worst))
    rows.append(("odd_sum_tail", riesz.odd_square_tail(riesz.ODD_SUM_CAP)))
    text = "\n".join("%s,%.17g" % (name, value) for name, value in rows) + "\n"
    if cfg.out:
        with open(cfg.out, "w") as fh:
            fh.write(text)
    sys.stdout.write(text)
    return 0


def _dyadic_sawtooth_sum(order):
    """Pointwise evaluator of the order-m dyadic sawtooth sum via the closed
    form, usable at depths where the explicit node list would not fit."""
    def evaluate(x):
        xs = np.asarray(x, dtype=float)
        total = np.zeros_like(xs)
        for i in range(order):
            total = total + 2.0 ** -(i + 1) * cpwl.hat_iterate_value(i + 1, xs)
        return total
    return evaluate


def _run_takagi(cfg):
    coeffs = [2.0 ** -(i + 1) for i in range(cfg.order)]
    net = takagi_network(coeffs)
    target = approx.TargetFunction(_dyadic_sawtooth_sum(cfg.order + 20))
    error = approx.measure_sigma(target, net, cfg.grid_n)
    if cfg.out:
        write_network(net, cfg.out)
    print(f"order={cfg.order} width={net.width} depth={net.depth} "
          f"params={net.params} sup_error={error:.17g}")
    return 0


def _run_fourier(cfg):
    if cfg.terms:
        net, report = compile_fourier_sum(cfg.terms, cfg.width)
        target = fourier_oracle(cfg.terms)
        error = cpwl.sup_diff(extract_cpwl(net), target)
        print(_report_line(report) + f" sup_error={error:.17g}")
    elif cfg.kind and cfg.index:
        net = fourier_atom(cfg.kind, cfg.index)
        target = riesz.basis_fn(cfg.kind, cfg.index)
        error = cpwl.sup_diff(extract_cpwl(net), target)
        print(f"kind={cfg.kind} index={cfg.index} width={net.width} "
              f"depth={net.depth} params={net.params} sup_error={error:.17g}")
    else:
        raise Spline2ReluError("give either --terms or both --kind and --index")
    if cfg.out:
        write_network(net, cfg.out)
    return 0


_DISPATCH = {
    "compile": _run_compile,
    "verify": _run_verify,
    "eval": _run_eval,
    "rates": _run_rates,
    "riesz": _run_riesz,
    "takagi": _run_takagi,
    "fourier": _run_fourier,
}


def run(cfg):
    """Execute one parsed command; returns the process exit status."""
    if cfg.command not in _DISPATCH:
        raise Spline2ReluError(f"unknown command {cfg.command!r}")
    if cfg.grid_n < 2:
        raise Spline2ReluError("--grid must be at least 2")
    if cfg.width < 4:
        raise Spline2ReluError("--width must be at least 4")
    return _DISPATCH[cfg.command](cfg)


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="spline2relu",
        description="Compile piecewise-linear functions to exact ReLU networks "
                    "and run the verification experiments.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, grid_default=101):
        p.add_argument("--width", type=int, default=8)
        p.add_argument("--grid", type=int, default=grid_default, dest="grid_n")
        p.add_argument("--seed", type=int, default=DEFAULT_SEED)
        p.add_argument("--out", default=None)
        p.add_argument("--svg", default=None)

    p = sub.add_parser("compile", help="compile a spline file to a network file")
    p.add_argument("spline")
    common(p)

    p = sub.add_parser("verify", help="max deviation between a network and a spline")
    p.add_argument("network")
    p.add_argument("spline")
    common(p)

    p = sub.add_parser("eval", help="evaluate a network file on a uniform grid")
    p.add_argument("network")
    common(p)

    p = sub.add_parser("rates", help="rate experiment CSV for a builder family")
    p.add_argument("--family", choices=("takagi", "lip"), default="takagi")
    p.add_argument("--ms", default="1:12")
    p.add_argument("--alpha", type=float, default=1.0)
    common(p, grid_default=4097)

    p = sub.add_parser("riesz", help="frame bounds, operator gaps, double-sum checks")
    p.add_argument("--K", type=int, default=32)
    p.add_argument("--gap-k", type=int, default=64, dest="gap_k")
    p.add_argument("--trials", type=int, default=100)
    common(p)

    p = sub.add_parser("takagi", help="build the order-m dyadic sawtooth sum network")
    p.add_argument("--order", type=int, default=10)
    common(p, grid_default=10001)

    p = sub.add_parser("fourier", help="build a single atom or a trigonometric sum")
    p.add_argument("--kind", choices=("cosine", "sine"), default=None)
    p.add_argument("--index", type=int, default=None)
    p.add_argument("--terms", default="")
    common(p)

    return parser


def _config_from_args(args):
    cfg = RunConfig(command=args.command, width=args.width, grid_n=args.grid_n,
                    seed=args.seed, out=args.out, svg=args.svg)
    if args.command == "compile":
        cfg.inputs = (args.spline,)
    elif args.command == "verify":
        cfg.inputs = (args.network, args.spline)
    elif args.command == "eval":
        cfg.inputs = (args.network,)
    elif args.command == "rates":
        cfg.family = args.family
        cfg.alpha = args.alpha
        cfg.ms = _parse_sizes(args.ms)
    elif args.command == "riesz":
        cfg.K = args.K
        cfg.gap_k = args.gap_k
        cfg.trials = args.trials
    elif args.command == "takagi":
        cfg.order = args.order
    elif args.command == "fourier":
        cfg.kind = args.kind
        cfg.index = args.index
        cfg.terms = _parse_terms(args.terms)
    return cfg


def main(argv=None):
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return run(_config_from_args(args))
    except Spline2ReluError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
