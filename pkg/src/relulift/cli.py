"""Command-line interface.

One executable, one subcommand per pipeline stage:

    enumerate      activation patterns / sign partitions of a CSV dataset
    solve          the lifted convex program (full, partition, or subsampled)
    train          gradient descent on the original objective
    certify        global-optimality certificate for a network JSON
    verify-unique  coordinate bounds over the optimal set
    path           objective profile of a landscape path (CSV / SVG)
    interpolate    realization-interpolating network between two networks
    reproduce      end-to-end checks of the two reference toy problems

All randomness derives from ``--seed``; outputs are JSON on stdout (plus
optional CSV/SVG files), so identical invocations give identical bytes.
Exit codes: 0 success, 1 usage error, 2 failed certification or
reproduction assertion.
"""

import argparse
import json
import sys
from pathlib import Path as FsPath

import numpy as np

from . import __version__
from .arrangement import enumerate_dichotomies, enumerate_trichotomies
from .certificates import check_global_optimality, kkt_check, verify_unique_optimum
from .convex import solve_dichotomy_program, solve_trichotomy_program
from .errors import AssertionFailure, ReluLiftError
from .mappings import psi, split
from .network import NeuralNet, SplitSpec
from .nonconvex import TrainConfig, clarke_residual, objective_nc, train_gd
from .paths import caratheodory_reduce, path_merge, path_to_global, path_to_nearly_minimal
from .problem import ProblemInstance, load_instance


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.exit(1, f"{self.prog}: error: {message}\n")


def _emit(obj, out=None):
    text = json.dumps(obj, sort_keys=True, indent=2)
    if out:
        FsPath(out).write_text(text + "\n")
    else:
        print(text)


def _svg_profile(ts, values, path, width=640, height=400, margin=45):
    """Minimal standalone SVG polyline of an objective profile."""
    ts = np.asarray(ts, dtype=float)
    values = np.asarray(values, dtype=float)
    lo, hi = float(values.min()), float(values.max())
    span = (hi - lo) or 1.0
    xs = margin + (width - 2 * margin) * ts
    ys = height - margin - (height - 2 * margin) * (values - lo) / span
    pts = " ".join(f"{x:.2f},{y:.2f}" for x, y in zip(xs, ys))
    body = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<polyline points="{pts}" fill="none" stroke="black" stroke-width="1.5"/>',
        f'<line x1="{margin}" y1="{height - margin}" x2="{width - margin}" '
        f'y2="{height - margin}" stroke="gray"/>',
        f'<line x1="{margin}" y1="{margin}" x2="{margin}" y2="{height - margin}" stroke="gray"/>',
        f'<text x="{width // 2}" y="{height - 10}" font-size="12" text-anchor="middle">t</text>',
        f'<text x="12" y="{margin - 10}" font-size="12">{hi:.6g}</text>',
        f'<text x="12" y="{height - margin + 14}" font-size="12">{lo:.6g}</text>',
        "</svg>",
    ]
    FsPath(path).write_text("\n".join(body) + "\n")


def _instance_from_args(args):
    return load_instance(args.input, beta=args.beta, loss=args.loss,
                         y_path=getattr(args, "labels", None))


def _scatter_csv(path, rows, header):
    lines = [header] + [",".join(str(v) for v in row) for row in rows]
    FsPath(path).write_text("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# subcommand bodies


def cmd_enumerate(args):
    instance = _instance_from_args(args)
    if args.trichotomies:
        tris = enumerate_trichotomies(instance, cap=args.cap)
        payload = {"schema": 1, "kind": "trichotomies", "count": len(tris),
                   "cells": [{"index": t.index,
                              "signs": [int(s) for s in t.signs],
                              "witness": [float(v) for v in t.witness]} for t in tris]}
    else:
        dics = enumerate_dichotomies(instance, cap=args.cap)
        payload = {"schema": 1, "kind": "dichotomies", "count": len(dics) // 2,
                   "cells": [{"index": d.index,
                              "pattern": [int(b) for b in d.pattern],
                              "positive": d.positive,
                              "witness": [float(v) for v in d.witness]} for d in dics]}
    _emit(payload, args.out)
    return 0


def cmd_solve(args):
    instance = _instance_from_args(args)
    if args.program == "dichotomy":
        cells = enumerate_dichotomies(instance, cap=args.cap)
        report = solve_dichotomy_program(instance, cells, tol=args.tol, max_iter=args.max_iter)
    else:
        cells = enumerate_trichotomies(instance, cap=args.cap)
        subset = None
        if args.subset:
            subset = [int(tok) for tok in args.subset.split(",") if tok]
        report = solve_trichotomy_program(instance, cells, subset=subset,
                                          tol=args.tol, max_iter=args.max_iter)
    _emit(report.to_dict(), args.out)
    return 0


def cmd_train(args):
    instance = _instance_from_args(args)
    config = TrainConfig(m=args.m, seed=args.seed, step_size=args.lr,
                         max_steps=args.steps, stationarity_tol=args.stationarity_tol,
                         init_scale=args.init_scale)
    net, trace = train_gd(instance, config)
    if args.trajectory:
        rows = [(k, f"{o!r}", f"{g!r}") for k, (o, g)
                in enumerate(zip(trace.objectives, trace.grad_norms))]
        _scatter_csv(args.trajectory, rows, "step,objective,residual")
    payload = json.loads(net.to_json())
    payload["objective"] = objective_nc(instance, net)
    payload["steps"] = trace.steps
    payload["stop_reason"] = trace.stop_reason
    payload["clarke_residual"] = clarke_residual(instance, net).residual_norm
    _emit(payload, args.out)
    return 0


def cmd_certify(args):
    instance = _instance_from_args(args)
    net = NeuralNet.from_json(FsPath(args.network).read_text())
    cert = check_global_optimality(instance, net, tol=args.tol)
    _emit(cert.to_dict(), args.out)
    return 0 if cert.is_global else 2


def cmd_verify_unique(args):
    instance = _instance_from_args(args)
    cells = enumerate_dichotomies(instance, cap=args.cap)
    report = solve_dichotomy_program(instance, cells, tol=1e-10)
    cert = kkt_check(instance, cells, report.point)
    uni = verify_unique_optimum(instance, cells, report.objective, epsilon=args.eps)
    payload = {"schema": 1, "unique": uni.unique, "radius_inf": uni.radius_inf,
               "epsilon": uni.epsilon, "objective": report.objective,
               "certified": cert.is_global,
               "failed_coordinates": [list(f) for f in uni.failed]}
    _emit(payload, args.out)
    return 0 if cert.is_global else 2


def cmd_path(args):
    instance = _instance_from_args(args)
    net = NeuralNet.from_json(FsPath(args.network).read_text())
    if args.kind == "to-nearly-minimal":
        path = path_to_nearly_minimal(instance, net)
    elif args.kind == "merge":
        path = path_merge(instance, net)
    elif args.kind == "reduce":
        from .nonconvex import scale_neurons
        _, path = caratheodory_reduce(instance, scale_neurons(net))
    else:  # to-global
        cells = enumerate_dichotomies(instance, cap=args.cap)
        report = solve_dichotomy_program(instance, cells, tol=1e-9)
        cert = kkt_check(instance, cells, report.point)
        if not cert.is_global:
            raise AssertionFailure("solver output could not be certified optimal")
        path = path_to_global(instance, net, psi(report.point))
    ts, objs = path.sample(instance, grid=args.grid)
    if args.csv:
        _scatter_csv(args.csv, [(f"{t!r}", f"{o!r}") for t, o in zip(ts, objs)], "t,objective")
    if args.svg:
        _svg_profile(ts, objs, args.svg)
    payload = {"schema": 1, "claim": path.claim,
               "segments": [list(s) for s in path.segments],
               "objective_start": float(objs[0]), "objective_end": float(objs[-1]),
               "max_increase": float(np.max(np.diff(objs))) if len(objs) > 1 else 0.0}
    _emit(payload, args.out)
    return 0


def cmd_interpolate(args):
    from .paths import interpolate_realization
    instance = _instance_from_args(args)
    net0 = NeuralNet.from_json(FsPath(args.network0).read_text())
    net1 = NeuralNet.from_json(FsPath(args.network1).read_text())
    net = interpolate_realization(instance, net0, net1, args.lam, args.m)
    _emit(json.loads(net.to_json()), args.out)
    return 0


# ---------------------------------------------------------------------------
# reproduction pipelines


def reproduce_fig1(out_dir=None, resolution=101, tol=1e-8):
    """Solve the 1-sample toy landscape both ways and check the known optimum.

    Asserts both optima equal 0.75 within 1e-6 and that the minimizers are
    ``(1/sqrt 2, 1/sqrt 2)`` and ``(1/2, 0)`` within 1e-4; writes the two
    objective grids as CSV when ``out_dir`` is given.
    """
    instance = ProblemInstance(X=[[1.0]], y=[1.0], beta=1.0, loss="squared", loss_scale=2.0)
    cells = enumerate_dichotomies(instance)
    report = solve_dichotomy_program(instance, cells, tol=tol)
    W = report.point.blocks
    # blocks: [pattern 0, pattern 1] x [positive, negative]; v sits on block 2
    v, w = float(W[1, 0]), float(W[3, 0])
    config = TrainConfig(m=1, seed=1, step_size=0.25, max_steps=20000,
                         stationarity_tol=1e-12, init_scale=1.0)
    net, trace = train_gd(instance, config)
    nc_obj = objective_nc(instance, net)
    u, a = float(net.U[0, 0]), float(net.alpha[0])

    root_half = 1.0 / np.sqrt(2.0)
    checks = {
        "convex_objective": (report.objective, 0.75, 1e-6),
        "nonconvex_objective": (nc_obj, 0.75, 1e-6),
        "convex_v": (v, 0.5, 1e-4),
        "convex_w": (w, 0.0, 1e-4),
        "nonconvex_u": (u, root_half, 1e-4),
        "nonconvex_alpha": (a, root_half, 1e-4),
    }
    failures = {k: (got, want) for k, (got, want, tolr) in checks.items()
                if abs(got - want) > tolr}
    files = []
    if out_dir is not None:
        out_dir = FsPath(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        grid = np.linspace(-1.5, 1.5, resolution)
        rows = []
        for uu in grid:
            for aa in grid:
                val = objective_nc(instance, NeuralNet([[uu]], [aa]))
                rows.append((f"{uu!r}", f"{aa!r}", f"{val!r}"))
        _scatter_csv(out_dir / "fig_landscape_nonconvex.csv", rows, "u,alpha,objective")
        gridc = np.linspace(0.0, 1.5, resolution)
        rows = []
        for vv in gridc:
            for ww in gridc:
                val = (1.0 - vv + ww) ** 2 + instance.beta * (vv + ww)
                rows.append((f"{vv!r}", f"{ww!r}", f"{val!r}"))
        _scatter_csv(out_dir / "fig_landscape_convex.csv", rows, "v,w,objective")
        files = ["fig_landscape_nonconvex.csv", "fig_landscape_convex.csv"]
    result = {
        "schema": 1,
        "pass": not failures,
        "convex_objective": report.objective,
        "nonconvex_objective": nc_obj,
        "convex_minimizer": [v, w],
        "nonconvex_minimizer": [u, a],
        "files": files,
    }
    if failures:
        result["failures"] = {k: {"got": g, "want": w_} for k, (g, w_) in failures.items()}
    return result


_EX1_PATTERNS = [[0, 0, 0], [0, 1, 0], [0, 1, 1], [1, 0, 0], [1, 0, 1], [1, 1, 1]]
_EX1_W5 = np.array([0.86, -0.79])


def reproduce_example1(seed=0, out_dir=None):
    """End-to-end check of the 3-sample planar example.

    Asserts the pattern enumeration (p = 6, the known list), the unique
    nonzero block (index 5, value within 0.01 per coordinate of the
    reference), a certified-unique optimum (radius <= 1e-4), and that two
    gradient-descent runs with 5 neurons land on split versions of the
    optimal neuron (colinearity within 1e-2) that certify as global.
    """
    instance = ProblemInstance(X=[[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]],
                               y=[1.0, 0.0, 0.0], beta=0.1, loss="squared")
    failures = {}
    cells = enumerate_dichotomies(instance)
    p = len(cells) // 2
    got_patterns = [[int(b) for b in d.pattern] for d in cells[:p]]
    if got_patterns != _EX1_PATTERNS:
        failures["patterns"] = {"got": got_patterns, "want": _EX1_PATTERNS}

    report = solve_dichotomy_program(instance, cells, tol=1e-10)
    W = report.point.blocks
    nonzero = [i for i in range(W.shape[0]) if np.linalg.norm(W[i]) > 1e-6]
    if nonzero != [4]:
        failures["support"] = {"got": [i + 1 for i in nonzero], "want": [5]}
    w5 = W[4]
    if np.max(np.abs(w5 - _EX1_W5)) > 0.01:
        failures["w5"] = {"got": list(map(float, w5)), "want": list(map(float, _EX1_W5))}
    cert = kkt_check(instance, cells, report.point)
    if not cert.is_global:
        failures["kkt"] = {"gap": cert.stationarity_gap}

    uni = verify_unique_optimum(instance, cells, report.objective, epsilon=1e-4)
    if not uni.unique:
        failures["uniqueness"] = {"radius": uni.radius_inf}

    scatter = []
    for trial, s in enumerate((seed, seed + 1)):
        config = TrainConfig(m=5, seed=s, step_size=0.25, max_steps=60000,
                             stationarity_tol=1e-11, init_scale=0.6)
        net, _ = train_gd(instance, config)
        total = np.zeros(2)
        w5_dir = w5 / np.linalg.norm(w5)
        for i in range(net.m):
            point = net.alpha[i] * net.U[i]
            scatter.append((trial, i, f"{point[0]!r}", f"{point[1]!r}"))
            nrm = float(np.linalg.norm(point))
            if nrm > 1e-6:
                if np.linalg.norm(point / nrm - w5_dir) > 1e-2:
                    failures[f"colinearity_seed{s}_neuron{i}"] = {
                        "direction": list(map(float, point / nrm))}
            total += point
        if np.max(np.abs(total - w5)) > 1e-2:
            failures[f"aggregate_seed{s}"] = {"got": list(map(float, total))}
        gcert = check_global_optimality(instance, net, dichotomies=cells)
        if not gcert.is_global:
            failures[f"certificate_seed{s}"] = {"gap": gcert.stationarity_gap,
                                                "objective": gcert.objective_original}
    files = []
    if out_dir is not None:
        out_dir = FsPath(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        rows = scatter + [("optimal", "-", f"{float(w5[0])!r}", f"{float(w5[1])!r}")]
        _scatter_csv(out_dir / "example_neuron_scatter.csv", rows, "trial,neuron,x,y")
        files = ["example_neuron_scatter.csv"]
    result = {
        "schema": 1,
        "pass": not failures,
        "p": p,
        "objective": report.objective,
        "w5": list(map(float, w5)),
        "uniqueness_radius": uni.radius_inf,
        "files": files,
    }
    if failures:
        result["failures"] = failures
    return result


def cmd_reproduce(args):
    if args.which == "fig1":
        result = reproduce_fig1(out_dir=args.out_dir)
    else:
        result = reproduce_example1(seed=args.seed, out_dir=args.out_dir)
    _emit(result, args.out)
    return 0 if result["pass"] else 2


# ---------------------------------------------------------------------------
# argument wiring


def _add_data_args(sp):
    sp.add_argument("--input", required=True, help="CSV with one sample per row")
    sp.add_argument("--labels", help="separate label CSV (default: last input column)")
    sp.add_argument("--beta", type=float, default=0.1, help="weight-decay strength")
    sp.add_argument("--loss", choices=("squared", "logistic"), default="squared")
    sp.add_argument("--cap", type=int, default=10**6, help="enumeration cell cap")


def build_parser():
    parser = _Parser(prog="relulift", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"relulift {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("enumerate", help="enumerate activation cells")
    _add_data_args(sp)
    sp.add_argument("--trichotomies", action="store_true", help="sign partitions instead of patterns")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_enumerate)

    sp = sub.add_parser("solve", help="solve a lifted convex program")
    _add_data_args(sp)
    sp.add_argument("--program", choices=("dichotomy", "trichotomy"), default="dichotomy")
    sp.add_argument("--subset", help="comma-separated 1-based partition indices")
    sp.add_argument("--tol", type=float, default=None)
    sp.add_argument("--max-iter", type=int, default=200_000)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_solve)

    sp = sub.add_parser("train", help="gradient descent on the original objective")
    _add_data_args(sp)
    sp.add_argument("--m", type=int, default=8, help="hidden width")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--steps", type=int, default=5000)
    sp.add_argument("--lr", type=float, default=0.5)
    sp.add_argument("--stationarity-tol", type=float, default=1e-8)
    sp.add_argument("--init-scale", type=float, default=1.0)
    sp.add_argument("--trajectory", help="write per-step CSV here")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_train)

    sp = sub.add_parser("certify", help="global-optimality certificate for a network")
    _add_data_args(sp)
    sp.add_argument("--network", required=True, help="network JSON file")
    sp.add_argument("--tol", type=float, default=None)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_certify)

    sp = sub.add_parser("verify-unique", help="bound the optimal set coordinate-wise")
    _add_data_args(sp)
    sp.add_argument("--eps", type=float, default=1e-4)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_verify_unique)

    sp = sub.add_parser("path", help="objective profile along a landscape path")
    _add_data_args(sp)
    sp.add_argument("--network", required=True)
    sp.add_argument("--kind", choices=("to-nearly-minimal", "merge", "reduce", "to-global"),
                    default="to-nearly-minimal")
    sp.add_argument("--grid", type=int, default=101)
    sp.add_argument("--csv", help="write (t, objective) CSV here")
    sp.add_argument("--svg", help="write an SVG profile here")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_path)

    sp = sub.add_parser("interpolate", help="realization interpolation between two networks")
    _add_data_args(sp)
    sp.add_argument("--network0", required=True)
    sp.add_argument("--network1", required=True)
    sp.add_argument("--lam", type=float, required=True)
    sp.add_argument("--m", type=int, required=True)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_interpolate)

    sp = sub.add_parser("reproduce", help="reference toy-problem checks")
    sp.add_argument("which", choices=("fig1", "example1"))
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out-dir")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_reproduce)
    return parser


def run(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        print(f"relulift: error: {exc}", file=sys.stderr)
        return 1
    except AssertionFailure as exc:
        print(f"relulift: assertion failed: {exc}", file=sys.stderr)
        return 2
    except ReluLiftError as exc:
        print(f"relulift: error: {exc}", file=sys.stderr)
        return 1


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
