"""Command-line front end.

Exit codes
----------
0  success
1  a gate failed (``gate``)
2  malformed input, unknown command or demo
3  the signal violates its declared support (``sample``)
4  a gate failed under ``--gate-policy enforce`` (``recover``)
5  recovery finished but a residual exceeded its threshold (``recover``)
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from .errors import GateError, SupportError, ZeroSignal
from .geometry import CompactBox, CountableSet, Lattice
from .grid import Grid, aligned_error
from .paley_wiener import zero_flip_pair
from .recovery import aliasing_counterexample, gram_diagnostic, recover, resolve_threads
from .scenario import headline_dict, load_scenario, scenario_from_dict
from .transforms import SpectrogramSamples, sample_spectrogram
from .uniqueness import gamma_gate, lambda_gate
from .windows import WindowSpec, eval_window

EXIT_OK, EXIT_GATE, EXIT_USAGE, EXIT_SUPPORT, EXIT_ENFORCE, EXIT_RESIDUAL = range(6)

DEMOS = ("zero_flip", "aliasing", "gram_sweep", "airy_profile")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _overrides(args) -> dict:
    threads = getattr(args, "threads", None)
    if threads is None and os.environ.get("PHASELESS_THREADS"):
        threads = resolve_threads(None)
    return {
        "gate_policy": getattr(args, "gate_policy", None),
        "svd_tol": getattr(args, "svd_tol", None),
        "horizon": getattr(args, "lambda_horizon", None),
        "shannon_radius": getattr(args, "shannon_radius", None),
        "seed": getattr(args, "seed", None),
        "threads": threads,
    }


def _scenario(args):
    try:
        sc = load_scenario(args.scenario)
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise UsageError(f"cannot read scenario {args.scenario}: {exc}") from exc
    return sc.with_overrides(**_overrides(args))


def _emit(obj) -> None:
    print(json.dumps(obj, indent=2, sort_keys=True))


def _write_csv(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([f"{v:.17g}" if isinstance(v, float) else v for v in r])


# --------------------------------------------------------------------------
# commands


def cmd_gate(args) -> int:
    sc = _scenario(args)
    lam_rep = lambda_gate(sc.window, sc.K, sc.lam)
    gam_rep = gamma_gate(sc.K, sc.gamma)
    ok = lam_rep.passed and gam_rep.passed
    _emit({"pass": ok, "lambda_gate": lam_rep.to_json(), "gamma_gate": gam_rep.to_json()})
    return EXIT_OK if ok else EXIT_GATE


def cmd_sample(args) -> int:
    sc = _scenario(args)
    try:
        f = sc.synthesize()
        samples = sample_spectrogram(f, sc.window, sc.lam, sc.gamma, sc.horizon, sc.K)
    except SupportError as exc:
        print(f"support violation: {exc}", file=sys.stderr)
        return EXIT_SUPPORT
    samples.write(args.out)
    return EXIT_OK


def cmd_recover(args) -> int:
    sc = _scenario(args)
    try:
        samples = SpectrogramSamples.read(args.samples)
    except (OSError, ValueError, KeyError) as exc:
        raise UsageError(f"cannot read samples {args.samples}: {exc}") from exc
    if args.lambda_horizon is not None and args.lambda_horizon != samples.horizon:
        raise UsageError("--lambda-horizon differs from the horizon stored with the samples")
    truth = None if sc.signal.get("kind") == "zero" else sc.synthesize()
    try:
        report = recover(samples, sc.cfg, truth=truth)
    except GateError as exc:
        _emit({"error": str(exc), "gates": [r.to_json() for r in exc.reports]})
        return EXIT_ENFORCE
    except ZeroSignal as exc:
        print(f"recovery failed: {exc}", file=sys.stderr)
        return EXIT_RESIDUAL
    prefix = Path(args.out_prefix)
    report.estimate.write(f"{prefix}.estimate.gfld")
    out = report.to_json()
    thr = dict(sc.thresholds)
    failed = [k for k, v in thr.items() if report.residuals.get(k, 0.0) > v]
    out["thresholds"] = thr
    out["thresholds_met"] = not failed
    Path(f"{prefix}.report.json").write_text(json.dumps(out, indent=2, sort_keys=True) + "\n")
    if report.aligned_error is not None:
        print(f"aligned_error {report.aligned_error:.6e}")
    for k in failed:
        print(f"residual {k} = {report.residuals[k]:.3e} exceeds {thr[k]:.1e}", file=sys.stderr)
    return EXIT_OK if not failed else EXIT_RESIDUAL


def cmd_gram(args) -> int:
    sc = _scenario(args)
    grid = Grid.covering(sc.K, args.node_spacing) if args.node_spacing else sc.grid
    omega = np.zeros(sc.K.dim) if args.omega is None else np.asarray(args.omega, dtype=float)
    smin, smax, cond = gram_diagnostic(sc.window, omega, sc.lam, sc.horizon, sc.K, grid)
    _emit({"sigma_min": smin, "sigma_max": smax, "cond": cond if math.isfinite(cond) else None,
           "omega": omega.tolist(), "lambda_horizon": sc.horizon, "nodes": grid.size})
    return EXIT_OK


def cmd_window_eval(args) -> int:
    text = args.window
    try:
        data = json.loads(Path(text).read_text()) if Path(text).exists() else json.loads(text)
        w = WindowSpec.from_json(data)
        pts = np.array([[float(c) for c in p.split(",")] for p in args.points])
    except (ValueError, KeyError, TypeError) as exc:
        raise UsageError(f"bad window or points: {exc}") from exc
    vals = eval_window(w, pts)
    out = csv.writer(sys.stdout, lineterminator="\n")
    out.writerow([f"x{j}" for j in range(pts.shape[1])] + ["re", "im"])
    for p, v in zip(pts, vals):
        out.writerow([f"{c:.17g}" for c in p] + [f"{v.real:.17g}", f"{v.imag:.17g}"])
    return EXIT_OK


def _demo_zero_flip(prefix: str) -> dict:
    grid = Grid.centered(4.0, 2.0**-6)
    f, h = zero_flip_pair(1j, grid)
    t = grid.axes()[0]
    fv, hv = f.flat(), h.flat()
    _write_csv(f"{prefix}.zero_flip.csv", ["t", "re_f", "im_f", "re_h", "im_h", "abs_f", "abs_h"],
               [(float(a), float(b.real), float(b.imag), float(c.real), float(c.imag), float(abs(b)), float(abs(c)))
                for a, b, c in zip(t, fv, hv)])
    return {"modulus_gap": float(np.max(np.abs(np.abs(fv) - np.abs(hv)))), "aligned_distance": aligned_error(f, h)}


def _demo_aliasing(prefix: str) -> dict:
    K = CompactBox.symmetric(1.0)
    gamma = Lattice.scaled_integer(1.0)
    w = WindowSpec.standard_gaussian()
    lam = CountableSet.from_lattice(Lattice.scaled_integer(0.25))
    f, h, dev = aliasing_counterexample(K, gamma, w, lam=lam)
    sf = sample_spectrogram(f, w, lam, gamma, 17, K)
    sh = sample_spectrogram(h, w, lam, gamma, 17, K)
    rows = []
    for i, lp in enumerate(sf.lambda_points[:, 0]):
        for j, gp in enumerate(sf.gamma_points[:, 0]):
            rows.append((float(lp), float(gp), float(sf.values[i, j]), float(sh.values[i, j])))
    _write_csv(f"{prefix}.aliasing.csv", ["lambda", "gamma", "spec_f", "spec_h"], rows)
    return {"sample_deviation": dev, "aligned_distance": aligned_error(f, h)}


def _demo_gram_sweep(prefix: str) -> dict:
    K = CompactBox.symmetric(1.0)
    grid = Grid.covering(K, 0.25)
    w = WindowSpec.standard_gaussian()
    lam = CountableSet.from_lattice(Lattice.scaled_integer(0.25))
    rows = []
    for H in (5, 9, 17, 33, 65):
        for om in (0.0, 0.5, 1.0):
            smin, smax, cond = gram_diagnostic(w, [om], lam, H, K, grid)
            rows.append((H, om, smin, smax, cond))
    _write_csv(f"{prefix}.gram_sweep.csv", ["horizon", "omega", "sigma_min", "sigma_max", "cond"], rows)
    return {"rows": len(rows)}


def _demo_airy_profile(prefix: str) -> dict:
    x = np.linspace(-3.0, 3.0, 601)
    airy = eval_window(WindowSpec.airy(0.5), np.stack([x, np.zeros_like(x)], axis=1)).real
    gauss = eval_window(WindowSpec.standard_gaussian(), x).real
    airy_n = airy / airy.max()
    _write_csv(f"{prefix}.airy_profile.csv", ["x", "gaussian", "airy_normalised"],
               [(float(a), float(b), float(c)) for a, b, c in zip(x, gauss, airy_n)])
    return {"points": len(x)}


def cmd_demo(args) -> int:
    if args.name not in DEMOS:
        raise UsageError(f"unknown demo {args.name!r}; choose from {', '.join(DEMOS)}")
    summary = {
        "zero_flip": _demo_zero_flip,
        "aliasing": _demo_aliasing,
        "gram_sweep": _demo_gram_sweep,
        "airy_profile": _demo_airy_profile,
    }[args.name](args.out_prefix)
    _emit({"demo": args.name, **summary})
    return EXIT_OK


def cmd_init(args) -> int:
    data = headline_dict()
    scenario_from_dict(data)  # validate
    Path(args.out).write_text(json.dumps(data, indent=2) + "\n")
    return EXIT_OK


# --------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--gate-policy", choices=("enforce", "warn"))
    common.add_argument("--svd-tol", type=float)
    common.add_argument("--lambda-horizon", type=int)
    common.add_argument("--shannon-radius", type=float)
    common.add_argument("--seed", type=int)
    common.add_argument("--threads", type=int, help="worker threads (fallback: PHASELESS_THREADS)")

    p = _Parser(prog="phaseless", description="Phaseless STFT sampling: gates, sampling and recovery")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("gate", parents=[common], help="check the uniqueness gates of a scenario")
    s.add_argument("scenario")
    s.set_defaults(func=cmd_gate)

    s = sub.add_parser("sample", parents=[common], help="write spectrogram samples (SPEC1)")
    s.add_argument("scenario")
    s.add_argument("out")
    s.set_defaults(func=cmd_sample)

    s = sub.add_parser("recover", parents=[common], help="recover a signal from SPEC1 samples")
    s.add_argument("samples")
    s.add_argument("scenario")
    s.add_argument("out_prefix")
    s.set_defaults(func=cmd_recover)

    s = sub.add_parser("demo", help="write CSV data for a named demonstration")
    s.add_argument("name")
    s.add_argument("out_prefix")
    s.set_defaults(func=cmd_demo)

    s = sub.add_parser("gram", parents=[common], help="singular values of a translate system")
    s.add_argument("scenario")
    s.add_argument("--omega", type=float, nargs="+")
    s.add_argument("--node-spacing", type=float, help="coarser node spacing on K")
    s.set_defaults(func=cmd_gram)

    s = sub.add_parser("init", help="write the reference scenario JSON")
    s.add_argument("out")
    s.set_defaults(func=cmd_init)

    win = sub.add_parser("window", help="window utilities")
    wsub = win.add_subparsers(dest="window_command", required=True, parser_class=_Parser)
    s = wsub.add_parser("eval", help="evaluate a window at points")
    s.add_argument("window", help="WindowSpec JSON text or file")
    s.add_argument("points", nargs="+", help="comma-separated coordinates")
    s.set_defaults(func=cmd_window_eval)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return int(args.func(args))
    except UsageError as exc:
        print(f"phaseless: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
