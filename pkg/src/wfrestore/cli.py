"""Command line entry point: ``wfrestore {transform,restore,bounds,sweep,verify}``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import fileio
from .bounds import BoundParams, bounds_table, empirical_error, lemma1_constant
from .framelets import bspline_bank
from .harness import ExperimentConfig, run_sweep, summarize
from .operators import draw_sample_set, make_measurement, make_operator, sample_count
from .solver import Problem, SolverConfig, solve
from .transform import LambdaWeights, analyze, dyadic_exponent, synthesize

log = logging.getLogger("wfrestore")


def _bank_arg(value: str):
    return bspline_bank(int(value) if value.isdigit() else value)


def _operator_arg(args) -> dict:
    if args.operator_json:
        return json.loads(args.operator_json)
    return {"kind": args.operator}


def cmd_transform(args) -> int:
    bank = _bank_arg(args.order)
    if args.bank_out:
        fileio.write_bank(args.bank_out, bank)
    if args.direction == "analyze":
        u = fileio.read_image(args.input, args.M)
        fileio.write_coefficients(args.output, analyze(u, bank, args.levels))
    else:
        c = fileio.read_coefficients(args.input)
        if c.order != bank.order:
            bank = bspline_bank(c.order)
        fileio.write_image(args.output, synthesize(c, bank), args.M)
    return 0


def cmd_restore(args) -> int:
    op = make_operator(_operator_arg(args))
    truth = None
    if args.measurements:
        if args.size is None:
            raise SystemExit("--size is required with --measurements")
        meas = fileio.read_measurement(args.measurements, args.size, args.eta)
    else:
        if args.image is None:
            raise SystemExit("give --image (ground truth to sample) or --measurements")
        truth = fileio.read_image(args.image, args.M)
        n = truth.shape[0]
        if args.sample_set:
            sset = fileio.read_sample_set(args.sample_set, n)
        else:
            sset = draw_sample_set(n, sample_count(n, args.rho), args.seed)
        meas = make_measurement(op, truth, sset, args.eta, seed=args.seed)
        if args.measurements_out:
            fileio.write_measurement(args.measurements_out, meas)
    n = meas.sample_set.n
    dyadic_exponent(n)
    bank = _bank_arg(args.order)
    weights = LambdaWeights.schedule(args.beta, n, args.levels, bank.order)
    cfg = SolverConfig(mu=args.mu, kappa=args.kappa, max_outer=args.max_outer,
                       tol_rel=args.tol_rel, trace_path=args.trace)
    res = solve(Problem(op, meas, args.M), weights, bank, args.levels, cfg)
    fileio.write_image(args.output, res.u_star, args.M)
    report = {"iterations": res.iterations, "objective": res.objective,
              "residual": res.residual, "converged": res.converged}
    if truth is not None:
        report["emp_error"] = empirical_error(res.u_star, truth)
    for k, v in report.items():
        print(f"{k:>12}  {v}")
    return 0


def cmd_bounds(args) -> int:
    sigma_min, norm_inf = make_operator(_operator_arg(args)).constants()
    p = BoundParams(M=args.M, beta=args.beta, a=args.a,
                    C_W=args.C_W if args.C_W is not None else lemma1_constant(_bank_arg(args.order).order),
                    C_f=args.C_f,
                    sigma_min=args.sigma_min if args.sigma_min is not None else float(sigma_min),
                    norm_inf=args.norm_inf if args.norm_inf is not None else float(norm_inf),
                    rho=args.rho, eta=args.eta, omega=args.N**2)
    table = bounds_table(p, args.m, args.radius)
    if args.format == "csv":
        fileio.write_table(sys.stdout, table)
    else:
        width = max(map(len, table))
        for k, v in table.items():
            print(f"{k:<{width}}  {v:.10g}")
    return 0


def cmd_sweep(args) -> int:
    data = json.loads(Path(args.config).read_text()) if args.config else {}
    overrides = {"sizes": args.sizes, "rhos": args.rhos, "realizations": args.realizations,
                 "eta": args.eta, "output": args.output, "workers": args.workers,
                 "anchor": args.anchor, "function": args.function}
    data.update({k: v for k, v in overrides.items() if v is not None})
    if args.operator:
        data["operator"] = {"kind": args.operator}
    cfg = ExperimentConfig.from_dict(data)
    out = Path(cfg.output or "sweep")
    out.mkdir(parents=True, exist_ok=True)
    records = run_sweep(cfg)
    summary = summarize(cfg, records)
    fileio.write_records(out / "records.csv", records)
    fileio.write_summary(out / "summary.csv", summary)
    cfg.dump(out / "config.json")
    for row in summary:
        flag = " (anchor)" if row.anchor else ""
        print(f"N={row.N:<4d} rho={row.rho:<5g} max_err={row.max_emp_error:.4e} "
              f"bound={row.calibrated_bound:.4e}{flag}")
    return 0


def cmd_verify(args) -> int:
    from .checks import run_checks

    failed = 0
    for res in run_checks(args.suites):
        print(f"{'PASS' if res.ok else 'FAIL'}  {res.name:<24} {res.detail}")
        failed += not res.ok
    return 1 if failed else 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="wfrestore",
                                 description="Wavelet-frame image restoration and error bounds.")
    ap.add_argument("-v", "--verbose", action="count", default=0)
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, order=True):
        p.add_argument("--M", type=float, default=1.0, help="box bound (image range [0, M])")
        if order:
            p.add_argument("--order", default="2", help="B-spline order or preset name")

    def operator(p):
        p.add_argument("--operator", default="identity",
                       choices=["identity", "gaussian_blur", "orthonormal_wavelet"])
        p.add_argument("--operator-json", help="operator config as JSON, overrides --operator")

    p = sub.add_parser("transform", help="framelet analysis or synthesis of a file")
    p.add_argument("direction", choices=["analyze", "synthesize"])
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--levels", type=int, default=1)
    p.add_argument("--bank-out", help="also write the filter bank as text")
    common(p)
    p.set_defaults(func=cmd_transform)

    p = sub.add_parser("restore", help="restore one image from incomplete measurements")
    p.add_argument("--image", help="ground truth image (PGM or raw float64) to sample")
    p.add_argument("--measurements", help="measurement CSV k1,k2,value")
    p.add_argument("--size", type=int, help="grid size N when reading measurements")
    p.add_argument("--sample-set", help="sample set CSV k1,k2")
    p.add_argument("--measurements-out", help="write the synthesized measurements")
    p.add_argument("--output", "-o", required=True)
    p.add_argument("--rho", type=float, default=0.5)
    p.add_argument("--eta", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--beta", type=float, default=0.0)
    p.add_argument("--levels", type=int, default=1)
    p.add_argument("--mu", type=float)
    p.add_argument("--kappa", type=float)
    p.add_argument("--max-outer", type=int, default=500)
    p.add_argument("--tol-rel", type=float, default=1e-4)
    p.add_argument("--trace", help="write the solver trace CSV here")
    common(p)
    operator(p)
    p.set_defaults(func=cmd_restore)

    p = sub.add_parser("bounds", help="print bound constants")
    p.add_argument("--N", type=int, default=32)
    p.add_argument("--rho", type=float, default=0.5)
    p.add_argument("--eta", type=float, default=0.0)
    p.add_argument("--beta", type=float, default=0.0)
    p.add_argument("--a", type=float, default=1.0)
    p.add_argument("--C-W", dest="C_W", type=float)
    p.add_argument("--C-f", dest="C_f", type=float, default=1.0)
    p.add_argument("--sigma-min", type=float)
    p.add_argument("--norm-inf", type=float)
    p.add_argument("--m", type=int, help="sample count (default rho N^2)")
    p.add_argument("--radius", type=float, default=1.0, help="covering radius")
    p.add_argument("--format", choices=["text", "csv"], default="text")
    common(p)
    operator(p)
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("sweep", help="run a Monte Carlo experiment config")
    p.add_argument("--config", help="JSON experiment config")
    p.add_argument("--sizes", type=int, nargs="+")
    p.add_argument("--rhos", type=float, nargs="+")
    p.add_argument("--realizations", type=int)
    p.add_argument("--eta", type=float)
    p.add_argument("--operator", choices=["identity", "gaussian_blur", "orthonormal_wavelet"])
    p.add_argument("--function", help="continuum test function instead of the phantom")
    p.add_argument("--anchor", choices=["lowest density", "lowest resolution"])
    p.add_argument("--workers", type=int)
    p.add_argument("--output", "-o", help="output directory")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("verify", help="run the invariant suites")
    p.add_argument("suites", nargs="*", help="subset of suites (default all)")
    p.set_defaults(func=cmd_verify)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=[logging.WARNING, logging.INFO, logging.DEBUG][min(args.verbose, 2)],
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"wfrestore: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
