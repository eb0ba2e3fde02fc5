"""Command-line interface.

Exit codes: 0 success, 1 numerical failure, 2 usage or validation error.
"""
from __future__ import annotations

import argparse
import csv
import io
import math
import sys
import warnings

import numpy as np

from . import __version__
from .errors import LevelQuadError, ResourceCap
from .geometry import SHAPES, IntegrandKind, make_integrand, make_shape
from .grid import GridSpec, Side
from .kernels import WeightFamily, build_kernel, moment_table, named_kernel, sample_kernel
from .quadrature import EpsilonPolicy, FitModel, QuadratureJob, fit_family, run_job, sample_family
from .redistance import godunov_residual, initialize_interface, fast_sweep
from .reference import reference_value
from .studies import (CSV_COLUMNS, CSV_SCHEMA, StudyId, calibrate_a0, check_resource,
                      report_csv, run_study, summary_text, write_report_csv)

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib


class UsageError(Exception):
    pass


def _int_list(text):
    try:
        vals = [int(v) for v in str(text).replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected integers, got {text!r}") from None
    if not vals or any(v < 2 for v in vals):
        raise argparse.ArgumentTypeError("grid sizes must be integers >= 2")
    return vals


def _point(text):
    try:
        vals = tuple(float(v) for v in str(text).split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated coordinates, got {text!r}") from None
    return vals


# ---------------------------------------------------------------------------
# parser


def build_parser():
    p = argparse.ArgumentParser(
        prog="levelquad",
        description="Integrate over implicit curves and surfaces sampled on uniform grids.")
    p.add_argument("--version", action="version", version=f"levelquad {__version__}")
    sub = p.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True

    k = sub.add_parser("kernel", help="build a vanishing-moment kernel and print its moments",
                       description="Solve the moment system for a kernel and print coefficients, "
                                   "moments and the solve residual.")
    k.add_argument("--family", default="bump", help="weight family: bump or shifted (default: bump)")
    k.add_argument("--moments", type=int, default=1, help="number of vanishing moments m >= 1 (default: 1)")
    k.add_argument("--rho", type=float, default=None,
                   help="lower support end for the shifted family (default: 0.1; bump uses 0)")
    k.add_argument("--samples", type=int, default=0, metavar="COUNT",
                   help="also write COUNT uniform samples of the kernel on [0, 1] as CSV")
    k.add_argument("--output", default=None, metavar="PATH",
                   help="file for the sample CSV (default: stdout)")
    k.set_defaults(handler=cmd_kernel)

    i = sub.add_parser("integrate", help="evaluate the band sum for one shape and grid ladder",
                       description="Evaluate the narrow-band sum S_N for a registered shape and "
                                   "print one CSV row per grid size.")
    i.add_argument("--config", default=None, metavar="PATH",
                   help="TOML file with any of the options below (flags take precedence)")
    i.add_argument("--shape", default=None, help=f"shape name: {', '.join(SHAPES)}")
    i.add_argument("--r0", type=float, default=None, help="shape radius (default: per shape)")
    i.add_argument("--psi-exponent", type=int, default=None,
                   help="exponent q for power-of-distance (default: 3)")
    i.add_argument("--signed", action="store_true", default=None,
                   help="use sgn(d)|d|^q for power-of-distance")
    i.add_argument("--kernel", default=None, help="kernel as family:m[:rho] (default: bump:1)")
    i.add_argument("--eps", default=None, help="eps policy: a*h^b, a*N^b or a constant (default: 2*h^0.5)")
    i.add_argument("-N", "--n", type=_int_list, default=None, dest="n",
                   help="cells per axis, one value or a comma list (default: 100)")
    i.add_argument("--side", default=None, help="positive or negative band (default: positive)")
    i.add_argument("--shift", type=float, default=None, help="level value to integrate over (default: 0)")
    i.add_argument("--integrand", default=None, help="one, theta-sawtooth or inv-sqrt (default: one)")
    i.add_argument("--center", type=_point, default=None, help="singular point for inv-sqrt, as x,y")
    i.add_argument("--extent", type=float, default=None, help="grid half-width (default: 1)")
    i.add_argument("--workers", type=int, default=None, help="threads for the band sum (default: 1)")
    i.add_argument("--allow-large", action="store_true", default=None,
                   help="permit 3D grids above N=400 (hard cap 800)")
    i.add_argument("--output", default=None, metavar="PATH", help="CSV file (default: stdout)")
    i.add_argument("--timing", action="store_true", default=None, help="fill the wall_time column")
    i.set_defaults(handler=cmd_integrate)

    s = sub.add_parser("study", help="run a registered convergence study",
                       description="Run one of the registered convergence studies and write its "
                                   "CSV report.")
    s.add_argument("study", help="study id: " + ", ".join(x.value for x in StudyId))
    s.add_argument("--config", default=None, metavar="PATH",
                   help="TOML file with any of the options below (flags take precedence)")
    s.add_argument("--max-n", type=int, default=None, help="drop grid sizes above this N")
    s.add_argument("--a0", type=float, default=None, help="eps constant required by table5")
    s.add_argument("--calibrate", action="store_true", default=None,
                   help="table5 only: solve for a0 from the N=200 error before running")
    s.add_argument("--allow-large", action="store_true", default=None,
                   help="include the N=800 rung of table4")
    s.add_argument("--workers", type=int, default=None, help="threads for each band sum (default: 1)")
    s.add_argument("--output", default=None, metavar="PATH",
                   help="CSV file; the text summary then goes to stdout (default: CSV to stdout)")
    s.add_argument("--timing", action="store_true", default=None, help="fill the wall_time column")
    s.set_defaults(handler=cmd_study)

    w = sub.add_parser("sweep", help="redistance grid samples by fast sweeping",
                       description="Read level-set samples (columns i, j[, k], phi), compute signed "
                                   "distances by fast sweeping and write i, j[, k], distance.")
    w.add_argument("input", help="input CSV path, or - for stdin")
    w.add_argument("--output", default=None, metavar="PATH", help="CSV file (default: stdout)")
    w.add_argument("--max-rounds", type=int, default=50, help="sweep rounds before giving up (default: 50)")
    w.add_argument("--tol", type=float, default=None,
                   help="stop when no node changes more than this (default: 1e-12 times the diameter)")
    w.set_defaults(handler=cmd_sweep)

    f = sub.add_parser("family", help="sample I(eta) over nearby level sets and fit it",
                       description="Estimate the integral over the eta level sets with a probe "
                                   "kernel and fit a polynomial or power law.")
    f.add_argument("--config", default=None, metavar="PATH",
                   help="TOML file with any of the options below (flags take precedence)")
    f.add_argument("--shape", default=None, help=f"shape name: {', '.join(SHAPES)}")
    f.add_argument("--r0", type=float, default=None, help="shape radius (default: per shape)")
    f.add_argument("--psi-exponent", type=int, default=None,
                   help="exponent q for power-of-distance (default: 3)")
    f.add_argument("--signed", action="store_true", default=None,
                   help="use sgn(d)|d|^q for power-of-distance")
    f.add_argument("--integrand", default=None, help="one or theta-sawtooth (default: one)")
    f.add_argument("-N", "--n", type=int, default=None, dest="n", help="cells per axis (default: 200)")
    f.add_argument("--etas", default=None,
                   help="eta values as a comma list or start:stop:count; write --etas=-0.1:0.1:9 "
                        "when the first value is negative (default: -0.1:0.1:9)")
    f.add_argument("--eps-probe", type=float, default=None, help="probe half-width (default: 2*sqrt(h))")
    f.add_argument("--model", default=None, help="polynomial or power-law (default: polynomial)")
    f.add_argument("--degree", type=int, default=None, help="polynomial degree (default: 1)")
    f.add_argument("--output", default=None, metavar="PATH", help="CSV file (default: stdout)")
    f.set_defaults(handler=cmd_family)
    return p


INTEGRATE_DEFAULTS = dict(shape=None, r0=None, psi_exponent=3, signed=False, kernel="bump:1",
                          eps="2*h^0.5", n=[100], side="positive", shift=0.0, integrand="one",
                          center=None, extent=1.0, workers=1, allow_large=False, output=None,
                          timing=False)
STUDY_DEFAULTS = dict(max_n=None, a0=None, calibrate=False, allow_large=False, workers=1,
                      output=None, timing=False)
FAMILY_DEFAULTS = dict(shape=None, r0=None, psi_exponent=3, signed=False, integrand="one",
                       n=200, etas="-0.1:0.1:9", eps_probe=None, model="polynomial", degree=1,
                       output=None)


def _merge_config(args, defaults):
    """Fill unset options from ``--config`` and then from ``defaults``."""
    config = {}
    if getattr(args, "config", None):
        try:
            with open(args.config, "rb") as fh:
                raw = tomllib.load(fh)
        except OSError as exc:
            raise UsageError(f"cannot read config: {exc}") from exc
        except tomllib.TOMLDecodeError as exc:
            raise UsageError(f"invalid TOML in {args.config}: {exc}") from exc
        for key, value in raw.items():
            dest = key.replace("-", "_")
            if dest == "N":
                dest = "n"
            if dest not in defaults:
                raise UsageError(f"unknown config key {key!r}")
            if isinstance(value, dict):
                raise UsageError(f"config key {key!r} must be a plain value")
            config[dest] = value
    for dest, default in defaults.items():
        if getattr(args, dest, None) is None:
            setattr(args, dest, config.get(dest, default))
    return args


# ---------------------------------------------------------------------------
# helpers


def _csv_header(kind, extra=""):
    return f"# schema={CSV_SCHEMA} levelquad={__version__} {kind}{extra}\n"


def _emit(text, path):
    if path:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _num(x):
    return "" if x is None else repr(float(x))


def _shape_from_args(args):
    if not args.shape:
        raise UsageError("--shape is required")
    if args.shape not in SHAPES:
        raise UsageError(f"unknown shape {args.shape!r}; choose from {', '.join(SHAPES)}")
    try:
        return make_shape(args.shape, args.r0, args.psi_exponent, bool(args.signed))
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


# ---------------------------------------------------------------------------
# handlers


def cmd_kernel(args):
    if args.moments < 1:
        raise UsageError("--moments must be >= 1")
    try:
        family = WeightFamily.parse(args.family)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    rho = args.rho
    if rho is None:
        rho = 0.1 if family is WeightFamily.SHIFTED_BUMP else 0.0
    try:
        kernel = build_kernel(family, args.moments, rho)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    out = sys.stdout if (args.samples == 0 or args.output) else sys.stderr
    print(f"kernel {kernel.label}  support [{kernel.support_lo:g}, 1]", file=out)
    names = "abcdefghijklmnopqrstuvwxyz"
    # descending powers, matching the usual a r^m + ... notation
    for power, c in zip(range(kernel.vanishing_moments, -1, -1), reversed(kernel.coeffs)):
        print(f"  {names[kernel.vanishing_moments - power]} = {c!r}  (r^{power})", file=out)
    print("moments:", file=out)
    for p, val in moment_table(kernel):
        print(f"  p={p}  {val: .16e}", file=out)
    print(f"residual {kernel.residual:.3e}  condition {kernel.condition:.3e}", file=out)
    if args.samples:
        r, v = sample_kernel(kernel, args.samples)
        buf = io.StringIO()
        buf.write(_csv_header("kernel", f" kernel={kernel.label}"))
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(("r", "delta"))
        for a, b in zip(r, v):
            w.writerow((repr(float(a)), repr(float(b))))
        _emit(buf.getvalue(), args.output)
    return 0


def cmd_integrate(args):
    _merge_config(args, INTEGRATE_DEFAULTS)
    field = _shape_from_args(args)
    try:
        kernel = named_kernel(args.kernel)
        policy = EpsilonPolicy.parse(args.eps)
        side = Side.parse(args.side)
        integrand = make_integrand(args.integrand, args.center)
        ladder = args.n if isinstance(args.n, list) else _int_list(args.n)
    except (ValueError, argparse.ArgumentTypeError) as exc:
        raise UsageError(str(exc)) from exc
    if side is Side.BOTH:
        raise UsageError("--side must be positive or negative")
    reference = None
    if field.shape is not None:
        try:
            reference = reference_value(field.shape, IntegrandKind(args.integrand), args.shift, args.center)
        except NotImplementedError:
            reference = None
    buf = io.StringIO()
    buf.write(_csv_header("integrate", f" shape={args.shape} kernel={kernel.label} eps={policy}"))
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    prev = None
    for n in ladder:
        try:
            grid = GridSpec(field.dim, n, float(args.extent))
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
        check_resource(field.dim, n, bool(args.allow_large))
        job = QuadratureJob(field, kernel, policy, grid, integrand, side, float(args.shift),
                            int(args.workers))
        res = run_job(job)
        err = abs(res.value - reference) / abs(reference) if reference else None
        order = math.log2(prev / err) if (prev and err) else None
        w.writerow((args.shape, n, _num(grid.spacing), _num(res.eps), _num(res.value), _num(reference),
                    _num(err), _num(order), res.band_count, _num(res.wall_time) if args.timing else ""))
        prev = err
    _emit(buf.getvalue(), args.output)
    return 0


def cmd_study(args):
    _merge_config(args, STUDY_DEFAULTS)
    try:
        study = StudyId.parse(args.study)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    a0 = args.a0
    if study is StudyId.TABLE5 and a0 is None:
        if not args.calibrate:
            raise UsageError("table5 needs --a0; pass --calibrate to solve for it "
                             "(the N=200 phi1 error 1.01552e-02 gives a0 close to 2.973)")
        a0 = calibrate_a0()
        print(f"calibrated a0 = {a0!r}", file=sys.stderr)
    report = run_study(study, max_n=args.max_n, a0=a0, workers=int(args.workers),
                       allow_large=bool(args.allow_large))
    if args.output:
        write_report_csv(report, args.output, bool(args.timing))
        print(summary_text(report))
    else:
        sys.stdout.write(report_csv(report, bool(args.timing)))
    return 0


def _read_samples(path):
    fh = sys.stdin if path == "-" else open(path, newline="")
    try:
        rows = [r for r in csv.reader(line for line in fh if not line.startswith("#")) if r]
    finally:
        if fh is not sys.stdin:
            fh.close()
    if not rows:
        raise UsageError("input CSV is empty")
    header = [c.strip() for c in rows[0]]
    if header not in (["i", "j", "phi"], ["i", "j", "k", "phi"]):
        raise UsageError("input CSV must have columns i,j,phi or i,j,k,phi")
    dim = len(header) - 1
    try:
        data = np.array([[float(c) for c in r] for r in rows[1:]], dtype=np.float64)
    except ValueError as exc:
        raise UsageError(f"malformed input row: {exc}") from exc
    if data.ndim != 2 or data.shape[1] != dim + 1:
        raise UsageError("every row needs the same number of columns as the header")
    idx = data[:, :dim].astype(np.int64)
    if np.any(idx != data[:, :dim]) or np.any(idx < 0):
        raise UsageError("indices must be non-negative integers")
    n = int(idx.max())
    if n < 2 or data.shape[0] != (n + 1) ** dim:
        raise UsageError("input must cover a full (N+1)^dim node grid")
    values = np.full((n + 1,) * dim, np.nan)
    values[tuple(idx.T)] = data[:, dim]
    if np.any(np.isnan(values)):
        raise UsageError("input has duplicate or missing nodes")
    return GridSpec(dim, n), values


def cmd_sweep(args):
    grid, values = _read_samples(args.input)
    dg = fast_sweep(initialize_interface(grid, values), args.max_rounds, args.tol)
    buf = io.StringIO()
    buf.write(_csv_header("sweep", f" N={grid.n_cells} rounds={dg.rounds}"))
    w = csv.writer(buf, lineterminator="\n")
    names = ("i", "j", "k")[:grid.dim]
    w.writerow(names + ("distance",))
    for idx in np.ndindex(*dg.values.shape):
        w.writerow(tuple(idx) + (repr(float(dg.values[idx])),))
    _emit(buf.getvalue(), args.output)
    print(f"rounds {dg.rounds}  last change {dg.change:.3e}  residual {godunov_residual(dg):.3e}",
          file=sys.stderr)
    return 0


def _parse_etas(text):
    text = str(text).strip()
    try:
        if ":" in text:
            a, b, c = text.split(":")
            return np.linspace(float(a), float(b), int(c))
        return np.array([float(v) for v in text.split(",")])
    except ValueError:
        raise UsageError(f"cannot parse --etas {text!r}") from None


def cmd_family(args):
    _merge_config(args, FAMILY_DEFAULTS)
    field = _shape_from_args(args)
    etas = _parse_etas(args.etas)
    try:
        integrand = make_integrand(args.integrand)
        model = FitModel(args.model)
        grid = GridSpec(field.dim, int(args.n))
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    check_resource(field.dim, grid.n_cells)
    samples = sample_family(field, integrand, etas, grid, eps_probe=args.eps_probe)
    fit = fit_family(samples, model, int(args.degree))
    buf = io.StringIO()
    buf.write(_csv_header("family", f" shape={args.shape} N={grid.n_cells}"))
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("eta", "value"))
    for e, v in zip(samples.etas, samples.values):
        w.writerow((repr(float(e)), repr(float(v))))
    coef = " ".join(repr(c) for c in fit.coefficients)
    buf.write(f"# fit model={fit.model} coefficients={coef} residual={fit.residual!r}"
              + (f" exponent={fit.exponent!r}" if fit.exponent is not None else "") + "\n")
    _emit(buf.getvalue(), args.output)
    return 0


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            return args.handler(args)
    except (UsageError, ResourceCap) as exc:
        print(f"levelquad {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except LevelQuadError as exc:
        print(f"levelquad {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
