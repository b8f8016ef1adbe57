"""Command-line driver: run, convergence, verify, plotdata."""

import os
import sys

_threads = os.environ.get("SWE_THREADS")
if _threads:
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS",
                "MKL_NUM_THREADS", "NUMEXPR_NUM_THREADS"):
        os.environ.setdefault(var, _threads)

import argparse

import numpy as np

from .cases import CASES, make_case
from .constants import EARTH, SECONDS_PER_DAY, PhysicalConstants
from .dg import SpatialOperator, l2_project
from .diagnostics import conserved, relative_errors, \
    relative_errors_oversampled
from .errors import CubedSWEError
from .io_csv import (export_grid_csv, export_latlon_csv, export_norms_csv,
                     field_from_grid_csv, read_config)
from .mesh import Mesh
from .timeint import TimeConfig, advance, default_cfl, default_scheme

USAGE_EXIT = 1
NUMERICAL_EXIT = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"error: {message}\n")
        sys.exit(USAGE_EXIT)


def _apply_config(args, parser_defaults):
    """Fill unset options from a key=value config file."""
    if not getattr(args, "config", None):
        return args
    cfg = read_config(args.config)
    for key, raw in cfg.items():
        attr = key.replace("-", "_")
        if not hasattr(args, attr):
            raise ValueError(f"unknown config key {key!r}")
        if getattr(args, attr) == parser_defaults.get(attr):
            cur = parser_defaults.get(attr)
            cast = type(cur) if cur is not None else str
            if cast is bool:
                setattr(args, attr, raw.lower() in ("1", "true", "yes"))
            else:
                setattr(args, attr, cast(raw))
    return args


def _build(args):
    pc = PhysicalConstants(alpha=getattr(args, "alpha", 0.0)) \
        if getattr(args, "alpha", 0.0) else EARTH
    kw = {}
    if args.case == "w2" and getattr(args, "alpha", 0.0):
        kw["alpha"] = args.alpha
    case = make_case(args.case, pc, **kw)
    mesh = Mesh(args.n, args.degree, pc.R)
    op = SpatialOperator(mesh, pc, case=case, flux_mode=args.flux)
    return pc, case, mesh, op


def _norm_row(t, field, case, pc, oversample=False):
    row = {"t_days": t / SECONDS_PER_DAY}
    norm_fn = relative_errors_oversampled if oversample else relative_errors
    if case.has_exact:
        for qty in ("h", "u", "v"):
            l1, l2, linf = norm_fn(
                field, lambda xi, eta, tt: case.exact(xi, eta, tt), t, qty)
            row[f"l1_{qty}"] = float(l1)
            row[f"l2_{qty}"] = float(l2)
            row[f"linf_{qty}"] = float(linf)
    M, E, P = conserved(field, case=case)
    row["mass"] = float(M)
    row["energy"] = float(E)
    row["enstrophy"] = float(P)
    return row


def cmd_run(args):
    pc, case, mesh, op = _build(args)
    field = l2_project(mesh, case.initial)
    rows = []

    def sample(t, fld):
        rows.append(_norm_row(t, fld, case, pc,
                              oversample=args.norm_oversample))

    cfg = TimeConfig(cfl=args.cfl if args.cfl else default_cfl(args.degree),
                     scheme=args.scheme or default_scheme(args.degree),
                     t_end=args.t_end_days * SECONDS_PER_DAY)
    field, nstep = advance(op, field, cfg, callbacks=[sample],
                           sample_dt=args.sample_every * 3600.0)
    for row in rows:
        row["mass_drift"] = (row["mass"] - rows[0]["mass"]) / rows[0]["mass"]
        row["energy_drift"] = (row["energy"] - rows[0]["energy"]) \
            / rows[0]["energy"]
        row["enstrophy_drift"] = (row["enstrophy"] - rows[0]["enstrophy"]) \
            / rows[0]["enstrophy"]
    os.makedirs(args.out_dir, exist_ok=True)
    meta = {"case": args.case, "K": args.degree, "N": args.n,
            "flux": args.flux, "t_days": args.t_end_days}
    export_norms_csv(rows, os.path.join(args.out_dir, "norms.csv"))
    export_grid_csv(field, os.path.join(args.out_dir, "final_grid.csv"),
                    meta=meta)
    export_latlon_csv(field, os.path.join(args.out_dir, "final_latlon.csv"),
                      n_lat=args.n_lat, meta=meta)
    last = rows[-1]
    print(f"{args.case} K={args.degree} N={args.n} flux={args.flux}: "
          f"{nstep} steps to t={args.t_end_days} days")
    if case.has_exact:
        print(f"  l1(h)={last['l1_h']:.4e}  l2(h)={last['l2_h']:.4e}  "
              f"linf(h)={last['linf_h']:.4e}")
    print(f"  mass drift={last['mass_drift']:.3e}  "
          f"energy drift={last['energy_drift']:.3e}")
    return 0


def cmd_convergence(args):
    ns = [int(s) for s in args.n_list.split(",")]
    results = []
    for n in ns:
        run_args = argparse.Namespace(**vars(args))
        run_args.n = n
        pc, case, mesh, op = _build(run_args)
        if not case.has_exact:
            raise CubedSWEError(f"case {args.case} has no reference solution")
        field = l2_project(mesh, case.initial)
        cfg = TimeConfig(cfl=args.cfl if args.cfl
                         else default_cfl(args.degree),
                         scheme=args.scheme or default_scheme(args.degree),
                         t_end=args.t_end_days * SECONDS_PER_DAY)
        field, _ = advance(op, field, cfg)
        t = cfg.t_end
        errs = {}
        for qty in ("h",):
            errs["l1"], errs["l2"], errs["linf"] = relative_errors(
                field, lambda xi, eta, tt: case.exact(xi, eta, tt), t, qty)
        results.append((n, errs))
        print(f"N={n:4d}  l1={errs['l1']:.4e}  l2={errs['l2']:.4e}  "
              f"linf={errs['linf']:.4e}")
    rows = []
    for i, (n, errs) in enumerate(results):
        row = {"N": n, "l1_h": float(errs["l1"]), "l2_h": float(errs["l2"]),
               "linf_h": float(errs["linf"])}
        if i > 0:
            n0, e0 = results[i - 1]
            ratio = np.log(n / n0)
            for k in ("l1", "l2", "linf"):
                row[f"order_{k}"] = float(np.log(e0[k] / errs[k]) / ratio)
            print(f"order N={n0}->{n}:  l1={row['order_l1']:.4f}  "
                  f"l2={row['order_l2']:.4f}  linf={row['order_linf']:.4f}")
        rows.append(row)
    if args.out_dir:
        os.makedirs(args.out_dir, exist_ok=True)
        export_norms_csv(rows, os.path.join(args.out_dir, "convergence.csv"))
    return 0


def cmd_verify(args):
    from .verify import run_all
    return 0 if run_all() else NUMERICAL_EXIT


def cmd_plotdata(args):
    field, meta = field_from_grid_csv(args.input, EARTH)
    export_latlon_csv(field, args.out, n_lat=args.n_lat, meta=meta)
    print(f"wrote {args.out}")
    return 0


def build_parser():
    p = _Parser(prog="cubedswe",
                description="Shallow water solver on the cubed sphere")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="integrate one test case")
    run.add_argument("--case", required=True, choices=sorted(CASES))
    run.add_argument("--degree", type=int, default=2, choices=(1, 2, 3))
    run.add_argument("--n", type=int, default=16)
    run.add_argument("--flux", default="leg", choices=("leg", "baseline"))
    run.add_argument("--cfl", type=float, default=0.0,
                     help="override the degree-default CFL number")
    run.add_argument("--t-end-days", type=float, default=1.0)
    run.add_argument("--out-dir", default="out")
    run.add_argument("--sample-every", type=float, default=6.0,
                     help="diagnostic cadence in model hours")
    run.add_argument("--scheme", default="",
                     choices=("", "ssp-rk2", "ssp-rk3", "rk4"))
    run.add_argument("--alpha", type=float, default=0.0,
                     help="rotation-axis tilt for the steady zonal case")
    run.add_argument("--n-lat", type=int, default=90)
    run.add_argument("--norm-oversample", action="store_true",
                     help="compute error norms on a 2x finer quadrature")
    run.add_argument("--config", default="",
                     help="key=value file supplying unset options")
    run.set_defaults(func=cmd_run)

    conv = sub.add_parser("convergence",
                          help="refinement study with an order report")
    conv.add_argument("--case", default="w2", choices=sorted(CASES))
    conv.add_argument("--degree", type=int, default=2, choices=(1, 2, 3))
    conv.add_argument("--n-list", default="16,32")
    conv.add_argument("--flux", default="leg", choices=("leg", "baseline"))
    conv.add_argument("--cfl", type=float, default=0.0)
    conv.add_argument("--t-end-days", type=float, default=3.0)
    conv.add_argument("--scheme", default="",
                      choices=("", "ssp-rk2", "ssp-rk3", "rk4"))
    conv.add_argument("--alpha", type=float, default=0.0)
    conv.add_argument("--out-dir", default="")
    conv.add_argument("--config", default="")
    conv.set_defaults(func=cmd_convergence)

    ver = sub.add_parser("verify", help="run the built-in property checks")
    ver.set_defaults(func=cmd_verify)

    pd = sub.add_parser("plotdata",
                        help="re-export a stored grid-csv as latlon-csv")
    pd.add_argument("--input", required=True)
    pd.add_argument("--out", required=True)
    pd.add_argument("--n-lat", type=int, default=90)
    pd.set_defaults(func=cmd_plotdata)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else USAGE_EXIT
    defaults = {a.dest: a.default for g in parser._subparsers._group_actions
                for a in g.choices[args.command]._actions}
    try:
        args = _apply_config(args, defaults)
        return args.func(args)
    except CubedSWEError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return NUMERICAL_EXIT
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_EXIT


if __name__ == "__main__":
    sys.exit(main())
