"""Command-line front end: ``layerspec {spectrum,diagnose,approx,compare}``."""

from __future__ import annotations

import argparse
import csv
import io
import math
import sys

import numpy as np

from . import __version__
from .bv_approx import eigenpair_convergence, ladder_csv_rows
from .diagnostics import DiagnosticsReport, Layer, diagnose
from .errors import LayerSpecError, NotAnEigenvalue, SolverError
from .fiber import eigenvalue
from .oracle import compare, fd_spectrum
from .profile import find_well, load_profile
from .spectral_grid import cross_section_modes, enumerate_spectrum, parse_cross_section, spectrum_csv_rows

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NUMERIC = 3

SPECTRUM_HEADER = ["k", "mu", "ell", "lambda", "sector"]
LADDER_HEADER = ["n", "lambda_n", "err_lambda", "err_u_sup", "err_flux_sup"]

EPILOG = """\
CSV columns
  spectrum : k, mu, ell, lambda, sector (sector empty unless --eps is given)
  diagnose : k, mu, ell, lambda, sector, mass, R_omega, min_r2, max_gap,
             then a blank line and a 'quantity,value' summary block
  approx   : n, lambda_n, err_lambda, err_u_sup, err_flux_sup
  compare  : index, solver_rel_error, then worst_index / worst_error / rel_tol / status

Floats are printed with 12 significant digits.  Exit codes: 0 ok,
2 usage or configuration error, 3 numerical failure.

Profile files are TOML with keys 'type' (piecewise_constant | sampled |
preset), 'H', and either breakpoints/values, ys/cs/interp, or preset/params.
"""


class UsageError(Exception):
    pass


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.12g}"
    return str(v)


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if header is not None:
        w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _pair(text: str, name: str) -> tuple[float, ...]:
    try:
        vals = tuple(float(t) for t in text.split(","))
    except ValueError as exc:
        raise UsageError(f"--{name} expects comma-separated numbers, got {text!r}") from exc
    return vals


def _ints(text: str, name: str) -> tuple[int, ...]:
    try:
        return tuple(int(t) for t in text.split(","))
    except ValueError as exc:
        raise UsageError(f"--{name} expects comma-separated integers, got {text!r}") from exc


def _positive(value, name):
    if value is None or not (value > 0 and math.isfinite(value)):
        raise UsageError(f"--{name} must be a positive number")
    return value


def _cross(args):
    if not args.cross:
        raise UsageError("--cross is required")
    return cross_section_modes(parse_cross_section(args.cross), 1)


def _mu(args) -> float:
    if args.mu is not None:
        return _positive(args.mu, "mu")
    if args.cross and args.k:
        return float(np.sqrt(cross_section_modes(parse_cross_section(args.cross), args.k).mu2[args.k - 1]))
    raise UsageError("give --mu, or --cross together with --k")


def cmd_spectrum(args) -> str:
    prof = load_profile(args.profile)
    lmax = _positive(args.lmax, "lmax")
    cross = _cross(args)
    well = None
    if args.c1 is not None:
        if args.eps is None:
            raise UsageError("--c1 needs --eps")
        well = find_well(prof, args.c1)
    if args.eps is not None:
        _positive(args.eps, "eps")
    rows = enumerate_spectrum(prof, cross, lmax, args.eps, well)
    return _csv_text(SPECTRUM_HEADER, spectrum_csv_rows(rows))


def cmd_diagnose(args) -> str:
    prof = load_profile(args.profile)
    lmax = _positive(args.lmax, "lmax")
    eps = _positive(args.eps, "eps")
    cross = _cross(args)
    if not args.layer:
        raise UsageError("--layer a,b is required")
    ab = _pair(args.layer, "layer")
    if len(ab) != 2:
        raise UsageError("--layer expects two numbers")
    window = None
    if args.window:
        w = _pair(args.window, "window")
        if len(w) != 2 * len(cross.lengths):
            raise UsageError("--window expects one (lo,hi) pair per cross-section dimension")
        window = tuple((w[2 * i], w[2 * i + 1]) for i in range(len(cross.lengths)))
    report = diagnose(prof, cross, lmax, eps, Layer(ab[0], ab[1], window), args.c1, args.grid)
    body = _csv_text(DiagnosticsReport.HEADER,
                     [[r.k, r.mu, r.ell, r.lam, r.sector, r.mass, r.R_omega, r.min_r2, r.max_gap]
                      for r in report.rows])
    summary = _csv_text(["quantity", "value"], [[k, v] for k, v in report.summary.items()])
    return body + "\n" + summary


def cmd_approx(args) -> str:
    prof = load_profile(args.profile)
    mu = _mu(args)
    ell = args.ell if args.ell is not None else 1
    if ell < 1:
        raise UsageError("--ell must be >= 1")
    ns = _ints(args.ns, "ns")
    if any(n < 1 for n in ns):
        raise UsageError("--ns entries must be >= 1")
    rows = eigenpair_convergence(prof, mu, ell, ns, args.grid)
    return _csv_text(LADDER_HEADER, ladder_csv_rows(rows))


def cmd_compare(args) -> str:
    prof = load_profile(args.profile)
    mu = _mu(args)
    num = args.num
    if num < 1:
        raise UsageError("--num must be >= 1")
    solver = [eigenvalue(prof, mu, ell) for ell in range(1, num + 1)]
    oracle = fd_spectrum(prof, mu, num, args.oracle_n)
    report = compare(solver, oracle, args.rel_tol)
    return "\n".join(report.lines()) + "\n"


COMMANDS = {
    "spectrum": cmd_spectrum,
    "diagnose": cmd_diagnose,
    "approx": cmd_approx,
    "compare": cmd_compare,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="layerspec",
        description="Fiber spectra, sector classification and concentration diagnostics "
                    "for layered divergence-form operators.",
        epilog=EPILOG,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--profile", required=True, help="TOML profile file")
    common.add_argument("--out", help="output path (default: standard output)")
    common.add_argument("--grid", type=int, help="minimum number of grid cells for eigenfunctions")
    common.add_argument("--cross", help="interval:<L> or box:<L1>,<L2> (the token 'pi' is accepted)")
    common.add_argument("--eps", type=float, help="sector margin epsilon > 0")
    common.add_argument("--lmax", type=float, help="largest eigenvalue to enumerate")
    common.add_argument("--c1", type=float, help="well threshold c1")
    common.add_argument("--mu", type=float, help="transverse frequency (instead of --cross/--k)")
    common.add_argument("--k", type=int, help="cross-section mode index used with --cross")

    kw = dict(parents=[common], epilog=EPILOG, formatter_class=argparse.RawDescriptionHelpFormatter)
    sub.add_parser("spectrum", help="enumerate and classify eigenvalues", **kw)
    p = sub.add_parser("diagnose", help="per-eigenpair masses, amplitudes and family checks", **kw)
    p.add_argument("--layer", help="y-layer a,b")
    p.add_argument("--window", help="cross-section window lo,hi[,lo2,hi2]")
    p = sub.add_parser("approx", help="piecewise-constant convergence ladder", **kw)
    p.add_argument("--ell", type=int, default=1, help="vertical index")
    p.add_argument("--ns", default="4,16,64,256", help="comma-separated piece counts")
    p = sub.add_parser("compare", help="solver eigenvalues against the finite-difference oracle", **kw)
    p.add_argument("--num", type=int, default=10, help="number of eigenvalues")
    p.add_argument("--oracle-n", type=int, default=8192, help="interior FD nodes")
    p.add_argument("--rel-tol", type=float, default=1e-4, help="relative tolerance")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        text = COMMANDS[args.command](args)
    except (SolverError, NotAnEigenvalue) as exc:
        print(f"layerspec: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (UsageError, LayerSpecError, OSError, KeyError, ValueError) as exc:
        print(f"layerspec: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
