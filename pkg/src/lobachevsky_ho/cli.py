"""Command-line interface.

Verbs: spectrum, sweep, eigenfunction, flat, verify, golden.  Data go to
files or stdout and contain only data rows and ``#`` comment lines;
diagnostics go to stderr.  Floats are written in shortest round-trip form.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__, oracle
from . import eigenfunctions as ef
from . import spheroidal_ode
from . import verification
from .eigensolver import eigenvalues, energy_over_omega, sweep
from .errors import LobachevskyError, SpectralConsistencyError
from .geometry import params_from_a2, params_from_q

log = logging.getLogger("lobachevsky_ho")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_SPECTRAL = 2
EXIT_VERIFY = 3
MAX_N = 16
FIGURE_A2 = (1.0, 10.0)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def fmt(x):
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def dump_json(doc):
    return json.dumps(doc, indent=2, allow_nan=False) + "\n"


def write_out(text, out):
    if out is None or str(out) == "-":
        sys.stdout.write(text)
    else:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text)


def csv_text(header, rows, meta=None, trailer=()):
    lines = []
    for k, v in (meta or {}).items():
        lines.append(f"# {k}: {json.dumps(v, sort_keys=True)}")
    lines.append(",".join(header))
    lines.extend(",".join(fmt(x) for x in row) for row in rows)
    lines.extend(trailer)
    return "\n".join(lines) + "\n"


# argument handling ------------------------------------------------------------

def _common(parser, params=True):
    if params:
        g = parser.add_mutually_exclusive_group()
        g.add_argument("--q", type=float, help="coupling q = a^2 omega / 2")
        g.add_argument("--a2", type=float, help="squared curvature radius a^2")
    parser.add_argument("--omega", type=float, default=1.0)
    parser.add_argument("--m", type=int, default=0)
    parser.add_argument("--oracle-only", action="store_true",
                        help="use the finite-volume backend only (allows m != 0)")
    parser.add_argument("--n-max", type=int, default=2)
    parser.add_argument("--tol", type=float, default=1e-10)
    parser.add_argument("--rtol", type=float, default=spheroidal_ode.DEFAULT_RTOL)
    parser.add_argument("--xi-factor", type=float, default=oracle.DEFAULT_XI_FACTOR)
    parser.add_argument("--grid-n", type=int, default=oracle.DEFAULT_GRID_N)
    parser.add_argument("--rho-max", type=float)
    parser.add_argument("--samples", type=int, default=ef.DEFAULT_SAMPLES)
    parser.add_argument("--format", choices=("csv", "json"), default="csv")
    parser.add_argument("--out", help="output path (default: stdout)")
    parser.add_argument("--force", action="store_true")
    parser.add_argument("--workers", type=int, default=1)


def build_parser():
    parser = _Parser(prog="lobachevsky-ho", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="verb", required=True, parser_class=_Parser)

    p = sub.add_parser("spectrum", help="lowest eigenvalues of H_0")
    _common(p)

    p = sub.add_parser("sweep", help="E_n(q)/omega over a range of q")
    _common(p, params=False)
    p.add_argument("--q-min", type=float, default=0.25)
    p.add_argument("--q-max", type=float, default=50.0)
    p.add_argument("--points", type=int, default=40)
    p.add_argument("--scale", choices=("log", "linear"), default="log")
    p.add_argument("--q-values", type=float, nargs="+", help="explicit q grid")

    for name in ("eigenfunction", "flat"):
        p = sub.add_parser(name, help="normalized radial eigenfunction psi(rho)")
        _common(p)
        p.add_argument("--n", type=int, default=0)
        if name == "eigenfunction":
            p.add_argument("--flat", action="store_true", help="Euclidean reference (a = inf)")
        p.add_argument("--paper-figures", action="store_true",
                       help="all curves a^2 = 1, 10, flat for n = 0, 1, 2 into directory --out")

    p = sub.add_parser("verify", help="run the property suite and report")
    _common(p, params=False)
    p.add_argument("--golden", help="golden-value file (default: packaged)")
    p.add_argument("--inject-lambda-sign-bug", action="store_true", help=argparse.SUPPRESS)

    p = sub.add_parser("golden", help="regenerate an oracle golden-value file")
    _common(p)
    p.add_argument("--k", type=int, default=3, help="number of eigenvalues")
    return parser


def resolve_params(args, required=True):
    if args.omega is None or not args.omega > 0:
        raise UsageError("--omega must be positive")
    if args.q is not None:
        return params_from_q(args.q, args.omega)
    if args.a2 is not None:
        return params_from_a2(args.a2, args.omega)
    if required:
        raise UsageError("one of --q or --a2 is required")
    return None


def validate(args):
    for name in ("tol", "rtol"):
        if not getattr(args, name) > 0:
            raise UsageError(f"--{name} must be positive")
    if not 0 <= args.n_max <= MAX_N:
        raise UsageError(f"--n-max must lie in [0, {MAX_N}]")
    if args.m != 0 and not args.oracle_only and args.verb != "golden":
        raise UsageError("--m other than 0 requires --oracle-only")
    if getattr(args, "n", 0) is not None and not 0 <= getattr(args, "n", 0) <= MAX_N:
        raise UsageError(f"--n must lie in [0, {MAX_N}]")


def metadata(args, p=None, **extra):
    meta = {"version": __version__, "command": args.verb}
    if p is not None:
        meta["params"] = p.as_dict()
    meta["m"] = args.m
    meta["tolerances"] = {"tol": args.tol, "rtol": args.rtol}
    meta.update(extra)
    return meta


# verbs ------------------------------------------------------------------------

def cmd_spectrum(args):
    p = resolve_params(args)
    if args.oracle_only:
        vals = oracle.oracle_eigenvalues(p, args.m, args.n_max + 1, args.grid_n,
                                         oracle.recommended_xi(p.q, args.xi_factor))
        records = [{"n": n, "E_tilde": v, "E": v * p.omega / (2 * p.q),
                    "E_over_omega": energy_over_omega(v, p.q), "lambda": -v - 0.25, "err": e}
                   for n, (v, e) in enumerate(vals)]
        meta = metadata(args, p, backend="oracle", grid={"N": args.grid_n, "xi_factor": args.xi_factor},
                        quality="quantitative" if args.m == 0 else "qualitative")
    else:
        pairs = eigenvalues(p, args.n_max, args.tol, rtol=args.rtol, xi_factor=args.xi_factor)
        records = [{"n": ep.n, "E_tilde": ep.E_tilde, "E": ep.E,
                    "E_over_omega": energy_over_omega(ep.E_tilde, p.q), "lambda": ep.lam,
                    "err": ep.err_estimate} for ep in pairs]
        meta = metadata(args, p, backend="shooting")
    if args.format == "json":
        text = dump_json({"metadata": meta, "records": records})
    else:
        header = ["n", "E_tilde", "E", "E_over_omega", "lambda", "err"]
        text = csv_text(header, [[r[h] for h in header] for r in records], meta)
    write_out(text, args.out)
    return EXIT_OK


def q_grid(args):
    if args.q_values:
        return sorted(set(args.q_values))
    if not 0 < args.q_min < args.q_max or args.points < 2:
        raise UsageError("need 0 < --q-min < --q-max and --points >= 2")
    if args.scale == "log":
        return list(np.geomspace(args.q_min, args.q_max, args.points))
    return list(np.linspace(args.q_min, args.q_max, args.points))


def cmd_sweep(args):
    qs = q_grid(args)
    table = sweep(qs, args.omega, args.n_max, args.tol, rtol=args.rtol, workers=args.workers,
                  fail_fast=False, xi_factor=args.xi_factor)
    for n, ok in table.monotone.items():
        if not ok:
            log.warning("E_%d/omega is not strictly decreasing in q", n)
    for q, msg in table.failures:
        log.error("q=%r failed: %s", q, msg)
    meta = metadata(args, omega=args.omega, n_max=args.n_max, q_values=[float(q) for q in qs])
    trailer = ["# incomplete"] if table.failures else []
    if args.format == "json":
        doc = {"metadata": meta, "rows": [dict(zip(("q", "n", "E_tilde", "E_over_omega"), r))
                                          for r in table.rows],
               "monotone": {str(k): v for k, v in table.monotone.items()},
               "failures": [{"q": q, "error": m} for q, m in table.failures]}
        text = dump_json(doc)
    else:
        text = csv_text(["q", "n", "E_tilde", "E_over_omega"], table.rows, meta, trailer)
    write_out(text, args.out)
    return EXIT_OK if table.complete else EXIT_SPECTRAL


def _curve_files(f: ef.RadialFunction, meta, out, fmt_):
    if fmt_ == "json":
        write_out(dump_json({"metadata": meta, "rho": f.rho.tolist(), "psi": f.values.tolist()}), out)
        return
    text = csv_text(["rho", "psi"], zip(f.rho, f.values), None if out else meta)
    write_out(text, out)
    if out:
        write_out(dump_json(meta), str(out) + ".json")


def _state(args, p, n, rho_max):
    """RadialFunction for state n; p None means flat."""
    if p is None:
        grid = np.linspace(0.0, rho_max, args.samples)
        return ef.flat_eigenfunction(n, args.omega, grid), args.omega * (2 * n + 1)
    ep = eigenvalues(p, n, args.tol, rtol=args.rtol, xi_factor=args.xi_factor)[n]
    return ef.sample_radial(ep, p, rho_max, args.samples, rtol=args.rtol), ep.E


def _function_meta(args, f, p, energy):
    mean, r90 = ef.concentration(f)
    return metadata(args, p, n=f.n, flat=p is None, omega=args.omega, energy=energy,
                    grid={"rho_max": f.rho_max, "samples": len(f.rho)},
                    norm_residual=f.norm_residual, mean_rho=mean, r90=r90)


def cmd_eigenfunction(args):
    flat = args.verb == "flat" or getattr(args, "flat", False)
    if args.paper_figures:
        if not args.out:
            raise UsageError("--paper-figures needs --out DIRECTORY")
        cases = [(a2, params_from_a2(a2, args.omega)) for a2 in FIGURE_A2] + [("flat", None)]
        rho_max = args.rho_max or max(ef.default_rho_max_flat(n, args.omega) for n in range(3))
        outdir = Path(args.out)
        for label, p in cases:
            for n in range(3):
                f, energy = _state(args, p, n, rho_max)
                ext = "json" if args.format == "json" else "csv"
                tag = "flat" if p is None else f"a2_{label:g}"
                _curve_files(f, _function_meta(args, f, p, energy),
                             outdir / f"psi_n{n}_{tag}.{ext}", args.format)
        return EXIT_OK
    if flat:
        if args.q is not None or args.a2 is not None:
            raise UsageError("--flat excludes --q/--a2")
        p = None
        rho_max = args.rho_max or ef.default_rho_max_flat(args.n, args.omega)
    else:
        p = resolve_params(args)
        rho_max = args.rho_max
        if rho_max is None:
            pairs = eigenvalues(p, args.n, args.tol, rtol=args.rtol, xi_factor=args.xi_factor)
            rho_max = ef.default_rho_max(pairs[args.n].E, p)
    f, energy = _state(args, p, args.n, rho_max)
    _curve_files(f, _function_meta(args, f, p, energy), args.out, args.format)
    return EXIT_OK


def cmd_verify(args):
    if args.inject_lambda_sign_bug:
        spheroidal_ode._LAMBDA_SIGN = -1.0
    try:
        cfg = verification.VerifyConfig(omega=args.omega, tol=args.tol, rtol=args.rtol,
                                        grid_n=args.grid_n, xi_factor=args.xi_factor,
                                        samples=args.samples, golden=args.golden)
        checks = verification.run_all(cfg)
    finally:
        spheroidal_ode._LAMBDA_SIGN = 1.0
    ok = all(c.passed for c in checks)
    report = {"metadata": metadata(args, omega=args.omega), "passed": ok,
              "checks": [c.as_dict() for c in checks]}
    for c in checks:
        log.info("%s %s", "PASS" if c.passed else "FAIL", c.name)
    write_out(dump_json(_jsonable(report)), args.out)
    return EXIT_OK if ok else EXIT_VERIFY


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else repr(x)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def cmd_golden(args):
    p = resolve_params(args)
    out = Path(args.out) if args.out else Path(str(verification.default_golden_path()))
    if out.exists() and not args.force:
        log.error("%s exists; pass --force to overwrite", out)
        return EXIT_USAGE
    doc = oracle.golden_document(p, args.m, args.k, args.grid_n, args.xi_factor)
    doc["metadata"] = {"version": __version__}
    write_out(dump_json(doc), out)
    return EXIT_OK


COMMANDS = {
    "spectrum": cmd_spectrum,
    "sweep": cmd_sweep,
    "eigenfunction": cmd_eigenfunction,
    "flat": cmd_eigenfunction,
    "verify": cmd_verify,
    "golden": cmd_golden,
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s", stream=sys.stderr)
    try:
        validate(args)
        return COMMANDS[args.verb](args)
    except UsageError as exc:
        log.error("%s", exc)
        return EXIT_USAGE
    except SpectralConsistencyError as exc:
        log.error("%s", exc)
        return EXIT_SPECTRAL
    except LobachevskyError as exc:
        log.error("%s: %s", type(exc).__name__, exc)
        return EXIT_USAGE
    except OSError as exc:
        log.error("%s", exc)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
