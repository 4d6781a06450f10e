"""Command-line front end: ``python -m exdomains <command>``.

Commands
--------
lambda-star   critical radius with both root finders
dispersion    table of V, V', V1, V2, V3 (optionally the quadrature oracle)
eval-h        H(phi) for a profile file, by either evaluator or both
branch        trace, verify and export a bifurcating branch

Exit codes: 0 success, 1 numeric failure, 2 usage or I/O error.
Settings are taken from flags, then from ``--config`` (flat ``key = value``),
then from built-in defaults.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import platform
import sys
import time
from dataclasses import asdict, is_dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .dispersion import (
    BracketError,
    QuadratureError,
    dispersion_components,
    dispersion_V,
    dispersion_V_prime,
    dispersion_V_quadrature,
    find_lambda_star,
)
from .operator_eval import DEFAULT_QUAD, QuadratureSpec, h_direct, h_regularized
from .profile import PeriodicProfile, ProfileError
from .solver import NewtonError, SolverConfig, limit_at_zero, trace_branch, verify_branch_point

log = logging.getLogger("exdomains")

SCHEMA_VERSION = 1
THREADS_ENV = "EXDOMAINS_THREADS"
TWO_PI = 2.0 * np.pi

EXIT_OK, EXIT_NUMERIC, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


# --------------------------------------------------------------------------
# settings
# --------------------------------------------------------------------------

DEFAULTS = {
    "tol": 1e-12,
    "rho_min": 0.01,
    "rho_max": 5.0,
    "samples": 500,
    "points": 65,
    "method": "regularized",
    "k": 1,
    "s_max": 0.05,
    "s_step": 5e-3,
    "modes": 32,
    "newton_tol": 1e-10,
    "max_newton_iters": 25,
    "fd_eps": 1e-6,
    "dense_grid": 256,
    "verify_tol": 1e-7,
    "theta_nodes": DEFAULT_QUAD.theta_nodes,
    "t_panels": DEFAULT_QUAD.t_panels,
    "t_nodes": DEFAULT_QUAD.t_nodes,
    "t_cap": DEFAULT_QUAD.t_cap,
}


def read_config(path):
    """Flat ``key = value`` file; ``#`` starts a comment. Keys use underscores."""
    out = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc.strerror or exc}") from None
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{n}: expected key = value")
        key, value = (p.strip() for p in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in DEFAULTS and key != "threads":
            raise UsageError(f"{path}:{n}: unknown key {key!r}")
        out[key] = value
    return out


def resolve(args, config, key):
    """Flag value, else config value (converted like the default), else default."""
    val = getattr(args, key, None)
    if val is not None:
        return val
    default = DEFAULTS[key]
    if key in config:
        raw = config[key]
        try:
            return type(default)(float(raw)) if isinstance(default, int) else type(default)(raw)
        except ValueError:
            raise UsageError(f"config value for {key} is not valid: {raw!r}") from None
    return default


def resolve_threads(args, config):
    if args.threads is not None:
        n = args.threads
    elif os.environ.get(THREADS_ENV):
        n = os.environ[THREADS_ENV]
    else:
        n = config.get("threads", 1)
    try:
        n = int(n)
    except ValueError:
        raise UsageError(f"invalid thread count {n!r}") from None
    if n < 1:
        raise UsageError("thread count must be >= 1")
    return n


def quad_from(args, config):
    try:
        return QuadratureSpec(
            theta_nodes=resolve(args, config, "theta_nodes"),
            t_panels=resolve(args, config, "t_panels"),
            t_nodes=resolve(args, config, "t_nodes"),
            t_cap=resolve(args, config, "t_cap"),
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None


# --------------------------------------------------------------------------
# output helpers
# --------------------------------------------------------------------------

def _plain(obj):
    if is_dataclass(obj):
        return _plain(asdict(obj))
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def dump_json(obj):
    # repr of a float is its shortest round-trip form, at most 17 significant digits
    return json.dumps(_plain(obj), indent=2, allow_nan=True)


def fmt12(x):
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".12g")
    return str(x)


def write_csv(stream, schema, header, rows, manifest=None):
    ref = f" manifest={manifest}" if manifest else ""
    stream.write(f"# schema={schema}/{SCHEMA_VERSION}{ref}\n")
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt12(v) for v in r])


class Run:
    """Collects the manifest of one command and owns its output directory."""

    def __init__(self, command, argv, out_dir, settings):
        self.command = command
        self.argv = list(argv)
        self.out = Path(out_dir) if out_dir else None
        self.settings = settings
        self.timings = {}
        self.extra = {}
        self.files = []
        self._t0 = time.perf_counter()
        if self.out is not None:
            try:
                self.out.mkdir(parents=True, exist_ok=True)
            except OSError as exc:
                raise UsageError(f"cannot create output directory {self.out}: {exc}") from None

    def stage(self, name, t_start):
        self.timings[name] = time.perf_counter() - t_start

    def write(self, name, text):
        if self.out is None:
            sys.stdout.write(text)
            return None
        path = self.out / name
        path.write_text(text)
        self.files.append(name)
        return path

    def manifest(self):
        lam = find_lambda_star()
        return {
            "schema": f"manifest/{SCHEMA_VERSION}",
            "tool": "exdomains",
            "version": __version__,
            "command": self.command,
            "argv": self.argv,
            "settings": self.settings,
            "lambda_star": lam.lambda_star,
            "lambda_star_residual": lam.residual,
            "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
            "python": platform.python_version(),
            "numpy": np.__version__,
            "timing_s": {**self.timings, "total": time.perf_counter() - self._t0},
            "outputs": self.files,
            **self.extra,
        }

    def finish(self):
        if self.out is not None:
            (self.out / "manifest.json").write_text(dump_json(self.manifest()) + "\n")


def _manifest_ref(run):
    return "manifest.json" if run.out is not None else None


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------

def cmd_lambda_star(args, config, argv):
    tol = resolve(args, config, "tol")
    run = Run("lambda-star", argv, args.out, {"tol": tol})
    t0 = time.perf_counter()
    find_lambda_star.cache_clear()
    try:
        cr = find_lambda_star(tol)
    except (BracketError, RuntimeError, ValueError) as exc:
        print(f"error: critical radius not found: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    run.stage("lambda_star", t0)
    rec = {
        "schema": f"lambda_star/{SCHEMA_VERSION}",
        "manifest": _manifest_ref(run),
        "lambda_star": cr.lambda_star,
        "residual": cr.residual,
        "V_prime": cr.V_prime_at_root,
        "bisection": cr.bisection,
        "secant": cr.secant,
    }
    if run.out is None:
        print(f"lambda_star = {cr.lambda_star!r}")
        print(f"|V(lambda_star)| = {cr.residual:.3e}")
        print(f"V'(lambda_star) = {cr.V_prime_at_root!r}")
        print(f"bisection = {cr.bisection!r}  secant = {cr.secant!r}")
    else:
        run.write("lambda_star.json", dump_json(rec) + "\n")
        print(f"lambda_star = {cr.lambda_star!r}")
    run.finish()
    return EXIT_OK


def cmd_dispersion(args, config, argv):
    lo = resolve(args, config, "rho_min")
    hi = resolve(args, config, "rho_max")
    n = resolve(args, config, "samples")
    if not (0 < lo < hi) or n < 2:
        raise UsageError("need 0 < rho-min < rho-max and samples >= 2")
    run = Run("dispersion", argv, args.out,
              {"rho_min": lo, "rho_max": hi, "samples": n, "oracle": bool(args.oracle)})
    rho = np.linspace(lo, hi, n)
    t0 = time.perf_counter()
    V = dispersion_V(rho)
    Vp = dispersion_V_prime(rho)
    V1, V2, V3 = dispersion_components(rho)
    run.stage("closed_form", t0)
    header = ["rho", "V", "V_prime", "V1", "V2", "V3"]
    cols = [rho, V, Vp, V1, V2, V3]
    summary = {"sign_changes": int(np.sum(np.diff(np.sign(V)) != 0))}
    if args.oracle:
        t0 = time.perf_counter()
        try:
            Vq = dispersion_V_quadrature(rho)
        except QuadratureError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_NUMERIC
        run.stage("quadrature", t0)
        header.append("V_quadrature")
        cols.append(Vq)
        summary["max_abs_V_minus_V_quadrature"] = float(np.max(np.abs(V - Vq)))
    buf = io.StringIO()
    write_csv(buf, "dispersion", header, zip(*cols), _manifest_ref(run))
    run.write("dispersion.csv", buf.getvalue())
    run.extra["summary"] = summary
    line = f"# sign changes of V: {summary['sign_changes']}"
    if args.oracle:
        line += f"; max |V - V_quadrature| = {summary['max_abs_V_minus_V_quadrature']:.3e}"
    print(line, file=sys.stderr)
    run.finish()
    return EXIT_OK


def _load_profile(path):
    try:
        p = PeriodicProfile.load(path)
    except FileNotFoundError:
        raise UsageError(f"profile file not found: {path}") from None
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read profile {path}: {exc}") from None
    except ProfileError as exc:
        raise UsageError(f"invalid profile {path}: {exc}") from None
    try:
        p.check_positive()
    except ProfileError as exc:
        raise UsageError(f"invalid profile {path}: {exc}") from None
    return p


def cmd_eval_h(args, config, argv):
    if args.profile is None:
        raise UsageError("--profile is required")
    profile = _load_profile(args.profile)
    M = resolve(args, config, "points")
    method = resolve(args, config, "method")
    if M < 1:
        raise UsageError("--points must be >= 1")
    if method not in ("direct", "regularized", "both"):
        raise UsageError(f"unknown method {method!r}")
    quad = quad_from(args, config)
    run = Run("eval-h", argv, args.out,
              {"profile": str(args.profile), "points": M, "method": method, "quad": asdict(quad)})
    s = np.linspace(0.0, np.pi, M) if M > 1 else np.zeros(1)
    t0 = time.perf_counter()
    if method in ("regularized", "both"):
        Hr = h_regularized(profile, s, quad)
        run.stage("regularized", t0)
        t0 = time.perf_counter()
    if method in ("direct", "both"):
        Hd = h_direct(profile, s, quad)
        run.stage("direct", t0)
    if method == "both":
        header = ["s", "H", "H_plus_2pi", "H_direct", "discrepancy"]
        rows = zip(s, Hr, Hr + TWO_PI, Hd, Hr - Hd)
        summary = {"max_abs_residual": float(np.max(np.abs(Hr + TWO_PI))),
                   "max_discrepancy": float(np.max(np.abs(Hr - Hd)))}
    else:
        H = Hr if method == "regularized" else Hd
        header = ["s", "H", "H_plus_2pi"]
        rows = zip(s, H, H + TWO_PI)
        summary = {"max_abs_residual": float(np.max(np.abs(H + TWO_PI)))}
    buf = io.StringIO()
    write_csv(buf, "eval_h", header, rows, _manifest_ref(run))
    run.write("eval_h.csv", buf.getvalue())
    run.extra["summary"] = summary
    print("# " + "; ".join(f"{k} = {v:.3e}" for k, v in summary.items()), file=sys.stderr)
    run.finish()
    return EXIT_OK


def cmd_branch(args, config, argv):
    k = resolve(args, config, "k")
    quad = quad_from(args, config)
    try:
        cfg = SolverConfig(
            N=resolve(args, config, "modes"),
            newton_tol=resolve(args, config, "newton_tol"),
            max_newton_iters=resolve(args, config, "max_newton_iters"),
            fd_eps=resolve(args, config, "fd_eps"),
            s_step=resolve(args, config, "s_step"),
            s_max=resolve(args, config, "s_max"),
            quad=quad,
            dense_grid=resolve(args, config, "dense_grid"),
            verify_tol=resolve(args, config, "verify_tol"),
            workers=resolve_threads(args, config),
        )
        cfg.check_mode(k)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    settings = {"k": k, **_plain(asdict(cfg))}
    run = Run("branch", argv, args.out, settings)
    t0 = time.perf_counter()
    result = trace_branch(k, cfg)
    run.stage("trace", t0)

    lam_k = find_lambda_star().lambda_star / k
    n_nonzero = sum(1 for p in result.points if p.s != 0)
    lim = limit_at_zero(result) if n_nonzero >= 2 else float("nan")
    all_ok = all(p.verified for p in result.points)
    summary = {
        "k": k,
        "points": len(result.points),
        "all_verified": all_ok,
        "lambda_k": lam_k,
        "lambda_limit_s_to_0": lim,
        "stop_reason": result.stop_reason,
        "max_residual_sup": max(p.residual_grid_sup for p in result.points),
    }
    ref = _manifest_ref(run)
    doc = {
        "schema": f"branch/{SCHEMA_VERSION}",
        "manifest": ref,
        "k": k,
        "stop_reason": result.stop_reason,
        "points": [p.to_dict() for p in result.points],
    }
    if run.out is not None:
        run.write("branch.json", dump_json(doc) + "\n")
        rows = []
        for p in result.points:
            for l, c in enumerate(p.mu.coefficients):
                rows.append((p.k, p.s, p.lam, p.residual_grid_sup, p.mode0_residual,
                             p.verified, l, c))
        buf = io.StringIO()
        write_csv(buf, "branch", ["k", "s", "lambda", "residual_sup", "mode0_residual",
                                  "verified", "l", "mu_l"], rows, ref)
        run.write("branch.csv", buf.getvalue())
        report = {"schema": f"verification/{SCHEMA_VERSION}", "manifest": ref, **summary}
        run.write("verification.json", dump_json(report) + "\n")
    for p in result.points:
        print(f"s = {p.s:+.6f}  lambda = {p.lam:.15f}  sup|H+2pi| = {p.residual_grid_sup:.2e}"
              f"  {'VERIFIED' if p.verified else 'NOT VERIFIED'}")
    print(f"lambda*/k = {lam_k:.15f}; extrapolated lambda(0) = {lim:.15f}")
    for side, reason in result.stop_reason.items():
        if reason:
            print(f"branch side {side} stopped early: {reason}", file=sys.stderr)
    run.extra["summary"] = summary
    run.finish()
    if not all_ok:
        return EXIT_NUMERIC
    if args.strict and not result.complete:
        return EXIT_NUMERIC
    return EXIT_OK


def cmd_verify(args, config, argv):
    """Re-verify the points of a branch JSON file."""
    from .solver import BranchPoint

    try:
        doc = json.loads(Path(args.branch).read_text())
        pts = [BranchPoint.from_dict(d) for d in doc["points"]]
    except FileNotFoundError:
        raise UsageError(f"branch file not found: {args.branch}") from None
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise UsageError(f"cannot read branch file {args.branch}: {exc}") from None
    dense = resolve(args, config, "dense_grid")
    tol = resolve(args, config, "verify_tol")
    quad = quad_from(args, config).doubled()
    ok = True
    for p in pts:
        rep = verify_branch_point(p, dense, quad, tol)
        ok &= rep.verified
        print(f"s = {p.s:+.6f}  sup = {rep.sup_norm:.2e}  mode0 = {rep.mode0_residual:.1e}  "
              f"{'VERIFIED' if rep.verified else 'NOT VERIFIED'}")
    return EXIT_OK if ok else EXIT_NUMERIC


# --------------------------------------------------------------------------
# parser
# --------------------------------------------------------------------------

def build_parser():
    p = argparse.ArgumentParser(prog="exdomains", description=__doc__.splitlines()[0])
    p.add_argument("--config", help="flat key = value settings file")
    p.add_argument("--threads", type=int, help=f"worker threads (overrides ${THREADS_ENV})")
    p.add_argument("-v", "--verbose", action="count", default=0)
    p.add_argument("--version", action="version", version=f"exdomains {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def quad_flags(sp):
        sp.add_argument("--theta-nodes", dest="theta_nodes", type=int)
        sp.add_argument("--t-panels", dest="t_panels", type=int)
        sp.add_argument("--t-nodes", dest="t_nodes", type=int)
        sp.add_argument("--t-cap", dest="t_cap", type=float)

    sp = sub.add_parser("lambda-star", help="critical radius lambda*")
    sp.add_argument("--tol", type=float)
    sp.add_argument("--out", help="output directory")
    sp.set_defaults(func=cmd_lambda_star)

    sp = sub.add_parser("dispersion", help="tabulate the dispersion relation")
    sp.add_argument("--rho-min", dest="rho_min", type=float)
    sp.add_argument("--rho-max", dest="rho_max", type=float)
    sp.add_argument("--samples", type=int)
    sp.add_argument("--oracle", action="store_true", help="add the kernel-quadrature column")
    sp.add_argument("--out", help="output directory (default: CSV on stdout)")
    sp.set_defaults(func=cmd_dispersion)

    sp = sub.add_parser("eval-h", help="evaluate H(phi) for a profile file")
    sp.add_argument("--profile", help='JSON file {"N": int, "a": [...]}')
    sp.add_argument("--points", type=int)
    sp.add_argument("--method", choices=["direct", "regularized", "both"])
    sp.add_argument("--out", help="output directory (default: CSV on stdout)")
    quad_flags(sp)
    sp.set_defaults(func=cmd_eval_h)

    sp = sub.add_parser("branch", help="trace a bifurcating branch")
    sp.add_argument("--k", type=int)
    sp.add_argument("--s-max", dest="s_max", type=float)
    sp.add_argument("--s-step", dest="s_step", type=float)
    sp.add_argument("--modes", type=int, help="Galerkin truncation N")
    sp.add_argument("--newton-tol", dest="newton_tol", type=float)
    sp.add_argument("--max-newton-iters", dest="max_newton_iters", type=int)
    sp.add_argument("--fd-eps", dest="fd_eps", type=float)
    sp.add_argument("--dense-grid", dest="dense_grid", type=int)
    sp.add_argument("--verify-tol", dest="verify_tol", type=float)
    sp.add_argument("--strict", action="store_true", help="exit 1 if the branch stops early")
    sp.add_argument("--out", help="output directory")
    quad_flags(sp)
    sp.set_defaults(func=cmd_branch)

    sp = sub.add_parser("verify", help="re-verify the points of a branch JSON file")
    sp.add_argument("branch")
    sp.add_argument("--dense-grid", dest="dense_grid", type=int)
    sp.add_argument("--verify-tol", dest="verify_tol", type=float)
    quad_flags(sp)
    sp.set_defaults(func=cmd_verify)
    return p


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        config = read_config(args.config) if args.config else {}
        return args.func(args, config, argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NewtonError, QuadratureError, BracketError, FloatingPointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ProfileError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
