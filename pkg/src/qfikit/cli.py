"""``qfikit`` command-line entry point.

Exit codes: 0 success, 2 validation error, 3 numerical guard, 4 ``check`` failure.
"""

import argparse
import os
import re
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__
from .config import ConfigError, parse_config
from .derivs import d_rho_analytic
from .errors import DegenerateSpectrum, NotApplicable, NumericalGuard, SingularInformation, ValidationError
from .fidelity import (
    expansion_terms,
    fidelity_step,
    first_order_scaling_check,
    fs_numeric,
)
from .metrology import (
    PATHS,
    crb,
    paths_agree,
    qfi,
    qfi_all_paths,
    qfim,
    sld,
    sld_residual,
)
from .serialize import csv_dumps, dumps
from .states import spectral_support

COMMANDS = ("qfi", "qfim", "sld", "fidelity", "fs", "check", "sweep")

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_GUARD = 3
EXIT_CHECK = 4

# check-mode tolerances
PATH_ATOL, PATH_RTOL = 1e-7, 1e-6
FS_ANALYTIC_TOL = 1e-8
FS_NUMERIC_ATOL, FS_NUMERIC_RTOL = 1e-4, 1e-3
TRX_TOL = 1e-9
SLOPE_RANGE = (1.9, 2.1)

SWEEP_COLUMNS = (
    "theta",
    "qfi_support_sum",
    "qfi_sld_trace",
    "qfi_matrix_element",
    "fs_analytic",
    "fs_numeric",
    "qfi_quarter",
    "error",
)


def _params(cfg, args):
    if args.param is None:
        return list(range(cfg.n_params))
    if not 0 <= args.param < cfg.n_params:
        raise ConfigError(f"--param {args.param} out of range for {cfg.n_params} parameter(s)")
    return [args.param]


def _qfi_block(cfg, family, theta, m):
    values = qfi_all_paths(family, theta, m, **cfg.numerics.derivative_kwargs())
    ok, gap = paths_agree(values, PATH_ATOL, PATH_RTOL)
    return values, ok, gap


def _qfi_paths_lenient(cfg, family, theta, m, warn):
    """All QFI paths; a degenerate support only disables the support-sum path."""
    values = {}
    for path in PATHS:
        try:
            values[path] = qfi(family, theta, m, path, **cfg.numerics.derivative_kwargs())
        except DegenerateSpectrum as exc:
            values[path] = None
            warn.append(f"parameter {m}: {path} path unavailable ({exc})")
    return values


def _crb_field(info, warn):
    try:
        return crb(info), None
    except SingularInformation as exc:
        warn.append(str(exc))
        return None, exc.null_direction


def cmd_qfi(cfg, args, warn):
    family = cfg.family()
    out = []
    for m in _params(cfg, args):
        values = _qfi_paths_lenient(cfg, family, cfg.theta, m, warn)
        ok, gap = paths_agree([v for v in values.values() if v is not None], PATH_ATOL, PATH_RTOL)
        if not ok:
            warn.append(f"parameter {m}: QFI paths disagree by {gap:.3e}")
        bound, _ = _crb_field(values["sld_trace"], warn)
        out.append({"param": m, "qfi_by_path": values, "path_gap": gap, "crb": bound})
    return {"qfi": out}


def cmd_qfim(cfg, args, warn):
    res = qfim(cfg.family(), cfg.theta, **cfg.numerics.derivative_kwargs())
    bound, null = _crb_field(res, warn)
    return {
        "qfim": res.matrix,
        "classical_part": res.classical_part,
        "quantum_part": res.quantum_part,
        "crb": bound,
        "null_direction": null,
    }


def cmd_sld(cfg, args, warn):
    family = cfg.family()
    rho = family.rho(cfg.theta)
    spec = spectral_support(rho, cfg.numerics.rank_tol)
    out = []
    for m in _params(cfg, args):
        d = d_rho_analytic(family, cfg.theta, m, cfg.numerics.fd_step_first)
        L = sld(spec, d)
        out.append(
            {
                "param": m,
                "support_rank": L.support_rank,
                "convention": L.convention,
                "sld": L.mat,
                "residual": sld_residual(rho, d, L),
            }
        )
    return {"sld": out}


def cmd_fidelity(cfg, args, warn):
    family = cfg.family()
    delta = cfg.numerics.fs_delta
    out = []
    for m in _params(cfg, args):
        f = fidelity_step(family, cfg.theta, m, delta)
        out.append({"param": m, "delta": delta, "fidelity": f})
    return {"fidelity": out}


def _fs_values(cfg, family, theta, m):
    num = cfg.numerics
    terms = expansion_terms(
        family,
        theta,
        m,
        rank_tol=num.rank_tol,
        degeneracy_tol=num.degeneracy_tol,
        fd_step_first=num.fd_step_first,
        fd_step_second=num.fd_step_second,
    )
    numeric = fs_numeric(family, theta, m, num.fs_delta)
    return terms, max(terms.fs_from_Y, 0.0), numeric


def cmd_fs(cfg, args, warn):
    family = cfg.family()
    out = []
    for m in _params(cfg, args):
        values, _, _ = _qfi_block(cfg, family, cfg.theta, m)
        _, analytic, numeric = _fs_values(cfg, family, cfg.theta, m)
        quarter = values["support_sum"] / 4
        vals = (analytic, numeric, quarter)
        gap = max(abs(x - y) for x in vals for y in vals)
        out.append(
            {
                "param": m,
                "fs_analytic": analytic,
                "fs_numeric": numeric,
                "qfi_quarter": quarter,
                "max_pairwise_gap": gap,
            }
        )
    return {"fs": out}


def _check_param(cfg, family, m, warn):
    values, paths_ok, path_gap = _qfi_block(cfg, family, cfg.theta, m)
    terms, analytic, numeric = _fs_values(cfg, family, cfg.theta, m)
    quarter = values["support_sum"] / 4
    try:
        slope = first_order_scaling_check(family, cfg.theta, m)
    except NotApplicable as exc:
        slope = None
        warn.append(f"parameter {m}: first-order scaling check not applicable ({exc})")

    fs_numeric_tol = max(FS_NUMERIC_ATOL, FS_NUMERIC_RTOL * quarter)
    checks = {
        "qfi_paths_agree": {
            "value": path_gap,
            "tolerance": max(PATH_ATOL, PATH_RTOL * max(values.values())),
            "passed": paths_ok,
        },
        "fs_analytic_vs_qfi_quarter": {"value": abs(analytic - quarter), "tolerance": FS_ANALYTIC_TOL},
        "fs_numeric_vs_qfi_quarter": {"value": abs(numeric - quarter), "tolerance": fs_numeric_tol},
        "trX_residual": {"value": abs(terms.trX), "tolerance": TRX_TOL},
    }
    for name in ("fs_analytic_vs_qfi_quarter", "fs_numeric_vs_qfi_quarter", "trX_residual"):
        checks[name]["passed"] = bool(checks[name]["value"] <= checks[name]["tolerance"])
    checks["first_order_slope"] = {
        "value": slope,
        "range": list(SLOPE_RANGE),
        "passed": True if slope is None else bool(SLOPE_RANGE[0] <= slope <= SLOPE_RANGE[1]),
        "applicable": slope is not None,
    }
    record = {
        "param": m,
        "qfi_by_path": values,
        "fs_analytic": analytic,
        "fs_numeric": numeric,
        "qfi_quarter": quarter,
        "trX": terms.trX,
        "trY": terms.trY,
        "first_order_slope": slope,
        "checks": checks,
    }
    return record, all(c["passed"] for c in checks.values())


def cmd_check(cfg, args, warn):
    family = cfg.family()
    records, passed = [], True
    for m in _params(cfg, args):
        rec, ok = _check_param(cfg, family, m, warn)
        records.append(rec)
        passed = passed and ok
    return {"check": records, "passed": passed}


_SWEEP_RE = re.compile(r"^(?:theta)?\[?(\d+)\]?=([^:]+):([^:]+):(\d+)$")


def parse_sweep(spec, n_params):
    match = _SWEEP_RE.match(spec.strip())
    if not match:
        raise ConfigError(f"--sweep {spec!r}: expected PARAM=START:STOP:STEPS, e.g. 0=0:3.14:21")
    idx, start, stop, steps = match.groups()
    idx, steps = int(idx), int(steps)
    try:
        start, stop = float(start), float(stop)
    except ValueError as exc:
        raise ConfigError(f"--sweep {spec!r}: START and STOP must be numbers") from exc
    if not 0 <= idx < n_params:
        raise ConfigError(f"--sweep: parameter {idx} out of range for {n_params} parameter(s)")
    if steps < 1:
        raise ConfigError("--sweep: STEPS must be at least 1")
    return idx, np.linspace(start, stop, steps)


def _sweep_point(cfg, family, idx, m, value):
    theta = cfg.theta.copy()
    theta[idx] = value
    row = {"theta": float(value)}
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            values = qfi_all_paths(family, theta, m, **cfg.numerics.derivative_kwargs())
            terms = expansion_terms(
                family, theta, m,
                rank_tol=cfg.numerics.rank_tol,
                degeneracy_tol=cfg.numerics.degeneracy_tol,
                fd_step_first=cfg.numerics.fd_step_first,
                fd_step_second=cfg.numerics.fd_step_second,
            )
            numeric = fs_numeric(family, theta, m, cfg.numerics.fs_delta)
    except NumericalGuard as exc:
        row["error"] = f"{type(exc).__name__}: {exc}"
        return row
    for path in PATHS:
        row[f"qfi_{path}"] = values[path]
    row["fs_analytic"] = max(terms.fs_from_Y, 0.0)
    row["fs_numeric"] = numeric
    row["qfi_quarter"] = values["support_sum"] / 4
    return row


def _thread_cap():
    raw = os.environ.get("QFIKIT_THREADS")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            pass
    return min(8, os.cpu_count() or 1)


def cmd_sweep(cfg, args, warn):
    if not args.sweep:
        raise ConfigError("sweep requires --sweep PARAM=START:STOP:STEPS")
    idx, grid = parse_sweep(args.sweep, cfg.n_params)
    m = idx if args.param is None else _params(cfg, args)[0]
    family = cfg.family()
    with ThreadPoolExecutor(max_workers=_thread_cap()) as pool:
        rows = list(pool.map(lambda v: _sweep_point(cfg, family, idx, m, v), grid))
    failed = sum("error" in r for r in rows)
    if failed:
        warn.append(f"{failed} of {len(rows)} sweep points hit a numerical guard")
    return {"sweep": {"param": idx, "qfi_param": m, "points": rows}}


HANDLERS = {
    "qfi": cmd_qfi,
    "qfim": cmd_qfim,
    "sld": cmd_sld,
    "fidelity": cmd_fidelity,
    "fs": cmd_fs,
    "check": cmd_check,
    "sweep": cmd_sweep,
}


def build_parser():
    p = argparse.ArgumentParser(
        prog="qfikit",
        description="Quantum Fisher information, SLDs, Uhlmann fidelity and fidelity susceptibility.",
    )
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", required=True, metavar="PATH", help="JSON model configuration")
    p.add_argument("--param", type=int, metavar="M", help="restrict to parameter index M")
    p.add_argument("--output", choices=("json", "csv"), default="json")
    p.add_argument("--fs-delta", type=float, metavar="X")
    p.add_argument("--rank-tol", type=float, metavar="X")
    p.add_argument("--degeneracy-tol", type=float, metavar="X")
    p.add_argument("--fd-step-first", type=float, metavar="X")
    p.add_argument("--fd-step-second", type=float, metavar="X")
    p.add_argument("--sweep", metavar="PARAM=START:STOP:STEPS")
    p.add_argument("--out", metavar="PATH", help="write the report here instead of stdout")
    return p


def _write(text, path):
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _error_record(command, exc, code):
    rec = {"type": type(exc).__name__, "message": str(exc), "exit_code": code}
    for attr in ("eigenvalues", "leak", "eigenvalue", "residual"):
        val = getattr(exc, attr, None)
        if val is not None:
            rec[attr] = val
    return {"command": command, "status": "error", "error": rec}


def run(command, cfg, args):
    """Execute ``command``; returns ``(report, exit_code)``."""
    warn = []
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        results = HANDLERS[command](cfg, args, warn)
    warn.extend(str(w.message) for w in caught)
    status, code = "ok", EXIT_OK
    if command == "check" and not results["passed"]:
        status, code = "check_failed", EXIT_CHECK
    report = {
        "command": command,
        "status": status,
        "inputs": cfg.echo(),
        "results": results,
        "warnings": warn,
    }
    return report, code


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = parse_config(args.config).with_numerics(
            rank_tol=args.rank_tol,
            degeneracy_tol=args.degeneracy_tol,
            fd_step_first=args.fd_step_first,
            fd_step_second=args.fd_step_second,
            fs_delta=args.fs_delta,
        )
        if args.output == "csv" and args.command != "sweep":
            raise ConfigError("--output csv is only available for the sweep command")
        report, code = run(args.command, cfg, args)
    except ValidationError as exc:
        _write(dumps(_error_record(args.command, exc, EXIT_VALIDATION)), args.out)
        return EXIT_VALIDATION
    except NumericalGuard as exc:
        _write(dumps(_error_record(args.command, exc, EXIT_GUARD)), args.out)
        return EXIT_GUARD

    if args.output == "csv":
        _write(csv_dumps(SWEEP_COLUMNS, report["results"]["sweep"]["points"]), args.out)
    else:
        _write(dumps(report), args.out)
    return code


if __name__ == "__main__":
    sys.exit(main())
