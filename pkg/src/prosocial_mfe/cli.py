"""Command-line front end: ``solve``, ``sweep``, ``region`` and ``optimize``.

Settings come from built-in defaults, then an optional ``--config`` file,
then command-line flags. The config file is either flat ``key = value`` text
(``#`` starts a comment) or a JSON object; a JSON report written by this tool
works too, since every report embeds its resolved config under ``"config"``.

Exit codes: 0 success, 2 invalid configuration, 3 solver failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import design_search, type_b, type_bm
from .distributions import parse_distribution
from .errors import MFEError, ParameterError
from .metrics import build_report
from .model import ModelParams, TypeA, TypeB, TypeBm

log = logging.getLogger("prosocial_mfe")

SIG = 12
EXIT_CONFIG = 2
EXIT_SOLVER = 3

DEFAULTS = {
    "scheme": "type-b",
    "dist": "uniform:0,1",
    "alpha": 1.0,
    "beta": 0.0,
    "theta": None,
    "thetas": None,
    "vmin": 0.0,
    "levels": None,
    "theta_max": None,
    "snap": None,
    "grid": [],
    "beta_range": [0.0, 0.3],
    "theta_range": [0.0, 1.5],
    "resolution": [50, 50],
    "cross_check": True,
    "tol_root": 1e-12,
    "tol_quad": 1e-10,
    "tol_fp": 1e-12,
}

FLOAT_KEYS = {"alpha", "beta", "theta", "vmin", "theta_max", "tol_root", "tol_quad", "tol_fp"}
FLOAT_LIST_KEYS = {"thetas", "snap", "beta_range", "theta_range"}
SWEEP_KEYS = ("alpha", "beta", "theta")
SWEEP_COLUMNS = ["scheme", "alpha", "beta", "theta_or_thetas", "u_or_v", "W", "V", "case", "status"]
REGION_COLUMNS = ["beta", "theta", "cond1", "cond2", "flagged", "wb_minus_wa"]


class ConfigError(ParameterError):
    """Unusable configuration (maps to exit code 2)."""


# ---------------------------------------------------------------- formatting


def fmt(x) -> str:
    """One CSV cell: 12 significant digits for floats, ``;`` inside lists."""
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (list, tuple)):
        return ";".join(fmt(v) for v in x)
    if isinstance(x, (float, np.floating)):
        return "nan" if math.isnan(x) else f"{float(x):.{SIG}g}"
    return str(x)


def _round_json(obj):
    if isinstance(obj, dict):
        return {str(k): _round_json(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round_json(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return float(f"{x:.{SIG}g}") if math.isfinite(x) else None
    return obj


def dump_json(obj) -> str:
    return json.dumps(_round_json(obj), indent=2, sort_keys=True) + "\n"


def dump_csv(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(x) for x in row])
    return buf.getvalue()


def _emit(text: str, path: str | None):
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(text)


# ---------------------------------------------------------------- config


def _as_float_list(val, key):
    if isinstance(val, str):
        val = [tok for tok in val.replace(";", ",").split(",") if tok.strip()]
    try:
        return [float(v) for v in val]
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{key}: expected a comma separated list of numbers, got {val!r}") from exc


def _coerce(key, val):
    if val is None or (isinstance(val, str) and val.strip().lower() in ("", "none", "null")):
        return None
    try:
        if key in FLOAT_KEYS:
            return float(val)
        if key == "levels":
            return int(val)
        if key == "resolution":
            vals = [int(float(v)) for v in _as_float_list(val, key)]
            return vals * 2 if len(vals) == 1 else vals
        if key == "cross_check":
            if isinstance(val, str):
                return val.strip().lower() in ("1", "true", "yes", "on")
            return bool(val)
        if key == "grid":
            if isinstance(val, str):
                return [g.strip() for g in val.split("|") if g.strip()]
            return [str(g) for g in val]
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{key}: bad value {val!r}") from exc
    if key in FLOAT_LIST_KEYS:
        return _as_float_list(val, key)
    return str(val).strip()


def read_config_file(path: str) -> dict:
    """Parse a flat ``key = value`` file or a JSON object (a report's ``"config"`` is used if present)."""
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if text.lstrip().startswith("{"):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
        return dict(data.get("config", data))
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, val = line.partition("=")
        if not sep:
            raise ConfigError(f"{path}:{lineno}: expected key = value")
        key = key.strip().replace("-", "_")
        if key == "grid":
            out.setdefault("grid", []).append(val.strip())
        else:
            out[key] = val.strip()
    return out


def resolve_config(args) -> dict:
    cfg = dict(DEFAULTS)
    layers = [read_config_file(args.config)] if getattr(args, "config", None) else []
    layers.append({k: v for k, v in vars(args).items() if k in DEFAULTS and v is not None})
    for layer in layers:
        for key, val in layer.items():
            key = key.replace("-", "_")
            if key not in DEFAULTS:
                raise ConfigError(f"unknown config key {key!r}")
            cfg[key] = _coerce(key, val)
    for key in ("tol_root", "tol_quad", "tol_fp"):
        if not cfg[key] > 0:
            raise ConfigError(f"{key} must be positive, got {cfg[key]}")
    if cfg["vmin"] is None or cfg["vmin"] < 0:
        raise ConfigError("vmin must be nonnegative")
    if cfg["alpha"] is None or cfg["beta"] is None:
        raise ConfigError("alpha and beta are required")
    ModelParams(cfg["alpha"], cfg["beta"])
    parse_distribution(cfg["dist"], cfg["tol_quad"])
    return cfg


def _dist(cfg):
    return parse_distribution(cfg["dist"], cfg["tol_quad"])


def _scheme(name, cfg):
    if name == "type-a":
        return TypeA()
    if name == "type-b":
        if cfg["theta"] is None:
            raise ConfigError("type-b needs --theta")
        return TypeB(cfg["theta"])
    if name == "type-bm":
        if not cfg["thetas"]:
            raise ConfigError("type-bm needs --thetas")
        return TypeBm(tuple(cfg["thetas"]))
    raise ConfigError(f"unknown scheme {name!r}; expected type-a, type-b or type-bm")


def _solver_opts(cfg):
    return {"xtol": cfg["tol_root"], "fp_tol": cfg["tol_fp"]}


def parse_grid(axes_text: list[str]) -> list[tuple[str, list[float]]]:
    """``name=start:stop:count`` (inclusive linspace) or ``name=v1,v2,...``; names alpha, beta, theta."""
    axes = []
    for item in axes_text:
        name, sep, body = item.partition("=")
        name = name.strip()
        if not sep or name not in SWEEP_KEYS:
            raise ConfigError(f"bad grid {item!r}; expected one of {SWEEP_KEYS} = start:stop:count")
        try:
            if ":" in body:
                start, stop, count = body.split(":")
                vals = np.linspace(float(start), float(stop), int(count)).tolist()
            else:
                vals = _as_float_list(body, name)
        except ValueError as exc:
            raise ConfigError(f"bad grid {item!r}") from exc
        if not vals:
            raise ConfigError(f"grid {item!r} is empty")
        axes.append((name, vals))
    return axes


# ---------------------------------------------------------------- commands


def cmd_solve(cfg, args) -> int:
    dist = _dist(cfg)
    params = ModelParams(cfg["alpha"], cfg["beta"])
    scheme = _scheme(cfg["scheme"], cfg)
    report = build_report(scheme, dist, params, **_solver_opts(cfg))
    report.config = {k: cfg[k] for k in DEFAULTS}
    _emit(dump_json(report.to_dict()), args.out)
    if args.profile_out and not isinstance(scheme, TypeA):
        top = max(float(dist.ppf(0.999)), 1.5 * params.alpha * max(report.diagnostics.get("thetas", [cfg["theta"] or 0.0])))
        w = np.linspace(0.0, top, 401)
        if isinstance(scheme, TypeB):
            eq = type_b.solve_equilibrium(scheme.theta, dist, params, xtol=cfg["tol_root"])
            acts = type_b.best_response_profile(eq, w)
        else:
            eq = type_bm.solve_cutoffs(scheme.thetas, dist, params, tol=cfg["tol_fp"], xtol=cfg["tol_root"], verify=False)
            acts = type_bm.equilibrium_action_bm(eq, w)
        _emit(dump_csv(["w", "action"], zip(w, np.atleast_1d(acts))), args.profile_out)
    if args.curves_out:
        if not isinstance(scheme, TypeBm) or len(scheme.thetas) != 2:
            raise ConfigError("--curves-out needs type-bm with exactly two thresholds")
        rows = type_bm.implicit_curves(scheme.thetas, dist, params)
        _emit(dump_csv(["curve", "v1", "v2"], rows), args.curves_out)
    return 0


def _sweep_cell(job):
    """One sweep row; failures become a row with a status message instead of raising."""
    name, point, cfg = job
    cell = dict(cfg, **point)
    theta_col = cell["theta"] if name == "type-b" else (cell["thetas"] if name == "type-bm" else None)
    try:
        dist = _dist(cell)
        params = ModelParams(cell["alpha"], cell["beta"])
        rep = build_report(_scheme(name, cell), dist, params, **_solver_opts(cell))
    except MFEError as exc:
        return [name, cell["alpha"], cell["beta"], theta_col, None, None, None, None, f"error: {exc}"]
    u_or_v = rep.u if name == "type-b" else (rep.v if name == "type-bm" else None)
    return [name, cell["alpha"], cell["beta"], theta_col, u_or_v, rep.W, rep.V, rep.case, "ok"]


def _map(fn, jobs, workers):
    if workers and workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, jobs))  # map keeps input order
    return [fn(j) for j in jobs]


def cmd_sweep(cfg, args) -> int:
    axes = parse_grid(cfg["grid"])
    names = [a[0] for a in axes]
    schemes = [s.strip() for s in cfg["scheme"].split(",") if s.strip()]
    for s in schemes:
        if s not in ("type-a", "type-b", "type-bm"):
            raise ConfigError(f"unknown scheme {s!r}")
    points = [dict(zip(names, combo)) for combo in itertools.product(*(a[1] for a in axes))] or [{}]
    jobs = [(s, p, cfg) for s in schemes for p in points]
    rows = _map(_sweep_cell, jobs, args.workers)
    _emit(dump_csv(SWEEP_COLUMNS, rows), args.out)
    return 0


def cmd_region(cfg, args) -> int:
    dist = _dist(cfg)
    scan = design_search.scan_region(
        dist,
        alpha=cfg["alpha"],
        beta_range=tuple(cfg["beta_range"]),
        theta_range=tuple(cfg["theta_range"]),
        resolution=tuple(cfg["resolution"]),
        cross_check=cfg["cross_check"],
    )
    _emit(dump_csv(REGION_COLUMNS, scan.rows()), args.out)
    log.info("region: %d of %d cells flagged", int(scan.flagged.sum()), scan.flagged.size)
    return 0


def cmd_optimize(cfg, args) -> int:
    dist = _dist(cfg)
    params = ModelParams(cfg["alpha"], cfg["beta"])
    scheme = cfg["scheme"]
    if scheme == "type-b":
        res = design_search.optimize_threshold_type_b(
            dist, params, v_min=cfg["vmin"], theta_max=cfg["theta_max"], snap=cfg["snap"]
        )
    elif scheme == "type-bm":
        levels = cfg["levels"] or (len(cfg["thetas"]) + 1 if cfg["thetas"] else None)
        if levels is None:
            raise ConfigError("type-bm optimize needs --levels")
        res = design_search.optimize_thresholds_bm(
            dist, params, levels, v_min=cfg["vmin"], theta_max=cfg["theta_max"], snap=cfg["snap"]
        )
    else:
        raise ConfigError(f"optimize supports type-b and type-bm, not {scheme!r}")
    out = res.to_dict()
    out["config"] = {k: cfg[k] for k in DEFAULTS}
    _emit(dump_json(out), args.out)
    return 0


COMMANDS = {"solve": cmd_solve, "sweep": cmd_sweep, "region": cmd_region, "optimize": cmd_optimize}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key=value file or JSON (a report's embedded config works)")
    common.add_argument("--scheme", help="type-a | type-b | type-bm (sweep takes a comma list)")
    common.add_argument("--dist", help="e.g. uniform:0,1  exponential:1  weibull:0.5,1  empirical:@points.txt")
    common.add_argument("--alpha", type=float)
    common.add_argument("--beta", type=float)
    common.add_argument("--theta", type=float)
    common.add_argument("--thetas", help="comma separated increasing thresholds")
    common.add_argument("--vmin", type=float, help="privacy floor for optimize")
    common.add_argument("--levels", type=int, help="number of bins for type-bm optimize")
    common.add_argument("--theta-max", dest="theta_max", type=float)
    common.add_argument("--snap", help="comma separated pivotal threshold values")
    common.add_argument("--grid", action="append", help="sweep axis name=start:stop:count (repeatable)")
    common.add_argument("--beta-range", dest="beta_range", help="lo,hi")
    common.add_argument("--theta-range", dest="theta_range", help="lo,hi")
    common.add_argument("--resolution", help="n_beta,n_theta")
    common.add_argument("--no-cross-check", dest="cross_check", action="store_const", const=False)
    common.add_argument("--tol-root", dest="tol_root", type=float)
    common.add_argument("--tol-quad", dest="tol_quad", type=float)
    common.add_argument("--tol-fp", dest="tol_fp", type=float)
    common.add_argument("--out", help="output path (stdout if omitted)")
    common.add_argument("--workers", type=int, default=1)

    ap = argparse.ArgumentParser(prog="prosocial-mfe", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    solve = sub.add_parser("solve", parents=[common], help="solve one design and write a JSON report")
    solve.add_argument("--profile-out", dest="profile_out", help="CSV of the equilibrium action profile")
    solve.add_argument("--curves-out", dest="curves_out", help="CSV of the two implicit cutoff curves")
    sub.add_parser("sweep", parents=[common], help="grid of designs to CSV")
    sub.add_parser("region", parents=[common], help="(beta, theta) region where coarse feedback wins, to CSV")
    sub.add_parser("optimize", parents=[common], help="threshold search under a privacy floor, to JSON")
    return ap


def main(argv=None) -> int:
    logging.basicConfig(level=os.environ.get("MFE_LOG", "WARNING").upper(), format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    for key in ("profile_out", "curves_out"):
        if not hasattr(args, key):
            setattr(args, key, None)
    try:
        cfg = resolve_config(args)
        return COMMANDS[args.command](cfg, args)
    except ParameterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except MFEError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
