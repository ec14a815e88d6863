"""Command-line front end: ``wpa {density,exponent,dwell,figure1,wtest}``.

Every CSV starts with one ``#`` line holding the run configuration (and any
summary) as JSON; numbers are written with 17 significant digits so equal
configurations give byte-identical files.

Exit codes: 0 success (divergent dwell times included), 2 configuration
error, 3 numerical failure.  Errors are reported on stderr as JSON.
"""

from __future__ import annotations

import argparse
import io
import json
import math
import sys

import numpy as np

from . import __version__
from .asymptotics import TimeGrid, build_trace, fit_exponent, log_derivative_curve
from .complexfn import SERIES_RADIUS, identity_residuals
from .dwell import SpatialInterval, dwell_report
from .errors import (
    DegenerateInputError,
    NonConvergenceError,
    UnsupportedVariantError,
    WPAError,
)
from .propagator import QuadratureConfig, evolve
from .states import Gaussian, TruncatedGaussian, UnitSystem, parse_state

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3
STATE_FLAGS = ("alpha", "delta", "p0", "x0", "beta")


class ConfigError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _fmt(v):
    if isinstance(v, str):
        return v
    v = float(v)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return "%.17g" % v


def _json_safe(obj):
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isnan(v):
            return None
        if math.isinf(v):
            return "divergent" if v > 0 else "-inf"
        return v
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def _csv(header: dict, columns: list[str], rows) -> str:
    buf = io.StringIO()
    buf.write("# " + json.dumps(_json_safe(header), sort_keys=True) + "\n")
    buf.write(",".join(columns) + "\n")
    for row in rows:
        buf.write(",".join(_fmt(v) for v in row) + "\n")
    return buf.getvalue()


def _json(obj) -> str:
    return json.dumps(_json_safe(obj), sort_keys=True, indent=2) + "\n"


def _emit(text: str, out: str | None):
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)


def _table(args, header, columns, rows):
    if args.format == "json":
        body = dict(header)
        body["columns"] = columns
        body["rows"] = [[float(v) for v in r] for r in rows]
        return _json(body)
    return _csv(header, columns, rows)


# -- configuration -----------------------------------------------------------


def _add_common(p, state=True, grid=True, x=True):
    if state:
        p.add_argument("--state", default="truncated_gaussian", help="state kind, key=value string, or JSON")
        for name in STATE_FLAGS:
            p.add_argument(f"--{name}", type=float, default=None)
    if x:
        p.add_argument("--x", type=float, default=0.0, help="evaluation point")
    if grid:
        p.add_argument("--tmin", type=float, default=0.1)
        p.add_argument("--tmax", type=float, default=1e6)
        p.add_argument("--per-decade", type=int, default=16)
    p.add_argument("--out", default=None, help="output file (stdout when omitted)")
    p.add_argument("--format", choices=("csv", "json"), default=None)
    p.add_argument("--hbar", type=float, default=1.0)
    p.add_argument("--mass", type=float, default=1.0)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="wpa", description="Free wave-packet evolution, decay exponents and dwell times.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("density", help="|psi(x, t)|^2 on a log time grid")
    _add_common(p)
    p.add_argument("--route", choices=("closed_form", "quadrature", "both"), default="closed_form")

    p = sub.add_parser("exponent", help="slope curve d ln|psi|^2 / d ln t and fitted exponent")
    _add_common(p)
    p.add_argument("--route", choices=("closed_form", "quadrature"), default=None)
    p.add_argument("--window", type=float, default=1.5, help="fit window in decades")

    p = sub.add_parser("dwell", help="dwell time in [a, b] by three routes")
    _add_common(p, grid=False, x=False)
    p.add_argument("--a", type=float, default=-1.0)
    p.add_argument("--b", type=float, default=1.0)

    p = sub.add_parser("figure1", help="slope curves of the truncated and plain Gaussian packets")
    _add_common(p, state=False)
    p.add_argument("--window", type=float, default=2.0, help="fit window in decades")

    p = sub.add_parser("wtest", help="w-function identity residuals")
    p.add_argument("--points", type=int, default=1000)
    p.add_argument("--radius", type=float, default=5.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.add_argument("--format", choices=("csv", "json"), default=None)
    return parser


def _state_from_args(args):
    text = args.state.strip()
    mapping = parse_state(text).to_dict() if ("=" in text or text.startswith("{")) else {"state": text}
    for name in STATE_FLAGS:
        val = getattr(args, name)
        if val is not None:
            mapping[name] = val
    return parse_state(mapping)


def _units(args):
    return UnitSystem(hbar=args.hbar, mass=args.mass)


def _quad_config():
    try:
        return QuadratureConfig.from_env()
    except ValueError as exc:
        raise ConfigError(f"WPA_TOL: {exc}") from None


def _grid(args):
    return TimeGrid(args.tmin, args.tmax, args.per_decade)


def _base_header(args, state=None, units=None, cfg=None):
    header = {"command": args.command}
    if state is not None:
        header["state"] = state.to_dict()
    for key in ("x", "a", "b", "route", "window"):
        if hasattr(args, key) and getattr(args, key) is not None:
            header[key] = getattr(args, key)
    if hasattr(args, "tmin"):
        header["grid"] = {"t_min": args.tmin, "t_max": args.tmax, "points_per_decade": args.per_decade}
    if units is not None:
        header["units"] = {"hbar": units.hbar, "mass": units.mass}
    if cfg is not None:
        header["rel_tol"] = cfg.rel_tol
    return {"config": header}


# -- commands -----------------------------------------------------------------


def cmd_density(args):
    state, units, cfg, grid = _state_from_args(args), _units(args), _quad_config(), _grid(args)
    ts = grid.values
    header = _base_header(args, state, units, cfg)
    if args.route == "both":
        cf = np.asarray(evolve(state, args.x, ts, units, "closed_form"))
        qd = np.asarray(evolve(state, args.x, ts, units, "quadrature", cfg))
        dev = np.abs(cf - qd) / np.maximum(np.abs(cf), 1e-12)
        header["summary"] = {"max_deviation": float(dev.max())}
        columns = ["t", "rho_closed_form", "rho_quadrature"]
        rows = zip(ts, np.abs(cf) ** 2, np.abs(qd) ** 2)
    else:
        psi = np.asarray(evolve(state, args.x, ts, units, args.route, cfg))
        columns = ["t", "rho"]
        rows = zip(ts, np.abs(psi) ** 2)
    return _table(args, header, columns, list(rows))


def cmd_exponent(args):
    state, units, cfg, grid = _state_from_args(args), _units(args), _quad_config(), _grid(args)
    route = args.route or ("closed_form" if state.has_closed_form else "quadrature")
    args.route = route
    trace = build_trace(state, args.x, grid, units, route=route, cfg=cfg)
    est = fit_exponent(trace, args.window)
    header = _base_header(args, state, units, cfg)
    header["summary"] = est.to_dict()
    return _table(args, header, ["ln_t", "dlnrho_dlnt"], est.slope_curve.tolist())


def cmd_dwell(args):
    state, units, cfg = _state_from_args(args), _units(args), _quad_config()
    report = dwell_report(state, SpatialInterval(args.a, args.b), units, cfg)
    header = _base_header(args, state, units, cfg)
    if args.format == "csv":
        rows = [(k, v if isinstance(v, str) else _fmt(v)) for k, v in report.to_dict().items()]
        return _csv(header, ["quantity", "value"], rows)
    body = dict(header)
    body["report"] = report.to_dict()
    return _json(body)


def cmd_figure1(args):
    units, grid = _units(args), _grid(args)
    states = {"truncated_gaussian": TruncatedGaussian(), "gaussian": Gaussian()}
    curves, summary = {}, {}
    for name, st in states.items():
        trace = build_trace(st, args.x, grid, units)
        curves[name] = log_derivative_curve(trace)
        est = fit_exponent(trace, args.window)
        summary[name] = {"tail_slope": float(curves[name][-1, 1]), **est.to_dict()}
    header = _base_header(args, units=units)
    header["config"]["states"] = {k: v.to_dict() for k, v in states.items()}
    header["summary"] = summary
    ln_t = curves["truncated_gaussian"][:, 0]
    rows = zip(ln_t, curves["truncated_gaussian"][:, 1], curves["gaussian"][:, 1])
    return _table(args, header, ["ln_t", "truncated_gaussian", "gaussian"], list(rows))


def cmd_wtest(args):
    if args.points < 1 or not args.radius > 0:
        raise ConfigError("--points must be >= 1 and --radius > 0")
    rng = np.random.default_rng(args.seed)
    r = args.radius * np.sqrt(rng.random(args.points))
    z = r * np.exp(2j * math.pi * rng.random(args.points))
    res = identity_residuals(z)
    # the double-precision Maclaurin sum is only tested inside its own radius
    small = z * (SERIES_RADIUS / args.radius)
    res["series"] = identity_residuals(small)["series"]
    rows = []
    for name in ("reflection", "conjugation", "derivative"):
        rows += [(name, zi.real, zi.imag, v) for zi, v in zip(z, res[name])]
    rows += [("series", zi.real, zi.imag, v) for zi, v in zip(small, res["series"])]
    header = {
        "config": {"command": "wtest", "points": args.points, "radius": args.radius, "seed": args.seed},
        "summary": {k: float(v.max()) for k, v in res.items()},
    }
    if args.format == "json":
        body = dict(header)
        body["columns"] = ["identity", "z_re", "z_im", "residual"]
        body["rows"] = [[n, float(a), float(b), float(c)] for n, a, b, c in rows]
        return _json(body)
    return _csv(header, ["identity", "z_re", "z_im", "residual"], rows)


COMMANDS = {
    "density": cmd_density,
    "exponent": cmd_exponent,
    "dwell": cmd_dwell,
    "figure1": cmd_figure1,
    "wtest": cmd_wtest,
}


def _fail(code, kind, message, **extra):
    sys.stderr.write(json.dumps(_json_safe({"error": kind, "message": str(message), **extra}), sort_keys=True) + "\n")
    return code


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if args.format is None:
            args.format = "json" if args.command == "dwell" else "csv"
        text = COMMANDS[args.command](args)
    except ConfigError as exc:
        return _fail(EXIT_CONFIG, "config", exc)
    except NonConvergenceError as exc:
        return _fail(EXIT_NUMERIC, type(exc).__name__, exc, estimate=_estimate(exc.estimate), error=exc.error)
    except (DegenerateInputError, OverflowError, ArithmeticError) as exc:
        return _fail(EXIT_NUMERIC, type(exc).__name__, exc)
    except (ValueError, UnsupportedVariantError, WPAError, OSError) as exc:
        return _fail(EXIT_CONFIG, type(exc).__name__, exc)
    try:
        _emit(text, args.out)
    except OSError as exc:
        return _fail(EXIT_CONFIG, type(exc).__name__, exc)
    return EXIT_OK


def _estimate(v):
    if v is None:
        return None
    if isinstance(v, complex):
        return [v.real, v.imag]
    return float(v)


if __name__ == "__main__":
    sys.exit(main())
