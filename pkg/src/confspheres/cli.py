"""Command-line front end.

Exit codes: 0 all checks passed, 1 a numerical contract failed, 2 usage,
configuration or evaluation error.
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import io
import json
import math
import random
import re
import sys
from dataclasses import dataclass
from dataclasses import field as dc_field
from pathlib import Path

import numpy as np
import yaml

from . import __version__, conformal, spheres, suite
from ._parallel import ordered_map
from .cones import ConeSpec, parse_cone
from .errors import ConfigError, ConfSpheresError
from .fields import (
    Bubble,
    Constant,
    FundamentalSolution,
    HarmonicPolynomial,
    QuadraticField,
    load_grid,
)
from .sampling import box_points

EXIT_OK, EXIT_FAIL, EXIT_ERROR = 0, 1, 2
FORMATS = ("table", "csv", "structured")

CONFIG_KEYS = {
    "n", "field", "grid", "cone", "points", "centers", "delta", "lambda_max",
    "outer_radius", "tol", "format", "output", "trials", "word_length", "form",
    "radial_samples", "angular_samples", "bisect_tol", "tolerances", "seedless",
    "corrupt_exponent", "constancy_samples",
}


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    n: int = 3
    field: str | None = None
    grid: str | None = None
    cone: str = "gammaK:1"
    points: list | None = None
    centers: list | None = None
    delta: float = 0.0
    lambda_max: float = 10.0
    outer_radius: float = 50.0
    tol: float | None = None
    format: str = "table"
    output: str | None = None
    trials: int = 100
    word_length: int = 4
    form: str = "u"
    radial_samples: int = 64
    angular_samples: int = 256
    bisect_tol: float = 1e-4
    tolerances: dict = dc_field(default_factory=dict)
    seedless: bool = False
    corrupt_exponent: float = 0.0
    constancy_samples: int = 200


# config loading ---------------------------------------------------------------


def load_config_file(path):
    """Parse a YAML mapping; returns ``(values, key_lines)``."""
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"{path}: config file not found")
    text = p.read_text()
    try:
        node = yaml.compose(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = mark.line + 1 if mark is not None else "?"
        raise UsageError(f"{path}:{where}: {getattr(exc, 'problem', exc)}") from None
    if node is None:
        raise UsageError(f"{path}:1: config file is empty")
    if not isinstance(node, yaml.MappingNode):
        raise UsageError(f"{path}:{node.start_mark.line + 1}: config must be a mapping")
    lines = {k.value: k.start_mark.line + 1 for k, _ in node.value}
    data = yaml.safe_load(text)
    for key in data:
        if key not in CONFIG_KEYS:
            raise UsageError(f"{path}:{lines.get(key, '?')}: unknown config key {key!r}")
    return data, lines


def _floats(text):
    return [float(v) for v in str(text).replace(";", ",").split(",") if v.strip()]


def parse_point_list(text, n):
    """``"0,0,0;1,0,0"`` or a YAML list of lists."""
    if isinstance(text, list):
        pts = [[float(v) for v in p] for p in text]
    else:
        pts = [_floats(chunk) for chunk in str(text).split(";") if chunk.strip()]
    for p in pts:
        if len(p) != n:
            raise ConfigError(f"point {p} does not have {n} coordinates")
    return [np.array(p) for p in pts]


def build_field(spec, n):
    """``bubble[:c]``, ``constant:c``, ``fundamental[:p]``, ``harmonic:expr``, ``quadratic:c0,b``."""
    m = re.fullmatch(r"\s*(\w+)\s*\((.*)\)\s*", spec)
    if m:
        spec = f"{m.group(1)}:{m.group(2)}"
    name, _, params = spec.partition(":")
    name = name.strip().lower()
    params = params.strip()
    if name == "constant":
        return Constant(float(params or 1.0), n)
    if name in ("bubble", "fundamental"):
        c = np.zeros(n) if not params else np.array(_floats(params))
        if len(c) != n:
            raise ConfigError(f"{name} center needs {n} coordinates")
        return Bubble(c) if name == "bubble" else FundamentalSolution(c)
    if name == "harmonic":
        if not params:
            raise ConfigError("harmonic needs a polynomial, e.g. harmonic:10+y1*y2")
        return HarmonicPolynomial.parse(params, n)
    if name == "quadratic":
        vals = _floats(params) if params else [1.0, 1.0]
        if len(vals) != 2:
            raise ConfigError("quadratic takes c0,b for w = c0 + b|y|^2")
        return QuadraticField(vals[0], np.zeros(n), 2.0 * vals[1] * np.eye(n))
    raise ConfigError(f"unknown field {name!r}")


def resolve_config(args):
    cfg = RunConfig()
    lines = {}
    if args.config:
        data, lines = load_config_file(args.config)
        for key, value in data.items():
            setattr(cfg, key, value)
    for key in (
        "n", "field", "grid", "cone", "centers", "points", "delta", "lambda_max",
        "outer_radius", "tol", "format", "output", "trials", "word_length", "form",
        "corrupt_exponent",
    ):
        v = getattr(args, key, None)
        if v is not None:
            setattr(cfg, key, v)
    if getattr(args, "seedless", False):
        cfg.seedless = True
    try:
        cfg.n = int(cfg.n)
        for key in ("delta", "lambda_max", "outer_radius", "bisect_tol", "corrupt_exponent"):
            setattr(cfg, key, float(getattr(cfg, key)))
        if cfg.tol is not None:
            cfg.tol = float(cfg.tol)
        cfg.trials = int(cfg.trials)
        cfg.word_length = int(cfg.word_length)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"bad config value: {exc}") from None
    if cfg.format not in FORMATS:
        raise UsageError(f"--format must be one of {', '.join(FORMATS)}")
    if cfg.tol is not None and not cfg.tol > 0:
        raise UsageError(f"{_where(args, lines, 'tol')}tolerance must be positive")
    if cfg.grid and not Path(cfg.grid).is_file():
        raise UsageError(f"{_where(args, lines, 'grid')}grid file {cfg.grid} not found")
    if not 1 <= cfg.word_length <= 4:
        raise UsageError("word_length must be between 1 and 4")
    return cfg, lines


def _where(args, lines, key):
    if args.config and key in lines:
        return f"{args.config}:{lines[key]}: "
    return ""


def _field_from(cfg, args, lines, required=True):
    if cfg.grid:
        g = load_grid(cfg.grid)
        if g.dim != cfg.n:
            raise ConfigError(f"grid has dimension {g.dim}, config says n={cfg.n}")
        return g
    if not cfg.field:
        if required:
            raise UsageError("no field given (use --field or --grid)")
        return None
    try:
        return build_field(str(cfg.field), cfg.n)
    except (ConfSpheresError, ValueError) as exc:
        raise UsageError(f"{_where(args, lines, 'field')}{exc}") from None


# output -----------------------------------------------------------------------


def fmt(v):
    return f"{float(v):.17g}"


def _emit(text, cfg):
    if cfg.output:
        Path(cfg.output).write_text(text)
    else:
        sys.stdout.write(text)


def _csv_text(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _json_text(obj):
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


# commands ---------------------------------------------------------------------


def cmd_hessian(cfg, args, lines):
    u = _field_from(cfg, args, lines)
    n = cfg.n
    form = "w" if n == 2 else cfg.form
    if form not in ("u", "w"):
        raise UsageError("--form must be u or w")
    cone = parse_cone(cfg.cone, n)
    tol = cfg.tol or conformal.DEFAULT_TOL
    pts = parse_point_list(cfg.points, n) if cfg.points is not None else [np.zeros(n)]
    records = []
    for i, y in enumerate(pts):
        if form == "u":
            ev = conformal.conformal_hessian(u, y, cone, tol)
            tr = conformal.trace_identity_residual(u, y)
        else:
            ev = conformal.a_w(u, y, cone, tol)
            tr = float("nan")
        records.append((i, y, ev, tr))

    if cfg.format == "csv":
        header = (
            ["index"] + [f"x{k + 1}" for k in range(n)] + [f"eig{k + 1}" for k in range(n)]
            + [f"sigma{k + 1}" for k in range(n)] + ["verdict", "margin", "trace_residual"]
            + [f"a{r + 1}{c + 1}" for r in range(n) for c in range(n)]
        )
        rows = [
            [i] + [fmt(v) for v in y] + [fmt(v) for v in ev.eigenvalues] + [fmt(v) for v in ev.sigmas]
            + [str(ev.cone_class.verdict), fmt(ev.cone_class.margin), fmt(tr)]
            + [fmt(v) for v in ev.matrix.ravel()]
            for i, y, ev, tr in records
        ]
        _emit(_csv_text(header, rows), cfg)
    elif cfg.format == "structured":
        _emit(_json_text({
            "command": "hessian", "field": u.describe(), "form": form, "cone": str(cone), "tol": tol,
            "points": [{
                "point": y.tolist(), "matrix": ev.matrix.tolist(), "eigenvalues": ev.eigenvalues.tolist(),
                "sigmas": ev.sigmas.tolist(), "verdict": str(ev.cone_class.verdict),
                "margin": ev.cone_class.margin, "trace_residual": None if math.isnan(tr) else tr,
            } for i, y, ev, tr in records],
        }), cfg)
    else:
        out = [f"field {u.describe()}  form A^{form}  cone {cone}  tol {tol:g}"]
        for i, y, ev, tr in records:
            out.append(f"point {i}: " + " ".join(f"{v:g}" for v in y))
            for row in ev.matrix:
                out.append("  [" + " ".join(f"{v: .10g}" for v in row) + "]")
            out.append("  eigenvalues " + " ".join(f"{v:.10g}" for v in ev.eigenvalues))
            out.append("  sigmas      " + " ".join(f"{v:.10g}" for v in ev.sigmas))
            out.append(f"  cone        {ev.cone_class.verdict} (margin {ev.cone_class.margin:.3g})")
            if form == "u":
                out.append(f"  trace identity residual {tr:.3g}")
        _emit("\n".join(out) + "\n", cfg)
    return EXIT_OK


def _coeffs(cfg):
    if not cfg.corrupt_exponent:
        return None
    return conformal.Coefficients.standard(cfg.n).perturbed(hess_exp=cfg.corrupt_exponent)


def cmd_invariance(cfg, args, lines):
    u = _field_from(cfg, args, lines)
    if cfg.n < 3:
        raise UsageError("invariance needs n >= 3")
    tol = cfg.tol or 1e-6
    res = suite.invariance_trials([u], cfg.trials, cfg.word_length, cfg.n, coeffs=_coeffs(cfg))
    worst = max(res)
    ok = worst <= tol
    if cfg.format == "csv":
        _emit(_csv_text(["trial", "residual"], [[i, fmt(r)] for i, r in enumerate(res)]), cfg)
    elif cfg.format == "structured":
        _emit(_json_text({
            "command": "invariance", "field": u.describe(), "trials": len(res),
            "word_length": cfg.word_length, "max_residual": worst, "tol": tol, "passed": ok,
            "corrupt_exponent": cfg.corrupt_exponent,
        }), cfg)
    else:
        _emit(
            f"field {u.describe()}  trials {len(res)}  word length <= {cfg.word_length}\n"
            f"max residual {worst:.6g}  tol {tol:g}  {'PASS' if ok else 'FAIL'}\n",
            cfg,
        )
    return EXIT_OK if ok else EXIT_FAIL


def _sphere_row(u, cfg, x):
    scfg = spheres.SphereSweepConfig(
        x, cfg.delta, cfg.lambda_max, cfg.outer_radius, cfg.radial_samples,
        cfg.angular_samples, cfg.bisect_tol,
    )
    rep = spheres.critical_lambda(u, scfg)
    lam = rep.lambda_max if rep.censored else rep.lambda_bar
    c_hat, worst = spheres.lemma2_gap_check(u, x, cfg.delta, lam, scfg)
    return rep, c_hat, worst


def cmd_spheres(cfg, args, lines):
    u = _field_from(cfg, args, lines)
    n = cfg.n
    if n < 3:
        raise UsageError("spheres needs n >= 3")
    # validate once so that Λ >= R fails before any work
    try:
        spheres.SphereSweepConfig(
            np.zeros(n), cfg.delta, cfg.lambda_max, cfg.outer_radius, cfg.radial_samples,
            cfg.angular_samples, cfg.bisect_tol,
        )
    except ConfigError as exc:
        raise UsageError(f"{_where(args, lines, 'lambda_max')}{exc}") from None
    centers = parse_point_list(cfg.centers, n) if cfg.centers is not None else [np.zeros(n)]
    results = ordered_map(lambda x: _sphere_row(u, cfg, x), centers, workers=len(centers))
    violation = any(rep.contract_violation for rep, _, _ in results)
    all_censored = all(rep.censored for rep, _, _ in results)
    sample = box_points(n, cfg.constancy_samples, -cfg.lambda_max / 2, cfg.lambda_max / 2)
    cgap = spheres.constancy_gap(u, sample)

    if cfg.format == "csv":
        header = (
            ["center_index"] + [f"x{k + 1}" for k in range(n)]
            + ["lambda", "min_gap", "lambda_start", "lambda_bar", "c_hat", "worst_ratio", "outer_radius"]
        )
        rows = []
        for i, (rep, c_hat, worst) in enumerate(results):
            for lam, gap in rep.min_gap_profile:
                rows.append(
                    [i] + [fmt(v) for v in rep.center]
                    + [fmt(lam), fmt(gap), fmt(rep.lambda_start), rep.lambda_bar_text(),
                       fmt(c_hat), fmt(worst), fmt(rep.outer_radius)]
                )
        _emit(_csv_text(header, rows), cfg)
    elif cfg.format == "structured":
        _emit(_json_text({
            "command": "spheres", "field": u.describe(), "delta": cfg.delta,
            "lambda_max": cfg.lambda_max, "outer_radius": cfg.outer_radius,
            "constancy_gap": cgap, "all_censored": all_censored, "contract_violation": violation,
            "centers": [{
                "center": list(rep.center), "lambda_start": rep.lambda_start,
                "lambda_bar": rep.lambda_bar_text(), "censored": rep.censored,
                "witness": None if rep.witness is None else rep.witness.tolist(),
                "c_hat": c_hat, "worst_ratio": worst, "contract_violation": rep.contract_violation,
                "min_gap_profile": [list(p) for p in rep.min_gap_profile],
            } for rep, c_hat, worst in results],
        }), cfg)
    else:
        out = [
            f"field {u.describe()}  delta {cfg.delta:g}  lambda_max {cfg.lambda_max:g}  "
            f"outer_radius {cfg.outer_radius:g}"
        ]
        for rep, c_hat, worst in results:
            wit = "-" if rep.witness is None else ",".join(f"{v:.6g}" for v in rep.witness)
            lb = str(rep.lambda_bar) if rep.censored else f"{rep.lambda_bar:.6f}"
            out.append(
                f"x=({','.join(f'{v:g}' for v in rep.center)})  lambda0={rep.lambda_start:.6g}  "
                f"lambda_bar={lb}  witness={wit}  c_hat={c_hat:.6g}"
                + ("  CONTRACT VIOLATION" if rep.contract_violation else "")
            )
        out.append(f"constancy_gap {cgap:.6g} (all censored: {all_censored})")
        out.append("profile")
        out.append("center  lambda  min_gap")
        for i, (rep, _, _) in enumerate(results):
            for lam, gap in rep.min_gap_profile:
                out.append(f"{i}  {lam:.10g}  {gap:.10g}")
        _emit("\n".join(out) + "\n", cfg)
    return EXIT_FAIL if violation else EXIT_OK


def cmd_suite(cfg, args, lines):
    tols = cfg.tolerances or {}
    if not isinstance(tols, dict):
        raise UsageError(f"{_where(args, lines, 'tolerances')}tolerances must be a mapping")
    for key, value in tols.items():
        if key not in suite.DEFAULT_TOLERANCES:
            raise UsageError(f"{_where(args, lines, 'tolerances')}unknown check {key!r}")
        tols[key] = float(value)
        if not tols[key] > 0:
            raise UsageError(f"{_where(args, lines, 'tolerances')}tolerance for {key} must be positive")
    results = suite.run_suite(tols, coeffs=_coeffs(cfg) if cfg.corrupt_exponent else None)
    ok = all(r.passed for r in results)
    if cfg.format == "csv":
        _emit(_csv_text(
            ["check", "passed", "measured", "tol", "detail"],
            [[r.name, r.passed, fmt(r.measured), fmt(r.tol), r.detail] for r in results],
        ), cfg)
    elif cfg.format == "structured":
        _emit(_json_text({
            "command": "suite", "passed": ok,
            "checks": [{"name": r.name, "passed": r.passed, "measured": r.measured,
                        "tol": r.tol, "detail": r.detail} for r in results],
        }), cfg)
    else:
        text = "\n".join(r.line() for r in results)
        text += f"\n{sum(r.passed for r in results)}/{len(results)} checks passed\n"
        _emit(text, cfg)
    return EXIT_OK if ok else EXIT_FAIL


COMMANDS = {
    "hessian": cmd_hessian,
    "invariance": cmd_invariance,
    "spheres": cmd_spheres,
    "suite": cmd_suite,
}


# --seedless -------------------------------------------------------------------


class _NoRNG:
    def __init__(self, name):
        self.name = name

    def __call__(self, *a, **k):
        raise RuntimeError(f"random generator {self.name} used under --seedless")


@contextlib.contextmanager
def forbid_rng():
    """Make every numpy/stdlib random entry point raise while active."""
    targets = [(np.random, name) for name in (
        "default_rng", "RandomState", "seed", "rand", "randn", "random", "uniform", "normal",
        "randint", "choice", "shuffle", "permutation",
    )] + [(random, name) for name in ("random", "uniform", "randint", "choice", "shuffle", "seed", "gauss")]
    saved = [(mod, name, getattr(mod, name)) for mod, name in targets]
    try:
        for mod, name, _ in saved:
            setattr(mod, name, _NoRNG(f"{mod.__name__}.{name}"))
        yield
    finally:
        for mod, name, orig in saved:
            setattr(mod, name, orig)


# entry point ------------------------------------------------------------------


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="YAML run configuration")
    common.add_argument("--field", metavar="NAME[:params]", help="builtin field")
    common.add_argument("--grid", metavar="PATH", help="grid field file")
    common.add_argument("--n", type=int, help="dimension")
    common.add_argument("--cone", metavar="gammaK:INT", help="cone, e.g. gammaK:2 or sigma:1,3")
    common.add_argument("--delta", type=float)
    common.add_argument("--lambda-max", dest="lambda_max", type=float)
    common.add_argument("--outer-radius", dest="outer_radius", type=float)
    common.add_argument("--centers", metavar="LIST", help='e.g. "0,0,0;1,0,0"')
    common.add_argument("--points", metavar="LIST", help='e.g. "0,0,0;2,0,0"')
    common.add_argument("--tol", type=float)
    common.add_argument("--format", choices=FORMATS)
    common.add_argument("--output", metavar="PATH")
    common.add_argument("--seedless", action="store_true", help="fail if any RNG is touched")
    common.add_argument("--trials", type=int)
    common.add_argument("--word-length", dest="word_length", type=int)
    common.add_argument("--form", choices=("u", "w"), help="treat the field as u (A^u) or w (A_w)")
    common.add_argument(
        "--debug-corrupt-exponent", dest="corrupt_exponent", type=float, metavar="REL",
        help="negative control: scale the Hessian exponent by 1+REL",
    )

    parser = argparse.ArgumentParser(prog="confspheres", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"confspheres {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("hessian", parents=[common], help="conformal Hessian at points")
    sub.add_parser("invariance", parents=[common], help="Möbius invariance residuals")
    sub.add_parser("spheres", parents=[common], help="moving spheres sweep over centers")
    sub.add_parser("suite", parents=[common], help="run the verification battery")
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg, lines = resolve_config(args)
        guard = forbid_rng() if cfg.seedless else contextlib.nullcontext()
        with guard:
            return COMMANDS[args.command](cfg, args, lines)
    except UsageError as exc:
        print(f"confspheres: error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except (ConfSpheresError, ValueError, RuntimeError, OSError) as exc:
        print(f"confspheres: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
