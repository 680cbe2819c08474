"""Command-line front end.

Every subcommand builds one or more tables and writes them as CSV (with a
``# key: value`` config header) or as JSON. Numbers are printed with twelve
significant digits so reruns with the same configuration are byte-identical.

Exit status: 0 ok, 2 configuration or domain error, 3 verification failed,
4 numerical non-convergence.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from . import asymptotics, exact, minimax
from .errors import (
    ConfigurationError,
    DomainError,
    InvalidHClassError,
    NonConvergenceError,
    NumericalDegeneracyError,
    NumericalFailureError,
    UnsupportedDimensionError,
    UnsupportedPairError,
)
from .models import MODEL_NAMES, get_model, read_design_csv
from .priors import beta_prior, exp_tilt, normal_prior, parse_prior

EXIT_OK, EXIT_CONFIG, EXIT_VERIFY, EXIT_NONCONV = 0, 2, 3, 4
COMMANDS = ("loss", "converge", "minimax", "equalizer", "uclass", "reproduce", "identity-checks")
CONFIG_FIELDS = (
    "command", "model", "prior", "theta", "grid", "n", "mrule", "k", "a", "family", "construction",
    "example", "seed", "output", "format", "design", "replicates",
)
EXAMPLES = ("5.1", "6.1", "6.2", "6.3", "6.4")
DEFAULTS = {
    "model": None, "prior": None, "theta": None, "grid": None, "n": None, "mrule": None,
    "k": "2,4,8,16,32", "a": None, "family": None, "construction": None, "example": None,
    "seed": None, "output": "-", "format": "csv", "design": None, "replicates": 2000,
}


@dataclass
class Table:
    name: str
    columns: list
    rows: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)  # JSON only


# ---------------------------------------------------------------------------
# parsing helpers
# ---------------------------------------------------------------------------

def _floats(text, what):
    try:
        return [float(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise ConfigurationError(f"{what}: cannot parse {text!r} as numbers") from None


def parse_n(text) -> list:
    """``lo:hi`` doubles from ``lo`` up to ``hi``; otherwise a comma list."""
    text = str(text)
    if ":" in text:
        lo, hi = (int(v) for v in text.split(":"))
        if lo <= 0 or hi < lo:
            raise ConfigurationError(f"n: bad range {text!r}")
        out = [lo]
        while out[-1] * 2 <= hi:
            out.append(out[-1] * 2)
        return out
    vals = _floats(text, "n")
    if any(v != int(v) or v < 1 for v in vals):
        raise ConfigurationError(f"n: expected positive integers, got {text!r}")
    return [int(v) for v in vals]


def parse_grid(text, p):
    """``lo:hi:count`` (one parameter) or ``;``-separated comma points."""
    text = str(text)
    if p == 1 and text.count(":") == 2:
        lo, hi, cnt = text.split(":")
        return np.linspace(float(lo), float(hi), int(cnt))[:, None]
    pts = [_floats(chunk, "grid") for chunk in text.split(";") if chunk.strip()]
    if not pts or any(len(pt) != p for pt in pts):
        raise ConfigurationError(f"grid: every point needs {p} coordinates")
    return np.array(pts, dtype=float)


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v) + 0.0  # folds -0.0 into 0.0
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return f"{v:.12g}"
    if v is None:
        return ""
    if isinstance(v, (list, tuple, np.ndarray)):
        return " ".join(_fmt(x) for x in v)
    return str(v)


def _jsonable(v):
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return float(f"{v:.12g}") if math.isfinite(v) else str(v)
    if isinstance(v, (list, tuple, np.ndarray)):
        return [_jsonable(x) for x in v]
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    return v


def emit_report(tables, config: dict, fmt: str, out) -> None:
    """Write ``tables`` to the stream ``out`` as ``csv`` or ``json``."""
    if fmt == "json":
        doc = {
            "config": _jsonable(config),
            "tables": [
                {"name": t.name, "columns": t.columns, "rows": _jsonable(t.rows), "meta": _jsonable(t.meta),
                 **_jsonable(t.extra)}
                for t in tables
            ],
        }
        out.write(json.dumps(doc, indent=2, sort_keys=False) + "\n")
        return
    if fmt != "csv":
        raise ConfigurationError(f"format: expected csv or json, got {fmt!r}")
    for key in sorted(config):
        out.write(f"# {key}: {_fmt(config[key])}\n")
    for i, t in enumerate(tables):
        if i:
            out.write("\n")
        out.write(f"# table: {t.name}\n")
        for key in t.meta:
            out.write(f"# {t.name}.{key}: {_fmt(t.meta[key])}\n")
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(t.columns)
        for row in t.rows:
            writer.writerow([_fmt(v) for v in row])


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def _model(cfg):
    if not cfg.get("model"):
        raise ConfigurationError("model: required for this command")
    design = read_design_csv(cfg["design"]) if cfg.get("design") else None
    return get_model(cfg["model"], design=design)


def _prior(cfg, model, default="jeffreys"):
    return parse_prior(cfg.get("prior") or default, model)


def cmd_loss(cfg):
    model = _model(cfg)
    prior = _prior(cfg, model)
    grid = None if cfg.get("grid") is None else parse_grid(cfg["grid"], model.p)
    surf = asymptotics.loss_surface(model, prior, grid)
    t = Table("loss", list(model.param_names) + ["L"], meta={"mean": surf.mean, "maxdev": surf.maxdev})
    for pt, val in zip(surf.grid, surf.values):
        t.rows.append(list(pt) + [val])
    return [t], False


def cmd_converge(cfg):
    model = _model(cfg)
    prior = _prior(cfg, model)
    if cfg.get("theta") is None:
        raise ConfigurationError("theta: required for converge")
    theta = _floats(cfg["theta"], "theta")
    sched = exact.m_schedule(parse_n(cfg.get("n") or "32:512"), str(cfg.get("mrule") or "n"))
    return [convergence_table(model, prior, theta, sched)], False


def convergence_table(model, prior, theta, sched, name="convergence"):
    tab = exact.convergence_table(model, prior, theta, sched)
    t = Table(name, ["n", "m", "c_n", "cnL", "L_limit", "abs_err"], meta={"theta": list(theta)})
    t.rows.extend(list(r) for r in tab.rows())
    return t


def certificate_table(cert, name="certificate"):
    t = Table(name, ["k", "d", "zeta", "bound", "k2d"],
              meta={"prior": cert.prior, "construction": cert.construction, "c": cert.c,
                    "alpha": cert.alpha, "status": cert.status, "message": cert.message})
    for k, d, z, b in zip(cert.k_values, cert.d_values, cert.zeta_values, cert.bound_values):
        t.rows.append([k, d, z, b, d * k * k])
    t.extra = {key: getattr(cert, key) for key in ("k_values", "d_values", "zeta_values", "bound_values")}
    return t


def cmd_minimax(cfg):
    model = _model(cfg)
    prior = None if not cfg.get("prior") else parse_prior(cfg["prior"], model)
    cert = minimax.minimax_verify(model, prior, cfg.get("construction"), _floats(cfg["k"], "k"))
    return [certificate_table(cert)], cert.status != "verified"


def equalizer_table(report, name="equalizer"):
    t = Table(name, ["a", "c", "maxdev", "equalizer"],
              meta={"family": report.family, "argmin_a": report.argmin_a, "min_constant": report.min_constant})
    t.rows.extend(list(r) for r in report.rows())
    return t


def _default_family(model):
    return {"bernoulli": "beta-sym", "mvn2": "mvn-power"}.get(model.name, "power-sigma")


def cmd_equalizer(cfg):
    model = _model(cfg)
    family = cfg.get("family") or _default_family(model)
    a_grid = _floats(cfg.get("a") or "0,0.5,1,1.5,2,3", "a")
    grid = None if cfg.get("grid") is None else parse_grid(cfg["grid"], model.p)
    return [equalizer_table(minimax.equalizer_scan(model, family, a_grid, grid))], False


def uclass_table(rep, name="uclass"):
    t = Table(name, ["n", "m", "sup_cnL", "argsup"],
              meta={"slope": rep.slope, "slope_se": rep.slope_se, "classification": rep.classification})
    for row in zip(rep.n_values, rep.m_values, rep.sup_values, rep.argsup):
        t.rows.append(list(row))
    return t


def cmd_uclass(cfg):
    model = _model(cfg)
    prior = _prior(cfg, model)
    grid = None if cfg.get("grid") is None else parse_grid(cfg["grid"], model.p)
    n_values = parse_n(cfg.get("n") or "50,100,200,400,800")
    rep = minimax.u_class_diagnostic(model, prior, grid, n_values, str(cfg.get("mrule") or "1"))
    return [uclass_table(rep)], False


def _reproduce_51(cfg):
    model = get_model("normal-mean")
    c, mu, var = 0.7, 0.0, 2.0
    tilt, norm = exp_tilt(c), normal_prior(mu, var)
    grid = model.default_grid
    t = Table("loss", ["theta", "L_tilt", "L_tilt_closed", "L_normal", "L_normal_closed", "mbar"],
              meta={"c": c, "normal_prior": f"N({mu}, {var})"})
    lt = asymptotics.predictive_loss(model, tilt, grid)
    ln = asymptotics.predictive_loss(model, norm, grid)
    for th, a, b in zip(grid[:, 0], lt, ln):
        t.rows.append([th, a, c * c, b, (th - mu) ** 2 / var**2 - 2.0 / var, asymptotics.mbar_scalar(model, [th])])
    conv = convergence_table(model, tilt, [0.3], exact.m_schedule(parse_n("32:512"), "n"))
    cert = minimax.minimax_verify(model, k_values=_floats(cfg["k"], "k"))
    return [t, conv, certificate_table(cert)], cert.status != "verified"


def _reproduce_61(cfg):
    model = get_model("bernoulli")
    t = Table("loss", ["a", "theta", "L_numeric", "L_closed", "abs_err"])
    for a in (0.5, 1.5):
        vals = asymptotics.predictive_loss(model, beta_prior(a, a), model.default_grid)
        for th, v in zip(model.default_grid[:, 0], vals):
            closed = (a - 0.5) * (-4.0 * (a - 0.5) + (a - 1.5) / (th * (1.0 - th)))
            t.rows.append([a, th, v, closed, abs(v - closed)])
    conv = convergence_table(model, beta_prior(1.5, 1.5), [0.3], exact.m_schedule(parse_n("32:512"), "n"))
    rep = minimax.u_class_diagnostic(model, beta_prior(1.5, 1.5))
    ref = minimax.u_class_diagnostic(model, beta_prior(0.5, 0.5))
    bad = rep.classification != "diverging" or ref.classification != "bounded"
    return [t, conv, uclass_table(rep, "uclass_beta_1.5"), uclass_table(ref, "uclass_jeffreys")], bad


def _reproduce_location_scale(cfg, name):
    model = get_model(name, design=read_design_csv(cfg["design"]) if cfg.get("design") else None)
    scan = minimax.equalizer_scan(model, "power-sigma", [0, 0.5, 1, 1.5, 2, 3])
    k = _floats(cfg["k"], "k")
    cert = minimax.minimax_verify(model, k_values=k)
    lim = Table("information_limit", ["k", "zeta", "abs_zeta_plus_c"], meta={"c": cert.c})
    lim.rows.extend(list(r) for r in minimax.information_limit_check(model, k_values=k))
    bad = cert.status != "verified" or scan.argmin_a != 1.0
    return [equalizer_table(scan), certificate_table(cert), lim], bad


def _reproduce_64(cfg):
    model = get_model("mvn2")
    scan = minimax.equalizer_scan(model, "mvn-power", [0, 0.5, 1, 1.5, 2, 3])
    cert = minimax.minimax_verify(model, k_values=_floats(cfg["k"], "k"))
    t = equalizer_table(scan)
    t.meta["certificate_status"] = cert.status
    t.meta["certificate_message"] = cert.message
    return [t], not all(scan.equalizer)


def cmd_reproduce(cfg):
    ex = cfg.get("example")
    if ex not in EXAMPLES:
        raise ConfigurationError(f"example: expected one of {', '.join(EXAMPLES)}, got {ex!r}")
    if ex == "5.1":
        return _reproduce_51(cfg)
    if ex == "6.1":
        return _reproduce_61(cfg)
    if ex == "6.2":
        return _reproduce_location_scale(cfg, "normal-ls")
    if ex == "6.3":
        return _reproduce_location_scale(cfg, "linreg")
    return _reproduce_64(cfg)


def cmd_identity_checks(cfg):
    tol = 1e-10
    t = Table("identities", ["check", "case", "residual", "tolerance", "pass"])
    bern = get_model("bernoulli")
    tau = exact.DiscretePrior((0.3, 0.7), (0.5, 0.5), name="two-point")
    for spec in ("beta:0.5,0.5", "beta:2,3"):
        res = exact.identity_residuals(bern, parse_prior(spec, bern), tau, 0.3, 5, 3)
        for key, val in res.items():
            t.rows.append([key, f"bernoulli {spec} n=5 m=3", val, tol, abs(val) < tol])
    for name, spec, th in (("normal-mean", "normal:0.5,2", [0.3]), ("normal-ms", "power-sigma:1", [0.0, 1.5])):
        model = get_model(name)
        prior = parse_prior(spec, model)
        val = (exact.joint_regret(model, prior, th, 6, 3) - exact.prior_predictive_regret(model, prior, th, 6)
               - exact.posterior_predictive_regret(model, prior, th, 6, 3))
        t.rows.append(["chain_rule", f"{name} {spec} n=6 m=3", val, tol, abs(val) < tol])
    for name, spec in (("bernoulli", "beta:1.5,1.5"), ("normal-mean", "exp-tilt:0.7"),
                       ("normal-ls", "power-sigma:3"), ("linreg", "power-sigma:0"), ("mvn2", "mvn-power:2")):
        model = get_model(name)
        prior = parse_prior(spec, model)
        grid = model.default_grid
        base = asymptotics.predictive_loss(model, prior, grid)
        moved = asymptotics.predictive_loss(model, prior.shifted(123.456), grid)
        val = float(np.max(np.abs(base - moved)))
        t.rows.append(["constant_shift", f"{name} {spec}", val, 1e-12, val < 1e-12])
    seed = int(cfg["seed"])
    d = exact.posterior_predictive_regret(bern, beta_prior(0.5, 0.5), 0.3, 6, 2)
    for sid in range(3):
        mean, se = exact.mc_regret(bern, beta_prior(0.5, 0.5), 0.3, 6, 2, seed, int(cfg["replicates"]), sid)
        z = abs(mean - d) / se if se > 0 else 0.0
        t.rows.append(["mc_within_3se", f"bernoulli beta:0.5,0.5 stream={sid}", z, 3.0, z < 3.0])
    failed = not all(r[-1] for r in t.rows)
    return [t], failed


HANDLERS = {
    "loss": cmd_loss, "converge": cmd_converge, "minimax": cmd_minimax, "equalizer": cmd_equalizer,
    "uclass": cmd_uclass, "reproduce": cmd_reproduce, "identity-checks": cmd_identity_checks,
}


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="predregret", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON config file; flags override its fields")
        p.add_argument("--model", choices=MODEL_NAMES)
        p.add_argument("--prior", help="prior mini-language, e.g. beta:1.5,1.5 or power-sigma:1")
        p.add_argument("--theta", help="parameter point, comma separated")
        p.add_argument("--grid", help="lo:hi:count or ';'-separated points")
        p.add_argument("--n", help="sample sizes: lo:hi (doubling) or a comma list")
        p.add_argument("--mrule", choices=("n", "sqrt", "1"))
        p.add_argument("--k", help="sequence indices, comma separated")
        p.add_argument("--a", help="prior family indices, comma separated")
        p.add_argument("--family", choices=("power-sigma", "mvn-power", "beta-sym"))
        p.add_argument("--construction",
                       choices=("line-scale", "halfline-shift", "location-logscale", "regression-logscale"))
        p.add_argument("--example", choices=EXAMPLES)
        p.add_argument("--seed", type=int)
        p.add_argument("--replicates", type=int)
        p.add_argument("--design", help="regression design matrix CSV")
        p.add_argument("--output", "-o", help="output path, '-' for stdout")
        p.add_argument("--format", choices=("csv", "json"))
    return parser


def resolve_config(args) -> dict:
    cfg = dict(DEFAULTS)
    if args.config:
        try:
            with open(args.config) as fh:
                loaded = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigurationError(f"config: cannot read {args.config}: {exc}") from None
        if not isinstance(loaded, dict):
            raise ConfigurationError("config: top level must be an object")
        unknown = sorted(set(loaded) - set(CONFIG_FIELDS))
        if unknown:
            raise ConfigurationError(f"config: unknown field {unknown[0]!r}")
        cfg.update(loaded)
    for key in CONFIG_FIELDS:
        val = getattr(args, key, None)
        if val is not None and key != "command":
            cfg[key] = val
    cfg["command"] = args.command
    if cfg["seed"] is None:
        env = os.environ.get("PREDREGRET_SEED")
        try:
            cfg["seed"] = int(env) if env else 20240101
        except ValueError:
            raise ConfigurationError(f"seed: PREDREGRET_SEED={env!r} is not an integer") from None
    for key in ("n", "k", "a", "theta"):
        if isinstance(cfg.get(key), list):
            cfg[key] = ",".join(str(v) for v in cfg[key])
    return cfg


def run(cfg: dict, out=None) -> int:
    """Execute a resolved config; returns the exit status."""
    tables, failed = HANDLERS[cfg["command"]](cfg)
    buf = io.StringIO()
    emit_report(tables, cfg, cfg.get("format", "csv"), buf)
    if out is not None:
        out.write(buf.getvalue())
    elif cfg.get("output", "-") == "-":
        sys.stdout.write(buf.getvalue())
    else:
        with open(cfg["output"], "w", newline="") as fh:
            fh.write(buf.getvalue())
    return EXIT_VERIFY if failed else EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
        return run(cfg)
    except (ConfigurationError, DomainError, UnsupportedPairError, UnsupportedDimensionError,
            InvalidHClassError) as exc:
        print(f"predregret: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NonConvergenceError, NumericalDegeneracyError) as exc:
        print(f"predregret: non-convergence: {exc}", file=sys.stderr)
        return EXIT_NONCONV
    except NumericalFailureError as exc:
        print(f"predregret: verification failed: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    except OSError as exc:
        print(f"predregret: error: output: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
