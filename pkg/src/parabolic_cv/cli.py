"""Command line front end.

    parabolic-cv COMMAND [flags]

Commands: ``estimate``, ``curve``, ``sweep``, ``strong``, ``igbm-regime`` and
``optimize``.  ``--config FILE`` reads a JSON object whose keys are the long
flag names (dashes or underscores); flags given on the command line win.
Exit status is 0 on success, 2 for invalid input and 3 for numerical
failures.
"""

import argparse
import json
import math
import sys
from dataclasses import asdict
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .budget import RatePair, eps_exponents, optimize_cv, optimize_standard, plan_from_exponents
from .errors import ConfigError, NonFiniteStateError, NumericalError
from .harness import (
    FORMATS,
    SUFFIX,
    EstimatorKind,
    ExperimentSpec,
    build_plan,
    short_name,
    run_error_curve,
    run_estimator,
    run_exponent_sweep,
    run_igbm_regime_study,
    run_strong_error,
    steepest,
    write_curve,
    write_metadata,
    write_table,
)
from .models import MODELS, get_model
from .schemes import Primary, Secondary

COMMANDS = ("estimate", "curve", "sweep", "strong", "igbm-regime", "optimize")

DEFAULTS = {
    "model": "sinh",
    "estimator": "cv",
    "alpha": 1.0,
    "beta": 0.5,
    "gamma": 1.0,
    "eps": "1",
    "log_cost_min": 6.5,
    "log_cost_max": 14.0,
    "log_cost_points": 12,
    "outer_reps": 1000,
    "seed": 0,
    "out": "parabolic_cv_out",
    "format": "txt2col",
    "charge_diffusion_calls": False,
    "short_names": False,
    "primary": "euler",
    "secondary": None,
    "step_prefactor": 1.0,
    "n_jobs": 1,
    "reps": 1000,
    "h_log2_min": 3,
    "h_log2_max": 8,
    "fine_log2": 14,
    "model_param": [],
    "scheme": None,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(f"{self.prog}: {message}")


def build_parser():
    p = _Parser(prog="parabolic-cv", description="Parabolic control-variate Monte Carlo for SDEs.")
    p.add_argument("command", nargs="?", choices=COMMANDS)
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("--config", help="JSON file with default flag values")
    p.add_argument("--model", help=f"one of {', '.join(MODELS)}")
    p.add_argument("--model-param", action="append", metavar="KEY=VALUE", help="model parameter, repeatable")
    p.add_argument("--estimator", choices=[k.value for k in EstimatorKind])
    p.add_argument("--primary", choices=[k.value for k in Primary])
    p.add_argument("--secondary", choices=[k.value for k in Secondary])
    p.add_argument("--alpha", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--gamma", type=float)
    p.add_argument("--eps", help="strong-error constant; a trailing 'log' gives its log, e.g. -4log")
    p.add_argument("--log-cost", type=float)
    p.add_argument("--log-cost-min", type=float)
    p.add_argument("--log-cost-max", type=float)
    p.add_argument("--log-cost-points", type=int)
    p.add_argument("--x", type=float, help="coarse step exponent override")
    p.add_argument("--y", type=float, help="fine step exponent override")
    p.add_argument("--outer-reps", type=int)
    p.add_argument("--scheme", choices=[k.value for k in Primary] + [k.value for k in Secondary],
                   help="scheme of the strong-error study")
    p.add_argument("--reps", type=int, help="replications of the strong-error study")
    p.add_argument("--h-log2-min", type=int)
    p.add_argument("--h-log2-max", type=int)
    p.add_argument("--fine-log2", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.add_argument("--format", choices=FORMATS)
    p.add_argument("--charge-diffusion-calls", action="store_true", default=None)
    p.add_argument("--short-names", action="store_true", default=None)
    p.add_argument("--step-prefactor", type=float)
    p.add_argument("--n-jobs", type=int)
    return p


def parse_eps(text):
    s = str(text).strip()
    try:
        eps = math.exp(float(s[:-3])) if s.endswith("log") else float(Fraction(s))
    except (ValueError, ZeroDivisionError):
        raise ConfigError(f"cannot parse --eps {text!r}") from None
    if not 0 < eps <= 1:
        raise ConfigError(f"--eps must lie in (0, 1], got {eps}")
    return eps


def _model_params(items):
    params = {}
    for item in items or []:
        key, sep, value = str(item).partition("=")
        if not sep:
            raise ConfigError(f"model parameter {item!r} is not KEY=VALUE")
        try:
            params[key.strip()] = float(value)
        except ValueError:
            raise ConfigError(f"model parameter {key} needs a number, got {value!r}") from None
    return params


def _join_negative(argv):
    # let values such as "--eps -4log" through argparse
    out, it = [], iter(argv)
    for a in it:
        if a == "--eps":
            v = next(it, None)
            out.append(a if v is None else f"--eps={v}")
        else:
            out.append(a)
    return out


def resolve(argv):
    """Merge defaults, config file and flags into a plain dict."""
    ns = vars(build_parser().parse_args(_join_negative(list(argv))))
    cfg = {}
    if ns.get("config"):
        try:
            cfg = json.loads(Path(ns["config"]).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {ns['config']}: {exc}") from None
        if not isinstance(cfg, dict):
            raise ConfigError("config file must hold a JSON object")
        cfg = {k.replace("-", "_"): v for k, v in cfg.items()}
        unknown = set(cfg) - set(ns)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    out = dict(DEFAULTS)
    out.update(cfg)
    out.update({k: v for k, v in ns.items() if v is not None})
    if out.get("command") not in COMMANDS:
        raise ConfigError(f"a command is required: {', '.join(COMMANDS)}")
    return out


def _rates(o):
    return RatePair(float(o["alpha"]), float(o["beta"]), float(o["gamma"]), parse_eps(o["eps"]))


def _secondary(o):
    if o["secondary"]:
        return Secondary(o["secondary"])
    return Secondary.PARABOLA_EXACT_IGBM if o["model"] == "igbm" else Secondary.PARABOLA_RK


def _grid(o):
    n = int(o["log_cost_points"])
    lo, hi = float(o["log_cost_min"]), float(o["log_cost_max"])
    if n < 2 or not lo < hi:
        raise ConfigError("need --log-cost-points >= 2 and --log-cost-min < --log-cost-max")
    return tuple(np.linspace(lo, hi, n))


def _override(o):
    x, y = o.get("x"), o.get("y")
    if (x is None) != (y is None):
        raise ConfigError("--x and --y must be given together")
    return None if x is None else (float(x), float(y))


def _spec(o, grid=None):
    if o["model"] not in MODELS:
        raise ConfigError(f"unknown model {o['model']!r}; choose from {', '.join(MODELS)}")
    return ExperimentSpec(
        model=o["model"],
        estimator=o["estimator"],
        rates=_rates(o),
        exponent_override=_override(o),
        budget_grid=grid if grid is not None else _grid(o),
        outer_reps=int(o["outer_reps"]),
        seed=int(o["seed"]),
        model_params=_model_params(o["model_param"]),
        primary=Primary(o["primary"]),
        secondary=_secondary(o),
        step_prefactor=float(o["step_prefactor"]),
        charge_diffusion_calls=bool(o["charge_diffusion_calls"]),
        n_jobs=int(o["n_jobs"]),
    )


def _out_dir(o):
    d = Path(o["out"])
    d.mkdir(parents=True, exist_ok=True)
    return d


def _fresh(path):
    if Path(path).exists():
        raise ConfigError(f"refusing to overwrite existing output {path}")
    return path


def _need_log_cost(o):
    if o.get("log_cost") is None:
        raise ConfigError("--log-cost is required")
    return float(o["log_cost"])


def cmd_estimate(o):
    lc = _need_log_cost(o)
    spec = _spec(o, grid=(lc, lc + 1.0))
    model = get_model(spec.model, **spec.model_params)
    plan = build_plan(spec, lc)
    est = run_estimator(spec, model, plan, spec.seed)
    cost = est.cost(spec.charge_diffusion_calls)
    print(f"value {est.value:.10g}")
    print(f"stderr {est.stderr:.6g}")
    print(f"measured_cost {cost}")
    if spec.estimator is not EstimatorKind.STANDARD:
        print(f"lambda {est.lam:.6g}")
    meta = {"command": "estimate", "spec": spec.to_dict(), "plan": plan.as_dict(), "value": est.value,
            "stderr": est.stderr, "measured_cost": cost, "lambda": est.lam,
            "total_drift_calls": est.total_drift_calls, "total_diffusion_calls": est.total_diffusion_calls}
    write_metadata(_fresh(_out_dir(o) / f"estimate_{spec.model}_{spec.estimator.value}_seed{spec.seed}.meta.json"), meta)
    return 0


def _emit_curve(curve, o):
    out = _out_dir(o)
    stem = short_name(curve) if o["short_names"] else "curve_" + curve.label
    _fresh(out / (stem + SUFFIX[o["format"]]))
    data, _ = write_curve(curve, out, o["format"], o["short_names"])
    print(f"{curve.label} slope {curve.slope:.4f} +- {curve.slope_stderr:.4f} -> {data}")


def cmd_curve(o):
    spec = _spec(o)
    curve = run_error_curve(spec)
    _emit_curve(curve, o)
    return 0


def default_sweep(rates):
    d = rates.denominator
    return [(i / d, j / d) for i, j in ((1, 2), (1, 3), (1, 4), (2, 3), (2, 4), (3, 4))]


def cmd_sweep(o):
    spec = _spec(o)
    if spec.estimator is EstimatorKind.STANDARD:
        raise ConfigError("sweep needs a control-variate estimator")
    curves = run_exponent_sweep(spec, default_sweep(spec.rates))
    for c in curves:
        _emit_curve(c, o)
    print(f"steepest {curves[steepest(curves)].label}")
    return 0


def cmd_strong(o):
    model = get_model(o["model"], **_model_params(o["model_param"]))
    scheme = o["scheme"] or ("parabola-igbm" if model.name == "igbm" else "parabola-rk")
    lo, hi = int(o["h_log2_min"]), int(o["h_log2_max"])
    if not 0 <= lo < hi <= int(o["fine_log2"]):
        raise ConfigError("need 0 <= --h-log2-min < --h-log2-max <= --fine-log2")
    hs = [2.0**-k for k in range(lo, hi + 1)]
    curve = run_strong_error(model, scheme, hs, int(o["reps"]), int(o["seed"]), int(o["fine_log2"]))
    print(f"gamma {curve.slope:.4f} log_eps {curve.intercept:.4f}")
    out = _out_dir(o)
    stem = curve.label
    write_table(_fresh(out / (stem + SUFFIX[o["format"]])), ("h", "error"), curve.points, o["format"])
    write_metadata(out / (stem + ".meta.json"), dict(curve.metadata, command="strong"))
    return 0


def cmd_igbm_regime(o):
    eps = parse_eps(o["eps"])
    rates = RatePair(float(o["alpha"]), float(o["beta"]), float(o["gamma"]), eps)
    rows = run_igbm_regime_study(eps, _grid(o), rates, model_params=_model_params(o["model_param"]))
    cols = ("log_cost", "x", "y", "theoretical_rate")
    for r in rows:
        print(" ".join(f"{r[c]:.6g}" for c in cols))
    out = _out_dir(o)
    stem = f"igbm_regime_eps{eps:.3g}"
    write_table(_fresh(out / (stem + SUFFIX[o["format"]])), cols, [[r[c] for c in cols] for r in rows], o["format"])
    write_metadata(out / (stem + ".meta.json"), {"command": "igbm-regime", "eps": eps, "rows": rows})
    return 0


def _frac(v):
    f = Fraction(v).limit_denominator(1000)
    return f"{f.numerator}/{f.denominator}" if abs(float(f) - v) < 1e-12 else f"{v:.6f}"


def cmd_optimize(o):
    lc = _need_log_cost(o)
    rates = _rates(o)
    C = math.exp(lc)
    if o["estimator"] == "standard":
        plan = optimize_standard(C, rates.alpha)
        print(f"y {_frac(1 / (2 * rates.alpha + 1))}")
        print(f"error_exponent {_frac(rates.standard_error_exponent)}")
    elif rates.epsilon == 1.0:
        plan = optimize_cv(C, rates)
        x, y = rates.cv_exponents
        print(f"x {_frac(x)}")
        print(f"y {_frac(y)}")
        print(f"error_exponent {_frac(rates.cv_error_exponent)}")
    else:
        rates.check_admissible()
        x, y, small = eps_exponents(lc, rates)
        plan = plan_from_exponents(C, x, min(max(y, x), 1.0))
        print(f"x_star {x:.6f}")
        print(f"y_star {y:.6f}")
        if small:
            print("small-budget branch")
    d = plan.as_dict()
    keys = [k for k in ("N", "q", "N_fine", "M", "M_fine") if k in d]
    print("plan " + " ".join(f"{k}={d[k]}" for k in keys))
    print(f"realized_cost {d['realized_cost']}")
    write_metadata(_fresh(_out_dir(o) / f"optimize_logC{lc:g}_{o['estimator']}.meta.json"),
                   {"command": "optimize", "rates": asdict(rates), "log_cost": lc, "plan": d})
    return 0


HANDLERS = {
    "estimate": cmd_estimate,
    "curve": cmd_curve,
    "sweep": cmd_sweep,
    "strong": cmd_strong,
    "igbm-regime": cmd_igbm_regime,
    "optimize": cmd_optimize,
}


def main(argv=None):
    try:
        opts = resolve(sys.argv[1:] if argv is None else argv)
        return HANDLERS[opts["command"]](opts)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        print("usage: parabolic-cv {" + ",".join(COMMANDS) + "} [flags]; see --help", file=sys.stderr)
        return 2
    except NonFiniteStateError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        if exc.key is not None:
            print(f"failing stream key: {exc.key}", file=sys.stderr)
        return 3
    except (NumericalError, FloatingPointError, OverflowError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 3
    except SystemExit as exc:
        return int(exc.code or 0)


if __name__ == "__main__":
    sys.exit(main())
